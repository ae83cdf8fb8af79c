//! C ABI over the rolechain ledger and simulator.
//!
//! Every function returns an [`RcStatus`]. Handles are opaque and owned by
//! the caller once returned; release them with the matching `_free`. On
//! failure the message for the calling thread is kept until the next call
//! and can be read with [`rc_last_error`].
//!
//! Variable-length results use the two-call convention: pass a buffer and
//! its capacity; the needed length is always written to `needed`, and
//! `RC_STATUS_BUFFER_TOO_SMALL` is returned if it does not fit.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use rolechain::consensus::{ChainConfig, ChainState, ConsensusError};
use rolechain::ledger::validate_tx;
use rolechain::simnet::{self, SimError, SimReport};
use rolechain::txmodel::{deserialize_tx, AccountKey};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// The bytes do not decode as a chain or transaction.
    Corrupt = 3,
    /// A block of the chain breaks a consensus rule.
    InvalidBlock = 4,
    /// The transaction is well formed but not valid at the tip.
    InvalidTx = 5,
    NotFound = 6,
    BufferTooSmall = 7,
    ScriptError = 8,
    AssertionFailed = 9,
    Panic = 10,
}

/// A validated chain.
pub struct RcChain {
    chain: ChainState,
}

/// The outcome of a finished simulation run.
pub struct RcReport {
    report: SimReport,
}

/// Fee and minted amount of an accepted transaction.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct RcTxVerdict {
    pub fee: u64,
    pub minted: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn fail(status: RcStatus, msg: impl Into<String>) -> RcStatus {
    set_error(msg);
    status
}

/// Runs `f`, mapping a panic to `RC_STATUS_PANIC`.
fn guard(f: impl FnOnce() -> RcStatus) -> RcStatus {
    set_error("");
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(RcStatus::Panic, "internal panic"))
}

unsafe fn slice<'a>(data: *const u8, len: usize) -> Option<&'a [u8]> {
    if len == 0 {
        return Some(&[]);
    }
    if data.is_null() {
        return None;
    }
    Some(std::slice::from_raw_parts(data, len))
}

unsafe fn copy_out(bytes: &[u8], buf: *mut u8, cap: usize, needed: *mut usize) -> RcStatus {
    if needed.is_null() {
        return fail(RcStatus::NullPointer, "needed is null");
    }
    *needed = bytes.len();
    if bytes.len() > cap {
        return RcStatus::BufferTooSmall;
    }
    if !bytes.is_empty() {
        if buf.is_null() {
            return fail(RcStatus::NullPointer, "buffer is null");
        }
        ptr::copy_nonoverlapping(bytes.as_ptr(), buf, bytes.len());
    }
    RcStatus::Ok
}

/// Copies a string plus a terminating NUL.
unsafe fn copy_str(s: &str, buf: *mut c_char, cap: usize, needed: *mut usize) -> RcStatus {
    let mut bytes = Vec::with_capacity(s.len() + 1);
    bytes.extend_from_slice(s.as_bytes());
    bytes.push(0);
    copy_out(&bytes, buf.cast(), cap, needed)
}

/// Static name of a status code, e.g. `"InvalidTx"`.
#[no_mangle]
pub extern "C" fn rc_status_name(status: RcStatus) -> *const c_char {
    let s: &'static CStr = match status {
        RcStatus::Ok => c"Ok",
        RcStatus::NullPointer => c"NullPointer",
        RcStatus::InvalidUtf8 => c"InvalidUtf8",
        RcStatus::Corrupt => c"Corrupt",
        RcStatus::InvalidBlock => c"InvalidBlock",
        RcStatus::InvalidTx => c"InvalidTx",
        RcStatus::NotFound => c"NotFound",
        RcStatus::BufferTooSmall => c"BufferTooSmall",
        RcStatus::ScriptError => c"ScriptError",
        RcStatus::AssertionFailed => c"AssertionFailed",
        RcStatus::Panic => c"Panic",
    };
    s.as_ptr()
}

/// Message for the last failure on this thread (empty after a success).
///
/// # Safety
/// `buf` must be valid for `cap` bytes; `needed` must be valid.
#[no_mangle]
pub unsafe extern "C" fn rc_last_error(buf: *mut c_char, cap: usize, needed: *mut usize) -> RcStatus {
    let msg = LAST_ERROR.with(|e| e.borrow().clone());
    copy_str(&msg, buf, cap, needed)
}

/// Decodes and fully validates a chain file with default node settings.
///
/// # Safety
/// `data` must be valid for `len` bytes; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn rc_chain_open(data: *const u8, len: usize, out: *mut *mut RcChain) -> RcStatus {
    guard(|| {
        let Some(bytes) = slice(data, len) else { return fail(RcStatus::NullPointer, "data is null") };
        if out.is_null() {
            return fail(RcStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        match ChainState::from_chain_file(bytes, ChainConfig::default()) {
            Ok(chain) => {
                *out = Box::into_raw(Box::new(RcChain { chain }));
                RcStatus::Ok
            }
            Err(e @ (ConsensusError::Wire(_) | ConsensusError::NotGenesis)) => fail(RcStatus::Corrupt, e.to_string()),
            Err(e) => fail(RcStatus::InvalidBlock, format!("{}: {e}", e.code())),
        }
    })
}

/// Releases a chain. Null is ignored.
///
/// # Safety
/// `chain` must come from [`rc_chain_open`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rc_chain_free(chain: *mut RcChain) {
    if !chain.is_null() {
        drop(Box::from_raw(chain));
    }
}

/// # Safety
/// `chain` must be a live handle; `height` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn rc_chain_height(chain: *const RcChain, height: *mut u64) -> RcStatus {
    guard(|| {
        let (Some(c), false) = (chain.as_ref(), height.is_null()) else { return fail(RcStatus::NullPointer, "null argument") };
        *height = c.chain.height();
        RcStatus::Ok
    })
}

/// Writes the 32-byte tip hash, in the same byte order as its hex form.
///
/// # Safety
/// `chain` must be a live handle; `hash` must be valid for 32 bytes.
#[no_mangle]
pub unsafe extern "C" fn rc_chain_tip_hash(chain: *const RcChain, hash: *mut u8) -> RcStatus {
    guard(|| {
        let (Some(c), false) = (chain.as_ref(), hash.is_null()) else { return fail(RcStatus::NullPointer, "null argument") };
        ptr::copy_nonoverlapping(c.chain.tip_hash().0.as_ptr(), hash, 32);
        RcStatus::Ok
    })
}

/// Coin balance of a 32-byte account key at the tip.
///
/// # Safety
/// `chain` must be a live handle; `account` valid for 32 bytes; `balance`
/// valid for a write.
#[no_mangle]
pub unsafe extern "C" fn rc_chain_balance(chain: *const RcChain, account: *const u8, balance: *mut u64) -> RcStatus {
    guard(|| {
        let (Some(c), Some(k), false) = (chain.as_ref(), slice(account, 32), balance.is_null()) else {
            return fail(RcStatus::NullPointer, "null argument");
        };
        let key = AccountKey(k.try_into().expect("32 bytes"));
        *balance = c.chain.tip_state().balance(&key);
        RcStatus::Ok
    })
}

/// Role bits (U=1, A=2, C=4, L=8, M=16) and lock flag of an account.
/// Returns `RC_STATUS_NOT_FOUND` for an account that holds no role output.
///
/// # Safety
/// `chain` must be a live handle; `account` valid for 32 bytes; `roles` and
/// `locked` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn rc_chain_roles(
    chain: *const RcChain,
    account: *const u8,
    roles: *mut u8,
    locked: *mut bool,
) -> RcStatus {
    guard(|| {
        let (Some(c), Some(k)) = (chain.as_ref(), slice(account, 32)) else {
            return fail(RcStatus::NullPointer, "null argument");
        };
        if roles.is_null() || locked.is_null() {
            return fail(RcStatus::NullPointer, "null argument");
        }
        let key = AccountKey(k.try_into().expect("32 bytes"));
        match c.chain.tip_state().roles.get(&key) {
            Some(r) => {
                *roles = r.roles.bits();
                *locked = r.locked;
                RcStatus::Ok
            }
            None => fail(RcStatus::NotFound, format!("{key} holds no role output")),
        }
    })
}

/// Validates a serialized transaction as the next block would see it.
///
/// # Safety
/// `chain` must be a live handle; `tx` valid for `len` bytes; `verdict`
/// valid for a write.
#[no_mangle]
pub unsafe extern "C" fn rc_chain_validate_tx(
    chain: *const RcChain,
    tx: *const u8,
    len: usize,
    verdict: *mut RcTxVerdict,
) -> RcStatus {
    guard(|| {
        let (Some(c), Some(bytes)) = (chain.as_ref(), slice(tx, len)) else {
            return fail(RcStatus::NullPointer, "null argument");
        };
        if verdict.is_null() {
            return fail(RcStatus::NullPointer, "verdict is null");
        }
        let tx = match deserialize_tx(bytes) {
            Ok(t) => t,
            Err(e) => return fail(RcStatus::Corrupt, e.to_string()),
        };
        let mut state = c.chain.tip_state().clone();
        state.begin_block(state.height + 1);
        match validate_tx(&tx, &state) {
            Ok(v) => {
                *verdict = RcTxVerdict { fee: v.fee, minted: v.minted };
                RcStatus::Ok
            }
            Err(e) => fail(RcStatus::InvalidTx, format!("{}: {e}", e.code())),
        }
    })
}

/// Parses and runs a NUL-terminated scenario script. With
/// `override_seed` set, `seed` replaces the script's seed.
///
/// # Safety
/// `script` must be a NUL-terminated string; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn rc_run_scenario(
    script: *const c_char,
    override_seed: bool,
    seed: u64,
    out: *mut *mut RcReport,
) -> RcStatus {
    guard(|| {
        if script.is_null() || out.is_null() {
            return fail(RcStatus::NullPointer, "null argument");
        }
        *out = ptr::null_mut();
        let Ok(text) = CStr::from_ptr(script).to_str() else { return fail(RcStatus::InvalidUtf8, "script is not UTF-8") };
        match simnet::run_script(text, override_seed.then_some(seed)) {
            Ok(report) => {
                *out = Box::into_raw(Box::new(RcReport { report }));
                RcStatus::Ok
            }
            Err(e @ SimError::Script(_)) => fail(RcStatus::ScriptError, e.to_string()),
            Err(e @ SimError::AssertionFailed { .. }) => fail(RcStatus::AssertionFailed, e.to_string()),
        }
    })
}

/// Releases a report. Null is ignored.
///
/// # Safety
/// `report` must come from [`rc_run_scenario`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rc_report_free(report: *mut RcReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// The run trace as NUL-terminated text.
///
/// # Safety
/// `report` must be a live handle; `buf` valid for `cap` bytes; `needed`
/// valid for a write.
#[no_mangle]
pub unsafe extern "C" fn rc_report_trace(report: *const RcReport, buf: *mut c_char, cap: usize, needed: *mut usize) -> RcStatus {
    guard(|| match report.as_ref() {
        Some(r) => copy_str(&r.report.trace(), buf, cap, needed),
        None => fail(RcStatus::NullPointer, "report is null"),
    })
}

/// The observer's final hierarchy as NUL-terminated DOT text.
///
/// # Safety
/// As for [`rc_report_trace`].
#[no_mangle]
pub unsafe extern "C" fn rc_report_dot(report: *const RcReport, buf: *mut c_char, cap: usize, needed: *mut usize) -> RcStatus {
    guard(|| match report.as_ref() {
        Some(r) => copy_str(&r.report.dot(), buf, cap, needed),
        None => fail(RcStatus::NullPointer, "report is null"),
    })
}

/// The observer's best chain in chain-file encoding.
///
/// # Safety
/// `report` must be a live handle; `buf` valid for `cap` bytes; `needed`
/// valid for a write.
#[no_mangle]
pub unsafe extern "C" fn rc_report_chain(report: *const RcReport, buf: *mut u8, cap: usize, needed: *mut usize) -> RcStatus {
    guard(|| match report.as_ref() {
        Some(r) => copy_out(&r.report.chain_file(), buf, cap, needed),
        None => fail(RcStatus::NullPointer, "report is null"),
    })
}
