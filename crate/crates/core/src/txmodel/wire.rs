//! Canonical little-endian wire format.
//!
//! ```text
//! version   u32
//! n_in      CompactSize
//! input     txid[32] index:u32 law_override:u8 signer[32] signature[64]
//! n_out     CompactSize
//! output    nvalue:u64 recipient[32]
//! locktime  u32
//! ```

use thiserror::Error;

use super::{AccountKey, Hash32, OutPoint, Transaction, TxInput, TxMode, TxOutput};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("input truncated")]
    TruncatedInput,
    #[error("count {0} exceeds remaining input")]
    CountOverflow(u64),
    #[error("unknown transaction version {0}")]
    UnknownVersion(u32),
    #[error("invalid flag byte {0:#04x}")]
    InvalidFlag(u8),
    #[error("transaction has no outputs")]
    NoOutputs,
    #[error("non-canonical CompactSize encoding")]
    NonCanonicalVarint,
    #[error("{0} trailing bytes")]
    TrailingBytes(usize),
}

pub(crate) const INPUT_LEN: usize = 36 + 1 + 32 + 64;
pub(crate) const OUTPUT_LEN: usize = 8 + 32;

pub fn write_compact_size(buf: &mut Vec<u8>, n: u64) {
    if n < 0xfd {
        buf.push(n as u8);
    } else if n <= 0xffff {
        buf.push(0xfd);
        buf.extend_from_slice(&(n as u16).to_le_bytes());
    } else if n <= 0xffff_ffff {
        buf.push(0xfe);
        buf.extend_from_slice(&(n as u32).to_le_bytes());
    } else {
        buf.push(0xff);
        buf.extend_from_slice(&n.to_le_bytes());
    }
}

pub fn compact_size_len(n: u64) -> usize {
    match n {
        0..=0xfc => 1,
        0xfd..=0xffff => 3,
        0x1_0000..=0xffff_ffff => 5,
        _ => 9,
    }
}

/// Cursor over a byte slice.
pub struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        Reader { data, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.data.len() - self.pos
    }

    pub fn is_empty(&self) -> bool {
        self.remaining() == 0
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        if self.remaining() < n {
            return Err(WireError::TruncatedInput);
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn array<const N: usize>(&mut self) -> Result<[u8; N], WireError> {
        let mut out = [0u8; N];
        out.copy_from_slice(self.take(N)?);
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8, WireError> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32, WireError> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    pub fn u64(&mut self) -> Result<u64, WireError> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    pub fn compact_size(&mut self) -> Result<u64, WireError> {
        let (n, min) = match self.u8()? {
            0xfd => (u64::from(u16::from_le_bytes(self.array()?)), 0xfd),
            0xfe => (u64::from(self.u32()?), 0x1_0000),
            0xff => (self.u64()?, 0x1_0000_0000),
            b => return Ok(u64::from(b)),
        };
        if n < min {
            return Err(WireError::NonCanonicalVarint);
        }
        Ok(n)
    }

    /// Reads a count and rejects it if `count * min_item_len` cannot fit in what is left.
    pub fn count(&mut self, min_item_len: usize) -> Result<usize, WireError> {
        let n = self.compact_size()?;
        let need = n.checked_mul(min_item_len as u64);
        match need {
            Some(need) if need <= self.remaining() as u64 => Ok(n as usize),
            _ => Err(WireError::CountOverflow(n)),
        }
    }
}

pub(crate) fn serialized_len(tx: &Transaction) -> usize {
    4 + compact_size_len(tx.inputs.len() as u64)
        + tx.inputs.len() * INPUT_LEN
        + compact_size_len(tx.outputs.len() as u64)
        + tx.outputs.len() * OUTPUT_LEN
        + 4
}

pub(crate) fn write_tx(buf: &mut Vec<u8>, tx: &Transaction, zero_signatures: bool) {
    buf.extend_from_slice(&tx.version.to_le_bytes());
    write_compact_size(buf, tx.inputs.len() as u64);
    for input in &tx.inputs {
        buf.extend_from_slice(&input.prevout.txid.0);
        buf.extend_from_slice(&input.prevout.index.to_le_bytes());
        buf.push(u8::from(input.law_override));
        buf.extend_from_slice(&input.signer.0);
        if zero_signatures {
            buf.extend_from_slice(&[0u8; 64]);
        } else {
            buf.extend_from_slice(&input.signature);
        }
    }
    write_compact_size(buf, tx.outputs.len() as u64);
    for output in &tx.outputs {
        buf.extend_from_slice(&output.nvalue.to_le_bytes());
        buf.extend_from_slice(&output.recipient.0);
    }
    buf.extend_from_slice(&tx.locktime.to_le_bytes());
}

pub fn serialize_tx(tx: &Transaction) -> Vec<u8> {
    let mut buf = Vec::with_capacity(serialized_len(tx));
    write_tx(&mut buf, tx, false);
    buf
}

pub fn read_tx(r: &mut Reader<'_>) -> Result<Transaction, WireError> {
    let version = r.u32()?;
    if TxMode::from_version(version).is_none() {
        return Err(WireError::UnknownVersion(version));
    }
    let n_in = r.count(INPUT_LEN)?;
    let mut inputs = Vec::with_capacity(n_in);
    for _ in 0..n_in {
        let txid = Hash32(r.array()?);
        let index = r.u32()?;
        let law_override = match r.u8()? {
            0 => false,
            1 => true,
            b => return Err(WireError::InvalidFlag(b)),
        };
        let signer = AccountKey(r.array()?);
        let signature = r.array()?;
        inputs.push(TxInput { prevout: OutPoint { txid, index }, signature, signer, law_override });
    }
    let n_out = r.count(OUTPUT_LEN)?;
    if n_out == 0 {
        return Err(WireError::NoOutputs);
    }
    let mut outputs = Vec::with_capacity(n_out);
    for _ in 0..n_out {
        let nvalue = r.u64()?;
        let recipient = AccountKey(r.array()?);
        outputs.push(TxOutput { nvalue, recipient });
    }
    let locktime = r.u32()?;
    Ok(Transaction { version, inputs, outputs, locktime })
}

/// Decodes exactly one transaction; trailing bytes are an error.
pub fn deserialize_tx(bytes: &[u8]) -> Result<Transaction, WireError> {
    let mut r = Reader::new(bytes);
    let tx = read_tx(&mut r)?;
    if !r.is_empty() {
        return Err(WireError::TrailingBytes(r.remaining()));
    }
    Ok(tx)
}
