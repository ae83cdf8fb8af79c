use std::collections::{BTreeMap, BTreeSet};

use super::{EntryKind, LedgerError, LedgerState, SpentClass, UtxoEntry};
use crate::hierarchy::HierarchyError;
use crate::policy::PolicyParam;
use crate::txmodel::{
    decode_policy_nvalue, decode_role_nvalue, verify_input, AccountKey, PolicyPayload, Role, RolePayload,
    Transaction, TxInput, TxMode,
};

/// Outcome of validating one transaction against a ledger state.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TxVerdict {
    pub fee: u64,
    pub minted: u64,
    pub transitions: Vec<RoleTransition>,
    pub policy: Vec<PolicyPayload>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoleTransition {
    pub issuer: AccountKey,
    pub target: AccountKey,
    pub old: RolePayload,
    pub new: RolePayload,
}

/// Validates any non-coinbase transaction, dispatching on its mode.
pub fn validate_tx(tx: &Transaction, state: &LedgerState) -> Result<TxVerdict, LedgerError> {
    match tx.mode() {
        Some(TxMode::CoinTransfer) => validate_transfer(tx, state),
        Some(TxMode::RoleChange) => validate_role_change(tx, state),
        Some(TxMode::PolicyChange) => validate_policy_change(tx, state),
        None => Err(LedgerError::Malformed("unknown version")),
    }
}

type Resolved<'a> = Vec<(&'a TxInput, &'a UtxoEntry)>;

/// Looks up every input, checks signatures and ownership of non-override inputs.
fn resolve_inputs<'a>(tx: &'a Transaction, state: &'a LedgerState) -> Result<Resolved<'a>, LedgerError> {
    if tx.inputs.is_empty() {
        return Err(LedgerError::Malformed("no inputs"));
    }
    if tx.outputs.is_empty() {
        return Err(LedgerError::Malformed("no outputs"));
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(tx.inputs.len());
    for input in &tx.inputs {
        if input.prevout.is_null() {
            return Err(LedgerError::Malformed("null prevout outside coinbase"));
        }
        if !seen.insert(input.prevout) {
            return Err(LedgerError::DoubleSpend(input.prevout));
        }
        let entry = match state.utxos.get(&input.prevout) {
            Some(e) => e,
            None => {
                return Err(match state.spent.get(&input.prevout) {
                    Some(SpentClass::Coin) => LedgerError::DoubleSpend(input.prevout),
                    Some(_) => LedgerError::ReplayedRole(input.prevout),
                    None => LedgerError::UnknownUtxo(input.prevout),
                })
            }
        };
        out.push((input, entry));
    }
    for (i, (input, entry)) in out.iter().enumerate() {
        if !verify_input(tx, i) {
            return Err(LedgerError::BadSignature(i));
        }
        if !input.law_override && input.signer != entry.owner {
            return Err(LedgerError::NotOwner(i));
        }
    }
    Ok(out)
}

fn checked_sum(values: impl IntoIterator<Item = u64>) -> Result<u64, LedgerError> {
    values
        .into_iter()
        .try_fold(0u64, |acc, v| acc.checked_add(v))
        .ok_or(LedgerError::ValueOverflow)
}

/// May `signer` spend its own coin entry?
fn check_coin_spend(
    state: &LedgerState,
    signer: &AccountKey,
    entry: &UtxoEntry,
    minting: bool,
) -> Result<(), LedgerError> {
    let rec = state.roles.get(signer);
    if rec.is_some_and(|r| r.locked) {
        return Err(LedgerError::AccountLocked(*signer));
    }
    if entry.is_coinbase_coin() {
        return Ok(());
    }
    let roles = rec.map(|r| r.roles).unwrap_or_default();
    if roles.has_u() || (minting && roles.has_c()) {
        return Ok(());
    }
    Err(LedgerError::MissingURole(*signer))
}

/// May `signer` forcibly move coin owned by `owner`?
fn check_law_override(state: &LedgerState, signer: &AccountKey, owner: &AccountKey) -> Result<(), LedgerError> {
    let Some(rec) = state.roles.get(signer) else {
        return Err(LedgerError::MissingLRole(*signer));
    };
    if rec.locked {
        return Err(LedgerError::AccountLocked(*signer));
    }
    if !rec.roles.has_l() {
        return Err(LedgerError::MissingLRole(*signer));
    }
    let scope = state
        .hierarchy
        .law_scope(signer, &state.roles)
        .map_err(|_| LedgerError::ScopeViolation { issuer: *signer, target: *owner })?;
    if !scope.contains(owner) {
        return Err(LedgerError::ScopeViolation { issuer: *signer, target: *owner });
    }
    Ok(())
}

fn coin_inputs(resolved: &Resolved<'_>) -> Result<Vec<u64>, LedgerError> {
    resolved
        .iter()
        .enumerate()
        .map(|(i, (_, e))| e.coin_amount().ok_or(LedgerError::WrongEntryKind(i)))
        .collect()
}

fn check_mint(
    tx: &Transaction,
    state: &LedgerState,
    in_sum: u64,
    out_sum: u64,
) -> Result<u64, LedgerError> {
    let has_c = tx.inputs.iter().any(|i| {
        state
            .roles
            .get(&i.signer)
            .is_some_and(|r| !r.locked && r.roles.has_c())
    });
    if !has_c {
        return Err(LedgerError::MissingCRole);
    }
    let minted = out_sum - in_sum;
    let cap = u64::from(state.policy.effective(PolicyParam::MaxMintPerTx));
    if minted > cap {
        return Err(LedgerError::MintCapExceeded { minted, cap });
    }
    Ok(minted)
}

/// Coin transfer rules, including mints and law-enforcement overrides.
///
/// Each input needs one of: an unlocked U-holding owner, coinbase-origin
/// coin, or a valid law override. In a mint, an unlocked C holder may also
/// spend its own coin. Recipients need no roles.
pub fn validate_transfer(tx: &Transaction, state: &LedgerState) -> Result<TxVerdict, LedgerError> {
    if tx.mode() != Some(TxMode::CoinTransfer) {
        return Err(LedgerError::WrongMode { expected: TxMode::CoinTransfer });
    }
    if tx.is_coinbase() {
        return Err(LedgerError::Malformed("coinbase outside block"));
    }
    let resolved = resolve_inputs(tx, state)?;
    let in_sum = checked_sum(coin_inputs(&resolved)?)?;
    let out_sum = checked_sum(tx.outputs.iter().map(|o| o.nvalue))?;
    let minting = out_sum > in_sum;
    for (input, entry) in &resolved {
        if input.law_override {
            check_law_override(state, &input.signer, &entry.owner)?;
        } else {
            check_coin_spend(state, &input.signer, entry, minting)?;
        }
    }
    if minting {
        let minted = check_mint(tx, state, in_sum, out_sum)?;
        return Ok(TxVerdict { minted, ..TxVerdict::default() });
    }
    Ok(TxVerdict { fee: in_sum - out_sum, ..TxVerdict::default() })
}

/// Validates a minting transfer and returns the minted amount.
pub fn validate_mint(tx: &Transaction, state: &LedgerState) -> Result<u64, LedgerError> {
    let verdict = validate_transfer(tx, state)?;
    if verdict.minted == 0 {
        return Err(LedgerError::Malformed("not a mint"));
    }
    Ok(verdict.minted)
}

/// Validates a transfer carrying law-override inputs and returns its fee.
pub fn law_move_funds(tx: &Transaction, state: &LedgerState) -> Result<u64, LedgerError> {
    if !tx.inputs.iter().any(|i| i.law_override) {
        return Err(LedgerError::Malformed("no law override input"));
    }
    validate_transfer(tx, state).map(|v| v.fee)
}

/// Shared front half of role and policy changes: the issuer spends its own
/// live role output in input 0, may add coin inputs for fees, and gets
/// change back in output 0.
struct Management<'a> {
    issuer: AccountKey,
    issuer_role: RolePayload,
    resolved: Resolved<'a>,
    coin_in: u64,
}

fn management_front<'a>(tx: &'a Transaction, state: &'a LedgerState) -> Result<Management<'a>, LedgerError> {
    if tx.is_genesis() {
        return Err(LedgerError::Malformed("genesis outside block 0"));
    }
    let resolved = resolve_inputs(tx, state)?;
    let (first, first_entry) = resolved[0];
    let issuer = first.signer;
    if resolved.iter().any(|(i, _)| i.signer != issuer) {
        return Err(LedgerError::Malformed("management transactions have a single signer"));
    }
    let issuer_role = match first_entry.kind {
        EntryKind::Role(p) if !first.law_override && first_entry.owner == issuer => p,
        _ => return Err(LedgerError::NoLiveRole),
    };
    if issuer_role.locked {
        return Err(LedgerError::IssuerLocked(issuer));
    }
    let mut coin_in = Vec::new();
    for (i, (input, entry)) in resolved.iter().enumerate().skip(1) {
        match entry.kind {
            EntryKind::Coin { amount, .. } if !input.law_override => {
                check_coin_spend(state, &issuer, entry, false)?;
                coin_in.push(amount);
            }
            EntryKind::Role(_) if input.law_override => {}
            _ => return Err(LedgerError::WrongEntryKind(i)),
        }
    }
    let change = &tx.outputs[0];
    if change.recipient != issuer {
        return Err(LedgerError::Malformed("change output must return to the issuer"));
    }
    let coin_in = checked_sum(coin_in)?;
    if change.nvalue > coin_in {
        return Err(LedgerError::Overspend { inputs: coin_in, outputs: change.nvalue });
    }
    Ok(Management { issuer, issuer_role, resolved, coin_in })
}

fn in_manager_scope(state: &LedgerState, issuer: &AccountKey, target: &AccountKey) -> bool {
    state
        .hierarchy
        .manager_scope(issuer)
        .is_ok_and(|s| s.contains(target))
}

fn check_target(
    state: &LedgerState,
    issuer: &AccountKey,
    issuer_role: RolePayload,
    target: &AccountKey,
    old: RolePayload,
    new: RolePayload,
) -> Result<(), LedgerError> {
    let roles_changed = old.roles != new.roles;
    let lock_changed = old.locked != new.locked;
    let authority = LedgerError::AuthorityExceeded { issuer: *issuer, target: *target };
    let scope = LedgerError::ScopeViolation { issuer: *issuer, target: *target };
    if !roles_changed && !lock_changed {
        return Err(authority);
    }
    if lock_changed {
        if !issuer_role.roles.has_l() {
            return Err(authority);
        }
        let covered = state
            .hierarchy
            .law_scope(issuer, &state.roles)
            .is_ok_and(|s| s.contains(target));
        if !covered {
            return Err(scope);
        }
    }
    if roles_changed {
        let adopting = old.roles.is_empty();
        if issuer_role.roles.has_m() {
            if !adopting && !in_manager_scope(state, issuer, target) {
                return Err(scope);
            }
        } else if issuer_role.roles.has_a() {
            if !old.roles.difference(new.roles).without(Role::User).is_empty() {
                return Err(authority);
            }
            if !adopting && (target == issuer || !in_manager_scope(state, issuer, target)) {
                return Err(scope);
            }
        } else {
            return Err(authority);
        }
        state
            .hierarchy
            .check_transition(issuer, target, old.roles, new.roles)
            .map_err(|e| match e {
                HierarchyError::CycleCreated { issuer, target } => LedgerError::CycleCreated { issuer, target },
                _ => scope,
            })?;
    }
    Ok(())
}

/// Role changes: the issuer spends and re-creates its own role output and,
/// for every target, spends the target's live role output (as an override
/// input) and replaces it with one output stating the complete new role set.
pub fn validate_role_change(tx: &Transaction, state: &LedgerState) -> Result<TxVerdict, LedgerError> {
    if tx.mode() != Some(TxMode::RoleChange) {
        return Err(LedgerError::WrongMode { expected: TxMode::RoleChange });
    }
    let m = management_front(tx, state)?;
    if tx.outputs.len() < 2 {
        return Err(LedgerError::Malformed("role change needs a role output"));
    }
    let mut payloads: BTreeMap<AccountKey, RolePayload> = BTreeMap::new();
    for out in &tx.outputs[1..] {
        let p = decode_role_nvalue(out.nvalue).map_err(|_| LedgerError::MalformedPayload(out.nvalue))?;
        if payloads.insert(out.recipient, p).is_some() {
            return Err(LedgerError::Malformed("two role outputs for one account"));
        }
    }
    let Some(&issuer_new) = payloads.get(&m.issuer) else {
        return Err(LedgerError::Malformed("issuer role output missing"));
    };

    let overridden: BTreeMap<AccountKey, _> = m
        .resolved
        .iter()
        .filter(|(i, _)| i.law_override)
        .map(|(i, e)| (e.owner, i.prevout))
        .collect();
    if overridden.len() != m.resolved.iter().filter(|(i, _)| i.law_override).count() {
        return Err(LedgerError::Malformed("two role inputs for one account"));
    }
    for owner in overridden.keys() {
        if *owner == m.issuer || !payloads.contains_key(owner) {
            return Err(LedgerError::Malformed("spent role output is not replaced"));
        }
    }

    let mut transitions = Vec::new();
    if issuer_new != m.issuer_role {
        let self_removal = issuer_new.roles.is_empty() && issuer_new.locked == m.issuer_role.locked;
        if !self_removal {
            return Err(LedgerError::AuthorityExceeded { issuer: m.issuer, target: m.issuer });
        }
        transitions.push(RoleTransition { issuer: m.issuer, target: m.issuer, old: m.issuer_role, new: issuer_new });
    }

    for (target, new) in payloads.iter().filter(|(k, _)| **k != m.issuer) {
        let old = match state.roles.get(target) {
            Some(rec) => {
                if overridden.get(target) != Some(&rec.live) {
                    return Err(LedgerError::Malformed("target's live role output not spent"));
                }
                rec.payload()
            }
            None => RolePayload::default(),
        };
        check_target(state, &m.issuer, m.issuer_role, target, old, *new)?;
        transitions.push(RoleTransition { issuer: m.issuer, target: *target, old, new: *new });
    }

    Ok(TxVerdict { fee: m.coin_in - tx.outputs[0].nvalue, minted: 0, transitions, policy: Vec::new() })
}

/// Policy changes: output 1 re-creates the issuer's role unchanged, outputs
/// 2.. carry policy payloads.
pub fn validate_policy_change(tx: &Transaction, state: &LedgerState) -> Result<TxVerdict, LedgerError> {
    if tx.mode() != Some(TxMode::PolicyChange) {
        return Err(LedgerError::WrongMode { expected: TxMode::PolicyChange });
    }
    let m = management_front(tx, state)?;
    if !m.issuer_role.roles.has_m() {
        return Err(LedgerError::MissingMRole(m.issuer));
    }
    if m.resolved.iter().any(|(i, _)| i.law_override) {
        return Err(LedgerError::Malformed("policy changes cannot spend other accounts' outputs"));
    }
    if tx.outputs.len() < 3 {
        return Err(LedgerError::Malformed("policy change needs a role and a policy output"));
    }
    let recreated = &tx.outputs[1];
    let role = decode_role_nvalue(recreated.nvalue).map_err(|_| LedgerError::MalformedPayload(recreated.nvalue))?;
    if recreated.recipient != m.issuer || role != m.issuer_role {
        return Err(LedgerError::Malformed("output 1 must re-create the issuer's role"));
    }
    let mut payloads = Vec::with_capacity(tx.outputs.len() - 2);
    for out in &tx.outputs[2..] {
        if out.recipient != m.issuer {
            return Err(LedgerError::Malformed("policy outputs belong to the issuer"));
        }
        payloads.push(decode_policy_nvalue(out.nvalue).map_err(|_| LedgerError::MalformedPayload(out.nvalue))?);
    }
    let depth = state
        .hierarchy
        .depth(&m.issuer)
        .map_err(|_| LedgerError::Malformed("issuer not in hierarchy"))?;
    state.policy.check_policy_tx(&payloads, depth)?;
    Ok(TxVerdict { fee: m.coin_in - tx.outputs[0].nvalue, minted: 0, transitions: Vec::new(), policy: payloads })
}
