//! Builds and signs transactions against a ledger state.
//!
//! Builders only pick outputs and lay out the transaction; whether the
//! result is acceptable is decided by validation.

use thiserror::Error;

use crate::ledger::{EntryKind, LedgerState, UtxoEntry};
use crate::txmodel::{
    sign_input, AccountKey, Keypair, OutPoint, PolicyPayload, RolePayload, Transaction, TxInput, TxMode, TxOutput,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuildError {
    #[error("insufficient funds: need {needed}, have {available}")]
    InsufficientFunds { needed: u64, available: u64 },
    #[error("{0:?} holds no coin output")]
    NoCoin(AccountKey),
    #[error("{0:?} has no live role output")]
    NoLiveRole(AccountKey),
    #[error("amount overflow")]
    Overflow,
}

/// Which coin outputs a builder may spend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoinFilter {
    #[default]
    Any,
    CoinbaseOnly,
    NormalOnly,
}

impl CoinFilter {
    fn admits(self, e: &UtxoEntry) -> bool {
        match (self, e.kind) {
            (_, EntryKind::Role(_) | EntryKind::Policy(_)) => false,
            (CoinFilter::Any, _) => true,
            (CoinFilter::CoinbaseOnly, EntryKind::Coin { coinbase_origin, .. }) => coinbase_origin,
            (CoinFilter::NormalOnly, EntryKind::Coin { coinbase_origin, .. }) => !coinbase_origin,
        }
    }
}

/// Picks `owner`'s coins in outpoint order until they cover `amount`.
/// Always returns at least one coin when any is admissible.
pub fn select_coins(
    state: &LedgerState,
    owner: &AccountKey,
    filter: CoinFilter,
    amount: u64,
) -> Result<(Vec<OutPoint>, u64), BuildError> {
    let mut picked = Vec::new();
    let mut total = 0u64;
    for e in state.coins_of(owner).filter(|e| filter.admits(e)) {
        if total >= amount && !picked.is_empty() {
            break;
        }
        picked.push(e.outpoint);
        total = total.checked_add(e.coin_amount().unwrap_or(0)).ok_or(BuildError::Overflow)?;
    }
    if picked.is_empty() && amount == 0 {
        return Err(BuildError::NoCoin(*owner));
    }
    if total < amount {
        return Err(BuildError::InsufficientFunds { needed: amount, available: total });
    }
    Ok((picked, total))
}

fn sum(payments: &[(AccountKey, u64)]) -> Result<u64, BuildError> {
    payments
        .iter()
        .try_fold(0u64, |acc, (_, v)| acc.checked_add(*v))
        .ok_or(BuildError::Overflow)
}

/// Signs every input whose signer is `key`.
pub fn sign_all(tx: &mut Transaction, key: &Keypair) {
    let me = key.account();
    for i in 0..tx.inputs.len() {
        if tx.inputs[i].signer == me {
            sign_input(tx, i, key);
        }
    }
}

fn signed(mut tx: Transaction, key: &Keypair) -> Transaction {
    sign_all(&mut tx, key);
    tx
}

/// Pays `payments` from `from`'s coins, leaving `fee` to the miner and the
/// rest as change to `from`.
pub fn transfer(
    state: &LedgerState,
    from: &Keypair,
    filter: CoinFilter,
    payments: &[(AccountKey, u64)],
    fee: u64,
) -> Result<Transaction, BuildError> {
    let me = from.account();
    let needed = sum(payments)?.checked_add(fee).ok_or(BuildError::Overflow)?;
    let (coins, total) = select_coins(state, &me, filter, needed)?;
    let inputs = coins.into_iter().map(|op| TxInput::new(op, me)).collect();
    let mut outputs: Vec<TxOutput> = payments.iter().map(|(to, v)| TxOutput::new(*v, *to)).collect();
    if total > needed {
        outputs.push(TxOutput::new(total - needed, me));
    }
    Ok(signed(Transaction::new(TxMode::CoinTransfer, inputs, outputs), from))
}

/// Creates `payments` out of nothing, spending one of `issuer`'s coins and
/// returning it whole as change.
pub fn mint(state: &LedgerState, issuer: &Keypair, payments: &[(AccountKey, u64)]) -> Result<Transaction, BuildError> {
    let me = issuer.account();
    let (coins, total) = select_coins(state, &me, CoinFilter::Any, 0)?;
    let inputs = coins.into_iter().map(|op| TxInput::new(op, me)).collect();
    let mut outputs: Vec<TxOutput> = payments.iter().map(|(to, v)| TxOutput::new(*v, *to)).collect();
    outputs.push(TxOutput::new(total, me));
    Ok(signed(Transaction::new(TxMode::CoinTransfer, inputs, outputs), issuer))
}

/// Moves `amount` (or everything, if `None`) of `victim`'s coin to `to`
/// through law-override inputs signed by `law`. Leftover coin returns to
/// the victim; no fee is taken.
pub fn law_move(
    state: &LedgerState,
    law: &Keypair,
    victim: &AccountKey,
    to: &AccountKey,
    amount: Option<u64>,
) -> Result<Transaction, BuildError> {
    let me = law.account();
    let want = amount.unwrap_or(u64::MAX);
    let (coins, total) = match amount {
        Some(a) => select_coins(state, victim, CoinFilter::Any, a)?,
        None => select_coins(state, victim, CoinFilter::Any, 0).map(|_| {
            let all: Vec<_> = state.coins_of(victim).map(|e| e.outpoint).collect();
            (all, state.balance(victim))
        })?,
    };
    let moved = want.min(total);
    let inputs = coins.into_iter().map(|op| TxInput::overriding(op, me)).collect();
    let mut outputs = vec![TxOutput::new(moved, *to)];
    if total > moved {
        outputs.push(TxOutput::new(total - moved, *victim));
    }
    Ok(signed(Transaction::new(TxMode::CoinTransfer, inputs, outputs), law))
}

/// Front of a management transaction: the issuer's live role output, then
/// fee coins, with change in output 0.
fn management_inputs(
    state: &LedgerState,
    issuer: &AccountKey,
    fee: u64,
) -> Result<(Vec<TxInput>, TxOutput, RolePayload), BuildError> {
    let rec = state.roles.get(issuer).ok_or(BuildError::NoLiveRole(*issuer))?;
    let mut inputs = vec![TxInput::new(rec.live, *issuer)];
    let mut change = 0;
    if fee > 0 {
        let (coins, total) = select_coins(state, issuer, CoinFilter::Any, fee)?;
        inputs.extend(coins.into_iter().map(|op| TxInput::new(op, *issuer)));
        change = total - fee;
    }
    Ok((inputs, TxOutput::new(change, *issuer), rec.payload()))
}

/// Sets the complete role payload of each target. A target equal to the
/// issuer replaces the issuer's own re-created role (self-removal).
pub fn role_change(
    state: &LedgerState,
    issuer: &Keypair,
    targets: &[(AccountKey, RolePayload)],
    fee: u64,
) -> Result<Transaction, BuildError> {
    let me = issuer.account();
    let (mut inputs, change, own) = management_inputs(state, &me, fee)?;
    let own_new = targets.iter().find(|(k, _)| *k == me).map_or(own, |(_, p)| *p);
    let mut outputs = vec![change, TxOutput::role(own_new, me)];
    for (target, payload) in targets.iter().filter(|(k, _)| *k != me) {
        if let Some(rec) = state.roles.get(target) {
            inputs.push(TxInput::overriding(rec.live, me));
        }
        outputs.push(TxOutput::role(*payload, *target));
    }
    Ok(signed(Transaction::new(TxMode::RoleChange, inputs, outputs), issuer))
}

pub fn policy_change(
    state: &LedgerState,
    issuer: &Keypair,
    payloads: &[PolicyPayload],
    fee: u64,
) -> Result<Transaction, BuildError> {
    let me = issuer.account();
    let (inputs, change, own) = management_inputs(state, &me, fee)?;
    let mut outputs = vec![change, TxOutput::role(own, me)];
    outputs.extend(payloads.iter().map(|p| TxOutput::policy(*p, me)));
    Ok(signed(Transaction::new(TxMode::PolicyChange, inputs, outputs), issuer))
}
