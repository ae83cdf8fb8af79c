//! UTXO set, role index and the validation rules for all three
//! transaction modes.

mod apply;
mod validate;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::consensus::WindowState;
use crate::hierarchy::HierarchyTree;
use crate::policy::{PolicyError, PolicyState};
use crate::txmodel::{AccountKey, OutPoint, PolicyPayload, RolePayload, RoleSet, Transaction, TxMode};

pub use apply::apply_transaction;
pub use validate::{
    law_move_funds, validate_mint, validate_policy_change, validate_role_change, validate_transfer,
    validate_tx, RoleTransition, TxVerdict,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("{0:?} lacks the U role")]
    MissingURole(AccountKey),
    #[error("{0:?} is locked")]
    AccountLocked(AccountKey),
    #[error("unknown output {0}")]
    UnknownUtxo(OutPoint),
    #[error("output {0} already spent")]
    DoubleSpend(OutPoint),
    #[error("outputs {outputs} exceed inputs {inputs}")]
    Overspend { inputs: u64, outputs: u64 },
    #[error("{target:?} is outside the scope of {issuer:?}")]
    ScopeViolation { issuer: AccountKey, target: AccountKey },
    #[error("minting requires an unlocked C-role signer")]
    MissingCRole,
    #[error("minted {minted} exceeds the per-transaction cap {cap}")]
    MintCapExceeded { minted: u64, cap: u64 },
    #[error("role output {0} was already spent")]
    ReplayedRole(OutPoint),
    #[error("{issuer:?} may not make this change to {target:?}")]
    AuthorityExceeded { issuer: AccountKey, target: AccountKey },
    #[error("issuer {0:?} is locked")]
    IssuerLocked(AccountKey),
    #[error("malformed payload nvalue {0:#x}")]
    MalformedPayload(u64),
    #[error("{0:?} lacks the M role")]
    MissingMRole(AccountKey),
    #[error("{0:?} lacks the L role")]
    MissingLRole(AccountKey),
    #[error("granting {target:?} from {issuer:?} would create a cycle")]
    CycleCreated { issuer: AccountKey, target: AccountKey },
    #[error("bad signature on input {0}")]
    BadSignature(usize),
    #[error("input {0} is not signed by the owner of its output")]
    NotOwner(usize),
    #[error("expected a {expected} transaction")]
    WrongMode { expected: TxMode },
    #[error("input {0} spends the wrong kind of output")]
    WrongEntryKind(usize),
    #[error("first input must spend the issuer's live role output")]
    NoLiveRole,
    #[error("coin value overflow")]
    ValueOverflow,
    #[error("malformed transaction: {0}")]
    Malformed(&'static str),
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

impl LedgerError {
    /// Stable variant name, used in traces.
    pub fn code(&self) -> &'static str {
        match self {
            LedgerError::MissingURole(_) => "MissingURole",
            LedgerError::AccountLocked(_) => "AccountLocked",
            LedgerError::UnknownUtxo(_) => "UnknownUtxo",
            LedgerError::DoubleSpend(_) => "DoubleSpend",
            LedgerError::Overspend { .. } => "Overspend",
            LedgerError::ScopeViolation { .. } => "ScopeViolation",
            LedgerError::MissingCRole => "MissingCRole",
            LedgerError::MintCapExceeded { .. } => "MintCapExceeded",
            LedgerError::ReplayedRole(_) => "ReplayedRole",
            LedgerError::AuthorityExceeded { .. } => "AuthorityExceeded",
            LedgerError::IssuerLocked(_) => "IssuerLocked",
            LedgerError::MalformedPayload(_) => "MalformedPayload",
            LedgerError::MissingMRole(_) => "MissingMRole",
            LedgerError::MissingLRole(_) => "MissingLRole",
            LedgerError::CycleCreated { .. } => "CycleCreated",
            LedgerError::BadSignature(_) => "BadSignature",
            LedgerError::NotOwner(_) => "NotOwner",
            LedgerError::WrongMode { .. } => "WrongMode",
            LedgerError::WrongEntryKind(_) => "WrongEntryKind",
            LedgerError::NoLiveRole => "NoLiveRole",
            LedgerError::ValueOverflow => "ValueOverflow",
            LedgerError::Malformed(_) => "Malformed",
            LedgerError::Policy(p) => match p {
                PolicyError::PermanentViolation(_) => "PermanentViolation",
                PolicyError::AuthorityTooDeep { .. } => "AuthorityTooDeep",
                PolicyError::IntervalBelowMinimum { .. } => "IntervalBelowMinimum",
                PolicyError::UnknownParam(_) => "UnknownParam",
                PolicyError::DuplicateParam(_) => "DuplicateParam",
                PolicyError::InvalidValue { .. } => "InvalidValue",
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryKind {
    Coin { amount: u64, coinbase_origin: bool },
    Role(RolePayload),
    Policy(PolicyPayload),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UtxoEntry {
    pub outpoint: OutPoint,
    pub owner: AccountKey,
    pub kind: EntryKind,
}

impl UtxoEntry {
    pub fn coin_amount(&self) -> Option<u64> {
        match self.kind {
            EntryKind::Coin { amount, .. } => Some(amount),
            _ => None,
        }
    }

    pub fn is_coinbase_coin(&self) -> bool {
        matches!(self.kind, EntryKind::Coin { coinbase_origin: true, .. })
    }
}

/// What kind of entry a spent outpoint held; distinguishes replays from double spends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpentClass {
    Coin,
    Role,
    Policy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoleRecord {
    pub roles: RoleSet,
    pub locked: bool,
    /// The unspent role output currently carrying these roles.
    pub live: OutPoint,
}

impl RoleRecord {
    pub fn payload(&self) -> RolePayload {
        RolePayload::new(self.roles, self.locked)
    }
}

/// Account to current roles. A cache over the unspent role outputs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RoleIndex(BTreeMap<AccountKey, RoleRecord>);

impl RoleIndex {
    pub fn get(&self, key: &AccountKey) -> Option<&RoleRecord> {
        self.0.get(key)
    }

    /// Empty for accounts that never received roles.
    pub fn roles(&self, key: &AccountKey) -> RoleSet {
        self.0.get(key).map_or(RoleSet::EMPTY, |r| r.roles)
    }

    pub fn is_locked(&self, key: &AccountKey) -> bool {
        self.0.get(key).is_some_and(|r| r.locked)
    }

    pub fn set(&mut self, key: AccountKey, roles: RoleSet, locked: bool, live: OutPoint) {
        self.0.insert(key, RoleRecord { roles, locked, live });
    }

    pub fn iter(&self) -> impl Iterator<Item = (&AccountKey, &RoleRecord)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Rebuilds the index from scratch out of a UTXO set.
    pub fn fold_utxos<'a>(entries: impl IntoIterator<Item = &'a UtxoEntry>) -> RoleIndex {
        let mut idx = RoleIndex::default();
        for e in entries {
            if let EntryKind::Role(p) = e.kind {
                idx.set(e.owner, p.roles, p.locked, e.outpoint);
            }
        }
        idx
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LedgerState {
    pub utxos: BTreeMap<OutPoint, UtxoEntry>,
    pub spent: BTreeMap<OutPoint, SpentClass>,
    pub roles: RoleIndex,
    pub hierarchy: HierarchyTree,
    pub policy: PolicyState,
    /// Height of the block whose transactions are being (or were last) applied.
    pub height: u64,
    pub window: WindowState,
}

impl LedgerState {
    /// State after block 0: the genesis grant applied to an empty ledger.
    pub fn genesis(root: AccountKey, policy: PolicyState) -> (Transaction, LedgerState) {
        let tx = Transaction::genesis(root);
        let mut state = LedgerState { policy, ..LedgerState::default() };
        state.apply_in_place(&tx);
        (tx, state)
    }

    pub fn utxo(&self, outpoint: &OutPoint) -> Option<&UtxoEntry> {
        self.utxos.get(outpoint)
    }

    pub fn total_coin(&self) -> u128 {
        self.utxos
            .values()
            .filter_map(UtxoEntry::coin_amount)
            .map(u128::from)
            .sum()
    }

    pub fn balance(&self, owner: &AccountKey) -> u64 {
        self.coins_of(owner).filter_map(|e| e.coin_amount()).sum()
    }

    pub fn coins_of<'a>(&'a self, owner: &'a AccountKey) -> impl Iterator<Item = &'a UtxoEntry> + 'a {
        self.utxos
            .values()
            .filter(move |e| e.owner == *owner && e.coin_amount().is_some())
    }

    /// Number of unspent role outputs per account; every value must be 1.
    pub fn role_output_counts(&self) -> BTreeMap<AccountKey, usize> {
        let mut counts = BTreeMap::new();
        for e in self.utxos.values() {
            if matches!(e.kind, EntryKind::Role(_)) {
                *counts.entry(e.owner).or_default() += 1;
            }
        }
        counts
    }

    /// Role index equals the fold of the UTXO set and no account has two live role outputs.
    pub fn is_role_index_coherent(&self) -> bool {
        self.role_output_counts().values().all(|c| *c == 1)
            && RoleIndex::fold_utxos(self.utxos.values()) == self.roles
    }

    /// Moves to the next block height; policy writes are stamped with it.
    pub fn begin_block(&mut self, height: u64) {
        self.height = height;
    }
}
