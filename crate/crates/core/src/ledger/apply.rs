use super::{EntryKind, LedgerState, SpentClass, UtxoEntry};
use crate::txmodel::{decode_policy_nvalue, decode_role_nvalue, OutPoint, Transaction, TxMode};

/// Applies an already validated transaction and returns the new state.
pub fn apply_transaction(tx: &Transaction, state: &LedgerState) -> LedgerState {
    let mut next = state.clone();
    next.apply_in_place(tx);
    next
}

impl LedgerState {
    /// In-place form of [`apply_transaction`]. The transaction must have
    /// passed validation against `self`.
    pub fn apply_in_place(&mut self, tx: &Transaction) {
        let txid = tx.txid();
        let mode = tx.mode().expect("validated transaction has a known mode");
        let issuer = tx.inputs.first().map(|i| i.signer).unwrap_or_default();

        for input in tx.inputs.iter().filter(|i| !i.prevout.is_null()) {
            if let Some(entry) = self.utxos.remove(&input.prevout) {
                let class = match entry.kind {
                    EntryKind::Coin { .. } => SpentClass::Coin,
                    EntryKind::Role(_) => SpentClass::Role,
                    EntryKind::Policy(_) => SpentClass::Policy,
                };
                self.spent.insert(input.prevout, class);
            }
        }

        let coinbase = tx.is_coinbase();
        let mut policy = Vec::new();
        for (index, out) in tx.outputs.iter().enumerate() {
            let outpoint = OutPoint::new(txid, index as u32);
            let kind = match (mode, index) {
                (TxMode::CoinTransfer, _) | (_, 0) => EntryKind::Coin {
                    amount: out.nvalue,
                    coinbase_origin: coinbase,
                },
                (TxMode::RoleChange, _) | (TxMode::PolicyChange, 1) => {
                    let p = decode_role_nvalue(out.nvalue).expect("validated role payload");
                    let old = self.roles.roles(&out.recipient);
                    self.hierarchy
                        .transition(&issuer, &out.recipient, old, p.roles)
                        .expect("validated role transition");
                    self.roles.set(out.recipient, p.roles, p.locked, outpoint);
                    EntryKind::Role(p)
                }
                (TxMode::PolicyChange, _) => {
                    let p = decode_policy_nvalue(out.nvalue).expect("validated policy payload");
                    policy.push(p);
                    EntryKind::Policy(p)
                }
            };
            self.utxos.insert(outpoint, UtxoEntry { outpoint, owner: out.recipient, kind });
        }

        if !policy.is_empty() {
            let depth = self.hierarchy.depth(&issuer).expect("validated issuer is registered");
            self.policy
                .apply_in_place(&policy, depth, self.height)
                .expect("validated policy payloads");
        }
    }
}
