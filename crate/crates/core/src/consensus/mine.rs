use super::{merkle_root, Block, BlockHeader, ChainConfig, ConsensusError, Target};
use crate::ledger::{validate_tx, LedgerState};
use crate::txmodel::{AccountKey, Hash32, Transaction, TxOutput};

/// Transactions selected for the next block, in order, with their fees.
#[derive(Debug, Clone)]
pub struct BlockTemplate {
    pub prev_hash: Hash32,
    pub height: u64,
    pub txs: Vec<Transaction>,
    pub fees: u64,
}

impl BlockTemplate {
    /// Greedily takes candidates that validate on top of the ones before them.
    pub fn assemble<'a>(
        prev_hash: Hash32,
        parent: &LedgerState,
        candidates: impl IntoIterator<Item = &'a Transaction>,
    ) -> BlockTemplate {
        let height = parent.height + 1;
        let mut state = parent.clone();
        state.begin_block(height);
        let mut txs = Vec::new();
        let mut fees = 0u64;
        for tx in candidates {
            if tx.is_coinbase() || tx.is_genesis() {
                continue;
            }
            if let Ok(v) = validate_tx(tx, &state) {
                fees = fees.saturating_add(v.fee);
                state.apply_in_place(tx);
                txs.push(tx.clone());
            }
        }
        BlockTemplate { prev_hash, height, txs, fees }
    }

    /// Pays the subsidy plus all fees to `reward`.
    pub fn coinbase(&self, reward: AccountKey, config: &ChainConfig) -> Transaction {
        Transaction::coinbase(self.height, vec![TxOutput::new(config.subsidy.saturating_add(self.fees), reward)])
    }

    pub fn mgmt_count(&self) -> u32 {
        self.txs.iter().filter(|t| t.is_management()).count() as u32
    }

    /// Block-level rules a miner can check before spending work: policy
    /// bootstrap and the dependent-mining window.
    pub fn preflight(&self, parent: &LedgerState) -> Result<(), ConsensusError> {
        parent.policy.bootstrap_check(self.height).map_err(ConsensusError::BootstrapIncomplete)?;
        let mut window = parent.window;
        window.advance(self.height, self.mgmt_count(), &parent.policy)
    }
}

/// Searches nonces from `seed` until the header meets `target`.
pub fn seal_block(prev_hash: Hash32, height: u64, transactions: Vec<Transaction>, target: Target, seed: u64) -> Block {
    let merkle = merkle_root(&transactions.iter().map(Transaction::txid).collect::<Vec<_>>());
    let mut header = BlockHeader { prev_hash, merkle_root: merkle, height, nonce: seed, target };
    while !target.is_met_by(&header.hash()) {
        header.nonce = header.nonce.wrapping_add(1);
    }
    Block { header, transactions }
}

/// Builds the coinbase for `reward` and seals the template.
pub fn mine_block(template: &BlockTemplate, reward: AccountKey, config: &ChainConfig, seed: u64) -> Block {
    let mut txs = Vec::with_capacity(template.txs.len() + 1);
    txs.push(template.coinbase(reward, config));
    txs.extend(template.txs.iter().cloned());
    seal_block(template.prev_hash, template.height, txs, config.target, seed)
}
