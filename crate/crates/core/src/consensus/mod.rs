//! Blocks, proof of work, block validation and fork choice.

mod block;
mod chain;
mod mine;
mod window;

use thiserror::Error;

use crate::ledger::{validate_tx, LedgerError, LedgerState};
use crate::policy::{PolicyParam, PolicyState, DEFAULT_BOOTSTRAP_WINDOW, DEFAULT_Y_MIN};
use crate::txmodel::{AccountKey, Hash32, Transaction, WireError};

pub use block::{deserialize_chain, merkle_root, serialize_chain, Block, BlockHeader, Target, HEADER_LEN};
pub use chain::{ChainState, ConnectOutcome, StoredBlock};
pub use mine::{mine_block, seal_block, BlockTemplate};
pub use window::{count_mgmt_txs, dependent_window_check, WindowState};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConsensusError {
    #[error("header hash above target")]
    BadPoW,
    #[error("header target differs from the chain target")]
    BadTarget,
    #[error("merkle root does not match transactions")]
    BadMerkle,
    #[error("bad coinbase: {0}")]
    BadCoinbase(&'static str),
    #[error("coinbase pays {paid}, at most {allowed} allowed")]
    CoinbaseOverpay { paid: u64, allowed: u64 },
    #[error("policy parameters unset after bootstrap window: {0:?}")]
    BootstrapIncomplete(Vec<PolicyParam>),
    #[error("window {window} has {found} management transactions, {required} required")]
    WindowViolation { window: u64, found: u32, required: u32 },
    #[error("unknown parent {0}")]
    OrphanParent(Hash32),
    #[error("expected height {expected}, found {found}")]
    BadHeight { expected: u64, found: u64 },
    #[error("block {0} was previously rejected")]
    KnownInvalid(Hash32),
    #[error("first block is not a genesis block")]
    NotGenesis,
    #[error("transaction {index}: {error}")]
    Tx { index: usize, error: LedgerError },
    #[error(transparent)]
    Wire(#[from] WireError),
}

impl ConsensusError {
    pub fn code(&self) -> &'static str {
        match self {
            ConsensusError::BadPoW => "BadPoW",
            ConsensusError::BadTarget => "BadTarget",
            ConsensusError::BadMerkle => "BadMerkle",
            ConsensusError::BadCoinbase(_) => "BadCoinbase",
            ConsensusError::CoinbaseOverpay { .. } => "CoinbaseOverpay",
            ConsensusError::BootstrapIncomplete(_) => "BootstrapIncomplete",
            ConsensusError::WindowViolation { .. } => "WindowViolation",
            ConsensusError::OrphanParent(_) => "OrphanParent",
            ConsensusError::BadHeight { .. } => "BadHeight",
            ConsensusError::KnownInvalid(_) => "KnownInvalid",
            ConsensusError::NotGenesis => "NotGenesis",
            ConsensusError::Tx { error, .. } => error.code(),
            ConsensusError::Wire(_) => "Wire",
        }
    }
}

/// Node configuration shared by every participant of a network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainConfig {
    pub subsidy: u64,
    pub target: Target,
    pub y_min: u32,
    pub bootstrap_window: u64,
}

pub const DEFAULT_SUBSIDY: u64 = 5_000_000_000;

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            subsidy: DEFAULT_SUBSIDY,
            target: Target::EASY,
            y_min: DEFAULT_Y_MIN,
            bootstrap_window: DEFAULT_BOOTSTRAP_WINDOW,
        }
    }
}

impl ChainConfig {
    pub fn empty_policy(&self) -> PolicyState {
        PolicyState::new(self.y_min, self.bootstrap_window)
    }
}

/// Block 0 and the ledger state after it. Genesis carries no proof of work.
pub fn make_genesis(root: AccountKey, config: &ChainConfig) -> (Block, LedgerState) {
    let (tx, state) = LedgerState::genesis(root, config.empty_policy());
    let header = BlockHeader {
        prev_hash: Hash32::ZERO,
        merkle_root: merkle_root(&[tx.txid()]),
        height: 0,
        nonce: 0,
        target: config.target,
    };
    (Block { header, transactions: vec![tx] }, state)
}

/// Result of connecting a block on top of its parent state.
#[derive(Debug, Clone)]
pub struct BlockOutcome {
    pub state: LedgerState,
    pub fees: u64,
    pub minted: u64,
    pub coinbase_paid: u64,
}

fn check_coinbase(tx: &Transaction, height: u64) -> Result<u64, ConsensusError> {
    if !tx.is_coinbase() {
        return Err(ConsensusError::BadCoinbase("first transaction is not a coinbase"));
    }
    if u64::from(tx.locktime) != height & 0xffff_ffff {
        return Err(ConsensusError::BadCoinbase("coinbase does not commit to the height"));
    }
    if tx.outputs.is_empty() {
        return Err(ConsensusError::BadCoinbase("coinbase has no outputs"));
    }
    tx.outputs
        .iter()
        .try_fold(0u64, |acc, o| acc.checked_add(o.nvalue))
        .ok_or(ConsensusError::BadCoinbase("coinbase value overflow"))
}

/// Full validation of a non-genesis block against its parent's state.
///
/// Checks in order: height, target and proof of work, merkle root, coinbase
/// structure, every transaction in order against the state left by the
/// previous one, coinbase amount, policy bootstrap and the dependent-mining
/// window. The coinbase is applied after the other transactions, so its
/// outputs cannot be spent in the same block.
pub fn validate_block_detailed(
    block: &Block,
    parent: &LedgerState,
    config: &ChainConfig,
) -> Result<BlockOutcome, ConsensusError> {
    let height = block.header.height;
    if height != parent.height + 1 {
        return Err(ConsensusError::BadHeight { expected: parent.height + 1, found: height });
    }
    if block.header.target != config.target {
        return Err(ConsensusError::BadTarget);
    }
    if !config.target.is_met_by(&block.hash()) {
        return Err(ConsensusError::BadPoW);
    }
    if merkle_root(&block.txids()) != block.header.merkle_root {
        return Err(ConsensusError::BadMerkle);
    }
    let Some((coinbase, rest)) = block.transactions.split_first() else {
        return Err(ConsensusError::BadCoinbase("empty block"));
    };
    let coinbase_paid = check_coinbase(coinbase, height)?;

    let mut state = parent.clone();
    state.begin_block(height);
    let mut fees = 0u64;
    let mut minted = 0u64;
    for (i, tx) in rest.iter().enumerate() {
        let index = i + 1;
        if tx.is_coinbase() || tx.is_genesis() {
            return Err(ConsensusError::BadCoinbase("extra coinbase"));
        }
        let verdict = validate_tx(tx, &state).map_err(|error| ConsensusError::Tx { index, error })?;
        fees = fees.saturating_add(verdict.fee);
        minted = minted.saturating_add(verdict.minted);
        state.apply_in_place(tx);
    }

    let allowed = config.subsidy.saturating_add(fees);
    if coinbase_paid > allowed {
        return Err(ConsensusError::CoinbaseOverpay { paid: coinbase_paid, allowed });
    }
    state.apply_in_place(coinbase);

    parent.policy.bootstrap_check(height).map_err(ConsensusError::BootstrapIncomplete)?;
    state.window.advance(height, count_mgmt_txs(block), &parent.policy)?;

    Ok(BlockOutcome { state, fees, minted, coinbase_paid })
}

pub fn validate_block(block: &Block, parent: &LedgerState, config: &ChainConfig) -> Result<LedgerState, ConsensusError> {
    validate_block_detailed(block, parent, config).map(|o| o.state)
}
