use std::borrow::Cow;
use std::collections::{HashMap, HashSet};

use super::{
    deserialize_chain, make_genesis, serialize_chain, validate_block_detailed, Block, ChainConfig, ConsensusError,
};
use crate::ledger::LedgerState;
use crate::txmodel::{AccountKey, Hash32};

#[derive(Debug, Clone)]
pub struct StoredBlock {
    pub block: Block,
    pub hash: Hash32,
    /// Ledger state after this block; dropped for old blocks off the
    /// snapshot grid and rebuilt on demand.
    snapshot: Option<LedgerState>,
    pub fees: u64,
    pub minted: u64,
    pub coinbase_paid: u64,
}

impl StoredBlock {
    pub fn snapshot(&self) -> Option<&LedgerState> {
        self.snapshot.as_ref()
    }
}

/// Snapshots are kept for this many blocks below the tip...
const KEEP_RECENT: u64 = 48;
/// ...and at every height divisible by this.
const SNAPSHOT_INTERVAL: u64 = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConnectOutcome {
    AlreadyKnown,
    /// Stored on a branch that is not (yet) the best chain.
    SideBranch,
    /// Extended the current tip.
    Extended,
    /// Switched to a different branch; hashes are tip-first for `disconnected`
    /// and in connection order for `connected`.
    Reorganized { disconnected: Vec<Hash32>, connected: Vec<Hash32> },
}

/// Every validated block with its post-state, plus the current best tip.
///
/// The best tip is the valid block of greatest height; ties keep the block
/// seen first.
#[derive(Debug, Clone)]
pub struct ChainState {
    config: ChainConfig,
    genesis: Hash32,
    blocks: HashMap<Hash32, StoredBlock>,
    invalid: HashSet<Hash32>,
    tip: Hash32,
}

impl ChainState {
    pub fn new(root: AccountKey, config: ChainConfig) -> Self {
        let (block, state) = make_genesis(root, &config);
        let hash = block.hash();
        let stored = StoredBlock { block, hash, snapshot: Some(state), fees: 0, minted: 0, coinbase_paid: 0 };
        ChainState {
            config,
            genesis: hash,
            blocks: HashMap::from([(hash, stored)]),
            invalid: HashSet::new(),
            tip: hash,
        }
    }

    pub fn config(&self) -> &ChainConfig {
        &self.config
    }

    pub fn genesis_hash(&self) -> Hash32 {
        self.genesis
    }

    pub fn root(&self) -> AccountKey {
        self.blocks[&self.genesis].block.transactions[0].inputs[0].signer
    }

    pub fn tip(&self) -> &StoredBlock {
        &self.blocks[&self.tip]
    }

    pub fn tip_hash(&self) -> Hash32 {
        self.tip
    }

    pub fn height(&self) -> u64 {
        self.tip().block.height()
    }

    pub fn tip_state(&self) -> &LedgerState {
        self.tip().snapshot.as_ref().expect("tip snapshot is never pruned")
    }

    /// Ledger state after block `hash`, replayed from the nearest stored
    /// snapshot when this block's own was pruned.
    pub fn state_after(&self, hash: &Hash32) -> Option<Cow<'_, LedgerState>> {
        let mut pending = Vec::new();
        let mut cur = self.blocks.get(hash)?;
        let mut state = loop {
            if let Some(s) = &cur.snapshot {
                break s.clone();
            }
            pending.push(&cur.block);
            cur = self.blocks.get(&cur.block.header.prev_hash)?;
        };
        if pending.is_empty() {
            return cur.snapshot.as_ref().map(Cow::Borrowed);
        }
        for b in pending.into_iter().rev() {
            state = validate_block_detailed(b, &state, &self.config).expect("stored blocks are valid").state;
        }
        Some(Cow::Owned(state))
    }

    fn prune_snapshots(&mut self) {
        let floor = self.height().saturating_sub(KEEP_RECENT);
        let (genesis, tip) = (self.genesis, self.tip);
        for b in self.blocks.values_mut() {
            let h = b.block.height();
            if h < floor && h % SNAPSHOT_INTERVAL != 0 && b.hash != genesis && b.hash != tip {
                b.snapshot = None;
            }
        }
    }

    pub fn get(&self, hash: &Hash32) -> Option<&StoredBlock> {
        self.blocks.get(hash)
    }

    pub fn contains(&self, hash: &Hash32) -> bool {
        self.blocks.contains_key(hash)
    }

    pub fn is_known_invalid(&self, hash: &Hash32) -> bool {
        self.invalid.contains(hash)
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Blocks from `hash` back to genesis, tip first.
    fn ancestry(&self, hash: Hash32) -> impl Iterator<Item = &StoredBlock> + '_ {
        std::iter::successors(self.blocks.get(&hash), move |b| {
            if b.hash == self.genesis {
                None
            } else {
                self.blocks.get(&b.block.header.prev_hash)
            }
        })
    }

    /// The best chain, genesis first.
    pub fn best_chain(&self) -> Vec<&StoredBlock> {
        let mut v: Vec<_> = self.ancestry(self.tip).collect();
        v.reverse();
        v
    }

    /// Block of the best chain at `height`.
    pub fn at_height(&self, height: u64) -> Option<&StoredBlock> {
        self.ancestry(self.tip).find(|b| b.block.height() == height)
    }

    pub fn connect_block(&mut self, block: Block) -> Result<ConnectOutcome, ConsensusError> {
        let hash = block.hash();
        if self.blocks.contains_key(&hash) {
            return Ok(ConnectOutcome::AlreadyKnown);
        }
        if self.invalid.contains(&hash) {
            return Err(ConsensusError::KnownInvalid(hash));
        }
        let prev = block.header.prev_hash;
        let Some(parent) = self.state_after(&prev) else {
            return Err(ConsensusError::OrphanParent(prev));
        };
        let outcome = match validate_block_detailed(&block, &parent, &self.config) {
            Ok(o) => o,
            Err(e) => {
                self.invalid.insert(hash);
                return Err(e);
            }
        };
        let height = block.height();
        self.blocks.insert(
            hash,
            StoredBlock {
                block,
                hash,
                snapshot: Some(outcome.state),
                fees: outcome.fees,
                minted: outcome.minted,
                coinbase_paid: outcome.coinbase_paid,
            },
        );
        if height <= self.height() {
            return Ok(ConnectOutcome::SideBranch);
        }
        let old_tip = self.tip;
        self.tip = hash;
        if height.is_multiple_of(SNAPSHOT_INTERVAL) {
            self.prune_snapshots();
        }
        if prev == old_tip {
            return Ok(ConnectOutcome::Extended);
        }
        let new_branch: Vec<Hash32> = self.ancestry(hash).map(|b| b.hash).collect();
        let old_branch: Vec<Hash32> = self.ancestry(old_tip).map(|b| b.hash).collect();
        let old_set: HashSet<_> = old_branch.iter().copied().collect();
        let fork = *new_branch.iter().find(|h| old_set.contains(h)).expect("branches share genesis");
        let disconnected = old_branch.iter().take_while(|h| **h != fork).copied().collect();
        let mut connected: Vec<_> = new_branch.iter().take_while(|h| **h != fork).copied().collect();
        connected.reverse();
        Ok(ConnectOutcome::Reorganized { disconnected, connected })
    }

    /// Best-chain blocks encoded back to back, genesis first.
    pub fn to_chain_file(&self) -> Vec<u8> {
        serialize_chain(self.best_chain().into_iter().map(|b| &b.block))
    }

    /// Rebuilds and fully validates a chain from its file encoding. The
    /// target is taken from the genesis header; the rest of `config` applies.
    pub fn from_chain_file(bytes: &[u8], config: ChainConfig) -> Result<ChainState, ConsensusError> {
        let blocks = deserialize_chain(bytes)?;
        Self::from_blocks(blocks, config)
    }

    pub fn from_blocks(blocks: Vec<Block>, mut config: ChainConfig) -> Result<ChainState, ConsensusError> {
        let mut iter = blocks.into_iter();
        let genesis = iter.next().ok_or(ConsensusError::NotGenesis)?;
        let root = match genesis.transactions.as_slice() {
            [tx] if tx.is_genesis() && genesis.header.height == 0 => tx.inputs[0].signer,
            _ => return Err(ConsensusError::NotGenesis),
        };
        config.target = genesis.header.target;
        let chain = ChainState::new(root, config);
        if chain.genesis != genesis.hash() {
            return Err(ConsensusError::NotGenesis);
        }
        iter.try_fold(chain, |mut chain, b| {
            chain.connect_block(b)?;
            Ok(chain)
        })
    }

    /// Replays the best chain from genesis and returns the resulting state.
    pub fn replay_best_chain(&self) -> Result<LedgerState, ConsensusError> {
        let blocks: Vec<Block> = self.best_chain().into_iter().map(|b| b.block.clone()).collect();
        let replayed = Self::from_blocks(blocks, self.config.clone())?;
        Ok(replayed.tip_state().clone())
    }
}
