//! Dependent-mining windows: under dependent mining every window of `y`
//! blocks must carry at least `x` management transactions.
//!
//! Windows are contiguous and start at height 1. The parameters of a window
//! are read from the policy in force before its first block. While mining is
//! independent a window is a single unchecked block, so switching to
//! dependent mining takes effect at the next block.

use super::{Block, ConsensusError};
use crate::policy::{PolicyParam, PolicyState};

/// Management transactions in a block, not counting the genesis grant.
pub fn count_mgmt_txs(block: &Block) -> u32 {
    block
        .transactions
        .iter()
        .filter(|tx| tx.is_management() && !tx.is_genesis())
        .count() as u32
}

/// Checks per-block counts for heights `1..=counts.len()` against fixed
/// `x` and `y`. Windows are numbered from 1; a trailing incomplete window is
/// not checked.
pub fn dependent_window_check(counts: &[u32], x: u32, y: u32) -> Result<(), ConsensusError> {
    if y == 0 {
        return Ok(());
    }
    for (i, window) in counts.chunks(y as usize).enumerate() {
        if window.len() < y as usize {
            break;
        }
        let found: u32 = window.iter().sum();
        if found < x {
            return Err(ConsensusError::WindowViolation { window: i as u64 + 1, found, required: x });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowState {
    /// Height at which the next window opens.
    pub next_start: u64,
    pub start: u64,
    pub len: u64,
    pub required: u32,
    pub dependent: bool,
    pub found: u32,
    /// Windows completed so far.
    pub completed: u64,
}

impl Default for WindowState {
    fn default() -> Self {
        WindowState { next_start: 1, start: 0, len: 0, required: 0, dependent: false, found: 0, completed: 0 }
    }
}

impl WindowState {
    /// True if the block at `height` closes the current (or opening) window.
    pub fn completes_at(&self, height: u64, policy_before: &PolicyState) -> bool {
        if height == self.next_start {
            let len = window_len(policy_before);
            return len == 1;
        }
        self.len > 0 && height == self.start + self.len - 1
    }

    /// Accounts for the block at `height` with `count` management transactions.
    pub fn advance(&mut self, height: u64, count: u32, policy_before: &PolicyState) -> Result<(), ConsensusError> {
        if height == self.next_start {
            self.start = height;
            self.dependent = policy_before.is_dependent();
            self.len = window_len(policy_before);
            self.required = if self.dependent { policy_before.effective(PolicyParam::MgmtTxCountX) } else { 0 };
            self.found = 0;
        }
        self.found = self.found.saturating_add(count);
        if height == self.start + self.len - 1 {
            self.completed += 1;
            self.next_start = height + 1;
            if self.dependent && self.found < self.required {
                return Err(ConsensusError::WindowViolation {
                    window: self.completed,
                    found: self.found,
                    required: self.required,
                });
            }
        }
        Ok(())
    }
}

fn window_len(policy: &PolicyState) -> u64 {
    if policy.is_dependent() {
        u64::from(policy.effective(PolicyParam::MgmtIntervalY).max(1))
    } else {
        1
    }
}
