//! Account-level rule oracle.
//!
//! Tracks each account as a handful of plain fields (role bits, lock flag,
//! parent, coinbase-origin coin, ordinary coin) and decides operations from
//! the written rules alone. It never sees outputs, outpoints or signatures,
//! so it shares no code path with the ledger it is compared against.

pub const U: u8 = 1;
pub const A: u8 = 2;
pub const C: u8 = 4;
pub const L: u8 = 8;
pub const M: u8 = 16;
pub const ALL: u8 = U | A | C | L | M;

pub const MINING_MODE: u8 = 0;
pub const INTERVAL_Y: u8 = 2;
pub const MINT_CAP: u8 = 3;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Account {
    pub roles: u8,
    pub locked: bool,
    /// Has ever held a role output.
    pub record: bool,
    pub parent: Option<usize>,
    pub coinbase_coin: u64,
    pub coin: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Param {
    pub value: u32,
    pub permanent: bool,
    pub depth: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Op {
    /// Credits coinbase-origin coin; not a transaction under test.
    Coinbase { to: usize, amount: u64 },
    /// Spends all of `from`'s coinbase-origin coin: `amount` to `to`, the
    /// rest back to `from` as ordinary coin.
    PayCoinbase { from: usize, to: usize, amount: u64 },
    /// Spends ordinary coin; change stays ordinary.
    Pay { from: usize, to: usize, amount: u64, fee: u64 },
    /// Spends one of `by`'s ordinary coins and returns it whole, plus `amount` new coin to `to`.
    Mint { by: usize, to: usize, amount: u64 },
    /// Moves every coin of `victim` to `to`.
    Seize { by: usize, victim: usize, to: usize },
    /// Spends `victim`'s coin with `by`'s signature and no override.
    Steal { by: usize, victim: usize },
    SetRoles { by: usize, target: usize, roles: u8, locked: bool },
    SelfRemove { by: usize },
    Policy { by: usize, items: Vec<(u8, u32, bool)> },
    /// Resubmits an earlier accepted transaction.
    Replay { index: usize },
}

#[derive(Debug, Clone)]
pub struct Model {
    pub accounts: Vec<Account>,
    pub params: [Option<Param>; 4],
    pub y_min: u32,
}

impl Model {
    /// Account 0 is the root and holds every role.
    pub fn new(n: usize, y_min: u32) -> Model {
        let mut accounts = vec![Account::default(); n];
        accounts[0].roles = ALL;
        accounts[0].record = true;
        Model { accounts, params: [None; 4], y_min }
    }

    fn registered(&self, i: usize) -> bool {
        i == 0 || self.accounts[i].parent.is_some()
    }

    fn depth(&self, mut i: usize) -> u32 {
        let mut d = 0;
        while let Some(p) = self.accounts[i].parent {
            i = p;
            d += 1;
        }
        d
    }

    /// Is `a` equal to `i` or above it?
    fn above_or_same(&self, a: usize, mut i: usize) -> bool {
        loop {
            if i == a {
                return true;
            }
            match self.accounts[i].parent {
                Some(p) => i = p,
                None => return false,
            }
        }
    }

    fn in_subtree(&self, top: usize, i: usize) -> bool {
        self.registered(top) && self.registered(i) && self.above_or_same(top, i)
    }

    /// Subtree of the closest account at or above `i` holding M.
    pub fn in_law_scope(&self, i: usize, target: usize) -> bool {
        let mut at = i;
        loop {
            if self.accounts[at].roles & M != 0 {
                return self.in_subtree(at, target);
            }
            match self.accounts[at].parent {
                Some(p) => at = p,
                None => return false,
            }
        }
    }

    fn cap(&self) -> u64 {
        self.params[MINT_CAP as usize].map_or(u64::from(u32::MAX), |p| u64::from(p.value))
    }

    /// Would the ledger accept `op`? `None` for operations that are not a verdict.
    pub fn accepts(&self, op: &Op) -> Option<bool> {
        let acct = |i: usize| &self.accounts[i];
        Some(match *op {
            Op::Coinbase { .. } => return None,
            Op::Replay { .. } => false,
            Op::Steal { .. } => false,
            Op::PayCoinbase { from, .. } => !acct(from).locked,
            Op::Pay { from, .. } => !acct(from).locked && acct(from).roles & U != 0,
            Op::Mint { by, amount, .. } => {
                !acct(by).locked && acct(by).roles & C != 0 && amount <= self.cap()
            }
            Op::Seize { by, victim, .. } => {
                !acct(by).locked && acct(by).roles & L != 0 && self.in_law_scope(by, victim)
            }
            Op::SelfRemove { by } => !acct(by).locked,
            Op::SetRoles { by, target, roles, locked } => self.role_change_ok(by, target, roles, locked),
            Op::Policy { by, ref items } => self.policy_ok(by, items),
        })
    }

    fn role_change_ok(&self, by: usize, target: usize, roles: u8, locked: bool) -> bool {
        let issuer = &self.accounts[by];
        let old = &self.accounts[target];
        if issuer.locked || (old.roles == roles && old.locked == locked) {
            return false;
        }
        if old.locked != locked && (issuer.roles & L == 0 || !self.in_law_scope(by, target)) {
            return false;
        }
        if old.roles == roles {
            return true;
        }
        let adopting = old.roles == 0;
        if issuer.roles & M != 0 {
            if !adopting && !self.in_subtree(by, target) {
                return false;
            }
        } else if issuer.roles & A != 0 {
            if (old.roles ^ roles) & !U != 0 {
                return false;
            }
            if !adopting && !self.in_subtree(by, target) {
                return false;
            }
        } else {
            return false;
        }
        // adopting an account at or above the issuer would close a loop
        !(adopting && roles != 0 && self.registered(target) && self.above_or_same(target, by))
    }

    fn policy_ok(&self, by: usize, items: &[(u8, u32, bool)]) -> bool {
        let issuer = &self.accounts[by];
        if issuer.locked || issuer.roles & M == 0 {
            return false;
        }
        let depth = self.depth(by);
        let mut seen = Vec::new();
        for &(id, value, _) in items {
            if id > 3 || seen.contains(&id) {
                return false;
            }
            seen.push(id);
            if let Some(p) = self.params[id as usize] {
                if p.permanent || depth > p.depth {
                    return false;
                }
            }
            if (id == MINING_MODE && value > 1) || (id == INTERVAL_Y && value < self.y_min) {
                return false;
            }
        }
        true
    }

    /// Applies an accepted operation.
    pub fn apply(&mut self, op: &Op) {
        match *op {
            Op::Coinbase { to, amount } => self.accounts[to].coinbase_coin += amount,
            Op::Replay { .. } | Op::Steal { .. } => {}
            Op::PayCoinbase { from, to, amount } => {
                let all = std::mem::take(&mut self.accounts[from].coinbase_coin);
                self.accounts[from].coin += all - amount;
                self.accounts[to].coin += amount;
            }
            Op::Pay { from, to, amount, fee } => {
                self.accounts[from].coin -= amount + fee;
                self.accounts[to].coin += amount;
            }
            Op::Mint { to, amount, .. } => self.accounts[to].coin += amount,
            Op::Seize { victim, to, .. } => {
                let v = &mut self.accounts[victim];
                let all = std::mem::take(&mut v.coin) + std::mem::take(&mut v.coinbase_coin);
                self.accounts[to].coin += all;
            }
            Op::SelfRemove { by } => self.accounts[by].roles = 0,
            Op::SetRoles { by, target, roles, locked } => {
                let t = &mut self.accounts[target];
                if t.roles == 0 && roles != 0 && target != 0 {
                    t.parent = Some(by);
                }
                t.roles = roles;
                t.locked = locked;
                t.record = true;
            }
            Op::Policy { by, ref items } => {
                let depth = self.depth(by);
                for &(id, value, permanent) in items {
                    self.params[id as usize] = Some(Param { value, permanent, depth });
                }
            }
        }
    }
}
