use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::script::{Action, Behavior, Event, Latency, ScriptError, Settings, SimConfig, TxOpts, When, SIM};
use super::SimError;
use crate::consensus::{mine_block, Block, BlockTemplate, ChainState, ConnectOutcome};
use crate::hierarchy::export_dot;
use crate::ledger::{validate_tx, LedgerError, LedgerState};
use crate::txmodel::{AccountKey, Hash32, Keypair, RolePayload, Transaction, Txid};
use crate::wallet::{self, BuildError};

/// Drain phase limit, in ticks past the horizon.
const DRAIN_LIMIT: u64 = 5_000;

#[derive(Debug, Clone)]
enum Msg {
    Tx { tx: Transaction, private: bool, replay: Option<usize> },
    Block(Block),
    GetBlock(Hash32),
}

#[derive(Debug, Clone)]
struct Delivery {
    from: usize,
    to: usize,
    msg: Msg,
}

/// One participant: a key, a behavior and its own view of the network.
#[derive(Debug, Clone)]
pub struct Node {
    pub name: String,
    pub label: String,
    pub key: Keypair,
    pub behavior: Behavior,
    pub share: f64,
    pub chain: ChainState,
    mempool: Vec<Transaction>,
    /// Transactions this node keeps to itself.
    private: Vec<Transaction>,
    private_ids: HashSet<Txid>,
    orphans: Vec<Transaction>,
    /// Every transaction offered through gossip; repeats are dropped.
    seen: HashSet<Txid>,
    orphan_blocks: BTreeMap<Hash32, Vec<Block>>,
    keepalive: Option<Option<usize>>,
    outstanding: Option<Txid>,
    idle_height: u64,
    replay_delay: Option<u64>,
    replay_queue: Vec<(u64, Transaction)>,
    replay_seen: HashSet<Txid>,
}

impl Node {
    pub fn account(&self) -> AccountKey {
        self.key.account()
    }

    pub fn tip_state(&self) -> &LedgerState {
        self.chain.tip_state()
    }

    pub fn mempool(&self) -> &[Transaction] {
        &self.mempool
    }

    fn holds(&self, txid: &Txid) -> bool {
        self.mempool.iter().chain(&self.private).chain(&self.orphans).any(|t| t.txid() == *txid)
    }

    /// Tip state with every pooled transaction applied.
    pub fn overlay(&self) -> LedgerState {
        let mut s = self.tip_state().clone();
        s.begin_block(s.height + 1);
        for tx in self.mempool.iter().chain(&self.private) {
            if validate_tx(tx, &s).is_ok() {
                s.apply_in_place(tx);
            }
        }
        s
    }

    /// Re-validates every pooled transaction against the current tip,
    /// putting `returning` (from disconnected blocks) first.
    fn refresh_pools(&mut self, returning: Vec<Transaction>) {
        let mut candidates = returning;
        candidates.append(&mut self.mempool);
        candidates.append(&mut self.private);
        candidates.append(&mut self.orphans);
        let mut state = self.tip_state().clone();
        state.begin_block(state.height + 1);
        let mut progress = true;
        while progress {
            progress = false;
            let mut waiting = Vec::new();
            for tx in candidates {
                match validate_tx(&tx, &state) {
                    Ok(_) => {
                        state.apply_in_place(&tx);
                        if self.private_ids.contains(&tx.txid()) {
                            self.private.push(tx);
                        } else {
                            self.mempool.push(tx);
                        }
                        progress = true;
                    }
                    Err(LedgerError::UnknownUtxo(_)) => waiting.push(tx),
                    Err(_) => {}
                }
            }
            candidates = waiting;
        }
        self.orphans = candidates;
    }

    /// True if `tx` appears in the best chain.
    pub fn confirmed(&self, txid: &Txid) -> bool {
        self.chain.best_chain().iter().any(|b| b.block.transactions.iter().any(|t| t.txid() == *txid))
    }
}

/// What became of a labelled transaction at its author.
#[derive(Debug, Clone)]
pub struct Labelled {
    pub tx: Transaction,
    pub author: usize,
    pub verdict: Result<(), &'static str>,
}

#[derive(Debug, Clone, Default)]
pub struct ReplayRecord {
    pub txid: Txid,
    pub tick: u64,
    pub rejected: usize,
    pub accepted: usize,
}

/// The whole network and its event loop.
#[derive(Debug, Clone)]
pub struct Sim {
    pub settings: Settings,
    pub nodes: Vec<Node>,
    pub index: BTreeMap<String, usize>,
    pub tick: u64,
    pub labels: BTreeMap<String, Labelled>,
    pub replays: Vec<ReplayRecord>,
    pub trace: Vec<String>,
    rng: ChaCha8Rng,
    queue: BTreeMap<(u64, u64), Delivery>,
    seq: u64,
    groups: Option<Vec<usize>>,
    root: usize,
}

fn script_err(e: &Event, msg: impl Into<String>) -> SimError {
    SimError::Script(ScriptError { line: e.line, msg: msg.into() })
}

impl Sim {
    /// Spawns the agents declared at tick 0. Everything else stays queued in
    /// `config.events`.
    pub fn new(config: &SimConfig) -> Result<Sim, SimError> {
        let settings = config.settings.clone();
        let spawns: Vec<&Event> = config.events.iter().filter(|e| matches!(e.action, Action::Spawn { .. })).collect();
        let roots: Vec<&Event> = spawns.iter().copied().filter(|e| matches!(e.action, Action::Spawn { behavior: Behavior::Root, .. })).collect();
        let root_event = match roots.as_slice() {
            [one] => one,
            [] => return Err(SimError::Script(ScriptError { line: 0, msg: "no `root` agent spawned".into() })),
            [_, second, ..] => return Err(script_err(second, "only one `root` agent is allowed")),
        };
        let root_name = root_event.actor.clone();
        let root_key = Keypair::derive(&root_name);
        let chain = ChainState::new(root_key.account(), settings.chain.clone());

        let mut nodes = Vec::new();
        let mut index = BTreeMap::new();
        for e in spawns {
            let Action::Spawn { behavior, share, label, replay_delay } = &e.action else { unreachable!() };
            if e.actor == SIM || index.contains_key(&e.actor) {
                return Err(script_err(e, format!("agent `{}` spawned twice", e.actor)));
            }
            if *share > 0.0 && !behavior.is_miner() {
                return Err(script_err(e, "only miners take a hash share"));
            }
            index.insert(e.actor.clone(), nodes.len());
            nodes.push(Node {
                name: e.actor.clone(),
                label: label.clone().unwrap_or_else(|| e.actor.clone()),
                key: Keypair::derive(&e.actor),
                behavior: *behavior,
                share: *share,
                chain: chain.clone(),
                mempool: Vec::new(),
                private: Vec::new(),
                private_ids: HashSet::new(),
                orphans: Vec::new(),
                seen: HashSet::new(),
                orphan_blocks: BTreeMap::new(),
                keepalive: None,
                outstanding: None,
                idle_height: 0,
                replay_delay: *replay_delay,
                replay_queue: Vec::new(),
                replay_seen: HashSet::new(),
            });
        }
        let root = index[&root_name];
        Ok(Sim {
            rng: ChaCha8Rng::seed_from_u64(settings.seed),
            settings,
            nodes,
            index,
            tick: 0,
            labels: BTreeMap::new(),
            replays: Vec::new(),
            trace: Vec::new(),
            queue: BTreeMap::new(),
            seq: 0,
            groups: None,
            root,
        })
    }

    /// The node whose view is used for DOT and chain-file output.
    pub fn observer(&self) -> &Node {
        &self.nodes[self.root]
    }

    pub fn node(&self, name: &str) -> Option<&Node> {
        self.index.get(name).map(|i| &self.nodes[*i])
    }

    pub fn name_of(&self, key: &AccountKey) -> String {
        self.nodes.iter().find(|n| n.account() == *key).map_or_else(|| key.short(), |n| n.name.clone())
    }

    pub fn agent_of(&self, key: &AccountKey) -> Option<&Node> {
        self.nodes.iter().find(|n| n.account() == *key)
    }

    fn log(&mut self, node: &str, event: &str, fields: &str) {
        let mut line = format!("tick={} node={} event={}", self.tick, node, event);
        if !fields.is_empty() {
            line.push(' ');
            line.push_str(fields);
        }
        self.trace.push(line);
    }

    fn latency(&mut self) -> u64 {
        match self.settings.latency {
            Latency::Fixed(n) => n.max(1),
            Latency::Uniform(a, b) => self.rng.gen_range(a..=b).max(1),
        }
    }

    fn send(&mut self, from: usize, to: usize, msg: Msg) {
        let at = self.tick + self.latency();
        self.seq += 1;
        self.queue.insert((at, self.seq), Delivery { from, to, msg });
    }

    fn broadcast(&mut self, from: usize, except: Option<usize>, msg: &Msg) {
        for to in 0..self.nodes.len() {
            if to != from && Some(to) != except {
                self.send(from, to, msg.clone());
            }
        }
    }

    fn connected(&self, a: usize, b: usize) -> bool {
        self.groups.as_ref().is_none_or(|g| g[a] == g[b])
    }

    // ---- transactions ----

    /// Offers `tx` to node `n`. Returns the node's verdict. Replays skip the
    /// seen-set so that every node judges them afresh.
    fn receive_tx(&mut self, n: usize, from: Option<usize>, tx: Transaction, private: bool, replay: Option<usize>) -> Result<(), LedgerError> {
        if !self.nodes[n].seen.insert(tx.txid()) && replay.is_none() {
            return Ok(());
        }
        self.admit(n, from, tx, private, replay)
    }

    fn admit(&mut self, n: usize, from: Option<usize>, tx: Transaction, private: bool, replay: Option<usize>) -> Result<(), LedgerError> {
        let txid = tx.txid();
        if self.nodes[n].holds(&txid) {
            return Ok(());
        }
        let overlay = self.nodes[n].overlay();
        let verdict = validate_tx(&tx, &overlay);
        let name = self.nodes[n].name.clone();
        let fields = format!("txid={} mode={}", txid.short(), tx.mode().map_or("?".into(), |m| m.to_string()));
        match &verdict {
            Ok(_) => {
                let node = &mut self.nodes[n];
                let keep_private = private || (node.behavior == Behavior::FavoredMiner && tx.is_management());
                if keep_private {
                    node.private_ids.insert(txid);
                    node.private.push(tx.clone());
                } else {
                    node.mempool.push(tx.clone());
                }
                self.log(&name, if keep_private { "tx-held" } else { "tx-accepted" }, &fields);
                if !keep_private {
                    self.broadcast(n, from, &Msg::Tx { tx, private: false, replay: None });
                }
                self.retry_orphans(n);
            }
            Err(LedgerError::UnknownUtxo(_)) if replay.is_none() => {
                self.nodes[n].orphans.push(tx);
                self.log(&name, "tx-orphaned", &fields);
            }
            Err(e) => {
                self.log(&name, "tx-rejected", &format!("{fields} code={}", e.code()));
            }
        }
        if let Some(i) = replay {
            let r = &mut self.replays[i];
            if verdict.is_ok() {
                r.accepted += 1;
            } else {
                r.rejected += 1;
            }
        }
        verdict.map(|_| ())
    }

    fn retry_orphans(&mut self, n: usize) {
        if self.nodes[n].orphans.is_empty() {
            return;
        }
        let orphans = std::mem::take(&mut self.nodes[n].orphans);
        for tx in orphans {
            let _ = self.admit(n, None, tx, false, None);
        }
    }

    // ---- blocks ----

    fn receive_block(&mut self, n: usize, from: Option<usize>, block: Block) {
        let hash = block.hash();
        if self.nodes[n].chain.contains(&hash) || self.nodes[n].chain.is_known_invalid(&hash) {
            return;
        }
        let prev = block.header.prev_hash;
        let name = self.nodes[n].name.clone();
        if !self.nodes[n].chain.contains(&prev) {
            let waiting = self.nodes[n].orphan_blocks.entry(prev).or_default();
            if waiting.iter().any(|b| b.hash() == hash) {
                return;
            }
            waiting.push(block);
            self.log(&name, "block-orphaned", &format!("hash={} missing={}", hash.short(), prev.short()));
            if let Some(f) = from {
                self.send(n, f, Msg::GetBlock(prev));
            }
            return;
        }
        let miner = block.transactions.first().and_then(|cb| cb.outputs.first()).map(|o| self.name_of(&o.recipient)).unwrap_or_default();
        let fields = format!(
            "height={} hash={} miner={} txs={}",
            block.height(),
            hash.short(),
            miner,
            block.transactions.len()
        );
        match self.nodes[n].chain.connect_block(block.clone()) {
            Ok(ConnectOutcome::AlreadyKnown) => return,
            Ok(ConnectOutcome::SideBranch) => self.log(&name, "block-side", &fields),
            Ok(ConnectOutcome::Extended) => {
                self.log(&name, "block-accepted", &fields);
                self.nodes[n].refresh_pools(Vec::new());
                self.note_new_blocks(n, &[hash]);
            }
            Ok(ConnectOutcome::Reorganized { disconnected, connected }) => {
                self.log(&name, "reorg", &format!("{fields} dropped={} added={}", disconnected.len(), connected.len()));
                let node = &mut self.nodes[n];
                let mut returning = Vec::new();
                for h in disconnected.iter().rev() {
                    let b = &node.chain.get(h).expect("stored").block;
                    returning.extend(b.transactions.iter().skip(1).cloned());
                }
                node.refresh_pools(returning);
                self.note_new_blocks(n, &connected);
            }
            Err(e) => {
                self.log(&name, "block-rejected", &format!("{fields} code={}", e.code()));
                return;
            }
        }
        self.broadcast(n, from, &Msg::Block(block));
        if let Some(children) = self.nodes[n].orphan_blocks.remove(&hash) {
            for child in children {
                self.receive_block(n, from, child);
            }
        }
    }

    /// Lets a replayer note management transactions in newly connected blocks.
    fn note_new_blocks(&mut self, n: usize, hashes: &[Hash32]) {
        let Some(delay) = self.nodes[n].replay_delay else { return };
        if self.nodes[n].behavior != Behavior::Replayer {
            return;
        }
        let at = self.tick + delay;
        let node = &mut self.nodes[n];
        for h in hashes {
            let txs: Vec<Transaction> = node.chain.get(h).expect("stored").block.transactions.clone();
            for tx in txs.into_iter().filter(|t| t.is_management() && !t.is_genesis()) {
                if node.replay_seen.insert(tx.txid()) {
                    node.replay_queue.push((at, tx));
                }
            }
        }
    }

    fn replay(&mut self, n: usize, tx: Transaction) {
        let txid = tx.txid();
        let id = self.replays.len();
        self.replays.push(ReplayRecord { txid, tick: self.tick, ..ReplayRecord::default() });
        let name = self.nodes[n].name.clone();
        self.log(&name, "replay", &format!("txid={}", txid.short()));
        let _ = self.receive_tx(n, None, tx.clone(), false, Some(id));
        self.broadcast(n, None, &Msg::Tx { tx, private: false, replay: Some(id) });
    }

    fn deliver(&mut self, d: Delivery) {
        if !self.connected(d.from, d.to) {
            return;
        }
        match d.msg {
            Msg::Tx { tx, private, replay } => {
                let _ = self.receive_tx(d.to, Some(d.from), tx, private, replay);
            }
            Msg::Block(b) => self.receive_block(d.to, Some(d.from), b),
            Msg::GetBlock(h) => {
                if let Some(b) = self.nodes[d.to].chain.get(&h) {
                    let b = b.block.clone();
                    self.send(d.to, d.from, Msg::Block(b));
                }
            }
        }
    }

    fn deliver_due(&mut self) {
        while let Some(entry) = self.queue.first_entry() {
            if entry.key().0 > self.tick {
                break;
            }
            let d = entry.remove();
            self.deliver(d);
        }
    }

    // ---- scripted actions ----

    fn resolve(&self, e: &Event, name: &str) -> Result<usize, SimError> {
        let name = if name == "self" { e.actor.as_str() } else { name };
        self.index.get(name).copied().ok_or_else(|| script_err(e, format!("unknown agent `{name}`")))
    }

    fn build(&self, e: &Event, n: usize) -> Result<Option<(Transaction, TxOpts)>, SimError> {
        let node = &self.nodes[n];
        let state = node.overlay();
        let key = &node.key;
        let build_err = |err: BuildError| script_err(e, format!("cannot build transaction: {err}"));
        let account = |name: &str| self.resolve(e, name).map(|i| self.nodes[i].account());
        let (tx, opts) = match &e.action {
            Action::Policy { payloads, opts } => (wallet::policy_change(&state, key, payloads, opts.fee), opts),
            Action::SetRoles { target, roles, opts } => {
                let t = account(target)?;
                let locked = state.roles.is_locked(&t);
                (wallet::role_change(&state, key, &[(t, RolePayload::new(*roles, locked))], opts.fee), opts)
            }
            Action::Lock { target, locked, opts } => {
                let t = account(target)?;
                let roles = state.roles.roles(&t);
                (wallet::role_change(&state, key, &[(t, RolePayload::new(roles, *locked))], opts.fee), opts)
            }
            Action::Pay { target, amount, coins, opts } => {
                let t = account(target)?;
                (wallet::transfer(&state, key, *coins, &[(t, *amount)], opts.fee), opts)
            }
            Action::Mint { target, amount, opts } => {
                let t = account(target)?;
                (wallet::mint(&state, key, &[(t, *amount)]), opts)
            }
            Action::Seize { victim, target, amount, opts } => {
                let (v, t) = (account(victim)?, account(target)?);
                (wallet::law_move(&state, key, &v, &t, *amount), opts)
            }
            Action::Heartbeat { opts } => (wallet::role_change(&state, key, &[], opts.fee), opts),
            _ => return Ok(None),
        };
        Ok(Some((tx.map_err(build_err)?, opts.clone())))
    }

    fn run_action(&mut self, e: &Event) -> Result<(), SimError> {
        if e.actor == SIM {
            return match &e.action {
                Action::Partition { groups } => {
                    let mut assign = vec![groups.len(); self.nodes.len()];
                    for (g, members) in groups.iter().enumerate() {
                        for m in members {
                            assign[self.resolve(e, m)?] = g;
                        }
                    }
                    self.groups = Some(assign);
                    let desc: Vec<String> = groups.iter().map(|g| g.join(",")).collect();
                    self.log(SIM, "partition", &format!("groups={}", desc.join("/")));
                    Ok(())
                }
                Action::Heal => {
                    self.groups = None;
                    self.log(SIM, "heal", "");
                    for n in 0..self.nodes.len() {
                        let tip = self.nodes[n].chain.tip().block.clone();
                        self.broadcast(n, None, &Msg::Block(tip));
                        let pool = self.nodes[n].mempool.clone();
                        for tx in pool {
                            self.broadcast(n, None, &Msg::Tx { tx, private: false, replay: None });
                        }
                    }
                    Ok(())
                }
                Action::Assert(p) => super::check::assert(self, e, p),
                _ => Err(script_err(e, "not a network action")),
            };
        }
        let n = self.resolve(e, &e.actor)?;
        match &e.action {
            Action::Spawn { .. } => Ok(()),
            Action::Keepalive { via } => {
                let via = via.as_deref().map(|v| self.resolve(e, v)).transpose()?;
                self.nodes[n].keepalive = Some(via);
                let name = self.nodes[n].name.clone();
                let to = via.map_or("all".to_string(), |v| self.nodes[v].name.clone());
                self.log(&name, "keepalive", &format!("via={to}"));
                Ok(())
            }
            Action::Replay { label } => {
                let tx = self.labels.get(label).ok_or_else(|| script_err(e, format!("unknown label `{label}`")))?.tx.clone();
                self.replay(n, tx);
                Ok(())
            }
            _ => {
                let (tx, opts) = self.build(e, n)?.expect("transaction action");
                let name = self.nodes[n].name.clone();
                let mut fields = format!("txid={} action={}", tx.txid().short(), action_name(&e.action));
                if let Some(l) = &opts.label {
                    let _ = write!(fields, " label={l}");
                }
                self.log(&name, "submit", &fields);
                let verdict = self.receive_tx(n, None, tx.clone(), false, None);
                if let Some(l) = opts.label {
                    if self.labels.contains_key(&l) {
                        return Err(script_err(e, format!("label `{l}` used twice")));
                    }
                    self.labels.insert(l, Labelled { tx, author: n, verdict: verdict.map_err(|e| e.code()) });
                }
                Ok(())
            }
        }
    }

    // ---- automatic behaviour ----

    fn keepalive(&mut self, n: usize) {
        let Some(via) = self.nodes[n].keepalive else { return };
        if let Some(txid) = self.nodes[n].outstanding {
            if self.nodes[n].holds(&txid) {
                return;
            }
        }
        let node = &self.nodes[n];
        let Ok(tx) = wallet::role_change(&node.overlay(), &node.key, &[], 0) else { return };
        let txid = tx.txid();
        let name = node.name.clone();
        self.nodes[n].outstanding = Some(txid);
        match via {
            Some(v) => {
                self.log(&name, "heartbeat", &format!("txid={} to={}", txid.short(), self.nodes[v].name));
                self.nodes[n].private_ids.insert(txid);
                let _ = self.receive_tx(n, None, tx.clone(), true, None);
                self.send(n, v, Msg::Tx { tx, private: true, replay: None });
            }
            None => {
                self.log(&name, "heartbeat", &format!("txid={} to=all", txid.short()));
                let _ = self.receive_tx(n, None, tx, false, None);
            }
        }
    }

    fn replay_due(&mut self, n: usize) {
        let tick = self.tick;
        let queue = std::mem::take(&mut self.nodes[n].replay_queue);
        let (due, later): (Vec<_>, Vec<_>) = queue.into_iter().partition(|(at, _)| *at <= tick);
        self.nodes[n].replay_queue = later;
        for (_, tx) in due {
            self.replay(n, tx);
        }
    }

    fn try_mine(&mut self, n: usize) {
        let p = (self.settings.block_rate * self.nodes[n].share).clamp(0.0, 1.0);
        if p <= 0.0 || !self.rng.gen_bool(p) {
            return;
        }
        let seed: u64 = self.rng.gen();
        let node = &self.nodes[n];
        let parent = node.tip_state();
        let tip = node.chain.tip_hash();
        let mut template = BlockTemplate::assemble(tip, parent, &node.mempool);
        let mut check = template.preflight(parent);
        if check.is_err() && node.behavior == Behavior::FavoredMiner && !node.private.is_empty() {
            let with_private: Vec<Transaction> = node.private.iter().chain(&node.mempool).cloned().collect();
            template = BlockTemplate::assemble(tip, parent, &with_private);
            check = template.preflight(parent);
        }
        if let Err(e) = check {
            if self.nodes[n].idle_height != template.height {
                self.nodes[n].idle_height = template.height;
                let name = self.nodes[n].name.clone();
                self.log(&name, "idle", &format!("height={} reason={}", template.height, e.code()));
            }
            return;
        }
        let block = mine_block(&template, self.nodes[n].account(), self.nodes[n].chain.config(), seed);
        let name = self.nodes[n].name.clone();
        self.log(&name, "mined", &format!("height={} hash={}", block.height(), block.hash().short()));
        self.receive_block(n, None, block);
    }

    fn step(&mut self, events: &[&Event], mining: bool) -> Result<(), SimError> {
        self.deliver_due();
        for e in events {
            self.run_action(e)?;
        }
        for n in 0..self.nodes.len() {
            self.keepalive(n);
            self.replay_due(n);
        }
        if mining {
            for n in 0..self.nodes.len() {
                if self.nodes[n].behavior.is_miner() {
                    self.try_mine(n);
                }
            }
        }
        Ok(())
    }

    fn settled(&self) -> bool {
        let tip = self.nodes[0].chain.tip_hash();
        self.queue.is_empty() && self.nodes.iter().all(|n| n.chain.tip_hash() == tip)
    }

    /// Runs every scripted event, then drains the network, then checks the
    /// `end` assertions.
    pub fn run(&mut self, config: &SimConfig) -> Result<(), SimError> {
        let spawned: BTreeSet<&str> = self.index.keys().map(String::as_str).collect();
        self.log(SIM, "start", &format!("seed={} agents={}", self.settings.seed, spawned.len()));
        let mut timed = config.events.iter().filter(|e| e.when != When::End).peekable();
        for tick in 0..self.settings.ticks {
            self.tick = tick;
            let mut now = Vec::new();
            while let Some(e) = timed.next_if(|e| e.when <= When::At(tick)) {
                now.push(e);
            }
            self.step(&now, true)?;
        }
        if let Some(e) = timed.next() {
            return Err(script_err(e, format!("event after the last tick ({})", self.settings.ticks)));
        }
        // drain: stop scripted events, keep delivering and mining until
        // every node agrees on one tip
        let horizon = self.settings.ticks;
        self.tick = horizon;
        while !self.settled() && self.tick < horizon + DRAIN_LIMIT {
            let mining = !self.queue.is_empty() || self.groups.is_none();
            self.step(&[], mining && self.queue.is_empty())?;
            self.tick += 1;
        }
        self.log(SIM, "drained", &format!("settled={}", self.settled()));
        for e in config.events.iter().filter(|e| e.when == When::End) {
            self.run_action(e)?;
        }
        self.summarize();
        Ok(())
    }

    fn summarize(&mut self) {
        let lines: Vec<String> = self
            .nodes
            .iter()
            .map(|n| {
                let s = n.tip_state();
                format!(
                    "final node={} height={} tip={} coin={} utxos={} registered={}",
                    n.name,
                    n.chain.height(),
                    n.chain.tip_hash().short(),
                    s.total_coin(),
                    s.utxos.len(),
                    s.hierarchy.len()
                )
            })
            .collect();
        self.trace.extend(lines);
    }

    /// The observer's hierarchy as DOT, labelled with agent labels.
    pub fn dot(&self) -> String {
        let names: BTreeMap<AccountKey, String> = self.nodes.iter().map(|n| (n.account(), n.label.clone())).collect();
        let extra: Vec<AccountKey> = self.nodes.iter().map(Node::account).collect();
        let s = self.observer().tip_state();
        export_dot(&s.hierarchy, &s.roles, &names, &extra)
    }

    pub fn trace_text(&self) -> String {
        let mut out = self.trace.join("\n");
        out.push('\n');
        out
    }
}

fn action_name(a: &Action) -> &'static str {
    match a {
        Action::Policy { .. } => "policy",
        Action::SetRoles { .. } => "set-roles",
        Action::Lock { locked: true, .. } => "lock",
        Action::Lock { locked: false, .. } => "unlock",
        Action::Pay { .. } => "pay",
        Action::Mint { .. } => "mint",
        Action::Seize { .. } => "seize",
        Action::Heartbeat { .. } => "heartbeat",
        _ => "other",
    }
}
