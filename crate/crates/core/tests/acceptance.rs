//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Scenario criteria read results back out of finished simulations and
//! recompute them here instead of trusting the scripts' own assertions.

#[path = "oracles/rules.rs"]
mod rules;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::process::ExitCode;
use std::thread;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rolechain::consensus::{seal_block, Block, ChainConfig, ChainState, ConsensusError};
use rolechain::ledger::{validate_tx, EntryKind, LedgerError, LedgerState};
use rolechain::policy::{PolicyParam, PolicyState};
use rolechain::simnet::{miner_counts, run_script, scenarios, Behavior, SimReport};
use rolechain::txmodel::{
    AccountKey, Keypair, PolicyPayload, RolePayload, RoleSet, Transaction, TxInput, TxMode, TxOutput,
};
use rolechain::wallet::{self, select_coins, CoinFilter};
use rules::{Model, Op};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn run_all() -> BTreeMap<&'static str, SimReport> {
    thread::scope(|s| {
        let handles: Vec<_> = scenarios::ALL
            .iter()
            .map(|(name, text)| (*name, s.spawn(move || run_script(text, None))))
            .collect();
        handles
            .into_iter()
            .map(|(name, h)| {
                let r = h.join().expect("scenario thread").unwrap_or_else(|e| panic!("{name}: {e}"));
                (name, r)
            })
            .collect()
    })
}

fn key_of(r: &SimReport, name: &str) -> AccountKey {
    r.sim.node(name).unwrap_or_else(|| panic!("no agent {name}")).key.account()
}

fn roles(s: &str) -> RoleSet {
    s.parse().unwrap()
}

// 1 ------------------------------------------------------------------------

fn org_chart(r: &SimReport) -> Outcome {
    let expected: [(&str, &str, bool); 11] = [
        ("node0", "MACLU", false),
        ("node1", "M", false),
        ("node2", "L", false),
        ("node3", "C", false),
        ("node4", "A", false),
        ("node5", "A", false),
        ("node6", "U", true),
        ("node7", "U", false),
        ("node8", "U", false),
        ("node9", "-", false),
        ("node10", "U", false),
    ];
    let node11 = key_of(r, "node11");
    let law = key_of(r, "node2");
    let want_scope: BTreeSet<AccountKey> = (0..=11)
        .filter(|n| ![0, 3, 11].contains(n))
        .map(|n| key_of(r, &format!("node{n}")))
        .collect();
    for node in &r.sim.nodes {
        let s = node.tip_state();
        for (name, set, locked) in expected {
            let rec = s.roles.get(&key_of(r, name)).ok_or_else(|| format!("{}: {name} has no role record", node.name))?;
            ensure(rec.roles == roles(set) && rec.locked == locked, || {
                format!("{}: {name} roles={} locked={}", node.name, rec.roles, rec.locked)
            })?;
        }
        ensure(s.roles.get(&node11).is_none() && !s.hierarchy.is_registered(&node11), || {
            format!("{}: node11 registered", node.name)
        })?;
        let scope: BTreeSet<AccountKey> = s.hierarchy.law_scope(&law, &s.roles).map_err(|e| e.to_string())?.0;
        ensure(scope == want_scope, || format!("{}: law scope of node2 has {} members", node.name, scope.len()))?;
    }
    Ok(format!("12 accounts exact on {} nodes, law_scope(node2) = 9 accounts", r.sim.nodes.len()))
}

// 2 ------------------------------------------------------------------------

fn replay(all: &BTreeMap<&str, SimReport>) -> Outcome {
    let mut chains = 0;
    for (name, r) in all {
        for node in &r.sim.nodes {
            let mut seen = HashSet::new();
            for b in node.chain.best_chain() {
                for tx in &b.block.transactions {
                    ensure(seen.insert(tx.txid()), || format!("{name}/{}: duplicate {}", node.name, tx.txid().short()))?;
                }
            }
            chains += 1;
        }
    }
    let r = &all["replay"];
    let n = r.sim.nodes.len();
    let unlock = r.sim.labels.get("unlock").ok_or("no unlock label")?.tx.txid();
    let records: Vec<_> = r.sim.replays.iter().filter(|x| x.txid == unlock).collect();
    ensure(!records.is_empty(), || "unlock was never re-broadcast".into())?;
    for x in &records {
        ensure(x.rejected == n && x.accepted == 0, || {
            format!("unlock replay at tick {}: rejected {}/{n}, accepted {}", x.tick, x.rejected, x.accepted)
        })?;
    }
    for node in &r.sim.nodes {
        let hits = node
            .chain
            .best_chain()
            .iter()
            .flat_map(|b| &b.block.transactions)
            .filter(|t| t.txid() == unlock)
            .count();
        ensure(hits == 1, || format!("{}: unlock confirmed {hits} times", node.name))?;
    }
    Ok(format!(
        "{chains} chains without duplicate digests; unlock re-broadcast {} times, rejected by {n}/{n} nodes each time",
        records.len()
    ))
}

// 3 ------------------------------------------------------------------------

/// Honest and total blocks above height 0 on the observer's chain of the
/// takeover scenario at its shipped seed.
const TAKEOVER_PINNED: (u64, u64) = (210, 285);

fn balance_of_power(r: &SimReport) -> Outcome {
    let root = Keypair::derive("node0");
    let (_, state) = LedgerState::genesis(root.account(), PolicyState::new(16, 20));
    for y in [0, 1, 8, 15] {
        let p = PolicyPayload { param_id: PolicyParam::MgmtIntervalY.id(), permanent: false, value: y };
        let tx = wallet::policy_change(&state, &root, &[p], 0).map_err(|e| e.to_string())?;
        let v = validate_tx(&tx, &state);
        ensure(matches!(v, Err(LedgerError::Policy(_))) && v.as_ref().unwrap_err().code() == "IntervalBelowMinimum", || {
            format!("y={y}: {v:?}")
        })?;
    }
    let ok = PolicyPayload { param_id: PolicyParam::MgmtIntervalY.id(), permanent: false, value: 16 };
    let tx = wallet::policy_change(&state, &root, &[ok], 0).map_err(|e| e.to_string())?;
    validate_tx(&tx, &state).map_err(|e| format!("y=16: {e}"))?;

    let short = r.sim.labels.get("short-window").ok_or("no short-window label")?;
    ensure(short.verdict == Err("IntervalBelowMinimum"), || format!("short-window: {:?}", short.verdict))?;
    let (honest, total) = miner_counts(&r.sim, 1, |b| b == Behavior::HonestMiner);
    let share = honest as f64 / total as f64;
    let expected = 0.8 * 15.0 / 16.0;
    ensure(share >= 0.70, || format!("honest share {share:.4} below 0.70"))?;
    ensure((share - expected).abs() <= 0.05, || format!("honest share {share:.4} not within 0.05 of {expected:.4}"))?;
    ensure((honest, total) == TAKEOVER_PINNED, || {
        format!("honest={honest} blocks={total} differs from pinned {TAKEOVER_PINNED:?}")
    })?;
    Ok(format!("y in {{0,1,8,15}} rejected; honest {honest}/{total} = {share:.4} (expected {expected:.4})"))
}

// 4 ------------------------------------------------------------------------

fn miner_protection(name: &str, r: &SimReport) -> Result<(), String> {
    let miners = ["m1", "m2"];
    for node in &r.sim.nodes {
        let s = node.tip_state();
        for m in miners {
            let rec = s.roles.get(&key_of(r, m)).ok_or_else(|| format!("{name}/{}: {m} never registered", node.name))?;
            ensure(rec.roles.is_empty(), || format!("{name}/{}: {m} still holds {}", node.name, rec.roles))?;
        }
        for label in ["m1-spend", "m2-spend"] {
            let txid = r.sim.labels[label].tx.txid();
            ensure(node.confirmed(&txid), || format!("{name}/{}: {label} not confirmed", node.name))?;
        }
        let hop = r.sim.labels["carol-hop"].tx.txid();
        ensure(!node.confirmed(&hop), || format!("{name}/{}: carol-hop confirmed", node.name))?;
    }
    let hop = &r.sim.labels["carol-hop"];
    ensure(hop.verdict == Err("MissingURole"), || format!("{name}: carol-hop {:?}", hop.verdict))?;

    // Fresh spends against the final state: the miners still can, carol still cannot.
    let s = r.sim.observer().tip_state();
    for m in miners {
        let key = &r.sim.node(m).unwrap().key;
        let tx = wallet::transfer(s, key, CoinFilter::CoinbaseOnly, &[(key_of(r, "dave"), 1)], 0)
            .map_err(|e| format!("{name}: {m}: {e}"))?;
        validate_tx(&tx, s).map_err(|e| format!("{name}: fresh {m} spend: {e}"))?;
    }
    let carol = &r.sim.node("carol").unwrap().key;
    let tx = wallet::transfer(s, carol, CoinFilter::Any, &[(key_of(r, "dave"), 1)], 0).map_err(|e| e.to_string())?;
    let v = validate_tx(&tx, s);
    ensure(matches!(v, Err(LedgerError::MissingURole(_))), || format!("{name}: fresh carol spend {v:?}"))
}

fn freeze(all: &BTreeMap<&str, SimReport>) -> Outcome {
    miner_protection("freeze", &all["freeze"])?;
    miner_protection("freeze_independent", &all["freeze_independent"])?;
    Ok("dependent and independent: roleless miners spend coinbase coin, one-hop recipient gets MissingURole".into())
}

// 5 ------------------------------------------------------------------------

fn bootstrap_chain(params: &[PolicyParam], through: u64) -> Vec<Block> {
    let config = ChainConfig::default();
    let root = Keypair::derive("node0");
    let miner = Keypair::derive("miner").account();
    let chain = ChainState::new(root.account(), config.clone());
    let genesis = chain.best_chain()[0].block.clone();
    let payloads: Vec<_> = params
        .iter()
        .map(|p| {
            let value = match p {
                PolicyParam::MiningMode => 0,
                PolicyParam::MgmtTxCountX => 1,
                PolicyParam::MgmtIntervalY => 16,
                PolicyParam::MaxMintPerTx => 1_000,
            };
            PolicyPayload { param_id: p.id(), permanent: false, value }
        })
        .collect();
    let policy_tx = wallet::policy_change(chain.tip_state(), &root, &payloads, 0).unwrap();
    let mut blocks = vec![genesis];
    for h in 1..=through {
        let mut txs = vec![Transaction::coinbase(h, vec![TxOutput::new(config.subsidy, miner)])];
        if h == 1 {
            txs.push(policy_tx.clone());
        }
        let prev = blocks.last().unwrap().hash();
        blocks.push(seal_block(prev, h, txs, config.target, h << 32));
    }
    blocks
}

fn bootstrap() -> Outcome {
    for missing in PolicyParam::ALL {
        let params: Vec<_> = PolicyParam::ALL.into_iter().filter(|p| *p != missing).collect();
        let short = ChainState::from_blocks(bootstrap_chain(&params, 19), ChainConfig::default());
        ensure(short.is_ok_and(|c| c.height() == 19), || format!("without {}: height 19 refused", missing.name()))?;
        let got = ChainState::from_blocks(bootstrap_chain(&params, 20), ChainConfig::default()).map(|c| c.height());
        ensure(got == Err(ConsensusError::BootstrapIncomplete(vec![missing])), || {
            format!("without {}: {got:?}", missing.name())
        })?;
    }
    let full = ChainState::from_blocks(bootstrap_chain(&PolicyParam::ALL, 24), ChainConfig::default())
        .map_err(|e| format!("all set: {e}"))?;
    ensure(full.height() == 24, || format!("all set: height {}", full.height()))?;
    Ok("each of 4 missing parameters refused at height 20; complete chain validates to height 24".into())
}

// 6 ------------------------------------------------------------------------

fn movement(r: &SimReport) -> Outcome {
    let k = |n: &str| key_of(r, n);
    let mut want = vec![
        (k("node0"), k("east")),
        (k("node0"), k("west")),
        (k("node0"), k("law")),
        (k("east"), k("bob")),
        (k("west"), k("alice")),
    ];
    want.sort();
    for node in &r.sim.nodes {
        let s = node.tip_state();
        ensure(s.hierarchy.edges() == want, || format!("{}: edges differ ({} edges)", node.name, s.hierarchy.edges().len()))?;
        ensure(s.hierarchy.root() == Some(k("node0")), || format!("{}: root moved", node.name))?;
        let alice = s.roles.get(&k("alice")).ok_or("alice has no record")?;
        ensure(alice.roles == roles("U") && !alice.locked, || format!("{}: alice roles {}", node.name, alice.roles))?;
    }
    Ok(format!("tree equals the 5 expected edges on {} nodes; alice {{U}} under west", r.sim.nodes.len()))
}

// 7 ------------------------------------------------------------------------

struct Instance {
    keys: Vec<Keypair>,
    accts: Vec<AccountKey>,
    state: LedgerState,
    model: Model,
    accepted: Vec<Transaction>,
}

#[derive(Default)]
struct Tally {
    verdicts: u64,
    accepted: u64,
    skipped: u64,
    by_kind: BTreeMap<&'static str, (u64, u64)>,
}

fn kind(op: &Op) -> &'static str {
    match op {
        Op::Coinbase { .. } => "coinbase",
        Op::PayCoinbase { .. } => "pay-coinbase",
        Op::Pay { .. } => "pay",
        Op::Mint { .. } => "mint",
        Op::Seize { .. } => "seize",
        Op::Steal { .. } => "steal",
        Op::SetRoles { .. } => "set-roles",
        Op::SelfRemove { .. } => "self-remove",
        Op::Policy { .. } => "policy",
        Op::Replay { .. } => "replay",
    }
}

fn random_roles(rng: &mut ChaCha8Rng) -> u8 {
    if rng.gen_bool(0.5) {
        [0, rules::U, rules::A, rules::C, rules::L, rules::M][rng.gen_range(0..6)]
    } else {
        rng.gen_range(0..=rules::ALL)
    }
}

/// Draws one operation the builders can express for the current model state.
fn draw(rng: &mut ChaCha8Rng, m: &Model, accepted: usize) -> Option<Op> {
    let n = m.accounts.len();
    let with_record: Vec<usize> = (0..n).filter(|i| m.accounts[*i].record).collect();
    let any = |rng: &mut ChaCha8Rng| rng.gen_range(0..n);
    let issuer = |rng: &mut ChaCha8Rng| {
        if rng.gen_bool(0.8) {
            with_record[rng.gen_range(0..with_record.len())]
        } else {
            rng.gen_range(0..n)
        }
    };
    let roll = rng.gen_range(0..100);
    let op = match roll {
        0..=29 => {
            let by = issuer(rng);
            let target = any(rng);
            if target == by {
                return None;
            }
            let old = &m.accounts[target];
            let (roles, locked) = match rng.gen_range(0..4) {
                0 => (old.roles, !old.locked),
                1 => (random_roles(rng), old.locked),
                _ => (random_roles(rng), rng.gen_bool(0.15)),
            };
            Op::SetRoles { by, target, roles, locked }
        }
        30..=41 => {
            let from = issuer(rng);
            let coin = m.accounts[from].coin;
            if coin == 0 {
                return None;
            }
            let amount = rng.gen_range(1..=coin);
            let fee = rng.gen_range(0..=(coin - amount).min(5));
            Op::Pay { from, to: any(rng), amount, fee }
        }
        42..=51 => {
            let from = any(rng);
            let cb = m.accounts[from].coinbase_coin;
            if cb == 0 {
                return None;
            }
            Op::PayCoinbase { from, to: any(rng), amount: rng.gen_range(0..=cb) }
        }
        52..=61 => Op::Mint { by: issuer(rng), to: any(rng), amount: rng.gen_range(1..=3_000) },
        62..=68 => Op::Seize { by: issuer(rng), victim: any(rng), to: any(rng) },
        69..=71 => {
            let (by, victim) = (any(rng), any(rng));
            if by == victim {
                return None;
            }
            Op::Steal { by, victim }
        }
        72..=75 => Op::SelfRemove { by: issuer(rng) },
        76..=87 => {
            let count = rng.gen_range(1..=2);
            let items = (0..count)
                .map(|_| {
                    let id = if rng.gen_bool(0.05) { 4 } else { rng.gen_range(0..4) };
                    let value = match id {
                        0 => rng.gen_range(0..=2),
                        2 => [1, 8, 15, 16, 20, 64][rng.gen_range(0..6)],
                        3 => rng.gen_range(0..=3_000),
                        _ => rng.gen_range(0..=4),
                    };
                    (id, value, rng.gen_bool(0.1))
                })
                .collect();
            Op::Policy { by: issuer(rng), items }
        }
        88..=93 if accepted > 0 => Op::Replay { index: rng.gen_range(0..accepted) },
        _ => Op::Coinbase { to: any(rng), amount: rng.gen_range(1..=5_000) },
    };
    Some(op)
}

fn payload(roles: u8, locked: bool) -> RolePayload {
    RolePayload::new(RoleSet::from_bits(roles).expect("five role bits"), locked)
}

impl Instance {
    fn new(keys: &[Keypair]) -> Instance {
        let accts: Vec<_> = keys.iter().map(Keypair::account).collect();
        let (_, state) = LedgerState::genesis(accts[0], PolicyState::new(16, 20));
        Instance { keys: keys.to_vec(), accts, state, model: Model::new(keys.len(), 16), accepted: Vec::new() }
    }

    /// Builds the transaction for `op`, or `None` if the builders cannot.
    fn build(&self, op: &Op) -> Option<Transaction> {
        let s = &self.state;
        let a = &self.accts;
        match *op {
            Op::Coinbase { .. } => None,
            Op::Replay { index } => Some(self.accepted[index].clone()),
            Op::PayCoinbase { from, to, amount } => {
                let rest = self.model.accounts[from].coinbase_coin - amount;
                let pays = [(a[to], amount), (a[from], rest)];
                wallet::transfer(s, &self.keys[from], CoinFilter::CoinbaseOnly, &pays, 0).ok()
            }
            Op::Pay { from, to, amount, fee } => {
                wallet::transfer(s, &self.keys[from], CoinFilter::NormalOnly, &[(a[to], amount)], fee).ok()
            }
            Op::Mint { by, to, amount } => {
                let (coins, total) = select_coins(s, &a[by], CoinFilter::NormalOnly, 0).ok()?;
                let inputs = coins.into_iter().map(|op| TxInput::new(op, a[by])).collect();
                let outputs = vec![TxOutput::new(amount, a[to]), TxOutput::new(total, a[by])];
                let mut tx = Transaction::new(TxMode::CoinTransfer, inputs, outputs);
                wallet::sign_all(&mut tx, &self.keys[by]);
                Some(tx)
            }
            Op::Seize { by, victim, to } => wallet::law_move(s, &self.keys[by], &a[victim], &a[to], None).ok(),
            Op::Steal { by, victim } => {
                let coin = s.coins_of(&a[victim]).next()?;
                let amount = coin.coin_amount()?;
                let mut tx = Transaction::new(
                    TxMode::CoinTransfer,
                    vec![TxInput::new(coin.outpoint, a[by])],
                    vec![TxOutput::new(amount, a[by])],
                );
                wallet::sign_all(&mut tx, &self.keys[by]);
                Some(tx)
            }
            Op::SetRoles { by, target, roles, locked } => {
                wallet::role_change(s, &self.keys[by], &[(a[target], payload(roles, locked))], 0).ok()
            }
            Op::SelfRemove { by } => wallet::role_change(s, &self.keys[by], &[(a[by], RolePayload::default())], 0).ok(),
            Op::Policy { by, ref items } => {
                let payloads: Vec<_> = items
                    .iter()
                    .map(|&(param_id, value, permanent)| PolicyPayload { param_id, permanent, value })
                    .collect();
                wallet::policy_change(s, &self.keys[by], &payloads, 0).ok()
            }
        }
    }

    /// Compares every account the model tracks with the ledger's view of it.
    fn compare_state(&self) -> Result<(), String> {
        for (i, (acct, model)) in self.accts.iter().zip(&self.model.accounts).enumerate() {
            let s = &self.state;
            let rec = s.roles.get(acct);
            let (mut cb, mut coin) = (0, 0);
            for e in s.coins_of(acct) {
                if let EntryKind::Coin { amount, coinbase_origin } = e.kind {
                    if coinbase_origin {
                        cb += amount;
                    } else {
                        coin += amount;
                    }
                }
            }
            let parent = s.hierarchy.parent(acct).map(|p| self.accts.iter().position(|k| *k == p).unwrap());
            let got = rules::Account {
                roles: rec.map_or(0, |r| r.roles.bits()),
                locked: rec.is_some_and(|r| r.locked),
                record: rec.is_some(),
                parent,
                coinbase_coin: cb,
                coin,
            };
            ensure(got == *model, || format!("account {i}: ledger {got:?} model {model:?}"))?;
        }
        for (id, p) in self.model.params.iter().enumerate() {
            let param = PolicyParam::from_id(id as u8).unwrap();
            let got = self.state.policy.entry(param).map(|e| (e.value, e.permanent, e.setter_depth));
            ensure(got == p.map(|p| (p.value, p.permanent, p.depth)), || format!("param {id}: ledger {got:?} model {p:?}"))?;
        }
        Ok(())
    }
}

fn random_instance(seed: u64, keys: &[Keypair], tally: &mut Tally) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=keys.len());
    let mut inst = Instance::new(&keys[..n]);
    let opening = Op::Coinbase { to: 0, amount: rng.gen_range(1_000..=10_000) };
    let mut script = vec![opening];
    let limit = rng.gen_range(1..=30);
    let mut txs = 0;
    let mut attempts = 0;
    while txs < limit && attempts < 400 {
        attempts += 1;
        if let Some(op) = script.pop().or_else(|| draw(&mut rng, &inst.model, inst.accepted.len())) {
            if let Op::Coinbase { to, amount } = op {
                let h = inst.state.height + 1;
                inst.state.begin_block(h);
                inst.state.apply_in_place(&Transaction::coinbase(h, vec![TxOutput::new(amount, inst.accts[to])]));
                inst.model.apply(&op);
                continue;
            }
            let Some(tx) = inst.build(&op) else {
                tally.skipped += 1;
                continue;
            };
            txs += 1;
            let want = inst.model.accepts(&op).expect("transaction op");
            let got = validate_tx(&tx, &inst.state);
            tally.verdicts += 1;
            let entry = tally.by_kind.entry(kind(&op)).or_default();
            entry.0 += 1;
            if got.is_ok() != want {
                return Err(format!("seed {seed} tx {txs}: {op:?} oracle={want} ledger={got:?}"));
            }
            if want {
                tally.accepted += 1;
                entry.1 += 1;
                if let (Op::Mint { amount, .. }, Ok(v)) = (&op, &got) {
                    ensure(v.minted == *amount, || format!("seed {seed}: minted {} want {amount}", v.minted))?;
                }
                inst.state.apply_in_place(&tx);
                inst.model.apply(&op);
                inst.accepted.push(tx);
            }
        }
    }
    inst.compare_state().map_err(|e| format!("seed {seed}: {e}"))
}

fn oracle_equivalence() -> Outcome {
    let keys: Vec<Keypair> = (0..8).map(|i| Keypair::derive(&format!("oracle/{i}"))).collect();
    let results: Vec<Result<Tally, String>> = thread::scope(|s| {
        let handles: Vec<_> = (0..4u64)
            .map(|lane| {
                let keys = &keys;
                s.spawn(move || {
                    let mut tally = Tally::default();
                    for seed in (lane..1000).step_by(4) {
                        random_instance(seed, keys, &mut tally)?;
                    }
                    Ok(tally)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("oracle thread")).collect()
    });
    let mut total = Tally::default();
    for r in results {
        let t = r?;
        total.verdicts += t.verdicts;
        total.accepted += t.accepted;
        total.skipped += t.skipped;
        for (k, (n, ok)) in t.by_kind {
            let e = total.by_kind.entry(k).or_default();
            e.0 += n;
            e.1 += ok;
        }
    }
    for (k, (n, ok)) in &total.by_kind {
        if *k != "replay" && *k != "steal" {
            ensure(*ok > 0 && ok < n, || format!("{k}: {ok}/{n} accepted, both outcomes needed"))?;
        }
    }
    let kinds: Vec<String> = total.by_kind.iter().map(|(k, (n, ok))| format!("{k} {ok}/{n}")).collect();
    Ok(format!(
        "1000 instances, {} verdicts agree ({} accepted); {}",
        total.verdicts,
        total.accepted,
        kinds.join(", ")
    ))
}

// 8 ------------------------------------------------------------------------

fn determinism(first: &BTreeMap<&str, SimReport>) -> Outcome {
    let second = run_all();
    for (name, a) in first {
        let b = &second[name];
        ensure(a.trace() == b.trace(), || format!("{name}: traces differ"))?;
        ensure(a.chain_file() == b.chain_file(), || format!("{name}: chain files differ"))?;
        ensure(a.dot() == b.dot(), || format!("{name}: DOT differs"))?;
    }
    Ok(format!("{} scenarios byte-identical across two runs (trace, chain file, DOT)", first.len()))
}

// 9 ------------------------------------------------------------------------

/// Folds a chain's blocks into a plain outpoint map and accounts every coin
/// unit to either a block subsidy or a mint.
fn fold_chain(blocks: &[&Block], subsidy: u64) -> Result<(u128, u128), String> {
    let mut coins: BTreeMap<([u8; 32], u32), u64> = BTreeMap::new();
    let mut issued: u128 = 0;
    for b in blocks {
        let mut fees: u128 = 0;
        let mut claimed: u128 = 0;
        for tx in &b.transactions {
            let txid = tx.txid().0;
            let mode = tx.mode().ok_or("unknown mode")?;
            let mut spent: u128 = 0;
            for i in tx.inputs.iter().filter(|i| !i.prevout.is_null()) {
                spent += u128::from(coins.remove(&(i.prevout.txid.0, i.prevout.index)).unwrap_or(0));
            }
            let mut created: u128 = 0;
            for (index, o) in tx.outputs.iter().enumerate() {
                if mode == TxMode::CoinTransfer || index == 0 {
                    coins.insert((txid, index as u32), o.nvalue);
                    created += u128::from(o.nvalue);
                }
            }
            if tx.is_coinbase() {
                claimed += created;
            } else if created > spent {
                issued += created - spent;
            } else {
                fees += spent - created;
            }
        }
        if b.height() > 0 {
            ensure(claimed - fees == u128::from(subsidy), || {
                format!("height {}: subsidy {} expected {subsidy}", b.height(), claimed - fees)
            })?;
            issued += u128::from(subsidy);
        }
    }
    Ok((coins.values().map(|v| u128::from(*v)).sum(), issued))
}

fn conservation(all: &BTreeMap<&str, SimReport>) -> Outcome {
    let mut chains = 0;
    let mut blocks = 0;
    for (name, r) in all {
        for node in &r.sim.nodes {
            let best: Vec<&Block> = node.chain.best_chain().into_iter().map(|b| &b.block).collect();
            let (total, issued) = fold_chain(&best, node.chain.config().subsidy).map_err(|e| format!("{name}/{}: {e}", node.name))?;
            ensure(total == issued, || format!("{name}/{}: coin {total} issued {issued}", node.name))?;
            let replayed = node.chain.replay_best_chain().map_err(|e| e.to_string())?;
            ensure(replayed.total_coin() == total && node.tip_state().total_coin() == total, || {
                format!("{name}/{}: ledger total disagrees with fold", node.name)
            })?;
            chains += 1;
            blocks += best.len();
        }
    }
    Ok(format!("{chains} chains, {blocks} blocks: total coin = subsidies + mints"))
}

fn main() -> ExitCode {
    let all = run_all();
    let results: Vec<(u8, &str, Outcome)> = thread::scope(|s| {
        let all = &all;
        let jobs: Vec<(u8, &str, thread::ScopedJoinHandle<'_, Outcome>)> = vec![
            (1, "org-chart reproduction", s.spawn(move || org_chart(&all["org-chart"]))),
            (2, "replay mitigation", s.spawn(move || replay(all))),
            (3, "balance-of-power floor", s.spawn(move || balance_of_power(&all["takeover"]))),
            (4, "miner protection", s.spawn(move || freeze(all))),
            (5, "policy bootstrap", s.spawn(bootstrap)),
            (6, "node movement", s.spawn(move || movement(&all["move"]))),
            (7, "oracle equivalence", s.spawn(oracle_equivalence)),
            (8, "determinism", s.spawn(move || determinism(all))),
            (9, "conservation", s.spawn(move || conservation(all))),
        ];
        jobs.into_iter()
            .map(|(n, name, h)| (n, name, h.join().unwrap_or_else(|_| Err("panicked".into()))))
            .collect()
    });
    let mut failed = 0;
    for (n, name, r) in &results {
        match r {
            Ok(detail) => println!("criterion {n} {name}: PASS {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n} {name}: FAIL {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
