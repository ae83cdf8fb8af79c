//! Scenario assertions.

use std::collections::{BTreeSet, HashSet};

use super::engine::{Node, Sim};
use super::script::{Behavior, Event, Predicate};
use super::SimError;
use crate::consensus::{count_mgmt_txs, dependent_window_check};
use crate::policy::PolicyParam;
use crate::txmodel::AccountKey;

type Verdict = Result<String, String>;

/// Checks `p` and records the outcome in the trace.
pub(super) fn assert(sim: &mut Sim, e: &Event, p: &Predicate) -> Result<(), SimError> {
    match evaluate(sim, p) {
        Ok(detail) => {
            let line = format!("tick={} node=sim event=assert-ok predicate={} line={} {}", sim.tick, p.name(), e.line, detail);
            sim.trace.push(line.trim_end().to_string());
            Ok(())
        }
        Err(detail) => {
            let line = format!("tick={} node=sim event=assert-failed predicate={} line={} {}", sim.tick, p.name(), e.line, detail);
            sim.trace.push(line);
            Err(SimError::AssertionFailed { tick: sim.tick, line: e.line, predicate: p.name(), detail, trace: sim.trace_text() })
        }
    }
}

fn key_of(sim: &Sim, name: &str) -> Result<AccountKey, String> {
    sim.node(name).map(Node::account).ok_or_else(|| format!("unknown agent `{name}`"))
}

fn names(sim: &Sim, keys: impl IntoIterator<Item = AccountKey>) -> BTreeSet<String> {
    keys.into_iter().map(|k| sim.name_of(&k)).collect()
}

/// Runs `f` on every node; fails on the first node it rejects.
fn on_every_node(sim: &Sim, mut f: impl FnMut(&Node) -> Result<(), String>) -> Verdict {
    for n in &sim.nodes {
        f(n).map_err(|m| format!("at={} {m}", n.name))?;
    }
    Ok(format!("nodes={}", sim.nodes.len()))
}

fn evaluate(sim: &Sim, p: &Predicate) -> Verdict {
    match p {
        Predicate::Roles { node, roles, locked } => {
            let k = key_of(sim, node)?;
            on_every_node(sim, |n| {
                let s = n.tip_state();
                let (have, lk) = (s.roles.roles(&k), s.roles.is_locked(&k));
                if s.roles.get(&k).is_none() || have != *roles || lk != *locked {
                    return Err(format!("roles={have} locked={lk}"));
                }
                Ok(())
            })
        }
        Predicate::Unregistered { node } => {
            let k = key_of(sim, node)?;
            on_every_node(sim, |n| {
                let s = n.tip_state();
                if s.hierarchy.is_registered(&k) || s.roles.get(&k).is_some() {
                    return Err(format!("registered roles={}", s.roles.roles(&k)));
                }
                Ok(())
            })
        }
        Predicate::Parent { node, parent } => {
            let k = key_of(sim, node)?;
            let want = parent.as_deref().map(|p| key_of(sim, p)).transpose()?;
            on_every_node(sim, |n| {
                let got = n.tip_state().hierarchy.parent(&k);
                if got != want {
                    return Err(format!("parent={}", got.map_or("-".into(), |g| sim.name_of(&g))));
                }
                Ok(())
            })
        }
        Predicate::LawScope { node, members } | Predicate::ManagerScope { node, members } => {
            let k = key_of(sim, node)?;
            let want: BTreeSet<String> = members.iter().cloned().collect();
            let law = matches!(p, Predicate::LawScope { .. });
            on_every_node(sim, |n| {
                let s = n.tip_state();
                let scope = if law { s.hierarchy.law_scope(&k, &s.roles) } else { s.hierarchy.manager_scope(&k) };
                let got = names(sim, scope.map_err(|e| e.to_string())?.iter().copied());
                if got != want {
                    return Err(format!("scope={}", got.into_iter().collect::<Vec<_>>().join(",")));
                }
                Ok(())
            })
        }
        Predicate::TipsEqual => {
            let tip = sim.nodes[0].chain.tip_hash();
            on_every_node(sim, |n| {
                if n.chain.tip_hash() != tip {
                    return Err(format!("tip={} expected={}", n.chain.tip_hash().short(), tip.short()));
                }
                Ok(())
            })
            .map(|d| format!("{d} tip={} height={}", tip.short(), sim.nodes[0].chain.height()))
        }
        Predicate::Accepted { label } => {
            let l = sim.labels.get(label).ok_or_else(|| format!("unknown label `{label}`"))?;
            let txid = l.tx.txid();
            on_every_node(sim, |n| if n.confirmed(&txid) { Ok(()) } else { Err(format!("txid={} unconfirmed", txid.short())) })
        }
        Predicate::Rejected { label, code } => {
            let l = sim.labels.get(label).ok_or_else(|| format!("unknown label `{label}`"))?;
            let got = match l.verdict {
                Ok(()) => return Err("author accepted it".into()),
                Err(c) => c,
            };
            if code.as_deref().is_some_and(|c| c != got) {
                return Err(format!("code={got}"));
            }
            let txid = l.tx.txid();
            on_every_node(sim, |n| if n.confirmed(&txid) { Err("confirmed".into()) } else { Ok(()) })
                .map(|d| format!("{d} code={got}"))
        }
        Predicate::Balance { node, amount } => {
            let k = key_of(sim, node)?;
            on_every_node(sim, |n| {
                let b = n.tip_state().balance(&k);
                if b != *amount {
                    return Err(format!("balance={b}"));
                }
                Ok(())
            })
        }
        Predicate::NoDuplicateTxids => on_every_node(sim, |n| {
            let mut seen = HashSet::new();
            for b in n.chain.best_chain() {
                for tx in &b.block.transactions {
                    if !seen.insert(tx.txid()) {
                        return Err(format!("duplicate={}", tx.txid().short()));
                    }
                }
            }
            Ok(())
        }),
        Predicate::HonestShare { min } => {
            let (honest, total) = miner_counts(sim, 1, |b| b == Behavior::HonestMiner);
            if total == 0 {
                return Err("no mined blocks".into());
            }
            let share = honest as f64 / total as f64;
            let detail = format!("share={share:.4} honest={honest} blocks={total}");
            if share < *min {
                return Err(detail);
            }
            Ok(detail)
        }
        Predicate::ReplaysRejected { min } => {
            let n = sim.nodes.len();
            let replays = &sim.replays;
            if replays.len() < *min {
                return Err(format!("replays={}", replays.len()));
            }
            if let Some(r) = replays.iter().find(|r| r.accepted > 0 || r.rejected < n) {
                return Err(format!("txid={} accepted={} rejected={}", r.txid.short(), r.accepted, r.rejected));
            }
            Ok(format!("replays={} rejections={}", replays.len(), replays.len() * n))
        }
        Predicate::WindowCompliance => on_every_node(sim, window_compliance).map(|d| {
            let s = sim.observer().tip_state();
            format!("{d} windows={}", s.window.completed)
        }),
        Predicate::Conservation => on_every_node(sim, |n| {
            let issued: i128 = n
                .chain
                .best_chain()
                .iter()
                .map(|b| i128::from(b.coinbase_paid) - i128::from(b.fees) + i128::from(b.minted))
                .sum();
            let total = n.tip_state().total_coin() as i128;
            if total != issued {
                return Err(format!("coin={total} issued={issued}"));
            }
            Ok(())
        }),
        Predicate::MinerBlocks { miner, min, after } => {
            let k = key_of(sim, miner)?;
            let count = sim
                .observer()
                .chain
                .best_chain()
                .iter()
                .filter(|b| b.block.height() > *after && coinbase_recipient(&b.block) == Some(k))
                .count() as u64;
            if count < *min {
                return Err(format!("blocks={count}"));
            }
            Ok(format!("blocks={count}"))
        }
        Predicate::Height { min } => {
            let h = sim.observer().chain.height();
            if h < *min {
                return Err(format!("height={h}"));
            }
            Ok(format!("height={h}"))
        }
    }
}

fn coinbase_recipient(b: &crate::consensus::Block) -> Option<AccountKey> {
    b.transactions.first().and_then(|cb| cb.outputs.first()).map(|o| o.recipient)
}

/// Blocks on the observer's best chain from height `from`, counted by
/// whether their miner's behavior satisfies `pick`.
pub fn miner_counts(sim: &Sim, from: u64, pick: impl Fn(Behavior) -> bool) -> (u64, u64) {
    let mut hit = 0;
    let mut total = 0;
    for b in sim.observer().chain.best_chain().iter().filter(|b| b.block.height() >= from) {
        total += 1;
        let agent = coinbase_recipient(&b.block).and_then(|k| sim.agent_of(&k));
        if agent.is_some_and(|a| pick(a.behavior)) {
            hit += 1;
        }
    }
    (hit, total)
}

/// Recomputes windows from block contents: each window takes its parameters
/// from the policy in force before its first block.
fn window_compliance(n: &Node) -> Result<(), String> {
    let best = n.chain.best_chain();
    let mut h = 1usize;
    while h < best.len() {
        let before = n.chain.state_after(&best[h - 1].hash).ok_or("missing state")?;
        let policy = &before.policy;
        if !policy.is_dependent() {
            h += 1;
            continue;
        }
        let y = policy.effective(PolicyParam::MgmtIntervalY).max(1) as usize;
        let x = policy.effective(PolicyParam::MgmtTxCountX);
        let end = (h + y).min(best.len());
        let counts: Vec<u32> = best[h..end].iter().map(|b| count_mgmt_txs(&b.block)).collect();
        dependent_window_check(&counts, x, y as u32).map_err(|e| format!("start={h} {e}"))?;
        h += y;
    }
    Ok(())
}
