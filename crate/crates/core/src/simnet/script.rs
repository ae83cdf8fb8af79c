//! Scenario scripts: one event per line, `tick | actor | action | args`.

use std::collections::BTreeMap;
use std::str::FromStr;

use thiserror::Error;

use crate::consensus::ChainConfig;
use crate::policy::PolicyParam;
use crate::txmodel::{PolicyPayload, RoleSet};
use crate::wallet::CoinFilter;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {msg}")]
pub struct ScriptError {
    pub line: usize,
    pub msg: String,
}

fn err<T>(line: usize, msg: impl Into<String>) -> Result<T, ScriptError> {
    Err(ScriptError { line, msg: msg.into() })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Latency {
    Fixed(u64),
    /// Inclusive range.
    Uniform(u64, u64),
}

impl FromStr for Latency {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("bad latency `{s}`, expected fixed:N or uniform:A-B");
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "fixed" => rest.parse().map(Latency::Fixed).map_err(|_| bad()),
            "uniform" => {
                let (a, b) = rest.split_once('-').ok_or_else(bad)?;
                let (a, b): (u64, u64) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
                if a > b {
                    return Err(bad());
                }
                Ok(Latency::Uniform(a, b))
            }
            _ => Err(bad()),
        }
    }
}

/// Run-wide settings, from the `config` line.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub seed: u64,
    pub ticks: u64,
    /// Expected blocks per tick across all miners.
    pub block_rate: f64,
    pub latency: Latency,
    pub chain: ChainConfig,
}

impl Default for Settings {
    fn default() -> Self {
        Settings { seed: 1, ticks: 200, block_rate: 0.2, latency: Latency::Fixed(1), chain: ChainConfig::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum When {
    At(u64),
    /// After the horizon, once the network has drained.
    End,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Behavior {
    Root,
    HonestMiner,
    FavoredMiner,
    Manager,
    Law,
    AccountManager,
    User,
    Replayer,
}

impl Behavior {
    pub fn name(self) -> &'static str {
        match self {
            Behavior::Root => "root",
            Behavior::HonestMiner => "honest-miner",
            Behavior::FavoredMiner => "favored-miner",
            Behavior::Manager => "manager",
            Behavior::Law => "law",
            Behavior::AccountManager => "account-manager",
            Behavior::User => "user",
            Behavior::Replayer => "replayer",
        }
    }

    pub fn is_miner(self) -> bool {
        matches!(self, Behavior::HonestMiner | Behavior::FavoredMiner)
    }
}

impl FromStr for Behavior {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "root" => Behavior::Root,
            "honest-miner" | "miner" => Behavior::HonestMiner,
            "favored-miner" => Behavior::FavoredMiner,
            "manager" => Behavior::Manager,
            "law" => Behavior::Law,
            "account-manager" => Behavior::AccountManager,
            "user" => Behavior::User,
            "replayer" => Behavior::Replayer,
            _ => return Err(format!("unknown behavior `{s}`")),
        })
    }
}

/// Fields shared by every transaction-producing action.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TxOpts {
    pub label: Option<String>,
    pub fee: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Config(Settings),
    Spawn { behavior: Behavior, share: f64, label: Option<String>, replay_delay: Option<u64> },
    Policy { payloads: Vec<PolicyPayload>, opts: TxOpts },
    SetRoles { target: String, roles: RoleSet, opts: TxOpts },
    Lock { target: String, locked: bool, opts: TxOpts },
    Pay { target: String, amount: u64, coins: CoinFilter, opts: TxOpts },
    Mint { target: String, amount: u64, opts: TxOpts },
    Seize { victim: String, target: String, amount: Option<u64>, opts: TxOpts },
    Heartbeat { opts: TxOpts },
    Keepalive { via: Option<String> },
    Replay { label: String },
    Partition { groups: Vec<Vec<String>> },
    Heal,
    Assert(Predicate),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Predicate {
    Roles { node: String, roles: RoleSet, locked: bool },
    Unregistered { node: String },
    Parent { node: String, parent: Option<String> },
    LawScope { node: String, members: Vec<String> },
    ManagerScope { node: String, members: Vec<String> },
    TipsEqual,
    Accepted { label: String },
    Rejected { label: String, code: Option<String> },
    Balance { node: String, amount: u64 },
    NoDuplicateTxids,
    HonestShare { min: f64 },
    ReplaysRejected { min: usize },
    WindowCompliance,
    Conservation,
    MinerBlocks { miner: String, min: u64, after: u64 },
    Height { min: u64 },
}

impl Predicate {
    pub fn name(&self) -> &'static str {
        match self {
            Predicate::Roles { .. } => "roles",
            Predicate::Unregistered { .. } => "unregistered",
            Predicate::Parent { .. } => "parent",
            Predicate::LawScope { .. } => "law-scope",
            Predicate::ManagerScope { .. } => "manager-scope",
            Predicate::TipsEqual => "tips-equal",
            Predicate::Accepted { .. } => "accepted",
            Predicate::Rejected { .. } => "rejected",
            Predicate::Balance { .. } => "balance",
            Predicate::NoDuplicateTxids => "no-duplicate-txids",
            Predicate::HonestShare { .. } => "honest-share",
            Predicate::ReplaysRejected { .. } => "replays-rejected",
            Predicate::WindowCompliance => "window-compliance",
            Predicate::Conservation => "conservation",
            Predicate::MinerBlocks { .. } => "miner-blocks",
            Predicate::Height { .. } => "height",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub line: usize,
    pub when: When,
    pub actor: String,
    pub action: Action,
}

/// The actor name for network-level events.
pub const SIM: &str = "sim";

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub settings: Settings,
    /// Sorted by time; lines at the same time keep file order.
    pub events: Vec<Event>,
}

/// Splits on whitespace, keeping double-quoted runs together.
fn tokenize(line: usize, s: &str) -> Result<Vec<String>, ScriptError> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut any = false;
    for c in s.chars() {
        match c {
            '"' => {
                quoted = !quoted;
                any = true;
            }
            c if c.is_whitespace() && !quoted => {
                if any {
                    out.push(std::mem::take(&mut cur));
                    any = false;
                }
            }
            c => {
                cur.push(c);
                any = true;
            }
        }
    }
    if quoted {
        return err(line, "unterminated quote");
    }
    if any {
        out.push(cur);
    }
    Ok(out)
}

struct Args {
    line: usize,
    positional: Vec<String>,
    options: BTreeMap<String, String>,
}

impl Args {
    fn new(line: usize, tokens: Vec<String>) -> Result<Args, ScriptError> {
        let mut positional = Vec::new();
        let mut options = BTreeMap::new();
        for t in tokens {
            match t.split_once('=') {
                Some((k, v)) => {
                    if options.insert(k.to_string(), v.to_string()).is_some() {
                        return err(line, format!("option `{k}` given twice"));
                    }
                }
                None => positional.push(t),
            }
        }
        Ok(Args { line, positional, options })
    }

    fn positional(&self, n: usize, what: &str) -> Result<&str, ScriptError> {
        match self.positional.get(n) {
            Some(s) => Ok(s),
            None => err(self.line, format!("missing {what}")),
        }
    }

    fn parse_pos<T: FromStr>(&self, n: usize, what: &str) -> Result<T, ScriptError> {
        let s = self.positional(n, what)?;
        s.parse().or_else(|_| err(self.line, format!("bad {what} `{s}`")))
    }

    fn opt<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, ScriptError> {
        match self.options.remove(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).or_else(|_| err(self.line, format!("bad value for {key}: `{v}`"))),
        }
    }

    fn tx_opts(&mut self) -> Result<TxOpts, ScriptError> {
        Ok(TxOpts { label: self.opt("label")?, fee: self.opt("fee")?.unwrap_or(0) })
    }

    /// Rejects leftover positional arguments or options.
    fn finish(self, max_positional: usize) -> Result<(), ScriptError> {
        if let Some((k, _)) = self.options.iter().next() {
            return err(self.line, format!("unknown option `{k}`"));
        }
        if self.positional.len() > max_positional {
            return err(self.line, format!("unexpected argument `{}`", self.positional[max_positional]));
        }
        Ok(())
    }
}

fn names(s: &str) -> Vec<String> {
    s.split(',').filter(|x| !x.is_empty()).map(str::to_string).collect()
}

fn parse_roles(line: usize, s: &str) -> Result<RoleSet, ScriptError> {
    s.parse().or_else(|_| err(line, format!("bad role letters `{s}`")))
}

fn parse_config(mut a: Args) -> Result<Settings, ScriptError> {
    let mut s = Settings::default();
    if let Some(v) = a.opt("seed")? {
        s.seed = v;
    }
    if let Some(v) = a.opt("ticks")? {
        s.ticks = v;
    }
    if let Some(v) = a.opt::<f64>("block-rate")? {
        if !(0.0..=1.0).contains(&v) {
            return err(a.line, "block-rate must lie in [0, 1]");
        }
        s.block_rate = v;
    }
    if let Some(v) = a.options.remove("latency") {
        s.latency = v.parse().or_else(|e| err(a.line, e))?;
    }
    if let Some(v) = a.opt("y-min")? {
        s.chain.y_min = v;
    }
    if let Some(v) = a.opt("bootstrap-window")? {
        s.chain.bootstrap_window = v;
    }
    if let Some(v) = a.opt("subsidy")? {
        s.chain.subsidy = v;
    }
    a.finish(0)?;
    Ok(s)
}

fn parse_policy(mut a: Args) -> Result<Action, ScriptError> {
    let opts = a.tx_opts()?;
    let line = a.line;
    let mut payloads = Vec::new();
    for (k, v) in std::mem::take(&mut a.options) {
        let param: PolicyParam = k.parse().or_else(|_| err(line, format!("unknown policy parameter `{k}`")))?;
        let (v, permanent) = match v.strip_suffix('!') {
            Some(v) => (v, true),
            None => (v.as_str(), false),
        };
        let value = v.parse().or_else(|_| err(line, format!("bad value for {k}: `{v}`")))?;
        payloads.push(PolicyPayload { param_id: param.id(), permanent, value });
    }
    if payloads.is_empty() {
        return err(line, "policy needs at least one NAME=VALUE");
    }
    payloads.sort_by_key(|p| p.param_id);
    a.finish(0)?;
    Ok(Action::Policy { payloads, opts })
}

fn parse_predicate(mut a: Args) -> Result<Predicate, ScriptError> {
    let line = a.line;
    let kind = a.positional(0, "predicate")?.to_string();
    let p = match kind.as_str() {
        "roles" => {
            let node = a.positional(1, "node")?.to_string();
            let roles = parse_roles(line, a.positional(2, "roles")?)?;
            let locked = match a.positional.get(3).map(String::as_str) {
                None => false,
                Some("locked") => true,
                Some(x) => return err(line, format!("expected `locked`, found `{x}`")),
            };
            a.positional.truncate(3);
            Predicate::Roles { node, roles, locked }
        }
        "unregistered" => Predicate::Unregistered { node: a.positional(1, "node")?.to_string() },
        "parent" => {
            let node = a.positional(1, "node")?.to_string();
            let parent = a.positional(2, "parent")?;
            let parent = (parent != "-").then(|| parent.to_string());
            Predicate::Parent { node, parent }
        }
        "law-scope" | "manager-scope" => {
            let node = a.positional(1, "node")?.to_string();
            let members = names(a.positional(2, "member list")?);
            if kind == "law-scope" {
                Predicate::LawScope { node, members }
            } else {
                Predicate::ManagerScope { node, members }
            }
        }
        "tips-equal" => Predicate::TipsEqual,
        "accepted" => Predicate::Accepted { label: a.positional(1, "label")?.to_string() },
        "rejected" => Predicate::Rejected {
            label: a.positional(1, "label")?.to_string(),
            code: a.positional.get(2).cloned(),
        },
        "balance" => Predicate::Balance { node: a.positional(1, "node")?.to_string(), amount: a.parse_pos(2, "amount")? },
        "no-duplicate-txids" => Predicate::NoDuplicateTxids,
        "honest-share" => {
            let min: f64 = a.parse_pos(1, "share")?;
            Predicate::HonestShare { min }
        }
        "replays-rejected" => Predicate::ReplaysRejected { min: a.opt("min")?.unwrap_or(1) },
        "window-compliance" => Predicate::WindowCompliance,
        "conservation" => Predicate::Conservation,
        "miner-blocks" => Predicate::MinerBlocks {
            miner: a.positional(1, "miner")?.to_string(),
            min: a.parse_pos(2, "count")?,
            after: a.opt("after")?.unwrap_or(0),
        },
        "height" => Predicate::Height { min: a.parse_pos(1, "height")? },
        other => return err(line, format!("unknown predicate `{other}`")),
    };
    let max = match &p {
        Predicate::Roles { .. } => 3,
        Predicate::Parent { .. }
        | Predicate::LawScope { .. }
        | Predicate::ManagerScope { .. }
        | Predicate::Balance { .. }
        | Predicate::MinerBlocks { .. }
        | Predicate::Rejected { .. } => 3,
        Predicate::Unregistered { .. } | Predicate::Accepted { .. } | Predicate::HonestShare { .. } | Predicate::Height { .. } => 2,
        _ => 1,
    };
    a.finish(max)?;
    Ok(p)
}

fn parse_action(line: usize, actor: &str, action: &str, tokens: Vec<String>) -> Result<Action, ScriptError> {
    let mut a = Args::new(line, tokens)?;
    let sim_only = matches!(action, "config" | "partition" | "heal" | "assert");
    if sim_only != (actor == SIM) {
        return if sim_only {
            err(line, format!("`{action}` belongs to the `{SIM}` actor"))
        } else {
            err(line, format!("`{SIM}` cannot perform `{action}`"))
        };
    }
    let act = match action {
        "config" => return parse_config(a).map(Action::Config),
        "policy" => return parse_policy(a),
        "assert" => return parse_predicate(a).map(Action::Assert),
        "partition" => {
            let groups: Vec<Vec<String>> =
                a.positional.join(" ").split('/').map(|g| g.split([',', ' ']).filter(|x| !x.is_empty()).map(str::to_string).collect()).collect();
            if groups.iter().any(Vec::is_empty) || groups.len() < 2 {
                return err(line, "partition needs at least two non-empty groups separated by `/`");
            }
            a.positional.clear();
            Action::Partition { groups }
        }
        "heal" => Action::Heal,
        "spawn" => {
            let behavior = a.positional(0, "behavior")?.parse().or_else(|e: String| err(line, e))?;
            let share = a.opt("share")?.unwrap_or(0.0);
            if !(0.0..=1.0).contains(&share) {
                return err(line, "share must lie in [0, 1]");
            }
            Action::Spawn { behavior, share, label: a.opt("label")?, replay_delay: a.opt("replay-delay")? }
        }
        "set-roles" => Action::SetRoles {
            target: a.positional(0, "target")?.to_string(),
            roles: parse_roles(line, a.positional(1, "roles")?)?,
            opts: a.tx_opts()?,
        },
        "lock" | "unlock" => Action::Lock {
            target: a.positional(0, "target")?.to_string(),
            locked: action == "lock",
            opts: a.tx_opts()?,
        },
        "pay" => {
            let coins = match a.options.remove("coins").as_deref() {
                None | Some("any") => CoinFilter::Any,
                Some("coinbase") => CoinFilter::CoinbaseOnly,
                Some("normal") => CoinFilter::NormalOnly,
                Some(x) => return err(line, format!("bad coins `{x}`, expected coinbase, normal or any")),
            };
            Action::Pay {
                target: a.positional(0, "target")?.to_string(),
                amount: a.parse_pos(1, "amount")?,
                coins,
                opts: a.tx_opts()?,
            }
        }
        "mint" => Action::Mint {
            target: a.positional(0, "target")?.to_string(),
            amount: a.parse_pos(1, "amount")?,
            opts: a.tx_opts()?,
        },
        "seize" => Action::Seize {
            victim: a.positional(0, "victim")?.to_string(),
            target: a.positional(1, "target")?.to_string(),
            amount: if a.positional.len() > 2 { Some(a.parse_pos(2, "amount")?) } else { None },
            opts: a.tx_opts()?,
        },
        "heartbeat" => Action::Heartbeat { opts: a.tx_opts()? },
        "keepalive" => Action::Keepalive { via: a.opt("via")? },
        "replay" => Action::Replay { label: a.positional(0, "label")?.to_string() },
        other => return err(line, format!("unknown action `{other}`")),
    };
    let max = match &act {
        Action::Spawn { .. } | Action::Replay { .. } => 1,
        Action::SetRoles { .. } | Action::Pay { .. } | Action::Mint { .. } => 2,
        Action::Lock { .. } => 1,
        Action::Seize { .. } => 3,
        _ => 0,
    };
    a.finish(max)?;
    Ok(act)
}

fn is_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

pub fn parse_script(text: &str) -> Result<SimConfig, ScriptError> {
    let mut settings = None;
    let mut events = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.splitn(4, '|').map(str::trim).collect();
        if fields.len() < 3 {
            return err(line, "expected `tick | actor | action | args`");
        }
        let when = match fields[0] {
            "end" => When::End,
            t => When::At(t.parse().or_else(|_| err(line, format!("bad tick `{t}`")))?),
        };
        let actor = fields[1];
        if !is_name(actor) {
            return err(line, format!("bad actor name `{actor}`"));
        }
        let tokens = tokenize(line, fields.get(3).copied().unwrap_or(""))?;
        let action = parse_action(line, actor, fields[2], tokens)?;
        match &action {
            Action::Config(s) => {
                if when != When::At(0) || settings.is_some() {
                    return err(line, "a single `config` line is allowed, at tick 0");
                }
                settings = Some(s.clone());
                continue;
            }
            Action::Spawn { .. } if when != When::At(0) => return err(line, "agents spawn at tick 0"),
            Action::Assert(_) | Action::Heal | Action::Partition { .. } => {}
            _ if when == When::End => return err(line, "only assertions run at `end`"),
            _ => {}
        }
        events.push(Event { line, when, actor: actor.to_string(), action });
    }
    events.sort_by_key(|e| e.when);
    Ok(SimConfig { settings: settings.unwrap_or_default(), events })
}
