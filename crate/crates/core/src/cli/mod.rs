//! The `rolechain` command line.
//!
//! Exit codes: 0 success, 1 validation or assertion failure, 2 usage,
//! input or file-format error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::consensus::{count_mgmt_txs, ChainConfig, ChainState, ConsensusError, StoredBlock};
use crate::hierarchy::export_dot;
use crate::ledger::{validate_tx, LedgerState};
use crate::policy::PolicyParam;
use crate::simnet::{parse_script, run_scenario, SimError};
use crate::txmodel::{deserialize_tx, AccountKey};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Overrides `run --seed` when set.
pub const SEED_ENV: &str = "ROLECHAIN_SEED";

#[derive(Debug, Parser)]
#[command(name = "rolechain", version, about = "Managed-currency ledger, simulator and chain tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario script.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the full trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write the observer's final hierarchy as DOT here.
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Write the observer's best chain here.
        #[arg(long)]
        chain: Option<PathBuf>,
    },
    /// Summarise a chain file: blocks, windows, roles and policy.
    Inspect {
        chain: PathBuf,
        /// Report the chain as of this height.
        #[arg(long)]
        height: Option<u64>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Print the hierarchy of a chain file as DOT.
    Dot {
        chain: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Validate one hex-encoded transaction against the tip of a chain file.
    ValidateTx {
        chain: PathBuf,
        tx_hex: String,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Print the effective policy parameters of a chain file.
    Params {
        chain: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
}

/// Node settings a chain file does not record.
#[derive(Debug, Args)]
struct ConfigArgs {
    #[arg(long, default_value_t = ChainConfig::default().y_min)]
    y_min: u32,
    #[arg(long, default_value_t = ChainConfig::default().bootstrap_window)]
    bootstrap_window: u64,
    #[arg(long, default_value_t = ChainConfig::default().subsidy)]
    subsidy: u64,
}

impl ConfigArgs {
    fn config(&self) -> ChainConfig {
        ChainConfig { y_min: self.y_min, bootstrap_window: self.bootstrap_window, subsidy: self.subsidy, ..ChainConfig::default() }
    }
}

/// A failed command: exit code plus message for stderr.
struct Failure(i32, String);

type CmdResult = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure(EXIT_USAGE, msg.into())
}

fn write_file(path: &Path, bytes: &[u8]) -> CmdResult {
    std::fs::write(path, bytes).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

/// Runs the CLI. `env_seed` is the value of [`SEED_ENV`], if any.
pub fn run_cli<I, T>(args: I, env_seed: Option<String>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return if code == 0 { EXIT_OK } else { EXIT_USAGE };
        }
    };
    let mut text = String::new();
    let result = match cli.command {
        Command::Run { scenario, seed, trace, dot, chain } => {
            cmd_run(&mut text, &scenario, seed, env_seed, trace.as_deref(), dot.as_deref(), chain.as_deref())
        }
        Command::Inspect { chain, height, config } => {
            load(&chain, &config).and_then(|c| cmd_inspect(&mut text, &c, height))
        }
        Command::Dot { chain, config } => load(&chain, &config).map(|c| text.push_str(&chain_dot(c.tip_state()))),
        Command::ValidateTx { chain, tx_hex, config } => {
            load(&chain, &config).and_then(|c| cmd_validate_tx(&mut text, &c, &tx_hex))
        }
        Command::Params { chain, config } => load(&chain, &config).map(|c| params_report(&mut text, c.tip_state())),
    };
    let _ = out.write_all(text.as_bytes());
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure(code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}

fn load(path: &Path, config: &ConfigArgs) -> Result<ChainState, Failure> {
    let bytes = std::fs::read(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    ChainState::from_chain_file(&bytes, config.config()).map_err(|e| match e {
        ConsensusError::Wire(_) | ConsensusError::NotGenesis => usage(format!("{}: corrupt chain file: {e}", path.display())),
        e => Failure(EXIT_FAILED, format!("{}: invalid block: {e} [{}]", path.display(), e.code())),
    })
}

fn cmd_run(
    out: &mut String,
    path: &Path,
    seed: Option<u64>,
    env_seed: Option<String>,
    trace: Option<&Path>,
    dot: Option<&Path>,
    chain: Option<&Path>,
) -> CmdResult {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let mut config = parse_script(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let seed = match env_seed {
        Some(s) => Some(s.trim().parse().map_err(|_| usage(format!("{SEED_ENV} is not a number: `{s}`")))?),
        None => seed,
    };
    if let Some(s) = seed {
        config.settings.seed = s;
    }
    let name = path.file_stem().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
    let _ = writeln!(out, "scenario {name} seed={} ticks={}", config.settings.seed, config.settings.ticks);
    match run_scenario(&config) {
        Ok(report) => {
            let asserts: Vec<&String> = report.sim.trace.iter().filter(|l| l.contains(" event=assert-ok ")).collect();
            for line in &asserts {
                let _ = writeln!(out, "pass {}", line.split(" event=assert-ok ").nth(1).unwrap_or(""));
            }
            for line in report.sim.trace.iter().filter(|l| l.starts_with("final ")) {
                let _ = writeln!(out, "{line}");
            }
            let _ = writeln!(out, "ok: {} assertions passed", asserts.len());
            if let Some(p) = trace {
                write_file(p, report.trace().as_bytes())?;
            }
            if let Some(p) = dot {
                write_file(p, report.dot().as_bytes())?;
            }
            if let Some(p) = chain {
                write_file(p, &report.chain_file())?;
            }
            Ok(())
        }
        Err(SimError::AssertionFailed { tick, line, predicate, detail, trace: text }) => {
            if let Some(p) = trace {
                write_file(p, text.as_bytes())?;
            }
            let _ = writeln!(out, "FAIL {predicate} line={line} tick={tick} {detail}");
            Err(Failure(EXIT_FAILED, format!("assertion `{predicate}` on line {line} failed")))
        }
        Err(SimError::Script(e)) => Err(usage(format!("{}: {e}", path.display()))),
    }
}

fn miner_of(b: &StoredBlock) -> String {
    b.block
        .transactions
        .first()
        .filter(|t| t.is_coinbase())
        .and_then(|cb| cb.outputs.first())
        .map_or_else(|| "-".to_string(), |o| o.recipient.short())
}

/// One window of the dependent-mining rule, recomputed from block contents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowRow {
    pub start: u64,
    pub end: u64,
    pub dependent: bool,
    pub required: u32,
    pub found: u32,
    pub complete: bool,
}

/// Windows covering heights `1..=blocks.len()-1` of a best chain prefix.
pub fn window_rows(chain: &ChainState, blocks: &[&StoredBlock]) -> Vec<WindowRow> {
    let mut rows = Vec::new();
    let mut h = 1usize;
    while h < blocks.len() {
        let before = chain.state_after(&blocks[h - 1].hash).expect("ancestor state");
        let policy = &before.policy;
        let dependent = policy.is_dependent();
        let len = if dependent { policy.effective(PolicyParam::MgmtIntervalY).max(1) as usize } else { 1 };
        let required = if dependent { policy.effective(PolicyParam::MgmtTxCountX) } else { 0 };
        let end = (h + len).min(blocks.len());
        let found = blocks[h..end].iter().map(|b| count_mgmt_txs(&b.block)).sum();
        rows.push(WindowRow {
            start: h as u64,
            end: (h + len - 1) as u64,
            dependent,
            required,
            found,
            complete: end == h + len,
        });
        h += len;
    }
    rows
}

fn cmd_inspect(out: &mut String, chain: &ChainState, height: Option<u64>) -> CmdResult {
    let best = chain.best_chain();
    let upto = match height {
        Some(h) if h > chain.height() => return Err(usage(format!("height {h} is above the tip ({})", chain.height()))),
        Some(h) => h as usize,
        None => best.len() - 1,
    };
    let blocks = &best[..=upto];
    let tip = blocks[upto];
    let state = chain.state_after(&tip.hash).expect("best chain state");
    let _ = writeln!(out, "chain height={} tip={} genesis={}", upto, tip.hash, chain.genesis_hash());
    let _ = writeln!(out, "root {}", chain.root());
    let _ = writeln!(out, "[blocks]");
    for b in blocks {
        let _ = writeln!(
            out,
            "height={} hash={} txs={} mgmt={} miner={} fees={} minted={}",
            b.block.height(),
            b.hash.short(),
            b.block.transactions.len(),
            count_mgmt_txs(&b.block),
            miner_of(b),
            b.fees,
            b.minted
        );
    }
    let _ = writeln!(out, "[windows]");
    for w in window_rows(chain, blocks) {
        let _ = writeln!(
            out,
            "window start={} end={} mode={} mgmt={} required={}{}",
            w.start,
            w.end,
            if w.dependent { "dependent" } else { "independent" },
            w.found,
            w.required,
            if w.complete { "" } else { " open" }
        );
    }
    let _ = writeln!(out, "[roles]");
    for (k, r) in state.roles.iter() {
        let parent = state.hierarchy.parent(k).map_or_else(|| "-".to_string(), |p| p.short());
        let _ = writeln!(
            out,
            "account={} roles={} locked={} parent={} balance={}",
            k.short(),
            r.roles,
            if r.locked { "yes" } else { "no" },
            parent,
            state.balance(k)
        );
    }
    let _ = writeln!(out, "[coin]");
    let _ = writeln!(out, "total={} utxos={}", state.total_coin(), state.utxos.len());
    params_report(out, &state);
    Ok(())
}

fn params_report(out: &mut String, state: &LedgerState) {
    let _ = writeln!(out, "[params]");
    for p in PolicyParam::ALL {
        match state.policy.entry(p) {
            Some(e) => {
                let _ = writeln!(
                    out,
                    "{}={} permanent={} depth={} height={}",
                    p,
                    e.value,
                    if e.permanent { "yes" } else { "no" },
                    e.setter_depth,
                    e.set_height
                );
            }
            None => {
                let _ = writeln!(out, "{}=unset default={}", p, p.default_value());
            }
        }
    }
    let _ = writeln!(out, "y_min={} bootstrap_window={}", state.policy.y_min, state.policy.bootstrap_window);
}

/// Hierarchy DOT for a chain without agent names: accounts are labelled by
/// key prefix and every coin holder is drawn, registered or not.
pub fn chain_dot(state: &LedgerState) -> String {
    let holders: Vec<AccountKey> = state.utxos.values().filter(|e| e.coin_amount().is_some()).map(|e| e.owner).collect();
    export_dot(&state.hierarchy, &state.roles, &BTreeMap::new(), &holders)
}

fn cmd_validate_tx(out: &mut String, chain: &ChainState, tx_hex: &str) -> CmdResult {
    let bytes = hex::decode(tx_hex.trim()).map_err(|e| usage(format!("bad hex: {e}")))?;
    let tx = deserialize_tx(&bytes).map_err(|e| usage(format!("bad transaction encoding: {e}")))?;
    let mut state = chain.tip_state().clone();
    state.begin_block(state.height + 1);
    let mode = tx.mode().map_or_else(|| format!("version-{}", tx.version), |m| m.to_string());
    match validate_tx(&tx, &state) {
        Ok(v) => {
            let _ = writeln!(out, "valid txid={} mode={} fee={} minted={}", tx.txid(), mode, v.fee, v.minted);
            Ok(())
        }
        Err(e) => {
            let _ = writeln!(out, "invalid txid={} mode={} code={} reason={}", tx.txid(), mode, e.code(), e);
            Err(Failure(EXIT_FAILED, format!("transaction rejected: {}", e.code())))
        }
    }
}
