//! Deterministic multi-agent simulation.
//!
//! Every agent runs its own chain and pools; messages travel through a
//! latency queue keyed by delivery tick. All randomness comes from one
//! seeded generator, so a script and a seed fix the trace byte for byte.

mod check;
mod engine;
mod script;

use thiserror::Error;

pub use check::miner_counts;
pub use engine::{Labelled, Node, ReplayRecord, Sim};
pub use script::{
    parse_script, Action, Behavior, Event, Latency, Predicate, ScriptError, Settings, SimConfig, TxOpts, When, SIM,
};

#[derive(Debug, Clone, Error)]
pub enum SimError {
    #[error("{0}")]
    Script(#[from] ScriptError),
    #[error("assertion `{predicate}` (line {line}) failed at tick {tick}: {detail}")]
    AssertionFailed { tick: u64, line: usize, predicate: &'static str, detail: String, trace: String },
}

/// A finished run.
#[derive(Debug, Clone)]
pub struct SimReport {
    pub sim: Sim,
}

impl SimReport {
    pub fn trace(&self) -> String {
        self.sim.trace_text()
    }

    pub fn dot(&self) -> String {
        self.sim.dot()
    }

    pub fn chain_file(&self) -> Vec<u8> {
        self.sim.observer().chain.to_chain_file()
    }
}

pub fn run_scenario(config: &SimConfig) -> Result<SimReport, SimError> {
    let mut sim = Sim::new(config)?;
    sim.run(config)?;
    Ok(SimReport { sim })
}

/// Parses and runs `text`, optionally overriding its seed.
pub fn run_script(text: &str, seed: Option<u64>) -> Result<SimReport, SimError> {
    let mut config = parse_script(text)?;
    if let Some(s) = seed {
        config.settings.seed = s;
    }
    run_scenario(&config)
}

/// Scenarios shipped with the crate.
pub mod scenarios {
    pub const ORG_CHART: &str = include_str!("../../../../scenarios/org-chart.scn");
    pub const REPLAY: &str = include_str!("../../../../scenarios/replay.scn");
    pub const TAKEOVER: &str = include_str!("../../../../scenarios/takeover.scn");
    pub const FREEZE: &str = include_str!("../../../../scenarios/freeze.scn");
    pub const FREEZE_INDEPENDENT: &str = include_str!("../../../../scenarios/freeze_independent.scn");
    pub const MOVE: &str = include_str!("../../../../scenarios/move.scn");
    pub const CONVERGE: &str = include_str!("../../../../scenarios/converge.scn");
    pub const PARTITION: &str = include_str!("../../../../scenarios/partition.scn");

    pub const ALL: [(&str, &str); 8] = [
        ("org-chart", ORG_CHART),
        ("replay", REPLAY),
        ("takeover", TAKEOVER),
        ("freeze", FREEZE),
        ("freeze_independent", FREEZE_INDEPENDENT),
        ("move", MOVE),
        ("converge", CONVERGE),
        ("partition", PARTITION),
    ];
}
