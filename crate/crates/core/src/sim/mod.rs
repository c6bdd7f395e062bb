//! Seeded discrete-event simulation of `n` crash-prone processes connected
//! by reliable asynchronous FIFO channels.
//!
//! The same [`Simulation`] loop drives the snapshot protocol
//! ([`ScsProcess`]) and the register baseline ([`crate::abd::AbdProcess`]).
//! A run is fully determined by its [`SimConfig`], seed included.

mod config;
mod engine;
pub mod invariants;
mod metrics;
pub mod scenarios;
mod scs;
pub mod workload;

pub use config::{
    max_tolerated_crashes, CrashPoint, CrashSpec, DelayModel, DeliveryRule, Operation, ScheduledOp,
    ScriptedDelays, SimConfig, SimError, Workload, DEFAULT_MAX_EVENTS,
};
pub use engine::{OpResult, Outgoing, Process, SimOutcome, Simulation, Step};
pub use metrics::{
    Chain, Metrics, MetricsDocument, OpRow, UpdateKey, UpdateRow, ValidationEvent, VcSample,
    VcTrace,
};
pub use scs::{ScsMsg, ScsProcess};

use crate::History;

/// Runs the snapshot protocol on `config` to quiescence (or the event cap).
pub fn run_simulation(config: &SimConfig) -> Result<SimOutcome<ScsProcess>, SimError> {
    let mut sim = Simulation::new(config, ScsProcess::group(config.n))?;
    sim.run()?;
    Ok(sim.finish())
}

/// The three files a run produces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunArtifacts {
    pub history: History,
    pub metrics: Metrics,
    pub trace: VcTrace,
}

impl<P> From<SimOutcome<P>> for RunArtifacts {
    fn from(o: SimOutcome<P>) -> Self {
        RunArtifacts {
            history: o.history,
            metrics: o.metrics,
            trace: o.trace,
        }
    }
}

impl RunArtifacts {
    /// File names with their exact contents, as [`RunArtifacts::write_to`] writes them.
    pub fn files(&self) -> [(&'static str, String); 3] {
        [
            ("history.jsonl", self.history.to_jsonl()),
            ("metrics.json", self.metrics.to_json() + "\n"),
            ("vc_trace.json", self.trace.to_json() + "\n"),
        ]
    }

    /// Writes `history.jsonl`, `metrics.json` and `vc_trace.json` into `dir`.
    pub fn write_to(&self, dir: &std::path::Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, contents) in self.files() {
            std::fs::write(dir.join(name), contents)?;
        }
        Ok(())
    }
}
