//! Seeded workload and crash-schedule generators.
//!
//! Written values encode the writer and its write index, so every value is
//! unique per writer and never equals the initial value 0.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{
    max_tolerated_crashes, CrashPoint, CrashSpec, DelayModel, Operation, SimConfig, Workload,
};
use crate::{ProcId, Time, Value};

/// The `index`-th write (from 0) of `proc`.
pub fn unique_value(proc: ProcId, index: usize) -> Value {
    ((index as Value + 1) << 16) | proc as Value
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WorkloadKind {
    /// Writes and snapshots in even proportion with spread-out invocations.
    Random,
    /// Mostly writes issued back to back, so that writes land while the
    /// previous one is still unvalidated.
    WriteHeavy,
}

impl FromStr for WorkloadKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "random" => Ok(WorkloadKind::Random),
            "write-heavy" => Ok(WorkloadKind::WriteHeavy),
            other => Err(format!(
                "unknown workload `{other}` (expected random or write-heavy)"
            )),
        }
    }
}

impl fmt::Display for WorkloadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WorkloadKind::Random => "random",
            WorkloadKind::WriteHeavy => "write-heavy",
        })
    }
}

/// Independent random streams derived from one seed.
const WORKLOAD_STREAM: u64 = 1;
const CRASH_STREAM: u64 = 2;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// `ops` operations spread over `n` processes.
pub fn generate(kind: WorkloadKind, n: usize, ops: usize, seed: u64) -> Workload {
    let mut rng = stream(seed, WORKLOAD_STREAM);
    let (write_p, max_gap) = match kind {
        WorkloadKind::Random => (0.5, 15),
        WorkloadKind::WriteHeavy => (0.8, 2),
    };
    let mut w = Workload::empty(n);
    let mut clock: Vec<Time> = vec![0; n];
    let mut writes = vec![0usize; n];
    for _ in 0..ops {
        let p = rng.gen_range(0..n);
        clock[p] += rng.gen_range(0..=max_gap);
        let op = if rng.gen_bool(write_p) {
            writes[p] += 1;
            Operation::Write(unique_value(p, writes[p] - 1))
        } else {
            Operation::Snapshot
        };
        w.push(p, clock[p], op);
    }
    w
}

/// Up to `crashes` faulty processes at seeded points. A process crashing
/// at a time keeps only the operations scheduled before it.
pub fn crash_schedule(
    n: usize,
    crashes: usize,
    seed: u64,
    workload: &mut Workload,
) -> Vec<CrashSpec> {
    let mut rng = stream(seed, CRASH_STREAM);
    let mut procs: Vec<ProcId> = (0..n).collect();
    procs.shuffle(&mut rng);
    let horizon = workload
        .per_proc
        .iter()
        .flatten()
        .map(|o| o.at)
        .max()
        .unwrap_or(0)
        + 20;
    let mut out = Vec::new();
    for &proc in procs.iter().take(crashes.min(max_tolerated_crashes(n))) {
        let point = if rng.gen_bool(0.5) {
            let t = rng.gen_range(0..=horizon);
            if let Some(ops) = workload.per_proc.get_mut(proc) {
                ops.retain(|o| o.at < t);
            }
            CrashPoint::AtTime(t)
        } else {
            CrashPoint::DuringBroadcast(rng.gen_range(0..6))
        };
        out.push(CrashSpec { proc, point });
    }
    out.sort_by_key(|c| c.proc);
    out
}

/// Configuration used by sweeps: generated workload, random async delays
/// in `[1, 10]`, and `crashes` (capped at the tolerated number) crashes.
pub fn random_config(
    n: usize,
    seed: u64,
    ops: usize,
    crashes: usize,
    kind: WorkloadKind,
) -> SimConfig {
    let mut workload = generate(kind, n, ops, seed);
    let schedule = crash_schedule(n, crashes, seed, &mut workload);
    SimConfig::new(n, seed, workload)
        .with_delay(DelayModel::Async { min: 1, max: 10 })
        .with_crashes(schedule)
}
