use std::fmt;

use thiserror::Error;

use crate::{ProcId, Time, Value};

/// Largest number of crashes the model tolerates: strictly fewer than n/2.
pub fn max_tolerated_crashes(n: usize) -> usize {
    n.saturating_sub(1) / 2
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Operation {
    Write(Value),
    Snapshot,
    /// Single-register read, used by the baseline.
    Read(ProcId),
}

/// An operation a process will invoke at `at`, or as soon as its previous
/// operation returns, whichever is later.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScheduledOp {
    pub at: Time,
    pub op: Operation,
    pub object: Option<u32>,
}

/// Per-process operation scripts.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Workload {
    pub per_proc: Vec<Vec<ScheduledOp>>,
}

impl Workload {
    pub fn empty(n: usize) -> Self {
        Workload {
            per_proc: vec![Vec::new(); n],
        }
    }

    pub fn push(&mut self, proc: ProcId, at: Time, op: Operation) -> &mut Self {
        self.per_proc[proc].push(ScheduledOp {
            at,
            op,
            object: None,
        });
        self
    }

    pub fn push_on(&mut self, proc: ProcId, at: Time, object: u32, op: Operation) -> &mut Self {
        self.per_proc[proc].push(ScheduledOp {
            at,
            op,
            object: Some(object),
        });
        self
    }

    pub fn total_ops(&self) -> usize {
        self.per_proc.iter().map(Vec::len).sum()
    }
}

/// Where a faulty process stops.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CrashPoint {
    /// Halts before any event at this time.
    AtTime(Time),
    /// Halts in the middle of its `k`-th broadcast (counting from 0): a
    /// seeded subset of the other processes receives that message, and
    /// nothing the process would have done afterwards happens.
    DuringBroadcast(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CrashSpec {
    pub proc: ProcId,
    pub point: CrashPoint,
}

/// Fixes the arrival time of particular messages. A rule matches a message
/// by channel and by the (writer, value) pair the message carries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeliveryRule {
    pub from: ProcId,
    pub to: ProcId,
    pub writer: ProcId,
    pub value: Value,
    pub arrive_at: Time,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ScriptedDelays {
    pub rules: Vec<DeliveryRule>,
    /// Unmatched messages arrive no earlier than this.
    pub default_arrival: Time,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DelayModel {
    /// Independent uniform delays in `[min, max]`.
    Async {
        min: Time,
        max: Time,
    },
    /// Uniform delays in `[d - u, d]`.
    Sync {
        d: Time,
        u: Time,
    },
    Scripted(ScriptedDelays),
}

impl fmt::Display for DelayModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DelayModel::Async { min, max } => write!(f, "async[{min},{max}]"),
            DelayModel::Sync { d, u } => write!(f, "sync:{d},{u}"),
            DelayModel::Scripted(s) => write!(f, "scripted({} rules)", s.rules.len()),
        }
    }
}

pub const DEFAULT_MAX_EVENTS: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimConfig {
    pub n: usize,
    pub max_crashes: usize,
    pub seed: u64,
    pub delay: DelayModel,
    pub workload: Workload,
    pub crashes: Vec<CrashSpec>,
    pub max_events: u64,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("process {proc}: {msg}")]
    Process { proc: ProcId, msg: String },
}

impl SimConfig {
    /// Crash-free configuration with async delays in `[1, 10]`.
    pub fn new(n: usize, seed: u64, workload: Workload) -> Self {
        SimConfig {
            n,
            max_crashes: max_tolerated_crashes(n),
            seed,
            delay: DelayModel::Async { min: 1, max: 10 },
            workload,
            crashes: Vec::new(),
            max_events: DEFAULT_MAX_EVENTS,
        }
    }

    pub fn with_delay(mut self, delay: DelayModel) -> Self {
        self.delay = delay;
        self
    }

    pub fn with_crashes(mut self, crashes: Vec<CrashSpec>) -> Self {
        self.crashes = crashes;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let err = |m: String| Err(SimError::Config(m));
        let n = self.n;
        if n == 0 {
            return err("n must be at least 1".into());
        }
        if self.max_crashes > max_tolerated_crashes(n) {
            return err(format!(
                "max_crashes = {} but at most {} of {n} processes may crash (t < n/2)",
                self.max_crashes,
                max_tolerated_crashes(n)
            ));
        }
        if self.crashes.len() > self.max_crashes {
            return err(format!(
                "{} crashes scheduled, max_crashes = {}",
                self.crashes.len(),
                self.max_crashes
            ));
        }
        let mut seen = vec![false; n];
        for c in &self.crashes {
            if c.proc >= n {
                return err(format!("crash of process {} out of range", c.proc));
            }
            if std::mem::replace(&mut seen[c.proc], true) {
                return err(format!("process {} crashes twice", c.proc));
            }
        }
        match &self.delay {
            DelayModel::Async { min, max } if min > max => {
                return err(format!("async delay bounds [{min}, {max}] are empty"))
            }
            DelayModel::Sync { d, u } if *d == 0 || u > d => {
                return err(format!(
                    "sync delays need d >= 1 and u <= d (got d = {d}, u = {u})"
                ))
            }
            DelayModel::Scripted(s) => {
                if let Some(r) = s
                    .rules
                    .iter()
                    .find(|r| r.from >= n || r.to >= n || r.writer >= n)
                {
                    return err(format!("delivery rule names a process out of range: {r:?}"));
                }
            }
            _ => {}
        }
        if self.workload.per_proc.len() > n {
            return err(format!(
                "workload lists {} processes for n = {n}",
                self.workload.per_proc.len()
            ));
        }
        for (proc, ops) in self.workload.per_proc.iter().enumerate() {
            let crash_time =
                self.crashes
                    .iter()
                    .find(|c| c.proc == proc)
                    .and_then(|c| match c.point {
                        CrashPoint::AtTime(t) => Some(t),
                        CrashPoint::DuringBroadcast(_) => None,
                    });
            for op in ops {
                if let Operation::Read(target) = op.op {
                    if target >= n {
                        return err(format!(
                            "process {proc} reads register {target} out of range"
                        ));
                    }
                }
                if let Some(t) = crash_time {
                    if op.at >= t {
                        return err(format!(
                            "process {proc} is scheduled to act at {} after crashing at {t}",
                            op.at
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crash_bound() {
        assert_eq!(max_tolerated_crashes(1), 0);
        assert_eq!(max_tolerated_crashes(2), 0);
        assert_eq!(max_tolerated_crashes(3), 1);
        assert_eq!(max_tolerated_crashes(4), 1);
        assert_eq!(max_tolerated_crashes(5), 2);
        assert_eq!(max_tolerated_crashes(7), 3);

        let mut c = SimConfig::new(4, 0, Workload::empty(4));
        c.max_crashes = 2;
        assert!(matches!(c.validate(), Err(SimError::Config(_))));
    }

    #[test]
    fn rejects_bad_configs() {
        let mut w = Workload::empty(2);
        w.push(1, 5, Operation::Snapshot);
        let c = SimConfig::new(2, 0, w.clone());
        assert!(c.validate().is_ok());

        let c = SimConfig::new(3, 0, w.clone()).with_crashes(vec![CrashSpec {
            proc: 1,
            point: CrashPoint::AtTime(3),
        }]);
        assert!(c.validate().is_err());

        let c = SimConfig::new(3, 0, w.clone()).with_crashes(vec![CrashSpec {
            proc: 7,
            point: CrashPoint::AtTime(3),
        }]);
        assert!(c.validate().is_err());

        let c = SimConfig::new(2, 0, w.clone()).with_delay(DelayModel::Sync { d: 2, u: 3 });
        assert!(c.validate().is_err());

        let mut w3 = Workload::empty(3);
        w3.push(0, 0, Operation::Read(3));
        assert!(SimConfig::new(3, 0, w3).validate().is_err());

        let c = SimConfig::new(1, 0, Workload::empty(2));
        assert!(c.validate().is_err());
    }
}
