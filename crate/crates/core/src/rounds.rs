//! Asynchronous rounds over a fresh snapshot object per round.
//!
//! Round `r` uses object `r` (from 1). A process enters round `r + 1` only
//! once its round-`r` operations have returned, and never touches an
//! object again after moving past it. Processes may be in different rounds
//! at the same time; every object keeps handling messages for the others.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::check::{check_sc_fast, BruteForce, CheckError, Verdict};
use crate::history::{History, OpRef};
use crate::model::{is_legal_word, SeqOp};
use crate::sim::workload::unique_value;
use crate::sim::{
    max_tolerated_crashes, run_simulation, CrashPoint, CrashSpec, DelayModel, Operation,
    ScsProcess, SimConfig, SimError, SimOutcome, Workload, DEFAULT_MAX_EVENTS,
};
use crate::ProcId;

/// A process that never leaves `round`: after its regular operations there
/// it keeps writing and snapshotting for `extra_cycles` more cycles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Linger {
    pub proc: ProcId,
    pub round: u32,
    pub extra_cycles: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundConfig {
    pub n: usize,
    pub rounds: u32,
    /// Write-then-snapshot cycles each process performs per round.
    pub cycles: usize,
    pub seed: u64,
    pub delay: DelayModel,
    pub crashes: Vec<CrashSpec>,
    pub linger: Option<Linger>,
    pub max_events: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RoundError {
    #[error("invalid round configuration: {0}")]
    Config(String),
    #[error("process {proc} invokes an operation on object {object} after object {after}")]
    Discipline {
        proc: ProcId,
        object: u32,
        after: u32,
    },
    #[error(transparent)]
    Sim(#[from] SimError),
}

impl RoundConfig {
    pub fn new(n: usize, rounds: u32, seed: u64) -> Self {
        RoundConfig {
            n,
            rounds,
            cycles: 1,
            seed,
            delay: DelayModel::Async { min: 1, max: 10 },
            crashes: Vec::new(),
            linger: None,
            max_events: DEFAULT_MAX_EVENTS,
        }
    }

    /// Replaces the crash schedule by `count` processes (capped at the
    /// tolerated number) that each crash during one of their broadcasts.
    pub fn with_random_crashes(mut self, count: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(3);
        let mut procs: Vec<ProcId> = (0..self.n).collect();
        procs.shuffle(&mut rng);
        let broadcasts = (self.rounds as usize * self.cycles).max(1) as u32;
        self.crashes = procs
            .into_iter()
            .take(count.min(max_tolerated_crashes(self.n)))
            .map(|proc| CrashSpec {
                proc,
                point: CrashPoint::DuringBroadcast(rng.gen_range(0..broadcasts)),
            })
            .collect();
        self.crashes.sort_by_key(|c| c.proc);
        self
    }

    /// Each process's scripted operations, all invoked as early as allowed.
    pub fn workload(&self) -> Workload {
        let mut w = Workload::empty(self.n);
        for p in 0..self.n {
            let mut writes = 0;
            let mut cycle = |w: &mut Workload, round: u32| {
                w.push_on(p, 0, round, Operation::Write(unique_value(p, writes)));
                w.push_on(p, 0, round, Operation::Snapshot);
                writes += 1;
            };
            for round in 1..=self.rounds {
                for _ in 0..self.cycles {
                    cycle(&mut w, round);
                }
                if let Some(l) = self.linger.filter(|l| l.proc == p && l.round == round) {
                    for _ in 0..l.extra_cycles {
                        cycle(&mut w, round);
                    }
                    break;
                }
            }
        }
        w
    }

    pub fn sim_config(&self) -> Result<SimConfig, RoundError> {
        if self.rounds == 0 {
            return Err(RoundError::Config("at least one round is needed".into()));
        }
        if let Some(l) = self.linger {
            if l.proc >= self.n || l.round == 0 || l.round > self.rounds {
                return Err(RoundError::Config(format!(
                    "linger {l:?} names no process or round of the run"
                )));
            }
        }
        if self
            .crashes
            .iter()
            .any(|c| matches!(c.point, CrashPoint::AtTime(t) if t == 0))
        {
            return Err(RoundError::Config(
                "a process crashing at time 0 never starts its first round".into(),
            ));
        }
        // Operations are all queued at time 0 and delayed by their predecessors,
        // so a crash at a later time cuts a process's script wherever it is.
        let workload = self.workload();
        check_workload_discipline(&workload)?;
        let mut config = SimConfig::new(self.n, self.seed, workload).with_delay(self.delay.clone());
        config.crashes = self.crashes.clone();
        config.max_events = self.max_events;
        config.validate()?;
        Ok(config)
    }
}

/// Rejects workloads in which some process goes back to an earlier object.
pub fn check_workload_discipline(w: &Workload) -> Result<(), RoundError> {
    for (proc, ops) in w.per_proc.iter().enumerate() {
        let mut current = 0;
        for op in ops {
            let object = op.object.unwrap_or(0);
            if object < current {
                return Err(RoundError::Discipline {
                    proc,
                    object,
                    after: current,
                });
            }
            current = object;
        }
    }
    Ok(())
}

/// Runs every round to quiescence (or the event cap) and returns the run;
/// its history tags each operation with its round.
pub fn run_rounds(config: &RoundConfig) -> Result<SimOutcome<ScsProcess>, RoundError> {
    Ok(run_simulation(&config.sim_config()?)?)
}

/// Operations that come after an operation on a later object in their
/// process's order.
fn discipline_violations(h: &History) -> Vec<OpRef> {
    let mut out = Vec::new();
    for ops in h.by_process() {
        let mut current = 0;
        for op in ops {
            if op.object() < current {
                out.push(op.id());
            }
            current = current.max(op.object());
        }
    }
    out
}

/// Sequential consistency of a history over several snapshot objects with
/// respect to their composition.
///
/// Each object is checked on its own and the per-object witnesses are
/// concatenated in object order, which keeps every process order because
/// processes move through objects in increasing order. The concatenation
/// is replayed per object and against process order; if that fails, or an
/// object is too large for its own check, the exhaustive composed check
/// decides.
pub fn check_composition(h: &History) -> Result<Verdict, CheckError> {
    let bad = discipline_violations(h);
    if !bad.is_empty() {
        return Err(CheckError::Discipline(bad));
    }
    let mut witness = Vec::new();
    for object in h.objects() {
        let verdict = match check_sc_fast(&h.project(object)) {
            Ok(v) => v,
            Err(CheckError::TooLarge { .. }) => return BruteForce::sc().check(h),
            Err(e) => return Err(e),
        };
        if !verdict.accepted {
            let reason = format!("object {object}: {}", verdict.reason.unwrap_or_default());
            return Ok(Verdict::reject(verdict.certificate, reason));
        }
        witness.extend(verdict.witness);
    }
    if spliced_witness_holds(h, &witness) {
        Ok(Verdict::accept(witness))
    } else {
        BruteForce::sc().check(h)
    }
}

fn spliced_witness_holds(h: &History, witness: &[OpRef]) -> bool {
    let mut last_seq: BTreeMap<ProcId, usize> = BTreeMap::new();
    let mut words: BTreeMap<u32, Vec<SeqOp>> = BTreeMap::new();
    for id in witness {
        let Some(op) = h.get(*id) else { return false };
        if last_seq
            .insert(id.proc, id.seq)
            .is_some_and(|prev| prev >= id.seq)
        {
            return false;
        }
        let Some(seq_op) = op.as_seq_op() else {
            return false;
        };
        words.entry(op.object()).or_default().push(seq_op);
    }
    words.values().all(|w| is_legal_word(w, h.n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::history::build::*;
    use crate::sim::invariants::liveness_violations;

    #[test]
    fn one_round_is_one_object() {
        let out = run_rounds(&RoundConfig::new(3, 1, 4)).unwrap();
        assert_eq!(out.history.objects(), vec![1]);
        assert!(check_composition(&out.history).unwrap().accepted);
    }

    #[test]
    fn three_rounds_crash_free() {
        let out = run_rounds(&RoundConfig::new(3, 3, 11)).unwrap();
        assert_eq!(out.history.objects(), vec![1, 2, 3]);
        assert_eq!(out.history.len(), 18);
        assert!(liveness_violations(&out).is_empty());
        assert!(check_composition(&out.history).unwrap().accepted);
    }

    #[test]
    fn crash_in_first_round() {
        for seed in 0..10 {
            let mut config = RoundConfig::new(3, 2, seed);
            config.crashes = vec![CrashSpec {
                proc: 2,
                point: CrashPoint::DuringBroadcast(0),
            }];
            let out = run_rounds(&config).unwrap();
            for p in [0, 1] {
                assert!(out.history.by_process()[p].iter().all(|o| o.is_complete()));
                assert_eq!(out.history.by_process()[p].len(), 4);
            }
            assert!(check_composition(&out.history).unwrap().accepted);
            assert!(BruteForce::sc().check(&out.history).unwrap().accepted);
        }
    }

    #[test]
    fn lingering_process_stays_in_its_round() {
        let mut config = RoundConfig::new(3, 3, 2);
        config.linger = Some(Linger {
            proc: 1,
            round: 1,
            extra_cycles: 5,
        });
        let out = run_rounds(&config).unwrap();
        let objects: Vec<u32> = out.history.by_process()[1]
            .iter()
            .map(|o| o.object())
            .collect();
        assert_eq!(objects, vec![1; 12]);
        assert!(check_composition(&out.history).unwrap().accepted);
    }

    #[test]
    fn spliced_witness_respects_rounds() {
        let h = history(
            2,
            vec![
                on(1, write(0, 0, 1, 0, 1)),
                on(1, snap(1, 0, &[1, 0], 0, 1)),
                on(2, snap(0, 1, &[0, 0], 2, 3)),
                on(2, write(1, 1, 5, 2, 3)),
                on(2, snap(1, 2, &[0, 5], 4, 5)),
            ],
        );
        let v = check_composition(&h).unwrap();
        assert!(v.accepted);
        let pos = |id: OpRef| v.witness.iter().position(|w| *w == id).unwrap();
        assert!(pos(OpRef { proc: 1, seq: 0 }) < pos(OpRef { proc: 1, seq: 1 }));
        assert!(pos(OpRef { proc: 0, seq: 0 }) < pos(OpRef { proc: 0, seq: 1 }));
    }

    #[test]
    fn corrupted_round_named() {
        let h = history(
            2,
            vec![
                on(1, write(0, 0, 1, 0, 1)),
                on(2, write(0, 1, 2, 2, 3)),
                on(2, snap(1, 0, &[7, 0], 4, 5)),
            ],
        );
        let v = check_composition(&h).unwrap();
        assert!(!v.accepted);
        assert!(v.reason.unwrap().starts_with("object 2"));
        assert_eq!(v.certificate, vec![OpRef { proc: 1, seq: 0 }]);
    }

    #[test]
    fn discipline_is_not_a_verdict() {
        let h = history(
            2,
            vec![on(2, write(0, 0, 1, 0, 1)), on(1, write(0, 1, 2, 2, 3))],
        );
        assert_eq!(
            check_composition(&h),
            Err(CheckError::Discipline(vec![OpRef { proc: 0, seq: 1 }]))
        );
        let mut w = Workload::empty(1);
        w.push_on(0, 0, 2, Operation::Snapshot)
            .push_on(0, 0, 1, Operation::Snapshot);
        assert!(matches!(
            check_workload_discipline(&w),
            Err(RoundError::Discipline { .. })
        ));
    }

    #[test]
    fn empty_history_accepted() {
        assert_eq!(
            check_composition(&History::new(2, 0)).unwrap(),
            Verdict::accept(vec![])
        );
    }
}
