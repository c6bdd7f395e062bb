//! Run-level properties of the snapshot protocol.
//!
//! * validation clocks of one object are totally ordered across every
//!   process and every point in time;
//! * an update whose writer stays correct is validated by every correct
//!   process, and operations of correct processes return;
//! * each update costs at most `n²` messages, exactly `n²` without crashes.

use std::collections::BTreeMap;
use std::fmt;

use super::engine::SimOutcome;
use super::metrics::{VcSample, VcTrace};
use super::scs::ScsProcess;
use crate::protocol::Stamp;

/// `a ≤ b` componentwise.
pub fn dominated(a: &[u64], b: &[u64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x <= y)
}

/// Two samples of the same object whose clocks are incomparable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Incomparable {
    pub first: VcSample,
    pub second: VcSample,
}

impl fmt::Display for Incomparable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "object {}: p{}@{} {:?} vs p{}@{} {:?}",
            self.first.object,
            self.first.proc,
            self.first.time,
            self.first.vc,
            self.second.proc,
            self.second.time,
            self.second.vc
        )
    }
}

/// Checks that the sampled clocks of each object form a chain.
///
/// Sorting by component sum puts any chain in order, so it suffices to
/// compare neighbours. Returns every incomparable neighbouring pair; the
/// result is empty iff the samples are totally ordered.
pub fn clock_order_violations(trace: &VcTrace) -> Vec<Incomparable> {
    let mut by_object: BTreeMap<u32, Vec<&VcSample>> = BTreeMap::new();
    for s in &trace.samples {
        by_object.entry(s.object).or_default().push(s);
    }
    let mut out = Vec::new();
    for samples in by_object.values_mut() {
        samples.sort_by_key(|s| s.vc.iter().sum::<u64>());
        for pair in samples.windows(2) {
            if !dominated(&pair[0].vc, &pair[1].vc) {
                out.push(Incomparable {
                    first: pair[0].clone(),
                    second: pair[1].clone(),
                });
            }
        }
    }
    out
}

/// Liveness failures of a finished run, as readable messages.
///
/// Only meaningful for runs that reached quiescence: then every message has
/// been delivered, which in the model is "eventually".
pub fn liveness_violations(outcome: &SimOutcome<ScsProcess>) -> Vec<String> {
    let mut out = Vec::new();
    if !outcome.metrics.quiescent {
        out.push("run did not reach quiescence".to_string());
        return out;
    }
    let correct: Vec<usize> = outcome.correct().collect();
    for key in outcome.metrics.messages_per_update.keys() {
        if outcome.crashed[key.update.writer] {
            continue;
        }
        for &p in &correct {
            let validated = outcome.processes[p]
                .object(key.object)
                .is_some_and(|st| st.validation_clock()[key.update.writer] >= key.update.stamp);
            if !validated {
                out.push(format!(
                    "p{p} never validated update {}#{} of object {}",
                    key.update.writer, key.update.stamp.0, key.object
                ));
            }
        }
    }
    for op in &outcome.history.ops {
        if !outcome.crashed[op.proc] && !op.is_complete() {
            out.push(format!(
                "operation {} of a correct process never returned",
                op.id()
            ));
        }
    }
    if outcome.crashed.iter().all(|c| !c) {
        for (p, proc) in outcome.processes.iter().enumerate() {
            for (object, st) in proc.objects() {
                if !st.pending().is_empty() {
                    out.push(format!(
                        "p{p} still holds {} pending updates of object {object}",
                        st.pending().len()
                    ));
                }
                if st.postponed().is_some() {
                    out.push(format!("p{p} still buffers a write to object {object}"));
                }
            }
        }
    }
    out
}

/// Updates whose message count breaks the `n²` bound (or, without
/// crashes, differs from `n²`).
pub fn message_count_violations(outcome: &SimOutcome<ScsProcess>) -> Vec<String> {
    let n = outcome.processes.len() as u64;
    let crash_free = outcome.crashed.iter().all(|c| !c);
    let mut out = Vec::new();
    for (key, &count) in &outcome.metrics.messages_per_update {
        if count > n * n || (crash_free && outcome.metrics.quiescent && count != n * n) {
            out.push(format!(
                "update {}#{} of object {} used {count} messages, n² = {}",
                key.update.writer,
                key.update.stamp.0,
                key.object,
                n * n
            ));
        }
    }
    out
}

/// Highest stamp of each writer that appears anywhere in the run.
pub fn issued_stamps(outcome: &SimOutcome<ScsProcess>) -> BTreeMap<(u32, usize), Stamp> {
    let mut out = BTreeMap::new();
    for key in outcome.metrics.messages_per_update.keys() {
        let e = out
            .entry((key.object, key.update.writer))
            .or_insert(Stamp::ZERO);
        *e = (*e).max(key.update.stamp);
    }
    out
}
