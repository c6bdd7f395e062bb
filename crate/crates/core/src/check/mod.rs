//! Consistency checkers for recorded histories.
//!
//! [`check_sc_fast`] decides sequential consistency of single-writer
//! snapshot histories from the version vectors the snapshots returned.
//! [`check_sc_brute`] and [`check_lin_brute`] enumerate interleavings and
//! serve as exact oracles for small histories.
//!
//! Operations that never returned are handled as follows: snapshots and
//! reads are dropped, writes may be either kept or dropped.

mod brute;
mod fast;
mod versions;

pub use brute::{check_lin_brute, check_sc_brute, BruteForce, DEFAULT_BOUND};
pub use fast::check_sc_fast;
pub use versions::{derive_versions, VersionError, Versions};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::history::{History, OpKind, OpRecord, OpRef};

/// Outcome of a check. An accepted verdict carries a witness order over the
/// kept operations; a rejected one names operations that cannot be ordered.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub accepted: bool,
    pub witness: Vec<OpRef>,
    pub certificate: Vec<OpRef>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl Verdict {
    pub fn accept(witness: Vec<OpRef>) -> Self {
        Verdict {
            accepted: true,
            witness,
            certificate: Vec::new(),
            reason: None,
        }
    }

    pub fn reject(certificate: Vec<OpRef>, reason: impl Into<String>) -> Self {
        Verdict {
            accepted: false,
            witness: Vec::new(),
            certificate,
            reason: Some(reason.into()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("verdict serializes")
    }
}

/// The checker declined to give a verdict.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum CheckError {
    #[error("{ops} operations exceed the brute-force bound of {bound}")]
    TooLarge { ops: usize, bound: usize },
    #[error("malformed history: {0}")]
    Malformed(String),
    #[error("operations on objects {0:?} after later objects: check the history with the composition checker")]
    Discipline(Vec<OpRef>),
}

/// Operations of each process in process order, after structural checks
/// that hold for whole histories and for their per-object projections.
pub(crate) fn process_orders(h: &History) -> Result<Vec<Vec<&OpRecord>>, CheckError> {
    let bad = |op: &OpRecord, msg: &str| Err(CheckError::Malformed(format!("{}: {msg}", op.id())));
    for op in &h.ops {
        if op.proc >= h.n {
            return bad(op, "process out of range");
        }
        match &op.kind {
            OpKind::Snapshot(Some(r)) if r.len() != h.n => {
                return bad(op, "snapshot of the wrong length")
            }
            OpKind::Snapshot(r) if r.is_some() != op.is_complete() => {
                return bad(
                    op,
                    "result must be present exactly when the snapshot returned",
                )
            }
            OpKind::Read { target, .. } if *target >= h.n => {
                return bad(op, "read target out of range")
            }
            OpKind::Read { value, .. } if value.is_some() != op.is_complete() => {
                return bad(op, "result must be present exactly when the read returned")
            }
            _ => {}
        }
    }
    let orders = h.by_process();
    for ops in &orders {
        for pair in ops.windows(2) {
            if pair[0].seq == pair[1].seq {
                return bad(pair[1], "duplicate sequence number");
            }
            if !pair[0].is_complete() {
                return bad(pair[1], "follows an operation that never returned");
            }
        }
    }
    Ok(orders)
}

/// Whether an operation takes part in the witness search: returned
/// operations always, pending writes optionally, other pending operations never.
pub(crate) fn considered(op: &OpRecord) -> bool {
    op.is_complete() || op.is_write()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::history::build::*;

    #[test]
    fn verdict_json() {
        let v = Verdict::accept(vec![OpRef { proc: 0, seq: 0 }]);
        let text = v.to_json();
        assert!(text.contains("\"accepted\": true"));
        let back: Verdict = serde_json::from_str(&text).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn structural_errors() {
        let h = history(2, vec![snap(0, 0, &[0], 0, 1)]);
        assert!(matches!(check_sc_fast(&h), Err(CheckError::Malformed(_))));
        let h = history(2, vec![pending_write(0, 0, 1, 0), write(0, 1, 2, 1, 2)]);
        assert!(matches!(check_sc_brute(&h), Err(CheckError::Malformed(_))));
    }
}
