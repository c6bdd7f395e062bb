use std::collections::{BTreeMap, HashSet};

use super::{considered, process_orders, CheckError, Verdict};
use crate::history::{History, OpRecord, OpRef};
use crate::model::{apply, RegisterArray, SeqOpKind};

/// Largest history the exhaustive checkers accept by default.
pub const DEFAULT_BOUND: usize = 10;

/// Exhaustive search for a legal interleaving.
///
/// Every object of the history gets its own register array, so histories
/// over several objects are checked against the composition of the objects.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BruteForce {
    pub bound: usize,
    /// Also require that an operation returning before another is invoked
    /// comes first.
    pub real_time: bool,
}

impl BruteForce {
    pub fn sc() -> Self {
        BruteForce {
            bound: DEFAULT_BOUND,
            real_time: false,
        }
    }

    pub fn lin() -> Self {
        BruteForce {
            bound: DEFAULT_BOUND,
            real_time: true,
        }
    }

    pub fn with_bound(self, bound: usize) -> Self {
        BruteForce { bound, ..self }
    }

    pub fn check(&self, h: &History) -> Result<Verdict, CheckError> {
        let orders = process_orders(h)?;
        let ops: Vec<Vec<&OpRecord>> = orders
            .into_iter()
            .map(|ops| ops.into_iter().filter(|o| considered(o)).collect())
            .collect();
        let total: usize = ops.iter().map(Vec::len).sum();
        if total > self.bound {
            return Err(CheckError::TooLarge {
                ops: total,
                bound: self.bound,
            });
        }
        let mut search = Search {
            real_time: self.real_time,
            n: h.n,
            pos: vec![0; ops.len()],
            skipped: vec![false; ops.len()],
            state: BTreeMap::new(),
            order: Vec::new(),
            failed: HashSet::new(),
            ops,
        };
        if search.dfs() {
            Ok(Verdict::accept(search.order))
        } else {
            let all = search.ops.iter().flatten().map(|o| o.id()).collect();
            let what = if self.real_time {
                "linearization"
            } else {
                "legal interleaving"
            };
            Ok(Verdict::reject(
                all,
                format!("no {what} of the {total} operations exists"),
            ))
        }
    }
}

pub fn check_sc_brute(h: &History) -> Result<Verdict, CheckError> {
    BruteForce::sc().check(h)
}

pub fn check_lin_brute(h: &History) -> Result<Verdict, CheckError> {
    BruteForce::lin().check(h)
}

struct Search<'a> {
    real_time: bool,
    n: usize,
    ops: Vec<Vec<&'a OpRecord>>,
    pos: Vec<usize>,
    /// Whether the process's trailing pending write was left out.
    skipped: Vec<bool>,
    state: BTreeMap<u32, RegisterArray>,
    order: Vec<OpRef>,
    /// Search states already shown to lead nowhere. The register contents
    /// are a function of the positions and skip flags.
    failed: HashSet<Vec<usize>>,
}

impl<'a> Search<'a> {
    fn key(&self) -> Vec<usize> {
        self.pos
            .iter()
            .zip(&self.skipped)
            .map(|(p, s)| 2 * p + usize::from(*s))
            .collect()
    }

    fn blocked(&self, op: &OpRecord) -> bool {
        self.real_time
            && self
                .ops
                .iter()
                .zip(&self.pos)
                .enumerate()
                .any(|(q, (ops, &i))| {
                    q != op.proc
                        && ops
                            .get(i)
                            .and_then(|o| o.t_ret)
                            .is_some_and(|r| r < op.t_inv)
                })
    }

    fn dfs(&mut self) -> bool {
        if self
            .pos
            .iter()
            .zip(&self.ops)
            .all(|(i, ops)| *i == ops.len())
        {
            return true;
        }
        if !self.failed.insert(self.key()) {
            return false;
        }
        for p in 0..self.ops.len() {
            let Some(&op) = self.ops[p].get(self.pos[p]) else {
                continue;
            };
            if self.blocked(op) {
                continue;
            }
            let seq_op = op
                .as_seq_op()
                .expect("considered operations have a sequential form");
            let n = self.n;
            let regs = self
                .state
                .entry(op.object())
                .or_insert_with(|| RegisterArray::new(n));
            let before = regs.clone();
            if matches!(apply(regs, &seq_op), Ok(true)) {
                self.pos[p] += 1;
                self.order.push(op.id());
                if self.dfs() {
                    return true;
                }
                self.order.pop();
                self.pos[p] -= 1;
                if matches!(seq_op.kind, SeqOpKind::Write(_)) {
                    self.state.insert(op.object(), before);
                }
            }
            if !op.is_complete() {
                self.pos[p] += 1;
                self.skipped[p] = true;
                if self.dfs() {
                    return true;
                }
                self.skipped[p] = false;
                self.pos[p] -= 1;
            }
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::history::build::*;
    use crate::model::{is_legal_word, SeqOp};

    fn replay(h: &History, witness: &[OpRef]) -> bool {
        let word: Vec<SeqOp> = witness
            .iter()
            .map(|id| h.get(*id).unwrap().as_seq_op().unwrap())
            .collect();
        is_legal_word(&word, h.n)
    }

    #[test]
    fn incomparable_snapshots_rejected() {
        let h = history(
            2,
            vec![
                write(0, 0, 1, 0, 1),
                snap(0, 1, &[1, 0], 2, 3),
                write(1, 0, 1, 0, 1),
                snap(1, 1, &[0, 1], 2, 3),
            ],
        );
        let v = check_sc_brute(&h).unwrap();
        assert!(!v.accepted);
        assert_eq!(v.certificate.len(), 4);
    }

    #[test]
    fn late_observation_accepted() {
        let h = history(
            2,
            vec![
                write(0, 0, 1, 0, 1),
                snap(1, 0, &[0, 0], 0, 1),
                snap(1, 1, &[1, 0], 2, 3),
            ],
        );
        let v = check_sc_brute(&h).unwrap();
        assert!(v.accepted);
        assert!(replay(&h, &v.witness));
    }

    #[test]
    fn stale_snapshot_is_sc_but_not_linearizable() {
        let h = history(2, vec![write(0, 0, 1, 0, 1), snap(1, 0, &[0, 0], 5, 6)]);
        assert!(check_sc_brute(&h).unwrap().accepted);
        assert!(!check_lin_brute(&h).unwrap().accepted);
    }

    #[test]
    fn sequential_history_linearizable() {
        let h = history(
            2,
            vec![
                write(0, 0, 1, 0, 1),
                snap(1, 0, &[1, 0], 5, 6),
                write(1, 1, 4, 7, 8),
            ],
        );
        let v = check_lin_brute(&h).unwrap();
        assert!(v.accepted);
        assert!(replay(&h, &v.witness));
    }

    #[test]
    fn empty_history() {
        let h = History::new(3, 0);
        assert_eq!(check_sc_brute(&h).unwrap(), Verdict::accept(vec![]));
        assert_eq!(check_lin_brute(&h).unwrap(), Verdict::accept(vec![]));
    }

    #[test]
    fn pending_write_kept_or_dropped() {
        // Observed: must be kept.
        let h = history(
            2,
            vec![pending_write(0, 0, 1, 0), snap(1, 0, &[1, 0], 2, 3)],
        );
        let v = check_sc_brute(&h).unwrap();
        assert!(v.accepted);
        assert_eq!(v.witness.len(), 2);
        // Never observed, and a later snapshot by someone else sees 0: dropped.
        let h = history(
            2,
            vec![pending_write(0, 0, 1, 0), snap(1, 0, &[0, 0], 9, 10)],
        );
        assert!(check_lin_brute(&h).unwrap().accepted);
        // Pending snapshots are ignored altogether.
        let h = history(2, vec![write(0, 0, 1, 0, 1), pending_snap(1, 0, 2)]);
        assert_eq!(
            check_sc_brute(&h).unwrap().witness,
            vec![OpRef { proc: 0, seq: 0 }]
        );
    }

    #[test]
    fn reads() {
        let h = history(
            2,
            vec![
                write(0, 0, 7, 0, 2),
                read(1, 0, 0, 7, 1, 3),
                read(1, 1, 0, 0, 4, 5),
            ],
        );
        assert!(!check_sc_brute(&h).unwrap().accepted);
        let h = history(
            2,
            vec![
                write(0, 0, 7, 0, 2),
                read(1, 0, 0, 0, 1, 3),
                read(1, 1, 0, 7, 4, 5),
            ],
        );
        assert!(check_lin_brute(&h).unwrap().accepted);
    }

    #[test]
    fn objects_are_separate() {
        let h = history(
            2,
            vec![
                on(1, write(0, 0, 1, 0, 1)),
                on(2, snap(0, 1, &[0, 0], 2, 3)),
                on(2, snap(1, 0, &[0, 0], 0, 1)),
            ],
        );
        assert!(check_sc_brute(&h).unwrap().accepted);
        let h = history(
            2,
            vec![
                on(1, write(0, 0, 1, 0, 1)),
                on(2, snap(0, 1, &[1, 0], 2, 3)),
            ],
        );
        assert!(!check_sc_brute(&h).unwrap().accepted);
    }

    #[test]
    fn size_bound() {
        let ops = (0..11)
            .map(|i| write(0, i, i as u64 + 1, 2 * i as u64, 2 * i as u64 + 1))
            .collect();
        let h = history(1, ops);
        assert_eq!(
            check_sc_brute(&h),
            Err(CheckError::TooLarge { ops: 11, bound: 10 })
        );
        assert!(BruteForce::sc().with_bound(11).check(&h).unwrap().accepted);
    }
}
