//! Non-validated updates and the dependency relation between them.

use serde::{Deserialize, Serialize};

use super::{Stamp, UpdateId};
use crate::{ProcId, Value};

/// What a process knows about one update it has not validated yet.
///
/// `clocks[j]` is the stamp `p_j` gave the update, or `None` (unknown, read
/// as infinity) until a message for the update arrives from `p_j`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PendingEntry {
    pub value: Value,
    pub writer: ProcId,
    pub stamp: Stamp,
    pub clocks: Vec<Option<Stamp>>,
}

impl PendingEntry {
    pub fn new(value: Value, writer: ProcId, stamp: Stamp, n: usize) -> Self {
        PendingEntry {
            value,
            writer,
            stamp,
            clocks: vec![None; n],
        }
    }

    pub fn id(&self) -> UpdateId {
        UpdateId {
            writer: self.writer,
            stamp: self.stamp,
        }
    }

    pub fn known_stamps(&self) -> usize {
        self.clocks.iter().filter(|c| c.is_some()).count()
    }

    pub fn has_majority(&self) -> bool {
        2 * self.known_stamps() > self.clocks.len()
    }
}

/// `a < b` where `None` stands for infinity: nothing is smaller than
/// infinity on the left, and every finite stamp is below infinity.
pub fn stamped_before(a: Option<Stamp>, b: Option<Stamp>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => x < y,
        (Some(_), None) => true,
        (None, _) => false,
    }
}

/// Number of processes known to have stamped `second` before `first`.
fn stamped_second_first(first: &PendingEntry, second: &PendingEntry) -> usize {
    second
        .clocks
        .iter()
        .zip(&first.clocks)
        .filter(|(s, f)| stamped_before(**s, **f))
        .count()
}

/// `first ->_i second`: `second` may not be validated before `first`.
///
/// The dependency is absent only when a strict majority of processes are
/// known to have stamped `second` before `first`.
pub fn depends(first: &PendingEntry, second: &PendingEntry, n: usize) -> bool {
    2 * stamped_second_first(first, second) <= n
}

/// Indices (ascending) of the entries of `pending` that can be validated now.
///
/// Starts from the entries with a majority of known stamps and repeatedly
/// drops any candidate that depends on an entry outside the candidate set.
/// The result is closed: no returned entry depends on a non-returned one.
pub fn compute_validable(pending: &[PendingEntry], n: usize) -> Vec<usize> {
    let mut candidate: Vec<bool> = pending.iter().map(PendingEntry::has_majority).collect();
    loop {
        let blocked = (0..pending.len()).find(|&c| {
            candidate[c]
                && (0..pending.len()).any(|o| !candidate[o] && depends(&pending[o], &pending[c], n))
        });
        match blocked {
            Some(c) => candidate[c] = false,
            None => break,
        }
    }
    candidate
        .iter()
        .enumerate()
        .filter_map(|(i, &keep)| keep.then_some(i))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(writer: ProcId, clocks: &[Option<u64>]) -> PendingEntry {
        PendingEntry {
            value: 1,
            writer,
            stamp: Stamp(1),
            clocks: clocks.iter().map(|c| c.map(Stamp)).collect(),
        }
    }

    const INF: Option<u64> = None;

    #[test]
    fn infinity_ordering() {
        assert!(stamped_before(Some(Stamp(3)), None));
        assert!(!stamped_before(None, None));
        assert!(!stamped_before(None, Some(Stamp(1))));
        assert!(stamped_before(Some(Stamp(1)), Some(Stamp(2))));
        assert!(!stamped_before(Some(Stamp(2)), Some(Stamp(2))));
    }

    #[test]
    fn depends_examples() {
        // Oracle: count j with gb.cl[j] < ga.cl[j] by hand, compare against n/2 = 2.5.
        let ga = entry(0, &[Some(3), Some(4), INF, INF, INF]);
        let gb = entry(1, &[Some(1), Some(2), INF, INF, INF]);
        assert!(depends(&ga, &gb, 5)); // count 2

        let ga = entry(0, &[Some(4), Some(5), Some(6), INF, INF]);
        let gb = entry(1, &[Some(1), Some(2), Some(3), INF, INF]);
        assert!(!depends(&ga, &gb, 5)); // count 3

        let g = entry(0, &[Some(1), INF, Some(2)]);
        assert!(depends(&g, &g, 3));
    }

    #[test]
    fn validable_examples() {
        assert!(compute_validable(&[], 5).is_empty());

        let lone = entry(4, &[INF, INF, Some(1), Some(1), Some(1)]);
        assert_eq!(compute_validable(&[lone], 5), vec![0]);

        // p_0 while b is blocked behind a (stamps as in the fig4a scenario):
        // a = (4,1) known only from p_2 and p_0; b = (0,1) known from p_0, p_1, p_2.
        let a = PendingEntry {
            value: 1,
            writer: 4,
            stamp: Stamp(1),
            clocks: vec![Some(Stamp(2)), None, Some(Stamp(1)), None, None],
        };
        let b = PendingEntry {
            value: 1,
            writer: 0,
            stamp: Stamp(1),
            clocks: vec![Some(Stamp(1)), Some(Stamp(1)), Some(Stamp(2)), None, None],
        };
        assert!(b.has_majority() && !a.has_majority());
        assert!(depends(&a, &b, 5));
        assert!(compute_validable(&[a, b], 5).is_empty());
    }

    #[test]
    fn transitive_blocking() {
        // c depends on b, b depends on a, a lacks a majority: nothing validates.
        let a = entry(0, &[Some(5), INF, INF]);
        let b = entry(1, &[Some(6), Some(1), INF]);
        let c = entry(2, &[Some(7), Some(2), INF]);
        assert!(depends(&a, &b, 3));
        assert!(depends(&b, &c, 3));
        assert!(compute_validable(&[a.clone(), b.clone(), c.clone()], 3).is_empty());

        // Once a has a majority, the whole chain clears together.
        let a = entry(0, &[Some(5), Some(3), INF]);
        assert_eq!(compute_validable(&[a, b, c], 3), vec![0, 1, 2]);
    }
}
