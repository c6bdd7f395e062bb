//! The fast checker against the exhaustive ones, on arbitrary small
//! histories rather than protocol output.

use proptest::prelude::*;

use seqsnap::check::{check_lin_brute, check_sc_brute, check_sc_fast, Verdict};
use seqsnap::history::build::{history, pending_snap, pending_write, snap, write};
use seqsnap::history::{History, OpRecord};
use seqsnap::model::is_legal_word;

#[derive(Clone, Debug)]
enum Step {
    Write,
    /// Picks, per register, an index into the values that register held.
    Snap(Vec<usize>),
}

fn value(proc: usize, k: usize) -> u64 {
    ((k as u64 + 1) << 8) | proc as u64
}

/// Builds a history from per-process scripts. Every register `p` ends up
/// with values `value(p, 0..writes_p)`; snapshot picks index into `0` plus
/// those. The last operation of a process may be left pending.
fn build(n: usize, scripts: &[(Vec<Step>, bool, Vec<u64>)]) -> History {
    let writes: Vec<usize> = scripts
        .iter()
        .map(|(s, _, _)| s.iter().filter(|x| matches!(x, Step::Write)).count())
        .collect();
    let mut ops: Vec<OpRecord> = Vec::new();
    for (p, (steps, last_pending, gaps)) in scripts.iter().enumerate() {
        let mut t = 0;
        let mut k = 0;
        for (seq, step) in steps.iter().enumerate() {
            let t_inv = t + gaps[2 * seq % gaps.len()];
            let t_ret = t_inv + gaps[(2 * seq + 1) % gaps.len()];
            t = t_ret;
            let pending = *last_pending && seq + 1 == steps.len();
            let op = match step {
                Step::Write => {
                    k += 1;
                    if pending {
                        pending_write(p, seq, value(p, k - 1), t_inv)
                    } else {
                        write(p, seq, value(p, k - 1), t_inv, t_ret)
                    }
                }
                Step::Snap(picks) => {
                    if pending {
                        pending_snap(p, seq, t_inv)
                    } else {
                        let result: Vec<u64> = (0..n)
                            .map(|q| match picks[q] % (writes[q] + 1) {
                                0 => 0,
                                i => value(q, i - 1),
                            })
                            .collect();
                        snap(p, seq, &result, t_inv, t_ret)
                    }
                }
            };
            ops.push(op);
        }
    }
    history(n, ops)
}

fn arb_history() -> impl Strategy<Value = History> {
    (1usize..=3).prop_flat_map(|n| {
        let step = prop_oneof![
            Just(Step::Write),
            prop::collection::vec(0usize..4, n).prop_map(Step::Snap)
        ];
        let script = (
            prop::collection::vec(step, 0..=3),
            prop::bool::weighted(0.2),
            prop::collection::vec(0u64..4, 1..6),
        );
        prop::collection::vec(script, n).prop_map(move |s| build(n, &s))
    })
}

fn witness_is_legal(h: &History, v: &Verdict) -> bool {
    let word: Vec<_> = v
        .witness
        .iter()
        .map(|id| h.get(*id).unwrap().as_seq_op().unwrap())
        .collect();
    is_legal_word(&word, h.n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(3000))]

    #[test]
    fn fast_agrees_with_brute(h in arb_history()) {
        let fast = check_sc_fast(&h).unwrap();
        let brute = check_sc_brute(&h).unwrap();
        prop_assert_eq!(fast.accepted, brute.accepted, "fast {:?} brute {:?}", fast, brute);
        if fast.accepted {
            prop_assert!(witness_is_legal(&h, &fast));
            prop_assert!(witness_is_legal(&h, &brute));
        } else {
            prop_assert!(!fast.certificate.is_empty());
        }
    }

    #[test]
    fn linearizable_implies_sequentially_consistent(h in arb_history()) {
        let lin = check_lin_brute(&h).unwrap();
        if lin.accepted {
            prop_assert!(check_sc_brute(&h).unwrap().accepted);
            prop_assert!(witness_is_legal(&h, &lin));
        }
    }

    #[test]
    fn verdict_survives_the_file_format(h in arb_history()) {
        let back = History::from_jsonl(&h.to_jsonl(), Some(h.n)).unwrap();
        prop_assert_eq!(check_sc_fast(&back).unwrap().accepted, check_sc_fast(&h).unwrap().accepted);
    }
}

#[test]
fn witness_orders_pending_write_seen_by_a_snapshot() {
    // p0's write never returned, yet p1 saw it: it must be in the witness.
    let h = history(
        2,
        vec![pending_write(0, 0, 9, 0), snap(1, 0, &[9, 0], 3, 4)],
    );
    let v = check_sc_fast(&h).unwrap();
    assert!(v.accepted);
    assert_eq!(v.witness.len(), 2);
    assert!(witness_is_legal(&h, &v));
}
