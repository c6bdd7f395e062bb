//! Sequential specification of the snapshot memory.
//!
//! A snapshot memory is an array of `n` single-writer registers. Process `p`
//! may only write cell `p`; any process may read the whole array atomically.
//! Every cell starts at [`INITIAL_VALUE`]. [`seq_step`] is the transition
//! function of the reference object and [`is_legal_word`] folds it over a
//! sequential word.
//!
//! The single-register `Read` operation is not part of the snapshot object
//! proper; it exists so that histories of the register baseline can be
//! checked against the same reference.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{ProcId, Value};

/// Value held by every register before its first write.
pub const INITIAL_VALUE: Value = 0;

/// The sequential state: the latest value written by each process.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RegisterArray(Vec<Value>);

impl RegisterArray {
    pub fn new(n: usize) -> Self {
        RegisterArray(vec![INITIAL_VALUE; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[Value] {
        &self.0
    }

    pub fn get(&self, proc: ProcId) -> Option<Value> {
        self.0.get(proc).copied()
    }
}

impl From<Vec<Value>> for RegisterArray {
    fn from(values: Vec<Value>) -> Self {
        RegisterArray(values)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SeqOpKind {
    Write(Value),
    /// Atomic read of the whole array, with the vector it returned.
    Snapshot(Vec<Value>),
    /// Read of one register, with the value it returned.
    Read {
        target: ProcId,
        value: Value,
    },
}

/// One operation of a sequential word, labelled with its invoking process.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeqOp {
    pub proc: ProcId,
    pub kind: SeqOpKind,
}

impl SeqOp {
    pub fn write(proc: ProcId, value: Value) -> Self {
        SeqOp {
            proc,
            kind: SeqOpKind::Write(value),
        }
    }

    pub fn snapshot(proc: ProcId, expected: Vec<Value>) -> Self {
        SeqOp {
            proc,
            kind: SeqOpKind::Snapshot(expected),
        }
    }

    pub fn read(proc: ProcId, target: ProcId, value: Value) -> Self {
        SeqOp {
            proc,
            kind: SeqOpKind::Read { target, value },
        }
    }
}

/// Malformed input, as opposed to a well-formed but illegal step.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("process {proc} out of range for {n} registers")]
    ProcOutOfRange { proc: ProcId, n: usize },
    #[error("snapshot vector has length {got}, expected {n}")]
    WrongLength { got: usize, n: usize },
}

fn validate(n: usize, op: &SeqOp) -> Result<(), ModelError> {
    if op.proc >= n {
        return Err(ModelError::ProcOutOfRange { proc: op.proc, n });
    }
    match &op.kind {
        SeqOpKind::Snapshot(v) if v.len() != n => Err(ModelError::WrongLength { got: v.len(), n }),
        SeqOpKind::Read { target, .. } if *target >= n => {
            Err(ModelError::ProcOutOfRange { proc: *target, n })
        }
        _ => Ok(()),
    }
}

/// Applies `op` in place and reports whether the step was legal.
///
/// Illegal steps leave the state untouched. Only writes change the state.
pub fn apply(state: &mut RegisterArray, op: &SeqOp) -> Result<bool, ModelError> {
    validate(state.len(), op)?;
    Ok(match &op.kind {
        SeqOpKind::Write(v) => {
            state.0[op.proc] = *v;
            true
        }
        SeqOpKind::Snapshot(expected) => expected.as_slice() == state.values(),
        SeqOpKind::Read { target, value } => state.0[*target] == *value,
    })
}

/// Pure transition function of the snapshot memory.
pub fn seq_step(state: &RegisterArray, op: &SeqOp) -> Result<(RegisterArray, bool), ModelError> {
    let mut next = state.clone();
    let legal = apply(&mut next, op)?;
    Ok((next, legal))
}

/// True iff every step of `ops`, starting from the all-initial array, is legal.
/// Malformed operations make the word illegal.
pub fn is_legal_word(ops: &[SeqOp], n: usize) -> bool {
    let mut state = RegisterArray::new(n);
    ops.iter()
        .all(|op| matches!(apply(&mut state, op), Ok(true)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn step_examples() {
        let s0 = RegisterArray::new(2);
        let (s1, ok) = seq_step(&s0, &SeqOp::write(0, 5)).unwrap();
        assert!(ok);
        assert_eq!(s1.values(), &[5, 0]);

        let (s2, ok) = seq_step(&s1, &SeqOp::snapshot(1, vec![5, 0])).unwrap();
        assert!(ok);
        assert_eq!(s2, s1);

        let (s3, ok) = seq_step(&s1, &SeqOp::snapshot(1, vec![0, 5])).unwrap();
        assert!(!ok);
        assert_eq!(s3, s1);
    }

    #[test]
    fn malformed_is_an_error_not_illegal() {
        let s = RegisterArray::new(2);
        assert_eq!(
            seq_step(&s, &SeqOp::snapshot(0, vec![0, 0, 0])),
            Err(ModelError::WrongLength { got: 3, n: 2 })
        );
        assert!(matches!(
            seq_step(&s, &SeqOp::write(2, 1)),
            Err(ModelError::ProcOutOfRange { .. })
        ));
        assert!(matches!(
            seq_step(&s, &SeqOp::read(0, 7, 0)),
            Err(ModelError::ProcOutOfRange { .. })
        ));
    }

    #[test]
    fn legal_word_examples() {
        assert!(is_legal_word(&[], 2));
        let word = [
            SeqOp::write(0, 1),
            SeqOp::snapshot(0, vec![1, 0]),
            SeqOp::write(1, 1),
            SeqOp::snapshot(1, vec![1, 1]),
        ];
        assert!(is_legal_word(&word, 2));
        assert!(!is_legal_word(
            &[SeqOp::write(0, 1), SeqOp::snapshot(1, vec![0, 1])],
            2
        ));
        assert!(is_legal_word(
            &[SeqOp::write(1, 4), SeqOp::read(0, 1, 4)],
            2
        ));
        assert!(!is_legal_word(&[SeqOp::read(0, 1, 4)], 2));
    }

    fn arb_op(n: usize) -> impl Strategy<Value = SeqOp> {
        prop_oneof![
            (0..n, 1u64..5).prop_map(|(p, v)| SeqOp::write(p, v)),
            (0..n, proptest::collection::vec(0u64..5, n)).prop_map(|(p, v)| SeqOp::snapshot(p, v)),
        ]
    }

    proptest! {
        #[test]
        fn only_the_writer_changes_its_cell(ops in proptest::collection::vec(arb_op(3), 0..20)) {
            let mut state = RegisterArray::new(3);
            let mut versions = [0usize; 3];
            for op in &ops {
                let before = state.clone();
                let (after, _) = seq_step(&state, op).unwrap();
                prop_assert_eq!(seq_step(&state, op).unwrap().0, after.clone());
                for cell in 0..3 {
                    if before.get(cell) != after.get(cell) {
                        prop_assert_eq!(cell, op.proc);
                        prop_assert!(matches!(op.kind, SeqOpKind::Write(_)));
                    }
                }
                if let SeqOpKind::Write(_) = op.kind {
                    let prev = versions[op.proc];
                    versions[op.proc] += 1;
                    prop_assert!(versions[op.proc] > prev);
                }
                state = after;
            }
        }
    }
}
