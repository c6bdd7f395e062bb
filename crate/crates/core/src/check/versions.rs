use std::collections::HashMap;

use thiserror::Error;

use super::{process_orders, CheckError};
use crate::history::{History, OpKind, OpRef};
use crate::model::INITIAL_VALUE;
use crate::{ProcId, Value};

/// Snapshot results translated to write indices: component `k` of a
/// snapshot is `w` when it returned the value of `p_k`'s `w`-th write
/// (counting from 1), and 0 for the initial value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Versions {
    /// Returned snapshots in history order.
    pub snapshots: Vec<(OpRef, Vec<usize>)>,
    /// Each process's writes in process order; write `w` is `writes[p][w - 1]`.
    pub writes: Vec<Vec<OpRef>>,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum VersionError {
    #[error("{snapshot} returned {value} for p{writer}, which p{writer} never wrote")]
    NeverWritten {
        snapshot: OpRef,
        writer: ProcId,
        value: Value,
    },
    #[error("p{writer} writes {value} more than once (or writes the initial value)")]
    Ambiguous { writer: ProcId, value: Value },
    #[error(transparent)]
    Check(#[from] CheckError),
}

pub fn derive_versions(h: &History) -> Result<Versions, VersionError> {
    let orders = process_orders(h)?;
    let mut index: Vec<HashMap<Value, usize>> = vec![HashMap::new(); h.n];
    let mut writes = vec![Vec::new(); h.n];
    for (p, ops) in orders.iter().enumerate() {
        for op in ops {
            if let OpKind::Write(v) = op.kind {
                writes[p].push(op.id());
                let version = writes[p].len();
                if v == INITIAL_VALUE || index[p].insert(v, version).is_some() {
                    return Err(VersionError::Ambiguous {
                        writer: p,
                        value: v,
                    });
                }
            }
        }
    }
    let mut snapshots = Vec::new();
    for op in &h.ops {
        let OpKind::Snapshot(Some(result)) = &op.kind else {
            continue;
        };
        let vector = result
            .iter()
            .enumerate()
            .map(|(k, &v)| match v {
                INITIAL_VALUE => Ok(0),
                _ => index[k].get(&v).copied().ok_or(VersionError::NeverWritten {
                    snapshot: op.id(),
                    writer: k,
                    value: v,
                }),
            })
            .collect::<Result<Vec<_>, _>>()?;
        snapshots.push((op.id(), vector));
    }
    Ok(Versions { snapshots, writes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::history::build::*;

    #[test]
    fn initial_values() {
        let h = history(2, vec![snap(0, 0, &[0, 0], 0, 1)]);
        assert_eq!(derive_versions(&h).unwrap().snapshots[0].1, vec![0, 0]);
    }

    #[test]
    fn lookup_in_write_log() {
        let h = history(
            2,
            vec![
                write(0, 0, 1, 0, 1),
                write(0, 1, 2, 2, 3),
                snap(1, 0, &[2, 0], 4, 5),
            ],
        );
        let v = derive_versions(&h).unwrap();
        assert_eq!(v.snapshots[0].1, vec![2, 0]);
        assert_eq!(v.writes[0].len(), 2);
    }

    #[test]
    fn unwritten_value() {
        let h = history(2, vec![snap(0, 0, &[9, 0], 0, 1)]);
        assert!(matches!(
            derive_versions(&h),
            Err(VersionError::NeverWritten {
                writer: 0,
                value: 9,
                ..
            })
        ));
    }

    #[test]
    fn ambiguous_values() {
        let h = history(1, vec![write(0, 0, 1, 0, 1), write(0, 1, 1, 2, 3)]);
        assert!(matches!(
            derive_versions(&h),
            Err(VersionError::Ambiguous { .. })
        ));
        let h = history(1, vec![write(0, 0, 0, 0, 1)]);
        assert!(matches!(
            derive_versions(&h),
            Err(VersionError::Ambiguous { .. })
        ));
    }
}
