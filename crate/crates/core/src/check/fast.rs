use super::brute::check_sc_brute;
use super::versions::{derive_versions, VersionError, Versions};
use super::{process_orders, CheckError, Verdict};
use crate::history::{History, OpKind, OpRef};
use crate::model::{is_legal_word, SeqOp};

/// Sequential consistency of a single-object snapshot history with values
/// unique per writer.
///
/// With `v(s)` the version vector of snapshot `s`, the history is accepted
/// iff
/// 1. all `v(s)` are pairwise comparable,
/// 2. a snapshot by `p` preceded by `w` writes of `p` has `v(s)[p] = w`,
/// 3. along each process the `v(s)` never decrease,
/// 4. a snapshot by `p` followed by `p`'s write number `w` has `v(s)[p] < w`.
///
/// The witness orders snapshots by version vector and places write `w` of
/// `p_k` right before the first snapshot whose `k` component reaches `w`. It
/// is replayed before being returned; if replay fails, or the versions are
/// ambiguous, or the history holds reads, the exhaustive checker decides.
pub fn check_sc_fast(h: &History) -> Result<Verdict, CheckError> {
    process_orders(h)?;
    if h.objects().len() > 1 {
        return Err(CheckError::Malformed(
            "history spans several objects".into(),
        ));
    }
    if h.ops.iter().any(|o| matches!(o.kind, OpKind::Read { .. })) {
        return check_sc_brute(h);
    }
    let versions = match derive_versions(h) {
        Ok(v) => v,
        Err(VersionError::NeverWritten {
            snapshot,
            writer,
            value,
        }) => {
            return Ok(Verdict::reject(
                vec![snapshot],
                format!("{snapshot} returned {value} for p{writer}, which p{writer} never wrote"),
            ))
        }
        Err(VersionError::Ambiguous { .. }) => return check_sc_brute(h),
        Err(VersionError::Check(e)) => return Err(e),
    };
    if let Some(rejection) = violated_condition(h, &versions) {
        return Ok(rejection);
    }
    let witness = build_witness(&versions);
    let word: Vec<SeqOp> = witness
        .iter()
        .map(|id| {
            h.get(*id)
                .and_then(|o| o.as_seq_op())
                .expect("witness holds recorded operations")
        })
        .collect();
    if is_legal_word(&word, h.n) {
        Ok(Verdict::accept(witness))
    } else {
        check_sc_brute(h)
    }
}

fn leq(a: &[usize], b: &[usize]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

fn violated_condition(h: &History, versions: &Versions) -> Option<Verdict> {
    let vector_of = |id: OpRef| {
        versions
            .snapshots
            .iter()
            .find(|(s, _)| *s == id)
            .map(|(_, v)| v)
    };

    let mut sorted: Vec<&(OpRef, Vec<usize>)> = versions.snapshots.iter().collect();
    sorted.sort_by_key(|(id, v)| (v.iter().sum::<usize>(), *id));
    for pair in sorted.windows(2) {
        let ((a, va), (b, vb)) = (pair[0], pair[1]);
        if !leq(va, vb) {
            return Some(Verdict::reject(
                vec![*a, *b],
                format!("{a} and {b} return incomparable versions {va:?} and {vb:?}"),
            ));
        }
    }

    for (p, ops) in h.by_process().iter().enumerate() {
        let mut own_writes = 0;
        let mut last_write: Option<OpRef> = None;
        let mut last_snap: Option<(OpRef, &Vec<usize>)> = None;
        for (i, op) in ops.iter().enumerate() {
            if op.is_write() {
                own_writes += 1;
                last_write = Some(op.id());
                continue;
            }
            let Some(v) = vector_of(op.id()) else {
                continue;
            };
            let s = op.id();
            if let Some(next) = ops[i + 1..].iter().find(|o| o.is_write()) {
                if v[p] > own_writes {
                    return Some(Verdict::reject(
                        vec![s, next.id()],
                        format!(
                            "{s} sees own version {} before write {} was invoked",
                            v[p],
                            own_writes + 1
                        ),
                    ));
                }
            }
            if v[p] != own_writes {
                let mut cert: Vec<OpRef> = last_write.into_iter().collect();
                cert.push(s);
                return Some(Verdict::reject(
                    cert,
                    format!(
                        "{s} sees version {} of its own register after {own_writes} own writes",
                        v[p]
                    ),
                ));
            }
            if let Some((prev, pv)) = last_snap {
                if !leq(pv, v) {
                    return Some(Verdict::reject(
                        vec![prev, s],
                        format!(
                            "{s} returns older versions {v:?} than the earlier {prev} ({pv:?})"
                        ),
                    ));
                }
            }
            last_snap = Some((s, v));
        }
    }
    None
}

fn build_witness(versions: &Versions) -> Vec<OpRef> {
    let mut sorted: Vec<&(OpRef, Vec<usize>)> = versions.snapshots.iter().collect();
    sorted.sort_by_key(|(id, v)| (v.iter().sum::<usize>(), *id));
    let mut before: Vec<Vec<OpRef>> = vec![Vec::new(); sorted.len() + 1];
    for (k, writes) in versions.writes.iter().enumerate() {
        let mut slot = 0;
        for (i, &w) in writes.iter().enumerate() {
            let version = i + 1;
            while slot < sorted.len() && sorted[slot].1[k] < version {
                slot += 1;
            }
            before[slot].push(w);
        }
    }
    let mut witness = Vec::new();
    for (i, writes) in before.into_iter().enumerate() {
        witness.extend(writes);
        if let Some((s, _)) = sorted.get(i) {
            witness.push(*s);
        }
    }
    witness
}
