//! Operation histories and their line-oriented JSON trace format.
//!
//! One JSON object per line:
//!
//! ```text
//! {"run_seed":7,"proc":0,"seq":0,"op":"write","value":65536,"t_inv":0,"t_ret":0}
//! {"run_seed":7,"proc":1,"seq":0,"op":"snapshot","result":[65536,0],"t_inv":3,"t_ret":3}
//! {"run_seed":7,"proc":1,"seq":1,"op":"read","target":0,"result":65536,"t_inv":5,"t_ret":9}
//! ```
//!
//! `t_ret` is omitted for operations that never returned, and so is `result`.
//! `object_id` is present only for histories over several objects.

use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{SeqOp, SeqOpKind};
use crate::{ProcId, Time, Value};

/// Identifies an operation by its process and its index in that process's order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OpRef {
    pub proc: ProcId,
    pub seq: usize,
}

impl fmt::Display for OpRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}#{}", self.proc, self.seq)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OpKind {
    Write(Value),
    /// The returned vector, absent while the snapshot has not returned.
    Snapshot(Option<Vec<Value>>),
    Read {
        target: ProcId,
        value: Option<Value>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OpRecord {
    pub proc: ProcId,
    pub seq: usize,
    pub kind: OpKind,
    pub t_inv: Time,
    pub t_ret: Option<Time>,
    pub object_id: Option<u32>,
}

impl OpRecord {
    pub fn id(&self) -> OpRef {
        OpRef {
            proc: self.proc,
            seq: self.seq,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.t_ret.is_some()
    }

    pub fn object(&self) -> u32 {
        self.object_id.unwrap_or(0)
    }

    pub fn is_write(&self) -> bool {
        matches!(self.kind, OpKind::Write(_))
    }

    /// The operation as a letter of a sequential word. `None` for an
    /// operation that has no return value to check yet.
    pub fn as_seq_op(&self) -> Option<SeqOp> {
        let kind = match &self.kind {
            OpKind::Write(v) => SeqOpKind::Write(*v),
            OpKind::Snapshot(Some(r)) => SeqOpKind::Snapshot(r.clone()),
            OpKind::Read {
                target,
                value: Some(v),
            } => SeqOpKind::Read {
                target: *target,
                value: *v,
            },
            _ => return None,
        };
        Some(SeqOp {
            proc: self.proc,
            kind,
        })
    }
}

/// A recorded execution over `n` processes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct History {
    pub n: usize,
    pub run_seed: u64,
    pub ops: Vec<OpRecord>,
}

#[derive(Debug, Error)]
pub enum HistoryError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("process {proc}: sequence numbers must be contiguous from 0 (found {seq}, expected {expected})")]
    NonContiguous {
        proc: ProcId,
        seq: usize,
        expected: usize,
    },
    #[error("process {proc}: operation {seq} follows an operation that never returned")]
    AfterIncomplete { proc: ProcId, seq: usize },
    #[error("{op}: {msg}")]
    Malformed { op: OpRef, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl History {
    pub fn new(n: usize, run_seed: u64) -> Self {
        History {
            n,
            run_seed,
            ops: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn get(&self, id: OpRef) -> Option<&OpRecord> {
        self.ops.iter().find(|o| o.id() == id)
    }

    /// Operations of each process, in process order.
    pub fn by_process(&self) -> Vec<Vec<&OpRecord>> {
        let mut out: Vec<Vec<&OpRecord>> = vec![Vec::new(); self.n];
        for op in &self.ops {
            if op.proc < self.n {
                out[op.proc].push(op);
            }
        }
        for ops in &mut out {
            ops.sort_by_key(|o| o.seq);
        }
        out
    }

    /// Sub-history of the operations on one object.
    pub fn project(&self, object: u32) -> History {
        History {
            n: self.n,
            run_seed: self.run_seed,
            ops: self
                .ops
                .iter()
                .filter(|o| o.object() == object)
                .cloned()
                .collect(),
        }
    }

    /// Distinct object ids, ascending.
    pub fn objects(&self) -> Vec<u32> {
        let mut objs: Vec<u32> = self.ops.iter().map(OpRecord::object).collect();
        objs.sort_unstable();
        objs.dedup();
        objs
    }

    /// Checks the structural invariants every checker relies on.
    pub fn validate(&self) -> Result<(), HistoryError> {
        for (proc, ops) in self.by_process().into_iter().enumerate() {
            for (expected, op) in ops.iter().enumerate() {
                if op.seq != expected {
                    return Err(HistoryError::NonContiguous {
                        proc,
                        seq: op.seq,
                        expected,
                    });
                }
                if expected > 0 && !ops[expected - 1].is_complete() {
                    return Err(HistoryError::AfterIncomplete { proc, seq: op.seq });
                }
            }
        }
        for op in &self.ops {
            let bad = |msg: String| HistoryError::Malformed { op: op.id(), msg };
            if op.proc >= self.n {
                return Err(bad(format!("process out of range for n = {}", self.n)));
            }
            match &op.kind {
                OpKind::Snapshot(Some(r)) if r.len() != self.n => {
                    return Err(bad(format!(
                        "snapshot of length {} for n = {}",
                        r.len(),
                        self.n
                    )))
                }
                OpKind::Snapshot(None) if op.is_complete() => {
                    return Err(bad("returned snapshot without a result".into()))
                }
                OpKind::Snapshot(Some(_)) if !op.is_complete() => {
                    return Err(bad(
                        "result recorded for an operation that never returned".into()
                    ))
                }
                OpKind::Read { target, .. } if *target >= self.n => {
                    return Err(bad("read target out of range".into()))
                }
                OpKind::Read { value, .. } if value.is_some() != op.is_complete() => {
                    return Err(bad(
                        "read result must be present exactly when it returned".into()
                    ))
                }
                _ => {}
            }
            if let Some(ret) = op.t_ret {
                if ret < op.t_inv {
                    return Err(bad("returns before it is invoked".into()));
                }
            }
        }
        Ok(())
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for op in &self.ops {
            let line = TraceLine::from_record(self.run_seed, op);
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    /// Parses a trace file. `n` is taken from `n_hint` when given, otherwise
    /// from the snapshot vectors, otherwise from the largest process id seen.
    pub fn read_jsonl<R: BufRead>(
        input: R,
        n_hint: Option<usize>,
    ) -> Result<History, HistoryError> {
        let mut ops = Vec::new();
        let mut run_seed = 0;
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: TraceLine =
                serde_json::from_str(&line).map_err(|e| HistoryError::Parse {
                    line: i + 1,
                    msg: e.to_string(),
                })?;
            run_seed = parsed.run_seed;
            let record = parsed
                .into_record()
                .map_err(|msg| HistoryError::Parse { line: i + 1, msg })?;
            ops.push(record);
        }
        let n = n_hint.unwrap_or_else(|| {
            ops.iter()
                .find_map(|o| match &o.kind {
                    OpKind::Snapshot(Some(r)) => Some(r.len()),
                    _ => None,
                })
                .unwrap_or_else(|| {
                    ops.iter()
                        .flat_map(|o| match &o.kind {
                            OpKind::Read { target, .. } => vec![o.proc, *target],
                            _ => vec![o.proc],
                        })
                        .max()
                        .map_or(0, |m| m + 1)
                })
        });
        let history = History { n, run_seed, ops };
        history.validate()?;
        Ok(history)
    }

    pub fn from_jsonl(text: &str, n_hint: Option<usize>) -> Result<History, HistoryError> {
        History::read_jsonl(text.as_bytes(), n_hint)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum TraceOp {
    Write,
    Snapshot,
    Read,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum TraceResult {
    Vector(Vec<Value>),
    Scalar(Value),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TraceLine {
    run_seed: u64,
    proc: ProcId,
    seq: usize,
    op: TraceOp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target: Option<ProcId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    result: Option<TraceResult>,
    t_inv: Time,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    t_ret: Option<Time>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    object_id: Option<u32>,
}

impl TraceLine {
    fn from_record(run_seed: u64, op: &OpRecord) -> Self {
        let (kind, value, target, result) = match &op.kind {
            OpKind::Write(v) => (TraceOp::Write, Some(*v), None, None),
            OpKind::Snapshot(r) => (
                TraceOp::Snapshot,
                None,
                None,
                r.clone().map(TraceResult::Vector),
            ),
            OpKind::Read { target, value } => (
                TraceOp::Read,
                None,
                Some(*target),
                value.map(TraceResult::Scalar),
            ),
        };
        TraceLine {
            run_seed,
            proc: op.proc,
            seq: op.seq,
            op: kind,
            value,
            target,
            result,
            t_inv: op.t_inv,
            t_ret: op.t_ret,
            object_id: op.object_id,
        }
    }

    fn into_record(self) -> Result<OpRecord, String> {
        let kind = match self.op {
            TraceOp::Write => OpKind::Write(self.value.ok_or("write without \"value\"")?),
            TraceOp::Snapshot => OpKind::Snapshot(match self.result {
                None => None,
                Some(TraceResult::Vector(v)) => Some(v),
                Some(TraceResult::Scalar(_)) => {
                    return Err("snapshot result must be a vector".into())
                }
            }),
            TraceOp::Read => OpKind::Read {
                target: self.target.ok_or("read without \"target\"")?,
                value: match self.result {
                    None => None,
                    Some(TraceResult::Scalar(v)) => Some(v),
                    Some(TraceResult::Vector(_)) => {
                        return Err("read result must be a number".into())
                    }
                },
            },
        };
        Ok(OpRecord {
            proc: self.proc,
            seq: self.seq,
            kind,
            t_inv: self.t_inv,
            t_ret: self.t_ret,
            object_id: self.object_id,
        })
    }
}

/// Compact constructors, handy for hand-written histories.
pub mod build {
    use super::*;

    pub fn write(proc: ProcId, seq: usize, value: Value, t_inv: Time, t_ret: Time) -> OpRecord {
        OpRecord {
            proc,
            seq,
            kind: OpKind::Write(value),
            t_inv,
            t_ret: Some(t_ret),
            object_id: None,
        }
    }

    pub fn snap(proc: ProcId, seq: usize, result: &[Value], t_inv: Time, t_ret: Time) -> OpRecord {
        OpRecord {
            proc,
            seq,
            kind: OpKind::Snapshot(Some(result.to_vec())),
            t_inv,
            t_ret: Some(t_ret),
            object_id: None,
        }
    }

    pub fn read(
        proc: ProcId,
        seq: usize,
        target: ProcId,
        value: Value,
        t_inv: Time,
        t_ret: Time,
    ) -> OpRecord {
        OpRecord {
            proc,
            seq,
            kind: OpKind::Read {
                target,
                value: Some(value),
            },
            t_inv,
            t_ret: Some(t_ret),
            object_id: None,
        }
    }

    pub fn pending_write(proc: ProcId, seq: usize, value: Value, t_inv: Time) -> OpRecord {
        OpRecord {
            proc,
            seq,
            kind: OpKind::Write(value),
            t_inv,
            t_ret: None,
            object_id: None,
        }
    }

    pub fn pending_snap(proc: ProcId, seq: usize, t_inv: Time) -> OpRecord {
        OpRecord {
            proc,
            seq,
            kind: OpKind::Snapshot(None),
            t_inv,
            t_ret: None,
            object_id: None,
        }
    }

    pub fn on(object: u32, mut op: OpRecord) -> OpRecord {
        op.object_id = Some(object);
        op
    }

    pub fn history(n: usize, ops: Vec<OpRecord>) -> History {
        History {
            n,
            run_seed: 0,
            ops,
        }
    }
}
