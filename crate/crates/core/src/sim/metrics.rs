//! Message counts, causal depths and validation-clock traces.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::history::OpRef;
use crate::protocol::UpdateId;
use crate::{ProcId, Time};

/// An update within one memory object. Plain runs use object 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UpdateKey {
    pub object: u32,
    pub update: UpdateId,
}

/// Causal history of a message, reduced to what latency accounting needs:
/// for each start time `s`, the length of the longest chain of causally
/// related messages that starts with a message sent at or after `s` and
/// ends with this one.
///
/// Stored as a Pareto frontier: starts ascending, lengths strictly descending.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Chain(Vec<(Time, u32)>);

impl Chain {
    /// A message sent from an invocation (not caused by any receipt).
    pub fn origin(now: Time) -> Chain {
        Chain(vec![(now, 1)])
    }

    /// A message sent at `now` while handling a message with chain `self`.
    /// Entries starting before `horizon` are dropped.
    pub fn extend(&self, now: Time, horizon: Time) -> Chain {
        let mut out: Vec<(Time, u32)> = self
            .0
            .iter()
            .filter(|(s, _)| *s >= horizon)
            .map(|&(s, l)| (s, l + 1))
            .collect();
        if out.last().is_none_or(|&(s, _)| s < now) {
            out.push((now, 1));
        }
        Chain(out)
    }

    /// Longest chain ending here whose first message was sent at or after `since`.
    pub fn longest_since(&self, since: Time) -> u32 {
        self.0
            .iter()
            .find(|(s, _)| *s >= since)
            .map_or(0, |&(_, l)| l)
    }

    pub fn entries(&self) -> &[(Time, u32)] {
        &self.0
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Metrics {
    /// Every point-to-point message, self-addressed copies included.
    pub messages_total: u64,
    pub messages_per_update: BTreeMap<UpdateKey, u64>,
    /// Messages attributed to an operation: for the snapshot protocol the
    /// messages of the update its write produced, for the baseline the
    /// requests and replies of the operation.
    pub messages_per_op: BTreeMap<OpRef, u64>,
    /// Length of the causal chain ending with the message that completed the
    /// operation, counted from its first message sent at or after the
    /// invocation. Zero for operations that return in their invocation step.
    pub op_causal_depth: BTreeMap<OpRef, u32>,
    pub update_op: BTreeMap<UpdateKey, OpRef>,
    pub events: u64,
    pub quiescent: bool,
}

impl Metrics {
    /// Messages attributed to `op`, including those of its update.
    pub fn op_messages(&self, op: OpRef) -> u64 {
        let direct = self.messages_per_op.get(&op).copied().unwrap_or(0);
        let via_update: u64 = self
            .update_op
            .iter()
            .filter(|(_, o)| **o == op)
            .map(|(k, _)| self.messages_per_update.get(k).copied().unwrap_or(0))
            .sum();
        direct + via_update
    }

    pub fn to_document(&self) -> MetricsDocument {
        let mut op_ids: Vec<OpRef> = self.op_causal_depth.keys().copied().collect();
        op_ids.extend(self.messages_per_op.keys().copied());
        op_ids.extend(self.update_op.values().copied());
        op_ids.sort_unstable();
        op_ids.dedup();
        MetricsDocument {
            messages_total: self.messages_total,
            events: self.events,
            quiescent: self.quiescent,
            updates: self
                .messages_per_update
                .iter()
                .map(|(k, &messages)| UpdateRow {
                    object: k.object,
                    writer: k.update.writer,
                    stamp: k.update.stamp.0,
                    messages,
                    op: self.update_op.get(k).copied(),
                })
                .collect(),
            ops: op_ids
                .into_iter()
                .map(|op| OpRow {
                    proc: op.proc,
                    seq: op.seq,
                    messages: self.op_messages(op),
                    causal_depth: self.op_causal_depth.get(&op).copied(),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("metrics serialize")
    }
}

/// Serialized form of [`Metrics`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsDocument {
    pub messages_total: u64,
    pub events: u64,
    pub quiescent: bool,
    pub updates: Vec<UpdateRow>,
    pub ops: Vec<OpRow>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateRow {
    pub object: u32,
    pub writer: ProcId,
    pub stamp: u64,
    pub messages: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub op: Option<OpRef>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpRow {
    pub proc: ProcId,
    pub seq: usize,
    pub messages: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub causal_depth: Option<u32>,
}

/// One validation-clock sample, taken after a transition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VcSample {
    pub proc: ProcId,
    pub time: Time,
    pub object: u32,
    pub vc: Vec<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VcTrace {
    pub samples: Vec<VcSample>,
}

impl VcTrace {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("trace serializes")
    }
}

/// An update leaving a process's pending set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationEvent {
    pub time: Time,
    pub proc: ProcId,
    pub key: UpdateKey,
    /// Index of the transition in the run, for ordering events at equal times.
    pub step: u64,
}
