//! Majority-quorum emulation of single-writer registers, used as the
//! latency and message-count baseline.
//!
//! Register `k` is written only by process `k`. A write stores a fresh
//! timestamp at a majority; a read queries a majority, picks the highest
//! timestamp and writes it back to a majority before returning.

use std::collections::BTreeSet;

use crate::history::OpRef;
use crate::sim::{OpResult, Operation, Outgoing, Process, ScheduledOp, Step};
use crate::{ProcId, Value};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Tagged {
    pub ts: u64,
    pub value: Value,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AbdBody {
    Store { reg: ProcId, tagged: Tagged },
    StoreAck,
    Query { reg: ProcId },
    QueryReply { tagged: Tagged },
}

/// Every message names the operation and phase it serves, so replies to
/// an earlier phase are never counted twice.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbdMsg {
    pub op: OpRef,
    pub phase: u32,
    pub body: AbdBody,
}

#[derive(Clone, Debug)]
enum Phase {
    Idle,
    Storing {
        op: OpRef,
        phase: u32,
        acks: BTreeSet<ProcId>,
        read: Option<Value>,
    },
    Querying {
        op: OpRef,
        phase: u32,
        reg: ProcId,
        replies: BTreeSet<ProcId>,
        best: Tagged,
    },
}

/// Strictly more than half of the processes.
fn quorum(n: usize, count: usize) -> bool {
    2 * count > n
}

#[derive(Clone, Debug)]
pub struct AbdProcess {
    me: ProcId,
    n: usize,
    regs: Vec<Tagged>,
    own_ts: u64,
    phase: Phase,
    phases_started: u32,
}

impl AbdProcess {
    pub fn new(n: usize, me: ProcId) -> Self {
        AbdProcess {
            me,
            n,
            regs: vec![Tagged::default(); n],
            own_ts: 0,
            phase: Phase::Idle,
            phases_started: 0,
        }
    }

    pub fn group(n: usize) -> Vec<AbdProcess> {
        (0..n).map(|p| AbdProcess::new(n, p)).collect()
    }

    /// Local copy of every register.
    pub fn registers(&self) -> &[Tagged] {
        &self.regs
    }

    fn next_phase(&mut self) -> u32 {
        self.phases_started += 1;
        self.phases_started
    }

    fn store(
        &mut self,
        op: OpRef,
        reg: ProcId,
        tagged: Tagged,
        read: Option<Value>,
    ) -> Step<AbdMsg> {
        let phase = self.next_phase();
        self.phase = Phase::Storing {
            op,
            phase,
            acks: BTreeSet::new(),
            read,
        };
        Step {
            sends: vec![Outgoing::Broadcast(AbdMsg {
                op,
                phase,
                body: AbdBody::Store { reg, tagged },
            })],
            ..Step::default()
        }
    }
}

impl Process for AbdProcess {
    type Msg = AbdMsg;

    fn invoke(&mut self, op: &ScheduledOp, id: OpRef) -> Result<Step<AbdMsg>, String> {
        if !matches!(self.phase, Phase::Idle) {
            return Err("operation invoked while another is running".into());
        }
        if op.object.is_some_and(|o| o != 0) {
            return Err("the register baseline has a single object".into());
        }
        match op.op {
            Operation::Write(v) => {
                self.own_ts += 1;
                let tagged = Tagged {
                    ts: self.own_ts,
                    value: v,
                };
                Ok(self.store(id, self.me, tagged, None))
            }
            Operation::Read(reg) => {
                let phase = self.next_phase();
                self.phase = Phase::Querying {
                    op: id,
                    phase,
                    reg,
                    replies: BTreeSet::new(),
                    best: Tagged::default(),
                };
                Ok(Step {
                    sends: vec![Outgoing::Broadcast(AbdMsg {
                        op: id,
                        phase,
                        body: AbdBody::Query { reg },
                    })],
                    ..Step::default()
                })
            }
            Operation::Snapshot => Err("the register baseline has no snapshot".into()),
        }
    }

    fn deliver(&mut self, from: ProcId, msg: &AbdMsg) -> Result<Step<AbdMsg>, String> {
        let reply = |body| Step {
            sends: vec![Outgoing::To(
                from,
                AbdMsg {
                    op: msg.op,
                    phase: msg.phase,
                    body,
                },
            )],
            ..Step::default()
        };
        match &msg.body {
            AbdBody::Store { reg, tagged } => {
                let slot = self
                    .regs
                    .get_mut(*reg)
                    .ok_or("store to a register out of range")?;
                if tagged.ts > slot.ts {
                    *slot = *tagged;
                }
                Ok(reply(AbdBody::StoreAck))
            }
            AbdBody::Query { reg } => {
                let tagged = *self
                    .regs
                    .get(*reg)
                    .ok_or("query of a register out of range")?;
                Ok(reply(AbdBody::QueryReply { tagged }))
            }
            AbdBody::StoreAck => {
                let n = self.n;
                let done = match &mut self.phase {
                    Phase::Storing {
                        op,
                        phase,
                        acks,
                        read,
                    } if *op == msg.op && *phase == msg.phase => {
                        acks.insert(from);
                        let count = acks.len();
                        let read = *read;
                        quorum(n, count).then_some(read)
                    }
                    _ => None,
                };
                let mut step = Step::default();
                if let Some(read) = done {
                    self.phase = Phase::Idle;
                    step.completed = Some(match read {
                        Some(v) => OpResult::Read(v),
                        None => OpResult::Write,
                    });
                }
                Ok(step)
            }
            AbdBody::QueryReply { tagged } => {
                let n = self.n;
                let done = match &mut self.phase {
                    Phase::Querying {
                        op,
                        phase,
                        reg,
                        replies,
                        best,
                    } if *op == msg.op && *phase == msg.phase => {
                        replies.insert(from);
                        if tagged.ts > best.ts {
                            *best = *tagged;
                        }
                        let count = replies.len();
                        quorum(n, count).then_some((*op, *reg, *best))
                    }
                    _ => None,
                };
                match done {
                    Some((op, reg, best)) => Ok(self.store(op, reg, best, Some(best.value))),
                    None => Ok(Step::default()),
                }
            }
        }
    }

    fn op_of(msg: &AbdMsg) -> Option<OpRef> {
        Some(msg.op)
    }

    fn route_key(msg: &AbdMsg) -> Option<(ProcId, Value)> {
        match msg.body {
            AbdBody::Store { reg, tagged } => Some((reg, tagged.value)),
            _ => None,
        }
    }
}
