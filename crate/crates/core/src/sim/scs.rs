//! Adapter that lets the simulator drive snapshot-protocol processes.
//!
//! One process may use several independent memory objects (the round
//! harness uses one per round). Each object gets its own fresh
//! [`ProcState`], created on first use, and its messages are tagged with the
//! object id so that no instance ever sees another's traffic.

use std::collections::BTreeMap;

use super::config::{Operation, ScheduledOp};
use super::engine::{OpResult, Outgoing, Process, Step};
use super::metrics::UpdateKey;
use crate::history::OpRef;
use crate::protocol::{Completion, Effect, ProcState, WireMsg};
use crate::{ProcId, Value};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScsMsg {
    pub object: u32,
    pub wire: WireMsg,
}

#[derive(Clone, Debug)]
pub struct ScsProcess {
    me: ProcId,
    n: usize,
    objects: BTreeMap<u32, ProcState>,
    /// Operation whose value sits in each object's postponement buffer.
    postponed_op: BTreeMap<u32, OpRef>,
    /// Highest object this process has invoked an operation on.
    current_object: Option<u32>,
}

impl ScsProcess {
    pub fn new(n: usize, me: ProcId) -> Self {
        ScsProcess {
            me,
            n,
            objects: BTreeMap::new(),
            postponed_op: BTreeMap::new(),
            current_object: None,
        }
    }

    pub fn group(n: usize) -> Vec<ScsProcess> {
        (0..n).map(|p| ScsProcess::new(n, p)).collect()
    }

    pub fn me(&self) -> ProcId {
        self.me
    }

    /// State of the plain (object 0) memory.
    pub fn state(&self) -> Option<&ProcState> {
        self.objects.get(&0)
    }

    pub fn object(&self, object: u32) -> Option<&ProcState> {
        self.objects.get(&object)
    }

    pub fn objects(&self) -> impl Iterator<Item = (u32, &ProcState)> {
        self.objects.iter().map(|(k, v)| (*k, v))
    }

    fn instance(&mut self, object: u32) -> &mut ProcState {
        let (n, me) = (self.n, self.me);
        self.objects
            .entry(object)
            .or_insert_with(|| ProcState::new(n, me).expect("process id checked at construction"))
    }

    fn step_from(&mut self, object: u32, effect: Effect, op: Option<OpRef>) -> Step<ScsMsg> {
        let mut step = Step::default();
        for wire in effect.outbox {
            if wire.writer == self.me && wire.is_origin() {
                let owner = op.or_else(|| self.postponed_op.remove(&object));
                if let Some(owner) = owner {
                    step.announced.push((
                        UpdateKey {
                            object,
                            update: wire.update(),
                        },
                        owner,
                    ));
                }
            }
            step.sends
                .push(Outgoing::Broadcast(ScsMsg { object, wire }));
        }
        step.validated = effect
            .validated
            .into_iter()
            .map(|update| UpdateKey { object, update })
            .collect();
        step.completed = effect.completions.into_iter().last().map(|c| match c {
            Completion::Write => OpResult::Write,
            Completion::Snapshot(v) => OpResult::Snapshot(v),
        });
        let state = &self.objects[&object];
        step.vc = Some((
            object,
            state.validation_clock().iter().map(|s| s.0).collect(),
        ));
        step
    }
}

impl Process for ScsProcess {
    type Msg = ScsMsg;

    fn invoke(&mut self, op: &ScheduledOp, id: OpRef) -> Result<Step<ScsMsg>, String> {
        let object = op.object.unwrap_or(0);
        if let Some(cur) = self.current_object {
            if object < cur {
                return Err(format!(
                    "object {object} accessed after object {cur}: its accessor is gone"
                ));
            }
        }
        self.current_object = Some(object);
        let state = self.instance(object);
        let effect = match op.op {
            Operation::Write(v) => state.invoke_write(v),
            Operation::Snapshot => state.invoke_snapshot(),
            Operation::Read(_) => {
                return Err("the snapshot memory has no single-register read".into())
            }
        }
        .map_err(|e| e.to_string())?;
        let postponed = state.postponed().is_some();
        if matches!(op.op, Operation::Write(_)) && effect.outbox.is_empty() && postponed {
            self.postponed_op.insert(object, id);
        }
        let own = matches!(op.op, Operation::Write(_)).then_some(id);
        Ok(self.step_from(object, effect, own))
    }

    fn deliver(&mut self, _from: ProcId, msg: &ScsMsg) -> Result<Step<ScsMsg>, String> {
        let effect = self
            .instance(msg.object)
            .handle_message(&msg.wire)
            .map_err(|e| e.to_string())?;
        Ok(self.step_from(msg.object, effect, None))
    }

    fn update_of(msg: &ScsMsg) -> Option<UpdateKey> {
        Some(UpdateKey {
            object: msg.object,
            update: msg.wire.update(),
        })
    }

    fn route_key(msg: &ScsMsg) -> Option<(ProcId, Value)> {
        Some((msg.wire.writer, msg.wire.value))
    }
}
