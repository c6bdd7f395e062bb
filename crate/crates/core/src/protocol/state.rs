use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::pending::{compute_validable, PendingEntry};
use super::{Stamp, UpdateId, WireMsg};
use crate::{ProcId, Value};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("process id {me} out of range for n = {n}")]
    BadProcess { me: ProcId, n: usize },
    #[error("process {0} already has an operation in flight")]
    OperationInFlight(ProcId),
    #[error("message names process {proc} but n = {n}")]
    MalformedMessage { proc: ProcId, n: usize },
}

/// An operation finishing during a transition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Completion {
    Write,
    Snapshot(Vec<Value>),
}

/// Output of one transition.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Effect {
    /// Messages to broadcast to every process, the sender included.
    pub outbox: Vec<WireMsg>,
    pub completions: Vec<Completion>,
    /// Updates removed from the pending set by validation.
    pub validated: Vec<UpdateId>,
}

/// Local state of one process.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcState {
    me: ProcId,
    n: usize,
    /// Latest validated value of each register.
    x: Vec<Value>,
    /// Writer stamp of each value in `x`.
    vc: Vec<Stamp>,
    /// Stamps every message this process sends.
    sc: Stamp,
    pending: Vec<PendingEntry>,
    /// Newest write issued while an own update was still unvalidated.
    postponed: Option<Value>,
    snapshot_pending: bool,
    /// Own-update broadcasts whose self-addressed copy has not been handled.
    unreceived_own: u32,
}

impl ProcState {
    pub fn new(n: usize, me: ProcId) -> Result<Self, ProtocolError> {
        if me >= n {
            return Err(ProtocolError::BadProcess { me, n });
        }
        Ok(ProcState {
            me,
            n,
            x: vec![0; n],
            vc: vec![Stamp::ZERO; n],
            sc: Stamp::ZERO,
            pending: Vec::new(),
            postponed: None,
            snapshot_pending: false,
            unreceived_own: 0,
        })
    }

    pub fn me(&self) -> ProcId {
        self.me
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn view(&self) -> &[Value] {
        &self.x
    }

    pub fn validation_clock(&self) -> &[Stamp] {
        &self.vc
    }

    pub fn clock(&self) -> Stamp {
        self.sc
    }

    pub fn pending(&self) -> &[PendingEntry] {
        &self.pending
    }

    pub fn postponed(&self) -> Option<Value> {
        self.postponed
    }

    pub fn snapshot_pending(&self) -> bool {
        self.snapshot_pending
    }

    pub fn is_validated(&self, update: UpdateId) -> bool {
        self.vc[update.writer] >= update.stamp && !self.pending.iter().any(|g| g.id() == update)
    }

    fn has_own_pending(&self) -> bool {
        self.unreceived_own > 0 || self.pending.iter().any(|g| g.writer == self.me)
    }

    fn snapshot_ready(&self) -> bool {
        self.postponed.is_none() && !self.has_own_pending()
    }

    fn broadcast_own(&mut self, value: Value, effect: &mut Effect) {
        self.sc = self.sc.next();
        self.unreceived_own += 1;
        effect.outbox.push(WireMsg {
            value,
            writer: self.me,
            stamp: self.sc,
            clock: self.sc,
            sender: self.me,
        });
    }

    pub fn invoke_write(&mut self, value: Value) -> Result<Effect, ProtocolError> {
        if self.snapshot_pending {
            return Err(ProtocolError::OperationInFlight(self.me));
        }
        let mut effect = Effect::default();
        if self.has_own_pending() {
            // A previously postponed value is overwritten and never broadcast.
            self.postponed = Some(value);
        } else {
            self.broadcast_own(value, &mut effect);
        }
        effect.completions.push(Completion::Write);
        Ok(effect)
    }

    pub fn invoke_snapshot(&mut self) -> Result<Effect, ProtocolError> {
        if self.snapshot_pending {
            return Err(ProtocolError::OperationInFlight(self.me));
        }
        let mut effect = Effect::default();
        if self.snapshot_ready() {
            effect
                .completions
                .push(Completion::Snapshot(self.x.clone()));
        } else {
            self.snapshot_pending = true;
        }
        Ok(effect)
    }

    pub fn handle_message(&mut self, msg: &WireMsg) -> Result<Effect, ProtocolError> {
        for proc in [msg.writer, msg.sender] {
            if proc >= self.n {
                return Err(ProtocolError::MalformedMessage { proc, n: self.n });
            }
        }
        let mut effect = Effect::default();
        if msg.sender == self.me && msg.writer == self.me {
            self.unreceived_own = self.unreceived_own.saturating_sub(1);
        }

        if msg.stamp > self.vc[msg.writer] {
            let id = msg.update();
            if let Some(entry) = self.pending.iter_mut().find(|g| g.id() == id) {
                entry.clocks[msg.sender] = Some(msg.clock);
            } else {
                if msg.writer != self.me {
                    self.sc = self.sc.next();
                    effect.outbox.push(WireMsg {
                        value: msg.value,
                        writer: msg.writer,
                        stamp: msg.stamp,
                        clock: self.sc,
                        sender: self.me,
                    });
                }
                let mut entry = PendingEntry::new(msg.value, msg.writer, msg.stamp, self.n);
                entry.clocks[msg.sender] = Some(msg.clock);
                self.pending.push(entry);
            }
        }

        self.validate(&mut effect);

        if self.postponed.is_some() && !self.has_own_pending() {
            let value = self.postponed.take().expect("checked above");
            self.broadcast_own(value, &mut effect);
        }

        if self.snapshot_pending && self.snapshot_ready() {
            self.snapshot_pending = false;
            effect
                .completions
                .push(Completion::Snapshot(self.x.clone()));
        }
        Ok(effect)
    }

    fn validate(&mut self, effect: &mut Effect) {
        let validable = compute_validable(&self.pending, self.n);
        if validable.is_empty() {
            return;
        }
        let mut validated = Vec::with_capacity(validable.len());
        let mut keep = Vec::with_capacity(self.pending.len() - validable.len());
        let mut next = validable.iter().peekable();
        for (i, entry) in self.pending.drain(..).enumerate() {
            if next.peek() == Some(&&i) {
                next.next();
                validated.push(entry);
            } else {
                keep.push(entry);
            }
        }
        self.pending = keep;
        for g in validated {
            if self.vc[g.writer] < g.stamp {
                self.vc[g.writer] = g.stamp;
                self.x[g.writer] = g.value;
            }
            effect.validated.push(g.id());
        }
    }
}
