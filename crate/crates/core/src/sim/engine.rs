//! The discrete-event loop.
//!
//! Events are ordered by `(time, sequence number)`; the sequence number is
//! assigned when the event is scheduled, so runs are a pure function of the
//! configuration. A message to the sending process itself is not queued: it
//! is handled right after the transition that sent it, before anything else.
//! Channel FIFO order is kept by never letting a message arrive before the
//! previous message on the same ordered pair.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{CrashPoint, DelayModel, ScheduledOp, SimConfig, SimError};
use super::metrics::{Chain, Metrics, UpdateKey, ValidationEvent, VcSample, VcTrace};
use crate::history::{History, OpKind, OpRecord, OpRef};
use crate::sim::config::Operation;
use crate::{ProcId, Time, Value};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outgoing<M> {
    /// To every process, the sender included.
    Broadcast(M),
    To(ProcId, M),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OpResult {
    Write,
    Snapshot(Vec<Value>),
    Read(Value),
}

/// What a process did in one transition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step<M> {
    pub sends: Vec<Outgoing<M>>,
    /// Result of the process's current operation, if it returned.
    pub completed: Option<OpResult>,
    pub validated: Vec<UpdateKey>,
    /// Updates this transition created on behalf of an operation.
    pub announced: Vec<(UpdateKey, OpRef)>,
    /// Validation clock of the object the transition touched.
    pub vc: Option<(u32, Vec<u64>)>,
}

impl<M> Default for Step<M> {
    fn default() -> Self {
        Step {
            sends: Vec::new(),
            completed: None,
            validated: Vec::new(),
            announced: Vec::new(),
            vc: None,
        }
    }
}

/// A process the simulator can drive.
pub trait Process {
    type Msg: Clone + fmt::Debug;

    fn invoke(&mut self, op: &ScheduledOp, id: OpRef) -> Result<Step<Self::Msg>, String>;

    fn deliver(&mut self, from: ProcId, msg: &Self::Msg) -> Result<Step<Self::Msg>, String>;

    /// Update a message belongs to, for per-update message counts.
    fn update_of(_msg: &Self::Msg) -> Option<UpdateKey> {
        None
    }

    /// Operation a message belongs to, for per-operation message counts.
    fn op_of(_msg: &Self::Msg) -> Option<OpRef> {
        None
    }

    /// `(writer, value)` carried by a message, for scripted delivery rules.
    fn route_key(_msg: &Self::Msg) -> Option<(ProcId, Value)> {
        None
    }
}

enum Payload<M> {
    Invoke(ProcId),
    Deliver {
        from: ProcId,
        to: ProcId,
        msg: M,
        chain: Chain,
    },
    Crash(ProcId),
}

struct Event<M> {
    time: Time,
    seq: u64,
    payload: Payload<M>,
}

impl<M> PartialEq for Event<M> {
    fn eq(&self, other: &Self) -> bool {
        (self.time, self.seq) == (other.time, other.seq)
    }
}
impl<M> Eq for Event<M> {}
impl<M> PartialOrd for Event<M> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<M> Ord for Event<M> {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.time, self.seq).cmp(&(other.time, other.seq))
    }
}

struct InFlightOp {
    record: usize,
    t_inv: Time,
}

/// Everything a finished run produced.
#[derive(Clone, Debug)]
pub struct SimOutcome<P> {
    pub history: History,
    pub metrics: Metrics,
    pub trace: VcTrace,
    pub validations: Vec<ValidationEvent>,
    pub processes: Vec<P>,
    pub crashed: Vec<bool>,
}

impl<P> SimOutcome<P> {
    pub fn correct(&self) -> impl Iterator<Item = ProcId> + '_ {
        self.crashed
            .iter()
            .enumerate()
            .filter(|(_, c)| !**c)
            .map(|(p, _)| p)
    }

    /// Transition index at which `proc` validated `key`, if it did.
    pub fn validated_at(&self, proc: ProcId, key: UpdateKey) -> Option<u64> {
        self.validations
            .iter()
            .find(|v| v.proc == proc && v.key == key)
            .map(|v| v.step)
    }
}

pub struct Simulation<P: Process> {
    n: usize,
    seed: u64,
    delay: DelayModel,
    max_events: u64,
    rng: ChaCha8Rng,
    procs: Vec<P>,
    crashed: Vec<bool>,
    crash_at_broadcast: Vec<Option<u32>>,
    broadcasts: Vec<u32>,
    workload: Vec<Vec<ScheduledOp>>,
    cursor: Vec<usize>,
    op_count: Vec<usize>,
    in_flight: Vec<Option<InFlightOp>>,
    queue: BinaryHeap<Reverse<Event<P::Msg>>>,
    channel_last: Vec<Time>,
    next_seq: u64,
    now: Time,
    transitions: u64,
    history: History,
    metrics: Metrics,
    trace: VcTrace,
    validations: Vec<ValidationEvent>,
}

impl<P: Process> Simulation<P> {
    pub fn new(config: &SimConfig, procs: Vec<P>) -> Result<Self, SimError> {
        config.validate()?;
        let n = config.n;
        if procs.len() != n {
            return Err(SimError::Config(format!(
                "{} process states for n = {n}",
                procs.len()
            )));
        }
        let mut workload = config.workload.per_proc.clone();
        workload.resize(n, Vec::new());
        let mut sim = Simulation {
            n,
            seed: config.seed,
            delay: config.delay.clone(),
            max_events: config.max_events,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            procs,
            crashed: vec![false; n],
            crash_at_broadcast: vec![None; n],
            broadcasts: vec![0; n],
            workload,
            cursor: vec![0; n],
            op_count: vec![0; n],
            in_flight: (0..n).map(|_| None).collect(),
            queue: BinaryHeap::new(),
            channel_last: vec![0; n * n],
            next_seq: 0,
            now: 0,
            transitions: 0,
            history: History::new(n, config.seed),
            metrics: Metrics::default(),
            trace: VcTrace::default(),
            validations: Vec::new(),
        };
        for c in &config.crashes {
            match c.point {
                CrashPoint::AtTime(t) => sim.schedule(t, Payload::Crash(c.proc)),
                CrashPoint::DuringBroadcast(k) => sim.crash_at_broadcast[c.proc] = Some(k),
            }
        }
        for p in 0..n {
            if let Some(first) = sim.workload[p].first() {
                let at = first.at;
                sim.schedule(at, Payload::Invoke(p));
            }
        }
        Ok(sim)
    }

    pub fn now(&self) -> Time {
        self.now
    }

    pub fn processes(&self) -> &[P] {
        &self.procs
    }

    pub fn is_crashed(&self, proc: ProcId) -> bool {
        self.crashed[proc]
    }

    pub fn history(&self) -> &History {
        &self.history
    }

    pub fn validations(&self) -> &[ValidationEvent] {
        &self.validations
    }

    fn schedule(&mut self, time: Time, payload: Payload<P::Msg>) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Reverse(Event { time, seq, payload }));
    }

    pub fn next_event_time(&self) -> Option<Time> {
        self.queue.peek().map(|Reverse(e)| e.time)
    }

    /// Processes one queued event (and the self-deliveries it causes).
    /// Returns `false` when nothing is left to do or the event cap is hit.
    pub fn step(&mut self) -> Result<bool, SimError> {
        if self.metrics.events >= self.max_events {
            return Ok(false);
        }
        let Some(Reverse(event)) = self.queue.pop() else {
            return Ok(false);
        };
        self.metrics.events += 1;
        self.now = event.time;
        match event.payload {
            Payload::Crash(p) => self.crashed[p] = true,
            Payload::Invoke(p) => {
                if !self.crashed[p] {
                    self.invoke(p)?;
                }
            }
            Payload::Deliver {
                from,
                to,
                msg,
                chain,
            } => {
                if !self.crashed[to] {
                    self.deliver(from, to, msg, chain)?;
                }
            }
        }
        Ok(true)
    }

    /// Processes every event scheduled at or before `t`.
    pub fn run_until(&mut self, t: Time) -> Result<(), SimError> {
        while self.next_event_time().is_some_and(|next| next <= t) {
            if !self.step()? {
                break;
            }
        }
        Ok(())
    }

    /// Runs to quiescence or to the event cap.
    pub fn run(&mut self) -> Result<(), SimError> {
        while self.step()? {}
        Ok(())
    }

    pub fn finish(mut self) -> SimOutcome<P> {
        self.metrics.quiescent = self.queue.is_empty();
        SimOutcome {
            history: self.history,
            metrics: self.metrics,
            trace: self.trace,
            validations: self.validations,
            processes: self.procs,
            crashed: self.crashed,
        }
    }

    fn invoke(&mut self, p: ProcId) -> Result<(), SimError> {
        let op = self.workload[p][self.cursor[p]].clone();
        self.cursor[p] += 1;
        let seq = self.op_count[p];
        self.op_count[p] += 1;
        let id = OpRef { proc: p, seq };
        let kind = match op.op {
            Operation::Write(v) => OpKind::Write(v),
            Operation::Snapshot => OpKind::Snapshot(None),
            Operation::Read(target) => OpKind::Read {
                target,
                value: None,
            },
        };
        self.history.ops.push(OpRecord {
            proc: p,
            seq,
            kind,
            t_inv: self.now,
            t_ret: None,
            object_id: op.object,
        });
        self.in_flight[p] = Some(InFlightOp {
            record: self.history.ops.len() - 1,
            t_inv: self.now,
        });
        let step = self.procs[p]
            .invoke(&op, id)
            .map_err(|msg| SimError::Process { proc: p, msg })?;
        let mut local = VecDeque::new();
        if self.apply(p, step, None, &mut local) {
            self.drain_local(p, local)?;
        }
        Ok(())
    }

    fn deliver(
        &mut self,
        from: ProcId,
        to: ProcId,
        msg: P::Msg,
        chain: Chain,
    ) -> Result<(), SimError> {
        let mut local = VecDeque::new();
        local.push_back((from, msg, chain));
        self.drain_local(to, local)
    }

    fn drain_local(
        &mut self,
        p: ProcId,
        mut local: VecDeque<(ProcId, P::Msg, Chain)>,
    ) -> Result<(), SimError> {
        while let Some((from, msg, chain)) = local.pop_front() {
            let step = self.procs[p]
                .deliver(from, &msg)
                .map_err(|msg| SimError::Process { proc: p, msg })?;
            if !self.apply(p, step, Some(&chain), &mut local) {
                break;
            }
        }
        Ok(())
    }

    fn horizon(&self) -> Time {
        self.in_flight
            .iter()
            .zip(&self.crashed)
            .filter(|(_, c)| !**c)
            .filter_map(|(op, _)| op.as_ref().map(|o| o.t_inv))
            .min()
            .map_or(self.now, |t| t.min(self.now))
    }

    fn draw_delay(&mut self, from: ProcId, to: ProcId, msg: &P::Msg) -> Time {
        match &self.delay {
            DelayModel::Async { min, max } => self.now + self.rng.gen_range(*min..=*max),
            DelayModel::Sync { d, u } => self.now + self.rng.gen_range(d - u..=*d),
            DelayModel::Scripted(script) => {
                let key = P::route_key(msg);
                let rule = script
                    .rules
                    .iter()
                    .find(|r| r.from == from && r.to == to && Some((r.writer, r.value)) == key);
                match rule {
                    Some(r) => r.arrive_at.max(self.now + 1),
                    None => script.default_arrival.max(self.now + 1),
                }
            }
        }
    }

    fn count_message(&mut self, msg: &P::Msg) {
        self.metrics.messages_total += 1;
        if let Some(key) = P::update_of(msg) {
            *self.metrics.messages_per_update.entry(key).or_default() += 1;
        }
        if let Some(op) = P::op_of(msg) {
            *self.metrics.messages_per_op.entry(op).or_default() += 1;
        }
    }

    fn send(
        &mut self,
        from: ProcId,
        to: ProcId,
        msg: P::Msg,
        chain: Chain,
        local: &mut VecDeque<(ProcId, P::Msg, Chain)>,
    ) {
        self.count_message(&msg);
        if to == from {
            local.push_back((from, msg, chain));
            return;
        }
        let channel = from * self.n + to;
        let arrive = self
            .draw_delay(from, to, &msg)
            .max(self.channel_last[channel]);
        self.channel_last[channel] = arrive;
        self.schedule(
            arrive,
            Payload::Deliver {
                from,
                to,
                msg,
                chain,
            },
        );
    }

    /// Records a transition of `p`. Returns `false` if `p` crashed during it.
    fn apply(
        &mut self,
        p: ProcId,
        step: Step<P::Msg>,
        cause: Option<&Chain>,
        local: &mut VecDeque<(ProcId, P::Msg, Chain)>,
    ) -> bool {
        self.transitions += 1;
        let horizon = self.horizon();
        for (key, op) in step.announced {
            self.metrics.update_op.insert(key, op);
        }
        for out in step.sends {
            let chain = match cause {
                Some(c) => c.extend(self.now, horizon),
                None => Chain::origin(self.now),
            };
            match out {
                Outgoing::To(to, msg) => self.send(p, to, msg, chain, local),
                Outgoing::Broadcast(msg) => {
                    let index = self.broadcasts[p];
                    self.broadcasts[p] += 1;
                    if self.crash_at_broadcast[p] == Some(index) {
                        for to in 0..self.n {
                            if to != p && self.rng.gen_bool(0.5) {
                                self.send(p, to, msg.clone(), chain.clone(), local);
                            }
                        }
                        self.crashed[p] = true;
                        local.clear();
                        return false;
                    }
                    for to in 0..self.n {
                        self.send(p, to, msg.clone(), chain.clone(), local);
                    }
                }
            }
        }
        for key in step.validated {
            self.validations.push(ValidationEvent {
                time: self.now,
                proc: p,
                key,
                step: self.transitions,
            });
        }
        if let Some((object, vc)) = step.vc {
            self.trace.samples.push(VcSample {
                proc: p,
                time: self.now,
                object,
                vc,
            });
        }
        if let Some(result) = step.completed {
            self.complete(p, result, cause);
        }
        true
    }

    /// The operation's causal depth is read off the message whose handling
    /// completed it: the part of its chain sent since the invocation. An
    /// operation completed by its own invocation scores 0.
    fn complete(&mut self, p: ProcId, result: OpResult, cause: Option<&Chain>) {
        let Some(op) = self.in_flight[p].take() else {
            return;
        };
        let record = &mut self.history.ops[op.record];
        record.t_ret = Some(self.now);
        match (&mut record.kind, result) {
            (OpKind::Snapshot(slot), OpResult::Snapshot(v)) => *slot = Some(v),
            (OpKind::Read { value, .. }, OpResult::Read(v)) => *value = Some(v),
            _ => {}
        }
        let depth = cause.map_or(0, |c| c.longest_since(op.t_inv));
        self.metrics.op_causal_depth.insert(record.id(), depth);
        if let Some(next) = self.workload[p].get(self.cursor[p]) {
            let at = next.at.max(self.now);
            self.schedule(at, Payload::Invoke(p));
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}
