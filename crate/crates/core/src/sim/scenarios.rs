//! Named runs with hand-fixed delivery schedules.
//!
//! * `fig4a`: five processes, two concurrent writes `a` (by `p_4`) and `b`
//!   (by `p_0`). `p_3` and `p_4` validate `a` first, `p_0` and `p_1` hold
//!   `b` back until `a` can be validated with it, and `p_2` holds `a` back
//!   for `b`.
//! * `fig4b`: four processes, `p_3` writes `a` then `c` and `p_0` writes `b`
//!   then `d`, with deliveries that would chain the four updates into an
//!   endless dependency if `c` and `d` were sent right away.
//! * `abd_baseline_demo`: a register write racing a read, then a later read.
//!
//! Times are ticks. Half-unit instants of the original schedules map to `2t + 1`.

use super::config::{
    DelayModel, DeliveryRule, Operation, ScriptedDelays, SimConfig, SimError, Workload,
};
use super::metrics::UpdateKey;
use super::{run_simulation, RunArtifacts, Simulation};
use crate::abd::AbdProcess;
use crate::protocol::{Stamp, UpdateId};
use crate::{ProcId, Time, Value};

pub const SCENARIOS: [&str; 3] = ["fig4a", "fig4b", "abd_baseline_demo"];

const fn key(writer: ProcId, stamp: u64) -> UpdateKey {
    UpdateKey {
        object: 0,
        update: UpdateId {
            writer,
            stamp: Stamp(stamp),
        },
    }
}

pub const FIG4A_A: UpdateKey = key(4, 1);
pub const FIG4A_B: UpdateKey = key(0, 1);
/// Instant at which every dependency in `fig4a` is in place but `p_0`, `p_1`
/// and `p_2` still hold an update with a majority of stamps.
pub const FIG4A_HOLD: Time = 12;

pub const FIG4B_A: UpdateKey = key(3, 1);
pub const FIG4B_B: UpdateKey = key(0, 1);
pub const FIG4B_C: UpdateKey = key(3, 2);
pub const FIG4B_D: UpdateKey = key(0, 2);
/// Instant right after the second writes were invoked.
pub const FIG4B_SECOND_WRITES: Time = 4;

fn rules(list: &[(ProcId, ProcId, ProcId, Value, Time)]) -> Vec<DeliveryRule> {
    list.iter()
        .map(|&(from, to, writer, value, arrive_at)| DeliveryRule {
            from,
            to,
            writer,
            value,
            arrive_at,
        })
        .collect()
}

pub fn fig4a_config() -> SimConfig {
    let n = 5;
    let mut w = Workload::empty(n);
    w.push(4, 0, Operation::Write(1))
        .push(0, 0, Operation::Write(1));
    #[rustfmt::skip]
    let schedule = rules(&[
        // a = (p4, 1)
        (4, 3, 4, 1, 3),
        (3, 2, 4, 1, 6), (3, 4, 4, 1, 6),
        (2, 3, 4, 1, 9), (2, 4, 4, 1, 9), (2, 1, 4, 1, 10), (2, 0, 4, 1, 10),
        (1, 0, 4, 1, 15), (1, 2, 4, 1, 12),
        (0, 1, 4, 1, 15),
        // b = (p0, 1)
        (0, 1, 0, 1, 3),
        (1, 2, 0, 1, 9), (1, 0, 0, 1, 7), (1, 4, 0, 1, 7),
        (2, 0, 0, 1, 12), (2, 3, 0, 1, 11), (2, 4, 0, 1, 11), (2, 1, 0, 1, 12),
        (3, 2, 0, 1, 15),
        (4, 3, 0, 1, 15),
    ]);
    SimConfig::new(n, 0, w).with_delay(DelayModel::Scripted(ScriptedDelays {
        rules: schedule,
        default_arrival: 20,
    }))
}

pub fn fig4b_config() -> SimConfig {
    let n = 4;
    let mut w = Workload::empty(n);
    w.push(3, 2, Operation::Write(1))
        .push(3, 4, Operation::Write(2))
        .push(0, 2, Operation::Write(1))
        .push(0, 4, Operation::Write(2));
    #[rustfmt::skip]
    let schedule = rules(&[
        // p_2 hears a, c before b, d; p_1 hears b, d before a, c.
        (3, 2, 3, 1, 3), (3, 2, 3, 2, 5), (0, 2, 0, 1, 6), (0, 2, 0, 2, 7),
        (0, 1, 0, 1, 3), (0, 1, 0, 2, 5), (3, 1, 3, 1, 6), (3, 1, 3, 2, 7),
    ]);
    SimConfig::new(n, 0, w).with_delay(DelayModel::Scripted(ScriptedDelays {
        rules: schedule,
        default_arrival: 10,
    }))
}

pub fn abd_demo_config() -> SimConfig {
    let n = 3;
    let mut w = Workload::empty(n);
    w.push(0, 0, Operation::Write(7))
        .push(1, 1, Operation::Read(0))
        .push(2, 60, Operation::Read(0));
    SimConfig::new(n, 0, w).with_delay(DelayModel::Sync { d: 5, u: 2 })
}

/// Runs a named scenario to quiescence.
pub fn replay_scripted(name: &str) -> Result<RunArtifacts, SimError> {
    match name {
        "fig4a" => Ok(run_simulation(&fig4a_config())?.into()),
        "fig4b" => Ok(run_simulation(&fig4b_config())?.into()),
        "abd_baseline_demo" => {
            let config = abd_demo_config();
            let mut sim = Simulation::new(&config, AbdProcess::group(config.n))?;
            sim.run()?;
            Ok(sim.finish().into())
        }
        other => Err(SimError::Config(format!(
            "unknown scenario `{other}` (known: {})",
            SCENARIOS.join(", ")
        ))),
    }
}
