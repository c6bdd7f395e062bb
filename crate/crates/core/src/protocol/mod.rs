//! The sequentially consistent snapshot-memory protocol, one process at a time.
//!
//! Writes never wait: a write either broadcasts its update right away or, if
//! the writer still has an update of its own awaiting validation, parks the
//! value in a one-slot buffer that is released once that update validates.
//! Snapshots send nothing; they wait only while the invoking process has an
//! update of its own in flight, and then return the local view.
//!
//! Every process stamps every update it hears about with its own clock and
//! rebroadcasts it once. An update is validated (folded into the local view)
//! when stamps from a majority are known and every update it depends on is
//! validated in the same pass. See [`pending`] for the dependency relation.
//!
//! [`ProcState`] is a plain state machine. The caller delivers messages and
//! must hand each process the self-addressed copy of its own broadcasts
//! before any other message; [`crate::sim`] does exactly that.

pub mod pending;
mod state;

use serde::{Deserialize, Serialize};

use crate::{ProcId, Value};

pub use pending::{compute_validable, depends, stamped_before, PendingEntry};
pub use state::{Completion, Effect, ProcState, ProtocolError};

/// A logical clock value issued by one process. Issued stamps start at 1;
/// `Stamp::ZERO` marks "nothing validated yet" in a validation clock.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Stamp(pub u64);

impl Stamp {
    pub const ZERO: Stamp = Stamp(0);

    pub fn next(self) -> Stamp {
        Stamp(self.0 + 1)
    }
}

/// An update is identified by its writer and the stamp the writer gave it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UpdateId {
    pub writer: ProcId,
    pub stamp: Stamp,
}

/// Protocol message `M(value, writer, stamp, clock)` plus the transport-level
/// sender. `clock` is the sender's own stamp for the update; when the sender
/// is the writer it equals `stamp`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WireMsg {
    pub value: Value,
    pub writer: ProcId,
    pub stamp: Stamp,
    pub clock: Stamp,
    pub sender: ProcId,
}

impl WireMsg {
    pub fn update(&self) -> UpdateId {
        UpdateId {
            writer: self.writer,
            stamp: self.stamp,
        }
    }

    /// True for the writer's own announcement of an update.
    pub fn is_origin(&self) -> bool {
        self.sender == self.writer
    }
}
