//! A sequentially consistent snapshot memory for crash-prone asynchronous
//! message-passing systems, and the machinery to test it.
//!
//! * [`model`]: the sequential specification (an array of single-writer registers).
//! * [`protocol`]: the per-process state machine. Writes never wait, and
//!   snapshots wait only right after a write by the same process.
//! * [`sim`]: a seeded discrete-event simulator with FIFO channels, crash
//!   injection and message/latency accounting.
//! * [`abd`]: the classic majority-quorum linearizable register, the baseline.
//! * [`check`]: sequential consistency and linearizability checkers for
//!   recorded histories, a fast structural one and exhaustive oracles.
//! * [`rounds`]: round-based executions that use a fresh memory per round,
//!   and the check that their composition stays sequentially consistent.
//!
//! ```
//! use seqsnap::sim::{run_simulation, SimConfig, Workload, Operation};
//! use seqsnap::check::check_sc_fast;
//!
//! let mut workload = Workload::empty(3);
//! workload.push(0, 0, Operation::Write(1));
//! workload.push(0, 0, Operation::Snapshot);
//! workload.push(2, 1, Operation::Snapshot);
//! let config = SimConfig::new(3, 42, workload);
//! let outcome = run_simulation(&config).unwrap();
//! assert!(outcome.metrics.quiescent);
//! assert!(check_sc_fast(&outcome.history).unwrap().accepted);
//! ```

pub mod abd;
pub mod bench;
pub mod check;
pub mod history;
pub mod model;
pub mod protocol;
pub mod rounds;
pub mod sim;

/// Process identifier, `0..n`.
pub type ProcId = usize;

/// Register contents. Registers start at `0`.
pub type Value = u64;

/// Logical simulation time in ticks.
pub type Time = u64;

pub use history::{History, OpKind, OpRecord, OpRef};
