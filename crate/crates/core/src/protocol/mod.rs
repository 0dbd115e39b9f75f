//! The fault-tolerant aggregation protocol.
//!
//! The DC collects initial data, starts `S` and hands it to the first
//! responding meter. Each meter folds itself into `S` and passes it on to
//! the next meter in `L_rem` that acknowledges, dropping the ones that do
//! not. The meter that runs out of candidates, or sees that `N_min` can no
//! longer be met, reports to the DC.

mod backend;
mod cases;
mod engine;

pub use backend::{AnyAux, AnyBackend, BackendError, ComputationBackend, MaskingBackend, PaillierBackend};
pub use cases::{classify_steps, MalformedTrace, ProofCase};
pub use engine::{network_for, run_round, run_scenario, step_cap, ProtocolError};
