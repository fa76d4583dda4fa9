//! Truncated Fock-space simulation of a Kerr cavity with engineered,
//! photon-number-selective loss.
//!
//! Three models of the same dissipation are provided and share one state
//! representation:
//!
//! - [`channel`]: the exact discrete-time model. One Mach-Zehnder unit
//!   (beamsplitter, Kerr evolution for a time `tau`, identical beamsplitter)
//!   acts on the cavity mode and a vacuum auxiliary mode, after which the
//!   auxiliary mode is traced out. The unit compiles to a single-mode Kraus
//!   channel that is reused for every step of the chain.
//! - [`channel::UpdateRule`]: the small-`chi` expansion of one unit, applied
//!   element-wise to the density matrix.
//! - [`master`]: the continuous-time equation built from the loss function
//!   `K1(w) = chi^2 (1 + exp(i w tau))`.
//!
//! Times are in units of `1/omega_a`; one Mach-Zehnder unit spans `tau`.

pub mod channel;
pub mod error;
pub mod evolution;
pub mod fock;
mod linalg;
pub mod master;
pub mod metrics;
pub mod states;

pub use error::{Error, Result};
pub use evolution::{Propagator, Snapshot, Trajectory};
pub use fock::{CavityParams, DensityMatrix, HilbertSpec, MaxNorm, StateVector, C64};
