//! Simulation of continuous-variable quantum error correction with a
//! three-mode repetition code.
//!
//! States are finite mixtures of multimode Gaussian states. The pipeline is
//! encode (two squeezed ancillas and a tritter), independent stochastic
//! displacement channels, decode, homodyne syndrome extraction on the
//! ancillas, classification and feedforward recovery of the signal mode.
//!
//! Quadratures use vacuum-normalized units: the vacuum has variance 1/4 in
//! each of x and p. Phase-space vectors are interleaved as
//! `(x1, p1, x2, p2, ...)`.

pub mod analysis;
pub mod channels;
pub mod code;
mod error;
pub mod mixture;
pub mod phase_space;
pub mod rng;

pub use channels::{BranchRecord, ErrorBranch, ErrorPattern, StochasticChannel};
pub use code::{CodeParams, Policy, ProtocolRun, Sign, SignPair, SyndromeClass};
pub use error::{Error, Result};
pub use mixture::{Component, GaussianMixture};
pub use phase_space::{GaussianState, ScalarGaussian, SymplecticTransform, VACUUM_VARIANCE};
