//! Reconstruction of finite-dimensional pure states from the probability
//! distributions of two measurements.
//!
//! Two strategies are provided:
//!
//! * [`c2`]: measure in the computational basis and in the triangular basis
//!   built by [`bases::OrthonormalBasis::c2`]. The phases are solved one site
//!   at a time, which leaves at most `2^(j-1)` candidates for a state with `j`
//!   nonzero amplitudes. The recursion only breaks on a measure-zero set of
//!   states, detected by [`c2::in_measure_zero_set`].
//! * [`povm`]: measure in the computational basis, then use a POVM chosen from
//!   that result to isolate two sites at a time and read their phase
//!   difference off two Fourier probabilities. The output is a single state.
//!   In even dimensions, two-site supports `{k, k + d/2}` fall back to
//!   σx/σy measurements.
//!
//! The crate is `no_std` and only needs `alloc`. Randomness is always
//! supplied by the caller.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod bases;
pub mod c2;
pub mod error;
pub mod linalg;
pub mod measurement;
pub mod oracle;
pub mod povm;
pub mod state;

pub use num_complex::Complex64;

pub use bases::{BasisKind, CoeffSequence, OrthonormalBasis};
pub use error::{Error, Result};
pub use measurement::{DistributionSource, PovmElement, ProbabilityDistribution};
pub use state::{PureState, Support};

/// Default cutoff below which an amplitude counts as zero.
pub const DEFAULT_SUPPORT_TOL: f64 = 1e-9;

/// Default tolerance used by the reconstruction pipelines.
pub const DEFAULT_TOL: f64 = 1e-8;
