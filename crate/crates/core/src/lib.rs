//! GLRT-optimal joint channel estimation and data detection for massive
//! MIMO uplink blocks.
//!
//! A block `X = H S + W` is received over `N` antennas from `M` users during
//! `T` symbol slots, with the first `M` slots carrying orthogonal pilots. The
//! channel `H` is unknown. Eliminating it turns detection into a discrete
//! subspace-fitting problem over the data symbols, which [`detector`] solves
//! exactly with a depth-first branch-and-bound search. [`oracle`] provides
//! the exhaustive reference, [`baselines`] the pilot-aided MMSE receivers,
//! and [`sim`] the Monte Carlo harness behind the `mimo-glrt` binary.

pub mod baselines;
pub mod detector;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod sim;

pub use detector::{glrt_detect, reduce, DetectionResult, RadiusPolicy, ReducedProblem};
pub use linalg::{ComplexMatrix, LinalgError};
pub use model::{Constellation, ConstellationKind, TransmissionBlock};
pub use num_complex::Complex64;

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("search space of {size} hypotheses exceeds the cap of {cap}")]
    SearchSpaceTooLarge { size: u128, cap: u128 },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
