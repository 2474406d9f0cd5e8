//! Learning discounted LQR controllers from one batch of noisy data.
//!
//! * [`sys`]: plants, discretization, simulation and the quarter-car benchmark model.
//! * [`data`]: data collection, rank checks, least squares and SNR.
//! * [`oracle`]: model-based ground truth through the discounted Riccati equation.
//! * [`synth`]: LMI syntheses (model-based, certainty equivalence, robust direct).
//! * [`mss`]: mean-square stability certificates and checks.
//! * [`gap`]: suboptimality-gap bound.
//! * [`bench`]: Monte Carlo harness.

pub mod bench;
pub mod data;
pub mod error;
pub mod gap;
pub mod io;
pub mod linalg;
pub mod mss;
pub mod oracle;
pub mod rng;
pub mod synth;
pub mod sys;

pub use error::{Error, Result};
