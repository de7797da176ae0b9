//! Quickest change detection in sensor networks whose samples arrive
//! anonymized: each time step delivers the multiset of observations from
//! `n` sensors split into `K` groups, without saying which sensor produced
//! which sample.
//!
//! * [`model`]: distributions, network configuration, label schedules, data.
//! * [`mixture`]: per-batch likelihood ratios under unknown labels.
//! * [`exponent`]: the KL exponent, `h`, threshold calibration, exact KL.
//! * [`detectors`]: the CuSum variants, the efficient test, the one-shot test.
//! * [`montecarlo`]: delay and run-length estimation, sweeps, timing.

pub mod detectors;
pub mod error;
pub mod exponent;
pub mod mixture;
pub mod model;
pub mod montecarlo;
pub mod numeric;
pub mod rng;

pub use detectors::{DetectorKind, SequentialDetector};
pub use error::{Error, Result};
pub use model::{NetworkModel, ObservationBatch, Regime};
