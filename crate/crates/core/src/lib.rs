//! Subpixel target detection in elliptically-contoured backgrounds, plus the
//! matched-pair Monte Carlo machinery to measure it.
//!
//! The crate has four layers:
//!
//! * [`stats`] — the multivariate-t background model: SPD covariance
//!   handling, Mahalanobis distances, log densities, and a reproducible
//!   sampler with splittable streams;
//! * [`detectors`] — per-pixel scorers for the additive, replacement, and
//!   modified replacement target models, each in both elliptically-contoured
//!   and Gaussian form, together with the clairvoyant bound and a brute-force
//!   GLRT oracle;
//! * [`sim`] — scenario descriptions and the matched-pair trial/sweep runner;
//! * [`eval`] — empirical ROC curves, AUC, and fixed-false-alarm summaries.
//!
//! With the default `parallel` feature, pixel batches and sweep jobs run on
//! rayon; disabling it yields a dependency-light sequential build with
//! identical output.

pub mod detectors;
pub mod error;
pub mod eval;
pub mod sim;
pub mod stats;

pub use detectors::{Detector, GlrtEstimate, PixelQuadratic, Scorer, TargetContext};
pub use error::{Error, Result};
pub use eval::RocCurve;
pub use sim::{Scenario, ScorePairs, SweepPoint};
pub use stats::{make_background, BackgroundModel, SampleBatch};
