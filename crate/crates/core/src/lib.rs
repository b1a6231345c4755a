//! Desk-scale Monte Carlo model of a delayed-choice complementarity test
//! with single photons.
//!
//! A clock-triggered source sends photons into a Mach-Zehnder interferometer
//! whose output beamsplitter is randomly inserted (reflectivity `R`) or
//! removed for every trigger, with the choice space-like separated from the
//! photon's entry. The crate generates per-trigger event logs from this model
//! and recovers fringe visibility `V`, which-path distinguishability `D`,
//! the anticorrelation parameter `alpha`, and the duality statistic
//! `V^2 + D^2 <= 1`.
//!
//! Modules:
//! - [`optics`]: closed-form interferometer physics (generic over the scalar).
//! - [`source`]: 0/1/2-photon emission model and `alpha`.
//! - [`qrng`]: shot-noise comparator choice bits with statistical self-tests.
//! - [`timing`]: spacetime interval classification of the choice geometry.
//! - [`simulator`]: the per-trigger run engine.
//! - [`event_log`]: immutable trigger records and their text format.
//! - [`analysis`]: sorting, background subtraction, fits, and estimators.
//!
//! The analytic formulas are generic over [`scalar::Real`] (`f32` or `f64`);
//! the aliases below pin them to `f64`, the width used by the engine and the
//! on-disk formats.

pub mod analysis;
pub mod error;
pub mod event_log;
pub mod optics;
pub mod qrng;
pub mod scalar;
pub mod simulator;
pub mod source;
pub mod timing;

pub use error::{Error, Result};
pub use event_log::{BlockedPath, EventLog, LogHeader, TriggerRecord};
pub use simulator::{DetectorModel, PhaseSegment, RunConfig};

/// Interferometer settings at the default `f64` precision.
pub type InterferometerConfig = optics::InterferometerConfig<f64>;
pub type DetectionProbabilities = optics::DetectionProbabilities<f64>;
pub type JointPathDetectorTable = optics::JointPathDetectorTable<f64>;
/// Per-trigger photon-number distribution at the default `f64` precision.
pub type EmissionModel = source::EmissionModel<f64>;
pub type GeometryConfig = timing::GeometryConfig<f64>;
pub type SpacetimeEvent = timing::SpacetimeEvent<f64>;
pub type GeometryReport = timing::GeometryReport<f64>;
