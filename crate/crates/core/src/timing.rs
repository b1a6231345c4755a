//! Lab-frame spacetime bookkeeping for the delayed-choice condition.
//!
//! The beamsplitter choice must be relativistically space-like separated from
//! the photon entering the interferometer. Positions live on a single lab
//! axis; only |dx| and |dt| matter for the interval classification.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{real, Real};

/// Speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Half-width of the light-like band when classifying the choice/entry pair;
/// sub-ns is conservative for electro-optic switching.
pub const DEFAULT_LIGHTLIKE_TOLERANCE_S: f64 = 0.5e-9;

/// An event pinned to lab time and a 1-D lab position.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacetimeEvent<R> {
    /// Lab time, seconds.
    pub time_s: R,
    /// Position along the lab axis, meters.
    pub position_m: R,
    pub label: String,
}

impl<R: Real> SpacetimeEvent<R> {
    pub fn new(time_s: R, position_m: R, label: impl Into<String>) -> Self {
        Self {
            time_s,
            position_m,
            label: label.into(),
        }
    }
}

/// Relativistic character of the separation between two events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalClass {
    Spacelike,
    Timelike,
    Lightlike,
}

impl std::fmt::Display for IntervalClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            IntervalClass::Spacelike => write!(f, "spacelike"),
            IntervalClass::Timelike => write!(f, "timelike"),
            IntervalClass::Lightlike => write!(f, "lightlike"),
        }
    }
}

/// Classify the interval between two events.
///
/// With `dt = |t_b - t_a|` and `dx = |x_b - x_a|`: space-like iff
/// `dx > c*(dt + tolerance)`, time-like iff `dx < c*(dt - tolerance)`,
/// light-like otherwise. `tolerance` widens the light-like band to absorb
/// timing jitter.
pub fn classify_interval<R: Real>(
    a: &SpacetimeEvent<R>,
    b: &SpacetimeEvent<R>,
    tolerance_s: R,
) -> IntervalClass {
    let c = real::<R>(SPEED_OF_LIGHT);
    let dt = (b.time_s - a.time_s).abs();
    let dx = (b.position_m - a.position_m).abs();
    if dx > c * (dt + tolerance_s) {
        IntervalClass::Spacelike
    } else if dx < c * (dt - tolerance_s) {
        IntervalClass::Timelike
    } else {
        IntervalClass::Lightlike
    }
}

/// Propagation geometry and clocking of the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryConfig<R> {
    /// Free-space propagation length inside the interferometer, meters.
    pub path_length_m: R,
    /// Photon time of flight over that length, seconds.
    pub flight_time_s: R,
    /// Clock (trigger) period, seconds.
    pub clock_period_s: R,
    /// Position of the random-choice electronics along the lab axis, meters.
    pub choice_position_m: R,
    /// Delay of the choice event relative to the photon entry, seconds
    /// (0 = simultaneous in the lab frame).
    pub choice_delay_s: R,
}

impl<R: Real> Default for GeometryConfig<R> {
    fn default() -> Self {
        Self {
            path_length_m: real(48.0),
            flight_time_s: real(160e-9),
            clock_period_s: real(238e-9),
            choice_position_m: real(48.0),
            choice_delay_s: R::zero(),
        }
    }
}

impl<R: Real> GeometryConfig<R> {
    /// Checks positivity and that the quoted flight time matches
    /// `path_length / c` within 5%.
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("path_length_m", self.path_length_m),
            ("flight_time_s", self.flight_time_s),
            ("clock_period_s", self.clock_period_s),
        ] {
            if !(value > R::zero() && value.is_finite()) {
                return Err(Error::Config(format!(
                    "geometry {name} must be > 0 (got {value})"
                )));
            }
        }
        for (name, value) in [
            ("choice_position_m", self.choice_position_m),
            ("choice_delay_s", self.choice_delay_s),
        ] {
            if !(value >= R::zero() && value.is_finite()) {
                return Err(Error::Config(format!(
                    "geometry {name} must be >= 0 (got {value})"
                )));
            }
        }
        let implied = self.path_length_m / real(SPEED_OF_LIGHT);
        let deviation = (self.flight_time_s - implied).abs() / self.flight_time_s;
        if deviation > real(0.05) {
            return Err(Error::InconsistentGeometry(format!(
                "flight_time_s = {} deviates from path_length/c = {} by more than 5%",
                self.flight_time_s, implied
            )));
        }
        Ok(())
    }

    /// Photon entering the interferometer at the lab origin.
    pub fn entry_event(&self) -> SpacetimeEvent<R> {
        SpacetimeEvent::new(R::zero(), R::zero(), "photon-entry")
    }

    /// Random-choice event at the configured position and delay.
    pub fn choice_event(&self) -> SpacetimeEvent<R> {
        SpacetimeEvent::new(self.choice_delay_s, self.choice_position_m, "qrng-choice")
    }
}

/// Outcome of the delayed-choice geometry check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeometryReport<R> {
    pub class: IntervalClass,
    /// `dx/c - dt` between choice and entry, nanoseconds; positive margins
    /// mean the choice is causally isolated from the entry.
    pub margin_ns: R,
}

impl<R: Real> GeometryReport<R> {
    pub fn is_spacelike(&self) -> bool {
        self.class == IntervalClass::Spacelike
    }
}

/// Classifies the (photon entry, random choice) pair and reports the
/// causal margin. Fails on internally inconsistent geometry; a non-spacelike
/// classification is reported, not an error.
pub fn verify_delayed_choice_geometry<R: Real>(
    geometry: &GeometryConfig<R>,
) -> Result<GeometryReport<R>> {
    geometry.validate()?;
    let entry = geometry.entry_event();
    let choice = geometry.choice_event();
    let class = classify_interval(&entry, &choice, real(DEFAULT_LIGHTLIKE_TOLERANCE_S));
    let c = real::<R>(SPEED_OF_LIGHT);
    let dt = (choice.time_s - entry.time_s).abs();
    let dx = (choice.position_m - entry.position_m).abs();
    let margin_ns = (dx / c - dt) * real(1e9);
    Ok(GeometryReport { class, margin_ns })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn published_numbers_are_mutually_consistent() {
        // 48 m / c = 160.11 ns, within 1 ns of the quoted 160 ns.
        let implied = 48.0 / SPEED_OF_LIGHT;
        assert!((implied - 160e-9).abs() < 1e-9);
        GeometryConfig::<f64>::default().validate().unwrap();
    }

    #[test]
    fn classification_examples() {
        let origin = SpacetimeEvent::new(0.0, 0.0, "a");
        // Simultaneous events 48 m apart are space-like separated.
        let far = SpacetimeEvent::new(0.0, 48.0, "b");
        assert_eq!(
            classify_interval(&origin, &far, 0.0),
            IntervalClass::Spacelike
        );
        // Co-located events one clock period apart are time-like.
        let later = SpacetimeEvent::new(238e-9, 0.0, "b");
        assert_eq!(
            classify_interval(&origin, &later, 0.0),
            IntervalClass::Timelike
        );
        // 48 m in 160.1 ns sits inside a 0.5 ns light-like band (48/c = 160.11 ns).
        let grazing = SpacetimeEvent::new(160.1e-9, 48.0, "b");
        assert_eq!(
            classify_interval(&origin, &grazing, 0.5e-9),
            IntervalClass::Lightlike
        );
    }

    #[test]
    fn default_geometry_is_spacelike_with_160ns_margin() {
        let report = verify_delayed_choice_geometry(&GeometryConfig::<f64>::default()).unwrap();
        assert!(report.is_spacelike());
        assert!((report.margin_ns - 160.110765695113).abs() < 1e-6);
        assert!((report.margin_ns - 160.0).abs() < 1.0);
    }

    #[test]
    fn delayed_choice_turns_timelike() {
        let geometry = GeometryConfig::<f64> {
            choice_delay_s: 200e-9,
            ..GeometryConfig::default()
        };
        let report = verify_delayed_choice_geometry(&geometry).unwrap();
        assert_eq!(report.class, IntervalClass::Timelike);
        assert!(!report.is_spacelike());
    }

    #[test]
    fn colocated_choice_is_degenerate() {
        let geometry = GeometryConfig::<f64> {
            choice_position_m: 0.0,
            ..GeometryConfig::default()
        };
        let report = verify_delayed_choice_geometry(&geometry).unwrap();
        assert_ne!(report.class, IntervalClass::Spacelike);
    }

    #[test]
    fn inconsistent_flight_time_is_rejected() {
        let geometry = GeometryConfig::<f64> {
            flight_time_s: 200e-9,
            ..GeometryConfig::default()
        };
        assert!(matches!(
            verify_delayed_choice_geometry(&geometry),
            Err(Error::InconsistentGeometry(_))
        ));
    }

    proptest! {
        /// The classification ignores the order of its arguments.
        #[test]
        fn classification_is_symmetric(
            t1 in -1e-6f64..1e-6, x1 in -100.0f64..100.0,
            t2 in -1e-6f64..1e-6, x2 in -100.0f64..100.0,
            tol in 0.0f64..1e-9,
        ) {
            let a = SpacetimeEvent::new(t1, x1, "a");
            let b = SpacetimeEvent::new(t2, x2, "b");
            prop_assert_eq!(classify_interval(&a, &b, tol), classify_interval(&b, &a, tol));
        }

        /// Scaling dt, dx, and the tolerance together preserves the class.
        #[test]
        fn classification_is_scale_invariant(
            t in -1e-6f64..1e-6, x in -100.0f64..100.0,
            tol in 0.0f64..1e-9,
            scale in 0.01f64..100.0,
        ) {
            let origin = SpacetimeEvent::new(0.0, 0.0, "a");
            let b = SpacetimeEvent::new(t, x, "b");
            let b_scaled = SpacetimeEvent::new(t * scale, x * scale, "b");
            prop_assert_eq!(
                classify_interval(&origin, &b, tol),
                classify_interval(&origin, &b_scaled, tol * scale)
            );
        }
    }
}
