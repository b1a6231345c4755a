//! Closed-form optics of a Mach-Zehnder interferometer whose output
//! beamsplitter has a voltage-controlled reflectivity.
//!
//! The variable beamsplitter (VBS) is an electro-optic modulator between two
//! polarizing elements; its effective reflectivity is
//!
//! ```text
//! R = sin^2(2*beta) * sin^2( (pi/2) * V_eom / V_halfwave )
//! ```
//!
//! With a 50/50 input splitter, the open interferometer shows fringes of
//! visibility `V = xi * 2*sqrt(R*(1-R))` as the arm dephasing varies, while
//! the which-path information left in the detector choice is quantified by
//! the distinguishability `D = 1 - 2R`. The two obey `V^2 + D^2 <= 1`, with
//! equality for an ideal interferometer (`xi = 1`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{real, Real};

/// Interferometer settings that fully determine the detection statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferometerConfig<R> {
    /// EOM orientation relative to the splitter axes, degrees in [0, 45].
    pub eom_angle_deg: R,
    /// EOM half-wave voltage, volts (> 0).
    pub half_wave_voltage: R,
    /// Voltage applied to the EOM, volts (>= 0).
    pub eom_voltage: R,
    /// Dephasing between the two arms, radians.
    pub phase: R,
    /// Multiplicative fringe-contrast factor in [0, 1]; 1 is an ideal
    /// interferometer, lower values absorb mode-overlap and polarization
    /// imperfections.
    pub contrast: R,
}

impl<R: Real> InterferometerConfig<R> {
    pub fn new(
        eom_angle_deg: R,
        half_wave_voltage: R,
        eom_voltage: R,
        phase: R,
        contrast: R,
    ) -> Result<Self> {
        let cfg = Self {
            eom_angle_deg,
            half_wave_voltage,
            eom_voltage,
            phase,
            contrast,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eom_angle_deg >= R::zero() && self.eom_angle_deg <= real(45.0)) {
            return Err(Error::Config(format!(
                "eom_angle_deg must lie in [0, 45] degrees (got {})",
                self.eom_angle_deg
            )));
        }
        let voltage_ok = self.half_wave_voltage.is_finite() && self.half_wave_voltage > R::zero();
        if !voltage_ok {
            return Err(Error::Config(format!(
                "half_wave_voltage must be > 0 V (got {})",
                self.half_wave_voltage
            )));
        }
        let applied_ok = self.eom_voltage.is_finite() && self.eom_voltage >= R::zero();
        if !applied_ok {
            return Err(Error::Config(format!(
                "eom_voltage must be >= 0 V (got {})",
                self.eom_voltage
            )));
        }
        if !self.phase.is_finite() {
            return Err(Error::Config(format!(
                "phase must be finite (got {})",
                self.phase
            )));
        }
        if !(self.contrast >= R::zero() && self.contrast <= R::one()) {
            return Err(Error::Config(format!(
                "contrast must lie in [0, 1] (got {})",
                self.contrast
            )));
        }
        Ok(())
    }

    pub fn with_phase(mut self, phase: R) -> Self {
        self.phase = phase;
        self
    }

    pub fn with_eom_voltage(mut self, eom_voltage: R) -> Self {
        self.eom_voltage = eom_voltage;
        self
    }
}

/// Probabilities of a single photon leaving toward each output detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionProbabilities<R> {
    /// Probability the photon exits toward detector P1.
    pub p1: R,
    /// Probability the photon exits toward detector P2.
    pub p2: R,
}

/// Joint probabilities p(detector, path) of the incoherent which-path
/// accounting channel. Rows are detectors, columns are paths; each path
/// carries half the input flux.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointPathDetectorTable<R> {
    pub p1_path1: R,
    pub p2_path1: R,
    pub p1_path2: R,
    pub p2_path2: R,
}

impl<R: Real> JointPathDetectorTable<R> {
    /// Which-path information carried by path 1: |p(P1,1) - p(P2,1)|.
    pub fn path1_distinguishability(&self) -> R {
        (self.p1_path1 - self.p2_path1).abs()
    }

    /// Which-path information carried by path 2: |p(P1,2) - p(P2,2)|.
    pub fn path2_distinguishability(&self) -> R {
        (self.p1_path2 - self.p2_path2).abs()
    }

    /// Total distinguishability D = D1 + D2.
    pub fn distinguishability(&self) -> R {
        self.path1_distinguishability() + self.path2_distinguishability()
    }
}

/// VBS reflectivity for the applied EOM voltage:
/// `R = sin^2(2*beta) * sin^2((pi/2) * V / V_halfwave)`.
pub fn reflectivity_from_voltage<R: Real>(cfg: &InterferometerConfig<R>) -> Result<R> {
    cfg.validate()?;
    let two_beta = (cfg.eom_angle_deg + cfg.eom_angle_deg).to_radians();
    let geometric = two_beta.sin().powi(2);
    let half_pi = R::PI() * real(0.5);
    let drive = (half_pi * cfg.eom_voltage / cfg.half_wave_voltage)
        .sin()
        .powi(2);
    Ok(geometric * drive)
}

/// EOM voltage in [0, V_halfwave] that produces the requested reflectivity,
/// the inverse of [`reflectivity_from_voltage`] on its rising branch.
pub fn voltage_for_reflectivity<R: Real>(
    eom_angle_deg: R,
    half_wave_voltage: R,
    reflectivity: R,
) -> Result<R> {
    if !(reflectivity >= R::zero() && reflectivity <= R::one()) {
        return Err(Error::OutOfRange(format!(
            "reflectivity must lie in [0, 1] (got {reflectivity})"
        )));
    }
    let two_beta = (eom_angle_deg + eom_angle_deg).to_radians();
    let ceiling = two_beta.sin().powi(2);
    if reflectivity > ceiling {
        return Err(Error::OutOfRange(format!(
            "reflectivity {reflectivity} exceeds sin^2(2*beta) = {ceiling} for this EOM angle"
        )));
    }
    let half_pi = R::PI() * real(0.5);
    Ok((reflectivity / ceiling).sqrt().asin() * half_wave_voltage / half_pi)
}

/// Predicted fringe visibility `V = xi * 2*sqrt(R*(1-R))`.
pub fn theoretical_visibility<R: Real>(reflectivity: R, contrast: R) -> Result<R> {
    if !(reflectivity >= R::zero() && reflectivity <= R::one()) {
        return Err(Error::OutOfRange(format!(
            "reflectivity must lie in [0, 1] (got {reflectivity})"
        )));
    }
    if !(contrast >= R::zero() && contrast <= R::one()) {
        return Err(Error::OutOfRange(format!(
            "contrast must lie in [0, 1] (got {contrast})"
        )));
    }
    Ok(contrast * real::<R>(2.0) * (reflectivity * (R::one() - reflectivity)).sqrt())
}

/// Which-path distinguishability `D = 1 - 2R` for `R` in [0, 0.5].
///
/// The experiment's VBS only reaches R = 0.5; larger reflectivities have no
/// meaning under this convention and are rejected.
pub fn theoretical_distinguishability<R: Real>(reflectivity: R) -> Result<R> {
    if !(reflectivity >= R::zero() && reflectivity <= real(0.5)) {
        return Err(Error::OutOfRange(format!(
            "distinguishability is defined for reflectivity in [0, 0.5] (got {reflectivity})"
        )));
    }
    Ok(R::one() - real::<R>(2.0) * reflectivity)
}

/// Detection probabilities of the open interferometer,
/// `p1 = (1 + V cos(phase)) / 2`, with the phase origin chosen so that
/// `phase = 0` maximizes P1 counts.
pub fn detection_probabilities<R: Real>(
    cfg: &InterferometerConfig<R>,
) -> Result<DetectionProbabilities<R>> {
    let reflectivity = reflectivity_from_voltage(cfg)?;
    let visibility = theoretical_visibility(reflectivity, cfg.contrast)?;
    let half = real::<R>(0.5);
    let p1 = half * (R::one() + visibility * cfg.phase.cos());
    Ok(DetectionProbabilities {
        p1,
        p2: R::one() - p1,
    })
}

/// Incoherent which-path accounting table for a single photon:
/// `p(P1, path1) = p(P2, path2) = (1-R)/2` and `p(P2, path1) = p(P1, path2) = R/2`.
///
/// The table deliberately omits the interference cross-term; per-event path
/// labels are physically meaningful only when one path is blocked or R = 0.
/// Open-interferometer sampling must use [`detection_probabilities`] instead.
pub fn joint_path_detector_table<R: Real>(reflectivity: R) -> Result<JointPathDetectorTable<R>> {
    if !(reflectivity >= R::zero() && reflectivity <= real(0.5)) {
        return Err(Error::OutOfRange(format!(
            "which-path accounting is defined for reflectivity in [0, 0.5] (got {reflectivity})"
        )));
    }
    let half = real::<R>(0.5);
    let aligned = half * (R::one() - reflectivity);
    let crossed = half * reflectivity;
    Ok(JointPathDetectorTable {
        p1_path1: aligned,
        p2_path1: crossed,
        p1_path2: crossed,
        p2_path2: aligned,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reference_config(eom_voltage: f64) -> InterferometerConfig<f64> {
        InterferometerConfig::new(24.0, 217.0, eom_voltage, 0.0, 1.0).unwrap()
    }

    #[test]
    fn reflectivity_is_zero_without_voltage() {
        assert_eq!(
            reflectivity_from_voltage(&reference_config(0.0)).unwrap(),
            0.0
        );
    }

    #[test]
    fn reflectivity_matches_published_calibration() {
        // Fig.-3 operating points: ~0.43 at 150 V and ~0.05 at 40 V.
        let r150 = reflectivity_from_voltage(&reference_config(150.0)).unwrap();
        let r40 = reflectivity_from_voltage(&reference_config(40.0)).unwrap();
        assert!((r150 - 0.43).abs() < 0.01, "r150 = {r150}");
        assert!((r40 - 0.05).abs() < 0.01, "r40 = {r40}");
        // Frozen values of the formula itself.
        assert!((r150 - 0.432232927127642).abs() < 1e-12);
        assert!((r40 - 0.045021121628255).abs() < 1e-12);
    }

    #[test]
    fn reflectivity_saturates_at_one() {
        let cfg = InterferometerConfig::<f64>::new(45.0, 217.0, 217.0, 0.0, 1.0).unwrap();
        assert!((reflectivity_from_voltage(&cfg).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reflectivity_rejects_invalid_configuration() {
        let mut cfg = reference_config(150.0);
        cfg.eom_voltage = -5.0;
        assert!(matches!(
            reflectivity_from_voltage(&cfg),
            Err(Error::Config(_))
        ));
        let mut cfg = reference_config(150.0);
        cfg.half_wave_voltage = 0.0;
        assert!(matches!(
            reflectivity_from_voltage(&cfg),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn voltage_for_reflectivity_inverts_the_forward_map() {
        for r in [0.0f64, 0.05, 0.1, 0.25, 0.43, 0.5, 0.55] {
            let v = voltage_for_reflectivity(24.0f64, 217.0, r).unwrap();
            let cfg = reference_config(0.0).with_eom_voltage(v);
            let round = reflectivity_from_voltage(&cfg).unwrap();
            assert!((round - r).abs() < 1e-12, "r = {r}, round = {round}");
        }
        assert!(voltage_for_reflectivity(24.0f64, 217.0, 0.6).is_err());
    }

    #[test]
    fn visibility_trivial_cases() {
        assert_eq!(theoretical_visibility(0.0f64, 1.0).unwrap(), 0.0);
        assert!((theoretical_visibility(0.5f64, 1.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn visibility_matches_oracle_values() {
        // 2*sqrt(R*(1-R)) evaluated with a high-precision calculator.
        assert!((theoretical_visibility(0.43f64, 1.0).unwrap() - 0.990151503558925).abs() < 1e-12);
        assert!((theoretical_visibility(0.05f64, 1.0).unwrap() - 0.435889894354067).abs() < 1e-12);
        assert!(theoretical_visibility(1.2f64, 1.0).is_err());
        assert!(theoretical_visibility(0.43f64, 1.2).is_err());
    }

    #[test]
    fn distinguishability_examples() {
        assert_eq!(theoretical_distinguishability(0.0f64).unwrap(), 1.0);
        assert_eq!(theoretical_distinguishability(0.5f64).unwrap(), 0.0);
        assert!((theoretical_distinguishability(0.43f64).unwrap() - 0.14).abs() < 1e-12);
        assert!(matches!(
            theoretical_distinguishability(0.51f64),
            Err(Error::OutOfRange(_))
        ));
    }

    #[test]
    fn detection_probabilities_examples() {
        // No recombination: flat marginals for any phase.
        for phase in [0.0, 0.7, 3.1] {
            let cfg = reference_config(0.0).with_phase(phase);
            let p = detection_probabilities(&cfg).unwrap();
            assert_eq!((p.p1, p.p2), (0.5, 0.5));
        }
        // Balanced splitter, zero dephasing: everything on P1.
        let v_half = voltage_for_reflectivity(45.0f64, 217.0, 0.5).unwrap();
        let cfg = InterferometerConfig::new(45.0, 217.0, v_half, 0.0, 1.0).unwrap();
        let p = detection_probabilities(&cfg).unwrap();
        assert!((p.p1 - 1.0).abs() < 1e-12 && p.p2.abs() < 1e-12);
        // cos(pi/2) kills the fringe term.
        let v43 = voltage_for_reflectivity(24.0f64, 217.0, 0.43).unwrap();
        let cfg = reference_config(v43).with_phase(std::f64::consts::FRAC_PI_2);
        let p = detection_probabilities(&cfg).unwrap();
        assert!((p.p1 - 0.5).abs() < 1e-12);
        // R = 0.05 at zero dephasing: (1 +/- 0.4359)/2.
        let v05 = voltage_for_reflectivity(24.0f64, 217.0, 0.05).unwrap();
        let p = detection_probabilities(&reference_config(v05)).unwrap();
        assert!((p.p1 - 0.717944947177034).abs() < 1e-12);
        assert!((p.p2 - 0.282055052822966).abs() < 1e-12);
    }

    #[test]
    fn joint_table_examples() {
        let t = joint_path_detector_table(0.0f64).unwrap();
        assert_eq!((t.p1_path1, t.p2_path1), (0.5, 0.0));
        assert_eq!(t.path1_distinguishability(), 0.5);
        assert_eq!(t.distinguishability(), 1.0);

        let t = joint_path_detector_table(0.5f64).unwrap();
        assert_eq!(
            (t.p1_path1, t.p2_path1, t.p1_path2, t.p2_path2),
            (0.25, 0.25, 0.25, 0.25)
        );
        assert_eq!(t.distinguishability(), 0.0);

        let t = joint_path_detector_table(0.43f64).unwrap();
        assert!((t.p1_path1 - 0.285).abs() < 1e-15);
        assert!((t.p2_path1 - 0.215).abs() < 1e-15);
        assert!((t.distinguishability() - 0.14).abs() < 1e-12);

        assert!(joint_path_detector_table(0.6f64).is_err());
    }

    #[test]
    fn joint_table_matches_distinguishability_formula() {
        for r in [0.0f64, 0.05, 0.17, 0.3, 0.43, 0.5] {
            let t = joint_path_detector_table(r).unwrap();
            let d = theoretical_distinguishability(r).unwrap();
            assert!((t.distinguishability() - d).abs() < 1e-12);
        }
    }

    #[test]
    fn formulas_agree_between_f32_and_f64() {
        let cfg64 = reference_config(150.0);
        let cfg32 = InterferometerConfig::<f32>::new(24.0, 217.0, 150.0, 0.0, 1.0).unwrap();
        let r64 = reflectivity_from_voltage(&cfg64).unwrap();
        let r32 = reflectivity_from_voltage(&cfg32).unwrap();
        assert!((r64 - f64::from(r32)).abs() < 1e-5);
        let v64 = theoretical_visibility(r64, 1.0f64).unwrap();
        let v32 = theoretical_visibility(r32, 1.0f32).unwrap();
        assert!((v64 - f64::from(v32)).abs() < 1e-5);
    }

    proptest! {
        /// Ideal interferometer saturates the duality relation exactly.
        #[test]
        fn duality_saturates_for_ideal_contrast(r in 0.0f64..=0.5) {
            let v = theoretical_visibility(r, 1.0).unwrap();
            let d = theoretical_distinguishability(r).unwrap();
            prop_assert!((v * v + d * d - 1.0).abs() <= 1e-12);
        }

        /// The duality bound holds for every reflectivity and contrast.
        #[test]
        fn duality_bound_holds(r in 0.0f64..=0.5, contrast in 0.0f64..=1.0) {
            let v = theoretical_visibility(r, contrast).unwrap();
            let d = theoretical_distinguishability(r).unwrap();
            prop_assert!(v * v + d * d <= 1.0 + 1e-12);
        }

        /// Reflectivity rises monotonically with voltage on [0, V_halfwave]
        /// and never exceeds sin^2(2*beta).
        #[test]
        fn reflectivity_monotone_in_voltage(
            beta in 1.0f64..=45.0,
            frac_lo in 0.0f64..=1.0,
            frac_hi in 0.0f64..=1.0,
        ) {
            let v_pi = 217.0;
            let (lo, hi) = if frac_lo <= frac_hi { (frac_lo, frac_hi) } else { (frac_hi, frac_lo) };
            let cfg_lo = InterferometerConfig::new(beta, v_pi, lo * v_pi, 0.0, 1.0).unwrap();
            let cfg_hi = InterferometerConfig::new(beta, v_pi, hi * v_pi, 0.0, 1.0).unwrap();
            let r_lo = reflectivity_from_voltage(&cfg_lo).unwrap();
            let r_hi = reflectivity_from_voltage(&cfg_hi).unwrap();
            prop_assert!(r_lo <= r_hi + 1e-15);
            let ceiling = (2.0 * beta.to_radians()).sin().powi(2);
            prop_assert!(r_hi <= ceiling + 1e-15);
        }

        /// Output probabilities are a distribution and average to 1/2 over a
        /// full fringe period; their swing reproduces the visibility.
        #[test]
        fn detection_probabilities_are_consistent(
            voltage in 0.0f64..=217.0,
            contrast in 0.0f64..=1.0,
            phase in -10.0f64..=10.0,
        ) {
            let cfg = InterferometerConfig::new(24.0, 217.0, voltage, phase, contrast).unwrap();
            let p = detection_probabilities(&cfg).unwrap();
            prop_assert!((p.p1 + p.p2 - 1.0).abs() <= 1e-12);
            prop_assert!((0.0..=1.0).contains(&p.p1));

            // Trapezoid rule over one period is exact for the cosine fringe.
            let n = 256;
            let mean = (0..n)
                .map(|k| {
                    let phi = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                    detection_probabilities(&cfg.with_phase(phi)).unwrap().p1
                })
                .sum::<f64>()
                / n as f64;
            prop_assert!((mean - 0.5).abs() <= 1e-9);

            // Fringe extremes sit exactly at phase 0 and pi.
            let p_max = detection_probabilities(&cfg.with_phase(0.0)).unwrap().p1;
            let p_min = detection_probabilities(&cfg.with_phase(std::f64::consts::PI)).unwrap().p1;
            let r = reflectivity_from_voltage(&cfg).unwrap();
            let v = theoretical_visibility(r, contrast).unwrap();
            if p_max + p_min > 0.0 {
                prop_assert!(((p_max - p_min) / (p_max + p_min) - v).abs() <= 1e-12);
            }
        }

        /// Each path carries half the flux in the accounting table.
        #[test]
        fn joint_table_marginals_are_balanced(r in 0.0f64..=0.5) {
            let t = joint_path_detector_table(r).unwrap();
            prop_assert!((t.p1_path1 + t.p2_path1 - 0.5).abs() <= 1e-15);
            prop_assert!((t.p1_path2 + t.p2_path2 - 0.5).abs() <= 1e-15);
            let total = t.p1_path1 + t.p2_path1 + t.p1_path2 + t.p2_path2;
            prop_assert!((total - 1.0).abs() <= 1e-15);
        }
    }
}
