//! Distinguishability, anticorrelation, and the duality statistic.

use serde::Serialize;

use crate::error::{Error, Result};

use super::{CountSummary, ValueWithError};

/// Normalized count imbalance |n1 - n2| / (n1 + n2) of one blocked run.
fn blocked_ratio(summary: &CountSummary) -> Result<ValueWithError> {
    let total = summary.total_clicks();
    if total <= 0.0 {
        return Err(Error::InsufficientData(
            "blocked-path run has zero clicks on both detectors".into(),
        ));
    }
    let ratio = (summary.counts_p1 - summary.counts_p2).abs() / total;
    // d ratio / d n1 = 2 n2 / total^2 and symmetrically for n2.
    let g1 = 2.0 * summary.counts_p2 / total.powi(2);
    let g2 = 2.0 * summary.counts_p1 / total.powi(2);
    let error = ((g1 * summary.err_p1).powi(2) + (g2 * summary.err_p2).powi(2)).sqrt();
    Ok(ValueWithError::new(ratio, error))
}

/// Estimates the distinguishability from the two blocked-path runs:
/// `D = (|n1-n2|/(n1+n2))_path2-blocked / 2 + (|n1-n2|/(n1+n2))_path1-blocked / 2`.
///
/// Each blocked run conditions on the transmitted half of the photons, so its
/// count imbalance estimates `1 - 2R`; the half weights restore the
/// joint-probability normalization in which `D1 = D2 = 1/2 - R`.
pub fn estimate_distinguishability(
    path2_blocked: &CountSummary,
    path1_blocked: &CountSummary,
) -> Result<ValueWithError> {
    let d1 = blocked_ratio(path2_blocked)?;
    let d2 = blocked_ratio(path1_blocked)?;
    let value = 0.5 * (d1.value + d2.value);
    let error = 0.5 * d1.error.hypot(d2.error);
    Ok(ValueWithError::new(value, error))
}

/// Anticorrelation estimator `alpha = n_coinc * n_triggers / (n1 * n2)`;
/// 1 for Poissonian coincidences, 0 for a perfect single-photon source.
pub fn estimate_alpha(summary: &CountSummary) -> Result<ValueWithError> {
    if summary.triggers == 0 {
        return Err(Error::UndefinedStatistic(
            "alpha requires at least one trigger".into(),
        ));
    }
    if summary.counts_p1 <= 0.0 || summary.counts_p2 <= 0.0 {
        return Err(Error::UndefinedStatistic(
            "alpha requires clicks on both detectors".into(),
        ));
    }
    let triggers = summary.triggers as f64;
    let scale = triggers / (summary.counts_p1 * summary.counts_p2);
    if summary.coincidences == 0.0 {
        // No coincidences observed; quote the one-count Poisson scale.
        return Ok(ValueWithError::new(0.0, scale));
    }
    let alpha = summary.coincidences * scale;
    let relative = (summary.err_coinc / summary.coincidences).powi(2)
        + (summary.err_p1 / summary.counts_p1).powi(2)
        + (summary.err_p2 / summary.counts_p2).powi(2);
    Ok(ValueWithError::new(alpha, alpha * relative.sqrt()))
}

/// The duality statistic `s = V^2 + D^2` with propagated error and the
/// bound check `s <= 1 + 2 sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplementarityResult {
    pub visibility: ValueWithError,
    pub distinguishability: ValueWithError,
    pub duality: ValueWithError,
    /// Reflectivity implied by the applied EOM voltage, when known.
    pub r_nominal: Option<f64>,
    pub pass: bool,
}

impl ComplementarityResult {
    pub fn with_r_nominal(mut self, r_nominal: f64) -> Self {
        self.r_nominal = Some(r_nominal);
        self
    }
}

/// Combines measured visibility and distinguishability (point estimates must
/// be nonnegative) into `s = V^2 + D^2` with
/// `sigma_s = sqrt((2 V sigma_V)^2 + (2 D sigma_D)^2)`.
pub fn complementarity_statistic(
    visibility: ValueWithError,
    distinguishability: ValueWithError,
) -> ComplementarityResult {
    let s = visibility.value.powi(2) + distinguishability.value.powi(2);
    let error = ((2.0 * visibility.value * visibility.error).powi(2)
        + (2.0 * distinguishability.value * distinguishability.error).powi(2))
    .sqrt();
    ComplementarityResult {
        visibility,
        distinguishability,
        duality: ValueWithError::new(s, error),
        r_nominal: None,
        pass: s <= 1.0 + 2.0 * error,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(n1: u64, n2: u64, coinc: u64, triggers: u64) -> CountSummary {
        CountSummary::from_raw(n1, n2, coinc, triggers, triggers as f64 * 238e-9).unwrap()
    }

    #[test]
    fn ideal_blocked_runs_give_full_distinguishability() {
        // R = 0: each blocked run clicks only its aligned detector.
        let d = estimate_distinguishability(
            &summary(5_000, 0, 0, 10_000),
            &summary(0, 5_000, 0, 10_000),
        )
        .unwrap();
        assert_eq!(d.value, 1.0);
        assert_eq!(d.error, 0.0);
    }

    #[test]
    fn balanced_blocked_runs_give_zero_distinguishability() {
        let d = estimate_distinguishability(
            &summary(2_500, 2_500, 0, 10_000),
            &summary(2_500, 2_500, 0, 10_000),
        )
        .unwrap();
        assert_eq!(d.value, 0.0);
        assert!(d.error > 0.0);
    }

    #[test]
    fn empty_blocked_run_is_insufficient() {
        assert!(matches!(
            estimate_distinguishability(&summary(0, 0, 0, 10), &summary(1, 0, 0, 10)),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn blocked_ratio_error_matches_binomial_form() {
        // For raw Poisson counts the propagated error reduces to
        // 2*sqrt(n1*n2/(n1+n2)^3).
        let s = summary(5_700, 4_300, 0, 20_000);
        let d = blocked_ratio(&s).unwrap();
        let n = 10_000f64;
        let expected = 2.0 * (5_700.0 * 4_300.0 / n.powi(3)).sqrt();
        assert!((d.error - expected).abs() < 1e-12);
    }

    #[test]
    fn alpha_examples() {
        // No coincidences.
        let a = estimate_alpha(&summary(10_000, 10_000, 0, 1_000_000)).unwrap();
        assert_eq!(a.value, 0.0);
        assert!(a.error > 0.0);
        // Poissonian reference level: n_coinc = n1*n2/triggers gives exactly 1.
        let a = estimate_alpha(&summary(10_000, 20_000, 200, 1_000_000)).unwrap();
        assert_eq!(a.value, 1.0);
        // Undefined without singles.
        assert!(matches!(
            estimate_alpha(&summary(0, 100, 0, 1_000)),
            Err(Error::UndefinedStatistic(_))
        ));
    }

    #[test]
    fn duality_statistic_examples() {
        let r =
            complementarity_statistic(ValueWithError::new(1.0, 0.0), ValueWithError::new(0.0, 0.0));
        assert_eq!(r.duality.value, 1.0);
        assert!(r.pass);

        let r = complementarity_statistic(
            ValueWithError::new(0.93, 0.02),
            ValueWithError::new(0.14, 0.01),
        );
        assert!((r.duality.value - 0.8845).abs() < 1e-12);
        assert!((r.duality.error - 0.037305227515725).abs() < 1e-12);
        assert!(r.pass);

        // A clear violation fails the bound check.
        let r = complementarity_statistic(
            ValueWithError::new(1.0, 0.001),
            ValueWithError::new(0.5, 0.001),
        );
        assert!(!r.pass);
        assert!(r.duality.value > 1.0);
    }

    #[test]
    fn r_nominal_is_carried_through() {
        let r = complementarity_statistic(
            ValueWithError::new(0.9, 0.01),
            ValueWithError::new(0.1, 0.01),
        )
        .with_r_nominal(0.43);
        assert_eq!(r.r_nominal, Some(0.43));
    }
}
