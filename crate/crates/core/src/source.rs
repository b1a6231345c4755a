//! Clock-triggered imperfect single-photon source.
//!
//! Each trigger emits 0, 1, or 2 photons. The two-photon probability sets the
//! anticorrelation parameter `alpha = <n(n-1)> / <n>^2`, the gated equivalent
//! of the second-order correlation g2(0): 0 for a perfect single-photon
//! source, 1 for Poissonian light.

use rand::distributions::{Distribution, Standard};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{real, Real};

/// Per-trigger photon-number distribution truncated at two photons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmissionModel<R> {
    /// Probability of exactly one photon per trigger.
    pub p_single: R,
    /// Probability of exactly two photons per trigger.
    pub p_double: R,
}

impl<R: Real> EmissionModel<R> {
    pub fn new(p_single: R, p_double: R) -> Result<Self> {
        let model = Self { p_single, p_double };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_single >= R::zero() && self.p_double >= R::zero()) {
            return Err(Error::Config(format!(
                "emission probabilities must be >= 0 (got p_single = {}, p_double = {})",
                self.p_single, self.p_double
            )));
        }
        if self.p_single + self.p_double > R::one() {
            return Err(Error::Config(format!(
                "p_single + p_double must be <= 1 (got {})",
                self.p_single + self.p_double
            )));
        }
        if self.p_double > self.p_single {
            return Err(Error::Config(format!(
                "sub-Poissonian regime requires p_double <= p_single (got {} > {})",
                self.p_double, self.p_single
            )));
        }
        Ok(())
    }

    /// Probability of an empty trigger.
    pub fn p_zero(&self) -> R {
        R::one() - self.p_single - self.p_double
    }

    /// Mean photon number per trigger.
    pub fn mean_photons(&self) -> R {
        self.p_single + real::<R>(2.0) * self.p_double
    }

    /// Builds the model whose anticorrelation equals `alpha` at the given
    /// one-photon probability, inverting [`theoretical_alpha`] in closed form.
    pub fn for_target_alpha(p_single: R, alpha: R) -> Result<Self> {
        let inputs_ok = p_single > R::zero() && alpha >= R::zero();
        if !inputs_ok {
            return Err(Error::Config(format!(
                "alpha inversion requires p_single > 0 and alpha >= 0 (got {p_single}, {alpha})"
            )));
        }
        if alpha == R::zero() {
            return Self::new(p_single, R::zero());
        }
        // alpha*m^2 - m + p_single = 0 for the mean m = p_single + 2*p_double;
        // the smaller root is the branch continuous at alpha -> 0.
        let four = real::<R>(4.0);
        let discriminant = R::one() - four * alpha * p_single;
        if discriminant < R::zero() {
            return Err(Error::Config(format!(
                "no two-photon admixture reaches alpha = {alpha} at p_single = {p_single}"
            )));
        }
        let mean = (R::one() - discriminant.sqrt()) / (real::<R>(2.0) * alpha);
        let p_double = (mean - p_single) * real(0.5);
        Self::new(p_single, p_double.max(R::zero()))
    }
}

/// Photon count produced by one trigger.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmissionOutcome {
    /// 0, 1, or 2 photons.
    pub photon_count: u8,
}

/// Draws one trigger outcome; deterministic for a seeded `rng`.
pub fn sample_emission<R, G>(model: &EmissionModel<R>, rng: &mut G) -> Result<EmissionOutcome>
where
    R: Real,
    G: Rng + ?Sized,
    Standard: Distribution<R>,
{
    model.validate()?;
    let u: R = rng.gen();
    let photon_count = if u < model.p_double {
        2
    } else if u < model.p_double + model.p_single {
        1
    } else {
        0
    };
    Ok(EmissionOutcome { photon_count })
}

/// Anticorrelation `alpha = <n(n-1)> / <n>^2 = 2*p_double / (p_single + 2*p_double)^2`.
pub fn theoretical_alpha<R: Real>(model: &EmissionModel<R>) -> Result<R> {
    model.validate()?;
    let mean = model.mean_photons();
    let mean_ok = mean > R::zero();
    if !mean_ok {
        return Err(Error::UndefinedStatistic(
            "alpha requires a nonzero mean photon number".into(),
        ));
    }
    Ok(real::<R>(2.0) * model.p_double / (mean * mean))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Brute-force alpha by enumerating the three outcomes.
    fn alpha_by_enumeration(model: &EmissionModel<f64>) -> f64 {
        let probs = [model.p_zero(), model.p_single, model.p_double];
        let mean: f64 = probs.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
        let factorial_moment: f64 = probs
            .iter()
            .enumerate()
            .map(|(n, p)| (n * n.saturating_sub(1)) as f64 * p)
            .sum();
        factorial_moment / (mean * mean)
    }

    /// Solve 2*p2/(p1 + 2*p2)^2 = alpha for p2 by bisection, independently of
    /// the closed-form inversion under test.
    fn solve_p_double_by_bisection(p_single: f64, alpha: f64) -> f64 {
        let f = |p2: f64| 2.0 * p2 / (p_single + 2.0 * p2).powi(2) - alpha;
        let (mut lo, mut hi) = (0.0, p_single);
        assert!(f(lo) < 0.0 && f(hi) > 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn model_validation() {
        assert!(EmissionModel::new(0.02, 0.0).is_ok());
        assert!(EmissionModel::new(-0.1, 0.0).is_err());
        assert!(EmissionModel::new(0.7, 0.4).is_err());
        assert!(EmissionModel::new(0.01, 0.02).is_err());
    }

    #[test]
    fn degenerate_models_sample_deterministically() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let always_one = EmissionModel::new(1.0, 0.0).unwrap();
        let never = EmissionModel::new(0.0, 0.0).unwrap();
        for _ in 0..100 {
            assert_eq!(
                sample_emission(&always_one, &mut rng).unwrap().photon_count,
                1
            );
            assert_eq!(sample_emission(&never, &mut rng).unwrap().photon_count, 0);
        }
    }

    #[test]
    fn sampled_frequencies_match_the_model() {
        let model = EmissionModel::for_target_alpha(0.02, 0.15).unwrap();
        let expected = [model.p_zero(), model.p_single, model.p_double];
        let n = 1_000_000u64;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut counts = [0u64; 3];
        for _ in 0..n {
            counts[sample_emission(&model, &mut rng).unwrap().photon_count as usize] += 1;
        }
        for (k, &p) in expected.iter().enumerate() {
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            let freq = counts[k] as f64 / n as f64;
            assert!(
                (freq - p).abs() <= 4.0 * sigma,
                "outcome {k}: freq = {freq}, p = {p}, sigma = {sigma}"
            );
        }
    }

    #[test]
    fn alpha_is_zero_without_two_photon_events() {
        let model = EmissionModel::new(0.02, 0.0).unwrap();
        assert_eq!(theoretical_alpha(&model).unwrap(), 0.0);
    }

    #[test]
    fn alpha_matches_enumeration_exactly() {
        for (p1, p2) in [(0.02, 3e-5), (0.5, 0.1), (0.9, 0.05), (1.0, 0.0)] {
            let model = EmissionModel::new(p1, p2).unwrap();
            let alpha = theoretical_alpha(&model).unwrap();
            assert_eq!(alpha, alpha_by_enumeration(&model));
        }
    }

    #[test]
    fn alpha_undefined_for_empty_source() {
        let model = EmissionModel::new(0.0, 0.0).unwrap();
        assert!(matches!(
            theoretical_alpha(&model),
            Err(Error::UndefinedStatistic(_))
        ));
    }

    #[test]
    fn alpha_inversion_agrees_with_bisection_oracle() {
        let model = EmissionModel::for_target_alpha(0.02, 0.15).unwrap();
        let oracle = solve_p_double_by_bisection(0.02, 0.15);
        // Oracle value: 3.0181e-5 two-photon probability.
        assert!((oracle - 3.018136144303e-5).abs() < 1e-15);
        assert!((model.p_double - oracle).abs() < 1e-15);
        // Verify by substitution.
        assert!((theoretical_alpha(&model).unwrap() - 0.15).abs() < 1e-12);
    }

    #[test]
    fn alpha_approaches_one_in_the_poissonian_limit() {
        // Truncated Poisson: p1 = lambda, p2 = lambda^2/2.
        let lambda = 1e-3f64;
        let model = EmissionModel::new(lambda, lambda * lambda / 2.0).unwrap();
        let alpha = theoretical_alpha(&model).unwrap();
        assert!((alpha - 1.0).abs() < 1e-2, "alpha = {alpha}");
        // Series oracle: alpha = 1/(1+lambda)^2.
        assert!((alpha - (1.0 + lambda).powi(-2)).abs() < 1e-12);
    }
}
