//! Least-squares fringe fitting.
//!
//! Detector-1 counts versus actuator phase follow
//! `n1(phi) = A * (1 + V cos(phi + phi0))`, which is linear in the basis
//! `(1, cos phi, sin phi)`. The fit solves the Poisson-weighted normal
//! equations and propagates the coefficient covariance into the visibility.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{real, Real};

use super::{CountSummary, ValueWithError};

/// Result of a fringe fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FringeFit {
    pub visibility: ValueWithError,
    /// Phase origin phi0 of the fitted cosine, radians.
    pub phase_offset: f64,
    /// Fitted mean level A, counts per point.
    pub mean_level: f64,
    pub mean_level_error: f64,
    /// The fitted amplitude is consistent with zero, so the phase origin is
    /// arbitrary.
    pub phase_unidentifiable: bool,
    /// Noise pushed the visibility estimate slightly above 1.
    pub overshoot: bool,
}

/// Weighted least squares of `y = c0 + c1 cos(phi) + c2 sin(phi)`.
///
/// Returns the coefficients and their covariance; `weights` are inverse
/// variances. Generic so the kernel can run at any float width.
pub fn cosine_least_squares<R: Real>(points: &[(R, R, R)]) -> Result<([R; 3], [[R; 3]; 3])> {
    let mut normal = [[R::zero(); 3]; 3];
    let mut rhs = [R::zero(); 3];
    for &(phi, y, weight) in points {
        let basis = [R::one(), phi.cos(), phi.sin()];
        for i in 0..3 {
            for j in 0..3 {
                normal[i][j] += weight * basis[i] * basis[j];
            }
            rhs[i] += weight * y * basis[i];
        }
    }
    let covariance = invert_symmetric_3x3(&normal)?;
    let mut coefficients = [R::zero(); 3];
    for i in 0..3 {
        for j in 0..3 {
            coefficients[i] += covariance[i][j] * rhs[j];
        }
    }
    Ok((coefficients, covariance))
}

fn invert_symmetric_3x3<R: Real>(m: &[[R; 3]; 3]) -> Result<[[R; 3]; 3]> {
    let a = m[0][0];
    let b = m[0][1];
    let c = m[0][2];
    let d = m[1][1];
    let e = m[1][2];
    let f = m[2][2];
    let det = a * (d * f - e * e) - b * (b * f - e * c) + c * (b * e - d * c);
    let scale = a.abs().max(d.abs()).max(f.abs());
    if !det.is_finite() || det.abs() <= scale.powi(3) * real(1e-12) {
        return Err(Error::DegenerateFit(
            "normal equations are singular; phases do not constrain the fringe".into(),
        ));
    }
    let inv = [
        [(d * f - e * e), (c * e - b * f), (b * e - c * d)],
        [(c * e - b * f), (a * f - c * c), (b * c - a * e)],
        [(b * e - c * d), (b * c - a * e), (a * d - b * b)],
    ];
    let mut out = [[R::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = inv[i][j] / det;
        }
    }
    Ok(out)
}

/// Fits `n1(phi) = A (1 + V cos(phi + phi0))` to per-phase detector-1 counts
/// with Poisson weights.
///
/// Needs at least 4 distinct phases spanning more than pi. The visibility
/// point estimate must land in [0, 1.05]; estimates above 1 are flagged as
/// overshoot, larger values are rejected.
pub fn fit_fringe_visibility(points: &[(f64, CountSummary)]) -> Result<FringeFit> {
    let mut phases: Vec<f64> = points.iter().map(|(phi, _)| *phi).collect();
    phases.sort_by(|a, b| a.total_cmp(b));
    phases.dedup();
    if phases.len() < 4 {
        return Err(Error::DegenerateFit(format!(
            "fringe fit needs >= 4 distinct phases (got {})",
            phases.len()
        )));
    }
    let span = phases.last().unwrap() - phases.first().unwrap();
    if span <= std::f64::consts::PI {
        return Err(Error::DegenerateFit(format!(
            "fringe fit needs phases spanning more than pi (got {span:.4})"
        )));
    }

    let data: Vec<(f64, f64, f64)> = points
        .iter()
        .map(|(phi, summary)| {
            let variance = summary.err_p1.powi(2).max(1.0);
            (*phi, summary.counts_p1, 1.0 / variance)
        })
        .collect();
    let (coefficients, covariance) = cosine_least_squares(&data)?;
    let [mean, cos_amp, sin_amp] = coefficients;

    if mean <= 0.0 {
        return Err(Error::DegenerateFit(format!(
            "fitted mean level must be positive (got {mean:.4})"
        )));
    }
    let amplitude = cos_amp.hypot(sin_amp);
    let visibility = amplitude / mean;

    let (error, phase_offset, phase_unidentifiable) = if amplitude <= mean * 1e-9 {
        // Zero-amplitude fringe: the phase drops out of the model; bound the
        // visibility error by the quadrature amplitude uncertainties.
        let error = (covariance[1][1] + covariance[2][2]).sqrt() / mean;
        (error, 0.0, true)
    } else {
        let gradient = [
            -visibility / mean,
            cos_amp / (mean * amplitude),
            sin_amp / (mean * amplitude),
        ];
        let mut variance = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                variance += gradient[i] * covariance[i][j] * gradient[j];
            }
        }
        (variance.max(0.0).sqrt(), (-sin_amp).atan2(cos_amp), false)
    };

    if visibility > 1.05 {
        return Err(Error::DegenerateFit(format!(
            "fitted visibility {visibility:.4} is outside the physical range [0, 1.05]"
        )));
    }
    Ok(FringeFit {
        visibility: ValueWithError::new(visibility, error),
        phase_offset,
        mean_level: mean,
        mean_level_error: covariance[0][0].max(0.0).sqrt(),
        phase_unidentifiable,
        overshoot: visibility > 1.0,
    })
}
