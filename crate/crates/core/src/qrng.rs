//! Shot-noise comparator random number generator.
//!
//! The experiment derives one choice bit per clock period by comparing the
//! amplified shot noise of a white-light beam against zero. Here the noise
//! sample is standard Gaussian, so the comparator reduces to a sign test; a
//! comparator offset models electronic bias. Streams are seeded and fully
//! replayable.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default acceptance threshold for the statistical self-tests; 4 sigma keeps
/// the false-failure rate far below one per CI run.
pub const DEFAULT_TEST_SIGMA: f64 = 4.0;

/// Comparator parameters of the simulated shot-noise generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Comparator offset in units of the noise standard deviation.
    pub mean_offset: f64,
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            mean_offset: 0.0,
            seed: 0,
        }
    }
}

/// One random choice, tagged with the trigger it belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChoiceBit {
    /// 0 or 1.
    pub value: u8,
    pub trigger_index: u64,
}

/// Seeded shot-noise comparator emitting one bit per call.
#[derive(Debug, Clone)]
pub struct ShotNoiseQrng {
    rng: ChaCha8Rng,
    mean_offset: f64,
    next_index: u64,
}

impl ShotNoiseQrng {
    pub fn new(model: &NoiseModel) -> Self {
        Self::from_rng(ChaCha8Rng::seed_from_u64(model.seed), model.mean_offset)
    }

    /// Builds the comparator on an externally derived stream; used by the run
    /// engine so all randomness of a run hangs off one seed.
    pub fn from_rng(rng: ChaCha8Rng, mean_offset: f64) -> Self {
        Self {
            rng,
            mean_offset,
            next_index: 0,
        }
    }

    /// Compares one Gaussian noise sample (plus offset) against zero.
    pub fn next_bit(&mut self) -> ChoiceBit {
        let noise: f64 = StandardNormal.sample(&mut self.rng);
        let bit = ChoiceBit {
            value: u8::from(noise + self.mean_offset > 0.0),
            trigger_index: self.next_index,
        };
        self.next_index += 1;
        bit
    }

    pub fn take_bits(&mut self, n: u64) -> Vec<ChoiceBit> {
        (0..n).map(|_| self.next_bit()).collect()
    }
}

/// Frequency test of a bit sequence against the fair-coin hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiasReport {
    pub n_bits: usize,
    pub frequency: f64,
    pub z_score: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Computes `z = (freq - 1/2) / sqrt(1/4n)`; passes iff |z| <= `z_threshold`.
/// Needs at least 100 bits.
pub fn bias_test(bits: &[ChoiceBit], z_threshold: f64) -> Result<BiasReport> {
    if bits.len() < 100 {
        return Err(Error::InsufficientData(format!(
            "bias test needs >= 100 bits (got {})",
            bits.len()
        )));
    }
    let n = bits.len() as f64;
    let ones = bits.iter().filter(|b| b.value == 1).count() as f64;
    let frequency = ones / n;
    let z_score = (frequency - 0.5) / (0.25 / n).sqrt();
    Ok(BiasReport {
        n_bits: bits.len(),
        frequency,
        z_score,
        threshold: z_threshold,
        pass: z_score.abs() <= z_threshold,
    })
}

/// Sample autocorrelation of one lag of the centered bit sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LagCorrelation {
    pub lag: usize,
    pub correlation: f64,
    pub pass: bool,
}

/// Autocorrelation test report over lags 1..=max_lag.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AutocorrelationReport {
    pub n_bits: usize,
    /// Per-lag acceptance threshold 4/sqrt(n).
    pub threshold: f64,
    pub lags: Vec<LagCorrelation>,
    /// Zero-variance input; no correlation is defined.
    pub degenerate: bool,
    pub pass: bool,
}

/// Lag-k sample autocorrelation of the centered bits for k = 1..=max_lag;
/// passes iff every |r_k| <= 4/sqrt(n). Needs more than `10 * max_lag` bits.
pub fn autocorrelation_test(bits: &[ChoiceBit], max_lag: usize) -> Result<AutocorrelationReport> {
    if max_lag == 0 {
        return Err(Error::InsufficientData("max_lag must be >= 1".into()));
    }
    if bits.len() <= 10 * max_lag {
        return Err(Error::InsufficientData(format!(
            "autocorrelation test needs more than {} bits for max_lag = {} (got {})",
            10 * max_lag,
            max_lag,
            bits.len()
        )));
    }
    let n = bits.len();
    let mean = bits.iter().map(|b| f64::from(b.value)).sum::<f64>() / n as f64;
    let centered: Vec<f64> = bits.iter().map(|b| f64::from(b.value) - mean).collect();
    let variance: f64 = centered.iter().map(|x| x * x).sum();
    let threshold = DEFAULT_TEST_SIGMA / (n as f64).sqrt();
    if variance == 0.0 {
        return Ok(AutocorrelationReport {
            n_bits: n,
            threshold,
            lags: Vec::new(),
            degenerate: true,
            pass: false,
        });
    }
    let lags: Vec<LagCorrelation> = (1..=max_lag)
        .map(|lag| {
            let covariance: f64 = centered[..n - lag]
                .iter()
                .zip(&centered[lag..])
                .map(|(a, b)| a * b)
                .sum();
            let correlation = covariance / variance;
            LagCorrelation {
                lag,
                correlation,
                pass: correlation.abs() <= threshold,
            }
        })
        .collect();
    let pass = lags.iter().all(|l| l.pass);
    Ok(AutocorrelationReport {
        n_bits: n,
        threshold,
        lags,
        degenerate: false,
        pass,
    })
}

/// Writes one byte per bit (values 0/1) for external test suites.
pub fn dump_bits<W: Write>(bits: &[ChoiceBit], writer: &mut W) -> std::io::Result<()> {
    let bytes: Vec<u8> = bits.iter().map(|b| b.value).collect();
    writer.write_all(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(values: impl IntoIterator<Item = u8>) -> Vec<ChoiceBit> {
        values
            .into_iter()
            .enumerate()
            .map(|(i, value)| ChoiceBit {
                value,
                trigger_index: i as u64,
            })
            .collect()
    }

    #[test]
    fn comparator_saturates_at_large_offsets() {
        for (offset, expected) in [(10.0, 1u8), (-10.0, 0u8)] {
            let mut qrng = ShotNoiseQrng::new(&NoiseModel {
                mean_offset: offset,
                seed: 11,
            });
            // P(|N(0,1)| > 10) < 1e-6; 10^4 draws must all agree.
            for _ in 0..10_000 {
                assert_eq!(qrng.next_bit().value, expected);
            }
        }
    }

    #[test]
    fn bits_are_indexed_sequentially() {
        let mut qrng = ShotNoiseQrng::new(&NoiseModel::default());
        let bits = qrng.take_bits(10);
        for (i, bit) in bits.iter().enumerate() {
            assert_eq!(bit.trigger_index, i as u64);
        }
    }

    #[test]
    fn identical_seeds_replay_identical_streams() {
        let model = NoiseModel {
            mean_offset: 0.0,
            seed: 99,
        };
        let a = ShotNoiseQrng::new(&model).take_bits(10_000);
        let b = ShotNoiseQrng::new(&model).take_bits(10_000);
        assert_eq!(a, b);
    }

    #[test]
    fn unbiased_stream_mean_is_within_binomial_bounds() {
        let mut qrng = ShotNoiseQrng::new(&NoiseModel {
            mean_offset: 0.0,
            seed: 5,
        });
        let n = 1_000_000u64;
        let ones: u64 = (0..n).map(|_| u64::from(qrng.next_bit().value)).sum();
        let mean = ones as f64 / n as f64;
        assert!(
            (mean - 0.5).abs() <= 4.0 * 0.5 / (n as f64).sqrt(),
            "mean = {mean}"
        );
    }

    #[test]
    fn bias_test_examples() {
        let report = bias_test(&synthetic(std::iter::repeat_n(1, 10_000)), 4.0).unwrap();
        assert!(!report.pass);
        assert!((report.z_score - 100.0).abs() < 1e-9);

        let alternating = synthetic((0..10_000).map(|i| (i % 2) as u8));
        let report = bias_test(&alternating, 4.0).unwrap();
        assert!(report.pass);
        assert_eq!(report.frequency, 0.5);

        assert!(matches!(
            bias_test(&synthetic(std::iter::repeat_n(1, 99)), 4.0),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn autocorrelation_examples() {
        let alternating = synthetic((0..10_000).map(|i| (i % 2) as u8));
        let report = autocorrelation_test(&alternating, 3).unwrap();
        assert!(!report.pass);
        assert!((report.lags[0].correlation + 1.0).abs() < 1e-3);

        let constant = synthetic(std::iter::repeat_n(1, 10_000));
        let report = autocorrelation_test(&constant, 3).unwrap();
        assert!(report.degenerate);
        assert!(!report.pass);

        assert!(matches!(
            autocorrelation_test(&alternating, 1_000),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn seeded_ideal_stream_passes_both_tests() {
        let mut qrng = ShotNoiseQrng::new(&NoiseModel {
            mean_offset: 0.0,
            seed: 2024,
        });
        let bits = qrng.take_bits(1_000_000);
        assert!(bias_test(&bits, DEFAULT_TEST_SIGMA).unwrap().pass);
        assert!(autocorrelation_test(&bits, 10).unwrap().pass);
    }

    #[test]
    fn dump_writes_one_byte_per_bit() {
        let bits = synthetic([1, 0, 1, 1, 0]);
        let mut buffer = Vec::new();
        dump_bits(&bits, &mut buffer).unwrap();
        assert_eq!(buffer, vec![1, 0, 1, 1, 0]);
    }
}
