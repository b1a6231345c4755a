//! Per-trigger Monte Carlo engine.
//!
//! For every clock trigger the engine draws the QRNG choice bit, applies the
//! corresponding EOM voltage (bit 1 sets the configured voltage, bit 0 leaves
//! the beamsplitter off), samples the photon emission, routes each photon
//! through the interferometer, adds detector dark counts, and appends one
//! immutable record to the event log.
//!
//! All randomness derives from `RunConfig::seed` through two independent
//! ChaCha streams (choice bits and physics), so a configuration replays to a
//! byte-identical log.
//!
//! Open-interferometer detection is sampled from the closed-form fringe
//! probabilities; per-photon path labels are only ever assigned when an arm
//! is physically blocked. Sampling paths in the open configuration would
//! amount to a hidden-variable model and destroy the interference.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::event_log::{BlockedPath, EventLog, LogHeader, TriggerRecord, LOG_FORMAT_VERSION};
use crate::optics::{self, InterferometerConfig};
use crate::qrng::ShotNoiseQrng;
use crate::source::{self, EmissionModel};
use crate::timing::{self, GeometryConfig};

const CHOICE_STREAM: u64 = 1;
const PHYSICS_STREAM: u64 = 2;

/// Detector response: quantum efficiency plus Poissonian dark counts.
/// Detectors are not photon-number resolving; a dark count and a photon on
/// the same detector merge into one click.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    /// Detection probability per photon.
    pub efficiency: f64,
    /// Dark counts per second per detector.
    pub dark_rate_hz: f64,
    /// Gate per trigger during which dark counts accrue, seconds.
    pub gate_s: f64,
}

impl Default for DetectorModel {
    fn default() -> Self {
        Self {
            efficiency: 1.0,
            dark_rate_hz: 60.0,
            gate_s: 238e-9,
        }
    }
}

impl DetectorModel {
    /// Unit efficiency, no dark counts; the reference detector for oracle
    /// tests.
    pub fn noiseless() -> Self {
        Self {
            dark_rate_hz: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::Config(format!(
                "detector efficiency must lie in [0, 1] (got {})",
                self.efficiency
            )));
        }
        if !(self.dark_rate_hz >= 0.0 && self.dark_rate_hz.is_finite()) {
            return Err(Error::Config(format!(
                "dark_rate_hz must be >= 0 (got {})",
                self.dark_rate_hz
            )));
        }
        if !(self.gate_s > 0.0 && self.gate_s.is_finite()) {
            return Err(Error::Config(format!(
                "gate_s must be > 0 (got {})",
                self.gate_s
            )));
        }
        Ok(())
    }
}

/// A contiguous span of triggers sharing one actuator phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSegment {
    pub phase: f64,
    pub triggers: u64,
}

/// Complete description of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n_triggers: u64,
    pub emission: EmissionModel<f64>,
    /// Interferometer template; `eom_voltage` is the value applied when the
    /// choice bit is 1, bit 0 always applies 0 V.
    pub optics: InterferometerConfig<f64>,
    /// Phase segments; must partition the trigger range exactly.
    pub phase_schedule: Vec<PhaseSegment>,
    pub blocked_path: BlockedPath,
    pub detector: DetectorModel,
    pub geometry: GeometryConfig<f64>,
    pub seed: u64,
    /// Comparator offset of the choice QRNG.
    pub qrng_offset: f64,
    /// Overrides the QRNG with a constant bit; used for calibration runs
    /// such as the anticorrelation measurement.
    pub forced_choice: Option<u8>,
    /// Refuse to run unless the choice event is space-like separated from
    /// the photon entry.
    pub require_spacelike: bool,
}

impl RunConfig {
    /// A single-phase run with default detector and geometry.
    pub fn new(
        n_triggers: u64,
        emission: EmissionModel<f64>,
        optics: InterferometerConfig<f64>,
        seed: u64,
    ) -> Self {
        Self {
            n_triggers,
            emission,
            optics,
            phase_schedule: vec![PhaseSegment {
                phase: optics.phase,
                triggers: n_triggers,
            }],
            blocked_path: BlockedPath::None,
            detector: DetectorModel::default(),
            geometry: GeometryConfig::default(),
            seed,
            qrng_offset: 0.0,
            forced_choice: None,
            require_spacelike: true,
        }
    }

    pub fn with_detector(mut self, detector: DetectorModel) -> Self {
        self.detector = detector;
        self
    }

    pub fn with_blocked_path(mut self, blocked: BlockedPath) -> Self {
        self.blocked_path = blocked;
        self
    }

    pub fn with_forced_choice(mut self, bit: u8) -> Self {
        self.forced_choice = Some(bit);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_triggers == 0 {
            return Err(Error::Config("n_triggers must be > 0".into()));
        }
        self.emission.validate()?;
        self.optics.validate()?;
        self.detector.validate()?;
        self.geometry.validate()?;
        if self.phase_schedule.is_empty() {
            return Err(Error::Config("phase_schedule must not be empty".into()));
        }
        if self.phase_schedule.iter().any(|s| s.triggers == 0) {
            return Err(Error::Config(
                "phase segments must cover >= 1 trigger".into(),
            ));
        }
        if self.phase_schedule.iter().any(|s| !s.phase.is_finite()) {
            return Err(Error::Config("phase segments must be finite".into()));
        }
        let scheduled: u64 = self.phase_schedule.iter().map(|s| s.triggers).sum();
        if scheduled != self.n_triggers {
            return Err(Error::Config(format!(
                "phase_schedule covers {scheduled} triggers but n_triggers = {}",
                self.n_triggers
            )));
        }
        if !self.qrng_offset.is_finite() {
            return Err(Error::Config("qrng_offset must be finite".into()));
        }
        if let Some(bit) = self.forced_choice {
            if bit > 1 {
                return Err(Error::Config(format!(
                    "forced_choice must be 0 or 1 (got {bit})"
                )));
            }
        }
        Ok(())
    }

    /// Short hex digest of the canonical serialized configuration; stamped
    /// into the event-log header.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(self).expect("run config serializes");
        let hash = Sha256::digest(canonical.as_bytes());
        hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Deterministically derives an independent sub-run seed (splitmix64 step).
pub fn derived_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Detection rates for one phase segment, resolved per choice bit.
struct SegmentRates {
    /// VBS reflectivity when the bit is 0 / 1.
    reflectivity: [f64; 2],
    /// Open-interferometer P(detector 1) when the bit is 0 / 1.
    p_detector1: [f64; 2],
}

impl SegmentRates {
    fn compute(cfg: &RunConfig, phase: f64) -> Result<Self> {
        let mut reflectivity = [0.0; 2];
        let mut p_detector1 = [0.0; 2];
        for bit in 0..2usize {
            let voltage = if bit == 1 {
                cfg.optics.eom_voltage
            } else {
                0.0
            };
            let optics_cfg = cfg.optics.with_eom_voltage(voltage).with_phase(phase);
            reflectivity[bit] = optics::reflectivity_from_voltage(&optics_cfg)?;
            p_detector1[bit] = optics::detection_probabilities(&optics_cfg)?.p1;
        }
        Ok(Self {
            reflectivity,
            p_detector1,
        })
    }
}

/// Runs the configured experiment and returns the complete event log.
///
/// In delayed-choice mode (`require_spacelike`) the run is refused unless the
/// choice/entry pair is space-like separated.
pub fn run_experiment(cfg: &RunConfig) -> Result<EventLog> {
    cfg.validate()?;
    if cfg.require_spacelike {
        let report = timing::verify_delayed_choice_geometry(&cfg.geometry)?;
        if !report.is_spacelike() {
            return Err(Error::InconsistentGeometry(format!(
                "delayed-choice mode requires a space-like separated choice, got {} \
                 (margin {:.3} ns); fix the geometry or waive require_spacelike",
                report.class, report.margin_ns
            )));
        }
    }

    let mut choice = ShotNoiseQrng::from_rng(stream_rng(cfg.seed, CHOICE_STREAM), cfg.qrng_offset);
    let mut physics = stream_rng(cfg.seed, PHYSICS_STREAM);

    let dark_mean = cfg.detector.dark_rate_hz * cfg.detector.gate_s;
    let dark = if dark_mean > 0.0 {
        Some(Poisson::new(dark_mean).expect("positive dark-count mean"))
    } else {
        None
    };
    let draw_dark = |physics: &mut ChaCha8Rng| match &dark {
        Some(d) => d.sample(physics) >= 1.0,
        None => false,
    };

    let mut records = Vec::with_capacity(cfg.n_triggers as usize);
    let mut trigger_index = 0u64;
    for segment in &cfg.phase_schedule {
        let rates = SegmentRates::compute(cfg, segment.phase)?;
        for _ in 0..segment.triggers {
            let choice_bit = match cfg.forced_choice {
                Some(bit) => bit,
                None => choice.next_bit().value,
            };
            let applied_v_eom = if choice_bit == 1 {
                cfg.optics.eom_voltage
            } else {
                0.0
            };
            let emitted = source::sample_emission(&cfg.emission, &mut physics)?.photon_count;

            let mut photon_p1 = false;
            let mut photon_p2 = false;
            for _ in 0..emitted {
                if cfg.detector.efficiency < 1.0 && physics.gen::<f64>() >= cfg.detector.efficiency
                {
                    continue;
                }
                let reflectivity = rates.reflectivity[choice_bit as usize];
                match cfg.blocked_path {
                    BlockedPath::None => {
                        if physics.gen::<f64>() < rates.p_detector1[choice_bit as usize] {
                            photon_p1 = true;
                        } else {
                            photon_p2 = true;
                        }
                    }
                    // The 50/50 input splitter sends half the photons into the
                    // blocked arm, where they are absorbed. A survivor reaches
                    // its aligned detector with probability 1 - R.
                    BlockedPath::Path1 => {
                        if physics.gen::<f64>() < 0.5 {
                            continue;
                        }
                        if physics.gen::<f64>() < reflectivity {
                            photon_p1 = true;
                        } else {
                            photon_p2 = true;
                        }
                    }
                    BlockedPath::Path2 => {
                        if physics.gen::<f64>() < 0.5 {
                            continue;
                        }
                        if physics.gen::<f64>() < reflectivity {
                            photon_p2 = true;
                        } else {
                            photon_p1 = true;
                        }
                    }
                }
            }

            let dark_p1 = draw_dark(&mut physics);
            let dark_p2 = draw_dark(&mut physics);
            records.push(TriggerRecord {
                trigger_index,
                choice_bit,
                applied_v_eom,
                phase: segment.phase,
                blocked_path: cfg.blocked_path,
                click_p1: photon_p1 || dark_p1,
                click_p2: photon_p2 || dark_p2,
                photon_count_emitted: emitted,
            });
            trigger_index += 1;
        }
    }

    EventLog::new(
        LogHeader {
            format_version: LOG_FORMAT_VERSION,
            config_digest: cfg.digest(),
        },
        records,
    )
}

/// Runs one sub-run per phase, `triggers_per_point` triggers each, in a
/// single concatenated log.
pub fn run_phase_scan(
    cfg: &RunConfig,
    phases: &[f64],
    triggers_per_point: u64,
) -> Result<EventLog> {
    if phases.is_empty() {
        return Err(Error::Config("phase scan needs at least one phase".into()));
    }
    if triggers_per_point == 0 {
        return Err(Error::Config("triggers_per_point must be > 0".into()));
    }
    let mut scan = cfg.clone();
    scan.phase_schedule = phases
        .iter()
        .map(|&phase| PhaseSegment {
            phase,
            triggers: triggers_per_point,
        })
        .collect();
    scan.n_triggers = phases.len() as u64 * triggers_per_point;
    run_experiment(&scan)
}

/// Runs with one interferometer arm physically blocked.
pub fn run_blocked_path(cfg: &RunConfig, which: BlockedPath) -> Result<EventLog> {
    if which == BlockedPath::None {
        return Err(Error::Config(
            "run_blocked_path requires path1 or path2".into(),
        ));
    }
    run_experiment(&cfg.clone().with_blocked_path(which))
}

/// Anticorrelation measurement: the choice is forced to 0 so no voltage is
/// ever applied and the output beamsplitter stays absent (R = 0).
pub fn run_alpha_measurement(cfg: &RunConfig) -> Result<EventLog> {
    run_experiment(&cfg.clone().with_forced_choice(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_optics(eom_voltage: f64) -> InterferometerConfig<f64> {
        InterferometerConfig::new(24.0, 217.0, eom_voltage, 0.0, 1.0).unwrap()
    }

    fn single_photon() -> EmissionModel<f64> {
        EmissionModel::new(1.0, 0.0).unwrap()
    }

    #[test]
    fn blocked_run_at_r_zero_clicks_only_the_aligned_detector() {
        let cfg = RunConfig::new(10_000, single_photon(), reference_optics(150.0), 3)
            .with_detector(DetectorModel::noiseless())
            .with_blocked_path(BlockedPath::Path2)
            .with_forced_choice(0);
        let log = run_experiment(&cfg).unwrap();
        assert!(log.records().iter().all(|r| !r.click_p2));
        // Half the photons survive the blocker, all landing on P1.
        let survivors = log.records().iter().filter(|r| r.click_p1).count();
        assert!(
            survivors > 4_000 && survivors < 6_000,
            "survivors = {survivors}"
        );
    }

    #[test]
    fn balanced_splitter_at_zero_phase_sends_every_click_to_p1() {
        let v_half = optics::voltage_for_reflectivity(45.0, 217.0, 0.5).unwrap();
        let optics_cfg = InterferometerConfig::new(45.0, 217.0, v_half, 0.0, 1.0).unwrap();
        let cfg = RunConfig::new(20_000, single_photon(), optics_cfg, 4)
            .with_detector(DetectorModel::noiseless())
            .with_forced_choice(1);
        let log = run_experiment(&cfg).unwrap();
        assert!(log.records().iter().all(|r| r.click_p1 && !r.click_p2));
    }

    #[test]
    fn replay_is_byte_identical() {
        let mut cfg = RunConfig::new(
            5_000,
            EmissionModel::new(0.4, 0.05).unwrap(),
            reference_optics(150.0),
            77,
        );
        cfg.detector = DetectorModel {
            efficiency: 0.8,
            ..DetectorModel::default()
        };
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        // A different seed must change the stream.
        cfg.seed = 78;
        let c = run_experiment(&cfg).unwrap();
        assert_ne!(a.to_text(), c.to_text());
    }

    #[test]
    fn choice_bits_are_balanced() {
        let cfg = RunConfig::new(100_000, single_photon(), reference_optics(150.0), 11)
            .with_detector(DetectorModel::noiseless());
        let log = run_experiment(&cfg).unwrap();
        let ones = log.records().iter().filter(|r| r.choice_bit == 1).count() as f64;
        let n = log.len() as f64;
        let sigma = 0.5 / n.sqrt();
        assert!(
            (ones / n - 0.5).abs() <= 4.0 * sigma,
            "frequency = {}",
            ones / n
        );
        // Bit 0 never carries voltage.
        assert!(log
            .records()
            .iter()
            .all(|r| r.choice_bit == 1 || r.applied_v_eom == 0.0));
    }

    #[test]
    fn clicks_never_exceed_emitted_photons_without_dark_counts() {
        let cfg = RunConfig::new(
            50_000,
            EmissionModel::new(0.3, 0.1).unwrap(),
            reference_optics(150.0),
            8,
        )
        .with_detector(DetectorModel::noiseless());
        let log = run_experiment(&cfg).unwrap();
        for r in log.records() {
            let clicks = u8::from(r.click_p1) + u8::from(r.click_p2);
            assert!(clicks <= r.photon_count_emitted);
        }
    }

    #[test]
    fn phase_scan_labels_each_segment() {
        let cfg = RunConfig::new(1, single_photon(), reference_optics(150.0), 5)
            .with_detector(DetectorModel::noiseless());
        let log = run_phase_scan(&cfg, &[0.25, 1.5], 10).unwrap();
        assert_eq!(log.len(), 20);
        assert!(log.records()[..10].iter().all(|r| r.phase == 0.25));
        assert!(log.records()[10..].iter().all(|r| r.phase == 1.5));
        let indices: Vec<u64> = log.records().iter().map(|r| r.trigger_index).collect();
        assert_eq!(indices, (0..20).collect::<Vec<_>>());
    }

    #[test]
    fn delayed_choice_geometry_failure_refuses_to_run() {
        let mut cfg = RunConfig::new(10, single_photon(), reference_optics(150.0), 1);
        cfg.geometry.choice_delay_s = 200e-9;
        assert!(matches!(
            run_experiment(&cfg),
            Err(Error::InconsistentGeometry(_))
        ));
        // Explicit waiver lets the run proceed.
        cfg.require_spacelike = false;
        assert!(run_experiment(&cfg).is_ok());
    }

    #[test]
    fn schedule_must_partition_the_run() {
        let mut cfg = RunConfig::new(100, single_photon(), reference_optics(0.0), 1);
        cfg.phase_schedule = vec![PhaseSegment {
            phase: 0.0,
            triggers: 99,
        }];
        assert!(matches!(run_experiment(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn alpha_run_forces_the_choice_to_zero() {
        let cfg = RunConfig::new(1_000, single_photon(), reference_optics(150.0), 6)
            .with_detector(DetectorModel::noiseless());
        let log = run_alpha_measurement(&cfg).unwrap();
        assert!(log
            .records()
            .iter()
            .all(|r| r.choice_bit == 0 && r.applied_v_eom == 0.0));
    }

    #[test]
    fn blocked_run_requires_a_real_path() {
        let cfg = RunConfig::new(10, single_photon(), reference_optics(0.0), 1);
        assert!(run_blocked_path(&cfg, BlockedPath::None).is_err());
    }

    #[test]
    fn derived_seeds_are_distinct_and_stable() {
        let a = derived_seed(42, 0);
        let b = derived_seed(42, 1);
        assert_ne!(a, b);
        assert_eq!(a, derived_seed(42, 0));
    }

    #[test]
    fn digest_tracks_configuration_changes() {
        let cfg = RunConfig::new(10, single_photon(), reference_optics(150.0), 1);
        let base = cfg.digest();
        assert_eq!(base.len(), 16);
        let mut changed = cfg.clone();
        changed.seed = 2;
        assert_ne!(base, changed.digest());
        assert_eq!(base, cfg.digest());
    }
}
