//! Scenario configuration files.
//!
//! A scenario is a TOML file selecting one measurement kind plus the run
//! parameters. Every field is optional except `kind`; omitted values fall
//! back to the published operating point of the experiment (EOM angle 24
//! degrees, half-wave voltage 217 V, 238 ns clock, 60 Hz dark counts, 48 m
//! propagation geometry).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use duality_core::error::{Error, Result};
use duality_core::optics;
use duality_core::simulator::{DetectorModel, PhaseSegment, RunConfig};
use duality_core::{EmissionModel, GeometryConfig, InterferometerConfig};

/// Default per-trigger one-photon probability; sized so desk-scale runs
/// produce usable count rates within seconds.
pub const DEFAULT_P_SINGLE: f64 = 0.02;
/// Default EOM voltage, the R = 0.43 operating point.
pub const DEFAULT_EOM_VOLTAGE: f64 = 150.0;
pub const DEFAULT_TRIGGERS: u64 = 100_000;
pub const DEFAULT_SCAN_PHASES: usize = 16;
pub const DEFAULT_TRIGGERS_PER_POINT: u64 = 50_000;

/// Measurement kinds a scenario can request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Phase scan of the open interferometer; fits the fringe visibility.
    FringeScan,
    /// Both blocked-path runs; estimates the distinguishability.
    BlockedPath,
    /// Anticorrelation run with the choice forced to 0 (no beamsplitter).
    Alpha,
    /// Fringe scan plus blocked runs per EOM voltage; emits V^2 + D^2.
    DualitySweep,
    /// Classifies the choice/entry spacetime interval; no simulation.
    CausalityCheck,
}

impl ScenarioKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioKind::FringeScan => "fringe_scan",
            ScenarioKind::BlockedPath => "blocked_path",
            ScenarioKind::Alpha => "alpha",
            ScenarioKind::DualitySweep => "duality_sweep",
            ScenarioKind::CausalityCheck => "causality_check",
        }
    }
}

/// Phase grid of a fringe scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanSettings {
    pub phases: Vec<f64>,
    pub triggers_per_point: u64,
}

/// A fully resolved, validated scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub name: String,
    pub kind: ScenarioKind,
    pub run: RunConfig,
    /// Present for fringe_scan and duality_sweep.
    pub scan: Option<ScanSettings>,
    /// EOM voltages of a duality_sweep.
    pub sweep: Option<Vec<f64>>,
}

impl Scenario {
    /// Digest of the canonical serialized scenario; stable under key
    /// reordering in the config file.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(self).expect("scenario serializes");
        let hash = Sha256::digest(canonical.as_bytes());
        hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Nominal reflectivity for each sweep voltage.
    pub fn sweep_reflectivities(&self) -> Result<Vec<(f64, f64)>> {
        let voltages = self.sweep.clone().unwrap_or_default();
        voltages
            .into_iter()
            .map(|v| {
                let cfg = self.run.optics.with_eom_voltage(v);
                Ok((v, optics::reflectivity_from_voltage(&cfg)?))
            })
            .collect()
    }
}

// Raw on-disk schema: everything optional, unknown keys rejected.

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: Option<String>,
    kind: String,
    run: Option<RawRun>,
    scan: Option<RawScan>,
    sweep: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    n_triggers: Option<u64>,
    seed: Option<u64>,
    qrng_offset: Option<f64>,
    force_choice: Option<u8>,
    require_spacelike: Option<bool>,
    emission: Option<RawEmission>,
    optics: Option<RawOptics>,
    detector: Option<RawDetector>,
    geometry: Option<RawGeometry>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEmission {
    p_single: Option<f64>,
    p_double: Option<f64>,
    /// Convenience: solve for p_double so the source reaches this alpha.
    target_alpha: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOptics {
    eom_angle_deg: Option<f64>,
    half_wave_voltage: Option<f64>,
    eom_voltage: Option<f64>,
    phase: Option<f64>,
    contrast: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDetector {
    efficiency: Option<f64>,
    dark_rate_hz: Option<f64>,
    gate_s: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeometry {
    path_length_m: Option<f64>,
    flight_time_s: Option<f64>,
    clock_period_s: Option<f64>,
    choice_position_m: Option<f64>,
    choice_delay_s: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScan {
    phases: Option<Vec<f64>>,
    /// Evenly spaced phases over [0, 2 pi) when an explicit list is absent.
    n_phases: Option<usize>,
    triggers_per_point: Option<u64>,
}

/// Reads and resolves a scenario file.
pub fn load_config(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_scenario(&text)
}

/// Parses scenario TOML text, applies defaults, validates.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let raw: RawScenario =
        toml::from_str(text).map_err(|e| Error::Config(format!("config parse error: {e}")))?;
    resolve(raw)
}

fn parse_kind(kind: &str) -> Result<ScenarioKind> {
    match kind {
        "fringe_scan" => Ok(ScenarioKind::FringeScan),
        "blocked_path" => Ok(ScenarioKind::BlockedPath),
        "alpha" => Ok(ScenarioKind::Alpha),
        "duality_sweep" => Ok(ScenarioKind::DualitySweep),
        "causality_check" => Ok(ScenarioKind::CausalityCheck),
        other => Err(Error::Config(format!(
            "kind: unknown scenario kind '{other}' (expected fringe_scan, blocked_path, \
             alpha, duality_sweep, or causality_check)"
        ))),
    }
}

fn resolve(raw: RawScenario) -> Result<Scenario> {
    let kind = parse_kind(&raw.kind)?;
    let name = raw.name.unwrap_or_else(|| kind.as_str().to_string());
    let run_raw = raw.run.unwrap_or_default();

    let geometry = resolve_geometry(run_raw.geometry.unwrap_or_default())?;
    let detector = resolve_detector(run_raw.detector.unwrap_or_default(), &geometry)?;
    let emission = resolve_emission(run_raw.emission.unwrap_or_default())?;
    let optics_cfg = resolve_optics(run_raw.optics.unwrap_or_default())?;

    let n_triggers = run_raw.n_triggers.unwrap_or(DEFAULT_TRIGGERS);
    if n_triggers == 0 {
        return Err(Error::Config("run.n_triggers: must be > 0".into()));
    }
    if let Some(bit) = run_raw.force_choice {
        if bit > 1 {
            return Err(Error::Config(format!(
                "run.force_choice: must be 0 or 1 (got {bit})"
            )));
        }
    }

    let mut run = RunConfig::new(n_triggers, emission, optics_cfg, run_raw.seed.unwrap_or(1));
    run.detector = detector;
    run.geometry = geometry;
    run.qrng_offset = run_raw.qrng_offset.unwrap_or(0.0);
    run.forced_choice = run_raw.force_choice;
    run.require_spacelike = run_raw.require_spacelike.unwrap_or(true);
    run.validate()
        .map_err(|e| Error::Config(format!("run: {e}")))?;

    let wants_scan = matches!(kind, ScenarioKind::FringeScan | ScenarioKind::DualitySweep);
    if raw.scan.is_some() && !wants_scan {
        return Err(Error::Config(format!(
            "scan: only valid for fringe_scan and duality_sweep (kind is {})",
            kind.as_str()
        )));
    }
    let scan = if wants_scan {
        Some(resolve_scan(raw.scan.unwrap_or_default())?)
    } else {
        None
    };

    if raw.sweep.is_some() && kind != ScenarioKind::DualitySweep {
        return Err(Error::Config(format!(
            "sweep: only valid for duality_sweep (kind is {})",
            kind.as_str()
        )));
    }
    let sweep = if kind == ScenarioKind::DualitySweep {
        let voltages = raw
            .sweep
            .unwrap_or_else(|| (0..=17).map(|k| 10.0 * k as f64).collect());
        if voltages.is_empty() {
            return Err(Error::Config(
                "sweep: must list at least one voltage".into(),
            ));
        }
        for (i, v) in voltages.iter().enumerate() {
            if !(*v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!(
                    "sweep[{i}]: voltages must be >= 0 (got {v})"
                )));
            }
        }
        Some(voltages)
    } else {
        None
    };

    Ok(Scenario {
        name,
        kind,
        run,
        scan,
        sweep,
    })
}

fn resolve_geometry(raw: RawGeometry) -> Result<GeometryConfig> {
    let defaults = GeometryConfig::default();
    let geometry = GeometryConfig {
        path_length_m: raw.path_length_m.unwrap_or(defaults.path_length_m),
        flight_time_s: raw.flight_time_s.unwrap_or(defaults.flight_time_s),
        clock_period_s: raw.clock_period_s.unwrap_or(defaults.clock_period_s),
        choice_position_m: raw.choice_position_m.unwrap_or(defaults.choice_position_m),
        choice_delay_s: raw.choice_delay_s.unwrap_or(defaults.choice_delay_s),
    };
    geometry
        .validate()
        .map_err(|e| Error::Config(format!("run.geometry: {e}")))?;
    Ok(geometry)
}

fn resolve_detector(raw: RawDetector, geometry: &GeometryConfig) -> Result<DetectorModel> {
    let defaults = DetectorModel::default();
    let detector = DetectorModel {
        efficiency: raw.efficiency.unwrap_or(defaults.efficiency),
        dark_rate_hz: raw.dark_rate_hz.unwrap_or(defaults.dark_rate_hz),
        // Dark counts accrue over one clock period unless stated otherwise.
        gate_s: raw.gate_s.unwrap_or(geometry.clock_period_s),
    };
    detector
        .validate()
        .map_err(|e| Error::Config(format!("run.detector: {e}")))?;
    Ok(detector)
}

fn resolve_emission(raw: RawEmission) -> Result<EmissionModel> {
    let p_single = raw.p_single.unwrap_or(DEFAULT_P_SINGLE);
    let model = match (raw.p_double, raw.target_alpha) {
        (Some(_), Some(_)) => {
            return Err(Error::Config(
                "run.emission: set either p_double or target_alpha, not both".into(),
            ))
        }
        (Some(p_double), None) => EmissionModel::new(p_single, p_double),
        (None, Some(alpha)) => EmissionModel::for_target_alpha(p_single, alpha),
        (None, None) => EmissionModel::new(p_single, 0.0),
    };
    model.map_err(|e| Error::Config(format!("run.emission: {e}")))
}

fn resolve_optics(raw: RawOptics) -> Result<InterferometerConfig> {
    InterferometerConfig::new(
        raw.eom_angle_deg.unwrap_or(24.0),
        raw.half_wave_voltage.unwrap_or(217.0),
        raw.eom_voltage.unwrap_or(DEFAULT_EOM_VOLTAGE),
        raw.phase.unwrap_or(0.0),
        raw.contrast.unwrap_or(1.0),
    )
    .map_err(|e| Error::Config(format!("run.optics: {e}")))
}

fn resolve_scan(raw: RawScan) -> Result<ScanSettings> {
    let phases = match (raw.phases, raw.n_phases) {
        (Some(_), Some(_)) => {
            return Err(Error::Config(
                "scan: set either phases or n_phases, not both".into(),
            ))
        }
        (Some(phases), None) => phases,
        (None, n) => {
            let n = n.unwrap_or(DEFAULT_SCAN_PHASES);
            if n < 4 {
                return Err(Error::Config(format!(
                    "scan.n_phases: need at least 4 phases for a fringe fit (got {n})"
                )));
            }
            (0..n)
                .map(|k| 2.0 * std::f64::consts::PI * k as f64 / n as f64)
                .collect()
        }
    };
    if phases.len() < 4 {
        return Err(Error::Config(format!(
            "scan.phases: need at least 4 phases for a fringe fit (got {})",
            phases.len()
        )));
    }
    if phases.iter().any(|p| !p.is_finite()) {
        return Err(Error::Config("scan.phases: must be finite".into()));
    }
    let triggers_per_point = raw.triggers_per_point.unwrap_or(DEFAULT_TRIGGERS_PER_POINT);
    if triggers_per_point == 0 {
        return Err(Error::Config("scan.triggers_per_point: must be > 0".into()));
    }
    Ok(ScanSettings {
        phases,
        triggers_per_point,
    })
}

/// The phase schedule a scan scenario will actually run.
pub fn scan_schedule(scan: &ScanSettings) -> Vec<PhaseSegment> {
    scan.phases
        .iter()
        .map(|&phase| PhaseSegment {
            phase,
            triggers: scan.triggers_per_point,
        })
        .collect()
}
