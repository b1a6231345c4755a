//! Scenario orchestration, log persistence, and result tables.
//!
//! `run_scenario` does the compute: it drives the engine, sorts the logs,
//! applies the dark-count correction, and reduces everything to the scenario
//! outcome. `execute` wraps it with persistence: event logs, the per-phase
//! fringe CSV, the duality-sweep CSV, a JSON summary, and a run manifest.
//! Logs and tables are byte-identical across replays of the same scenario;
//! only the manifest carries timestamps.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::Serialize;

use duality_core::analysis::{
    self, complementarity_statistic, estimate_alpha, estimate_distinguishability,
    fit_fringe_visibility, ComplementarityResult, CountSummary, FringeFit, ValueWithError,
};
use duality_core::error::{Error, Result};
use duality_core::event_log::{BlockedPath, EventLog};
use duality_core::optics;
use duality_core::simulator::{
    derived_seed, run_alpha_measurement, run_blocked_path, run_phase_scan, RunConfig,
};
use duality_core::source::theoretical_alpha;
use duality_core::timing::{verify_delayed_choice_geometry, GeometryReport, IntervalClass};

use crate::scenario::{ScanSettings, Scenario, ScenarioKind};

/// Receives every event log a scenario produces, keyed by a file stem.
pub trait LogSink {
    fn emit(&mut self, stem: &str, log: &EventLog) -> Result<()>;
}

/// Drops the logs; used for in-memory analysis runs.
pub struct DiscardLogs;

impl LogSink for DiscardLogs {
    fn emit(&mut self, _stem: &str, _log: &EventLog) -> Result<()> {
        Ok(())
    }
}

/// Writes each log to `<dir>/<stem>.log`.
pub struct DirLogSink {
    dir: PathBuf,
    written: Vec<String>,
}

impl DirLogSink {
    pub fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        }
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }
}

impl LogSink for DirLogSink {
    fn emit(&mut self, stem: &str, log: &EventLog) -> Result<()> {
        let name = format!("{stem}.log");
        log.save(&self.dir.join(&name))?;
        self.written.push(name);
        Ok(())
    }
}

/// One corrected per-phase row of the fringe table.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FringePoint {
    pub phase: f64,
    pub n1: f64,
    pub n2: f64,
    pub n1_err: f64,
    pub n2_err: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FringeOutcome {
    /// Reflectivity implied by the analyzed configuration's voltage.
    pub r_nominal: f64,
    pub points: Vec<FringePoint>,
    pub fit: FringeFit,
    /// Fit of the removed-beamsplitter (bit 0) subset when the choice was
    /// randomized; its visibility should be consistent with zero.
    pub control_fit: Option<FringeFit>,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockedOutcome {
    pub r_nominal: f64,
    pub distinguishability: ValueWithError,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AlphaOutcome {
    pub alpha: ValueWithError,
    /// Closed-form alpha of the configured emission model.
    pub alpha_expected: f64,
    /// Sub-Poissonian at two sigma.
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DualityPoint {
    pub v_eom: f64,
    pub result: ComplementarityResult,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepOutcome {
    pub points: Vec<DualityPoint>,
    /// Ensemble mean of the per-point duality statistic, with the propagated
    /// error of the mean.
    pub mean_duality: ValueWithError,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CausalityOutcome {
    pub report: GeometryReport<f64>,
    pub passed: bool,
}

/// What a scenario produced, before persistence.
#[derive(Debug, Clone, Serialize)]
pub enum ScenarioOutcome {
    Causality(CausalityOutcome),
    Fringe(FringeOutcome),
    Blocked(BlockedOutcome),
    Alpha(AlphaOutcome),
    Sweep(SweepOutcome),
}

impl ScenarioOutcome {
    pub fn passed(&self) -> bool {
        match self {
            ScenarioOutcome::Causality(o) => o.passed,
            ScenarioOutcome::Fringe(o) => o.passed,
            ScenarioOutcome::Blocked(o) => o.passed,
            ScenarioOutcome::Alpha(o) => o.passed,
            ScenarioOutcome::Sweep(o) => o.passed,
        }
    }
}

fn within_two_sigma_bound(value: ValueWithError, bound: f64) -> bool {
    value.value <= bound + 2.0 * value.error
}

/// The choice-bit subset an analysis should read: the forced bit when the
/// QRNG was overridden, otherwise the beamsplitter-on (bit 1) events.
fn analyzed_bit(run: &RunConfig) -> u8 {
    run.forced_choice.unwrap_or(1)
}

fn nominal_reflectivity(run: &RunConfig, bit: u8) -> Result<f64> {
    let voltage = if bit == 1 {
        run.optics.eom_voltage
    } else {
        0.0
    };
    optics::reflectivity_from_voltage(&run.optics.with_eom_voltage(voltage))
}

fn corrected_fringe_points(
    run: &RunConfig,
    log: &EventLog,
    bit: u8,
) -> Result<Vec<(f64, CountSummary)>> {
    let counts = analysis::sort_by_configuration(log, run.geometry.clock_period_s)?;
    Ok(counts
        .fringe_points(bit)
        .into_iter()
        .map(|(phase, summary)| {
            (
                phase,
                analysis::subtract_dark_counts(&summary, &run.detector),
            )
        })
        .collect())
}

/// Phase scan plus fringe fit on the analyzed choice-bit subset.
pub fn fringe_pipeline(
    run: &RunConfig,
    scan: &ScanSettings,
    sink: &mut dyn LogSink,
    stem: &str,
) -> Result<FringeOutcome> {
    let log = run_phase_scan(run, &scan.phases, scan.triggers_per_point)?;
    sink.emit(stem, &log)?;

    let bit = analyzed_bit(run);
    let points = corrected_fringe_points(run, &log, bit)?;
    let fit = fit_fringe_visibility(&points)?;
    let control_fit = if run.forced_choice.is_none() {
        Some(fit_fringe_visibility(&corrected_fringe_points(
            run, &log, 0,
        )?)?)
    } else {
        None
    };
    let rows = points
        .iter()
        .map(|(phase, s)| FringePoint {
            phase: *phase,
            n1: s.counts_p1,
            n2: s.counts_p2,
            n1_err: s.err_p1,
            n2_err: s.err_p2,
        })
        .collect();
    Ok(FringeOutcome {
        r_nominal: nominal_reflectivity(run, bit)?,
        points: rows,
        fit,
        control_fit,
        passed: within_two_sigma_bound(fit.visibility, 1.0),
    })
}

/// Runs both blocked-path configurations (independently derived seeds) and
/// estimates the distinguishability from the analyzed subset.
pub fn blocked_pipeline(
    run: &RunConfig,
    sink: &mut dyn LogSink,
    stem_prefix: &str,
) -> Result<BlockedOutcome> {
    let bit = analyzed_bit(run);
    let mut blocked_summary =
        |which: BlockedPath, stream: u64, stem: &str| -> Result<CountSummary> {
            let mut cfg = run.clone();
            cfg.seed = derived_seed(run.seed, stream);
            let log = run_blocked_path(&cfg, which)?;
            sink.emit(stem, &log)?;
            let counts = analysis::sort_by_configuration(&log, run.geometry.clock_period_s)?;
            let summary = counts.combined(Some(bit), which).ok_or_else(|| {
                Error::InsufficientData(format!(
                    "no triggers with choice bit {bit} in the {which:?} run"
                ))
            })?;
            Ok(analysis::subtract_dark_counts(&summary, &run.detector))
        };
    let path2 = blocked_summary(
        BlockedPath::Path2,
        1,
        &format!("{stem_prefix}path2_blocked"),
    )?;
    let path1 = blocked_summary(
        BlockedPath::Path1,
        2,
        &format!("{stem_prefix}path1_blocked"),
    )?;
    let distinguishability = estimate_distinguishability(&path2, &path1)?;
    Ok(BlockedOutcome {
        r_nominal: nominal_reflectivity(run, bit)?,
        distinguishability,
        passed: within_two_sigma_bound(distinguishability, 1.0),
    })
}

/// Anticorrelation run: choice forced to 0, coincidences against singles.
pub fn alpha_pipeline(run: &RunConfig, sink: &mut dyn LogSink, stem: &str) -> Result<AlphaOutcome> {
    let log = run_alpha_measurement(run)?;
    sink.emit(stem, &log)?;
    let counts = analysis::sort_by_configuration(&log, run.geometry.clock_period_s)?;
    let summary = counts
        .combined(Some(0), BlockedPath::None)
        .ok_or_else(|| Error::InsufficientData("alpha run produced no records".into()))?;
    let corrected = analysis::subtract_dark_counts(&summary, &run.detector);
    let alpha = estimate_alpha(&corrected)?;
    Ok(AlphaOutcome {
        alpha,
        alpha_expected: theoretical_alpha(&run.emission)?,
        passed: alpha.value + 2.0 * alpha.error < 1.0,
    })
}

/// One fringe scan plus both blocked runs per sweep voltage.
pub fn sweep_pipeline(
    base: &RunConfig,
    scan: &ScanSettings,
    voltages: &[f64],
    sink: &mut dyn LogSink,
    verbose: bool,
) -> Result<SweepOutcome> {
    let mut points = Vec::with_capacity(voltages.len());
    for (i, &v_eom) in voltages.iter().enumerate() {
        let mut run = base.clone();
        run.optics.eom_voltage = v_eom;
        run.seed = derived_seed(base.seed, 100 + i as u64);
        let stem = format!("point{i:02}_");
        let fringe = fringe_pipeline(&run, scan, sink, &format!("{stem}scan"))?;
        let blocked = blocked_pipeline(&run, sink, &stem)?;
        let result = complementarity_statistic(fringe.fit.visibility, blocked.distinguishability)
            .with_r_nominal(fringe.r_nominal);
        if verbose {
            eprintln!(
                "sweep point {i}: V_EOM = {v_eom:.1} V, R = {:.3}, V = {}, D = {}, s = {}",
                fringe.r_nominal, result.visibility, result.distinguishability, result.duality
            );
        }
        points.push(DualityPoint { v_eom, result });
    }
    let passed = points.iter().all(|p| p.result.pass);
    let n = points.len() as f64;
    let mean = points.iter().map(|p| p.result.duality.value).sum::<f64>() / n;
    let error = points
        .iter()
        .map(|p| p.result.duality.error.powi(2))
        .sum::<f64>()
        .sqrt()
        / n;
    Ok(SweepOutcome {
        points,
        mean_duality: ValueWithError::new(mean, error),
        passed,
    })
}

/// Runs a scenario and reduces it to its outcome, emitting logs via `sink`.
pub fn run_scenario(scenario: &Scenario, sink: &mut dyn LogSink) -> Result<ScenarioOutcome> {
    run_scenario_verbose(scenario, sink, false)
}

pub fn run_scenario_verbose(
    scenario: &Scenario,
    sink: &mut dyn LogSink,
    verbose: bool,
) -> Result<ScenarioOutcome> {
    match scenario.kind {
        ScenarioKind::CausalityCheck => {
            let report = verify_delayed_choice_geometry(&scenario.run.geometry)?;
            Ok(ScenarioOutcome::Causality(CausalityOutcome {
                report,
                passed: report.is_spacelike(),
            }))
        }
        ScenarioKind::FringeScan => {
            let scan = required_scan(scenario)?;
            Ok(ScenarioOutcome::Fringe(fringe_pipeline(
                &scenario.run,
                scan,
                sink,
                "events",
            )?))
        }
        ScenarioKind::BlockedPath => Ok(ScenarioOutcome::Blocked(blocked_pipeline(
            &scenario.run,
            sink,
            "",
        )?)),
        ScenarioKind::Alpha => Ok(ScenarioOutcome::Alpha(alpha_pipeline(
            &scenario.run,
            sink,
            "events",
        )?)),
        ScenarioKind::DualitySweep => {
            let scan = required_scan(scenario)?;
            let voltages = scenario
                .sweep
                .as_ref()
                .ok_or_else(|| Error::Config("duality_sweep needs a sweep voltage list".into()))?;
            Ok(ScenarioOutcome::Sweep(sweep_pipeline(
                &scenario.run,
                scan,
                voltages,
                sink,
                verbose,
            )?))
        }
    }
}

fn required_scan(scenario: &Scenario) -> Result<&ScanSettings> {
    scenario
        .scan
        .as_ref()
        .ok_or_else(|| Error::Config(format!("{} needs scan settings", scenario.kind.as_str())))
}

/// Flags controlling one `execute` invocation.
#[derive(Debug, Clone)]
pub struct ExecuteOptions {
    pub out_dir: PathBuf,
    pub seed_override: Option<u64>,
    /// Per-point triggers for scan kinds, total triggers otherwise.
    pub triggers_override: Option<u64>,
    pub verbose: bool,
}

impl ExecuteOptions {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Self {
            out_dir: out_dir.into(),
            seed_override: None,
            triggers_override: None,
            verbose: false,
        }
    }
}

/// Record of one execution: digest, seed, outputs, timing, version.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub scenario_name: String,
    pub scenario_digest: String,
    pub seed: u64,
    pub outputs: Vec<String>,
    pub started_at: String,
    pub finished_at: String,
    pub version: String,
}

/// Outcome plus manifest of one persisted execution.
#[derive(Debug, Clone)]
pub struct ExecutionReport {
    pub manifest: RunManifest,
    pub outcome: ScenarioOutcome,
    pub passed: bool,
    pub out_dir: PathBuf,
}

/// Serializable summary mirroring the scenario outcome; written as
/// `summary.json` and free of timestamps so replays are byte-identical.
#[derive(Debug, Serialize)]
struct Summary<'a> {
    scenario: &'a str,
    kind: &'static str,
    seed: u64,
    geometry_class: String,
    geometry_margin_ns: f64,
    geometry_pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    r_nominal: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    visibility: Option<ValueWithError>,
    #[serde(skip_serializing_if = "Option::is_none")]
    phase_offset: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    control_visibility: Option<ValueWithError>,
    #[serde(skip_serializing_if = "Option::is_none")]
    distinguishability: Option<ValueWithError>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<ValueWithError>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha_expected: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<Vec<SweepRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_duality: Option<ValueWithError>,
    passed: bool,
}

#[derive(Debug, Serialize)]
struct SweepRow {
    v_eom: f64,
    r_nominal: f64,
    visibility: ValueWithError,
    distinguishability: ValueWithError,
    duality: ValueWithError,
    pass: bool,
}

/// Runs a scenario and persists logs, tables, summary, and manifest under
/// `opts.out_dir`. Scientific pass/fail is reported, not raised.
pub fn execute(scenario: &Scenario, opts: &ExecuteOptions) -> Result<ExecutionReport> {
    let mut scenario = scenario.clone();
    if let Some(seed) = opts.seed_override {
        scenario.run.seed = seed;
    }
    if let Some(triggers) = opts.triggers_override {
        match scenario.scan.as_mut() {
            Some(scan) => scan.triggers_per_point = triggers,
            None => {
                scenario.run.n_triggers = triggers;
                for segment in scenario.run.phase_schedule.iter_mut() {
                    segment.triggers = triggers;
                }
                scenario
                    .run
                    .validate()
                    .map_err(|e| Error::Config(format!("triggers override: {e}")))?;
            }
        }
    }

    fs::create_dir_all(&opts.out_dir)?;
    let started_at = Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true);
    let mut sink = DirLogSink::new(&opts.out_dir);
    let outcome = run_scenario_verbose(&scenario, &mut sink, opts.verbose)?;
    let mut outputs = sink.written().to_vec();

    if let ScenarioOutcome::Fringe(fringe) = &outcome {
        let path = opts.out_dir.join("fringe.csv");
        write_fringe_csv(&path, fringe)?;
        outputs.push("fringe.csv".into());
    }
    if let ScenarioOutcome::Sweep(sweep) = &outcome {
        let path = opts.out_dir.join("sweep.csv");
        write_sweep_csv(&path, sweep)?;
        outputs.push("sweep.csv".into());
    }

    let geometry = verify_delayed_choice_geometry(&scenario.run.geometry)?;
    let summary = build_summary(&scenario, &geometry, &outcome);
    let summary_path = opts.out_dir.join("summary.json");
    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    text.push('\n');
    fs::write(&summary_path, text)?;
    outputs.push("summary.json".into());

    let finished_at = Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true);
    let manifest = RunManifest {
        scenario_name: scenario.name.clone(),
        scenario_digest: scenario.digest(),
        seed: scenario.run.seed,
        outputs: outputs.clone(),
        started_at,
        finished_at,
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    let mut manifest_text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    manifest_text.push('\n');
    fs::write(opts.out_dir.join("manifest.json"), manifest_text)?;

    let passed = outcome.passed();
    Ok(ExecutionReport {
        manifest,
        outcome,
        passed,
        out_dir: opts.out_dir.clone(),
    })
}

fn build_summary<'a>(
    scenario: &'a Scenario,
    geometry: &GeometryReport<f64>,
    outcome: &ScenarioOutcome,
) -> Summary<'a> {
    let mut summary = Summary {
        scenario: &scenario.name,
        kind: scenario.kind.as_str(),
        seed: scenario.run.seed,
        geometry_class: geometry.class.to_string(),
        geometry_margin_ns: geometry.margin_ns,
        geometry_pass: geometry.class == IntervalClass::Spacelike,
        r_nominal: None,
        visibility: None,
        phase_offset: None,
        control_visibility: None,
        distinguishability: None,
        alpha: None,
        alpha_expected: None,
        sweep: None,
        mean_duality: None,
        passed: outcome.passed(),
    };
    match outcome {
        ScenarioOutcome::Causality(_) => {}
        ScenarioOutcome::Fringe(f) => {
            summary.r_nominal = Some(f.r_nominal);
            summary.visibility = Some(f.fit.visibility);
            summary.phase_offset = Some(f.fit.phase_offset);
            summary.control_visibility = f.control_fit.map(|c| c.visibility);
        }
        ScenarioOutcome::Blocked(b) => {
            summary.r_nominal = Some(b.r_nominal);
            summary.distinguishability = Some(b.distinguishability);
        }
        ScenarioOutcome::Alpha(a) => {
            summary.alpha = Some(a.alpha);
            summary.alpha_expected = Some(a.alpha_expected);
        }
        ScenarioOutcome::Sweep(s) => {
            summary.sweep = Some(
                s.points
                    .iter()
                    .map(|p| SweepRow {
                        v_eom: p.v_eom,
                        r_nominal: p.result.r_nominal.unwrap_or(f64::NAN),
                        visibility: p.result.visibility,
                        distinguishability: p.result.distinguishability,
                        duality: p.result.duality,
                        pass: p.result.pass,
                    })
                    .collect(),
            );
            summary.mean_duality = Some(s.mean_duality);
        }
    }
    summary
}

fn write_fringe_csv(path: &Path, outcome: &FringeOutcome) -> Result<()> {
    let mut out = String::from("phase_rad,n1,n2,n1_err,n2_err\n");
    for p in &outcome.points {
        out.push_str(&format!(
            "{:.6},{:.3},{:.3},{:.3},{:.3}\n",
            p.phase, p.n1, p.n2, p.n1_err, p.n2_err
        ));
    }
    fs::File::create(path)?.write_all(out.as_bytes())?;
    Ok(())
}

fn write_sweep_csv(path: &Path, outcome: &SweepOutcome) -> Result<()> {
    let mut out = String::from("v_eom,r_nominal,v_squared,d_squared,duality\n");
    for p in &outcome.points {
        out.push_str(&format!(
            "{:.3},{:.6},{:.6},{:.6},{:.6}\n",
            p.v_eom,
            p.result.r_nominal.unwrap_or(f64::NAN),
            p.result.visibility.value.powi(2),
            p.result.distinguishability.value.powi(2),
            p.result.duality.value
        ));
    }
    fs::File::create(path)?.write_all(out.as_bytes())?;
    Ok(())
}
