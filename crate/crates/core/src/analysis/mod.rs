//! Post-run estimation over immutable event logs.
//!
//! Raw logs are first sorted into per-configuration count summaries keyed by
//! (choice bit, phase, blocked path), then background-corrected, and finally
//! reduced to visibility, distinguishability, anticorrelation, and the
//! duality statistic with propagated Poisson errors. Estimators only ever see
//! detector clicks; the simulation-only ground-truth fields are ignored.

pub mod estimators;
pub mod fringe;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::event_log::{BlockedPath, EventLog};
use crate::simulator::DetectorModel;

pub use estimators::{
    complementarity_statistic, estimate_alpha, estimate_distinguishability, ComplementarityResult,
};
pub use fringe::{fit_fringe_visibility, FringeFit};

/// A point estimate with its one-sigma uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValueWithError {
    pub value: f64,
    pub error: f64,
}

impl ValueWithError {
    pub fn new(value: f64, error: f64) -> Self {
        Self { value, error }
    }
}

impl std::fmt::Display for ValueWithError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.4} +/- {:.4}", self.value, self.error)
    }
}

/// Detector counts of one configuration, with Poisson errors.
///
/// Counts are real-valued because background subtraction shifts them off the
/// integer grid; fresh summaries built from a log carry `sqrt(n)` errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountSummary {
    pub counts_p1: f64,
    pub counts_p2: f64,
    pub coincidences: f64,
    pub triggers: u64,
    pub duration_s: f64,
    pub err_p1: f64,
    pub err_p2: f64,
    pub err_coinc: f64,
    /// Set when background subtraction clamped a count at zero.
    pub clamped: bool,
}

impl CountSummary {
    pub fn from_raw(
        counts_p1: u64,
        counts_p2: u64,
        coincidences: u64,
        triggers: u64,
        duration_s: f64,
    ) -> Result<Self> {
        if coincidences > counts_p1.min(counts_p2) {
            return Err(Error::Config(format!(
                "coincidences ({coincidences}) cannot exceed the smaller singles count \
                 ({} / {})",
                counts_p1, counts_p2
            )));
        }
        if !(duration_s >= 0.0 && duration_s.is_finite()) {
            return Err(Error::Config(format!(
                "duration_s must be >= 0 (got {duration_s})"
            )));
        }
        Ok(Self {
            counts_p1: counts_p1 as f64,
            counts_p2: counts_p2 as f64,
            coincidences: coincidences as f64,
            triggers,
            duration_s,
            err_p1: (counts_p1 as f64).sqrt(),
            err_p2: (counts_p2 as f64).sqrt(),
            err_coinc: (coincidences as f64).sqrt(),
            clamped: false,
        })
    }

    /// Total clicks on both detectors.
    pub fn total_clicks(&self) -> f64 {
        self.counts_p1 + self.counts_p2
    }

    /// Associative merge of two summaries (counts add, errors in quadrature).
    pub fn merge(&self, other: &Self) -> Self {
        Self {
            counts_p1: self.counts_p1 + other.counts_p1,
            counts_p2: self.counts_p2 + other.counts_p2,
            coincidences: self.coincidences + other.coincidences,
            triggers: self.triggers + other.triggers,
            duration_s: self.duration_s + other.duration_s,
            err_p1: self.err_p1.hypot(other.err_p1),
            err_p2: self.err_p2.hypot(other.err_p2),
            err_coinc: self.err_coinc.hypot(other.err_coinc),
            clamped: self.clamped || other.clamped,
        }
    }
}

/// One interferometer configuration as recorded in the log. Phases are keyed
/// on the microradian grid of the on-disk format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct ConfigKey {
    pub choice_bit: u8,
    pub phase_micro_rad: i64,
    pub blocked_path: BlockedPath,
}

impl ConfigKey {
    pub fn phase(&self) -> f64 {
        self.phase_micro_rad as f64 / 1e6
    }
}

/// Per-configuration count summaries of one event log.
#[derive(Debug, Clone)]
pub struct ConfigurationCounts {
    map: BTreeMap<ConfigKey, CountSummary>,
}

impl ConfigurationCounts {
    pub fn iter(&self) -> impl Iterator<Item = (&ConfigKey, &CountSummary)> {
        self.map.iter()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn get(&self, key: &ConfigKey) -> Option<&CountSummary> {
        self.map.get(key)
    }

    pub fn total_triggers(&self) -> u64 {
        self.map.values().map(|s| s.triggers).sum()
    }

    /// Per-phase summaries of the open interferometer for one choice bit,
    /// ascending in phase.
    pub fn fringe_points(&self, choice_bit: u8) -> Vec<(f64, CountSummary)> {
        self.map
            .iter()
            .filter(|(k, _)| k.choice_bit == choice_bit && k.blocked_path == BlockedPath::None)
            .map(|(k, s)| (k.phase(), *s))
            .collect()
    }

    /// Merges every configuration matching the filters into one summary.
    pub fn combined(
        &self,
        choice_bit: Option<u8>,
        blocked_path: BlockedPath,
    ) -> Option<CountSummary> {
        self.map
            .iter()
            .filter(|(k, _)| {
                choice_bit.is_none_or(|bit| k.choice_bit == bit) && k.blocked_path == blocked_path
            })
            .map(|(_, s)| *s)
            .reduce(|a, b| a.merge(&b))
    }
}

/// Partitions a log into per-configuration counts. `clock_period_s` converts
/// trigger counts into acquisition durations for rate-based corrections.
pub fn sort_by_configuration(log: &EventLog, clock_period_s: f64) -> Result<ConfigurationCounts> {
    if !(clock_period_s > 0.0 && clock_period_s.is_finite()) {
        return Err(Error::Config(format!(
            "clock_period_s must be > 0 (got {clock_period_s})"
        )));
    }
    #[derive(Default)]
    struct Acc {
        n1: u64,
        n2: u64,
        coinc: u64,
        triggers: u64,
    }
    let mut acc: BTreeMap<ConfigKey, Acc> = BTreeMap::new();
    for (i, record) in log.records().iter().enumerate() {
        if !record.phase.is_finite() {
            return Err(Error::Parse {
                line: i + 2,
                msg: format!("non-finite phase {}", record.phase),
            });
        }
        let key = ConfigKey {
            choice_bit: record.choice_bit,
            phase_micro_rad: (record.phase * 1e6).round() as i64,
            blocked_path: record.blocked_path,
        };
        let entry = acc.entry(key).or_default();
        entry.triggers += 1;
        entry.n1 += u64::from(record.click_p1);
        entry.n2 += u64::from(record.click_p2);
        entry.coinc += u64::from(record.click_p1 && record.click_p2);
    }
    let mut map = BTreeMap::new();
    for (key, a) in acc {
        let summary = CountSummary::from_raw(
            a.n1,
            a.n2,
            a.coinc,
            a.triggers,
            a.triggers as f64 * clock_period_s,
        )?;
        map.insert(key, summary);
    }
    Ok(ConfigurationCounts { map })
}

/// Subtracts the expected dark-count background.
///
/// Singles lose `dark_rate * duration` each; coincidences lose the accidental
/// dark/dark rate `triggers * (dark_rate * gate)^2`. Results are clamped at
/// zero (flagged) and the background's Poisson variance is added to the
/// errors in quadrature.
pub fn subtract_dark_counts(raw: &CountSummary, detector: &DetectorModel) -> CountSummary {
    if detector.dark_rate_hz == 0.0 {
        return *raw;
    }
    let background = detector.dark_rate_hz * raw.duration_s;
    let accidental = raw.triggers as f64 * (detector.dark_rate_hz * detector.gate_s).powi(2);

    let mut clamped = raw.clamped;
    let mut subtract = |count: f64, expected: f64| -> f64 {
        let corrected = count - expected;
        // Flag only when real signal was consumed by the subtraction.
        if count > 0.0 && corrected <= 0.0 && expected > 0.0 {
            clamped = true;
        }
        corrected.max(0.0)
    };
    let counts_p1 = subtract(raw.counts_p1, background);
    let counts_p2 = subtract(raw.counts_p2, background);
    let mut coincidences = subtract(raw.coincidences, accidental);
    // Keep the coincidence invariant after independent clamping.
    if coincidences > counts_p1.min(counts_p2) {
        coincidences = counts_p1.min(counts_p2);
        clamped = true;
    }
    CountSummary {
        counts_p1,
        counts_p2,
        coincidences,
        triggers: raw.triggers,
        duration_s: raw.duration_s,
        err_p1: (raw.err_p1.powi(2) + background).sqrt(),
        err_p2: (raw.err_p2.powi(2) + background).sqrt(),
        err_coinc: (raw.err_coinc.powi(2) + accidental).sqrt(),
        clamped,
    }
}
