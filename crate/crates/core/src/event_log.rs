//! Per-trigger event records and their on-disk format.
//!
//! Raw data are saved in full and processed only after a run completes, so
//! the log is the single source of truth for every estimator. The format is
//! line-delimited text: one header line carrying the format version and the
//! run-configuration digest, then one comma-separated record per trigger.
//! Field order matches [`TriggerRecord`]; booleans are 0/1, voltages carry
//! 3 decimals, phases 6 decimals. A given seed reproduces the file
//! byte-for-byte.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LOG_FORMAT_NAME: &str = "duality-eventlog";
pub const LOG_FORMAT_VERSION: u32 = 1;

/// Which interferometer arm, if any, is physically blocked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockedPath {
    None,
    Path1,
    Path2,
}

impl BlockedPath {
    fn to_code(self) -> u8 {
        match self {
            BlockedPath::None => 0,
            BlockedPath::Path1 => 1,
            BlockedPath::Path2 => 2,
        }
    }

    fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(BlockedPath::None),
            1 => Some(BlockedPath::Path1),
            2 => Some(BlockedPath::Path2),
            _ => None,
        }
    }
}

/// Everything recorded for one clock trigger.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriggerRecord {
    pub trigger_index: u64,
    /// QRNG output applied to this trigger: 0 = beamsplitter removed, 1 = set.
    pub choice_bit: u8,
    /// Voltage actually applied to the EOM, volts (0 when choice_bit = 0).
    pub applied_v_eom: f64,
    /// Arm dephasing during this trigger, radians.
    pub phase: f64,
    pub blocked_path: BlockedPath,
    pub click_p1: bool,
    pub click_p2: bool,
    /// Ground truth for oracle validation only; estimators never read it.
    pub photon_count_emitted: u8,
}

impl TriggerRecord {
    fn write_line(&self, out: &mut String) {
        let _ = write!(
            out,
            "{},{},{:.3},{:.6},{},{},{},{}",
            self.trigger_index,
            self.choice_bit,
            self.applied_v_eom,
            self.phase,
            self.blocked_path.to_code(),
            u8::from(self.click_p1),
            u8::from(self.click_p2),
            self.photon_count_emitted,
        );
    }

    fn parse_line(line: &str, line_number: usize) -> Result<Self> {
        let err = |msg: String| Error::Parse {
            line: line_number,
            msg,
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(err(format!("expected 8 fields, found {}", fields.len())));
        }
        let trigger_index: u64 = fields[0]
            .parse()
            .map_err(|e| err(format!("trigger_index: {e}")))?;
        let choice_bit: u8 = fields[1]
            .parse()
            .map_err(|e| err(format!("choice_bit: {e}")))?;
        if choice_bit > 1 {
            return Err(err(format!("choice_bit must be 0 or 1 (got {choice_bit})")));
        }
        let applied_v_eom: f64 = fields[2]
            .parse()
            .map_err(|e| err(format!("applied_v_eom: {e}")))?;
        let phase: f64 = fields[3].parse().map_err(|e| err(format!("phase: {e}")))?;
        let blocked_code: u8 = fields[4]
            .parse()
            .map_err(|e| err(format!("blocked_path: {e}")))?;
        let blocked_path = BlockedPath::from_code(blocked_code).ok_or_else(|| {
            err(format!(
                "blocked_path code must be 0..=2 (got {blocked_code})"
            ))
        })?;
        let click = |s: &str, name: &str| -> Result<bool> {
            match s {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(err(format!("{name} must be 0 or 1 (got {other})"))),
            }
        };
        let click_p1 = click(fields[5], "click_p1")?;
        let click_p2 = click(fields[6], "click_p2")?;
        let photon_count_emitted: u8 = fields[7]
            .parse()
            .map_err(|e| err(format!("photon_count_emitted: {e}")))?;
        if photon_count_emitted > 2 {
            return Err(err(format!(
                "photon_count_emitted must be 0..=2 (got {photon_count_emitted})"
            )));
        }
        if choice_bit == 0 && applied_v_eom != 0.0 {
            return Err(err(format!(
                "choice_bit = 0 requires applied_v_eom = 0 (got {applied_v_eom})"
            )));
        }
        Ok(Self {
            trigger_index,
            choice_bit,
            applied_v_eom,
            phase,
            blocked_path,
            click_p1,
            click_p2,
            photon_count_emitted,
        })
    }
}

/// Log header: format version plus a digest of the generating configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LogHeader {
    pub format_version: u32,
    pub config_digest: String,
}

/// Ordered, immutable record of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    pub header: LogHeader,
    records: Vec<TriggerRecord>,
}

impl EventLog {
    /// Builds a log, enforcing that records are sorted by trigger index.
    pub fn new(header: LogHeader, records: Vec<TriggerRecord>) -> Result<Self> {
        if let Some(pair) = records
            .windows(2)
            .find(|w| w[0].trigger_index >= w[1].trigger_index)
        {
            return Err(Error::Config(format!(
                "records must be strictly sorted by trigger_index (saw {} then {})",
                pair[0].trigger_index, pair[1].trigger_index
            )));
        }
        Ok(Self { header, records })
    }

    pub fn records(&self) -> &[TriggerRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Renders the full log in its on-disk text form.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(32 * (self.records.len() + 1));
        let _ = writeln!(
            out,
            "{},{},{}",
            LOG_FORMAT_NAME, self.header.format_version, self.header.config_digest
        );
        for record in &self.records {
            record.write_line(&mut out);
            out.push('\n');
        }
        out
    }

    pub fn write_to<W: Write>(&self, writer: &mut W) -> Result<()> {
        writer.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut writer = BufWriter::new(File::create(path)?);
        self.write_to(&mut writer)?;
        writer.flush()?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header_line = lines.next().transpose()?.ok_or_else(|| Error::Parse {
            line: 1,
            msg: "missing header line".into(),
        })?;
        let header = parse_header(&header_line)?;
        let mut records = Vec::new();
        for (i, line) in lines.enumerate() {
            let line_number = i + 2;
            let line = line?;
            if line.is_empty() {
                continue;
            }
            records.push(TriggerRecord::parse_line(&line, line_number)?);
        }
        if let Some(pair) = records
            .windows(2)
            .find(|w| w[0].trigger_index >= w[1].trigger_index)
        {
            return Err(Error::Parse {
                line: 0,
                msg: format!(
                    "records not sorted by trigger_index (saw {} then {})",
                    pair[0].trigger_index, pair[1].trigger_index
                ),
            });
        }
        Ok(Self { header, records })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

fn parse_header(line: &str) -> Result<LogHeader> {
    let err = |msg: String| Error::Parse { line: 1, msg };
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 3 || fields[0] != LOG_FORMAT_NAME {
        return Err(err(format!(
            "header must be '{LOG_FORMAT_NAME},<version>,<digest>' (got '{line}')"
        )));
    }
    let format_version: u32 = fields[1]
        .parse()
        .map_err(|e| err(format!("format version: {e}")))?;
    if format_version != LOG_FORMAT_VERSION {
        return Err(err(format!(
            "unsupported format version {format_version} (expected {LOG_FORMAT_VERSION})"
        )));
    }
    Ok(LogHeader {
        format_version,
        config_digest: fields[2].to_string(),
    })
}
