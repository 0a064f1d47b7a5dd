//! Machine-readable output: JSON lines or CSV check records, CSV profiles
//! and solutions, and the run manifest. Floats are written with 17
//! significant digits so every value round-trips exactly.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use nonlocal_core::lemma::CheckRecord;
use nonlocal_core::probe::OscillationProfile;
use nonlocal_core::GridFunction;
use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::LabError;

/// `x` in scientific notation with 17 significant digits; non-finite values
/// become `null` in JSON and the empty string in CSV.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn ser_f64<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        let raw = serde_json::value::RawValue::from_string(fmt_f64(*x)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    } else {
        s.serialize_none()
    }
}

fn ser_inputs<S: Serializer>(m: &BTreeMap<String, f64>, s: S) -> Result<S::Ok, S::Error> {
    struct F(f64);
    impl Serialize for F {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            ser_f64(&self.0, s)
        }
    }
    let mut map = s.serialize_map(Some(m.len()))?;
    for (k, v) in m {
        map.serialize_entry(k, &F(*v))?;
    }
    map.end()
}

/// One check `lhs ≤ rhs` (or an informational value with `lhs = rhs`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub check: String,
    #[serde(serialize_with = "ser_inputs")]
    pub inputs: BTreeMap<String, f64>,
    #[serde(serialize_with = "ser_f64")]
    pub lhs: f64,
    #[serde(serialize_with = "ser_f64")]
    pub rhs: f64,
    #[serde(serialize_with = "ser_f64")]
    pub margin: f64,
    pub pass: bool,
}

impl Record {
    pub fn new(check: impl Into<String>, inputs: &[(&str, f64)], lhs: f64, rhs: f64, margin: f64, pass: bool) -> Self {
        Self { check: check.into(), inputs: inputs.iter().map(|&(k, v)| (k.to_string(), v)).collect(), lhs, rhs, margin, pass }
    }

    /// A reported value that is not compared against anything.
    pub fn value(check: impl Into<String>, inputs: &[(&str, f64)], v: f64) -> Self {
        Self::new(check, inputs, v, v, 0.0, true)
    }
}

impl From<&CheckRecord> for Record {
    fn from(c: &CheckRecord) -> Self {
        Self {
            check: format!("{}:{}", c.lemma, c.kind),
            inputs: c.inputs.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
            lhs: c.lhs,
            rhs: c.rhs,
            margin: c.margin,
            pass: c.pass,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

pub const RECORD_HEADER: [&str; 6] = ["check", "inputs", "lhs", "rhs", "margin", "pass"];

fn io(path: &Path, e: impl std::fmt::Display) -> LabError {
    LabError::Io(format!("{}: {e}", path.display()))
}

fn csv_f64(x: f64) -> String {
    if x.is_finite() {
        fmt_f64(x)
    } else {
        String::new()
    }
}

pub fn render_records(records: &[Record], format: Format) -> Result<Vec<u8>, LabError> {
    let mut out = Vec::new();
    match format {
        Format::Json => {
            for r in records {
                serde_json::to_writer(&mut out, r).map_err(|e| LabError::Io(e.to_string()))?;
                out.push(b'\n');
            }
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(RECORD_HEADER).map_err(|e| LabError::Io(e.to_string()))?;
            for r in records {
                let inputs = r.inputs.iter().map(|(k, v)| format!("{k}={}", csv_f64(*v))).collect::<Vec<_>>().join(";");
                w.write_record([r.check.clone(), inputs, csv_f64(r.lhs), csv_f64(r.rhs), csv_f64(r.margin), r.pass.to_string()])
                    .map_err(|e| LabError::Io(e.to_string()))?;
            }
            w.flush().map_err(|e| LabError::Io(e.to_string()))?;
            drop(w);
        }
    }
    Ok(out)
}

/// Writes `report.jsonl` or `report.csv` into `dir`.
pub fn emit_report(records: &[Record], format: Format, dir: &Path) -> Result<PathBuf, LabError> {
    let path = dir.join(match format {
        Format::Json => "report.jsonl",
        Format::Csv => "report.csv",
    });
    write_bytes(&path, &render_records(records, format)?)?;
    Ok(path)
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), LabError> {
    let mut f = std::fs::File::create(path).map_err(|e| io(path, e))?;
    f.write_all(bytes).map_err(|e| io(path, e))
}

fn write_rows(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<(), LabError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io(path, e))?;
    w.write_record(header).map_err(|e| io(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| io(path, e))?;
    }
    w.flush().map_err(|e| io(path, e))
}

/// `k, radius, osc` per dyadic level.
pub fn write_profile(path: &Path, p: &OscillationProfile) -> Result<(), LabError> {
    write_rows(path, &["k", "radius", "osc"], p.osc.iter().enumerate().map(|(k, &o)| vec![k.to_string(), fmt_f64(p.radius(k)), fmt_f64(o)]))
}

/// Node coordinates, value and whether the node belongs to the domain.
pub fn write_solution(path: &Path, u: &GridFunction) -> Result<(), LabError> {
    let d = u.grid.d;
    let header: &[&str] = if d == 1 { &["x", "value", "domain"] } else { &["x", "y", "value", "domain"] };
    let rows = (0..u.grid.len()).map(|n| {
        let p = u.grid.node(n);
        let mut row: Vec<String> = (0..d).map(|a| fmt_f64(p.0[a])).collect();
        row.push(fmt_f64(u.values[n]));
        row.push(u.mask[n].to_string());
        row
    });
    write_rows(path, header, rows)
}

/// Reads back a solution file as `(coordinates, value)` rows.
pub fn read_solution(path: &Path) -> Result<Vec<(Vec<f64>, f64)>, LabError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io(path, e))?;
    let mut out = Vec::new();
    for row in r.records() {
        let row = row.map_err(|e| io(path, e))?;
        let n = row.len() - 2;
        let nums: Result<Vec<f64>, _> = row.iter().take(n + 1).map(str::parse::<f64>).collect();
        let nums = nums.map_err(|e| io(path, e))?;
        out.push((nums[..n].to_vec(), nums[n]));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// SHA-256 of the configuration file's bytes.
    pub config_hash: String,
    pub seed: u64,
    pub tolerance_scale: f64,
    pub wall_time_s: f64,
    pub checks_passed: usize,
    pub checks_failed: usize,
    pub outputs: Vec<String>,
    /// Command-specific details (iterations, residuals, pair strides).
    pub details: BTreeMap<String, f64>,
}

pub fn config_hash(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn write_manifest(dir: &Path, m: &RunManifest) -> Result<PathBuf, LabError> {
    let path = dir.join("manifest.json");
    let bytes = serde_json::to_vec_pretty(m).map_err(|e| LabError::Io(e.to_string()))?;
    write_bytes(&path, &bytes)?;
    Ok(path)
}
