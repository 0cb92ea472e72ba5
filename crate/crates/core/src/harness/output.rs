//! Run outputs: `timeseries.csv`, `snapshots.csv` and `manifest.json`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{ErrorRecord, ScenarioConfig, ScenarioOutcome, Summary, FORMAT_VERSION};
use crate::error::{Error, Result};

pub const OUTPUT_ROOT_ENV: &str = "O2LYAP_OUTPUT_ROOT";
pub const DEFAULT_OUTPUT_ROOT: &str = "o2lyap-runs";
pub const TIMESERIES_FILE: &str = "timeseries.csv";
pub const SNAPSHOT_FILE: &str = "snapshots.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

pub const TIMESERIES_COLUMNS: [&str; 13] = [
    "t",
    "V",
    "dissipation",
    "residual",
    "convexity_min",
    "ut_inf",
    "fourier_a1",
    "fourier_b1",
    "off_span",
    "planar_a",
    "planar_b",
    "shift",
    "shift_error",
];

pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT))
}

/// 64-bit FNV-1a, used to fingerprint configurations.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn config_digest(cfg: &ScenarioConfig) -> Result<String> {
    Ok(format!("{:016x}", fnv1a(cfg.emit()?.as_bytes())))
}

/// Directory for a run: `output_path` if absolute, else below `root`.
pub fn run_directory(cfg: &ScenarioConfig, root: &Path) -> Result<PathBuf> {
    let rel = match &cfg.output_path {
        Some(p) => PathBuf::from(p),
        None => PathBuf::from(format!("{}-{}", cfg.scenario.name().to_lowercase(), &config_digest(cfg)?[..8])),
    };
    Ok(if rel.is_absolute() { rel } else { root.join(rel) })
}

fn cell(out: &mut String, v: Option<f64>) {
    out.push(',');
    if let Some(v) = v {
        if v.is_finite() {
            let _ = write!(out, "{v:e}");
        }
    }
}

pub fn timeseries_csv(outcome: &ScenarioOutcome) -> String {
    let mut s = format!("# o2lyap timeseries format_version={FORMAT_VERSION}\n");
    s.push_str(&TIMESERIES_COLUMNS.join(","));
    s.push('\n');
    let rec = &outcome.record;
    for k in 0..rec.len() {
        let _ = write!(s, "{:e}", rec.times[k]);
        let report = rec.reports.get(k);
        let diag = outcome.diagnostics.get(k).copied().unwrap_or_default();
        cell(&mut s, report.map(|r| r.v));
        cell(&mut s, report.map(|r| r.dissipation));
        cell(&mut s, outcome.residuals.get(k).copied());
        cell(&mut s, report.map(|r| r.convexity_min));
        cell(&mut s, Some(diag.ut_inf));
        cell(&mut s, diag.fourier.map(|f| f.0));
        cell(&mut s, diag.fourier.map(|f| f.1));
        cell(&mut s, diag.off_span);
        cell(&mut s, diag.planar.map(|p| p.0));
        cell(&mut s, diag.planar.map(|p| p.1));
        cell(&mut s, diag.shift.map(|m| m.theta));
        cell(&mut s, diag.shift.map(|m| m.error));
        s.push('\n');
    }
    s
}

pub fn snapshots_csv(outcome: &ScenarioOutcome) -> String {
    let rec = &outcome.record;
    let n = rec.snapshots.first().map_or(0, |u| u.len());
    let mut s = format!("# o2lyap snapshots format_version={FORMAT_VERSION}\nt");
    for i in 0..n {
        let _ = write!(s, ",u{i}");
    }
    s.push('\n');
    for (t, u) in rec.times.iter().zip(&rec.snapshots) {
        let _ = write!(s, "{t:e}");
        for v in u.values() {
            let _ = write!(s, ",{v:e}");
        }
        s.push('\n');
    }
    s
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub format_version: u32,
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub scenario: &'static str,
    pub config_digest: String,
    pub config: &'a ScenarioConfig,
    pub status: &'static str,
    pub exit_code: i32,
    pub summary: &'a Summary,
    pub error: Option<&'a ErrorRecord>,
    pub files: [&'static str; 2],
}

pub fn manifest_json(outcome: &ScenarioOutcome) -> Result<String> {
    let status = match outcome.exit_code() {
        0 => "ok",
        2 => "blow_up",
        3 => "construction_failure",
        _ => "error",
    };
    let m = Manifest {
        format_version: FORMAT_VERSION,
        tool: env!("CARGO_PKG_NAME"),
        tool_version: env!("CARGO_PKG_VERSION"),
        scenario: outcome.config.scenario.name(),
        config_digest: config_digest(&outcome.config)?,
        config: &outcome.config,
        status,
        exit_code: outcome.exit_code(),
        summary: &outcome.summary,
        error: outcome.failure.as_ref(),
        files: [TIMESERIES_FILE, SNAPSHOT_FILE],
    };
    let mut text = serde_json::to_string_pretty(&m).map_err(|e| Error::Parse(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

/// Write all three files into `dir`, creating it.
pub fn write_outputs(outcome: &ScenarioOutcome, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(TIMESERIES_FILE), timeseries_csv(outcome))?;
    fs::write(dir.join(SNAPSHOT_FILE), snapshots_csv(outcome))?;
    fs::write(dir.join(MANIFEST_FILE), manifest_json(outcome)?)?;
    Ok(())
}

/// Manifest for a configuration that failed before producing a trajectory.
pub fn write_error_manifest(cfg: &ScenarioConfig, error: &Error, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let record = ErrorRecord {
        kind: if error.is_construction_failure() { "construction" } else { "other" }.into(),
        message: error.to_string(),
        t: None,
    };
    let value = serde_json::json!({
        "format_version": FORMAT_VERSION,
        "tool": env!("CARGO_PKG_NAME"),
        "tool_version": env!("CARGO_PKG_VERSION"),
        "scenario": cfg.scenario.name(),
        "config_digest": config_digest(cfg)?,
        "config": cfg,
        "status": "error",
        "error": record,
    });
    let mut text = serde_json::to_string_pretty(&value).map_err(|e| Error::Parse(e.to_string()))?;
    text.push('\n');
    fs::write(dir.join(MANIFEST_FILE), text)?;
    Ok(())
}
