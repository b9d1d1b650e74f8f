//! Run artifacts: `diagnostics.csv`, `snapshots/`, `manifest.json` and
//! `summary.json`. Nothing written depends on wall-clock time or the worker
//! count, so identical configs give byte-identical files.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::diagnostics::{Row, RunSummary};
use crate::solver::{Snapshot, Trajectory};

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SNAPSHOT_DIR: &str = "snapshots";

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    /// Completed, but at least one monitor left its tolerance.
    Flagged,
    NumericalFailure,
}

#[derive(Debug, Serialize)]
struct SummaryFile<'a> {
    status: RunStatus,
    config_hash: &'a str,
    #[serde(flatten)]
    summary: &'a RunSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnapshotEntry {
    pub file: String,
    pub step: usize,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub config_hash: String,
    pub name: Option<String>,
    pub kind: &'static str,
    pub dt: f64,
    pub t_end: f64,
    pub steps_completed: usize,
    pub status: RunStatus,
    pub diagnostics: String,
    pub summary: String,
    pub snapshots: Vec<SnapshotEntry>,
}

fn fmt(x: f64) -> String {
    format!("{x:e}")
}

fn to_io(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

/// Creates `dir` (and `dir/snapshots`) and checks it is writable.
pub fn prepare_dir(dir: &Path) -> io::Result<()> {
    fs::create_dir_all(dir.join(SNAPSHOT_DIR))?;
    let probe = dir.join(".write-probe");
    fs::write(&probe, b"")?;
    fs::remove_file(probe)
}

/// Header of `diagnostics.csv` for a run of `width` coefficients.
pub fn diagnostics_header(width: usize, taylor: bool) -> Vec<String> {
    let mut h: Vec<String> = [
        "t",
        "E",
        "c",
        "max_speed",
        "c1_monitor",
        "div_residual",
        "p_periodicity",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    if taylor {
        h.extend((1..=width).map(|i| format!("alpha_{i}")));
        h.extend((1..=width).map(|i| format!("beta_{i}")));
        h.push("parity_misfit".into());
    }
    h.extend(["c1_raw", "c1_shape", "speed_drift", "w_max", "envelope"].map(String::from));
    h
}

/// Writes every `every`-th row plus the last one.
pub fn write_diagnostics(path: &Path, rows: &[Row], width: usize, every: usize) -> io::Result<()> {
    let taylor = rows.first().is_some_and(|r| r.taylor.is_some());
    let mut w = csv::Writer::from_path(path).map_err(to_io)?;
    w.write_record(diagnostics_header(width, taylor))
        .map_err(to_io)?;
    let last = rows.len().saturating_sub(1);
    for (k, row) in rows.iter().enumerate() {
        if row.step % every.max(1) != 0 && k != last {
            continue;
        }
        let mut rec = vec![
            fmt(row.t),
            fmt(row.energy),
            fmt(row.c),
            fmt(row.max_speed),
            fmt(row.c1.total),
            fmt(row.div_residual),
            fmt(row.p_periodicity),
        ];
        if taylor {
            match &row.taylor {
                Some(fit) => {
                    rec.extend(fit.alpha.iter().map(|&x| fmt(x)));
                    rec.extend(fit.beta.iter().map(|&x| fmt(x)));
                    rec.push(fmt(fit.parity_misfit));
                }
                None => rec.extend(std::iter::repeat_n(String::new(), 2 * width + 1)),
            }
        }
        rec.extend(
            [
                row.c1.raw,
                row.c1.shape,
                row.speed_drift,
                row.w_max,
                row.envelope,
            ]
            .map(fmt),
        );
        w.write_record(&rec).map_err(to_io)?;
    }
    w.flush()
}

/// `r, v_1..v_n, p` per node. Homogeneous runs have a single row at `r = 0`
/// with `p = 0`.
pub fn write_snapshot(path: &Path, snap: &Snapshot) -> io::Result<()> {
    let s = &snap.state;
    let mut w = csv::Writer::from_path(path).map_err(to_io)?;
    let mut header = vec!["r".to_string()];
    header.extend((1..=s.width).map(|i| format!("v_{i}")));
    header.push("p".into());
    w.write_record(&header).map_err(to_io)?;
    for j in 0..s.nodes() {
        let mut rec = vec![fmt(s.grid.get(j).copied().unwrap_or(0.0))];
        rec.extend(s.v_at(j).iter().map(|&x| fmt(x)));
        rec.push(match &snap.pressure {
            Some(p) => fmt(p[j]),
            None if s.grid.len() <= 1 => fmt(0.0),
            None => String::new(),
        });
        w.write_record(&rec).map_err(to_io)?;
    }
    w.flush()
}

pub fn snapshot_name(step: usize) -> String {
    format!("snapshot_{step:08}.csv")
}

pub fn status_of(traj: &Trajectory) -> RunStatus {
    if traj.error.is_some() {
        RunStatus::NumericalFailure
    } else if !traj.summary.ok() {
        RunStatus::Flagged
    } else {
        RunStatus::Ok
    }
}

/// What the run was, for the manifest.
#[derive(Debug, Clone)]
pub struct RunInfo<'a> {
    pub config_hash: &'a str,
    pub name: Option<&'a str>,
    pub dt: f64,
    pub t_end: f64,
    pub diagnostics_every: usize,
}

/// Writes all artifacts into `dir` and returns the manifest.
pub fn write_artifacts(dir: &Path, traj: &Trajectory, info: &RunInfo<'_>) -> io::Result<Manifest> {
    prepare_dir(dir)?;
    let width = traj.final_state().width;
    write_diagnostics(
        &dir.join(DIAGNOSTICS_FILE),
        &traj.report.rows,
        width,
        info.diagnostics_every,
    )?;
    let mut snapshots = Vec::with_capacity(traj.snapshots.len());
    for snap in &traj.snapshots {
        let rel: PathBuf = [SNAPSHOT_DIR, &snapshot_name(snap.step)].iter().collect();
        write_snapshot(&dir.join(&rel), snap)?;
        snapshots.push(SnapshotEntry {
            file: format!("{SNAPSHOT_DIR}/{}", snapshot_name(snap.step)),
            step: snap.step,
            t: snap.state.t,
        });
    }
    let status = status_of(traj);
    let summary = SummaryFile {
        status,
        config_hash: info.config_hash,
        summary: &traj.summary,
    };
    write_json(&dir.join(SUMMARY_FILE), &summary)?;
    let manifest = Manifest {
        config_hash: info.config_hash.to_string(),
        name: info.name.map(String::from),
        kind: traj.summary.kind,
        dt: info.dt,
        t_end: info.t_end,
        steps_completed: traj.summary.steps,
        status,
        diagnostics: DIAGNOSTICS_FILE.into(),
        summary: SUMMARY_FILE.into(),
        snapshots,
    };
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

fn write_json(path: &Path, value: &impl Serialize) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}
