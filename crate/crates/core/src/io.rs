//! Artifact writers: trajectory and report CSV, JSON manifests, SVG plots.
//!
//! Every file is written to a temporary file in the target directory and then
//! renamed into place, so an artifact is either complete or absent.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::entropy::BoundReport;
use crate::error::Result;
use crate::harness::{loglog_svg, Criterion, EstimateReport, ProblemSpec, RunOutcome};
use crate::model::Dissipation;
use crate::scheduler::{ScheduleRow, ViscousParams};
use crate::solver::{SolverConfig, Trajectory};

/// Version of the JSON layouts below.
pub const SCHEMA_VERSION: u32 = 1;

/// Writes `bytes` to `path` atomically. The parent directory must exist.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Serializes `rows` with a header line taken from the field names.
pub fn csv_bytes<S: Serialize>(rows: &[S]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    w.into_inner().map_err(|e| crate::Error::Io(e.into_error()))
}

pub fn write_csv<S: Serialize>(path: &Path, rows: &[S]) -> Result<()> {
    write_atomic(path, &csv_bytes(rows)?)
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// One node of one snapshot.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub r: f64,
    pub rho: f64,
    pub m: f64,
    pub u: f64,
}

pub fn trajectory_rows(traj: &Trajectory<f64>) -> Vec<TrajectoryRow> {
    let x = traj.grid.nodes();
    traj.snapshots
        .iter()
        .flat_map(|s| {
            x.iter().zip(s.rho.iter().zip(&s.m)).map(move |(&r, (&rho, &m))| TrajectoryRow {
                t: s.t,
                r,
                rho,
                m,
                u: m / rho,
            })
        })
        .collect()
}

/// One quantity at one ε.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub eps: f64,
    pub quantity: String,
    pub value: f64,
    pub a: f64,
    pub b: f64,
    pub delta: f64,
    pub rho_bar: f64,
    pub n_nodes: usize,
    pub outer_spacing: f64,
    pub status: String,
}

/// Flattens a report; a failed level contributes a single `run` row with a NaN value.
pub fn report_rows(report: &EstimateReport) -> Vec<ReportRow> {
    let mut out = vec![];
    for row in &report.rows {
        let base = |quantity: &str, value: f64, status: String| ReportRow {
            eps: row.eps,
            quantity: quantity.into(),
            value,
            a: row.a,
            b: row.b,
            delta: row.delta,
            rho_bar: row.rho_bar,
            n_nodes: row.n_nodes,
            outer_spacing: row.outer_spacing,
            status,
        };
        match &row.outcome {
            RunOutcome::Ok => out.extend(row.quantities.iter().map(|(k, &v)| base(k, v, "ok".into()))),
            RunOutcome::Failed { message } => out.push(base("run", f64::NAN, format!("failed: {message}"))),
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Pass,
    CriterionFail,
    Error { message: String },
}

/// JSON manifest of a single run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub eps: f64,
    pub problem: ProblemSpec,
    pub params: Option<ViscousParams<f64>>,
    pub config: SolverConfig<f64>,
    pub initial_energy: Option<f64>,
    pub final_energy: Option<f64>,
    pub dissipation: Option<Dissipation<f64>>,
    pub steps: usize,
    pub snapshots: usize,
    pub criteria: Vec<Criterion>,
    pub files: Vec<String>,
    #[serde(flatten)]
    pub status: RunStatus,
}

/// JSON summary of a sweep: the full report plus an overall status.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub schema_version: u32,
    pub report: EstimateReport,
    pub files: Vec<String>,
    #[serde(flatten)]
    pub status: RunStatus,
}

pub fn status_of(criteria: &[Criterion]) -> RunStatus {
    if criteria.iter().all(|c| c.pass) {
        RunStatus::Pass
    } else {
        RunStatus::CriterionFail
    }
}

/// File name used for the plot of `quantity`.
pub fn plot_name(quantity: &str) -> String {
    let safe: String = quantity
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' })
        .collect();
    format!("{safe}.svg")
}

/// Writes `report.csv`, `summary.json` and one `plots/<quantity>.svg` per
/// tracked quantity into `dir`, returning the written paths relative to `dir`.
pub fn write_sweep_artifacts(report: &EstimateReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir.join("plots"))?;
    let mut files = vec![PathBuf::from("report.csv")];
    write_csv(&dir.join("report.csv"), &report_rows(report))?;
    for q in report.tracked() {
        let fit = report.fit(&q).map(|f| (f.slope, f.intercept));
        let rel = Path::new("plots").join(plot_name(&q));
        write_atomic(&dir.join(&rel), loglog_svg(&q, &report.series(&q), fit).as_bytes())?;
        files.push(rel);
    }
    files.push(PathBuf::from("summary.json"));
    let summary = SweepSummary {
        schema_version: SCHEMA_VERSION,
        report: report.clone(),
        files: files.iter().map(|p| p.display().to_string()).collect(),
        status: status_of(&report.criteria),
    };
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(files)
}

pub fn write_schedule_table(path: &Path, rows: &[ScheduleRow]) -> Result<()> {
    write_csv(path, rows)
}

pub fn write_bound_report(path: &Path, report: &BoundReport) -> Result<()> {
    #[derive(Serialize)]
    struct Row<'a> {
        gamma: f64,
        rho_bar: f64,
        inequality: &'a str,
        level: usize,
        samples: usize,
        empirical_m: f64,
        max_violation: f64,
    }
    let rows: Vec<Row> = report
        .rows
        .iter()
        .map(|r| Row {
            gamma: report.gamma,
            rho_bar: report.rho_bar,
            inequality: &r.inequality,
            level: r.level,
            samples: r.samples,
            empirical_m: r.empirical_m,
            max_violation: r.max_violation,
        })
        .collect();
    write_csv(path, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_whole_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.txt");
        write_atomic(&p, b"first version").unwrap();
        write_atomic(&p, b"second").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"second");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn csv_has_header() {
        let rows = [TrajectoryRow {
            t: 0.0,
            r: 1.0,
            rho: 2.0,
            m: 1.0,
            u: 0.5,
        }];
        let s = String::from_utf8(csv_bytes(&rows).unwrap()).unwrap();
        assert_eq!(s, "t,r,rho,m,u\n0.0,1.0,2.0,1.0,0.5\n");
    }

    #[test]
    fn plot_names_are_file_safe() {
        assert_eq!(plot_name("grad_sq_ratio_d0.25"), "grad_sq_ratio_d0_25.svg");
    }
}
