//! Deterministic emission of CSV series and JSON reports.
//!
//! Every CSV starts with a `# memoheat <version> scenario=<digest>` comment
//! line; JSON files carry the same provenance as top-level fields (JSON has
//! no comments). Floats are written with Rust's shortest round-trip
//! formatting, so identical inputs give byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::Result;
use crate::modes::ModeTrajectory;
use crate::spaces::NormValue;
use crate::spectrum::SpectrumResult;
use crate::verify::Report;
use crate::VERSION;

fn header(digest: &str) -> String {
    format!("# memoheat {VERSION} scenario={digest}\n")
}

/// `t,theta,theta_dot` rows over the grid.
pub fn trajectory_csv(traj: &ModeTrajectory, digest: &str) -> String {
    let mut out = header(digest);
    out.push_str("t,theta,theta_dot\n");
    for (j, t) in traj.grid().times().enumerate() {
        writeln!(out, "{},{},{}", t, traj.theta()[j], traj.theta_dot()[j]).unwrap();
    }
    out
}

/// `n,re_root,im_root,residual` rows, one per certified root.
pub fn spectrum_csv(results: &[SpectrumResult], digest: &str) -> String {
    let mut out = header(digest);
    out.push_str("n,re_root,im_root,residual\n");
    for r in results {
        for (root, res) in r.roots.iter().zip(&r.residuals) {
            writeln!(out, "{},{},{},{}", r.n, root.re, root.im, res).unwrap();
        }
    }
    out
}

/// `y,re_symbol,im_symbol,abs2` rows of a vertical-line scan.
pub fn line_scan_csv(rows: &[(f64, Complex64)], digest: &str) -> String {
    let mut out = header(digest);
    out.push_str("y,re_symbol,im_symbol,abs2\n");
    for (y, v) in rows {
        writeln!(out, "{},{},{},{}", y, v.re, v.im, v.norm_sqr()).unwrap();
    }
    out
}

/// `order,abs_z,scaled_residual` rows of the expansion-residual table.
pub fn asymptotics_csv(rows: &[(u8, f64, f64)], digest: &str) -> String {
    let mut out = header(digest);
    out.push_str("order,abs_z,scaled_residual\n");
    for (order, r, v) in rows {
        writeln!(out, "{},{},{}", order, r, v).unwrap();
    }
    out
}

/// One named norm in the solve summary.
#[derive(Debug, Clone, Serialize)]
pub struct NormEntry {
    pub name: String,
    pub s: f64,
    pub eps: f64,
    pub grid_part: f64,
    pub tail_estimate: f64,
    pub total: f64,
}

impl NormEntry {
    pub fn new(name: &str, s: f64, eps: f64, value: NormValue) -> Self {
        NormEntry {
            name: name.to_string(),
            s,
            eps,
            grid_part: value.grid_part,
            tail_estimate: value.tail_estimate,
            total: value.total(),
        }
    }
}

#[derive(Serialize)]
struct NormsFile<'a> {
    tool_version: &'static str,
    scenario_digest: &'a str,
    norms: &'a [NormEntry],
}

pub fn write_norms_json(path: &Path, digest: &str, norms: &[NormEntry]) -> Result<()> {
    let body = serde_json::to_string_pretty(&NormsFile {
        tool_version: VERSION,
        scenario_digest: digest,
        norms,
    })?;
    std::fs::write(path, body + "\n")?;
    Ok(())
}

#[derive(Serialize)]
struct ReportsFile<'a> {
    tool_version: &'static str,
    scenario_digest: &'a str,
    reports: &'a [Report],
}

pub fn write_reports_json(path: &Path, digest: &str, reports: &[Report]) -> Result<()> {
    let body = serde_json::to_string_pretty(&ReportsFile {
        tool_version: VERSION,
        scenario_digest: digest,
        reports,
    })?;
    std::fs::write(path, body + "\n")?;
    Ok(())
}
