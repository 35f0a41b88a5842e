//! CSV exports of fit and completion traces.
//!
//! Files start with `#` comment lines recording the software version and
//! every solver setting, followed by a header row.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use trmv_core::completion::AdmmDiagnostics;
use trmv_core::regression::FitDiagnostics;
use trmv_core::TrmvConfig;

use crate::config::commented;
use crate::error::{Error, Result};
use crate::io::write_file;

pub fn rank_label(ranks: &[usize]) -> String {
    ranks.iter().map(|r| r.to_string()).collect::<Vec<_>>().join("x")
}

#[derive(Serialize)]
struct OuterRow<'a> {
    iteration: usize,
    objective: f64,
    ranks: &'a str,
    admm_iterations: usize,
    admm_converged: bool,
    observed_deviation: f64,
    completion_accepted: bool,
    coefficient_fallbacks: usize,
    rank_refresh: bool,
}

pub fn write_fit_diagnostics<W: Write>(
    w: &mut W,
    method: &str,
    cfg: &TrmvConfig,
    diag: &FitDiagnostics,
) -> Result<()> {
    let mut head = format!("# trmv {}\n# method = {method}\n", env!("CARGO_PKG_VERSION"));
    head.push_str(&commented(cfg)?);
    head.push_str(&format!("# initial_objective = {}\n", diag.initial_objective));
    w.write_all(head.as_bytes())
        .map_err(|e| Error::format("diagnostics", e.to_string()))?;
    let mut csv = csv::Writer::from_writer(w);
    for it in &diag.iterations {
        let ranks = rank_label(&it.ranks);
        csv.serialize(OuterRow {
            iteration: it.iteration,
            objective: it.objective,
            ranks: &ranks,
            admm_iterations: it.admm_iterations,
            admm_converged: it.admm_converged,
            observed_deviation: it.observed_deviation,
            completion_accepted: it.completion_accepted,
            coefficient_fallbacks: it.coefficient_fallbacks,
            rank_refresh: it.rank_refresh,
        })?;
    }
    if diag.iterations.is_empty() {
        csv.write_record([
            "iteration",
            "objective",
            "ranks",
            "admm_iterations",
            "admm_converged",
            "observed_deviation",
            "completion_accepted",
            "coefficient_fallbacks",
            "rank_refresh",
        ])?;
    }
    csv.flush().map_err(|e| Error::format("diagnostics", e.to_string()))?;
    Ok(())
}

pub fn save_fit_diagnostics(path: &Path, method: &str, cfg: &TrmvConfig, diag: &FitDiagnostics) -> Result<()> {
    let mut bytes = Vec::new();
    write_fit_diagnostics(&mut bytes, method, cfg, diag)?;
    write_file(path, |w| w.write_all(&bytes))
}

#[derive(Serialize)]
struct AdmmRow<'a> {
    iteration: usize,
    objective: f64,
    primal_residual: f64,
    dual_residual: f64,
    rho: f64,
    ranks: &'a str,
}

pub fn write_admm_diagnostics<W: Write>(w: W, diag: &AdmmDiagnostics) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    for it in &diag.iterations {
        let ranks = rank_label(&it.ranks);
        csv.serialize(AdmmRow {
            iteration: it.iteration,
            objective: it.objective,
            primal_residual: it.primal_residual,
            dual_residual: it.dual_residual,
            rho: it.rho,
            ranks: &ranks,
        })?;
    }
    csv.flush().map_err(|e| Error::format("diagnostics", e.to_string()))?;
    Ok(())
}

/// Reads the outer-iteration rows back (comment lines skipped).
pub fn read_fit_rows(text: &str) -> Result<Vec<(usize, f64, String)>> {
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let parse = |i: usize| rec.get(i).unwrap_or_default().to_string();
        let it = parse(0).parse().map_err(|_| Error::format("diagnostics", "iteration"))?;
        let obj = parse(1).parse().map_err(|_| Error::format("diagnostics", "objective"))?;
        out.push((it, obj, parse(2)));
    }
    Ok(out)
}
