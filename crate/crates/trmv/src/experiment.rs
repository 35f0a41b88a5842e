//! Replicated comparisons of TRMV against the TC-MTOT baseline.
//!
//! Every cell of missing level × noise level × output rank is run over a
//! list of seeds. Both methods see the same generated dataset per seed,
//! and its checksum is stored with each record.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use trmv_core::datagen::ProcedureBParams;
use trmv_core::metrics::{spe, tspe};
use trmv_core::{fit, tc_mtot_fit, GeneratorParams, SyntheticDataset, TrmvConfig, TrmvModel};

use crate::dataset::checksum;
use crate::error::{Error, Result};

pub const MONOTONE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Trmv,
    TcMtot,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Trmv => "trmv",
            Method::TcMtot => "tc-mtot",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "trmv" => Some(Method::Trmv),
            "tc-mtot" | "tcmtot" => Some(Method::TcMtot),
            _ => None,
        }
    }

    pub fn fit(
        self,
        inputs: &[trmv_core::DenseTensor],
        y0: &trmv_core::DenseTensor,
        mask: &trmv_core::ObservationMask,
        cfg: &TrmvConfig,
    ) -> trmv_core::Result<TrmvModel> {
        match self {
            Method::Trmv => fit(inputs, y0, mask, cfg),
            Method::TcMtot => tc_mtot_fit(inputs, y0, mask, cfg),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Declarative run description, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub generator: GeneratorParams,
    pub missing_levels: Vec<f64>,
    pub sigmas: Vec<f64>,
    /// Output ranks to sweep (procedure B only). Empty keeps the
    /// generator's own rank.
    pub output_ranks: Vec<usize>,
    pub seeds: Vec<u64>,
    pub methods: Vec<Method>,
    pub solver: TrmvConfig,
    /// Replicates run at once.
    pub parallel: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "experiment".into(),
            generator: GeneratorParams::ProcedureB(ProcedureBParams::default()),
            missing_levels: vec![0.8, 0.9],
            sigmas: vec![0.0],
            output_ranks: Vec::new(),
            seeds: (0..10).collect(),
            methods: vec![Method::Trmv, Method::TcMtot],
            solver: TrmvConfig::default(),
            parallel: 1,
        }
    }
}

impl ExperimentConfig {
    /// Missing levels 0.6 to 0.9 against noise levels 0 to 0.01.
    pub fn noise_grid(generator: GeneratorParams) -> Self {
        Self {
            name: "noise-grid".into(),
            generator,
            missing_levels: vec![0.6, 0.7, 0.8, 0.9],
            sigmas: (0..6).map(|k| 0.002 * k as f64).collect(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let empty = |n: &str| Error::Config(format!("`{n}` must not be empty"));
        if self.missing_levels.is_empty() {
            return Err(empty("missing_levels"));
        }
        if self.sigmas.is_empty() {
            return Err(empty("sigmas"));
        }
        if self.seeds.is_empty() {
            return Err(empty("seeds"));
        }
        if self.methods.is_empty() {
            return Err(empty("methods"));
        }
        if self.parallel == 0 {
            return Err(Error::Config("`parallel` must be at least 1".into()));
        }
        if !self.output_ranks.is_empty() && !matches!(self.generator, GeneratorParams::ProcedureB(_)) {
            return Err(Error::Config("`output_ranks` applies to procedure-b only".into()));
        }
        if let Some(r) = self.missing_levels.iter().find(|r| !(0.0..1.0).contains(*r)) {
            return Err(Error::Config(format!("missing level {r} outside [0, 1)")));
        }
        if let Some(s) = self.sigmas.iter().find(|s| s.is_nan() || **s < 0.0) {
            return Err(Error::Config(format!("noise level {s}")));
        }
        self.solver.validate()?;
        Ok(())
    }

    fn cells(&self) -> Vec<Cell> {
        let ranks: Vec<Option<usize>> = if self.output_ranks.is_empty() {
            vec![None]
        } else {
            self.output_ranks.iter().copied().map(Some).collect()
        };
        let mut out = Vec::new();
        for &rank in &ranks {
            for &missing in &self.missing_levels {
                for &sigma in &self.sigmas {
                    out.push(Cell { missing, sigma, rank });
                }
            }
        }
        out
    }

    fn params_for(&self, cell: &Cell) -> GeneratorParams {
        let mut p = self.generator.clone();
        p.sampling_mut().missing_fraction = cell.missing;
        p.set_sigma(cell.sigma);
        if let (GeneratorParams::ProcedureB(b), Some(r)) = (&mut p, cell.rank) {
            b.output_rank = r;
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Cell {
    missing: f64,
    sigma: f64,
    rank: Option<usize>,
}

/// One method on one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub method: Method,
    pub generator: String,
    pub missing: f64,
    pub sigma: f64,
    pub rank: Option<usize>,
    pub seed: u64,
    pub spe: Option<f64>,
    /// Empty when the SPE is at least 1.
    pub tspe: Option<f64>,
    pub tspe_out_of_domain: bool,
    pub iterations: usize,
    /// Outer iterations that raised the objective beyond `1e-8·(1 + |F|)`.
    pub objective_increases: usize,
    pub final_ranks: String,
    pub checksum: String,
    pub error: Option<String>,
    #[serde(skip)]
    pub seconds: f64,
}

impl Record {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

/// Mean and sample standard deviation of a cell for one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub method: Method,
    pub missing: f64,
    pub sigma: f64,
    pub rank: Option<usize>,
    pub replicates: usize,
    pub failed: usize,
    pub spe_mean: Option<f64>,
    pub spe_sd: Option<f64>,
    /// Over the replicates whose TSPE is defined.
    pub tspe_mean: Option<f64>,
    pub tspe_sd: Option<f64>,
    /// Replicates with SPE ≥ 1; nonzero flags the TSPE columns.
    pub tspe_out_of_domain: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentReport {
    pub name: String,
    pub records: Vec<Record>,
}

impl ExperimentReport {
    /// Aggregates in cell order, methods in configured order.
    pub fn aggregates(&self) -> Vec<Aggregate> {
        let mut keys: Vec<(Method, f64, f64, Option<usize>)> = Vec::new();
        for r in &self.records {
            let k = (r.method, r.missing, r.sigma, r.rank);
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
        keys.into_iter()
            .map(|(method, missing, sigma, rank)| {
                let rs: Vec<&Record> = self
                    .records
                    .iter()
                    .filter(|r| (r.method, r.missing, r.sigma, r.rank) == (method, missing, sigma, rank))
                    .collect();
                let spes: Vec<f64> = rs.iter().filter_map(|r| r.spe).collect();
                let tspes: Vec<f64> = rs.iter().filter_map(|r| r.tspe).collect();
                let (spe_mean, spe_sd) = mean_sd(&spes);
                let (tspe_mean, tspe_sd) = mean_sd(&tspes);
                Aggregate {
                    method,
                    missing,
                    sigma,
                    rank,
                    replicates: rs.len(),
                    failed: rs.iter().filter(|r| r.failed()).count(),
                    spe_mean,
                    spe_sd,
                    tspe_mean,
                    tspe_sd,
                    tspe_out_of_domain: rs.iter().filter(|r| r.tspe_out_of_domain).count(),
                }
            })
            .collect()
    }

    /// Writes `report.csv`, `summary.csv` and `timings.csv` into `dir`.
    /// Wall times go to their own file so the other two depend only on the
    /// configuration.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let report = dir.join("report.csv");
        let mut w = csv::Writer::from_path(&report)?;
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| Error::io(&report, e))?;

        let summary = dir.join("summary.csv");
        let mut w = csv::Writer::from_path(&summary)?;
        for a in self.aggregates() {
            w.serialize(a)?;
        }
        w.flush().map_err(|e| Error::io(&summary, e))?;

        let timings = dir.join("timings.csv");
        let mut w = csv::Writer::from_path(&timings)?;
        for r in &self.records {
            w.serialize(Timing {
                method: r.method,
                missing: r.missing,
                sigma: r.sigma,
                rank: r.rank,
                seed: r.seed,
                seconds: (r.seconds * 1e3).round() / 1e3,
            })?;
        }
        w.flush().map_err(|e| Error::io(&timings, e))?;
        Ok(vec![report, summary, timings])
    }
}

#[derive(Serialize)]
struct Timing {
    method: Method,
    missing: f64,
    sigma: f64,
    rank: Option<usize>,
    seed: u64,
    seconds: f64,
}

fn mean_sd(v: &[f64]) -> (Option<f64>, Option<f64>) {
    if v.is_empty() {
        return (None, None);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = if v.len() > 1 {
        Some((v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt())
    } else {
        None
    };
    (Some(mean), sd)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let jobs: Vec<(Cell, u64)> = cfg
        .cells()
        .into_iter()
        .flat_map(|c| cfg.seeds.iter().map(move |&s| (c, s)))
        .collect();
    let total = jobs.len();
    let run = |(i, (cell, seed)): (usize, &(Cell, u64))| {
        let out = run_replicate(cfg, cell, *seed);
        log::info!(
            "[{}/{total}] r={} σ={} rank={:?} seed={seed}: {}",
            i + 1,
            cell.missing,
            cell.sigma,
            cell.rank,
            out.iter()
                .map(|r| format!("{} spe={:?}", r.method, r.spe))
                .collect::<Vec<_>>()
                .join(", ")
        );
        out
    };
    let nested: Vec<Vec<Record>> = if cfg.parallel == 1 {
        jobs.iter().enumerate().map(run).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.parallel)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?;
        pool.install(|| jobs.par_iter().enumerate().map(run).collect())
    };
    Ok(ExperimentReport {
        name: cfg.name.clone(),
        records: nested.into_iter().flatten().collect(),
    })
}

fn run_replicate(cfg: &ExperimentConfig, cell: &Cell, seed: u64) -> Vec<Record> {
    let params = cfg.params_for(cell);
    let blank = |method: Method| Record {
        method,
        generator: params.name().into(),
        missing: cell.missing,
        sigma: cell.sigma,
        rank: cell.rank,
        seed,
        spe: None,
        tspe: None,
        tspe_out_of_domain: false,
        iterations: 0,
        objective_increases: 0,
        final_ranks: String::new(),
        checksum: String::new(),
        error: None,
        seconds: 0.0,
    };
    let data = params.generate(seed).map_err(Error::from).and_then(|d| {
        let sum = checksum(&d)?;
        Ok((d, sum))
    });
    let (data, sum) = match data {
        Ok(v) => v,
        Err(e) => {
            return cfg
                .methods
                .iter()
                .map(|&m| Record {
                    error: Some(format!("generate: {e}")),
                    ..blank(m)
                })
                .collect()
        }
    };
    let solver = TrmvConfig {
        seed,
        ..cfg.solver.clone()
    };
    cfg.methods
        .iter()
        .map(|&m| {
            let start = Instant::now();
            let mut rec = Record {
                checksum: sum.clone(),
                ..blank(m)
            };
            match evaluate(m, &data, &solver) {
                Ok((model, s)) => {
                    let t = tspe(s);
                    rec.spe = Some(s);
                    rec.tspe = t.value();
                    rec.tspe_out_of_domain = t.is_out_of_domain();
                    rec.iterations = model.diagnostics.iterations.len();
                    rec.objective_increases = model.diagnostics.objective_increases(MONOTONE_TOL);
                    rec.final_ranks = crate::diagnostics::rank_label(&model.response_rank);
                }
                Err(e) => rec.error = Some(e.to_string()),
            }
            rec.seconds = start.elapsed().as_secs_f64();
            rec
        })
        .collect()
}

/// Fits on the training split and returns the test SPE.
pub fn evaluate(method: Method, d: &SyntheticDataset, cfg: &TrmvConfig) -> Result<(TrmvModel, f64)> {
    let model = method.fit(&d.train_inputs()?, &d.observed_response()?, &d.mask, cfg)?;
    let pred = model.predict(&d.test_inputs()?)?;
    let s = spe(&d.test_response()?, &pred)?;
    Ok((model, s))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_sample_sd() {
        assert_eq!(mean_sd(&[]), (None, None));
        assert_eq!(mean_sd(&[2.0]), (Some(2.0), None));
        let (m, s) = mean_sd(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, Some(2.5));
        assert!((s.unwrap() - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn noise_grid_has_24_cells() {
        let cfg = ExperimentConfig::noise_grid(GeneratorParams::ProcedureB(ProcedureBParams::default()));
        assert_eq!(cfg.cells().len(), 24);
        assert_eq!(cfg.sigmas[5], 0.01);
        cfg.validate().unwrap();
    }

    #[test]
    fn config_roundtrips_through_toml() {
        let cfg = ExperimentConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        let back: ExperimentConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        let partial: ExperimentConfig = toml::from_str("seeds = [3]\nmethods = [\"trmv\"]").unwrap();
        assert_eq!((partial.seeds, partial.methods), (vec![3], vec![Method::Trmv]));
        assert!(toml::from_str::<ExperimentConfig>("bogus = 1").is_err());
        let bad = ExperimentConfig {
            missing_levels: vec![1.0],
            ..ExperimentConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
