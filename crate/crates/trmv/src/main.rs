use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use trmv::config::overlay_file;
use trmv::dataset::{load_dataset, save_dataset, split};
use trmv::diagnostics::{rank_label, save_fit_diagnostics};
use trmv::io::{load_tensor, save_tensor};
use trmv::model::{load_model, save_model};
use trmv::{run_experiment, Error, ExperimentConfig, Method, Result};
use trmv_core::datagen::{OverlayParams, ProcedureAParams, ProcedureBParams};
use trmv_core::metrics::{spe, tspe, Tspe};
use trmv_core::{default_config, GeneratorParams, MaskPolicy, TrmvConfig};

/// Tensor regression with missing response values.
#[derive(Parser)]
#[command(name = "trmv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset directory.
    Gen(GenArgs),
    /// Fit a model to a dataset's training split.
    Fit(FitArgs),
    /// Predict a split of a dataset with a saved model.
    Predict(PredictArgs),
    /// Score a prediction by SPE and TSPE.
    Eval(EvalArgs),
    /// Run an experiment config and write its report.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Procedure {
    A,
    B,
    Overlay,
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    Global,
    PerSample,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long = "proc", value_enum, conflicts_with = "overlay")]
    procedure: Option<Procedure>,
    /// Same as `--proc overlay`.
    #[arg(long)]
    overlay: bool,
    /// Take every parameter not given from the built-in defaults.
    #[arg(long)]
    defaults: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short = 'o', long = "out")]
    out: PathBuf,
    /// TOML file with generator parameters; its values win over flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    train_samples: Option<usize>,
    /// Fraction of training response entries removed.
    #[arg(long)]
    missing: Option<f64>,
    #[arg(long, value_enum)]
    mask_policy: Option<Policy>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    rho_c: Option<f64>,
    #[arg(long)]
    inputs: Option<usize>,
    #[arg(long)]
    input_grid: Option<usize>,
    #[arg(long)]
    output_grid: Option<usize>,
    #[arg(long)]
    output_rank: Option<usize>,
    #[arg(long)]
    points: Option<usize>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "trmv")]
    method: String,
    /// TOML file with solver settings; its values win over flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out_model: PathBuf,
    #[arg(long)]
    out_diag: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    admm_max_iter: Option<usize>,
    #[arg(long)]
    admm_tol: Option<f64>,
    #[arg(long)]
    als_sweeps: Option<usize>,
    #[arg(long)]
    rank_ratio: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "test")]
    split: String,
    #[arg(short = 'o', long = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    pred: PathBuf,
    /// Reference tensor file.
    #[arg(long, conflicts_with = "data")]
    truth: Option<PathBuf>,
    /// Dataset whose split response is the reference.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value = "test")]
    split: String,
}

#[derive(Args)]
struct BenchArgs {
    /// Experiment TOML; its values win over flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Start from the 4 missing levels × 6 noise levels grid.
    #[arg(long)]
    noise_grid: bool,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    parallel: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let out = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Fit(a) => fit(a),
        Command::Predict(a) => predict(a),
        Command::Eval(a) => eval(a),
        Command::Bench(a) => bench(a),
    };
    match out {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("trmv: {e}");
            ExitCode::from(e.kind() as u8)
        }
    }
}

fn gen(a: GenArgs) -> Result<()> {
    let procedure = match (a.procedure, a.overlay) {
        (_, true) => Procedure::Overlay,
        (Some(p), false) => p,
        (None, false) if a.config.is_some() => Procedure::B,
        (None, false) => return Err(Error::Config("choose a generator with --proc or --overlay".into())),
    };
    let mut params = match procedure {
        Procedure::A => {
            let mut p = ProcedureAParams::default();
            set(&mut p.inputs, a.inputs);
            set(&mut p.rho_c, a.rho_c);
            set(&mut p.input_grid, a.input_grid);
            set(&mut p.output_grid, a.output_grid);
            GeneratorParams::ProcedureA(p)
        }
        Procedure::B => {
            let mut p = ProcedureBParams::default();
            set(&mut p.output_rank, a.output_rank);
            GeneratorParams::ProcedureB(p)
        }
        Procedure::Overlay => {
            let mut p = OverlayParams::default();
            set(&mut p.points, a.points);
            GeneratorParams::Overlay(p)
        }
    };
    let s = params.sampling_mut();
    if let Some(n) = a.samples {
        s.samples = n;
        if a.train_samples.is_none() {
            s.train_samples = n.div_ceil(2);
        }
    }
    set(&mut s.train_samples, a.train_samples);
    set(&mut s.missing_fraction, a.missing);
    if let Some(p) = a.mask_policy {
        s.mask_policy = match p {
            Policy::Global => MaskPolicy::Global,
            Policy::PerSample => MaskPolicy::PerSample,
        };
    }
    if let Some(sigma) = a.sigma {
        params.set_sigma(sigma);
    }
    if let Some(path) = &a.config {
        params = overlay_file(&params, path)?;
    }
    let d = params.generate(a.seed)?;
    save_dataset(&a.out, &d)?;
    let shapes: Vec<String> = d.inputs.iter().map(|x| format!("{:?}", x.shape())).collect();
    println!(
        "{}: {} seed {}, inputs {}, response {:?}, {} of {} training entries observed",
        a.out.display(),
        d.generator(),
        d.seed,
        shapes.join(" "),
        d.response.shape(),
        d.mask.count(),
        d.mask.total()
    );
    Ok(())
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn fit(a: FitArgs) -> Result<()> {
    let method = Method::parse(&a.method)
        .ok_or_else(|| Error::Config(format!("unknown method `{}` (trmv or tcmtot)", a.method)))?;
    let d = load_dataset(&a.data)?;
    let mut cfg = TrmvConfig {
        seed: d.seed,
        ..default_config(d.response.shape())
    };
    set(&mut cfg.lambda, a.lambda);
    set(&mut cfg.rho, a.rho);
    set(&mut cfg.max_iter, a.max_iter);
    set(&mut cfg.admm_max_iter, a.admm_max_iter);
    set(&mut cfg.admm_tol, a.admm_tol);
    set(&mut cfg.als_sweeps, a.als_sweeps);
    set(&mut cfg.rank_ratio, a.rank_ratio);
    set(&mut cfg.seed, a.seed);
    if let Some(path) = &a.config {
        cfg = overlay_file(&cfg, path)?;
    }
    let model = method.fit(&d.train_inputs()?, &d.observed_response()?, &d.mask, &cfg)?;
    save_model(&a.out_model, &model, method.name())?;
    if let Some(path) = &a.out_diag {
        save_fit_diagnostics(path, method.name(), &cfg, &model.diagnostics)?;
    }
    println!(
        "{}: {} outer iterations, response rank {}",
        method,
        model.diagnostics.iterations.len(),
        rank_label(&model.response_rank)
    );
    Ok(())
}

fn predict(a: PredictArgs) -> Result<()> {
    let (model, _) = load_model(&a.model)?;
    let d = load_dataset(&a.data)?;
    let (inputs, _) = split(&d, &a.split)?;
    let y = model.predict(&inputs)?;
    save_tensor(&a.out, &y)
}

fn eval(a: EvalArgs) -> Result<()> {
    let pred = load_tensor(&a.pred)?;
    let truth = match (&a.truth, &a.data) {
        (Some(t), _) => load_tensor(t)?,
        (None, Some(dir)) => split(&load_dataset(dir)?, &a.split)?.1,
        (None, None) => return Err(Error::Config("give --truth or --data".into())),
    };
    let s = spe(&truth, &pred)?;
    println!("spe {s}");
    match tspe(s) {
        Tspe::Value(v) => println!("tspe {v}"),
        Tspe::OutOfDomain { .. } => println!("tspe out-of-domain"),
    }
    Ok(())
}

fn bench(a: BenchArgs) -> Result<()> {
    let mut cfg = if a.noise_grid {
        ExperimentConfig::noise_grid(GeneratorParams::ProcedureB(ProcedureBParams::default()))
    } else {
        ExperimentConfig::default()
    };
    set(&mut cfg.parallel, a.parallel);
    if let Some(path) = &a.config {
        cfg = overlay_file(&cfg, path)?;
    }
    let report = run_experiment(&cfg)?;
    let failed = report.records.iter().filter(|r| r.failed()).count();
    for p in report.write(&a.out_dir)? {
        println!("{}", p.display());
    }
    if failed > 0 {
        eprintln!("trmv: {failed} of {} replicate fits failed", report.records.len());
    }
    Ok(())
}
