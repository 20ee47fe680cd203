//! Command-line entry point.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::covmodels::CorrelationModel;
use crate::error::{Error, Result};
use crate::gpsim::{cholesky_path, Backend, Embedding, GridSpec, PathSynth, RngStream};
use crate::limitlaws::LimitLaw;
use crate::maxstats::{run_experiment, ExperimentConfig, ModelSpec};
use crate::pickands::{default_schedule, estimate_delta, estimate_h, DEFAULT_REPS, DEFAULT_STEP};

pub const SEED_ENV: &str = "GAUSSMAX_SEED";

pub const EXIT_PASS: i32 = 0;
pub const EXIT_GATE_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "gaussmax", version, about = "Extremes of stationary Gaussian processes")]
pub struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one path and write it as CSV `t,value`.
    Simulate(SimulateArgs),
    /// Estimate a Pickands constant.
    Pickands(PickandsArgs),
    /// Tabulate a limit law as CSV `x,cdf`.
    Lawtable(LawtableArgs),
    /// Run a configured experiment.
    Experiment(ExperimentArgs),
    /// Check Polya validity, regime and embeddability of a model.
    ValidateModel(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Weak,
    B1,
    B2,
    Table,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    #[arg(long)]
    pub alpha: f64,
    /// Long-range constant for `b1`.
    #[arg(long)]
    pub r: Option<f64>,
    /// CSV `lag,value` for `table`.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

impl ModelArgs {
    fn spec(&self) -> Result<ModelSpec> {
        let missing = |k: &str| Error::Config(format!("flag `--{k}` is required for family {:?}", self.family));
        let unused = |k: &str| Error::Config(format!("flag `--{k}` is not used by family {:?}", self.family));
        if self.r.is_some() && self.family != FamilyArg::B1 {
            return Err(unused("r"));
        }
        if self.table.is_some() && self.family != FamilyArg::Table {
            return Err(unused("table"));
        }
        Ok(match self.family {
            FamilyArg::Weak => ModelSpec::Weak { alpha: self.alpha },
            FamilyArg::B1 => ModelSpec::B1 {
                alpha: self.alpha,
                r: self.r.ok_or_else(|| missing("r"))?,
            },
            FamilyArg::B2 => ModelSpec::B2 { alpha: self.alpha },
            FamilyArg::Table => ModelSpec::Table {
                path: self.table.clone().ok_or_else(|| missing("table"))?,
                alpha: self.alpha,
            },
        })
    }

    fn build(&self) -> Result<CorrelationModel> {
        self.spec()?.build(None)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimBackend {
    Auto,
    Circulant,
    Ar1,
    Cholesky,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long = "T")]
    pub horizon: f64,
    #[arg(long)]
    pub step: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub replication: u64,
    #[arg(long, value_enum, default_value_t = SimBackend::Auto)]
    pub backend: SimBackend,
    /// Directory for cached embedding spectra.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PickandsArgs {
    #[arg(long)]
    pub alpha: f64,
    /// Comma-separated increasing windows.
    #[arg(long, value_delimiter = ',')]
    pub schedule: Option<Vec<f64>>,
    #[arg(long, default_value_t = DEFAULT_STEP)]
    pub step: f64,
    #[arg(long, default_value_t = DEFAULT_REPS)]
    pub reps: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also estimate the grid deficiency at this grid size.
    #[arg(long)]
    pub delta_a: Option<f64>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LawArg {
    Gumbel,
    GumbelAbs,
    LambdaR,
    HalfNormal,
}

#[derive(Debug, Args)]
pub struct LawtableArgs {
    #[arg(long, value_enum)]
    pub law: LawArg,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub from: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub to: f64,
    #[arg(long)]
    pub step: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for `report.csv` and `summary.json`.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 0.25)]
    pub step: f64,
    #[arg(long, default_value_t = 1e3)]
    pub t_max: f64,
    /// Also try a circulant embedding with this many points.
    #[arg(long)]
    pub embed_n: Option<usize>,
}

/// Seed precedence: flag, then environment, then config, then 0.
pub fn resolve_seed(flag: Option<u64>, env: Option<&str>, config: Option<u64>) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    if let Some(text) = env {
        return text
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{SEED_ENV} must be a decimal u64, got `{text}`")));
    }
    Ok(config.unwrap_or(0))
}

fn env_seed() -> Option<String> {
    std::env::var(SEED_ENV).ok()
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<i32> {
    let model = args.model.build()?;
    let grid = GridSpec::new(args.horizon, args.step)?;
    let seed = resolve_seed(args.seed, env_seed().as_deref(), None)?;
    let stream = RngStream::new(seed, args.replication);
    let path = match args.backend {
        SimBackend::Cholesky => cholesky_path(&model, &grid, stream)?,
        SimBackend::Circulant if args.cache_dir.is_some() => {
            let emb = Embedding::build_cached(&model, &grid, args.cache_dir.as_ref().unwrap())?;
            PathSynth::Circulant(emb).sample_path(&grid, stream)
        }
        b => {
            let backend = match b {
                SimBackend::Circulant => Backend::Circulant,
                SimBackend::Ar1 => Backend::Ar1,
                _ => Backend::Auto,
            };
            PathSynth::new(&model, &grid, backend)?.sample_path(&grid, stream)
        }
    };
    let target = args.out.as_path();
    let mut w = BufWriter::new(File::create(target)?);
    path.write_csv(&mut w)?;
    w.flush()?;
    let (max, min) = crate::gpsim::path_extremes(&path.values, None);
    let summary = json!({
        "command": "simulate",
        "model": model.descriptor(),
        "n": grid.n(),
        "step": grid.step(),
        "T": grid.horizon(),
        "seed": seed,
        "replication": args.replication,
        "max": max,
        "min": min,
        "out": target.display().to_string(),
    });
    writeln!(out, "{summary}")?;
    Ok(EXIT_PASS)
}

fn pickands(args: &PickandsArgs, out: &mut dyn Write) -> Result<i32> {
    let seed = resolve_seed(args.seed, env_seed().as_deref(), None)?;
    let schedule = args.schedule.clone().unwrap_or_else(|| default_schedule(args.alpha));
    let est = estimate_h(args.alpha, &schedule, args.step, args.reps, seed)?;
    let mut table = String::from("lambda,H_lambda,ci\n");
    for w in &est.windows {
        table.push_str(&format!("{},{},{}\n", w.lambda, w.mean, w.ci));
    }
    if let Some(path) = &args.csv {
        std::fs::write(path, &table)?;
    }
    write!(out, "{table}")?;
    writeln!(out, "H_hat,{},{}", est.h_hat, est.ci)?;
    let delta = match args.delta_a {
        Some(a) => Some(estimate_delta(args.alpha, a, &schedule, args.step, args.reps, seed)?),
        None => None,
    };
    let summary = json!({
        "command": "pickands",
        "alpha": est.alpha,
        "H_hat": est.h_hat,
        "ci": est.ci,
        "intercept": est.intercept,
        "reps": est.reps,
        "step": est.grid_step,
        "seed": seed,
        "clipped": est.clipped,
        "delta": delta,
    });
    writeln!(out, "{summary}")?;
    Ok(EXIT_PASS)
}

fn lawtable(args: &LawtableArgs, out: &mut dyn Write) -> Result<i32> {
    let law = match args.law {
        LawArg::Gumbel => LimitLaw::Gumbel,
        LawArg::GumbelAbs => LimitLaw::GumbelAbs,
        LawArg::HalfNormal => LimitLaw::HalfNormal,
        LawArg::LambdaR => {
            let r = args.r.ok_or_else(|| Error::Config("flag `--r` is required for lambda-r".into()))?;
            if !(r >= 0.0) {
                return Err(Error::Config(format!("flag `--r` must be nonnegative, got {r}")));
            }
            LimitLaw::MixedGumbel(r)
        }
    };
    if args.r.is_some() && args.law != LawArg::LambdaR {
        return Err(Error::Config("flag `--r` is only used by lambda-r".into()));
    }
    if !(args.step > 0.0) || !(args.to >= args.from) {
        return Err(Error::Config("need `--step` > 0 and `--to` >= `--from`".into()));
    }
    let count = ((args.to - args.from) / args.step + 1e-9).floor() as usize + 1;
    let mut w = open_out(args.out.as_deref())?;
    writeln!(w, "x,cdf")?;
    for i in 0..count {
        let x = args.from + i as f64 * args.step;
        writeln!(w, "{},{}", x, law.cdf(x))?;
    }
    w.flush()?;
    drop(w);
    if args.out.is_some() {
        writeln!(out, "{}", json!({"command": "lawtable", "law": law.to_string(), "rows": count}))?;
    }
    Ok(EXIT_PASS)
}

fn experiment(args: &ExperimentArgs, out: &mut dyn Write) -> Result<i32> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    cfg.seed = Some(resolve_seed(args.seed, env_seed().as_deref(), cfg.seed)?);
    let report = run_experiment(&cfg, args.config.parent())?;
    let summary = serde_json::to_string(&report)?;
    if let Some(dir) = &args.out_dir {
        std::fs::create_dir_all(dir)?;
        let mut w = BufWriter::new(File::create(dir.join("report.csv"))?);
        report.write_csv(&mut w)?;
        w.flush()?;
        std::fs::write(dir.join("summary.json"), format!("{summary}\n"))?;
    }
    writeln!(out, "{summary}")?;
    Ok(if report.passed { EXIT_PASS } else { EXIT_GATE_FAILURE })
}

fn validate_model(args: &ValidateArgs, out: &mut dyn Write) -> Result<i32> {
    let model = args.model.build()?;
    let polya = model.validate_polya(args.step, args.t_max)?;
    let regime = model.regime_diagnostics(1e8, 25)?;
    let embedding = match args.embed_n {
        Some(n) => {
            let grid = GridSpec::with_points(n, args.step)?;
            Some(match Embedding::build(&model, &grid) {
                Ok(e) => json!({"ok": true, "order": e.order(), "min_raw_eigenvalue": e.min_raw_eigenvalue()}),
                Err(e) => json!({"ok": false, "error": e.to_string()}),
            })
        }
        None => None,
    };
    let embed_ok = embedding.as_ref().is_none_or(|e| e["ok"] == true);
    let summary = json!({
        "command": "validate-model",
        "model": model.descriptor(),
        "polya": format!("{:?}", polya.verdict),
        "polya_pass": polya.passed(),
        "certified": polya.certified,
        "tail_value": polya.tail_value,
        "min_second_difference": polya.min_second_difference,
        "regime": regime.classification.to_string(),
        "limit_estimate": regime.limit_estimate,
        "embedding": embedding,
    });
    writeln!(out, "{summary}")?;
    Ok(if polya.passed() && embed_ok { EXIT_PASS } else { EXIT_GATE_FAILURE })
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::Simulate(a) => simulate(a, out),
        Command::Pickands(a) => pickands(a, out),
        Command::Lawtable(a) => lawtable(a, out),
        Command::Experiment(a) => experiment(a, out),
        Command::ValidateModel(a) => validate_model(a, out),
    }
}

/// Parses `argv`, runs the subcommand and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: `--threads` must be at least 1");
            return EXIT_USAGE;
        }
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    match pool.install(|| dispatch(&cli, &mut std::io::stdout())) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}
