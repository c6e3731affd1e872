//! `zsrank` command-line driver.
//!
//! ```text
//! zsrank eval   --dataset ml-100k.dat --algo zeroshot_listwise --lr 0.003
//! zsrank sweep  --dataset ml-100k.dat --algo zeroshot_listwise,mf,random_uniform --out runs/ml100k --report both
//! zsrank train  --dataset ml-100k.dat --algo mf --lr 0.01 --out mf.bin
//! zsrank recommend --dataset ml-100k.dat --user 196 --k 5
//! zsrank orderstat-check --n 3 --samples 1000000
//! ```
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure,
//! 4 partial sweep failure.

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use zsrank::harness::{
    self, emit_report, sweep_algorithms, Algorithm, ExperimentConfig, MetricsReport, ReportFormat,
};
use zsrank::orderstat::{normalization_check, DensitySpec};
use zsrank::{Error, Result, Scale};

const EXIT_PARTIAL_SWEEP: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "zsrank", version, about = "Zero-shot listwise ranking experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train one model on the train split and write a model dump.
    Train(ExperimentArgs),
    /// Train and evaluate one configuration (MAE + Matthew degree).
    Eval(ExperimentArgs),
    /// Evaluate every algorithm over a learning-rate grid.
    Sweep(ExperimentArgs),
    /// Print top-K recommendations for one user.
    Recommend {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Original user id as it appears in the dataset.
        #[arg(long)]
        user: String,
    },
    /// Monte Carlo check that the order-statistic joint density integrates to 1.
    OrderstatCheck(OrderstatArgs),
}

#[derive(Args, Debug, Default)]
struct ExperimentArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// movielens_dat or csv
    #[arg(long)]
    format: Option<String>,
    /// Algorithm name; `sweep` accepts a comma list.
    #[arg(long)]
    algo: Option<String>,
    /// Learning rate, or a comma list of rates for `sweep`.
    #[arg(long)]
    lr: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    k: Option<usize>,
    /// Train fraction of the random split.
    #[arg(long)]
    split: Option<f64>,
    /// Rating scale override as `min,max`.
    #[arg(long)]
    scale: Option<String>,
    /// Output path (report base name, or model dump for `train`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv, svg or both
    #[arg(long, default_value = "csv")]
    report: String,
}

#[derive(Args, Debug)]
struct OrderstatArgs {
    /// Number of order statistics (1..=6).
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// uniform or power
    #[arg(long, default_value = "uniform")]
    density: String,
    /// Exponent of the power density.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    a: f64,
    #[arg(long, default_value_t = 1.0)]
    b: f64,
}

fn parse_list<T: std::str::FromStr>(raw: &str, what: &str) -> Result<Vec<T>> {
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::usage(format!("invalid {what} `{s}`")))
        })
        .collect()
}

impl ExperimentArgs {
    /// Config file values overlaid with command-line flags, plus the
    /// algorithm list for sweeps.
    fn resolve(&self) -> Result<(ExperimentConfig, Vec<Algorithm>)> {
        let mut cfg = match (&self.config, &self.dataset) {
            (Some(path), _) => ExperimentConfig::from_json_file(path)?,
            (None, Some(dataset)) => ExperimentConfig::new(dataset),
            (None, None) => return Err(Error::usage("either --config or --dataset is required")),
        };
        if let Some(dataset) = &self.dataset {
            cfg.dataset = dataset.clone();
        }
        if let Some(format) = &self.format {
            cfg.format = format.parse()?;
        }
        let algorithms = match &self.algo {
            Some(raw) => parse_list::<String>(raw, "algorithm")?
                .iter()
                .map(|s| s.parse())
                .collect::<Result<Vec<Algorithm>>>()?,
            None => vec![cfg.algorithm],
        };
        cfg.algorithm = algorithms[0];
        if let Some(raw) = &self.lr {
            let rates = parse_list::<f64>(raw, "learning rate")?;
            cfg.learning_rate = rates[0];
            cfg.lr_grid = Some(rates);
        }
        if let Some(dim) = self.dim {
            cfg.dim = dim;
        }
        if let Some(steps) = self.steps {
            cfg.steps = Some(steps);
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(k) = self.k {
            cfg.k = k;
        }
        if let Some(split) = self.split {
            cfg.train_fraction = split;
        }
        if let Some(raw) = &self.scale {
            let bounds = parse_list::<f64>(raw, "scale bound")?;
            if bounds.len() != 2 {
                return Err(Error::usage("--scale expects `min,max`"));
            }
            cfg.scale = Some(Scale::new(bounds[0], bounds[1])?);
        }
        if let Some(out) = &self.out {
            cfg.out = Some(out.clone());
        }
        cfg.validate()?;
        Ok((cfg, algorithms))
    }

    fn single(&self) -> Result<ExperimentConfig> {
        let (cfg, algorithms) = self.resolve()?;
        if algorithms.len() > 1 {
            return Err(Error::usage("this command takes a single --algo"));
        }
        if cfg.lr_grid.as_ref().is_some_and(|g| g.len() > 1) && self.lr.is_some() {
            return Err(Error::usage("this command takes a single --lr"));
        }
        Ok(cfg)
    }
}

fn write_reports(cfg: &ExperimentConfig, reports: &[MetricsReport], format: &str) -> Result<()> {
    let format: ReportFormat = format.parse()?;
    match &cfg.out {
        Some(base) => {
            for path in emit_report(reports, format, base)? {
                eprintln!("wrote {}", path.display());
            }
        }
        None => {
            if format != ReportFormat::Csv {
                return Err(Error::usage("svg reports need --out"));
            }
            harness::write_csv(reports, io::stdout().lock())?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Train(args) => {
            let cfg = args.single()?;
            let (train, _) = harness::prepare(&cfg)?;
            let (trained, steps) = harness::train_algorithm(&cfg, cfg.algorithm, cfg.learning_rate, &train)?;
            let model = trained.factors().ok_or_else(|| {
                Error::usage(format!("{} has no factor model to save", cfg.algorithm))
            })?;
            let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("model.bin"));
            model.save(&out)?;
            eprintln!(
                "trained {} ({} users x {} items, d={}, {steps} steps) -> {}",
                cfg.algorithm,
                train.n_users(),
                train.n_items(),
                cfg.dim,
                out.display()
            );
        }
        Command::Eval(args) => {
            let cfg = args.single()?;
            let report = harness::run_experiment(&cfg)?;
            write_reports(&cfg, &[report], &args.report)?;
        }
        Command::Sweep(args) => {
            let (cfg, algorithms) = args.resolve()?;
            let outcome = sweep_algorithms(&cfg, &algorithms)?;
            write_reports(&cfg, &outcome.reports, &args.report)?;
            if outcome.is_partial_failure() {
                for err in &outcome.errors {
                    eprintln!("sweep point failed: {err}");
                }
                return Ok(ExitCode::from(EXIT_PARTIAL_SWEEP));
            }
        }
        Command::Recommend { exp, user } => {
            let cfg = exp.single()?;
            let recs = harness::recommend(&cfg, &user)?;
            let mut out = io::stdout().lock();
            writeln!(out, "rank,item,score")?;
            for (rank, r) in recs.iter().enumerate() {
                writeln!(out, "{},{},{}", rank + 1, r.item, r.score)?;
            }
        }
        Command::OrderstatCheck(args) => {
            let density = match args.density.as_str() {
                "uniform" => DensitySpec::Uniform { a: args.a, b: args.b },
                "power" => DensitySpec::Power { alpha: args.alpha, a: args.a, b: args.b },
                other => return Err(Error::usage(format!("unknown density `{other}`"))),
            };
            let est = normalization_check(&density, args.n, args.samples, args.seed)?;
            println!(
                "n={} samples={} estimate={:.6} std_error={:.6}",
                args.n, est.samples, est.estimate, est.std_error
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
