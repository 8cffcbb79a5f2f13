//! Batch driver for path generation and the verification suites.
//!
//! Every random subcommand requires `--seed`; suite parameters not given on
//! the command line come from the registered defaults. Exit status is 0 when
//! every check passes, 1 when a check fails and 2 on usage or runtime errors.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use dyadic_bm::noise::ScaledNoise;
use dyadic_bm::stats::StatReport;
use dyadic_bm::suite::{bounds_table, parse_real, Defaults};
use dyadic_bm::{CounterNoise, DyadicPath, NoiseSource};

#[derive(Parser)]
#[command(
    name = "dyadic-bm",
    version,
    about = "Brownian motion by dyadic midpoint displacement"
)]
struct Cli {
    /// Worker threads. Output does not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write sample paths as CSV.
    Generate(GenerateArgs),
    /// Covariance, marginal and increment checks on an ensemble.
    VerifyLaw(LawArgs),
    /// Empirical modulus tails against their bounds.
    VerifyModulus(ModulusArgs),
    /// The maximal inequality, exactly and by Monte Carlo.
    VerifyEtemadi(EtemadiArgs),
    /// Tables of the modulus bound terms.
    Bounds(BoundsArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Output {
    /// Output file; standard output if absent.
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    horizon: u64,
    #[arg(long, default_value_t = 8)]
    level: u32,
    /// Number of paths, one file each, from seeds `seed..seed+paths`.
    #[arg(long, default_value_t = 1)]
    paths: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct LawArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    level: Option<u32>,
    #[arg(long)]
    paths: Option<u64>,
    #[command(flatten)]
    output: Output,
    /// Multiplies every draw; for fault injection.
    #[arg(long, hide = true)]
    noise_scale: Option<f64>,
}

#[derive(Args)]
struct ModulusArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    horizon: Option<u64>,
    /// Modulus levels, comma separated.
    #[arg(long, value_delimiter = ',')]
    level: Option<Vec<u32>>,
    /// Level of the grid the suprema are taken over.
    #[arg(long)]
    measure_level: Option<u32>,
    #[arg(long)]
    paths: Option<u64>,
    /// Comma-separated thresholds; `p/q` accepted.
    #[arg(long)]
    alphas: Option<Alphas>,
    #[arg(long)]
    series_max: Option<u32>,
    #[command(flatten)]
    output: Output,
    #[arg(long, hide = true)]
    noise_scale: Option<f64>,
}

#[derive(Args)]
struct EtemadiArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    alphas: Option<Alphas>,
    /// Rademacher walks of every length up to this are enumerated.
    #[arg(long)]
    max_steps: Option<u32>,
    /// Gaussian walk lengths, comma separated.
    #[arg(long, value_delimiter = ',')]
    gaussian_steps: Option<Vec<u32>>,
    #[arg(long)]
    trials: Option<u64>,
    /// Rademacher length for the Monte Carlo cross-check; 0 disables it.
    #[arg(long)]
    crosscheck_steps: Option<u32>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long, default_value_t = 1)]
    n_min: u32,
    #[arg(long, default_value_t = 30)]
    n_max: u32,
    #[arg(long)]
    alphas: Option<Alphas>,
    #[command(flatten)]
    output: Output,
}

/// A non-empty alpha grid.
#[derive(Clone, Debug)]
struct Alphas(Vec<f64>);

impl FromStr for Alphas {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let grid = s
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(|p| parse_real(p).map_err(|e| e.to_string()))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        if grid.is_empty() {
            return Err("the alpha grid is empty".into());
        }
        Ok(Alphas(grid))
    }
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit(report: &StatReport, output: &Output) -> Result<ExitCode> {
    let mut w = sink(&output.out)?;
    match output.format {
        Format::Csv => report.write_csv(&mut w)?,
        Format::Json => {
            writeln!(w, "{}", report.to_json())?;
            w.flush()?;
        }
    }
    for f in report.failures() {
        eprintln!(
            "FAIL {} {}: estimate {:e}, target {:e}, band {:e}",
            f.check, f.quantity, f.estimate, f.target, f.band
        );
    }
    Ok(if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn suffixed(path: &Path, seed: u64) -> PathBuf {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    let name = match path.extension() {
        Some(ext) => format!("{stem}-seed{seed}.{}", ext.to_string_lossy()),
        None => format!("{stem}-seed{seed}"),
    };
    path.with_file_name(name)
}

fn generate(args: GenerateArgs) -> Result<ExitCode> {
    if args.output.format == Format::Json {
        bail!("generate writes CSV only");
    }
    if args.paths == 0 {
        bail!("--paths must be at least 1");
    }
    if args.paths > 1 && args.output.out.is_none() {
        bail!("--out is required when --paths > 1");
    }
    let last = args
        .seed
        .checked_add(args.paths - 1)
        .context("seed range overflows u64")?;
    for seed in args.seed..=last {
        let src = CounterNoise::new(seed);
        let path = DyadicPath::build(args.horizon, args.level, &src)?;
        let comments = vec![
            format!("generator={}", src.generator_id()),
            format!("seed={seed}"),
            format!("horizon={}", args.horizon),
            format!("level={}", args.level),
        ];
        let out = match &args.output.out {
            Some(p) if args.paths > 1 => Some(suffixed(p, seed)),
            other => other.clone(),
        };
        path.write_csv(sink(&out)?, &comments)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn verify_law(args: LawArgs) -> Result<ExitCode> {
    let mut suite = Defaults::registered().law;
    suite.base_seed = args.seed;
    suite.horizon = args.horizon.unwrap_or(suite.horizon);
    suite.level = args.level.unwrap_or(suite.level);
    suite.paths = args.paths.unwrap_or(suite.paths);
    let report = match args.noise_scale {
        Some(scale) => suite.run_with(|s| ScaledNoise::new(CounterNoise::new(s), scale))?,
        None => suite.run()?,
    };
    emit(&report, &args.output)
}

fn verify_modulus(args: ModulusArgs) -> Result<ExitCode> {
    let mut suite = Defaults::registered().modulus;
    suite.base_seed = args.seed;
    suite.horizon = args.horizon.or(suite.horizon);
    suite.levels = args.level.unwrap_or(suite.levels);
    suite.measurement_level = args.measure_level.unwrap_or(suite.measurement_level);
    suite.paths = args.paths.unwrap_or(suite.paths);
    suite.alphas = args.alphas.map(|a| a.0).unwrap_or(suite.alphas);
    suite.series_max = args.series_max.unwrap_or(suite.series_max);
    let report = match args.noise_scale {
        Some(scale) => suite.run_with(|s| ScaledNoise::new(CounterNoise::new(s), scale))?,
        None => suite.run()?,
    };
    emit(&report, &args.output)
}

fn verify_etemadi(args: EtemadiArgs) -> Result<ExitCode> {
    let mut suite = Defaults::registered().etemadi;
    suite.base_seed = args.seed;
    suite.alphas = args.alphas.map(|a| a.0).unwrap_or(suite.alphas);
    suite.exact_max_steps = args.max_steps.unwrap_or(suite.exact_max_steps);
    suite.gaussian_steps = args.gaussian_steps.unwrap_or(suite.gaussian_steps);
    suite.trials = args.trials.unwrap_or(suite.trials);
    suite.crosscheck_steps = args.crosscheck_steps.unwrap_or(suite.crosscheck_steps);
    emit(&suite.run()?, &args.output)
}

fn bounds(args: BoundsArgs) -> Result<ExitCode> {
    let alphas = args
        .alphas
        .map(|a| a.0)
        .unwrap_or(Defaults::registered().modulus.alphas);
    let table = bounds_table(args.n_min, args.n_max, &alphas)?;
    let mut w = sink(&args.output.out)?;
    match args.output.format {
        Format::Csv => {
            let comments = vec![
                format!("n_min={}", args.n_min),
                format!("n_max={}", args.n_max),
            ];
            table.write_csv(&mut w, &comments)?;
        }
        Format::Json => {
            let doc = json!({
                "config": { "n_min": args.n_min, "n_max": args.n_max, "alphas": alphas },
                "table": table.to_json(),
            });
            writeln!(w, "{}", serde_json::to_string_pretty(&doc)?)?;
            w.flush()?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("cannot start the worker pool")?;
    }
    match cli.command {
        Command::Generate(a) => generate(a),
        Command::VerifyLaw(a) => verify_law(a),
        Command::VerifyModulus(a) => verify_modulus(a),
        Command::VerifyEtemadi(a) => verify_etemadi(a),
        Command::Bounds(a) => bounds(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
