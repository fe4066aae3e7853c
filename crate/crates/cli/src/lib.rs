//! The `entvol` command line: `run`, `sweep-alpha` and `slice-bd`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use entvol::estimator::{Checkpoint, Experiment, ExperimentConfig, RatioEstimate};
use entvol::slice::{self, SliceCriterion};
use entvol::{Alpha, FamilyKind, StateFamily};

pub const OUTPUT_DIR_ENV: &str = "ENTVOL_OUTPUT_DIR";
pub const RUN_CSV_HEADER: [&str; 11] = [
    "family",
    "dims",
    "criterion",
    "alpha",
    "count",
    "total",
    "ratio",
    "std_error",
    "inconclusive",
    "seed",
    "samples",
];
pub const SWEEP_CSV_HEADER: [&str; 5] = ["family", "alpha", "one_over_alpha", "R", "std_error"];

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] entvol::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(
                entvol::Error::Config(_)
                | entvol::Error::InvalidDimension(_)
                | entvol::Error::InvalidParameter(_),
            ) => EXIT_USAGE,
            _ => EXIT_RUNTIME,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "entvol", version, about = "Volume ratios of entanglement criteria by hit-and-run sampling")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the volume ratio of every criterion for one family.
    Run(RunArgs),
    /// Estimate Rényi-criterion ratios over a grid of orders.
    SweepAlpha(SweepArgs),
    /// Scan the Bell-diagonal line a = (x, -x, 1/3) without sampling.
    SliceBd(SliceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct SamplingArgs {
    /// Total number of emitted samples.
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    /// Number of independent chains.
    #[arg(long, default_value_t = entvol::estimator::DEFAULT_CHAINS)]
    pub chains: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub burn_in: u64,
    #[arg(long, default_value_t = 1)]
    pub thinning: u64,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Print sampling throughput to stderr.
    #[arg(long)]
    pub progress: bool,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long, value_parser = parse_family)]
    pub family: FamilyKind,
    /// Subsystem dimensions as NAxNB; required for the general family.
    #[arg(long, value_parser = parse_dims)]
    pub dims: Option<(usize, usize)>,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    /// Rényi order, repeatable; `inf` for infinity. Default 1,2,3,5,10,inf.
    #[arg(long = "alpha", value_parser = parse_alpha)]
    pub alphas: Vec<Alpha>,
    /// Output file (default: $ENTVOL_OUTPUT_DIR or the working directory).
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// JSON checkpoint to resume from and update while running.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Samples per chain between checkpoint writes.
    #[arg(long, default_value_t = 100_000)]
    pub checkpoint_every: u64,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Family to sweep, repeatable. Default: the four two-qubit families.
    /// The general family uses `--dims`, or 2x2 when it is absent.
    #[arg(long = "family", value_parser = parse_family)]
    pub families: Vec<FamilyKind>,
    #[arg(long, value_parser = parse_dims)]
    pub dims: Option<(usize, usize)>,
    /// Orders as comma-separated items: a value, `inf`, or `start:stop:count`.
    #[arg(long, default_value = "1:10:19,inf", value_parser = parse_alpha_grid)]
    pub alpha_grid: AlphaGrid,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SliceArgs {
    /// Number of grid points over [-5/12, 5/12].
    #[arg(long, default_value_t = 101)]
    pub points: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn parse_family(s: &str) -> Result<FamilyKind, String> {
    s.parse().map_err(|e: entvol::Error| e.to_string())
}

pub fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("dimensions must look like 2x3, got '{s}'"))?;
    let parse = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| format!("bad dimension '{t}'"))
    };
    let dims = (parse(a)?, parse(b)?);
    if dims.0 < 2 || dims.1 < 2 {
        return Err(format!("subsystem dimensions must be at least 2, got '{s}'"));
    }
    Ok(dims)
}

fn parse_alpha(s: &str) -> Result<Alpha, String> {
    s.parse().map_err(|e: entvol::Error| e.to_string())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaGrid(pub Vec<Alpha>);

pub fn parse_alpha_grid(s: &str) -> Result<AlphaGrid, String> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [single] => out.push(parse_alpha(single)?),
            [start, stop, count] => {
                let start: f64 = start.parse().map_err(|_| format!("bad grid start in '{item}'"))?;
                let stop: f64 = stop.parse().map_err(|_| format!("bad grid stop in '{item}'"))?;
                let count: usize = count.parse().map_err(|_| format!("bad grid count in '{item}'"))?;
                if count == 0 {
                    return Err(format!("grid '{item}' has no points"));
                }
                for i in 0..count {
                    let v = if count == 1 {
                        start
                    } else {
                        start + (stop - start) * i as f64 / (count - 1) as f64
                    };
                    out.push(Alpha::new(v).map_err(|e| e.to_string())?);
                }
            }
            _ => return Err(format!("cannot parse grid item '{item}'")),
        }
    }
    if out.is_empty() {
        return Err("the order grid is empty".into());
    }
    Ok(AlphaGrid(out))
}

pub fn dims_label((a, b): (usize, usize)) -> String {
    format!("{a}x{b}")
}

fn build_family(kind: FamilyKind, dims: Option<(usize, usize)>) -> CliResult<Arc<StateFamily>> {
    match (kind, dims) {
        (FamilyKind::General, None) => Err(CliError::Usage(
            "--dims is required for the general family".into(),
        )),
        _ => Ok(Arc::new(StateFamily::new(kind, dims).map_err(|e| {
            CliError::Usage(format!("invalid family/dims combination: {e}"))
        })?)),
    }
}

fn default_output(stem: &str, ext: &str) -> PathBuf {
    let dir = std::env::var_os(OUTPUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."));
    dir.join(format!("{stem}.{ext}"))
}

fn with_pool<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> CliResult<T> + Send,
) -> CliResult<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    pool.install(f)
}

/// Throughput reporter for `--progress`.
struct ProgressMeter {
    total: u64,
    done: AtomicU64,
    start: Instant,
    last: Mutex<Instant>,
}

impl ProgressMeter {
    fn new(total: u64, already: u64) -> Self {
        let now = Instant::now();
        Self {
            total,
            done: AtomicU64::new(already),
            start: now,
            last: Mutex::new(now),
        }
    }

    fn record(&self, n: u64) {
        let done = self.done.fetch_add(n, Ordering::Relaxed) + n;
        let mut last = self.last.lock().expect("progress lock");
        if last.elapsed().as_secs_f64() >= 1.0 || done >= self.total {
            *last = Instant::now();
            let rate = done as f64 / self.start.elapsed().as_secs_f64().max(1e-9);
            eprintln!("  {done}/{} samples, {rate:.0} samples/s", self.total);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub family: FamilyKind,
    pub dims: String,
    pub samples: u64,
    pub chains: u64,
    pub seed: u64,
    pub alphas: Vec<Alpha>,
    pub burn_in: u64,
    pub thinning: u64,
}

impl ConfigEcho {
    pub fn from_config(config: &ExperimentConfig) -> Self {
        Self {
            family: config.family.kind(),
            dims: dims_label(config.family.dims()),
            samples: config.total_samples,
            chains: config.chains,
            seed: config.seed,
            alphas: config.alphas.clone(),
            burn_in: config.burn_in,
            thinning: config.thinning,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: ConfigEcho,
    pub version: String,
    pub wall_clock_seconds: f64,
    pub timestamp: String,
    pub estimates: Vec<RatioEstimate>,
}

#[derive(Debug, Serialize)]
struct RunRow<'a> {
    family: &'a str,
    dims: &'a str,
    criterion: &'a str,
    alpha: String,
    count: u64,
    total: u64,
    ratio: f64,
    std_error: f64,
    inconclusive: bool,
    seed: u64,
    samples: u64,
}

/// Long-format CSV with one row per criterion.
pub fn write_run_csv<W: Write>(
    out: W,
    config: &ExperimentConfig,
    estimates: &[RatioEstimate],
) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    let dims = dims_label(config.family.dims());
    for e in estimates {
        w.serialize(RunRow {
            family: config.family.kind().name(),
            dims: &dims,
            criterion: e.criterion.name(),
            alpha: e.criterion.alpha().map(|a| a.to_string()).unwrap_or_default(),
            count: e.count_fulfilled,
            total: e.total,
            ratio: e.ratio,
            std_error: e.std_error,
            inconclusive: e.inconclusive,
            seed: config.seed,
            samples: config.total_samples,
        })?;
    }
    if estimates.is_empty() {
        w.write_record(RUN_CSV_HEADER)?;
    }
    w.flush()?;
    Ok(())
}

pub fn format_table(config: &ExperimentConfig, estimates: &[RatioEstimate]) -> String {
    let mut s = format!(
        "{} ({} samples, {} chains, seed {})\n",
        config.family.label(),
        config.total_samples,
        config.chains,
        config.seed
    );
    s.push_str(&format!(
        "{:<14} {:>6} {:>12} {:>12} {:>20}\n",
        "criterion", "alpha", "ratio", "std_error", "fulfilled/total"
    ));
    for e in estimates {
        s.push_str(&format!(
            "{:<14} {:>6} {:>12.6} {:>12.6} {:>20}{}\n",
            e.criterion.name(),
            e.criterion.alpha().map(|a| a.to_string()).unwrap_or_default(),
            e.ratio,
            e.std_error,
            format!("{}/{}", e.count_fulfilled, e.total),
            if e.inconclusive { "  inconclusive" } else { "" }
        ));
    }
    s
}

fn write_atomically(path: &Path, contents: &str) -> CliResult<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn run_sampling(
    config: ExperimentConfig,
    sampling: &SamplingArgs,
    checkpoint: Option<(&Path, u64)>,
) -> CliResult<Vec<RatioEstimate>> {
    let mut exp = match checkpoint {
        Some((path, _)) if path.exists() => {
            let ckpt = Checkpoint::from_json(&fs::read_to_string(path)?)?;
            Experiment::from_checkpoint(config, ckpt)?
        }
        _ => Experiment::new(config)?,
    };
    let meter = ProgressMeter::new(exp.config().total_samples, exp.emitted());
    let hook = |n: u64| meter.record(n);
    let progress: Option<&(dyn Fn(u64) + Sync)> = if sampling.progress { Some(&hook) } else { None };
    with_pool(sampling.threads, || {
        match checkpoint {
            Some((path, every)) => {
                let every = every.max(1);
                while !exp.is_complete() {
                    exp.advance(every, progress)?;
                    write_atomically(path, &exp.checkpoint().to_json()?)?;
                }
                write_atomically(path, &exp.checkpoint().to_json()?)?;
            }
            None => exp.run_to_completion(progress)?,
        }
        Ok(())
    })?;
    Ok(exp.estimates())
}

fn experiment_config(
    family: Arc<StateFamily>,
    sampling: &SamplingArgs,
    alphas: Vec<Alpha>,
) -> CliResult<ExperimentConfig> {
    if sampling.samples == 0 {
        return Err(CliError::Usage("--samples must be positive".into()));
    }
    let config = ExperimentConfig {
        chains: sampling.chains,
        seed: sampling.seed,
        alphas,
        burn_in: sampling.burn_in,
        thinning: sampling.thinning,
        ..ExperimentConfig::new(family, sampling.samples)
    };
    config
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(config)
}

pub fn cmd_run(args: &RunArgs, stdout: &mut dyn Write) -> CliResult<PathBuf> {
    let family = build_family(args.family, args.dims)?;
    let alphas = if args.alphas.is_empty() {
        Alpha::default_grid()
    } else {
        args.alphas.clone()
    };
    let config = experiment_config(family, &args.sampling, alphas)?;
    let started = Instant::now();
    let estimates = run_sampling(
        config.clone(),
        &args.sampling,
        args.checkpoint
            .as_deref()
            .map(|p| (p, args.checkpoint_every)),
    )?;
    let elapsed = started.elapsed().as_secs_f64();

    let ext = match args.format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let path = args.output.clone().unwrap_or_else(|| {
        default_output(
            &format!(
                "run-{}-{}-seed{}",
                config.family.kind(),
                dims_label(config.family.dims()),
                config.seed
            ),
            ext,
        )
    });
    match args.format {
        Format::Csv => write_run_csv(fs::File::create(&path)?, &config, &estimates)?,
        Format::Json => {
            let manifest = RunManifest {
                config: ConfigEcho::from_config(&config),
                version: env!("CARGO_PKG_VERSION").to_string(),
                wall_clock_seconds: elapsed,
                timestamp: chrono::Utc::now().to_rfc3339(),
                estimates: estimates.clone(),
            };
            fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
        }
    }
    write!(stdout, "{}", format_table(&config, &estimates))?;
    writeln!(stdout, "wrote {}", path.display())?;
    Ok(path)
}

fn sweep_family_label(family: &StateFamily) -> String {
    match family.kind() {
        FamilyKind::General => format!("general-{}", dims_label(family.dims())),
        k => k.name().to_string(),
    }
}

pub fn cmd_sweep_alpha(args: &SweepArgs, stdout: &mut dyn Write) -> CliResult<PathBuf> {
    let kinds = if args.families.is_empty() {
        vec![
            FamilyKind::BellDiagonal,
            FamilyKind::XState,
            FamilyKind::RebitRebit,
            FamilyKind::General,
        ]
    } else {
        args.families.clone()
    };
    if args.dims.is_some() && !kinds.contains(&FamilyKind::General) {
        return Err(CliError::Usage(
            "--dims only applies to the general family".into(),
        ));
    }
    let mut configs = Vec::new();
    for kind in kinds {
        let dims = match kind {
            FamilyKind::General => Some(args.dims.unwrap_or((2, 2))),
            _ => None,
        };
        let family = build_family(kind, dims)?;
        configs.push(experiment_config(
            family,
            &args.sampling,
            args.alpha_grid.0.clone(),
        )?);
    }

    let path = args
        .output
        .clone()
        .unwrap_or_else(|| default_output(&format!("sweep-alpha-seed{}", args.sampling.seed), "csv"));
    let mut w = csv::Writer::from_writer(fs::File::create(&path)?);
    w.write_record(SWEEP_CSV_HEADER)?;
    for config in configs {
        let label = sweep_family_label(&config.family);
        let estimates = run_sampling(config.clone(), &args.sampling, None)?;
        writeln!(stdout, "{label}")?;
        for e in estimates.iter().filter(|e| e.criterion.alpha().is_some()) {
            let alpha = e.criterion.alpha().expect("filtered");
            w.write_record([
                label.clone(),
                alpha.to_string(),
                alpha.reciprocal().to_string(),
                e.ratio.to_string(),
                e.std_error.to_string(),
            ])?;
            writeln!(
                stdout,
                "  alpha {:>8}  R = {:.6} ± {:.6}",
                alpha.to_string(),
                e.ratio,
                e.std_error
            )?;
        }
    }
    w.flush()?;
    writeln!(stdout, "wrote {}", path.display())?;
    Ok(path)
}

pub fn cmd_slice_bd(args: &SliceArgs, stdout: &mut dyn Write) -> CliResult<PathBuf> {
    if args.points < 2 {
        return Err(CliError::Usage("--points must be at least 2".into()));
    }
    let path = args
        .output
        .clone()
        .unwrap_or_else(|| default_output("slice-bd", "csv"));
    let mut w = csv::Writer::from_writer(fs::File::create(&path)?);
    let mut header = vec!["x".to_string(), "valid".to_string()];
    header.extend(SliceCriterion::ALL.iter().map(|c| c.name().to_string()));
    header.extend(SliceCriterion::ALL.iter().map(|c| format!("{}_margin", c.name())));
    w.write_record(&header)?;
    for p in slice::scan(args.points) {
        let mut row = vec![p.x.to_string(), p.valid.to_string()];
        if p.valid {
            row.extend(p.verdicts.iter().map(|v| v.fulfilled.to_string()));
            row.extend(p.verdicts.iter().map(|v| v.margin.to_string()));
        } else {
            row.extend(std::iter::repeat_n(String::new(), 2 * SliceCriterion::ALL.len()));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    for c in SliceCriterion::ALL {
        writeln!(
            stdout,
            "{:<14} holds for |x| <= {:.10}",
            c.name(),
            slice::flip_point(c, 1e-12)
        )?;
    }
    writeln!(stdout, "wrote {}", path.display())?;
    Ok(path)
}

pub fn dispatch(cli: &Cli, stdout: &mut dyn Write) -> CliResult<PathBuf> {
    match &cli.command {
        Command::Run(a) => cmd_run(a, stdout),
        Command::SweepAlpha(a) => cmd_sweep_alpha(a, stdout),
        Command::SliceBd(a) => cmd_slice_bd(a, stdout),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims_parsing() {
        assert_eq!(parse_dims("2x3").unwrap(), (2, 3));
        assert_eq!(parse_dims("3X4").unwrap(), (3, 4));
        assert!(parse_dims("1x3").is_err());
        assert!(parse_dims("23").is_err());
        assert!(parse_dims("ax2").is_err());
    }

    #[test]
    fn alpha_grid_parsing() {
        let g = parse_alpha_grid("1:10:19,inf").unwrap().0;
        assert_eq!(g.len(), 20);
        assert_eq!(g[0], Alpha::Finite(1.0));
        assert_eq!(g[1], Alpha::Finite(1.5));
        assert_eq!(g[18], Alpha::Finite(10.0));
        assert_eq!(g[19], Alpha::Infinity);
        assert_eq!(parse_alpha_grid("inf").unwrap().0, vec![Alpha::Infinity]);
        assert_eq!(
            parse_alpha_grid("2, 3").unwrap().0,
            vec![Alpha::Finite(2.0), Alpha::Finite(3.0)]
        );
        assert!(parse_alpha_grid("0:1:3").is_err());
        assert!(parse_alpha_grid("1:2").is_err());
        assert!(parse_alpha_grid("").is_err());
    }

    #[test]
    fn family_dims_validation() {
        assert!(matches!(
            build_family(FamilyKind::BellDiagonal, Some((2, 3))),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(
            build_family(FamilyKind::General, None),
            Err(CliError::Usage(_))
        ));
        assert!(build_family(FamilyKind::XState, None).is_ok());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), EXIT_USAGE);
        assert_eq!(
            CliError::Core(entvol::Error::ShrinkLimitExceeded(3)).exit_code(),
            EXIT_RUNTIME
        );
        assert_eq!(
            CliError::Core(entvol::Error::Config("c".into())).exit_code(),
            EXIT_USAGE
        );
    }
}
