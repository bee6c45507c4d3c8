//! Command-line front end: `estimate`, `simulate`, `delta`, `rate` and
//! `bench`.

pub mod bench;
pub mod error;
pub mod io;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use polyfreq::dependence::{check_summability, deltas_to_csv, estimate_deltas, DeltaEstimate, SummabilityReport};
use polyfreq::diagnostics::{geometric_sizes, rate_experiment, EvalGrid, RateConfig};
use polyfreq::models::ModelSpec;
use polyfreq::{fp_eval, simulate::simulate, stone_bandwidth, BinningScheme, HistogramBuilder, TimeSeriesModel};

use crate::bench::{run_bench, BENCH_REPEATS};
use crate::error::{CliError, CliResult};
use crate::io::{config_header, fmt_f64, for_each_value, open_output, read_model_text};

#[derive(Debug, Parser)]
#[command(name = "polyfreq", version, about = "Frequency polygon density estimation for time series")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Output file (default: stdout).
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, Args, Serialize)]
pub struct SeedArg {
    #[arg(long, env = "POLYFREQ_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArg {
    /// Model specification: a JSON file, or inline JSON.
    #[arg(long)]
    pub model: String,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Histogram and frequency polygon of a one-column sample file.
    Estimate(EstimateArgs),
    /// Simulate a sample path from a model specification.
    Simulate(SimulateArgs),
    /// Physical dependence measures and their decay.
    Delta(DeltaArgs),
    /// Sup-norm convergence rate experiment.
    Rate(RateArgs),
    /// Frequency polygon versus naive kernel density timing.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Bin width (default: Stone bandwidth of the sample size).
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Grid start (default: sample minimum minus one bin).
    #[arg(long, allow_negative_numbers = true)]
    pub grid_min: Option<f64>,
    /// Grid end (default: sample maximum plus one bin).
    #[arg(long, allow_negative_numbers = true)]
    pub grid_max: Option<f64>,
    /// Grid spacing (default: a tenth of the bin width).
    #[arg(long)]
    pub grid_step: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArg,
    #[arg(long)]
    pub n: usize,
    /// Burn-in length (default: model dependent).
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Clone, Args)]
pub struct DeltaArgs {
    #[command(flatten)]
    pub model: ModelArg,
    #[arg(long, default_value_t = 10)]
    pub kmax: usize,
    #[arg(long, default_value_t = 10_000)]
    pub reps: usize,
    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Clone, Args)]
pub struct RateArgs {
    #[command(flatten)]
    pub model: ModelArg,
    #[arg(long, default_value_t = 1 << 10)]
    pub n_min: usize,
    #[arg(long, default_value_t = 1 << 17)]
    pub n_max: usize,
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 1_000_000)]
    pub n: usize,
    #[arg(long, default_value_t = 1000)]
    pub m: usize,
    #[command(flatten)]
    pub seed: SeedArg,
}

/// Runs a parsed command line. Summaries and warnings go to `diag`.
pub fn run(cli: &Cli, diag: &mut dyn Write) -> CliResult<()> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        // A pool installed by an earlier call in the same process is kept.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let mut out = open_output(cli.output.as_deref())?;
    match &cli.command {
        Command::Estimate(a) => cmd_estimate(a, cli.format, &mut out, diag)?,
        Command::Simulate(a) => cmd_simulate(a, cli.format, &mut out)?,
        Command::Delta(a) => cmd_delta(a, cli.format, &mut out, diag)?,
        Command::Rate(a) => cmd_rate(a, cli.format, &mut out, diag)?,
        Command::Bench(a) => cmd_bench(a, cli.format, &mut out, diag)?,
    }
    out.flush()?;
    Ok(())
}

fn load_model(arg: &ModelArg) -> CliResult<(ModelSpec, TimeSeriesModel)> {
    let spec = ModelSpec::from_json(&read_model_text(&arg.model)?)?;
    let model = spec.build()?;
    Ok((spec, model))
}

fn positive(name: &str, value: Option<f64>) -> CliResult<Option<f64>> {
    match value {
        Some(v) if !(v.is_finite() && v > 0.0) => Err(CliError::Usage(format!("--{name} must be positive, got {v}"))),
        _ => Ok(value),
    }
}

#[derive(Debug, Serialize)]
struct EstimateConfig<'a> {
    command: &'static str,
    input: &'a std::path::Path,
    n: u64,
    bandwidth: f64,
    grid_min: f64,
    grid_max: f64,
    grid_step: f64,
    occupied_bins: usize,
}

#[derive(Debug, Serialize)]
struct EstimateRow {
    x: f64,
    histogram: f64,
    frequency_polygon: f64,
}

fn cmd_estimate(a: &EstimateArgs, format: Format, out: &mut dyn Write, diag: &mut dyn Write) -> CliResult<()> {
    positive("bandwidth", a.bandwidth)?;
    positive("grid-step", a.grid_step)?;
    let stats = for_each_value(&a.input, |_| Ok(()))?;
    if stats.n < 2 {
        return Err(CliError::Data(format!(
            "{}: need at least 2 observations, got {}",
            a.input.display(),
            stats.n
        )));
    }
    let b = match a.bandwidth {
        Some(b) => b,
        None => stone_bandwidth(stats.n)?,
    };
    let scheme = BinningScheme::new(b)?;
    let mut builder = HistogramBuilder::new(scheme);
    let second = for_each_value(&a.input, |x| Ok(builder.push(x)?))?;
    if second != stats {
        return Err(CliError::Data(format!("{} changed while being read", a.input.display())));
    }
    let h = builder.finish()?;
    let lo = a.grid_min.unwrap_or(stats.min - b);
    let hi = a.grid_max.unwrap_or(stats.max + b);
    let step = a.grid_step.unwrap_or(b / 10.0);
    let grid = EvalGrid::new(lo, hi, step)?;
    writeln!(diag, "n={} b={} p_n={}", stats.n, fmt_f64(b), h.occupied_bins())?;

    let config = EstimateConfig {
        command: "estimate",
        input: &a.input,
        n: stats.n,
        bandwidth: b,
        grid_min: grid.lo(),
        grid_max: grid.hi(),
        grid_step: step,
        occupied_bins: h.occupied_bins(),
    };
    let rows = grid.points().map(|x| {
        Ok(EstimateRow {
            x,
            histogram: h.eval(x)?,
            frequency_polygon: fp_eval(&h, x)?,
        })
    });
    match format {
        Format::Csv => {
            out.write_all(config_header(&config).as_bytes())?;
            out.write_all(b"x,histogram,frequency_polygon\n")?;
            for row in rows {
                let r: EstimateRow = row.map_err(CliError::from)?;
                writeln!(out, "{},{},{}", fmt_f64(r.x), fmt_f64(r.histogram), fmt_f64(r.frequency_polygon))?;
            }
        }
        Format::Json => {
            let rows: Vec<EstimateRow> = rows.collect::<polyfreq::Result<_>>()?;
            write_json(out, &serde_json::json!({ "config": config, "rows": rows }))?;
        }
    }
    Ok(())
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> CliResult<()> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(|e| CliError::Data(e.to_string()))?;
    out.write_all(b"\n")?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct SimulateConfig<'a> {
    command: &'static str,
    model: &'a ModelSpec,
    n: usize,
    burn_in: usize,
    seed: u64,
}

fn cmd_simulate(a: &SimulateArgs, format: Format, out: &mut dyn Write) -> CliResult<()> {
    let (spec, model) = load_model(&a.model)?;
    let burn_in = a.burn_in.unwrap_or_else(|| model.default_burn_in());
    let path = simulate(&model, a.n, Some(burn_in), a.seed.seed)?;
    let config = SimulateConfig {
        command: "simulate",
        model: &spec,
        n: a.n,
        burn_in,
        seed: a.seed.seed,
    };
    match format {
        Format::Csv => {
            out.write_all(config_header(&config).as_bytes())?;
            out.write_all(b"x\n")?;
            for x in path {
                writeln!(out, "{}", fmt_f64(x))?;
            }
        }
        Format::Json => write_json(out, &serde_json::json!({ "config": config, "sample": path }))?,
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct DeltaConfig<'a> {
    command: &'static str,
    model: &'a ModelSpec,
    kmax: usize,
    reps: usize,
    seed: u64,
    contraction_rate: Option<f64>,
}

#[derive(Debug, Serialize)]
struct DeltaOutput<'a> {
    config: DeltaConfig<'a>,
    deltas: Vec<DeltaEstimate>,
    summability: SummabilityReport,
}

fn cmd_delta(a: &DeltaArgs, format: Format, out: &mut dyn Write, diag: &mut dyn Write) -> CliResult<()> {
    let (spec, model) = load_model(&a.model)?;
    let rho = model.contraction_proxy();
    let deltas = estimate_deltas(&model, a.kmax, a.reps, a.seed.seed)?;
    let summability = check_summability(&deltas, rho)?;
    let slope = summability.slope.map_or("none".to_string(), fmt_f64);
    writeln!(
        diag,
        "fitted lags {:?}; log-decay slope {slope}; sum bound {}; verdict {:?}",
        summability.fitted_lags,
        fmt_f64(summability.certificate),
        summability.verdict
    )?;
    let output = DeltaOutput {
        config: DeltaConfig {
            command: "delta",
            model: &spec,
            kmax: a.kmax,
            reps: a.reps,
            seed: a.seed.seed,
            contraction_rate: rho,
        },
        deltas,
        summability,
    };
    match format {
        Format::Csv => {
            out.write_all(config_header(&output.config).as_bytes())?;
            out.write_all(deltas_to_csv(&output.deltas).as_bytes())?;
        }
        Format::Json => write_json(out, &output)?,
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct RateHeader<'a> {
    command: &'static str,
    model: &'a ModelSpec,
    experiment: &'a RateConfig,
}

fn cmd_rate(a: &RateArgs, format: Format, out: &mut dyn Write, diag: &mut dyn Write) -> CliResult<()> {
    let (spec, model) = load_model(&a.model)?;
    let sizes = geometric_sizes(a.n_min, a.n_max)?;
    let config = RateConfig::new(sizes, a.reps, a.seed.seed);
    let report = rate_experiment(&model, &config)?;
    for w in &report.warnings {
        writeln!(diag, "warning: {w}")?;
    }
    for s in &report.summaries {
        writeln!(
            diag,
            "n={} b={} median={} mean={}",
            s.n,
            fmt_f64(s.b),
            fmt_f64(s.median_sup_error),
            fmt_f64(s.mean_sup_error)
        )?;
    }
    let ci = report
        .slope_ci
        .map_or("none".to_string(), |(lo, hi)| format!("[{}, {}]", fmt_f64(lo), fmt_f64(hi)));
    writeln!(diag, "slope {} (95% CI {ci}), target {}", fmt_f64(report.fitted_slope), fmt_f64(report.target_slope))?;
    let header = RateHeader {
        command: "rate",
        model: &spec,
        experiment: &config,
    };
    match format {
        Format::Csv => {
            out.write_all(config_header(&header).as_bytes())?;
            out.write_all(report.to_csv().as_bytes())?;
        }
        Format::Json => write_json(out, &serde_json::json!({ "header": header, "report": report }))?,
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct BenchConfig {
    command: &'static str,
    n: usize,
    m: usize,
    seed: u64,
    repeats: usize,
}

fn cmd_bench(a: &BenchArgs, format: Format, out: &mut dyn Write, diag: &mut dyn Write) -> CliResult<()> {
    if a.n < 10_000 || a.m < 100 {
        return Err(CliError::Usage(format!("bench needs n >= 10000 and m >= 100, got n={} m={}", a.n, a.m)));
    }
    let report = run_bench(a.n, a.m, a.seed.seed, BENCH_REPEATS)?;
    writeln!(
        diag,
        "p_n={} fp={}ms kde={}ms speedup={}",
        report.p_n,
        fmt_f64(report.fp_total_ms),
        fmt_f64(report.kde_ms),
        fmt_f64(report.speedup)
    )?;
    let config = BenchConfig {
        command: "bench",
        n: a.n,
        m: a.m,
        seed: a.seed.seed,
        repeats: BENCH_REPEATS,
    };
    match format {
        Format::Csv => {
            out.write_all(config_header(&config).as_bytes())?;
            out.write_all(b"n,m,bandwidth,p_n,fp_build_ms,fp_query_ms,fp_total_ms,kde_ms,speedup\n")?;
            let r = &report;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.n,
                r.m,
                fmt_f64(r.bandwidth),
                r.p_n,
                fmt_f64(r.fp_build_ms),
                fmt_f64(r.fp_query_ms),
                fmt_f64(r.fp_total_ms),
                fmt_f64(r.kde_ms),
                fmt_f64(r.speedup)
            )?;
        }
        Format::Json => write_json(out, &serde_json::json!({ "config": config, "report": report }))?,
    }
    Ok(())
}
