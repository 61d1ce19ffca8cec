use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use robicp::evaluation::{
    aggregate_median, best_parameters, build_sweep, expand_filters, flat_valley, load_pairs,
    load_records, run_benchmark_streaming, write_median_rows, MedianRow, RecordWriter,
};
use robicp::icp::{data_filters, write_trace_csv, StopReason};
use robicp::pointcloud::{load_cloud, save_cloud, CloudFormat};
use robicp::seed::{self, stream};
use robicp::{register, FilterKind, FilterSpec, RigidTransform};

mod config;

use config::RunConfig;

#[derive(Parser)]
#[command(name = "robicp", version, about = "Robust point-to-plane ICP registration and benchmarking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Register a reading cloud against a reference cloud.
    Register(RegisterArgs),
    /// Run the perturbation benchmark over a pair manifest.
    Benchmark(BenchmarkArgs),
    /// Summarize benchmark records into median tables and valleys.
    Analyze(AnalyzeArgs),
    /// Print the parameter sweep of a filter kind.
    Sweep(SweepArgs),
    /// Run the data filters on a cloud and save the result.
    Preprocess(PreprocessArgs),
    /// Print the resolved configuration.
    Config(ConfigArgs),
}

#[derive(Args)]
struct Common {
    /// Configuration file of `key = value` lines; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Random seed for data filters and perturbations.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RegisterArgs {
    /// Reading cloud (.csv or .ply).
    reading: PathBuf,
    /// Reference cloud (.csv or .ply).
    reference: PathBuf,
    /// Initial transform: a 4×4 matrix file or `identity`.
    #[arg(long, default_value = "identity")]
    t0: String,
    /// Outlier filter, e.g. `cauchy:k=0.2,scale=fixed:1`.
    #[arg(long)]
    filter: Option<String>,
    /// Where to write the final transform; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-iteration trace CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Pair manifest CSV (reading_path,reference_path,gt_path,pair_id,overlap).
    #[arg(long)]
    pairs: PathBuf,
    /// Filter specs separated by commas, or `all` for the fourteen study
    /// configurations.
    #[arg(long, default_value = "all")]
    filters: String,
    /// Replace each filter by its parameter sweep.
    #[arg(long)]
    sweep: bool,
    /// Perturbations per (pair, filter, parameter) cell.
    #[arg(long)]
    perturbations: Option<usize>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    jobs: Option<usize>,
    /// Records CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Benchmark records CSV.
    #[arg(long)]
    records: PathBuf,
    /// Print the range of parameters beating L1 for each swept filter.
    #[arg(long)]
    valley: bool,
    /// Print the best parameter and its median errors per filter (default).
    #[arg(long)]
    table: bool,
    /// Print the median errors of every (filter, parameter) group.
    #[arg(long)]
    all: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Filter spec whose swept parameter is varied.
    filter: String,
    /// Print full filter specs instead of bare values.
    #[arg(long)]
    specs: bool,
}

#[derive(Args)]
struct PreprocessArgs {
    /// Input cloud (.csv or .ply).
    input: PathBuf,
    /// Output cloud; format from the extension.
    #[arg(long)]
    out: PathBuf,
    /// Treat the cloud as a reading (no normals needed).
    #[arg(long)]
    reading: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ConfigArgs {
    #[command(flatten)]
    common: Common,
}

/// Failures mapped to exit codes: 1 for usage, I/O or data errors.
struct CliError(String);

impl<E: std::fmt::Display> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

fn filter_help() -> String {
    let kinds: Vec<&str> = FilterKind::ALL.iter().map(|k| k.name()).collect();
    format!(
        "Filter kinds: {}\n\
         Filter spec: kind[:key=value,...] with keys k, f, lambda, fmin, fmax, scale\n\
         Scales: fixed:<s>, mad, berg:<sigma_star>:<xi>",
        kinds.join(", ")
    )
}

fn resolve(common: &Common) -> CliResult<RunConfig> {
    let mut cfg = RunConfig::load(common.config.as_deref()).map_err(CliError)?;
    if let Some(seed) = common.seed {
        cfg.set("seed", &seed.to_string()).map_err(CliError)?;
    }
    Ok(cfg)
}

fn load(path: &Path) -> CliResult<robicp::PointCloud> {
    Ok(load_cloud(path, CloudFormat::from_path(path))?)
}

/// Split a comma-separated filter list. A token of the form `key=value`
/// whose key has no colon continues the previous spec, so
/// `l2,cauchy:k=0.8,scale=mad` yields two specs.
fn split_filters(list: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for tok in list.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let continues = tok
            .split_once('=')
            .is_some_and(|(key, _)| !key.contains(':'));
        match out.last_mut() {
            Some(last) if continues => {
                last.push(',');
                last.push_str(tok);
            }
            _ => out.push(tok.to_string()),
        }
    }
    out
}

fn parse_filters(list: &str) -> CliResult<Vec<FilterSpec>> {
    if list.trim() == "all" {
        return Ok(FilterSpec::benchmark_set());
    }
    split_filters(list)
        .iter()
        .map(|s| s.parse::<FilterSpec>().map_err(CliError::from))
        .collect()
}

fn cmd_register(args: RegisterArgs) -> CliResult<ExitCode> {
    let mut cfg = resolve(&args.common)?;
    if let Some(f) = &args.filter {
        cfg.set("filter", f).map_err(CliError)?;
    }
    cfg.validate().map_err(CliError)?;
    let t0 = if args.t0 == "identity" {
        RigidTransform::identity()
    } else {
        RigidTransform::load(Path::new(&args.t0))?
    };
    let reading = load(&args.reading)?;
    let reference = load(&args.reference)?;
    let result = register(&reading, &reference, &t0, &cfg.icp)?;
    log::info!(
        "{} after {} iterations",
        result.stop_reason,
        result.iterations
    );
    match &args.out {
        Some(p) => result.final_transform.save(p)?,
        None => print!("{}", result.final_transform),
    }
    if let Some(p) = &args.trace {
        let file = File::create(p).map_err(|e| format!("{}: {e}", p.display()))?;
        write_trace_csv(&result.trace, BufWriter::new(file))?;
    }
    Ok(match result.stop_reason {
        StopReason::Failed => {
            eprintln!("registration failed after {} iterations", result.iterations);
            ExitCode::from(2)
        }
        _ => ExitCode::SUCCESS,
    })
}

fn summary_line(row: &MedianRow) -> String {
    format!(
        "{:<11} {:<8} {:>12} {:>6} {:>12.6} {:>12.6}",
        row.filter,
        row.scale_mode,
        row.param.map(|p| format!("{p:.6}")).unwrap_or_else(|| "-".into()),
        row.count,
        row.median_trans_m,
        row.median_rot_rad
    )
}

fn cmd_benchmark(args: BenchmarkArgs) -> CliResult<ExitCode> {
    let mut cfg = resolve(&args.common)?;
    if let Some(n) = args.perturbations {
        cfg.set("perturbations", &n.to_string()).map_err(CliError)?;
    }
    if let Some(j) = args.jobs {
        cfg.jobs = j;
    }
    cfg.validate().map_err(CliError)?;
    let filters = expand_filters(&parse_filters(&args.filters)?, args.sweep)?;
    let pairs = load_pairs(&args.pairs)?;

    let sink: Box<dyn Write> = match &args.out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| format!("{}: {e}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let mut writer = RecordWriter::new(sink);
    let mut records = Vec::new();
    run_benchmark_streaming(&pairs, &filters, &cfg.perturbation, &cfg.icp, cfg.jobs, |r| {
        if r.stop_reason == StopReason::Failed {
            log::warn!("pair {} {} #{} failed", r.pair_id, r.filter, r.perturb_idx);
        }
        writer.write(&r)?;
        records.push(r);
        Ok(())
    })?;
    writer.flush()?;

    let mut report: Box<dyn Write> = if args.out.is_some() {
        Box::new(io::stdout().lock())
    } else {
        Box::new(io::stderr().lock())
    };
    writeln!(
        report,
        "{:<11} {:<8} {:>12} {:>6} {:>12} {:>12}",
        "filter", "scale", "param", "n", "med_trans_m", "med_rot_rad"
    )?;
    for row in best_parameters(&aggregate_median(&records)) {
        writeln!(report, "{}", summary_line(&row))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_analyze(args: AnalyzeArgs) -> CliResult<ExitCode> {
    let records = load_records(&args.records)?;
    if records.is_empty() {
        return Err(CliError("records file holds no records".into()));
    }
    let rows = aggregate_median(&records);
    let stdout = io::stdout();
    let mut out = stdout.lock();
    if args.all {
        write_median_rows(&rows, &mut out)?;
    }
    if args.table || !(args.valley || args.all) {
        write_median_rows(&best_parameters(&rows), &mut out)?;
    }
    if args.valley {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(["filter", "scale_mode", "param_lo", "param_hi"])?;
        let mut keys: Vec<(&str, &str)> = rows
            .iter()
            .filter(|r| r.param.is_some())
            .map(|r| (r.filter.as_str(), r.scale_mode.as_str()))
            .collect();
        keys.dedup();
        for (filter, scale) in keys {
            let interval = flat_valley(&records, filter, scale)?;
            let (lo, hi) = interval
                .map(|i| (i.lo.to_string(), i.hi.to_string()))
                .unwrap_or_default();
            w.write_record([filter, scale, &lo, &hi])?;
        }
        w.flush()?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(args: SweepArgs) -> CliResult<ExitCode> {
    let base: FilterSpec = args.filter.parse()?;
    let plan = build_sweep(base.kind)?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    if args.specs {
        for spec in plan.specs(&base)? {
            writeln!(out, "{spec}")?;
        }
    } else {
        for v in &plan.values {
            writeln!(out, "{v}")?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_preprocess(args: PreprocessArgs) -> CliResult<ExitCode> {
    let cfg = resolve(&args.common)?;
    cfg.validate().map_err(CliError)?;
    let cloud = load(&args.input)?;
    let tag = if args.reading {
        stream::READING_FILTERS
    } else {
        stream::REFERENCE_FILTERS
    };
    let mut rng = seed::rng(&[cfg.icp.seed, tag]);
    let out = data_filters(&cloud, !args.reading, &cfg.icp, &mut rng)?;
    save_cloud(&out, &args.out, CloudFormat::from_path(&args.out))?;
    eprintln!("{} of {} points kept", out.len(), cloud.len());
    Ok(ExitCode::SUCCESS)
}

fn cmd_config(args: ConfigArgs) -> CliResult<ExitCode> {
    let cfg = resolve(&args.common)?;
    cfg.validate().map_err(CliError)?;
    print!("{cfg}");
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let mut command = Cli::command().after_help(filter_help());
    for sub in ["register", "benchmark", "sweep", "config"] {
        command = command.mut_subcommand(sub, |c| c.after_help(filter_help()));
    }
    let cli = match command
        .try_get_matches()
        .and_then(|m| Cli::from_arg_matches(&m))
    {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Register(a) => cmd_register(a),
        Command::Benchmark(a) => cmd_benchmark(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Preprocess(a) => cmd_preprocess(a),
        Command::Config(a) => cmd_config(a),
    };
    match result {
        Ok(code) => code,
        Err(CliError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
