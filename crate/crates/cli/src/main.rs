use std::collections::HashMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use topodr_core::cascade;
use topodr_core::error::CoreError;
use topodr_core::planar::{planar_rips_persistence, PlanarOptions};
use topodr_core::reduction::{analyze, rips_persistence, RipsOptions};
use topodr_core::PointCloud;
use topodr_embed::eval::{project_generators, quality_report};
use topodr_embed::losses::LossVariant;
use topodr_embed::train::{
    embed_free, encode, train, write_trace_csv, AutoencoderConfig, TrainConfig,
};

use topodr_cli::bench::{self, Engine};
use topodr_cli::datasets::{self, DatasetKind, DatasetSpec};
use topodr_cli::{svg, verify};

/// Cycle-aware dimensionality reduction toolkit: exact planar Rips
/// persistence, topological losses, and embedding optimization.
#[derive(Parser)]
#[command(name = "topodr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset as CSV.
    Gen(GenArgs),
    /// Compute persistence diagrams of a point-cloud CSV.
    Ph(PhArgs),
    /// Optimize a planar embedding of a point cloud.
    Project(ProjectArgs),
    /// Quality metrics between an input cloud and an embedding.
    Metrics(MetricsArgs),
    /// Engine scaling benchmark.
    Bench(BenchArgs),
    /// Run the internal verification suite.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct GenArgs {
    /// 3clusters | twist | k4 | k5 | circle_noise | grid
    #[arg(long)]
    kind: String,
    #[arg(long)]
    n: Option<usize>,
    /// Gaussian noise level (sampler-specific default when omitted).
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PhArgs {
    input: PathBuf,
    /// Maximum homology dimension (0 or 1).
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// auto | planar | reduction
    #[arg(long, default_value = "auto")]
    engine: String,
    /// Also emit zero-persistence pairs (reduction engine only).
    #[arg(long)]
    zero_pairs: bool,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Output JSON path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProjectArgs {
    input: PathBuf,
    /// topoae0 | topoae1 | cd1 | taew1
    #[arg(long, default_value = "cd1")]
    loss: String,
    /// autoencoder | free
    #[arg(long, default_value = "autoencoder")]
    mode: String,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Weight of the topological term.
    #[arg(long, default_value_t = 1e-2)]
    weight: f64,
    #[arg(long, default_value_t = 1000)]
    iters: usize,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    /// Standardize input coordinates first.
    #[arg(long)]
    standardize: bool,
    /// Flat key=value file overriding the flags above.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Embedding CSV output.
    #[arg(long)]
    out_embedding: Option<PathBuf>,
    /// SVG with the embedding and projected input generators.
    #[arg(long)]
    out_svg: Option<PathBuf>,
    /// Quality report JSON.
    #[arg(long)]
    out_report: Option<PathBuf>,
    /// Loss trace CSV.
    #[arg(long)]
    out_trace: Option<PathBuf>,
    /// Model checkpoint JSON (autoencoder mode).
    #[arg(long)]
    out_model: Option<PathBuf>,
}

#[derive(Args)]
struct MetricsArgs {
    input: PathBuf,
    embedding: PathBuf,
    /// Neighborhood size for the rank-based indicators.
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// uniform | circle_noise | grid
    #[arg(long, default_value = "uniform")]
    kind: String,
    /// Comma-separated sizes.
    #[arg(long, default_value = "1000,3000,10000")]
    sizes: String,
    /// Comma-separated engines: planar,reduction.
    #[arg(long, default_value = "planar")]
    engines: String,
    /// Comma-separated thread counts.
    #[arg(long, default_value = "1")]
    threads: String,
    #[arg(long, default_value_t = 3)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Smaller sweep for a fast smoke check.
    #[arg(long)]
    quick: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(match err {
                CoreError::Validation(_) | CoreError::IndexOutOfRange { .. } => 1u8,
                CoreError::Internal(_) => 2u8,
                CoreError::Io(_) => 3u8,
            })
        }
    }
}

fn run(cli: Cli) -> Result<(), CoreError> {
    match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Ph(args) => cmd_ph(args),
        Command::Project(args) => cmd_project(args),
        Command::Metrics(args) => cmd_metrics(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Verify(args) => {
            let report = verify::run(args.quick, &mut std::io::stdout())?;
            println!("{} check(s) passed", report.passed);
            Ok(())
        }
    }
}

fn write_or_print(path: &Option<PathBuf>, content: &str) -> Result<(), CoreError> {
    match path {
        Some(p) => std::fs::write(p, content).map_err(CoreError::from),
        None => {
            println!("{content}");
            Ok(())
        }
    }
}

fn cmd_gen(args: GenArgs) -> Result<(), CoreError> {
    let kind = DatasetKind::parse(&args.kind)
        .ok_or_else(|| CoreError::validation(format!("unknown dataset kind {:?}", args.kind)))?;
    let spec = DatasetSpec::new(kind, args.n, args.noise, args.seed);
    let cloud = datasets::generate(&spec)?;
    let mut buf = Vec::new();
    cloud.write_csv(&mut buf)?;
    write_or_print(&args.out, String::from_utf8_lossy(&buf).trim_end())
}

fn cmd_ph(args: PhArgs) -> Result<(), CoreError> {
    if args.dim > 1 {
        return Err(CoreError::validation("only dimensions 0 and 1 are supported"));
    }
    let cloud = PointCloud::read_csv_path(&args.input)?;
    let engine = match args.engine.as_str() {
        "auto" => {
            if cloud.dim() == 2 && !args.zero_pairs {
                "planar"
            } else {
                "reduction"
            }
        }
        e @ ("planar" | "reduction") => e,
        other => return Err(CoreError::validation(format!("unknown engine {other:?}"))),
    };
    let diagrams = match engine {
        "planar" => {
            if args.zero_pairs {
                return Err(CoreError::validation(
                    "zero-persistence pairs require the reduction engine",
                ));
            }
            let opts = PlanarOptions { parallel: args.threads != 1 };
            let res = run_in_pool(args.threads, || planar_rips_persistence(&cloud, &opts))?;
            vec![res.dgm0, res.dgm1]
        }
        _ => {
            let opts = RipsOptions {
                keep_zero_pairs: args.zero_pairs,
                ..Default::default()
            };
            rips_persistence(&cloud, args.dim, &opts)?
        }
    };
    let json = serde_json::to_string_pretty(&diagrams[..=args.dim.min(diagrams.len() - 1)])
        .expect("diagram serialization");
    write_or_print(&args.out, &json)
}

fn run_in_pool<T>(
    threads: usize,
    f: impl FnOnce() -> Result<T, CoreError> + Send,
) -> Result<T, CoreError>
where
    T: Send,
{
    if threads <= 1 {
        return f();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CoreError::internal(format!("thread pool: {e}")))?;
    pool.install(f)
}

fn apply_config(args: &mut ProjectArgs) -> Result<(), CoreError> {
    let Some(path) = &args.config else { return Ok(()) };
    let text = std::fs::read_to_string(path)?;
    let mut kv: HashMap<String, String> = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CoreError::validation(format!("config line {} is not key=value", lineno + 1))
        })?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }
    let parse_err = |k: &str, v: &str| CoreError::validation(format!("bad config value {k}={v}"));
    for (k, v) in kv {
        match k.as_str() {
            "loss" => args.loss = v,
            "mode" => args.mode = v,
            "restarts" => args.restarts = v.parse().map_err(|_| parse_err("restarts", &v))?,
            "seed" => args.seed = v.parse().map_err(|_| parse_err("seed", &v))?,
            "weight" => args.weight = v.parse().map_err(|_| parse_err("weight", &v))?,
            "iters" => args.iters = v.parse().map_err(|_| parse_err("iters", &v))?,
            "lr" => args.lr = v.parse().map_err(|_| parse_err("lr", &v))?,
            "standardize" => {
                args.standardize = v.parse().map_err(|_| parse_err("standardize", &v))?
            }
            other => {
                return Err(CoreError::validation(format!("unknown config key {other:?}")));
            }
        }
    }
    Ok(())
}

fn cmd_project(mut args: ProjectArgs) -> Result<(), CoreError> {
    apply_config(&mut args)?;
    let variant = LossVariant::parse(&args.loss)
        .ok_or_else(|| CoreError::validation(format!("unknown loss {:?}", args.loss)))?;
    let x = PointCloud::read_csv_path(&args.input)?;
    let tc = TrainConfig {
        iterations: args.iters,
        learning_rate: args.lr,
        weight: args.weight,
        variant,
        restarts: args.restarts,
        seed: args.seed,
        standardize: args.standardize,
        ..Default::default()
    };

    let (z, trace, model) = match args.mode.as_str() {
        "autoencoder" => {
            let ae = AutoencoderConfig { seed: args.seed, ..Default::default() };
            let out = train(&x, &ae, &tc)?;
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            (out.z, out.trace, Some(out.model))
        }
        "free" => {
            let out = embed_free(&x, &tc, None)?;
            (out.z, out.trace, None)
        }
        other => return Err(CoreError::validation(format!("unknown mode {other:?}"))),
    };

    if let Some(p) = &args.out_embedding {
        z.write_csv_path(p)?;
    }
    if let Some(p) = &args.out_trace {
        let mut buf = Vec::new();
        write_trace_csv(&trace, &mut buf)?;
        std::fs::write(p, buf)?;
    }
    if let Some(p) = &args.out_model {
        match &model {
            Some(m) => std::fs::write(p, m.to_json())?,
            None => eprintln!("warning: free mode trains no model; skipping {}", p.display()),
        }
    }
    if let Some(p) = &args.out_svg {
        let gens = input_generators(&x, &z)?;
        std::fs::write(p, svg::render(&z, &gens))?;
    }
    if let Some(p) = &args.out_report {
        let report = quality_report(&x, &z, 10, args.seed)?;
        std::fs::write(p, report.to_json())?;
    }
    if args.out_embedding.is_none() {
        let mut buf = Vec::new();
        z.write_csv(&mut buf)?;
        println!("{}", String::from_utf8_lossy(&buf).trim_end());
    }
    let _ = model.as_ref().map(|m| encode(m, &x));
    Ok(())
}

/// Significant persistent generators of the input, drawn over the embedding.
fn input_generators(
    x: &PointCloud,
    z: &PointCloud,
) -> Result<Vec<topodr_embed::eval::ProjectedGenerator>, CoreError> {
    let a = analyze(x, 1, &RipsOptions::default())?;
    let records = cascade::cascades(&a)?;
    project_generators(z, &records, 0.2)
}

fn cmd_metrics(args: MetricsArgs) -> Result<(), CoreError> {
    let x = PointCloud::read_csv_path(&args.input)?;
    let z = PointCloud::read_csv_path(&args.embedding)?;
    let report = quality_report(&x, &z, args.k, args.seed)?;
    write_or_print(&args.out, &report.to_json())
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, CoreError> {
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<T>()
                .map_err(|_| CoreError::validation(format!("bad {what} entry {tok:?}")))
        })
        .collect()
}

fn cmd_bench(args: BenchArgs) -> Result<(), CoreError> {
    let kind = bench::BenchKind::parse(&args.kind)
        .ok_or_else(|| CoreError::validation(format!("unknown bench kind {:?}", args.kind)))?;
    let sizes: Vec<usize> = parse_list(&args.sizes, "size")?;
    let engines: Vec<Engine> = args
        .engines
        .split(',')
        .map(|e| {
            Engine::parse(e.trim())
                .ok_or_else(|| CoreError::validation(format!("unknown engine {e:?}")))
        })
        .collect::<Result<_, _>>()?;
    let threads: Vec<usize> = parse_list(&args.threads, "thread count")?;
    let rows = bench::bench_scaling(kind, &sizes, &engines, &threads, args.reps, args.seed)?;
    let mut out = String::from(bench::csv_header());
    out.push('\n');
    for row in &rows {
        out.push_str(&row.to_csv());
        out.push('\n');
    }
    write_or_print(&args.out, out.trim_end())
}
