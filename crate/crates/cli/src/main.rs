//! Command-line driver: synthetic data generation, index build/query with
//! binary snapshots, exponent grid search, the precision–recall comparison
//! protocol, and Monte-Carlo collision checks. All randomized commands take a
//! seed and reproduce their outputs byte for byte.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use alsh_core::data::{DataVector, Dataset};
use alsh_core::eval::compare_methods;
use alsh_core::index::{build_index, AlshIndex, IndexConfig};
use alsh_core::io::{gen_synthetic, read_vectors, sample_vectors, write_vectors_file};
use alsh_core::l2lsh::{collision_law_check, write_collision_csv, HashSeed};
use alsh_core::transform::TransformParams;
use alsh_core::tuning::{rho_star, write_rho_csv, MipsInstance, ParamGrid};

#[derive(Parser)]
#[command(
    name = "alsh",
    version,
    about = "Approximate maximum inner product search via asymmetric LSH"
)]
struct Cli {
    /// Base seed for all randomized commands.
    #[arg(long, global = true, env = "ALSH_SEED", default_value_t = 42)]
    seed: u64,

    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true, env = "ALSH_WORKERS")]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset with Gaussian directions and uniform norms.
    Gen(GenArgs),
    /// Build an index over a vector file and write a binary snapshot.
    Build(BuildArgs),
    /// Query an index snapshot: retrieve candidates and rank them exactly.
    Query(QueryArgs),
    /// Grid-search the query-time exponent and emit a CSV table.
    Rho(RhoArgs),
    /// Run the precision-recall comparison protocol against the L2 baseline.
    Eval(EvalArgs),
    /// Monte-Carlo check of the analytic collision probability.
    Collide(CollideArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Number of vectors.
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    /// Dimension.
    #[arg(long, default_value_t = 50)]
    dim: usize,
    /// Lower bound of the norm range.
    #[arg(long, default_value_t = 0.2)]
    norm_low: f64,
    /// Upper bound of the norm range.
    #[arg(long, default_value_t = 1.0)]
    norm_high: f64,
    /// Output vector file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BuildArgs {
    /// Input vector file (binary, or CSV by extension).
    #[arg(long)]
    data: PathBuf,
    /// Output snapshot path.
    #[arg(long)]
    out: PathBuf,
    /// Hash functions concatenated per table key.
    #[arg(long = "num-hashes", alias = "K", default_value_t = 8)]
    num_hashes: usize,
    /// Number of hash tables.
    #[arg(long = "num-tables", alias = "L", default_value_t = 16)]
    num_tables: usize,
    /// Bucket width of the hash family.
    #[arg(long, default_value_t = 2.5)]
    r: f64,
    /// Appended coordinates of the item/query transformations.
    #[arg(long, default_value_t = 3)]
    m: u32,
    /// Norm bound items are rescaled to.
    #[arg(long, default_value_t = 0.83)]
    u: f64,
    /// Hash raw vectors without the asymmetric transformations.
    #[arg(long, default_value_t = false)]
    symmetric: bool,
}

#[derive(Args)]
struct QueryArgs {
    /// Index snapshot written by `build`.
    #[arg(long)]
    index: PathBuf,
    /// The vector file the index was built from.
    #[arg(long)]
    data: PathBuf,
    /// Query vectors (binary or CSV file).
    #[arg(long)]
    queries: PathBuf,
    /// Results per query.
    #[arg(long = "top", alias = "T", default_value_t = 10)]
    top: usize,
    /// Output CSV (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RhoArgs {
    /// Similarity thresholds as fractions of the norm bound.
    #[arg(long = "s0-frac", value_delimiter = ',', default_values_t = vec![0.5, 0.6, 0.7, 0.8, 0.9])]
    s0_frac: Vec<f64>,
    /// Approximation ratios.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])]
    c: Vec<f64>,
    /// Norm-bound grid override.
    #[arg(long = "grid-u", value_delimiter = ',')]
    grid_u: Option<Vec<f64>>,
    /// Appended-coordinate grid override.
    #[arg(long = "grid-m", value_delimiter = ',')]
    grid_m: Option<Vec<u32>>,
    /// Bucket-width grid override.
    #[arg(long = "grid-r", value_delimiter = ',')]
    grid_r: Option<Vec<f64>>,
    /// Output CSV (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Item vectors; a synthetic corpus is generated when omitted.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Query vectors; queries are sampled/generated when omitted.
    #[arg(long = "query-data")]
    query_data: Option<PathBuf>,
    /// Synthetic corpus size (when --data is omitted).
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    /// Synthetic corpus dimension (when --data is omitted).
    #[arg(long, default_value_t = 50)]
    dim: usize,
    /// Synthetic norm range, lower bound.
    #[arg(long, default_value_t = 0.2)]
    norm_low: f64,
    /// Synthetic norm range, upper bound.
    #[arg(long, default_value_t = 1.0)]
    norm_high: f64,
    /// Number of evaluation queries.
    #[arg(long = "num-queries", default_value_t = 200)]
    num_queries: usize,
    /// Gold-standard depth.
    #[arg(long = "top", alias = "T", default_value_t = 10)]
    top: usize,
    /// Shared hash functions per method.
    #[arg(long = "num-hashes", alias = "K", default_value_t = 64)]
    num_hashes: usize,
    /// Transformation size m.
    #[arg(long, default_value_t = 3)]
    m: u32,
    /// Norm bound U.
    #[arg(long, default_value_t = 0.83)]
    u: f64,
    /// Bucket width of the transformed pipeline.
    #[arg(long = "alsh-r", default_value_t = 2.5)]
    alsh_r: f64,
    /// Baseline bucket widths to sweep.
    #[arg(long = "r-list", value_delimiter = ',', default_values_t = vec![1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0])]
    r_list: Vec<f64>,
    /// Recall levels for the interpolated summary.
    #[arg(long = "recall-levels", value_delimiter = ',', default_values_t = vec![0.2, 0.5, 0.8])]
    recall_levels: Vec<f64>,
    /// Per-rank PR CSV output (stdout when omitted).
    #[arg(long = "out-pr")]
    out_pr: Option<PathBuf>,
    /// Interpolated-precision summary CSV output.
    #[arg(long = "out-summary")]
    out_summary: Option<PathBuf>,
}

#[derive(Args)]
struct CollideArgs {
    /// Distances to check.
    #[arg(long = "d-list", value_delimiter = ',', default_values_t = vec![0.5, 1.0, 2.0])]
    d_list: Vec<f64>,
    /// Bucket widths to check.
    #[arg(long = "r-list", value_delimiter = ',', default_values_t = vec![1.0, 2.5])]
    r_list: Vec<f64>,
    /// Sampled hash functions per pair.
    #[arg(long, default_value_t = 100_000)]
    trials: usize,
    /// Output CSV (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> std::process::ExitCode {
    match run() {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(err) => {
            // A consumer closing stdout early (e.g. `alsh rho | head`) is not
            // a failure.
            let broken_pipe = err.chain().any(|cause| {
                cause
                    .downcast_ref::<std::io::Error>()
                    .is_some_and(|e| e.kind() == std::io::ErrorKind::BrokenPipe)
            });
            if broken_pipe {
                return std::process::ExitCode::SUCCESS;
            }
            eprintln!("error: {err:#}");
            std::process::ExitCode::FAILURE
        }
    }
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    if let Some(workers) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .context("configuring worker pool")?;
    }
    let seed = HashSeed::new(cli.seed, 0);
    match cli.command {
        Command::Gen(args) => run_gen(args, seed),
        Command::Build(args) => run_build(args, seed),
        Command::Query(args) => run_query(args),
        Command::Rho(args) => run_rho(args),
        Command::Eval(args) => run_eval(args, seed),
        Command::Collide(args) => run_collide(args, seed),
    }
}

fn out_writer(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn run_gen(args: GenArgs, seed: HashSeed) -> Result<()> {
    let ds: Dataset<f64> = gen_synthetic(args.n, args.dim, args.norm_low, args.norm_high, seed)?;
    write_vectors_file(&ds, &args.out)?;
    eprintln!(
        "wrote {} vectors of dimension {} to {}",
        ds.len(),
        ds.dim(),
        args.out.display()
    );
    Ok(())
}

fn run_build(args: BuildArgs, seed: HashSeed) -> Result<()> {
    let ds: Dataset<f64> = read_vectors(&args.data)?;
    eprintln!("indexing {} vectors of dimension {}", ds.len(), ds.dim());
    let config = if args.symmetric {
        IndexConfig::symmetric(args.num_hashes, args.num_tables, args.r, seed)
    } else {
        let params = TransformParams::new(args.m, args.u)?;
        IndexConfig::asymmetric(args.num_hashes, args.num_tables, args.r, params, seed)
    };
    let idx = build_index(ds, config)?;
    let file = File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    idx.save(BufWriter::new(file))?;
    eprintln!("snapshot written to {}", args.out.display());
    Ok(())
}

fn run_query(args: QueryArgs) -> Result<()> {
    if args.top == 0 {
        bail!("--top must be at least 1");
    }
    let ds: Dataset<f64> = read_vectors(&args.data)?;
    let file = File::open(&args.index).with_context(|| format!("opening {}", args.index.display()))?;
    let idx = AlshIndex::load(std::io::BufReader::new(file), ds)?;
    let queries: Dataset<f64> = read_vectors(&args.queries)?;
    if queries.dim() != idx.data().dim() {
        bail!(
            "query dimension {} does not match index dimension {}",
            queries.dim(),
            idx.data().dim()
        );
    }

    let mut w = out_writer(&args.out)?;
    writeln!(w, "query,rank,item_id,score,candidates")?;
    for (qi, q) in queries.iter() {
        let candidates = idx.query(q)?;
        let ranked = idx.rank_candidates(q, &candidates, args.top)?;
        for (rank, (id, score)) in ranked.entries().iter().enumerate() {
            writeln!(w, "{qi},{},{id},{score},{}", rank + 1, candidates.len())?;
        }
    }
    Ok(())
}

fn run_rho(args: RhoArgs) -> Result<()> {
    let mut grid = ParamGrid::default();
    if let Some(u) = args.grid_u {
        grid.u_values = u;
    }
    if let Some(m) = args.grid_m {
        grid.m_values = m;
    }
    if let Some(r) = args.grid_r {
        grid.r_values = r;
    }
    let mut rows = Vec::new();
    for &frac in &args.s0_frac {
        for &c in &args.c {
            let instance = MipsInstance::new(frac, c)?;
            rows.push(rho_star(&instance, &grid)?);
        }
    }
    let mut w = out_writer(&args.out)?;
    write_rho_csv(&rows, &mut w)?;
    Ok(())
}

fn run_eval(args: EvalArgs, seed: HashSeed) -> Result<()> {
    let ds: Dataset<f64> = match &args.data {
        Some(path) => read_vectors(path)?,
        None => {
            eprintln!(
                "generating synthetic corpus: n={} dim={} norms=[{}, {}]",
                args.n, args.dim, args.norm_low, args.norm_high
            );
            gen_synthetic(args.n, args.dim, args.norm_low, args.norm_high, seed)?
        }
    };

    let queries: Vec<DataVector<f64>> = match &args.query_data {
        Some(path) => {
            let pool: Dataset<f64> = read_vectors(path)?;
            if pool.dim() != ds.dim() {
                bail!(
                    "query dimension {} does not match corpus dimension {}",
                    pool.dim(),
                    ds.dim()
                );
            }
            sample_vectors(&pool, args.num_queries, seed.offset(1 << 41))
        }
        None => {
            let qs: Dataset<f64> = gen_synthetic(
                args.num_queries,
                ds.dim(),
                args.norm_low,
                args.norm_high,
                seed.offset(1 << 40),
            )?;
            qs.vectors().to_vec()
        }
    };

    eprintln!(
        "comparing 1 transformed curve + {} baseline curves over {} queries (T={}, K={})",
        args.r_list.len(),
        queries.len(),
        args.top,
        args.num_hashes
    );
    let params = TransformParams::new(args.m, args.u)?;
    let report = compare_methods(
        &ds,
        &queries,
        args.top,
        args.num_hashes,
        params,
        args.alsh_r,
        &args.r_list,
        seed,
    )?;

    let mut pr = out_writer(&args.out_pr)?;
    report.write_pr_csv(&mut pr)?;
    drop(pr);
    if args.out_summary.is_some() || args.out_pr.is_some() {
        let mut summary = out_writer(&args.out_summary)?;
        report.write_summary_csv(&args.recall_levels, &mut summary)?;
    }
    for level in &args.recall_levels {
        eprintln!(
            "interpolated precision at recall {level}: alsh={:.4}, best baseline={:.4}",
            report.alsh_curve().precision_at_recall(*level),
            report
                .baseline_curves()
                .iter()
                .map(|c| c.precision_at_recall(*level))
                .fold(f64::NEG_INFINITY, f64::max)
        );
    }
    Ok(())
}

fn run_collide(args: CollideArgs, seed: HashSeed) -> Result<()> {
    if args.trials == 0 {
        bail!("--trials must be at least 1");
    }
    let pairs: Vec<(f64, f64)> = args
        .d_list
        .iter()
        .flat_map(|&d| args.r_list.iter().map(move |&r| (d, r)))
        .collect();
    let rows = collision_law_check(&pairs, args.trials, seed)?;
    for row in &rows {
        eprintln!(
            "d={} r={}: expected {:.6}, empirical {:.6} ({} trials, 3se={:.6})",
            row.d,
            row.r,
            row.expected,
            row.empirical,
            row.trials,
            3.0 * row.std_err()
        );
    }
    let mut w = out_writer(&args.out)?;
    write_collision_csv(&rows, &mut w)?;
    Ok(())
}
