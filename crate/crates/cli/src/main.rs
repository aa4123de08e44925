use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bwkm_core::bench::{
    format_summary, run_experiment, run_method, summarize, write_csv, write_jsonl, BudgetPolicy,
    ExperimentConfig,
};
use bwkm_core::io::{
    format_centroids, read_dataset, validate_file, write_centroids, write_dataset,
};
use bwkm_core::{synthesize_mixture, Dataset, Error, Method, RngStream};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

#[derive(Parser)]
#[command(
    name = "bwkm",
    version,
    about = "Boundary weighted k-means and its benchmark harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster one dataset with one method.
    Cluster(ClusterArgs),
    /// Run every selected method on every dataset, k and repetition.
    Bench(BenchArgs),
    /// Write a synthetic Gaussian mixture.
    Gen(GenArgs),
    /// Check a dataset file and report malformed lines.
    Validate(ValidateArgs),
}

/// Settings shared by `cluster` and `bench`. Anything given here overrides the config file.
#[derive(Args)]
struct Tuning {
    /// TOML file with an `[experiment]` table (and `[[datasets]]` for bench).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Stop condition for the partition method; repeat to combine.
    /// One of `budget:X`, `boundary`, `shift:EPS`, `bound:T`, `iters:N`.
    #[arg(long = "stop")]
    stop: Vec<String>,
    /// Initial partition size.
    #[arg(long)]
    m: Option<usize>,
    /// Starting partition size.
    #[arg(long = "m-prime")]
    m_prime: Option<usize>,
    /// Sample size for the initial partition.
    #[arg(long)]
    s: Option<usize>,
    /// Repetitions per cutting-probability estimate.
    #[arg(long)]
    r: Option<usize>,
    /// Mini-batch size.
    #[arg(long = "b")]
    batch: Option<usize>,
    /// Markov chain length of k-MC2 seeding.
    #[arg(long)]
    chain: Option<usize>,
    /// Smaller sizes throughout, for quick checks.
    #[arg(long = "test-mode")]
    test_mode: bool,
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    #[arg(long, default_value = "bwkm")]
    method: String,
    /// Directory for `centroids.csv` and `record.jsonl`; centroids go to stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    tuning: Tuning,
}

#[derive(Args)]
struct BenchArgs {
    /// Dataset file; repeatable. Adds to any datasets listed in the config file.
    #[arg(long)]
    data: Vec<PathBuf>,
    /// Number of clusters; repeatable.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    k: Vec<u64>,
    /// Comma-separated methods.
    #[arg(long, value_delimiter = ',')]
    method: Vec<String>,
    #[arg(long)]
    reps: Option<usize>,
    /// `min-of-baselines` or `fixed:N`.
    #[arg(long)]
    budget: Option<String>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: Option<u64>,
    /// Record wall-clock times (results are then no longer byte-reproducible).
    #[arg(long)]
    timing: bool,
    /// Directory for `results.jsonl`, `results.csv` and `summary.txt`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    tuning: Tuning,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    /// Number of mixture components.
    #[arg(long)]
    k: usize,
    /// Lattice spacing between component centers.
    #[arg(long, default_value_t = 10.0)]
    separation: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    data: PathBuf,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    experiment: Option<toml::Table>,
    #[serde(default)]
    datasets: Vec<DatasetEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetEntry {
    name: Option<String>,
    path: Option<PathBuf>,
    generate: Option<Generate>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Generate {
    n: usize,
    d: usize,
    k: usize,
    #[serde(default = "default_separation")]
    separation: f64,
    #[serde(default)]
    seed: u64,
}

fn default_separation() -> f64 {
    10.0
}

/// Failure with the exit status it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidConfig(_) | Error::ZeroK => 2,
            Error::Io { .. } => 3,
            _ => 4,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn io_failure(context: &Path, e: io::Error) -> Failure {
    Failure {
        code: 3,
        message: format!("{}: {e}", context.display()),
    }
}

type Outcome<T = ()> = std::result::Result<T, Failure>;

fn load_config(path: Option<&Path>) -> Outcome<(ExperimentConfig, Vec<(String, Dataset)>)> {
    let Some(path) = path else {
        return Ok((ExperimentConfig::default(), Vec::new()));
    };
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    let file: ConfigFile =
        toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let config = match file.experiment {
        Some(table) => table
            .try_into()
            .map_err(|e| usage(format!("{}: [experiment]: {e}", path.display())))?,
        None => ExperimentConfig::default(),
    };
    let base = path.parent().unwrap_or(Path::new("."));
    let mut datasets = Vec::new();
    for (i, entry) in file.datasets.into_iter().enumerate() {
        let (default_name, ds) = match (entry.path, entry.generate) {
            (Some(p), None) => {
                let p = base.join(p);
                let name = p
                    .file_stem()
                    .map_or(format!("data{i}"), |s| s.to_string_lossy().into());
                (name, read_dataset(&p)?)
            }
            (None, Some(g)) => {
                let ds = synthesize_mixture(
                    g.n,
                    g.d,
                    g.k,
                    g.separation,
                    &mut RngStream::new(g.seed, 0),
                )?;
                (format!("mixture{i}"), ds)
            }
            _ => {
                return Err(usage(format!(
                    "dataset {i}: give exactly one of `path` or `generate`"
                )))
            }
        };
        datasets.push((entry.name.unwrap_or(default_name), ds));
    }
    Ok((config, datasets))
}

fn apply_tuning(config: &mut ExperimentConfig, t: &Tuning) {
    if let Some(seed) = t.seed {
        config.seed = seed;
    }
    if !t.stop.is_empty() {
        config.stop.clone_from(&t.stop);
    }
    if t.m.is_some() {
        config.m = t.m;
    }
    if t.m_prime.is_some() {
        config.m_prime = t.m_prime;
    }
    if t.s.is_some() {
        config.s = t.s;
    }
    if let Some(r) = t.r {
        config.r = r;
    }
    if let Some(b) = t.batch {
        config.batch = b;
    }
    if let Some(c) = t.chain {
        config.chain_length = c;
    }
    config.test_mode |= t.test_mode;
}

fn create_dir(dir: &Path) -> Outcome {
    fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))
}

fn create_file(path: &Path) -> Outcome<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| io_failure(path, e))
}

fn cluster(args: ClusterArgs) -> Outcome {
    let (mut config, _) = load_config(args.tuning.config.as_deref())?;
    apply_tuning(&mut config, &args.tuning);
    let method: Method = args.method.parse()?;
    config.methods = vec![method];
    config.validate()?;
    let ds = read_dataset(&args.data)?;
    let k = args.k as usize;
    let (centroids, mut record) = run_method(&config, method, &ds, k, config.seed, None)?;
    record.dataset = args
        .data
        .file_stem()
        .map_or_else(String::new, |s| s.to_string_lossy().into());
    let last = record.final_row().cloned();
    match &args.out {
        Some(dir) => {
            create_dir(dir)?;
            write_centroids(&dir.join("centroids.csv"), &centroids)?;
            let path = dir.join("record.jsonl");
            let mut out = create_file(&path)?;
            write_jsonl(&mut out, std::slice::from_ref(&record))?;
            out.flush().map_err(|e| io_failure(&path, e))?;
        }
        None => {
            format_centroids(io::stdout().lock(), &centroids)
                .map_err(|e| io_failure(Path::new("stdout"), e))?;
        }
    }
    if let Some(row) = last {
        eprintln!(
            "{method}: k={k} error={:.6e} distances={} iterations={} stop={}",
            row.exact_error.unwrap_or(f64::NAN),
            row.distances,
            row.iter,
            record.stop_reason.as_str()
        );
    }
    Ok(())
}

fn bench(args: BenchArgs) -> Outcome {
    let (mut config, mut datasets) = load_config(args.tuning.config.as_deref())?;
    apply_tuning(&mut config, &args.tuning);
    if !args.k.is_empty() {
        config.ks = args.k.iter().map(|&k| k as usize).collect();
    }
    if !args.method.is_empty() {
        config.methods = args
            .method
            .iter()
            .map(|m| m.parse())
            .collect::<Result<_, Error>>()?;
    }
    if let Some(reps) = args.reps {
        config.repetitions = reps;
    }
    if let Some(b) = &args.budget {
        config.budget = b.parse::<BudgetPolicy>()?;
    }
    if let Some(j) = args.jobs {
        config.jobs = Some(j as usize);
    }
    config.timing |= args.timing;
    for path in &args.data {
        let name = path.file_stem().map_or_else(
            || path.display().to_string(),
            |s| s.to_string_lossy().into(),
        );
        datasets.push((name, read_dataset(path)?));
    }
    if datasets.is_empty() {
        return Err(usage(
            "no datasets: pass --data or list them in the config file",
        ));
    }
    let records = run_experiment(&config, &datasets)?;
    let summary = format_summary(&summarize(&records)?);
    print!("{summary}");
    if let Some(dir) = &args.out {
        create_dir(dir)?;
        let path = dir.join("results.jsonl");
        let mut out = create_file(&path)?;
        write_jsonl(&mut out, &records)?;
        out.flush().map_err(|e| io_failure(&path, e))?;
        let path = dir.join("results.csv");
        write_csv(create_file(&path)?, &records)?;
        let path = dir.join("summary.txt");
        fs::write(&path, summary).map_err(|e| io_failure(&path, e))?;
    }
    Ok(())
}

fn generate(args: GenArgs) -> Outcome {
    let ds = synthesize_mixture(
        args.n,
        args.d,
        args.k,
        args.separation,
        &mut RngStream::new(args.seed, 0),
    )?;
    match &args.out {
        Some(path) => write_dataset(path, &ds)?,
        None => {
            let mut out = BufWriter::new(io::stdout().lock());
            for p in ds.points() {
                let line: Vec<String> = p.iter().map(f64::to_string).collect();
                writeln!(out, "{}", line.join(","))
                    .map_err(|e| io_failure(Path::new("stdout"), e))?;
            }
            out.flush()
                .map_err(|e| io_failure(Path::new("stdout"), e))?;
        }
    }
    Ok(())
}

fn validate(args: ValidateArgs) -> Outcome {
    let report = validate_file(&args.data)?;
    println!("n={} d={} header={}", report.n, report.d, report.header);
    for v in &report.violations {
        println!("line {}: {}", v.line, v.message);
    }
    if report.is_valid() {
        Ok(())
    } else if report.violations.is_empty() {
        Err(Failure {
            code: 4,
            message: "no data rows".into(),
        })
    } else {
        Err(Failure {
            code: 4,
            message: format!("{} malformed lines", report.violations.len()),
        })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Cluster(a) => cluster(a),
        Command::Bench(a) => bench(a),
        Command::Gen(a) => generate(a),
        Command::Validate(a) => validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("bwkm: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
