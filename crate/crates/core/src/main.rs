use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use densdrift::config::{self, Settings};
use densdrift::eval::report::{
    read_events_csv, read_summary_csv, render_strips, write_events_csv, write_results_csv,
    write_summary_csv,
};
use densdrift::eval::{bench, prequential_run, render_table, BenchGrid, ExperimentConfig};
use densdrift::generators::write_dataset;
use densdrift::Error;

const OUT_DIR_ENV: &str = "DENSDRIFT_OUT_DIR";

#[derive(Parser)]
#[command(name = "densdrift", version, about = "Concept-drift detection on partially labeled streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic stream to CSV.
    Generate(GenerateArgs),
    /// Run one prequential experiment.
    Run(RunArgs),
    /// Run a grid of experiments and summarize them.
    Bench(BenchArgs),
    /// Render a summary CSV as a table, and optionally drift-event strips.
    Report(ReportArgs),
}

#[derive(Args)]
struct DatasetArgs {
    /// Generator: sea or hyperplane.
    #[arg(long = "gen")]
    generator: Option<String>,
    #[arg(long)]
    length: Option<u64>,
    /// Comma-separated drift indices, or `none`.
    #[arg(long)]
    drift_at: Option<String>,
    #[arg(long)]
    noise: Option<f64>,
    /// HyperPlane dimension.
    #[arg(long)]
    dim: Option<usize>,
    /// Invert binary labels from this index on.
    #[arg(long)]
    invert_at: Option<u64>,
}

impl DatasetArgs {
    fn apply(&self, s: &mut Settings) -> densdrift::Result<()> {
        set(s, "dataset.gen", &self.generator)?;
        set(s, "dataset.length", &self.length)?;
        set(s, "dataset.drift_at", &self.drift_at)?;
        set(s, "dataset.noise", &self.noise)?;
        set(s, "dataset.dim", &self.dim)?;
        set(s, "dataset.invert_at", &self.invert_at)
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    dataset: DatasetArgs,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output file; defaults to `<gen>_s<seed>.csv` in the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = OUT_DIR_ENV)]
    out_dir: Option<PathBuf>,
}

/// Flags shared by `run` and `bench`; each overrides the config file.
#[derive(Args)]
struct ExperimentArgs {
    /// Experiment file with [section] key = value entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    dataset: DatasetArgs,
    /// Dataset CSV (features then a label column).
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    num_classes: Option<usize>,
    /// Knowledge discovery: active or pu.
    #[arg(long)]
    kd: Option<String>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    phi: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    min_rl: Option<usize>,
    /// Fixed scaling factor instead of the budget-derived one.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    tolerance: Option<u64>,
    #[arg(long)]
    exposed_fraction: Option<f64>,
    #[arg(long)]
    grace_period: Option<usize>,
    #[arg(long, env = OUT_DIR_ENV)]
    out_dir: Option<PathBuf>,
}

impl ExperimentArgs {
    fn settings(&self) -> densdrift::Result<Settings> {
        let mut s = match &self.config {
            // an unreadable config file is a usage error, not a dataset one
            Some(path) => Settings::load(path).map_err(|e| match e {
                Error::Io { .. } => Error::Config(e.to_string()),
                other => other,
            })?,
            None => Settings::new(),
        };
        let mut flags = Settings::new();
        self.dataset.apply(&mut flags)?;
        if let Some(path) = &self.data {
            flags.set("dataset.path", path.display().to_string())?;
            flags.set("dataset.gen", "csv")?;
        }
        set(&mut flags, "dataset.num_classes", &self.num_classes)?;
        set(&mut flags, "run.kd", &self.kd)?;
        set(&mut flags, "run.window", &self.window)?;
        set(&mut flags, "run.tolerance", &self.tolerance)?;
        set(&mut flags, "run.exposed_fraction", &self.exposed_fraction)?;
        set(&mut flags, "detector.tau", &self.tau)?;
        set(&mut flags, "detector.phi", &self.phi)?;
        set(&mut flags, "detector.delta", &self.delta)?;
        set(&mut flags, "detector.min_rl", &self.min_rl)?;
        set(&mut flags, "detector.gamma", &self.gamma)?;
        set(&mut flags, "tree.grace_period", &self.grace_period)?;
        // a generator flag on the command line replaces a CSV from the file
        if self.dataset.generator.is_some() && self.data.is_none() {
            s.remove("dataset.path");
        }
        s.merge(&flags);
        Ok(s)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: ExperimentArgs,
    /// density, ddm, eddm, adwin or ph.
    #[arg(long)]
    method: Option<String>,
    /// Label budget alpha in (0, 1].
    #[arg(long)]
    label_budget: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    run_id: Option<String>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: ExperimentArgs,
    /// Comma-separated methods.
    #[arg(long)]
    methods: Option<String>,
    /// Comma-separated budgets, or start:end:step.
    #[arg(long)]
    budgets: Option<String>,
    /// Comma-separated generator names or CSV paths.
    #[arg(long)]
    datasets: Option<String>,
    /// Comma-separated seeds.
    #[arg(long)]
    seeds: Option<String>,
    /// Budget given to the baselines (default 1.0).
    #[arg(long, conflicts_with = "controlled")]
    baseline_budget: Option<f64>,
    /// Run the baselines at every grid budget too.
    #[arg(long)]
    controlled: bool,
    /// Print the table as markdown.
    #[arg(long)]
    markdown: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Summary CSV written by `bench` or `run`.
    #[arg(long)]
    summary: PathBuf,
    #[arg(long)]
    markdown: bool,
    /// Events CSV to draw as one strip per run.
    #[arg(long, requires = "length")]
    events: Option<PathBuf>,
    /// Stream length spanned by the strips.
    #[arg(long)]
    length: Option<u64>,
    #[arg(long, default_value_t = 100)]
    width: usize,
}

fn set<T: ToString>(s: &mut Settings, key: &str, value: &Option<T>) -> densdrift::Result<()> {
    match value {
        Some(v) => s.set(key, v.to_string()),
        None => Ok(()),
    }
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    error: Error,
}

const USAGE: u8 = 2;
const IO: u8 = 3;
const DATASET: u8 = 4;
const RUN: u8 = 5;

fn fail(code: u8) -> impl FnOnce(Error) -> Failure {
    move |error| Failure { code, error }
}

/// Config errors are usage errors; anything else raised while reading the
/// inputs is a dataset problem.
fn classify_setup(error: Error) -> Failure {
    match error {
        Error::Config(_) => Failure { code: USAGE, error },
        _ => Failure { code: DATASET, error },
    }
}

fn classify_run(error: Error) -> Failure {
    match error {
        Error::Io { .. }
        | Error::Ingest { .. }
        | Error::Csv(_)
        | Error::DimensionMismatch { .. }
        | Error::NonFinite { .. } => Failure { code: DATASET, error },
        Error::Config(_) => Failure { code: USAGE, error },
        _ => Failure { code: RUN, error },
    }
}

fn out_dir(flag: &Option<PathBuf>) -> Result<PathBuf, Failure> {
    let dir = flag.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|e| Failure {
        code: IO,
        error: Error::Io { path: dir.clone(), source: e },
    })?;
    Ok(dir)
}

fn generate(args: GenerateArgs) -> Result<(), Failure> {
    let mut s = Settings::new();
    args.dataset.apply(&mut s).map_err(fail(USAGE))?;
    if args.dataset.generator.as_deref().is_some_and(|g| g != "sea" && g != "hyperplane") {
        return Err(Failure {
            code: USAGE,
            error: Error::Config("`--gen` must be sea or hyperplane".into()),
        });
    }
    let spec = s.dataset().map_err(fail(USAGE))?;
    let mut source = spec.open(args.seed).map_err(classify_setup)?;
    let path = match args.out {
        Some(p) => p,
        None => out_dir(&args.out_dir)?.join(format!("{}_s{}.csv", spec.name(), args.seed)),
    };
    let rows = write_dataset(source.as_mut(), &path).map_err(fail(IO))?;
    println!("{} {rows}", path.display());
    Ok(())
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let mut s = args.common.settings().map_err(classify_setup)?;
    let mut flags = Settings::new();
    set(&mut flags, "run.method", &args.method).map_err(fail(USAGE))?;
    set(&mut flags, "run.label_budget", &args.label_budget).map_err(fail(USAGE))?;
    set(&mut flags, "run.seed", &args.seed).map_err(fail(USAGE))?;
    set(&mut flags, "run.run_id", &args.run_id).map_err(fail(USAGE))?;
    s.merge(&flags);
    let cfg = s.experiment().map_err(classify_setup)?;
    let dir = out_dir(&args.common.out_dir)?;

    let result = prequential_run(&cfg).map_err(classify_run)?;
    let header = config::render(&cfg);
    let id = &result.run_id;
    let results = dir.join(format!("{id}_results.csv"));
    let events = dir.join(format!("{id}_events.csv"));
    let summary = dir.join(format!("{id}_summary.csv"));
    let runs = [result];
    write_results_csv(&results, &header, &runs).map_err(fail(IO))?;
    write_events_csv(&events, &header, &runs).map_err(fail(IO))?;
    let outcome = bench::CellOutcome {
        config: cfg.clone(),
        result: Ok(runs[0].clone()),
    };
    write_summary_csv(&summary, &header, &bench::summarize(&[outcome])).map_err(fail(IO))?;

    let r = &runs[0];
    println!("run {}", r.run_id);
    println!("accuracy {:.4}", r.average_accuracy());
    println!("drifts {}", r.drift_count());
    if !r.true_drift_points.is_empty() {
        let delay = r.mean_delay().map_or_else(|| "-".into(), |d| format!("{d:.0}"));
        println!(
            "detected {}/{} mean_delay {delay} false_alarms {}",
            r.detected(),
            r.true_drift_points.len(),
            r.false_alarms()
        );
    }
    println!("queries {}", r.query_count);
    println!("wrote {}", results.display());
    Ok(())
}

fn bench_cmd(args: BenchArgs) -> Result<(), Failure> {
    let mut s = args.common.settings().map_err(classify_setup)?;
    let mut flags = Settings::new();
    let list_flags = [
        ("bench.methods", &args.methods),
        ("bench.budgets", &args.budgets),
        ("bench.datasets", &args.datasets),
        ("bench.seeds", &args.seeds),
    ];
    for (key, value) in list_flags {
        set(&mut flags, key, value).map_err(fail(USAGE))?;
    }
    if args.controlled {
        flags.set("bench.baseline_budget", "grid").map_err(fail(USAGE))?;
    }
    set(&mut flags, "bench.baseline_budget", &args.baseline_budget).map_err(fail(USAGE))?;
    s.merge(&flags);

    let grid = (|| -> densdrift::Result<BenchGrid> {
        Ok(BenchGrid {
            methods: s.bench_methods()?,
            budgets: s.bench_budgets()?,
            datasets: s.bench_datasets()?,
            seeds: s.bench_seeds()?,
            base: s.experiment()?,
            baseline_budget: s.bench_baseline_budget()?,
        })
    })()
    .map_err(classify_setup)?;
    let cells = grid.cells().map_err(classify_setup)?;
    let dir = out_dir(&args.common.out_dir)?;
    let total = cells.len();
    eprintln!("running {total} cells");
    let outcomes = bench::run_cells(cells);
    let rows = bench::summarize(&outcomes);

    let mut failed = 0;
    for o in &outcomes {
        if let Err(e) = &o.result {
            failed += 1;
            eprintln!("cell {} failed: {e}", o.config.resolved_run_id());
        }
    }
    let header = bench_header(&grid);
    let runs: Vec<_> = outcomes.iter().filter_map(|o| o.result.as_ref().ok().cloned()).collect();
    write_summary_csv(&dir.join("bench_summary.csv"), &header, &rows).map_err(fail(IO))?;
    write_results_csv(&dir.join("bench_results.csv"), &header, &runs).map_err(fail(IO))?;
    write_events_csv(&dir.join("bench_events.csv"), &header, &runs).map_err(fail(IO))?;
    let table = render_table(&rows, args.markdown);
    let table_path = dir.join(if args.markdown { "bench_table.md" } else { "bench_table.txt" });
    std::fs::write(&table_path, &table).map_err(|e| Failure {
        code: IO,
        error: Error::Io { path: table_path.clone(), source: e },
    })?;
    print!("{table}");
    if failed == total {
        return Err(Failure {
            code: RUN,
            error: Error::Precondition(format!("all {total} cells failed")),
        });
    }
    Ok(())
}

fn bench_header(grid: &BenchGrid) -> Vec<String> {
    let list = |v: Vec<String>| v.join(",");
    let mut header = vec![
        "[bench]".to_string(),
        format!("methods = {}", list(grid.methods.iter().map(ToString::to_string).collect())),
        format!("budgets = {}", list(grid.budgets.iter().map(ToString::to_string).collect())),
        format!("datasets = {}", list(grid.datasets.iter().map(|d| d.name()).collect())),
        format!("seeds = {}", list(grid.seeds.iter().map(ToString::to_string).collect())),
        format!(
            "baseline_budget = {}",
            grid.baseline_budget.map_or_else(|| "grid".into(), |b| b.to_string())
        ),
    ];
    let base = ExperimentConfig { run_id: String::new(), ..grid.base.clone() };
    header.extend(config::render(&base).into_iter().filter(|l| !l.starts_with("run_id")));
    header
}

fn report(args: ReportArgs) -> Result<(), Failure> {
    let rows = read_summary_csv(&args.summary).map_err(input_error)?;
    print!("{}", render_table(&rows, args.markdown));
    if let (Some(events), Some(length)) = (&args.events, args.length) {
        if args.width == 0 {
            return Err(Failure {
                code: USAGE,
                error: Error::Config("`--width` must be positive".into()),
            });
        }
        let runs = read_events_csv(events).map_err(input_error)?;
        println!();
        print!("{}", render_strips(&runs, length, args.width));
    }
    Ok(())
}

fn input_error(error: Error) -> Failure {
    match error {
        Error::Io { .. } => Failure { code: IO, error },
        _ => Failure { code: DATASET, error },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Run(a) => run(a),
        Command::Bench(a) => bench_cmd(a),
        Command::Report(a) => report(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, error }) => {
            eprintln!("error: {error}");
            ExitCode::from(code)
        }
    }
}
