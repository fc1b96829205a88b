use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wsnsim::config::{ConfigError, SimConfig, Strategy};
use wsnsim::report::{self, AggregateFile, ReportError, RoundsFile};
use wsnsim::sim::{SimError, Simulation};
use wsnsim::sweep::{sweep, SweepError, SweepSpec};

#[derive(Parser)]
#[command(name = "wsnsim", version, about = "Flat WSN negotiation routing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write rounds.csv
    Run(RunArgs),
    /// Run every (nodes, strategy, seed) combination and write sweep.csv and aggregate.csv
    Sweep(SweepArgs),
    /// Join run/sweep outputs into plot-ready figure series
    Compare(CompareArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` config file; missing keys take defaults
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_strategy)]
    strategy: Option<Strategy>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Also write trace.csv with every ADV/REQ/DATA message
    #[arg(long)]
    trace: bool,
    /// Also write deployment.csv with initial node positions
    #[arg(long)]
    deployment: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated node counts
    #[arg(long, value_delimiter = ',', required = true)]
    nodes: Vec<usize>,
    /// Comma-separated strategies (he, mecrt, minhop)
    #[arg(long, value_delimiter = ',', value_parser = parse_strategy, required = true)]
    strategies: Vec<Strategy>,
    /// Number of seeds, counting up from the config seed
    #[arg(long)]
    seeds: u64,
    /// Spacing in rounds of the sampled curves in curves.csv
    #[arg(long, default_value_t = 100)]
    checkpoint: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// rounds.csv files (or directories containing one)
    #[arg(long = "run", num_args = 1..)]
    runs: Vec<PathBuf>,
    /// aggregate.csv (or a sweep output directory)
    #[arg(long)]
    sweep: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse().map_err(|e: ConfigError| e.to_string())
}

enum Failure {
    Config(String),
    Internal(String),
    Input(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Internal(_) => 1,
            Failure::Config(_) => 2,
            Failure::Input(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Internal(m) | Failure::Input(m) => m,
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Internal(e.to_string())
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(c) => Failure::Config(c.to_string()),
            other => Failure::Internal(other.to_string()),
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<SimConfig, Failure> {
    match path {
        None => Ok(SimConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?;
            SimConfig::parse(&text).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))
        }
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, Failure> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let mut config = load_config(args.config.as_deref())?;
    if let Some(s) = args.strategy {
        config.strategy = s;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config.validate().map_err(|e| Failure::Config(e.to_string()))?;

    let mut sim = Simulation::new(config.clone())?;
    if args.deployment {
        let mut w = create(&args.out, "deployment.csv")?;
        report::write_deployment_csv(&mut w, &config, sim.nodes())?;
        w.flush()?;
    }
    if args.trace {
        sim.enable_trace();
    }
    let mut trace = Vec::new();
    let mut rounds = Vec::new();
    while sim.termination().is_none() {
        rounds.push(sim.step()?);
        if args.trace {
            trace.extend(sim.take_trace());
        }
    }
    let result = wsnsim::SimResult {
        config: config.clone(),
        initial_total_j: sim.initial_total_j(),
        rounds,
        lifetime_first_death: sim.first_death(),
        lifetime_termination: sim.round(),
        termination_reason: sim.termination().expect("terminated"),
    };

    let mut w = create(&args.out, "rounds.csv")?;
    report::write_rounds_csv(&mut w, &result)?;
    w.flush()?;
    if args.trace {
        let mut w = create(&args.out, "trace.csv")?;
        report::write_trace_csv(&mut w, &config, &trace)?;
        w.flush()?;
    }
    println!(
        "strategy={} seed={} n={} rounds={} first_death={} delivered={} consumed_j={} reason={}",
        config.strategy,
        config.seed,
        config.node_count,
        result.lifetime_termination,
        result
            .lifetime_first_death
            .map_or_else(|| "none".to_string(), |r| r.to_string()),
        result.rounds_delivered(),
        report::fmt_f64(result.total_consumed_j()),
        result.termination_reason.as_str(),
    );
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Failure> {
    let base = load_config(args.config.as_deref())?;
    if args.seeds == 0 {
        return Err(Failure::Config("--seeds must be at least 1".into()));
    }
    let seeds: Vec<u64> = (0..args.seeds).map(|i| base.seed.wrapping_add(i)).collect();
    let spec = SweepSpec {
        node_counts: args.nodes.clone(),
        strategies: args.strategies.clone(),
        seeds: seeds.clone(),
        checkpoint_every: args.checkpoint,
    };
    let table = sweep(&base, &spec).map_err(|e| match e {
        SweepError::Run {
            source: SimError::Config(_),
            ..
        }
        | SweepError::Empty(_)
        | SweepError::ZeroCheckpoint => Failure::Config(e.to_string()),
        other => Failure::Internal(other.to_string()),
    })?;

    let (nodes, strategies) = (&args.nodes, &args.strategies);
    let mut w = create(&args.out, "sweep.csv")?;
    report::write_sweep_csv(&mut w, &base, nodes, strategies, &seeds, &table)?;
    w.flush()?;
    let mut w = create(&args.out, "aggregate.csv")?;
    report::write_aggregate_csv(&mut w, &base, nodes, strategies, &seeds, &table)?;
    w.flush()?;
    let mut w = create(&args.out, "curves.csv")?;
    report::write_curves_csv(&mut w, &base, nodes, strategies, &seeds, &table)?;
    w.flush()?;
    for a in &table.aggregates {
        println!(
            "n={} strategy={} runs={} mean_life_fd={:.1} mean_life_term={:.1}",
            a.n, a.strategy, a.runs, a.mean_life_fd, a.mean_life_term
        );
    }
    Ok(())
}

fn resolve(path: &Path, file: &str) -> PathBuf {
    if path.is_dir() {
        path.join(file)
    } else {
        path.to_path_buf()
    }
}

fn cmd_compare(args: CompareArgs) -> Result<(), Failure> {
    let input = |e: ReportError| Failure::Input(e.to_string());
    let runs = args
        .runs
        .iter()
        .map(|p| {
            let path = resolve(p, "rounds.csv");
            RoundsFile::read(&path).map(|f| (path.display().to_string(), f))
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(input)?;
    let aggregate = args
        .sweep
        .as_ref()
        .map(|p| {
            let path = resolve(p, "aggregate.csv");
            AggregateFile::read(&path).map(|f| (path.display().to_string(), f))
        })
        .transpose()
        .map_err(input)?;
    let comparison = report::compare(&runs, aggregate.as_ref()).map_err(input)?;

    let mut provenance_src = runs
        .first()
        .map(|(_, f)| f.provenance.clone())
        .or_else(|| aggregate.as_ref().map(|(_, a)| a.provenance.clone()))
        .expect("compare checked for input");
    let sources: Vec<String> = runs
        .iter()
        .map(|(p, _)| p.clone())
        .chain(aggregate.iter().map(|(p, _)| p.clone()))
        .collect();
    provenance_src.extra.insert("inputs".into(), sources.join(","));
    for series in &comparison.series {
        let mut w = create(&args.out, &format!("{}.csv", series.name))?;
        let extra: Vec<(&str, String)> = provenance_src
            .extra
            .iter()
            .map(|(k, v)| (k.as_str(), v.clone()))
            .collect();
        w.write_all(report::provenance(&series.name, &provenance_src.config, &extra).as_bytes())?;
        series.write_csv(&mut w)?;
        w.flush()?;
    }
    for line in &comparison.verdicts {
        println!("{line}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Compare(a) => cmd_compare(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
