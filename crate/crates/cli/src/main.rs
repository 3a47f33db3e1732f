use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use eignet_core::experiments::acceptance::CRITERIA;
use eignet_core::experiments::{run, Experiment, ExperimentConfig, NodeSpec, Outcome};
use eignet_core::{Error, System};

const USAGE: u8 = 2;
const FAILURE: u8 = 1;

#[derive(Parser)]
#[command(name = "eignet", version, about = "Localized kernels, quadrature and eignet experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args)]
struct Global {
    /// Base seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "results")]
    out: PathBuf,
    /// Tolerance override.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write <experiment>.csv and <experiment>.json.
    Run(RunArgs),
    /// Quadrature rules.
    Quad {
        #[command(subcommand)]
        command: QuadCommand,
    },
    /// Run every acceptance criterion.
    Acceptance,
}

#[derive(Args)]
struct RunArgs {
    #[arg(value_parser = parse_experiment)]
    experiment: Experiment,
    #[arg(long, value_parser = parse_system)]
    system: Option<System>,
    /// Scale, order or band, depending on the experiment.
    #[arg(long)]
    n: Option<f64>,
    /// Comma-separated scales.
    #[arg(long, value_delimiter = ',')]
    scales: Option<Vec<f64>>,
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    /// Number of seeds.
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long, value_parser = parse_nodes)]
    nodes: Option<NodeSpec>,
    #[arg(long)]
    trials: Option<usize>,
    /// JSON config; its fields override the flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum QuadCommand {
    /// Build a rule from nodes and write it with a JSON sidecar.
    Build {
        #[arg(long, value_parser = parse_system, default_value = "torus:1")]
        system: System,
        #[arg(long)]
        order: f64,
        /// random:M, equispaced:M or exact.
        #[arg(long, value_parser = parse_nodes, default_value = "random:400")]
        nodes: NodeSpec,
    },
}

fn parse_experiment(s: &str) -> Result<Experiment, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_system(s: &str) -> Result<System, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_nodes(s: &str) -> Result<NodeSpec, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let g = &cli.global;
    let config = match cli.command {
        Command::Run(args) => match run_config(args, g) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(USAGE);
            }
        },
        Command::Quad {
            command: QuadCommand::Build { system, order, nodes },
        } => {
            let mut c = base(Experiment::QuadBuild, g);
            c.system = Some(system.to_string());
            c.n = Some(order);
            c.nodes = Some(nodes);
            c
        }
        Command::Acceptance => return acceptance(g),
    };
    if let Err(e) = config.system() {
        eprintln!("error: {e}");
        return ExitCode::from(USAGE);
    }
    match run(&config) {
        Ok(outcome) => report(&outcome, &config),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(FAILURE)
        }
    }
}

fn base(experiment: Experiment, g: &Global) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(experiment);
    c.seed = g.seed.unwrap_or(0);
    c.tol = g.tol;
    c.out = Some(g.out.clone());
    c
}

fn run_config(args: RunArgs, g: &Global) -> Result<ExperimentConfig, Error> {
    let mut c = base(args.experiment, g);
    c.system = args.system.map(|s| s.to_string());
    c.n = args.n;
    c.scales = args.scales;
    c.sizes = args.sizes;
    c.seeds = args.seeds;
    c.nodes = args.nodes;
    c.trials = args.trials;
    match args.config {
        Some(path) => c.merge_json(&fs::read_to_string(&path)?),
        None => Ok(c),
    }
}

fn report(outcome: &Outcome, config: &ExperimentConfig) -> ExitCode {
    let dir = config.out.clone().unwrap_or_else(|| PathBuf::from("results"));
    match outcome.write(&dir) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(FAILURE);
        }
    }
    for (name, v) in &outcome.summary.fitted {
        println!("{name} = {v:e}");
    }
    for c in &outcome.summary.checks {
        let tag = if c.passed { "pass" } else { "FAIL" };
        println!("{tag}: {} = {:e} ({})", c.name, c.value, c.bound);
    }
    if outcome.passed() {
        ExitCode::SUCCESS
    } else {
        eprintln!("{} check(s) failed", outcome.failing().len());
        ExitCode::from(FAILURE)
    }
}

fn acceptance(g: &Global) -> ExitCode {
    let mut all = true;
    for crit in CRITERIA {
        let mut config = crit.config();
        config.out = Some(g.out.join(crit.experiment.name()));
        let start = std::time::Instant::now();
        let ok = match run(&config) {
            Ok(outcome) => {
                if let Err(e) = outcome.write(config.out.as_deref().unwrap_or(&g.out)) {
                    eprintln!("error: {e}");
                }
                outcome.passed()
            }
            Err(e) => {
                eprintln!("criterion {}: {e}", crit.id);
                false
            }
        };
        let secs = start.elapsed().as_secs_f64();
        println!(
            "[{}] {:>2} {} ({secs:.1}s)",
            if ok { "pass" } else { "FAIL" },
            crit.id,
            crit.name
        );
        all &= ok;
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(FAILURE)
    }
}
