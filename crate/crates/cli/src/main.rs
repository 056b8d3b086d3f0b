//! `sastep` command line: run experiments, solve references, check bounds.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sastep::harness::bounds::run_bounds;
use sastep::harness::config::{BoundsConfig, Environment, ExperimentConfig, PolicyKind};
use sastep::harness::output::{
    emit_outputs, execution_value_map, format_csv, format_reference_csv, placement_control_map, prepare_output_dir,
};
use sastep::harness::svg::{LinePlot, Series};
use sastep::reference::{
    execution_bellman_residual, placement_bellman_residual, solve_execution_reference, solve_placement_reference,
};
use sastep::{run_experiment, Algorithm, Error, Result, SeedTag};

#[derive(Parser, Debug)]
#[command(
    name = "sastep",
    version,
    about = "Tabular stochastic approximation with sign-adaptive step sizes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monte-Carlo experiment on one environment.
    Run(RunArgs),
    /// Solve the environment exactly and write the reference table and maps.
    Reference(ReferenceArgs),
    /// Check the error bound, the recursion identity and one-step contractions.
    Bounds(BoundsArgs),
    /// Print the default config of an environment.
    Config {
        #[arg(value_parser = parse_env)]
        env: Environment,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(value_parser = parse_env)]
    env: Environment,
    #[arg(long)]
    config: Option<PathBuf>,
    /// rl, saga, pass or pass_vec.
    #[arg(long, value_parser = parse_algo)]
    algo: Option<Algorithm>,
    /// constant, inv, pc or optimal.
    #[arg(long, value_parser = parse_policy)]
    policy: Option<PolicyKind>,
    #[arg(long)]
    episodes: Option<u64>,
    #[arg(long)]
    iterations: Option<u64>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReferenceArgs {
    #[arg(value_parser = parse_env)]
    env: Environment,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

fn parse_env(s: &str) -> std::result::Result<Environment, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_algo(s: &str) -> std::result::Result<Algorithm, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_policy(s: &str) -> std::result::Result<PolicyKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn load(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    text.parse()
}

fn load_for(env: Environment, path: Option<&Path>) -> Result<ExperimentConfig> {
    let cfg = match path {
        Some(p) => load(p)?,
        None => ExperimentConfig::default_for(env),
    };
    if cfg.experiment.environment != env {
        return Err(Error::Config(format!(
            "config describes environment `{}` but `{}` was requested",
            cfg.experiment.environment.name(),
            env.name()
        )));
    }
    Ok(cfg)
}

fn run(args: RunArgs) -> Result<()> {
    let mut cfg = load_for(args.env, args.config.as_deref())?;
    let e = &mut cfg.experiment;
    if let Some(a) = args.algo {
        e.algorithm = a;
        e.compare.clear();
    }
    if let Some(p) = args.policy {
        e.policy = p;
        e.compare.clear();
    }
    if let Some(n) = args.episodes {
        e.episodes = n;
        e.iterations = 0;
        e.cadence = 0;
    }
    if let Some(n) = args.iterations {
        e.iterations = n;
        e.cadence = 0;
    }
    if let Some(n) = args.paths {
        e.paths = n;
    }
    if let Some(s) = args.seed {
        e.seed = s;
    }
    if let Some(w) = args.workers {
        e.workers = w;
    }
    if let Some(o) = &args.out {
        e.output = o.display().to_string();
    }
    cfg.revalidate()?;
    let out = PathBuf::from(&cfg.experiment.output);
    prepare_output_dir(&out)?;
    let output = run_experiment(&cfg)?;
    for d in &output.frame.diagnostics {
        eprintln!("warning: {d}");
    }
    let files = emit_outputs(&output, &cfg, &out)?;
    for (algo, policy) in output.frame.groups() {
        if let Some((step, v)) = output
            .frame
            .series(&algo, &policy, "l2_error_mean", SeedTag::All)
            .last()
        {
            println!("{algo}+{policy}: l2_error at step {step} = {v:.6}");
        }
    }
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn reference(args: ReferenceArgs) -> Result<()> {
    let cfg = load_for(args.env, args.config.as_deref())?;
    prepare_output_dir(&args.out)?;
    let write = |name: &str, body: String| {
        let p = args.out.join(name);
        std::fs::write(&p, body).map_err(|e| Error::Output(format!("{}: {e}", p.display())))?;
        println!("wrote {}", p.display());
        Ok::<_, Error>(())
    };
    match args.env {
        Environment::Drift => {
            let d = cfg.drift.as_ref().expect("validated drift block");
            let model = sastep::env::DriftModel::new(d.f.clone(), d.sigma)?;
            write(
                "reference.csv",
                format_reference_csv(&sastep::reference::solve_drift_reference(&model)),
            )?;
        }
        Environment::Placement => {
            let model = &cfg.placement.as_ref().expect("validated placement block").model;
            let r = solve_placement_reference(model)?;
            println!("bellman residual = {:e}", placement_bellman_residual(model, &r)?);
            write("reference.csv", format_reference_csv(&r))?;
            let map = placement_control_map(model, |id| r.control[id].unwrap_or(0), "reference control")?;
            write("control_reference.svg", map.render())?;
        }
        Environment::Execution => {
            let model = &cfg.execution.as_ref().expect("validated execution block").model;
            let r = solve_execution_reference(model)?;
            println!("bellman residual = {:e}", execution_bellman_residual(model, &r)?);
            write("reference.csv", format_reference_csv(&r))?;
            write(
                "value_reference.svg",
                execution_value_map(model, &r.values, "reference value").render(),
            )?;
        }
    }
    Ok(())
}

fn bounds(args: BoundsArgs) -> Result<()> {
    let (cfg, seed) = match &args.config {
        Some(p) => {
            let c = load(p)?;
            (c.bounds.clone().unwrap_or_default(), c.experiment.seed)
        }
        None => (BoundsConfig::default(), 0),
    };
    prepare_output_dir(&args.out)?;
    let out = run_bounds(&cfg, args.seed.unwrap_or(seed))?;
    let path = args.out.join("bounds.csv");
    std::fs::write(&path, format_csv(&out.frame)).map_err(|e| Error::Output(format!("{}: {e}", path.display())))?;
    let pts = |metric: &str| -> Vec<(f64, f64)> {
        out.frame
            .series("analysis", "testbed", metric, SeedTag::All)
            .into_iter()
            .filter(|(n, _)| *n > 0)
            .map(|(n, v)| (n as f64, v))
            .collect()
    };
    let plot = LinePlot {
        title: "simulated error and bound".into(),
        x_label: "n".into(),
        y_label: "E[e]".into(),
        log_x: true,
        log_y: true,
        series: vec![
            Series {
                label: "simulated".into(),
                points: pts("simulated_error"),
            },
            Series {
                label: "bound".into(),
                points: pts("bound"),
            },
        ],
    };
    let svg = args.out.join("bound.svg");
    std::fs::write(&svg, plot.render()).map_err(|e| Error::Output(format!("{}: {e}", svg.display())))?;
    println!(
        "testbed: B' = {:.4}, violations = {}",
        out.testbed.b_prime,
        out.testbed.violations.len()
    );
    println!("recursion identity: max relative gap = {:.3e}", out.lemma5_max_gap);
    println!("one-step contraction: violations = {}", out.contraction_violations);
    println!("wrote {}\nwrote {}", path.display(), svg.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Reference(a) => reference(a),
        Command::Bounds(a) => bounds(a),
        Command::Config { env } => {
            print!("{}", ExperimentConfig::default_for(env).serialize());
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            for line in e.to_string().lines() {
                eprintln!("{line}");
            }
            eprintln!("error kind={} message={:?}", e.kind(), e.to_string());
            ExitCode::from(if matches!(e, Error::Config(_)) { 2 } else { 1 })
        }
    }
}
