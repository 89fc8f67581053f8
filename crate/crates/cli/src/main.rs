//! `burgers` — run the boundary-feedback stabilization experiments and
//! mesh-refinement convergence studies from the command line.
//!
//! Exit codes: 0 on success, 2 on usage errors, 3 on solver failures.

use burgers_core::error::Error;
use burgers_core::harness::{
    parse_initial, parse_tag_rule, run_convergence, run_experiment, ConvergenceSpec, CustomParams,
    ExperimentId, ExperimentSpec,
};
use burgers_core::linalg::SolverConfig;
use burgers_core::stepper::{all_sides, ControlMode};
use burgers_core::{BoundaryTag, PhysicsParams};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "burgers",
    about = "Finite-element stabilization of the 2D viscous Burgers equation by Neumann boundary feedback",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one of the built-in experiments (or a custom one) and write
    /// observables CSVs, final-state checkpoints and a summary.
    Run(RunArgs),
    /// Run the stabilized problem on a ladder of meshes against a finer
    /// reference and report errors and convergence rates.
    Converge(ConvergeArgs),
}

#[derive(Args, Default)]
struct RunArgs {
    /// ex51 | ex52 | ex53-case1 | ex53-case2 | ex54 | custom
    #[arg(long)]
    experiment: Option<String>,
    /// feedback | linear | none (default: the experiment's comparison set)
    #[arg(long)]
    mode: Option<String>,
    /// Mesh subdivisions per side.
    #[arg(long)]
    n: Option<usize>,
    /// Time step.
    #[arg(long)]
    k: Option<f64>,
    /// Final time.
    #[arg(long = "T")]
    t_final: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Key-value config file mirroring these flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// direct | bicgstab (default: by mesh size)
    #[arg(long)]
    solver: Option<String>,
    /// Viscosity (custom experiments).
    #[arg(long)]
    nu: Option<f64>,
    /// Target constant state (custom experiments).
    #[arg(long)]
    w_d: Option<f64>,
    /// Control gain (custom experiments).
    #[arg(long)]
    c0: Option<f64>,
    /// Initial state id, e.g. poly-well:-3 (custom experiments).
    #[arg(long)]
    initial: Option<String>,
    /// Tag rule, e.g. left=control,right=dirichlet,top=zero,bottom=zero.
    #[arg(long)]
    tags: Option<String>,
}

#[derive(Args, Default)]
struct ConvergeArgs {
    /// Comma-separated subdivision counts, e.g. 4,8,16,32,64.
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<usize>>,
    /// Reference subdivision count (strictly finer than every level).
    #[arg(long = "ref")]
    reference: Option<usize>,
    /// Time step shared by all levels.
    #[arg(long)]
    k: Option<f64>,
    /// Time at which errors are evaluated.
    #[arg(long = "t-eval")]
    t_eval: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Key-value config file mirroring these flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// direct | bicgstab (default: by mesh size)
    #[arg(long)]
    solver: Option<String>,
}

/// Config-file mirror of every flag; command-line values win.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    experiment: Option<String>,
    mode: Option<String>,
    n: Option<usize>,
    k: Option<f64>,
    #[serde(rename = "T")]
    t_final: Option<f64>,
    out: Option<String>,
    solver: Option<String>,
    nu: Option<f64>,
    w_d: Option<f64>,
    c0: Option<f64>,
    initial: Option<String>,
    tags: Option<String>,
    levels: Option<Vec<usize>>,
    #[serde(rename = "ref")]
    reference: Option<usize>,
    t_eval: Option<f64>,
}

fn load_config(path: &Option<PathBuf>) -> Result<FileConfig, Error> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", p.display())))
        }
    }
}

fn parse_solver(s: &str) -> Result<SolverConfig, Error> {
    match s {
        "direct" | "direct-lu" => Ok(SolverConfig::direct()),
        "bicgstab" => Ok(SolverConfig::bicgstab()),
        other => Err(Error::InvalidArgument(format!(
            "unknown solver '{other}' (expected direct|bicgstab)"
        ))),
    }
}

fn cmd_run(args: RunArgs) -> Result<(), Error> {
    let file = load_config(&args.config)?;
    let id = args
        .experiment
        .or(file.experiment)
        .ok_or_else(|| Error::InvalidArgument("missing --experiment".into()))?;
    let id = ExperimentId::parse(&id)?;
    let out = args
        .out
        .or(file.out.map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let mut spec = ExperimentSpec::new(id, out);
    if let Some(n) = args.n.or(file.n) {
        spec.n = n;
    }
    spec.k = args.k.or(file.k);
    spec.t_final = args.t_final.or(file.t_final);
    if let Some(mode) = args.mode.or(file.mode) {
        spec.mode = Some(ControlMode::parse(&mode)?);
    }
    if let Some(s) = args.solver.or(file.solver) {
        spec.solver = Some(parse_solver(&s)?);
    }
    if id == ExperimentId::Custom {
        let nu = args.nu.or(file.nu).ok_or_else(|| {
            Error::InvalidArgument("custom experiment needs --nu, --w-d and --c0".into())
        })?;
        let w_d = args.w_d.or(file.w_d).unwrap_or(0.0);
        let c0 = args.c0.or(file.c0).ok_or_else(|| {
            Error::InvalidArgument("custom experiment needs --nu, --w-d and --c0".into())
        })?;
        let initial = match args.initial.or(file.initial) {
            Some(s) => parse_initial(&s)?,
            None => {
                return Err(Error::InvalidArgument(
                    "custom experiment needs --initial".into(),
                ))
            }
        };
        let tags = match args.tags.or(file.tags) {
            Some(s) => parse_tag_rule(&s)?,
            None => all_sides(BoundaryTag::NeumannControl),
        };
        spec.custom = Some(CustomParams {
            physics: PhysicsParams::new(nu, w_d, c0)?,
            initial,
            tags,
            forcing: None,
        });
    }
    let output = run_experiment(&spec)?;
    for r in &output.runs {
        let last = r.series.last().unwrap();
        println!(
            "{}: {} steps, final t = {}, final ||W|| = {:.6e} -> {}",
            r.label,
            r.series.n_steps(),
            last.t,
            last.l2,
            r.csv_path.display()
        );
    }
    println!("summary -> {}", output.summary_path.display());
    Ok(())
}

fn cmd_converge(args: ConvergeArgs) -> Result<(), Error> {
    let file = load_config(&args.config)?;
    let out = args
        .out
        .or(file.out.map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let mut spec = ConvergenceSpec::new(out);
    if let Some(levels) = args.levels.or(file.levels) {
        spec.levels = levels;
    }
    if let Some(r) = args.reference.or(file.reference) {
        spec.reference = r;
    }
    if let Some(k) = args.k.or(file.k) {
        spec.k = k;
    }
    if let Some(t) = args.t_eval.or(file.t_eval) {
        spec.t_eval = t;
    }
    if let Some(s) = args.solver.or(file.solver) {
        spec.solver = Some(parse_solver(&s)?);
    }
    let report = run_convergence(&spec)?;
    print!("{}", report.to_table());
    println!("report -> {}", spec.out_dir.join("convergence_report.txt").display());
    Ok(())
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::SolverFailure { .. } => 3,
        Error::StepFailed { source, .. } => exit_code_for(source),
        Error::LevelFailed { source, .. } => exit_code_for(source),
        Error::InvalidArgument(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Converge(args) => cmd_converge(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
