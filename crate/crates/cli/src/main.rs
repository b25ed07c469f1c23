use std::fs::File;
use std::io::{BufWriter, Write};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64 as C64;
use serde::Serialize;

use schlesinger_core::basis::score_chart;
use schlesinger_core::flow::{compare_flows, integrate, FlowComparison, FlowParams, FlowState, ReducedOptions};
use schlesinger_core::sampling::default_lambdas;
use schlesinger_core::{chart_select, lift, reduce, Configuration, Error};

mod io;
mod verify;

use io::{ChartChoice, InstanceFile, ReducedFile};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) | CliError::Output(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

/// Errors a caller can fix by changing the input.
fn classify(e: Error) -> CliError {
    match e {
        Error::RestrictionViolated
        | Error::NoChartFound
        | Error::ChartConditionViolated
        | Error::InvalidConfiguration(_)
        | Error::InvalidReducedPoint(_)
        | Error::InvalidParams(_)
        | Error::MissingLambdas
        | Error::RootMismatch { .. }
        | Error::NotUnimodular { .. }
        | Error::OffQuadric { .. }
        | Error::MissingDirection
        | Error::ConeViolation { .. } => CliError::Input(e.to_string()),
        other => CliError::Numeric(other.to_string()),
    }
}

#[derive(Parser)]
#[command(name = "schlesinger", version, about = "sl(2,C) Schlesinger system: reduction, lifting and flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the seeded property suites and print a JSON report.
    Verify {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Comma-separated values of n (each at least 3).
        #[arg(long, value_delimiter = ',', default_value = "3,4,5", value_parser = clap::value_parser!(u64).range(3..=32))]
        n: Vec<u64>,
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
        samples: u64,
        /// Include the wall time in the report (makes it non-reproducible).
        #[arg(long)]
        timing: bool,
    },
    /// Reduce an instance to coordinates in its accompanying basis.
    Reduce {
        #[arg(short, long)]
        input: String,
    },
    /// Restore a normal-form instance from reduced coordinates.
    Lift {
        #[arg(short, long)]
        input: String,
    },
    /// Integrate the Schlesinger system along a path of one pole.
    Flow(FlowArgs),
    /// Compare the reduced full flow with the reduced Hamiltonian flow.
    Compare(FlowArgs),
}

#[derive(Args)]
struct FlowArgs {
    #[arg(short, long)]
    input: String,
    /// Index of the moving pole.
    #[arg(long)]
    k: usize,
    /// Comma-separated waypoints such as "0.1+0i,0.6+0.2i".
    #[arg(long, value_delimiter = ',', value_parser = parse_complex, allow_hyphen_values = true)]
    path: Vec<C64>,
    /// Fix λ1 = 0, λ2 = 1, λ3 = 2 (n = 3 only; the moving pole must be 0).
    #[arg(long)]
    pin_012: bool,
    #[arg(long, default_value_t = 1e-10)]
    tol_local: f64,
    #[arg(long, default_value_t = 1e-8)]
    tol_drift: f64,
    #[arg(long, default_value_t = 1e-2)]
    step_init: f64,
    #[arg(long, default_value_t = 10)]
    samples_per_segment: usize,
    /// Write the trajectory CSV here; otherwise it goes to stdout and the
    /// summary to stderr.
    #[arg(long)]
    csv: Option<String>,
}

fn parse_complex(s: &str) -> Result<C64, String> {
    s.trim().parse::<C64>().map_err(|e| format!("invalid complex number '{s}': {e}"))
}

fn emit<T: Serialize>(value: &T) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    out.write_all(io::to_json(value).as_bytes()).map_err(|e| CliError::Output(e.to_string()))
}

fn cmd_reduce(input: &str) -> Result<(), CliError> {
    let inst: InstanceFile = io::read_json(input)?;
    let cfg = inst.to_configuration()?;
    if cfg.is_triangularizable() {
        return Err(classify(Error::RestrictionViolated));
    }
    let (chart, score) = match inst.chart_spec(&cfg)? {
        Some(spec) => (spec, score_chart(&cfg, &spec).map_err(classify)?),
        None => chart_select(&cfg).map_err(classify)?,
    };
    let r = reduce(&cfg, &chart).map_err(classify)?;
    log::info!("reduced in chart ({}, {}) with score {score:e}", chart.index_i, chart.index_j);
    emit(&ReducedFile::from_reduced(&r, Some(score), inst.lambdas.clone()))
}

fn cmd_lift(input: &str) -> Result<(), CliError> {
    let file: ReducedFile = io::read_json(input)?;
    let r = file.to_reduced()?;
    let cfg = lift(&r).map_err(classify)?;
    let lambdas = file.lambdas.clone().unwrap_or_else(|| default_lambdas(r.n));
    let cfg = cfg.with_lambdas(lambdas).map_err(classify)?;
    emit(&InstanceFile::from_configuration(&cfg, Some(ChartChoice { i: r.chart.index_i, j: r.chart.index_j })))
}

fn flow_setup(args: &FlowArgs) -> Result<(Configuration, FlowParams), CliError> {
    let inst: InstanceFile = io::read_json(&args.input)?;
    let mut cfg = inst.to_configuration()?;
    if args.k > cfg.n() {
        return Err(CliError::Input(format!("--k {} out of range 0..={}", args.k, cfg.n())));
    }
    if args.pin_012 {
        if cfg.n() != 3 || args.k != 0 {
            return Err(CliError::Input("--pin-012 needs n = 3 and --k 0".into()));
        }
        let mut l = cfg.lambdas().map(|l| l.to_vec()).unwrap_or_else(|_| default_lambdas(3));
        l[1] = C64::new(0.0, 0.0);
        l[2] = C64::new(1.0, 0.0);
        l[3] = C64::new(2.0, 0.0);
        cfg = cfg.with_lambdas(l).map_err(|e| CliError::Input(format!("--pin-012: {e}")))?;
    }
    if !cfg.has_lambdas() {
        return Err(CliError::Input("the instance has no lambdas".into()));
    }
    if args.path.is_empty() {
        return Err(CliError::Input("--path needs at least one waypoint".into()));
    }
    let params = FlowParams {
        step_init: args.step_init,
        tol_local: args.tol_local,
        tol_drift: args.tol_drift,
        t_path: args.path.clone(),
        samples_per_segment: args.samples_per_segment,
    };
    params.validate().map_err(classify)?;
    Ok((cfg, params))
}

#[derive(Serialize)]
struct FlowSummary {
    k: usize,
    samples: usize,
    t_final: C64,
    max_casimir_drift: f64,
    max_sum_drift: f64,
    scale: f64,
    accepted_steps: usize,
    rejected_steps: usize,
}

fn cmd_flow(args: &FlowArgs) -> Result<(), CliError> {
    let (cfg, params) = flow_setup(args)?;
    let state = FlowState::new(cfg, args.k).map_err(classify)?;
    // integration failures, including collisions along the path, are numeric
    let traj = integrate(&state, &params).map_err(|e| match e {
        Error::InvalidParams(_) => classify(e),
        other => CliError::Numeric(other.to_string()),
    })?;
    let summary = FlowSummary {
        k: args.k,
        samples: traj.samples.len(),
        t_final: traj.last().t,
        max_casimir_drift: traj.max_casimir_drift,
        max_sum_drift: traj.max_sum_drift,
        scale: traj.scale,
        accepted_steps: traj.stats.accepted,
        rejected_steps: traj.stats.rejected,
    };
    let out_err = |e: std::io::Error| CliError::Output(e.to_string());
    match &args.csv {
        Some(path) => {
            let f = File::create(path).map_err(|e| CliError::Output(format!("{path}: {e}")))?;
            io::write_trajectory_csv(BufWriter::new(f), &traj)?;
            emit(&summary)
        }
        None => {
            io::write_trajectory_csv(std::io::stdout().lock(), &traj)?;
            std::io::stderr().write_all(io::to_json(&summary).as_bytes()).map_err(out_err)
        }
    }
}

fn cmd_compare(args: &FlowArgs) -> Result<(), CliError> {
    let (cfg, params) = flow_setup(args)?;
    let cmp: FlowComparison = compare_flows(&cfg, args.k, &params, ReducedOptions::default()).map_err(|e| match e {
        Error::InvalidParams(_) | Error::RestrictionViolated | Error::NoChartFound => classify(e),
        other => CliError::Numeric(other.to_string()),
    })?;
    for s in &cmp.chart_switches {
        log::info!("chart switch at t = {}: ({}, {}) -> ({}, {})", s.t, s.from.index_i, s.from.index_j, s.to.index_i, s.to.index_j);
    }
    emit(&cmp)
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Verify { seed, n, samples, timing } => {
            let start = Instant::now();
            let n: Vec<usize> = n.into_iter().map(|x| x as usize).collect();
            let mut report = verify::run(seed, &n, samples as usize);
            let elapsed = start.elapsed().as_secs_f64();
            log::info!("verify finished in {elapsed:.2}s");
            if timing {
                report.wall_time_s = Some(elapsed);
            }
            for p in report.properties.iter().filter(|p| !p.passed) {
                log::error!("{}/{} failed: {:e} > {:e}", p.suite, p.name, p.max_residual, p.tolerance);
            }
            emit(&report)?;
            Ok(report.passed)
        }
        Command::Reduce { input } => cmd_reduce(&input).map(|_| true),
        Command::Lift { input } => cmd_lift(&input).map(|_| true),
        Command::Flow(args) => cmd_flow(&args).map(|_| true),
        Command::Compare(args) => cmd_compare(&args).map(|_| true),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SCHLESINGER_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
