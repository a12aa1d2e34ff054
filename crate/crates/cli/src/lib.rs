//! Command dispatch for the `kinwave` binary.
//!
//! Exit codes: 0 on success, 1 when a solver stops before meeting its
//! tolerance (the best iterate is still written), 2 on any input error.

pub mod output;
pub mod scenario;

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use kinwave_core::loading::{network_load, DepartureProfile};
use kinwave_core::network::{compute_bounds, max_travel_time, validate_assumptions, Network, SolverBounds};
use kinwave_core::solvers::{cost_profile, solve_global, solve_nash, EquilibriumReport, SupportDiagnostics};
use serde::Serialize;

use output::{cost_summary, plot_rows, OutputDir};
use scenario::Scenario;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_CONVERGED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "kinwave", version, about = "Kinematic-wave network loading and departure-time equilibrium")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check flux and cost assumptions and print the solver bounds.
    Validate(RunArgs),
    /// Load a departure profile and write its curves and total cost.
    Load(RunArgs),
    /// Minimize the total cost.
    Opt(RunArgs),
    /// Compute a departure-time equilibrium.
    Nash(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Departure profile JSON for `load`, replacing the one in the scenario.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    /// Also write each route's curves on every arc it uses.
    #[arg(long)]
    pub dump_curves: bool,
    /// Write plot_data.csv with columns series,t,value.
    #[arg(long)]
    pub emit_plot_data: bool,
}

/// Failures that map to a nonzero exit code.
#[derive(Debug)]
pub enum Failure {
    Input(anyhow::Error),
    NotConverged,
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

impl From<kinwave_core::error::Error> for Failure {
    fn from(e: kinwave_core::error::Error) -> Self {
        Failure::Input(e.into())
    }
}

struct Prepared {
    scenario: Scenario,
    network: Network,
    dump_curves: bool,
    emit_plot_data: bool,
}

fn prepare(args: &RunArgs) -> Result<Prepared> {
    let mut scenario = Scenario::read(&args.scenario)?;
    if let Some(bins) = args.bins {
        scenario.solver.bins = bins;
    }
    if let Some(tol) = args.tol {
        scenario.solver.tol = tol;
    }
    if let Some(seed) = args.seed {
        scenario.solver.seed = seed;
    }
    if args.max_iter.is_some() {
        scenario.solver.max_iter = args.max_iter;
    }
    scenario.solver.validate()?;
    if let Some(path) = &args.profile {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read profile {}", path.display()))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        let profile = serde_path_to_error::deserialize(de)
            .map_err(|e| anyhow::anyhow!("profile {}: at `{}`: {}", path.display(), e.path(), e.inner()))?;
        scenario.profile = Some(profile);
    }
    let network = scenario.network()?;
    Ok(Prepared {
        dump_curves: args.dump_curves || scenario.output.dump_curves,
        emit_plot_data: args.emit_plot_data || scenario.output.emit_plot_data,
        scenario,
        network,
    })
}

/// Parses arguments from the environment and runs; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match run(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(Failure::NotConverged) => EXIT_NOT_CONVERGED,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            EXIT_INPUT
        }
    }
}

pub fn run(command: &Command) -> Result<(), Failure> {
    match command {
        Command::Validate(args) => validate(args),
        Command::Load(args) => load(args),
        Command::Opt(args) => opt(args),
        Command::Nash(args) => nash(args),
    }
}

#[derive(Serialize)]
struct ValidationReport<'a> {
    assumptions: &'a kinwave_core::network::AssumptionReport,
    bounds: Option<SolverBounds>,
    bounds_error: Option<String>,
}

fn validate(args: &RunArgs) -> Result<(), Failure> {
    let p = prepare(args)?;
    let bounds = compute_bounds(&p.network);
    let window = match &bounds {
        Ok(b) => b.t0 + b.t_max,
        // no bounds to size the window: look a fixed margin past the slowest trip
        Err(_) => {
            let g = p.network.total_demand();
            let t_max = p
                .network
                .paths()
                .iter()
                .map(|path| max_travel_time(&p.network, path, g))
                .fold(0.0, f64::max);
            t_max + 10.0
        }
    };
    let report = validate_assumptions(&p.network, (-window, window));
    print!("{}", p.network.describe_paths());
    for c in &report.checks {
        if c.passed {
            println!("ok   {}", c.item);
        } else {
            println!("FAIL {}: {}", c.item, c.detail);
        }
    }
    match &bounds {
        Ok(b) => println!(
            "bounds: T_max = {}, T0 = {}, kappa = {}, T = {}, delta_min = {}",
            b.t_max, b.t0, b.kappa, b.horizon, b.delta_min
        ),
        Err(e) => println!("bounds: {e}"),
    }
    let out = OutputDir::create(&args.out)?;
    out.write_json(
        "validation.json",
        &ValidationReport {
            assumptions: &report,
            bounds: bounds.as_ref().ok().copied(),
            bounds_error: bounds.as_ref().err().map(ToString::to_string),
        },
    )?;
    if report.passed() && bounds.is_ok() {
        Ok(())
    } else {
        Err(Failure::Input(anyhow::anyhow!(
            "scenario violates {} assumption check(s){}",
            report.failures().count(),
            if bounds.is_err() { " and has no solver bounds" } else { "" }
        )))
    }
}

/// Writes costs, curves, and plot data for a loaded profile.
fn write_loading(p: &Prepared, out: &OutputDir, profile: &DepartureProfile, with_costs: bool) -> Result<f64> {
    let loading = network_load(&p.network, profile, &p.scenario.solver.loading())?;
    let summary = cost_summary(&p.network, &loading);
    out.write_json("cost.json", &summary)?;
    out.write_curves(&p.network, &loading, p.dump_curves)?;
    if p.emit_plot_data {
        let costs = with_costs.then(|| cost_profile(&p.network, profile, &loading));
        out.write_plot_data(&plot_rows(&p.network, profile, &loading, costs.as_ref()))?;
    }
    Ok(summary.total_cost)
}

fn load(args: &RunArgs) -> Result<(), Failure> {
    let p = prepare(args)?;
    let profile = p
        .scenario
        .profile
        .clone()
        .context("`load` needs a departure profile: add \"profile\" to the scenario or pass --profile")?;
    let out = OutputDir::create(&args.out)?;
    let start = Instant::now();
    let j = write_loading(&p, &out, &profile, false)?;
    println!("total cost J = {j:.16e}");
    println!("wall time {:.3} s", start.elapsed().as_secs_f64());
    Ok(())
}

#[derive(Serialize)]
struct OptReport {
    total_cost: f64,
    converged: bool,
    iterations: usize,
    restart_costs: Vec<f64>,
    bins: usize,
    seed: u64,
}

fn opt(args: &RunArgs) -> Result<(), Failure> {
    let p = prepare(args)?;
    let config = p.scenario.solver.global();
    let out = OutputDir::create(&args.out)?;
    let start = Instant::now();
    let sol = solve_global(&p.network, &config)?;
    let elapsed = start.elapsed().as_secs_f64();
    out.write_json("profile.json", &sol.profile)?;
    let j = write_loading(&p, &out, &sol.profile, true)?;
    out.write_json(
        "report.json",
        &OptReport {
            total_cost: j,
            converged: sol.converged,
            iterations: sol.iterations,
            restart_costs: sol.restart_costs.clone(),
            bins: config.bins,
            seed: config.seed,
        },
    )?;
    println!(
        "opt: J = {j:.16e}, {} iteration(s), {}",
        sol.iterations,
        if sol.converged { "converged" } else { "not converged" }
    );
    println!("wall time {elapsed:.3} s");
    if sol.converged {
        Ok(())
    } else {
        Err(Failure::NotConverged)
    }
}

#[derive(Serialize)]
struct NashReport<'a> {
    total_cost: f64,
    #[serde(flatten)]
    equilibrium: &'a EquilibriumReport,
    diagnostics: &'a SupportDiagnostics,
    bounds: &'a SolverBounds,
    bins: usize,
    tol: f64,
}

fn nash(args: &RunArgs) -> Result<(), Failure> {
    let p = prepare(args)?;
    let config = p.scenario.solver.nash();
    let out = OutputDir::create(&args.out)?;
    let start = Instant::now();
    let sol = solve_nash(&p.network, &config)?;
    let elapsed = start.elapsed().as_secs_f64();
    out.write_json("profile.json", &sol.profile)?;
    let j = write_loading(&p, &out, &sol.profile, true)?;
    out.write_json(
        "report.json",
        &NashReport {
            total_cost: j,
            equilibrium: &sol.report,
            diagnostics: &sol.diagnostics,
            bounds: &sol.bounds,
            bins: config.bins,
            tol: config.tol,
        },
    )?;
    println!(
        "nash: gap = {:.3e} after {} iteration(s), {}; J = {j:.16e}",
        sol.report.gap,
        sol.report.iterations,
        if sol.report.converged { "converged" } else { "not converged" }
    );
    for (k, g) in sol.report.groups.iter().enumerate() {
        match g.cost {
            Some(c) => println!("  group {k}: c = {c:.6}, gap = {:.3e}", g.gap),
            None => println!("  group {k}: empty"),
        }
    }
    if !sol.diagnostics.rate_bound_ok {
        println!(
            "  warning: max rate {} exceeds the equilibrium bound {}",
            sol.diagnostics.max_rate, sol.diagnostics.kappa
        );
    }
    if !sol.diagnostics.support_ok {
        println!("  warning: departures fall outside [-T0, T0] = ±{}", sol.diagnostics.t0);
    }
    println!("wall time {elapsed:.3} s");
    if sol.report.converged {
        Ok(())
    } else {
        Err(Failure::NotConverged)
    }
}
