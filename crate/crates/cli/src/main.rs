//! Command-line front end: estimates, sweeps, simulations, calibration, and
//! design recommendations over scenario files.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use clusterwatt::report::{format_sig, sig_digits, write_points_csv, write_trace_csv};
use clusterwatt::scenario::{parse_scenario, Scenario};
use clusterwatt_core::domain::{validate_scenario, ClusterDesign, ExecutionMode};
use clusterwatt_core::explorer::{recommend, sweep_designs, DesignPoint, PointOutcome};
use clusterwatt_core::model::{estimate, JoinEstimate};
use clusterwatt_core::power::{fit_power_model, CalibrationSample};
use clusterwatt_core::sim::simulate;
use clusterwatt_core::Error as CoreError;

#[derive(Parser)]
#[command(
    name = "clusterwatt",
    version,
    about = "Performance and energy design laboratory for parallel join clusters"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a power curve to utilization/watts samples.
    Calibrate {
        /// CSV file with header `utilization,watts`.
        samples: PathBuf,
    },
    /// Estimate one join on the scenario's cluster.
    Estimate {
        /// Scenario file.
        scenario: PathBuf,
    },
    /// Evaluate every design on the scenario's sweep axis and emit CSV.
    Sweep {
        /// Scenario file with a [sweep] section.
        scenario: PathBuf,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay the join on the fluid simulator instead of the closed form.
    Simulate {
        /// Scenario file.
        scenario: PathBuf,
        /// Number of identical copies of the query to run together.
        #[arg(long, default_value_t = 1)]
        concurrency: usize,
        /// Write a per-node utilization trace CSV here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Pick the cheapest swept design that meets a performance floor.
    Recommend {
        /// Scenario file with a [sweep] section.
        scenario: PathBuf,
        /// Minimum acceptable perf_ratio; defaults to the scenario's
        /// perf_floor when the flag is omitted.
        #[arg(long)]
        perf_floor: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

/// 2 when the design space itself rejects the request, 1 for everything
/// else (parse errors, bad files, bad data).
fn exit_code_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<CoreError>() {
        Some(CoreError::Infeasible { .. }) | Some(CoreError::NoFeasibleDesign) => 2,
        _ => 1,
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Calibrate { samples } => cmd_calibrate(&samples),
        Command::Estimate { scenario } => cmd_estimate(&scenario),
        Command::Sweep { scenario, out } => cmd_sweep(&scenario, out.as_deref()),
        Command::Simulate {
            scenario,
            concurrency,
            trace,
        } => cmd_simulate(&scenario, concurrency, trace.as_deref()),
        Command::Recommend {
            scenario,
            perf_floor,
        } => cmd_recommend(&scenario, perf_floor),
    }
}

fn load_scenario(path: &Path) -> anyhow::Result<Scenario> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading scenario `{}`", path.display()))?;
    let scenario = parse_scenario(&text)
        .with_context(|| format!("parsing scenario `{}`", path.display()))?;
    validate_scenario(&scenario.cluster, &scenario.query)?;
    if let Some(reference) = &scenario.reference {
        validate_scenario(reference, &scenario.query)?;
    }
    Ok(scenario)
}

fn swept_points(scenario: &Scenario) -> anyhow::Result<Vec<DesignPoint>> {
    let designs = scenario
        .designs()
        .context("scenario has no [sweep] section")?;
    for design in &designs {
        validate_scenario(design, &scenario.query)?;
    }
    Ok(sweep_designs(
        &designs,
        &scenario.query,
        scenario.reference_design(),
    )?)
}

fn design_label(design: &ClusterDesign) -> String {
    design
        .active_groups()
        .map(|(_, g)| format!("{}:{}", g.spec.name, g.count))
        .collect::<Vec<_>>()
        .join(" ")
}

fn print_estimate(design: &ClusterDesign, est: &JoinEstimate) {
    let digits = sig_digits();
    println!("strategy = {}", est.strategy.name());
    println!("mode = {}", est.mode.name());
    if let ExecutionMode::Heterogeneous { builder_group } = est.mode {
        println!("builder = {}", design.node_groups[builder_group].spec.name);
    }
    for (label, phase) in [("build", &est.build), ("probe", &est.probe)] {
        println!("t_{label}_s = {}", format_sig(phase.duration_s, digits));
        println!("bottleneck_{label} = {}", phase.binding_bottleneck.name());
        println!("e_{label}_j = {}", format_sig(phase.energy_j, digits));
    }
    println!("t_total_s = {}", format_sig(est.total_s, digits));
    println!("e_total_j = {}", format_sig(est.total_j, digits));
    for (label, phase) in [("build", &est.build), ("probe", &est.probe)] {
        for (group, watts) in &phase.per_group_power_w {
            println!("power_{label}_w.{group} = {}", format_sig(*watts, digits));
        }
    }
}

fn cmd_calibrate(path: &Path) -> anyhow::Result<()> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading samples `{}`", path.display()))?;
    let mut lines = text.lines().enumerate();
    let header = lines
        .next()
        .map(|(_, l)| l.trim())
        .context("empty samples file")?;
    if header != "utilization,watts" {
        anyhow::bail!("expected header `utilization,watts`, got `{header}`");
    }
    let mut samples = Vec::new();
    for (index, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (u, w) = line
            .split_once(',')
            .with_context(|| format!("line {}: expected `utilization,watts`", index + 1))?;
        let utilization: f64 = u
            .trim()
            .parse()
            .with_context(|| format!("line {}: bad utilization `{u}`", index + 1))?;
        let watts: f64 = w
            .trim()
            .parse()
            .with_context(|| format!("line {}: bad watts `{w}`", index + 1))?;
        samples.push(CalibrationSample { utilization, watts });
    }
    let report = fit_power_model(&samples)?;
    let digits = sig_digits();
    println!("family = {}", report.chosen.family.name());
    println!("coeff_a = {}", format_sig(report.chosen.coeff_a, digits));
    println!("coeff_b = {}", format_sig(report.chosen.coeff_b, digits));
    println!(
        "r_squared = {}",
        format_sig(report.chosen_r_squared(), digits)
    );
    for (family, r_squared) in &report.r_squared_by_family {
        println!(
            "r_squared.{} = {}",
            family.name(),
            format_sig(*r_squared, digits)
        );
    }
    Ok(())
}

fn cmd_estimate(path: &Path) -> anyhow::Result<()> {
    let scenario = load_scenario(path)?;
    let est = estimate(&scenario.cluster, &scenario.query)?;
    print_estimate(&scenario.cluster, &est);
    Ok(())
}

fn cmd_sweep(path: &Path, out: Option<&Path>) -> anyhow::Result<()> {
    let scenario = load_scenario(path)?;
    let points = swept_points(&scenario)?;
    match out {
        Some(dest) => {
            let mut file = fs::File::create(dest)
                .with_context(|| format!("creating `{}`", dest.display()))?;
            write_points_csv(&points, &mut file)
                .with_context(|| format!("writing `{}`", dest.display()))?;
        }
        None => {
            let stdout = std::io::stdout();
            write_points_csv(&points, &mut stdout.lock()).context("writing csv to stdout")?;
        }
    }
    Ok(())
}

fn cmd_simulate(path: &Path, concurrency: usize, trace: Option<&Path>) -> anyhow::Result<()> {
    anyhow::ensure!(concurrency >= 1, "concurrency must be at least 1");
    let scenario = load_scenario(path)?;
    let jobs = vec![scenario.query.clone(); concurrency];
    let result = simulate(&scenario.cluster, &jobs)?;
    let digits = sig_digits();
    println!("jobs = {}", result.per_job.len());
    println!("makespan_s = {}", format_sig(result.makespan_s, digits));
    println!(
        "cluster_energy_j = {}",
        format_sig(result.cluster_energy_j, digits)
    );
    for (index, job) in result.per_job.iter().enumerate() {
        println!(
            "job_completion_s.{index} = {}",
            format_sig(job.completion_s, digits)
        );
        println!("job_energy_j.{index} = {}", format_sig(job.energy_j, digits));
    }
    if let Some(dest) = trace {
        let mut file =
            fs::File::create(dest).with_context(|| format!("creating `{}`", dest.display()))?;
        write_trace_csv(&result.trace, &mut file)
            .with_context(|| format!("writing `{}`", dest.display()))?;
        println!("trace = {}", dest.display());
    }
    Ok(())
}

fn cmd_recommend(path: &Path, perf_floor: Option<f64>) -> anyhow::Result<()> {
    let scenario = load_scenario(path)?;
    let floor = perf_floor
        .or_else(|| scenario.sweep.as_ref().and_then(|s| s.perf_floor))
        .context("no performance floor: pass --perf-floor or set perf_floor in [sweep]")?;
    let points = swept_points(&scenario)?;
    let choice = recommend(&points, floor)?;
    let PointOutcome::Feasible {
        estimate,
        perf_ratio,
        energy_ratio,
        edp_ratio,
    } = &choice.outcome
    else {
        unreachable!("recommend only returns feasible points");
    };
    let digits = sig_digits();
    println!("design = {}", design_label(&choice.design));
    println!("mode = {}", estimate.mode.name());
    println!("perf_floor = {}", format_sig(floor, digits));
    println!("perf_ratio = {}", format_sig(*perf_ratio, digits));
    println!("energy_ratio = {}", format_sig(*energy_ratio, digits));
    println!("edp_ratio = {}", format_sig(*edp_ratio, digits));
    println!("t_total_s = {}", format_sig(estimate.total_s, digits));
    println!("e_total_j = {}", format_sig(estimate.total_j, digits));
    Ok(())
}
