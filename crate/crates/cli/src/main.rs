use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use conetrack_cli::{output, plot, presets::PresetId, schema, SAFETY_H_TOL};
use conetrack_core::sim::SimError;
use conetrack_core::{Metrics, Scenario};

#[derive(Parser)]
#[command(
    name = "conetrack",
    about = "Sliding-mode trajectory tracking with a collision-cone CBF-QP safety filter",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one or more scenarios and write trace/metrics artifacts.
    Run(RunArgs),
    /// Print the switching-gain check for a scenario.
    CheckGains(CheckGainsArgs),
    /// Validate a scenario file without running it.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// List the built-in presets.
    Presets,
}

#[derive(Args)]
struct RunArgs {
    /// Built-in scenario by name; repeatable for a batch.
    #[arg(long)]
    preset: Vec<String>,
    /// Scenario JSON file; repeatable for a batch.
    #[arg(long)]
    scenario: Vec<PathBuf>,
    /// Output directory (default: $CONETRACK_OUT_DIR or ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write trajectory.svg and timeseries.svg.
    #[arg(long)]
    plots: bool,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the duration in seconds.
    #[arg(long)]
    duration: Option<f64>,
}

#[derive(Args)]
struct CheckGainsArgs {
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Check this gain instead of the scenario's K.
    #[arg(long)]
    k: Option<f64>,
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn real_main() -> Result<u8> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => run_command(args),
        Command::CheckGains(args) => check_gains_command(args),
        Command::Validate { scenario } => {
            schema::load_scenario(&scenario)?;
            println!("ok: {}", scenario.display());
            Ok(0)
        }
        Command::Presets => {
            for id in PresetId::ALL {
                println!("{}", id.name());
            }
            Ok(0)
        }
    }
}

fn load_named(preset: &str) -> Result<Scenario> {
    match PresetId::parse(preset) {
        Some(id) => Ok(id.scenario()),
        None => bail!(
            "unknown preset '{preset}' (available: {})",
            PresetId::ALL.map(|p| p.name()).join(", ")
        ),
    }
}

fn default_out_dir() -> PathBuf {
    std::env::var_os("CONETRACK_OUT_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn run_command(args: RunArgs) -> Result<u8> {
    let mut jobs: Vec<(String, Scenario)> = Vec::new();
    for name in &args.preset {
        jobs.push((name.clone(), load_named(name)?));
    }
    for path in &args.scenario {
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scenario".into());
        jobs.push((stem, schema::load_scenario(path)?));
    }
    if jobs.is_empty() {
        bail!("nothing to run: pass --preset or --scenario");
    }
    for (_, sc) in jobs.iter_mut() {
        if let Some(seed) = args.seed {
            sc.seed = seed;
        }
        if let Some(duration) = args.duration {
            sc.duration = duration;
        }
        sc.validate().map_err(|e| anyhow::anyhow!("{e}"))?;
    }

    let out_root = args.out.unwrap_or_else(default_out_dir);
    let batch = jobs.len() > 1;
    let mut worst = 0u8;

    if batch {
        // independent scenarios run concurrently, one solver instance each
        let results: Vec<Result<u8>> = std::thread::scope(|scope| {
            let handles: Vec<_> = jobs
                .iter()
                .map(|(name, sc)| {
                    let dir = out_root.join(name);
                    scope.spawn(move || run_one(sc, &dir, args.plots))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("runner thread panicked"))
                .collect()
        });
        for ((name, _), result) in jobs.iter().zip(results) {
            let code = result.with_context(|| format!("run '{name}' failed"))?;
            worst = worst.max(code);
        }
    } else {
        let (name, sc) = &jobs[0];
        worst =
            run_one(sc, &out_root, args.plots).with_context(|| format!("run '{name}' failed"))?;
    }
    Ok(worst)
}

/// Runs one scenario into `out_dir`; returns the process exit code.
fn run_one(sc: &Scenario, out_dir: &Path, plots: bool) -> Result<u8> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create {}", out_dir.display()))?;
    let (trace, metrics) = match conetrack_core::sim::run(sc) {
        Ok(pair) => pair,
        Err(e @ (SimError::ControlAbort { .. } | SimError::IntegrationAbort { .. })) => {
            eprintln!("aborted: {e}");
            return Ok(3);
        }
        Err(e) => return Err(e.into()),
    };

    output::write_trace_csv(&out_dir.join("trace.csv"), sc, &trace)?;
    output::write_metrics_json(&out_dir.join("metrics.json"), &metrics)?;
    if plots {
        std::fs::write(
            out_dir.join("trajectory.svg"),
            plot::trajectory_svg(sc, &trace),
        )?;
        std::fs::write(
            out_dir.join("timeseries.svg"),
            plot::timeseries_svg(sc, &trace),
        )?;
    }
    print_summary(sc, &metrics);

    let h_violated = metrics.min_h_c3bf.is_some_and(|h| h < SAFETY_H_TOL);
    let clearance_violated = metrics.min_clearance.is_some_and(|c| c <= 0.0);
    if h_violated || clearance_violated {
        eprintln!("safety violation: min_h_c3bf or clearance below tolerance");
        return Ok(2);
    }
    Ok(0)
}

fn print_summary(sc: &Scenario, metrics: &Metrics) {
    println!(
        "steps: {}",
        (sc.duration / sc.control_period).round() as u64
    );
    match metrics.reaching_time_measured {
        Some(t) => println!("reaching time: {t:.3} s"),
        None => println!("reaching time: not reached"),
    }
    match metrics.rms_e1_post_reach {
        Some(v) => println!("rms |e1| post reach: {v:.4} m"),
        None => println!("rms |e1| post reach: n/a"),
    }
    println!("max |e1|: {:.4} m", metrics.max_e1);
    if let Some(h) = metrics.min_h_c3bf {
        println!("min h_c3bf: {h:.6}");
    }
    if let Some(c) = metrics.min_clearance {
        println!("min clearance: {c:.4} m");
    }
    println!(
        "qp infeasible: {}, slack activations: {}, degenerate rows dropped: {}",
        metrics.qp_infeasible_count, metrics.slack_activation_count, metrics.degenerate_row_count
    );
    let g = &metrics.gain_check;
    println!(
        "gain check: K = {} vs threshold {:.5} -> {}",
        g.k,
        g.threshold,
        if g.ok { "ok" } else { "VIOLATED" }
    );
}

fn check_gains_command(args: CheckGainsArgs) -> Result<u8> {
    let sc = match (&args.preset, &args.scenario) {
        (Some(name), None) => load_named(name)?,
        (None, Some(path)) => schema::load_scenario(path)?,
        _ => bail!("pass exactly one of --preset or --scenario"),
    };
    let k = args.k.unwrap_or(sc.gains.k);
    let report =
        conetrack_core::smc::validate_gain(k, &sc.vehicle, sc.disturbance.d_bar, sc.gains.eta)
            .map_err(|e| anyhow::anyhow!("{e}"))?;

    if let conetrack_core::models::VehicleParams::Ackermann(p) = &sc.vehicle {
        let (lo, hi) =
            conetrack_core::models::sigma_bounds(p).map_err(|e| anyhow::anyhow!("{e}"))?;
        println!("sigma bounds: [{lo:.5}, {hi:.5}]");
    } else {
        println!("sigma upper: {:.5}", report.sigma_upper);
    }
    println!(
        "reaching threshold: sqrt(2) * {:.5} * {} + {} = {:.5}",
        report.sigma_upper, report.d_bar, report.eta, report.threshold
    );
    println!("K = {k}");
    println!("{}", if report.ok { "PASS" } else { "FAIL" });
    Ok(0)
}
