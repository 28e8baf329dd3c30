use clap::{Args, Parser, Subcommand};
use mrsav_harness::config::{
    load_config, parse_diagnostics, parse_override, RunConfig,
};
use mrsav_harness::convergence::{run_convergence_study, RowStatus};
use mrsav_harness::diagnose::run_diagnostics;
use mrsav_harness::error::{HarnessError, Result};
use mrsav_harness::plot::plot_file;
use mrsav_harness::simulation::{run_simulation, CONFIG_COPY};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

/// Mean-reverting SAV BDF2 solver for 2D and 3D geophysical flows.
#[derive(Parser)]
#[command(name = "mrsav", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Manufactured-solution temporal convergence study.
    Converge(RunArgs),
    /// Long run writing a time series and checkpoints.
    Simulate(RunArgs),
    /// Spectrum, burst statistics and tail fractions of a series.
    Diagnose(DiagnoseArgs),
    /// SVG plots of any CSV written by the other subcommands.
    Plot(PlotArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override a setting, e.g. `--set run.t_end=50` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    /// mrsav, explicit_baseline or gamma_zero.
    #[arg(long)]
    mode: Option<String>,
    /// Output directory.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Continue from a checkpoint instead of the configured initial data.
    #[arg(long)]
    restart: Option<PathBuf>,
}

#[derive(Args)]
struct DiagnoseArgs {
    /// Series file written by `simulate`.
    series: PathBuf,
    /// Configuration to take the `[diagnostics]` section from; defaults to
    /// the `config.toml` beside the series, if any.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory; defaults to the directory of the series.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    /// CSV files to plot.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Output directory; defaults to the directory of each input.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn quote(s: &str) -> String {
    format!("{s:?}")
}

fn run_config(args: &RunArgs) -> Result<RunConfig> {
    let mut o = args
        .overrides
        .iter()
        .map(|s| parse_override(s))
        .collect::<Result<Vec<_>>>()?;
    let mut push = |k: &str, v: String| o.push((k.to_string(), v));
    if let Some(v) = args.dt {
        push("stepper.dt", v.to_string());
    }
    if let Some(v) = args.gamma {
        push("stepper.gamma", v.to_string());
    }
    if let Some(v) = args.t_end {
        push("run.t_end", v.to_string());
    }
    if let Some(v) = &args.mode {
        push("stepper.mode", quote(v));
        // a gamma from the file must not clash with a gamma_zero flag
        if v == "gamma_zero" && args.gamma.is_none() {
            push("stepper.gamma", "0".into());
        }
    }
    if let Some(v) = &args.output {
        push("output.dir", quote(&v.to_string_lossy()));
    }
    let mut config = load_config(&args.config, &o)?;
    if let Some(cp) = &args.restart {
        config.initial.preset = None;
        config.initial.checkpoint = Some(cp.clone());
        config.validate()?;
    }
    Ok(config)
}

fn parent_of(p: &Path) -> PathBuf {
    match p.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn converge(args: &RunArgs) -> Result<()> {
    let config = run_config(args)?;
    let (rows, path) = run_convergence_study(&config)?;
    let show = |v: Option<f64>| v.map(|x| format!("{x:.6e}")).unwrap_or_else(|| "-".into());
    println!("{:>12} {:>14} {:>8} {:>14} {:>8}", "dt", "err_omega", "order", "err_psi", "order");
    for r in &rows {
        match r.status {
            RowStatus::Ok => println!(
                "{:>12} {:>14} {:>8} {:>14} {:>8}",
                r.dt,
                show(r.err_omega),
                r.order_omega.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into()),
                show(r.err_psi),
                r.order_psi.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into()),
            ),
            RowStatus::Diverged { step } => println!("{:>12} diverged at step {step}", r.dt),
        }
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn simulate(args: &RunArgs) -> Result<()> {
    let config = run_config(args)?;
    let summary = run_simulation(&config)?;
    let s = &summary.final_state;
    println!(
        "reached t = {} after {} steps, q = {}",
        s.time(config.stepper.dt),
        s.step,
        s.q
    );
    println!("wrote {} and {}", summary.series.display(), summary.final_checkpoint.display());
    Ok(())
}

fn diagnose(args: &DiagnoseArgs) -> Result<()> {
    let overrides = args
        .overrides
        .iter()
        .map(|s| parse_override(s))
        .collect::<Result<Vec<_>>>()?;
    let beside = parent_of(&args.series).join(CONFIG_COPY);
    let source = match &args.config {
        Some(p) => Some(p.clone()),
        None if beside.exists() => Some(beside),
        None => None,
    };
    let text = match &source {
        Some(p) => Some(std::fs::read_to_string(p).map_err(|e| HarnessError::io(p, e))?),
        None => None,
    };
    let cfg = parse_diagnostics(text.as_deref(), &overrides)?;
    let out = args.output.clone().unwrap_or_else(|| parent_of(&args.series));
    let report = run_diagnostics(&args.series, &cfg, &out)?;
    println!(
        "{} burst events above {} ({} intervals)",
        report.bursts.events.len(),
        report.burst_threshold,
        report.bursts.intervals.len()
    );
    for (lo, hi, p) in &report.tails {
        println!("P({lo} <= {} <= {hi}) = {p:.4}", cfg.tail_column);
    }
    for f in &report.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn plot(args: &PlotArgs) -> Result<()> {
    for input in &args.inputs {
        let out = args.output.clone().unwrap_or_else(|| parent_of(input));
        for p in plot_file(input, &out)? {
            println!("wrote {}", p.path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Converge(a) => converge(a),
        Command::Simulate(a) => simulate(a),
        Command::Diagnose(a) => diagnose(a),
        Command::Plot(a) => plot(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
