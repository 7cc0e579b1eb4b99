//! Command-line driver: simulate single runs, emit truncation
//! families, check the barrier inequality, and orchestrate the limit
//! experiments. Exit code 0 means every produced report passed, 1
//! means some report carries a FAIL flag, 2 means the request itself
//! was bad (arguments, config schema, domain errors).

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cone_ricci::barrier::{check_barrier_pde, BarrierSpec};
use cone_ricci::config::{load_config, RunConfig};
use cone_ricci::error::Result;
use cone_ricci::experiments::{
    run_decay, run_exact_validation, run_smoothening, run_uniqueness,
};
use cone_ricci::io::{
    barrier_csv, run_dir, save_flow, save_json, save_truncation, write_text,
};
use cone_ricci::solver::evolve;
use cone_ricci::truncation::{curvature_bound_check, truncate, TruncationSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
enum LogLevel {
    Quiet,
    Info,
    Debug,
}

#[derive(Parser)]
#[command(name = "cone-ricci", version, about = "Smoothening Ricci flow on cone surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[arg(long, global = true, value_enum, default_value_t = LogLevel::Info)]
    log_level: LogLevel,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML or JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Override a config key, e.g. --set solver.n=4096.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Root for run directories (default "runs").
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Args)]
struct BarrierArgs {
    #[arg(long, allow_negative_numbers = true)]
    beta: f64,
    /// Vertical offset C of the barrier; no auto-calibration here.
    #[arg(long, allow_negative_numbers = true)]
    c: f64,
    #[arg(long = "t-lo")]
    t_lo: f64,
    #[arg(long = "t-hi")]
    t_hi: f64,
    #[arg(long, default_value_t = 64)]
    samples: usize,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the deepest configured truncation and store the run.
    Simulate(ConfigArgs),
    /// Write the truncation family and its curvature-bound reports.
    Truncate(ConfigArgs),
    /// Check the supersolution inequality on a time window.
    BarrierCheck(BarrierArgs),
    /// Run the smoothening, decay, and (if configured) uniqueness suites.
    Experiment(ConfigArgs),
    /// Compare the solver against closed-form flows.
    Validate(ConfigArgs),
}

struct Logger {
    level: LogLevel,
}

impl Logger {
    fn info(&self, msg: &str) {
        if self.level >= LogLevel::Info {
            eprintln!("{msg}");
        }
    }

    fn debug(&self, msg: &str) {
        if self.level >= LogLevel::Debug {
            eprintln!("{msg}");
        }
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn prepare_run_dir(output_dir: &Option<PathBuf>, cfg: &RunConfig, log: &Logger) -> Result<PathBuf> {
    let root = output_dir.clone().unwrap_or_else(|| PathBuf::from("runs"));
    let resolved = cfg.resolved_json();
    let dir = run_dir(&root, &resolved);
    fs::create_dir_all(&dir)?;
    write_text(&dir.join("resolved_config.json"), &resolved)?;
    log.info(&format!("run directory: {}", dir.display()));
    Ok(dir)
}

fn cmd_simulate(args: &ConfigArgs, log: &Logger) -> Result<bool> {
    let cfg = load_config(&args.config, &args.set)?;
    let dir = prepare_run_dir(&args.output_dir, &cfg, log)?;
    let cone = cfg.cone()?;
    let level = *cfg.truncation.levels.last().unwrap();
    let initial = truncate(&cone, level)?;
    log.debug(&format!("initial sup u = {}", initial.sup()));
    let flow = evolve(&initial, &cfg.solver_params())?;
    save_flow(&dir.join("flow"), &flow)?;
    let ok = flow.is_complete();
    println!(
        "simulate: {} (level {level}, {} snapshots, final t = {:.6}, stop: {:?})",
        verdict(ok),
        flow.times.len(),
        flow.final_time(),
        flow.stop
    );
    Ok(ok)
}

fn cmd_truncate(args: &ConfigArgs, log: &Logger) -> Result<bool> {
    let cfg = load_config(&args.config, &args.set)?;
    let dir = prepare_run_dir(&args.output_dir, &cfg, log)?;
    let cone = cfg.cone()?;
    let seq = TruncationSequence::from_levels(cone.clone(), cfg.truncation.levels.clone())?;
    let mut bounds = Vec::with_capacity(seq.levels().len());
    for &k in seq.levels() {
        bounds.push(curvature_bound_check(&cone, k)?);
    }
    save_truncation(&dir.join("truncation"), &seq, &bounds)?;
    let mut pass = true;
    for (k, b) in seq.levels().iter().zip(&bounds) {
        println!(
            "truncate level {k}: {} (worst margin {:.3e})",
            verdict(b.pass),
            b.worst_margin
        );
        pass &= b.pass;
    }
    Ok(pass)
}

#[derive(Serialize)]
struct BarrierRequest {
    beta: f64,
    c: f64,
    t_lo: f64,
    t_hi: f64,
    samples: usize,
}

fn cmd_barrier_check(args: &BarrierArgs, log: &Logger) -> Result<bool> {
    let spec = BarrierSpec::new(args.beta, args.c)?;
    let report = check_barrier_pde(&spec, (args.t_lo, args.t_hi), args.samples)?;
    let body = serde_json::to_string_pretty(&report).expect("report serializes");
    println!("{body}");
    if let Some(root) = &args.output_dir {
        let request = BarrierRequest {
            beta: args.beta,
            c: args.c,
            t_lo: args.t_lo,
            t_hi: args.t_hi,
            samples: args.samples,
        };
        let key = serde_json::to_string(&request).expect("request serializes");
        let dir = run_dir(root, &key);
        fs::create_dir_all(&dir)?;
        save_json(&dir.join("barrier_report.json"), &report)?;
        write_text(
            &dir.join("barrier.csv"),
            &barrier_csv(&spec, (args.t_lo, args.t_hi), 16, 64)?,
        )?;
        log.info(&format!("run directory: {}", dir.display()));
    }
    Ok(report.pass)
}

fn cmd_experiment(args: &ConfigArgs, log: &Logger) -> Result<bool> {
    let cfg = load_config(&args.config, &args.set)?;
    let dir = prepare_run_dir(&args.output_dir, &cfg, log)?;
    let exp = cfg.experiment()?;
    let cone = cfg.cone()?;

    let seq = TruncationSequence::from_levels(cone.clone(), cfg.truncation.levels.clone())?;
    save_truncation(&dir.join("truncation"), &seq, &[])?;

    log.info("running smoothening suite");
    let limit = run_smoothening(&exp)?;
    save_json(&dir.join("limit_report.json"), &limit)?;
    let limit_slope = limit.decay.as_ref().map_or(f64::NAN, |d| d.slope);
    println!(
        "smoothening: {} (cauchy gap {:.3e}, decay slope {:.3})",
        verdict(limit.pass),
        limit.cauchy_gap,
        limit_slope
    );

    let deepest = *cfg.truncation.levels.last().unwrap();
    let flow = evolve(&truncate(&cone, deepest)?, &cfg.solver_params())?;
    save_flow(&dir.join("flow_deepest"), &flow)?;

    log.info("running decay suite");
    let decay = run_decay(&exp)?;
    save_json(&dir.join("decay_report.json"), &decay)?;
    println!(
        "decay: {} (slope {:.3} vs target {:.3}, cap-limited: {})",
        verdict(decay.pass),
        decay.fit.slope,
        decay.fit.target,
        decay.cap_limited
    );

    let mut pass = limit.pass && decay.pass;
    let mut uniq_line = String::from("uniqueness: not configured\n");
    if let Some(u) = &cfg.uniqueness {
        log.info("running uniqueness suite");
        let report = run_uniqueness(&exp, &u.schedule_a, &u.schedule_b)?;
        save_json(&dir.join("uniqueness_report.json"), &report)?;
        println!(
            "uniqueness: {} (defect {:.3e})",
            verdict(report.pass),
            report.defect
        );
        uniq_line = format!(
            "uniqueness: {} (defect {:.3e}, tolerance 1e-2)\n",
            verdict(report.pass),
            report.defect
        );
        pass &= report.pass;
    }

    let mut digest = String::new();
    digest.push_str("# Experiment digest\n\n");
    digest.push_str(&format!(
        "beta = {}, kind = {:?}, n = {}, scheme = {:?}, t_end = {}\n",
        cfg.beta, cfg.kind, cfg.solver.n, cfg.solver.scheme, cfg.solver.t_end
    ));
    digest.push_str(&format!("levels = {:?}\n\n", cfg.truncation.levels));
    digest.push_str(&format!(
        "smoothening: {} (monotone {}, cauchy gap {:.3e}, floor worst {:.6}, decay slope {:.3})\n",
        verdict(limit.pass),
        verdict(limit.monotone_pass),
        limit.cauchy_gap,
        limit.floor_worst,
        limit_slope
    ));
    digest.push_str(&format!(
        "decay: {} (slope {:.3}, target {:.3}, cap-limited: {})\n",
        verdict(decay.pass),
        decay.fit.slope,
        decay.fit.target,
        decay.cap_limited
    ));
    digest.push_str(&uniq_line);
    digest.push_str(&format!("\noverall: {}\n", verdict(pass)));
    write_text(&dir.join("summary.md"), &digest)?;

    Ok(pass)
}

fn cmd_validate(args: &ConfigArgs, log: &Logger) -> Result<bool> {
    let cfg = load_config(&args.config, &args.set)?;
    let dir = prepare_run_dir(&args.output_dir, &cfg, log)?;
    let exp = cfg.experiment()?;
    let report = run_exact_validation(&exp)?;
    save_json(&dir.join("validation_report.json"), &report)?;
    println!(
        "sphere flow: {} (sup error {:.3e})",
        verdict(report.sphere_pass),
        report.sphere_error
    );
    println!(
        "hyperbolic flow: {} (sup error {:.3e})",
        verdict(report.hyperbolic_pass),
        report.hyperbolic_error
    );
    println!(
        "convergence order: {} ({:?})",
        verdict(report.order_pass),
        report.orders
    );
    Ok(report.pass)
}

fn dispatch(cli: &Cli) -> Result<bool> {
    let log = Logger { level: cli.log_level };
    match &cli.command {
        Command::Simulate(args) => cmd_simulate(args, &log),
        Command::Truncate(args) => cmd_truncate(args, &log),
        Command::BarrierCheck(args) => cmd_barrier_check(args, &log),
        Command::Experiment(args) => cmd_experiment(args, &log),
        Command::Validate(args) => cmd_validate(args, &log),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let line = e
                .to_string()
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid arguments")
                .to_string();
            eprintln!("error: {line}");
            return ExitCode::from(2);
        }
    };
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
