//! `branchlab` batch driver.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use branchlab::config::ExperimentConfig;
use branchlab::experiments::{run, EXPERIMENTS};
use branchlab::verify::{run_all, run_criterion, CriterionReport};
use branchlab::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "branchlab",
    version,
    about = "Branching-process experiments and acceptance checks",
    after_help = "Experiments: evolve, simulate, limit, grimvall, smol-residual, universal-build, universal-demo, continuity.\n\
                  `branchlab verify <criterion>` runs one acceptance criterion; `branchlab verify` runs all.\n\
                  Exit codes: 0 success, 1 configuration or runtime error, 2 tolerance failure."
)]
struct Cli {
    /// Experiment name, or `verify`.
    command: String,
    /// Criterion name for `verify`.
    criterion: Option<String>,
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Built-in law: unit, binary, ternary, subcritical-demo.
    #[arg(long, conflicts_with = "weights")]
    law: Option<String>,
    /// Family-size weights `w0,w1,...`.
    #[arg(long)]
    weights: Option<String>,
    #[arg(long, conflicts_with = "c")]
    h: Option<f64>,
    #[arg(long, conflicts_with = "c")]
    tau: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    /// `log:LO:HI:N` or a comma list.
    #[arg(long = "q-grid")]
    q_grid: Option<String>,
    /// `log:LO:HI:N` or a comma list.
    #[arg(long = "t-grid")]
    t_grid: Option<String>,
    /// Extra `key=value` overrides, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            ExperimentConfig::parse(&text)?
        }
        None => ExperimentConfig::new(""),
    };
    cfg.experiment = cli.command.clone();
    let flags: [(&str, Option<String>); 9] = [
        ("seed", cli.seed.map(|v| v.to_string())),
        ("out", cli.out.as_ref().map(|p| p.display().to_string())),
        ("law", cli.law.clone()),
        ("weights", cli.weights.clone()),
        ("h", cli.h.map(|v| format!("{v:?}"))),
        ("tau", cli.tau.map(|v| format!("{v:?}"))),
        ("c", cli.c.map(|v| format!("{v:?}"))),
        ("q_grid", cli.q_grid.clone()),
        ("t_grid", cli.t_grid.clone()),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            cfg.set(k, &v)?;
        }
    }
    for kv in &cli.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| Error::Config(format!("--set '{kv}' is not key=value")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if cfg.experiment != cli.command {
        return Err(Error::Config("the experiment is chosen by the positional argument".into()));
    }
    Ok(cfg)
}

fn verify(name: Option<&str>) -> Result<u8> {
    let reports: Vec<CriterionReport> = match name {
        Some(n) => vec![run_criterion(n).map_err(|e| Error::Config(e.to_string()))?],
        None => run_all()?,
    };
    for r in &reports {
        println!("{}", r.line());
    }
    Ok(if reports.iter().all(|r| r.pass()) { 0 } else { 2 })
}

fn execute(cli: &Cli) -> Result<u8> {
    if cli.command == "verify" {
        return verify(cli.criterion.as_deref());
    }
    if let Some(extra) = &cli.criterion {
        return Err(Error::Config(format!("unexpected argument '{extra}'")));
    }
    if !EXPERIMENTS.contains(&cli.command.as_str()) {
        return Err(Error::Config(format!("unknown experiment '{}'", cli.command)));
    }
    let cfg = build_config(cli)?;
    let outcome = run(&cfg)?;
    let (csv, json) = outcome.write(&cfg)?;
    for c in &outcome.checks {
        println!("[{}] {} = {:.6e} (tol {:.1e})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.tolerance);
    }
    println!("wrote {} and {}", csv.display(), json.display());
    Ok(outcome.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
