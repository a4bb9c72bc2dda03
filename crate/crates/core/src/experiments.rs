//! Named experiments with CSV and JSON artifacts.
//!
//! Every experiment produces a table written to `<out>/<experiment>.csv`
//! (header row, LF endings, floats with 17 significant digits) and a summary
//! written to `<out>/<experiment>.json` with fields `experiment`, `config`,
//! `results` and `checks`. The process exit code is 0 when every check passes,
//! 2 when a check fails and 1 on configuration or runtime errors.

use std::fs;
use std::path::PathBuf;

use serde_json::{json, Map, Value};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::gw::{
    bernstein_step_residual, descendant_sequence, empirical_generation, simulate_coagulation, simulate_gw,
    smoluchowski_residual, truncation_safe_cap, FamilyLaw,
};
use crate::levy::{continuity_report, LevyTriple};
use crate::measure::total_variation;
use crate::scaling::{euler_exponent, grimvall_limit_targets, grimvall_stats, rescaled_levy_measure, Rescaling};
use crate::universal::{dense_targets, make_schedule, pack, universal_csbp_demo, universality_demo};
use crate::verify::{packing_targets, universal_targets, Check};

/// Experiment names accepted by [`run`].
pub const EXPERIMENTS: [&str; 8] =
    ["evolve", "simulate", "limit", "grimvall", "smol-residual", "universal-build", "universal-demo", "continuity"];

/// Table, scalar results and checks of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub experiment: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub results: Map<String, Value>,
    pub checks: Vec<Check>,
}

impl Outcome {
    fn new(experiment: &str, header: &[&str]) -> Self {
        Self {
            experiment: experiment.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            results: Map::new(),
            checks: Vec::new(),
        }
    }

    fn result(&mut self, key: &str, value: impl Into<Value>) {
        self.results.insert(key.to_string(), value.into());
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// 0 when every check passes, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.pass() {
            0
        } else {
            2
        }
    }

    pub fn csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format_float(*v)).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    pub fn summary(&self, cfg: &ExperimentConfig) -> Value {
        let config: Map<String, Value> =
            cfg.entries().into_iter().map(|(k, v)| (k.to_string(), Value::String(v))).collect();
        let checks: Vec<Value> = self
            .checks
            .iter()
            .map(
                |c| json!({"name": c.name, "value": number(c.value), "tolerance": number(c.tolerance), "pass": c.pass}),
            )
            .collect();
        json!({
            "experiment": self.experiment,
            "config": config,
            "results": self.results,
            "checks": checks,
        })
    }

    /// Writes `<out>/<experiment>.csv` and `.json`; returns both paths.
    pub fn write(&self, cfg: &ExperimentConfig) -> Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(&cfg.out)?;
        let csv = cfg.out.join(format!("{}.csv", self.experiment));
        let js = cfg.out.join(format!("{}.json", self.experiment));
        fs::write(&csv, self.csv())?;
        let text = serde_json::to_string_pretty(&self.summary(cfg)).map_err(|e| Error::Io(e.to_string()))?;
        fs::write(&js, text + "\n")?;
        Ok((csv, js))
    }
}

/// Integers print exactly, other values in scientific notation with 17 significant digits.
pub fn format_float(v: f64) -> String {
    if v.is_finite() && v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:.16e}")
    }
}

/// JSON number, or the strings `"inf"`, `"-inf"`, `"nan"`.
pub fn number(v: f64) -> Value {
    serde_json::Number::from_f64(v).map(Value::Number).unwrap_or_else(|| {
        Value::String(
            if v.is_nan() {
                "nan"
            } else if v > 0.0 {
                "inf"
            } else {
                "-inf"
            }
            .into(),
        )
    })
}

fn numbers(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|x| number(*x)).collect())
}

/// Runs the experiment named in `cfg`.
pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    match cfg.experiment.as_str() {
        "evolve" => evolve(cfg),
        "simulate" => simulate(cfg),
        "limit" => limit(cfg),
        "grimvall" => grimvall(cfg),
        "smol-residual" => smol_residual(cfg),
        "universal-build" => universal_build(cfg),
        "universal-demo" => universal_demo(cfg),
        "continuity" => continuity(cfg),
        other => Err(Error::Config(format!("unknown experiment '{other}'"))),
    }
}

fn rescaling(cfg: &ExperimentConfig) -> Result<Rescaling> {
    Rescaling::new(cfg.h, cfg.tau).map_err(|e| Error::Config(e.to_string()))
}

fn variance(law: &FamilyLaw) -> f64 {
    law.support().map(|(j, p)| p * (j as f64 - 1.0).powi(2)).sum()
}

/// Descendant laws `ν_0..ν_n`: rows `(n, j, mass)` over each support.
fn evolve(cfg: &ExperimentConfig) -> Result<Outcome> {
    let law = cfg.law.resolve()?;
    let seq = descendant_sequence(&law, cfg.n, truncation_safe_cap(&law, cfg.n))?;
    let mut out = Outcome::new("evolve", &["n", "j", "mass"]);
    for (n, nu) in seq.iter().enumerate() {
        for (j, &m) in nu.masses().iter().enumerate() {
            if m > 0.0 {
                out.rows.push(vec![n as f64, j as f64, m]);
            }
        }
    }
    let mass = seq.iter().map(|d| (d.total() - 1.0).abs()).fold(0.0, f64::max);
    let tail = seq.iter().map(|d| d.tail_mass()).fold(0.0, f64::max);
    out.result("xi", number(law.xi()));
    out.result("generations", cfg.n);
    out.result("survival", numbers(&seq.iter().map(|d| d.positive_mass()).collect::<Vec<_>>()));
    out.checks.push(Check::at_most("mass_dev", mass, cfg.tol_or(1e-10)));
    out.checks.push(Check::at_most("tail_mass", tail, cfg.tol_or(1e-10)));
    Ok(out)
}

/// Coagulation and Galton-Watson empirical laws at generation `n` against
/// the exact recursion: rows `(j, exact, coagulation, gw)`.
fn simulate(cfg: &ExperimentConfig) -> Result<Outcome> {
    let law = cfg.law.resolve()?;
    if cfg.samples == 0 {
        return Err(Error::Config("samples must be positive".into()));
    }
    let cap = truncation_safe_cap(&law, cfg.n);
    let exact = descendant_sequence(&law, cfg.n, cap)?.pop().expect("nonempty sequence");
    let coag = simulate_coagulation(&law, cfg.n, cfg.samples, cfg.seed)?.empirical(cap);
    let gw = empirical_generation(&simulate_gw(&law, cfg.n, cfg.samples, cfg.seed), cfg.n, cap)?;
    let mut out = Outcome::new("simulate", &["j", "exact", "coagulation", "gw"]);
    let top = exact.support_max().max(coag.support_max()).max(gw.support_max());
    for j in 0..=top {
        out.rows.push(vec![j as f64, exact.mass(j), coag.mass(j), gw.mass(j)]);
    }
    let tol = cfg.tol_or(0.01);
    out.result("seed", cfg.seed);
    out.result("samples", cfg.samples);
    out.checks.push(Check::at_most("tv_coag_exact", total_variation(&coag, &exact), tol));
    out.checks.push(Check::at_most("tv_gw_exact", total_variation(&gw, &exact), tol));
    out.checks.push(Check::at_most("tv_coag_gw", total_variation(&coag, &gw), tol));
    Ok(out)
}

/// Euler exponent of the rescaled law against the Feller closed form
/// `q/(1 + α₀qt/2)` with `α₀ = σ²h/τ`: rows `(t, q, euler, closed_form, gap)`.
fn limit(cfg: &ExperimentConfig) -> Result<Outcome> {
    let law = cfg.law.resolve()?;
    let r = rescaling(cfg)?;
    let alpha0 = variance(&law) * cfg.h / cfg.tau;
    let mut out = Outcome::new("limit", &["t", "q", "euler", "closed_form", "gap"]);
    let mut worst: Option<[f64; 5]> = None;
    for &t in &cfg.t_values() {
        for &q in &cfg.q_values() {
            let e = euler_exponent(&law, r, q, t)?;
            let c = q / (1.0 + 0.5 * alpha0 * q * t);
            let row = [t, q, e, c, (e - c).abs()];
            if worst.is_none_or(|w| row[4] > w[4]) {
                worst = Some(row);
            }
            out.rows.push(row.to_vec());
        }
    }
    let w = worst.expect("grids are nonempty");
    out.result("alpha0", number(alpha0));
    out.result("t", number(w[0]));
    out.result("q", number(w[1]));
    out.result("euler", number(w[2]));
    out.result("closed_form", number(w[3]));
    out.result("gap", number(w[4]));
    out.checks.push(Check::at_most("gap", w[4], cfg.tol_or(2e-3)));
    Ok(out)
}

/// Grimvall statistics against those of the Feller limit with `α₀ = σ²h/τ`:
/// rows `(x, tail, target_tail)`.
fn grimvall(cfg: &ExperimentConfig) -> Result<Outcome> {
    let law = cfg.law.resolve()?;
    law.require_critical()?;
    let r = rescaling(cfg)?;
    let pts = crate::scaling::default_tail_points();
    let s = grimvall_stats(&law, r, &pts)?;
    let target = grimvall_limit_targets(&LevyTriple::constants(variance(&law) * cfg.h / cfg.tau, 0.0)?, &pts);
    let mut out = Outcome::new("grimvall", &["x", "tail", "target_tail"]);
    for ((x, a), b) in pts.iter().zip(&s.tail).zip(&target.tail) {
        out.rows.push(vec![*x, *a, *b]);
    }
    let tol = cfg.tol_or(cfg.h * cfg.h);
    let tail_gap = s.tail.iter().zip(&target.tail).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    out.result("a_hat", number(s.a_hat));
    out.result("b_hat", number(s.b_hat));
    out.result("a_target", number(target.a_hat));
    out.result("b_target", number(target.b_hat));
    out.checks.push(Check::at_most("a_gap", (s.a_hat - target.a_hat).abs(), tol));
    out.checks.push(Check::at_most("b_gap", (s.b_hat - target.b_hat).abs(), tol));
    out.checks.push(Check::at_most("tail_gap", tail_gap, tol));
    Ok(out)
}

/// Discrete Smoluchowski and one-step Bernstein residuals for `0 ≤ m ≤ n`:
/// rows `(m, smoluchowski, bernstein)`.
fn smol_residual(cfg: &ExperimentConfig) -> Result<Outcome> {
    let law = cfg.law.resolve()?;
    let grid = cfg.q_values();
    let mut out = Outcome::new("smol-residual", &["n", "smoluchowski", "bernstein"]);
    for m in 0..=cfg.n {
        let s = smoluchowski_residual(&law, m, truncation_safe_cap(&law, m))?;
        let b = bernstein_step_residual(&law, m, &grid)?;
        out.rows.push(vec![m as f64, s, b]);
    }
    let smol = out.rows.iter().map(|r| r[1]).fold(0.0, f64::max);
    let bern = out.rows.iter().map(|r| r[2]).fold(0.0, f64::max);
    out.result("xi", number(law.xi()));
    out.checks.push(Check::at_most("smoluchowski", smol, cfg.tol_or(1e-10)));
    out.checks.push(Check::at_most("bernstein", bern, cfg.tol_or(1e-12)));
    Ok(out)
}

/// Schedule `c_k = c·e^{k²}` and packing of the built-in targets:
/// rows `(k, c_k, b_k, head_bound, tail_bound, epsilon)`.
fn universal_build(cfg: &ExperimentConfig) -> Result<Outcome> {
    let sched = make_schedule(cfg.c, cfg.k_max)?;
    let fam = dense_targets(&packing_targets()?, cfg.k_max)?;
    let p = pack(&fam, &sched, &cfg.q_values())?;
    let mut out = Outcome::new("universal-build", &["k", "c_k", "b_k", "head_bound", "tail_bound", "epsilon"]);
    for k in 1..=cfg.k_max {
        out.rows.push(vec![
            k as f64,
            p.c_seq[k - 1],
            p.b_seq[k - 1],
            p.head_bounds[k - 1],
            p.tail_bounds[k - 1],
            fam.epsilons[k - 1],
        ]);
        out.checks.push(Check::below(format!("head_bound_{k}"), p.head_bounds[k - 1], 1.0 / k as f64));
    }
    let phi_qmax = p.phi_star(p.q_max);
    out.result("c_k", numbers(&p.c_seq));
    out.result("b_k", numbers(&p.b_seq));
    out.result("head_bounds", numbers(&p.head_bounds));
    out.result("tail_bounds", numbers(&p.tail_bounds));
    out.result("schedule_sum", number(sched.sum_bound()));
    out.result("q_max", number(p.q_max));
    out.result("phi_star_qmax", number(phi_qmax));
    out.checks.push(Check::below("schedule_sum", sched.sum_bound(), 1.0));
    out.checks.push(Check::below("phi_star_qmax", phi_qmax, 1.0));
    Ok(out)
}

/// Dilations of the universal triple against each target along its
/// subsequence: rows `(target, k, kappa, bernstein, csbp_gap)`.
fn universal_demo(cfg: &ExperimentConfig) -> Result<Outcome> {
    let grid = cfg.q_values();
    let mut times = cfg.t_values();
    if times[0] > 0.0 {
        times.insert(0, 0.0);
    }
    let fam = dense_targets(&universal_targets(), cfg.k_max)?;
    let p = pack(&fam, &make_schedule(cfg.c, cfg.k_max)?, &grid)?;
    let mut out = Outcome::new("universal-demo", &["target", "k", "kappa", "bernstein", "csbp_gap"]);
    for (i, label) in ["feller", "delta1"].iter().enumerate() {
        let sub = &fam.subsequences[i];
        let demo = universality_demo(&p, &fam.targets[i], sub, &grid)?;
        let csbp = universal_csbp_demo(&p, &fam.targets[i], sub, &grid, &times)?;
        for (d, c) in demo.iter().zip(&csbp) {
            out.rows.push(vec![i as f64, d.k as f64, d.kappa, d.bernstein, c.gap]);
        }
        let gaps: Vec<f64> = csbp.iter().map(|c| c.gap).collect();
        out.result(&format!("{label}_subsequence"), sub.clone());
        out.result(&format!("{label}_csbp_gaps"), numbers(&gaps));
        out.checks.push(Check::holds(format!("{label}_gaps_decreasing"), gaps.windows(2).all(|w| w[1] < w[0])));
    }
    Ok(out)
}

/// Continuity diagnostics of the rescaled Lévy measures at `h = τ = 2⁻ᵏ`,
/// `k = 1..=n`: rows `(k, bernstein, kappa, mechanism, left_right)`.
fn continuity(cfg: &ExperimentConfig) -> Result<Outcome> {
    let law = cfg.law.resolve()?;
    if cfg.n < 2 {
        return Err(Error::Config("continuity needs n ≥ 2 levels".into()));
    }
    let triples = (1..=cfg.n as i32)
        .map(|k| Ok(LevyTriple::pure_jump(rescaled_levy_measure(&law, Rescaling::dyadic(k)?)?)))
        .collect::<Result<Vec<_>>>()?;
    let rep = continuity_report(&triples, &cfg.q_values())?;
    let mut out = Outcome::new("continuity", &["k", "bernstein", "kappa", "mechanism", "left_right"]);
    for i in 0..triples.len() {
        out.rows.push(vec![(i + 1) as f64, rep.bernstein[i], rep.kappa[i], rep.mechanism[i], rep.left_right[i]]);
    }
    out.result("limit_alpha0", number(rep.limit.alpha0()));
    out.result("limit_alpha_inf", number(rep.limit.alpha_inf()));
    out.result("continuity_points", numbers(&rep.continuity_points));
    for (name, ok) in ["bernstein", "kappa", "mechanism", "left_right"].iter().zip(rep.decreasing()) {
        out.checks.push(Check::holds(format!("{name}_decreasing"), ok));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(name: &str, pairs: &[(&str, &str)]) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(name);
        for (k, v) in pairs {
            c.set(k, v).unwrap();
        }
        c
    }

    #[test]
    fn evolve_binary_rows() {
        let out = run(&cfg("evolve", &[])).unwrap();
        assert!(out.pass());
        assert!(out.rows.contains(&vec![2.0, 0.0, 0.625]));
        assert!(out.rows.contains(&vec![0.0, 1.0, 1.0]));
        assert!(out.csv().contains("\n2,0,6.2500000000000000e-1\n"));
    }

    #[test]
    fn limit_feller_point() {
        let out = run(&cfg("limit", &[("q_grid", "1"), ("t_grid", "2")])).unwrap();
        assert_eq!(out.results["closed_form"], json!(0.5));
        let e = out.results["euler"].as_f64().unwrap();
        assert!((e - 0.5).abs() <= 2e-3);
        assert_eq!(out.exit_code(), 0);
    }

    #[test]
    fn tolerance_failure_exit_code() {
        let out = run(&cfg("limit", &[("q_grid", "1"), ("t_grid", "2"), ("tol", "1e-12")])).unwrap();
        assert_eq!(out.exit_code(), 2);
    }

    #[test]
    fn grimvall_binary() {
        let out = run(&cfg("grimvall", &[("h", "0.01"), ("tau", "0.01")])).unwrap();
        assert!(out.pass(), "{:?}", out.checks);
        assert_eq!(out.results["a_hat"], json!(0.0));
    }

    #[test]
    fn smol_and_universal_build() {
        let out = run(&cfg("smol-residual", &[("law", "subcritical-demo"), ("n", "4")])).unwrap();
        assert!(out.pass(), "{:?}", out.checks);
        let out = run(&cfg("universal-build", &[])).unwrap();
        assert!(out.pass(), "{:?}", out.checks);
        assert_eq!(out.rows.len(), 4);
    }

    #[test]
    fn continuity_binary() {
        let out = run(&cfg("continuity", &[("n", "8")])).unwrap();
        assert!(out.pass(), "{:?}", out.checks);
    }

    #[test]
    fn errors() {
        assert!(matches!(run(&cfg("nope", &[])), Err(Error::Config(_))));
        assert!(matches!(run(&cfg("evolve", &[("law", "nope")])), Err(Error::Config(_))));
        assert!(run(&cfg("limit", &[("weights", "0.5,0,0,0.5")])).is_err());
    }

    #[test]
    fn float_format() {
        assert_eq!(format_float(3.0), "3");
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!("1.0000000000000001e-1".parse::<f64>().unwrap(), 0.1);
        assert_eq!(number(f64::INFINITY), json!("inf"));
    }
}
