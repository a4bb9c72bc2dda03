//! The acceptance suite: thirteen named criteria, each returning measured
//! values with their tolerances.

use std::time::Instant;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::gw::{
    bernstein_step_residual, descendant_sequence, empirical_generation, simulate_coagulation, simulate_gw,
    smoluchowski_residual, truncation_safe_cap, FamilyLaw,
};
use crate::levy::{grey_check, LevyTriple};
use crate::measure::{default_q_grid, log_grid, total_variation, AtomicMeasure, DEFAULT_CAP};
use crate::rng::{domain, Stream};
use crate::scaling::{
    beta_and_rho, damped_smol_residual, euler_exponent, grimvall_limit_targets, grimvall_stats,
    levy_convergence_report, solve_exponent, solve_phi, Rescaling,
};
use crate::universal::{
    dense_targets, dilation_gap, make_schedule, pack, tail_sandwich, universal_csbp_demo, universal_family_law,
};

/// One measured quantity against its tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `value ≤ tolerance`.
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, pass: value <= tolerance }
    }

    /// Passes when `value < bound`.
    pub fn below(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, tolerance: bound, pass: value < bound }
    }

    /// Boolean property, recorded as value 1 (holds) or 0 against tolerance 1.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self { name: name.into(), value: if ok { 1.0 } else { 0.0 }, tolerance: 1.0, pass: ok }
    }

    /// Reported value without a pass condition.
    pub fn info(name: impl Into<String>, value: f64) -> Self {
        Self { name: name.into(), value, tolerance: f64::INFINITY, pass: true }
    }
}

/// `(id, name, runtime budget in seconds)` of every criterion.
pub const CRITERIA: [(usize, &str, f64); 13] = [
    (1, "conservation", 10.0),
    (2, "duality", 60.0),
    (3, "discrete-smol", 5.0),
    (4, "bernstein-step", 1.0),
    (5, "euler-order", 30.0),
    (6, "ode-closed-form", 30.0),
    (7, "levy-convergence", 5.0),
    (8, "beta-rho", 10.0),
    (9, "damped-smol", 10.0),
    (10, "grimvall", 1.0),
    (11, "packing", 30.0),
    (12, "universal-law", 1.0),
    (13, "universal-csbp", 120.0),
];

/// Additional names accepted by [`run_criterion`]: `smol-identity` runs the
/// Feller part of `damped-smol`.
pub const ALIASES: [(&str, f64); 1] = [("smol-identity", 10.0)];

/// Outcome of one criterion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub id: usize,
    pub name: String,
    pub checks: Vec<Check>,
    pub seconds: f64,
    pub budget: f64,
}

impl CriterionReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass) && self.seconds <= self.budget
    }

    /// One status line: verdict, id, name, runtime and every failed check,
    /// or every check when all pass.
    pub fn line(&self) -> String {
        let verdict = if self.pass() { "PASS" } else { "FAIL" };
        let failed: Vec<&Check> = self.checks.iter().filter(|c| !c.pass).collect();
        let shown: Vec<&Check> = if failed.is_empty() { self.checks.iter().collect() } else { failed };
        let detail: Vec<String> = shown
            .iter()
            .map(|c| {
                if c.tolerance.is_infinite() {
                    format!("{}={:.3e}", c.name, c.value)
                } else {
                    format!("{}={:.3e} (tol {:.1e})", c.name, c.value, c.tolerance)
                }
            })
            .collect();
        format!(
            "[{verdict}] {:>2} {:<16} {:>7.2}s/{:<4}s {}",
            self.id,
            self.name,
            self.seconds,
            self.budget,
            detail.join("; ")
        )
    }
}

/// Runs a criterion by name.
pub fn run_criterion(name: &str) -> Result<CriterionReport> {
    let (id, budget) = match CRITERIA.iter().find(|c| c.1 == name) {
        Some(c) => (c.0, c.2),
        None => match ALIASES.iter().find(|a| a.0 == name) {
            Some(a) => (9, a.1),
            None => return invalid(format!("unknown criterion '{name}'")),
        },
    };
    let start = Instant::now();
    let checks = match name {
        "conservation" => conservation()?,
        "duality" => duality()?,
        "discrete-smol" => discrete_smol()?,
        "bernstein-step" => bernstein_step()?,
        "euler-order" => euler_order()?,
        "ode-closed-form" => ode_closed_form()?,
        "levy-convergence" => levy_convergence()?,
        "beta-rho" => beta_rho()?,
        "damped-smol" => damped_smol(true)?,
        "smol-identity" => damped_smol(false)?,
        "grimvall" => grimvall()?,
        "packing" => packing()?,
        "universal-law" => universal_law()?,
        _ => universal_csbp()?,
    };
    Ok(CriterionReport { id, name: name.to_string(), checks, seconds: start.elapsed().as_secs_f64(), budget })
}

/// Runs every criterion in order.
pub fn run_all() -> Result<Vec<CriterionReport>> {
    CRITERIA.iter().map(|c| run_criterion(c.1)).collect()
}

fn named(name: &str) -> FamilyLaw {
    FamilyLaw::named(name).expect("built-in law")
}

fn delta_one() -> LevyTriple {
    LevyTriple::pure_jump(AtomicMeasure::dirac(1.0, 1.0).expect("valid atom"))
}

fn conservation() -> Result<Vec<Check>> {
    let seq = descendant_sequence(&named("binary"), 12, DEFAULT_CAP)?;
    let mass = seq.iter().map(|d| (d.total() - 1.0).abs()).fold(0.0, f64::max);
    let tail = seq.iter().map(|d| d.tail_mass()).fold(0.0, f64::max);
    let mean = seq.iter().map(|d| (d.mean() - 1.0).abs()).fold(0.0, f64::max);
    Ok(vec![Check::at_most("mass_dev", mass, 1e-10), Check::at_most("mean_dev", mean, 1e-8 + tail)])
}

/// Seed of the duality Monte Carlo runs.
pub const DUALITY_SEED: u64 = 20_240_601;

fn duality() -> Result<Vec<Check>> {
    let law = named("binary");
    let (n, units) = (6, 1_000_000);
    let exact = descendant_sequence(&law, n, DEFAULT_CAP)?.pop().expect("nonempty");
    let coag = simulate_coagulation(&law, n, units, DUALITY_SEED)?.empirical(DEFAULT_CAP);
    let gw = empirical_generation(&simulate_gw(&law, n, units, DUALITY_SEED), n, DEFAULT_CAP)?;
    Ok(vec![
        Check::at_most("tv_coag_exact", total_variation(&coag, &exact), 0.01),
        Check::at_most("tv_gw_exact", total_variation(&gw, &exact), 0.01),
        Check::at_most("tv_coag_gw", total_variation(&coag, &gw), 0.01),
    ])
}

fn discrete_smol() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for name in ["binary", "subcritical-demo"] {
        let law = named(name);
        let worst = (0..=6)
            .map(|n| smoluchowski_residual(&law, n, truncation_safe_cap(&law, n)))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        checks.push(Check::at_most(format!("residual_{name}"), worst, 1e-10));
    }
    Ok(checks)
}

fn bernstein_step() -> Result<Vec<Check>> {
    let grid = default_q_grid();
    let mut checks = Vec::new();
    for name in ["binary", "ternary", "subcritical-demo"] {
        let law = named(name);
        let worst = (0..=8)
            .map(|n| bernstein_step_residual(&law, n, &grid))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        checks.push(Check::at_most(format!("residual_{name}"), worst, 1e-12));
    }
    Ok(checks)
}

fn feller_phi(q: f64, t: f64) -> f64 {
    q / (1.0 + 0.5 * q * t)
}

fn euler_order() -> Result<Vec<Check>> {
    let law = named("binary");
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for q in [0.5, 1.0, 2.0] {
        for t in [0.5, 1.0, 2.0] {
            let errs = (6..=12)
                .map(|k| Ok((euler_exponent(&law, Rescaling::dyadic(k)?, q, t)? - feller_phi(q, t)).abs()))
                .collect::<Result<Vec<f64>>>()?;
            for k in 8..=12 {
                let ratio = errs[k - 7] / errs[k - 6];
                lo = lo.min(ratio);
                hi = hi.max(ratio);
            }
        }
    }
    Ok(vec![
        Check { name: "min_ratio".into(), value: lo, tolerance: 1.7, pass: lo >= 1.7 },
        Check::at_most("max_ratio", hi, 2.3),
    ])
}

fn sup_table_error(t: &LevyTriple, grid: &[f64], times: &[f64], exact: impl Fn(f64, f64) -> f64) -> Result<f64> {
    let tab = solve_exponent(t, grid, times)?;
    let mut worst = 0.0f64;
    for (i, &s) in times.iter().enumerate() {
        for (j, &q) in grid.iter().enumerate() {
            worst = worst.max((tab.phi(i, j) - exact(q, s)).abs());
        }
    }
    Ok(worst)
}

fn semigroup_gap(t: &LevyTriple) -> Result<f64> {
    let mut worst = 0.0f64;
    for (s, u) in [(0.5, 0.5), (0.5, 1.5), (1.0, 1.0), (0.25, 2.0)] {
        for q in [0.1, 1.0, 10.0, 100.0] {
            let direct = solve_phi(t, q, &[s + u])?[0];
            let inner = solve_phi(t, q, &[u])?[0];
            worst = worst.max((direct - solve_phi(t, inner, &[s])?[0]).abs());
        }
    }
    Ok(worst)
}

fn ode_closed_form() -> Result<Vec<Check>> {
    let grid = default_q_grid();
    let times = [0.5, 1.0, 2.0];
    let stable = LevyTriple::stable(1.5)?;
    let feller_err = sup_table_error(&LevyTriple::feller(), &grid, &times, feller_phi)?;
    let stable_err = sup_table_error(&stable, &grid, &times, |q, t| (q.powf(-0.5) + 0.5 * t).powi(-2))?;
    let semigroup = semigroup_gap(&LevyTriple::feller())?.max(semigroup_gap(&stable)?);
    Ok(vec![
        Check::at_most("feller_sup_error", feller_err, 1e-8),
        Check::at_most("stable_sup_error", stable_err, 1e-4),
        Check::at_most("semigroup_gap", semigroup, 1e-7),
    ])
}

/// q-grid of the Lévy-convergence diagnostic: 41 log points on `[2⁻¹⁰, 2]`.
pub fn levy_diagnostic_grid() -> Vec<f64> {
    log_grid(2f64.powi(-10), 2.0, 41)
}

fn levy_convergence() -> Result<Vec<Check>> {
    let entries = (2..=10).map(|k| Ok((named("binary"), Rescaling::dyadic(k)?))).collect::<Result<Vec<_>>>()?;
    let rep = levy_convergence_report(&entries, &levy_diagnostic_grid())?;
    let wide = levy_convergence_report(&entries, &default_q_grid())?;
    let limit_ok = rep.limit == LevyTriple::feller();
    let strict = rep.kappa.windows(2).all(|w| w[1] < w[0]);
    let mech = rep.mechanism.iter().copied().fold(0.0, f64::max);
    Ok(vec![
        Check::holds("limit_is_feller", limit_ok),
        Check::holds("kappa_strictly_decreasing", strict),
        Check::below("kappa_k10", rep.kappa[8], 0.01),
        Check::at_most("mechanism_gap", mech, 0.0),
        Check::info("kappa_k10_default_grid", wide.kappa[8]),
    ])
}

fn beta_rho() -> Result<Vec<Check>> {
    let times = [0.5, 1.0, 2.0];
    let feller = LevyTriple::feller();
    let tab = solve_exponent(&feller, &[1.0], &times)?;
    let rho1 = beta_and_rho(&feller, &tab, 1.0)?;
    let beta_max =
        times.iter().map(|&t| beta_and_rho(&feller, &tab, t).map(|b| b.beta0)).collect::<Result<Vec<_>>>()?;
    let d1 = delta_one();
    let tab = solve_exponent(&d1, &[1.0], &[1.0])?;
    let b = beta_and_rho(&d1, &tab, 1.0)?;
    let grey_feller = grey_check(&feller)?;
    let grey_stable = grey_check(&LevyTriple::stable(1.5)?)?;
    Ok(vec![
        Check::at_most("feller_rho1_error", (rho1.rho.value - 2.0).abs(), 1e-3),
        Check::at_most("feller_beta0_max", beta_max.into_iter().fold(0.0, f64::max), 0.0),
        Check::at_most("delta1_beta0_error", (b.beta0 - (-1f64).exp()).abs(), 1e-4),
        Check::at_most("delta1_beta0_crosscheck", (b.beta0 - b.beta0_numeric).abs(), 1e-4),
        Check::holds("delta1_grey_fails", !b.grey && b.rho.value.is_infinite()),
        Check::at_most("grey_feller_error", (grey_feller.value - 2.0).abs(), 1e-3),
        Check::at_most("grey_stable_error", (grey_stable.value - 2.0).abs(), 1e-3),
    ])
}

fn damped_smol(with_stable: bool) -> Result<Vec<Check>> {
    let pts = [0.5, 1.0, 2.0];
    let worst = |t: &LevyTriple, k: u32| -> Result<(f64, f64)> {
        let mut gap = 0.0f64;
        let mut deriv = 0.0f64;
        for &q in &pts {
            for &time in &pts {
                let r = damped_smol_residual(t, time, q, k)?;
                gap = gap.max(r.gap);
                deriv = deriv.max(r.derivative_gap);
            }
        }
        Ok((gap, deriv))
    };
    let (fg, fd) = worst(&LevyTriple::feller(), 2)?;
    let mut checks = vec![Check::at_most("feller_k2_residual", fg, 1e-10), Check::at_most("feller_dt_gap", fd, 1e-6)];
    if with_stable {
        let (sg, _) = worst(&LevyTriple::stable(1.5)?, 30)?;
        checks.push(Check::at_most("stable_k30_residual", sg, 1e-6));
    }
    Ok(checks)
}

fn grimvall() -> Result<Vec<Check>> {
    let h = 1e-2;
    let pts = crate::scaling::default_tail_points();
    let s = grimvall_stats(&named("binary"), Rescaling::new(h, h)?, &pts)?;
    let t = grimvall_limit_targets(&LevyTriple::feller(), &pts);
    let tail = s.tail.iter().chain(&t.tail).fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(vec![
        Check::at_most("a_hat", s.a_hat.abs(), 0.0),
        Check::at_most("b_hat_error", (s.b_hat - 1.0).abs(), h * h),
        Check::at_most("a_hat_vs_target", (s.a_hat - t.a_hat).abs(), h * h),
        Check::at_most("b_hat_vs_target", (s.b_hat - t.b_hat).abs(), h * h),
        Check::at_most("tail_max", tail, 0.0),
    ])
}

/// Targets of the packing criterion.
pub fn packing_targets() -> Result<Vec<LevyTriple>> {
    Ok(vec![LevyTriple::feller(), delta_one(), LevyTriple::stable(1.5)?, LevyTriple::constants(0.0, 1.0)?])
}

fn packing() -> Result<Vec<Check>> {
    let grid = default_q_grid();
    let sched = make_schedule(1.0, 4)?;
    let fam = dense_targets(&packing_targets()?, 4)?;
    let p = pack(&fam, &sched, &grid)?;
    let mut head = 0.0f64;
    let mut recovery = 0.0f64;
    for k in 1..=4 {
        head = head.max(p.head_bounds[k - 1] * k as f64);
        let s = p.scaled(k);
        let m = &fam.members[k - 1];
        let gap = grid.iter().map(|&q| (s.bernstein(q) - m.bernstein(q)).abs()).fold(0.0, f64::max);
        recovery = recovery.max(gap / (1.0 / k as f64 + p.tail_bounds[k - 1]));
    }
    Ok(vec![
        Check::below("schedule_sum", sched.sum_bound(), 1.0),
        Check::at_most("schedule_sum_vs_0.40489", (sched.partial_sum - 0.40489).abs(), 1e-5),
        Check::below("remainder_bound", sched.remainder_bound, 1e-6),
        Check::below("k_times_head_bound", head, 1.0),
        Check::at_most("recovery_gap_over_bound", recovery, 1.0),
        Check::below("phi_star_qmax", p.phi_star(p.q_max), 1.0),
    ])
}

/// Targets of the universal-law and universal-CSBP criteria.
pub fn universal_targets() -> Vec<LevyTriple> {
    vec![LevyTriple::feller(), delta_one()]
}

fn universal_law() -> Result<Vec<Check>> {
    let fam = dense_targets(&universal_targets(), 4)?;
    let p = pack(&fam, &make_schedule(1.0, 4)?, &default_q_grid())?;
    let mu = p.lambda_star.mu();
    let law = universal_family_law(mu)?;
    let total: f64 = law.support().map(|s| s.1).sum();
    let top = mu.locations().last().copied().unwrap_or(4.0);
    let sandwich = tail_sandwich(mu, &law, &log_grid(2.5, 2.0 * top.max(2.5), 20))?;
    Ok(vec![
        Check::at_most("mean_error", (law.xi() - 1.0).abs(), 1e-12),
        Check::at_most("mass_error", (total - 1.0).abs(), 1e-12),
        Check::holds("p0_positive", law.prob(0) > 0.0),
        Check::holds("tail_sandwich_20_points", sandwich.len() == 20 && sandwich.iter().all(|s| s.holds())),
    ])
}

fn universal_csbp() -> Result<Vec<Check>> {
    let grid = default_q_grid();
    let times = [0.0, 0.5, 1.0, 2.0];
    let fam = dense_targets(&universal_targets(), 6)?;
    let p = pack(&fam, &make_schedule(1.0, 6)?, &grid)?;
    let mut checks = Vec::new();
    for (i, label) in ["feller", "delta1"].iter().enumerate() {
        let rows = universal_csbp_demo(&p, &fam.targets[i], &fam.subsequences[i], &grid, &times)?;
        let gaps: Vec<f64> = rows.iter().map(|r| r.gap).collect();
        checks.push(Check::holds(format!("{label}_gaps_decreasing"), gaps.windows(2).all(|w| w[1] < w[0])));
        for (m, g) in gaps.iter().enumerate() {
            checks.push(Check::info(format!("{label}_gap_{}", m + 1), *g));
        }
    }
    let mut s = Stream::new(DUALITY_SEED, &[domain::TEST, 13]);
    let dgrid = log_grid(0.01, 100.0, 9);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let atoms: Vec<(f64, f64)> =
            (0..(s.next_u64() % 4)).map(|_| (0.05 + 5.0 * s.next_f64(), 2.0 * s.next_f64())).collect();
        let t = LevyTriple::new(2.0 * s.next_f64(), s.next_f64(), AtomicMeasure::new(atoms)?)?;
        let b = 0.1 * 100f64.powf(s.next_f64());
        let c = 0.1 * 100f64.powf(s.next_f64());
        worst = worst.max(dilation_gap(&t, b, c, &dgrid, &[0.5, 1.0, 2.0])?);
    }
    checks.push(Check::at_most("dilation_gap", worst, 1e-8));
    Ok(checks)
}
