//! Rescaled Lévy measures and mechanisms of critical family laws, the Euler
//! recursion for the rescaled Bernstein transform, the exponent ODE
//! `∂ₜφ = −Ψ(φ)`, the drift `β₀(t)` and total jump mass `ρₜ`, the damped
//! Smoluchowski identity, Grimvall statistics and Laplace functionals of
//! rescaled Galton-Watson processes.

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::gw::{mechanism_unchecked, FamilyLaw};
use crate::levy::{estimate_limit, grey_check, kappa_of, sup_gap, LevyTriple};
use crate::measure::{check_grid, kappa_distance, AtomicMeasure};
use crate::numeric::{solve_autonomous, OdeOptions};

/// Large `q` at which `φ(∞, t)` and `β₀(t)` are read off.
pub const RHO_Q: f64 = 1e6;
/// Smaller `q` compared against [`RHO_Q`] to detect unsaturated `φ`.
pub const RHO_CHECK_Q: f64 = 1e4;
/// Relative change between [`RHO_CHECK_Q`] and [`RHO_Q`] above which `ρₜ` is flagged.
pub const RHO_SATURATION_TOL: f64 = 1e-3;
/// Agreement required between analytic and numerical `β₀(t)`.
pub const BETA_CHECK_TOL: f64 = 1e-4;

/// Size unit `h` and time step `τ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rescaling {
    h: f64,
    tau: f64,
}

impl Rescaling {
    /// Both values must lie in `(0, 1]`.
    pub fn new(h: f64, tau: f64) -> Result<Self> {
        if !(h > 0.0 && h <= 1.0 && tau > 0.0 && tau <= 1.0) {
            return invalid(format!("rescaling (h, τ) = ({h}, {tau}) outside (0, 1]²"));
        }
        Ok(Self { h, tau })
    }

    /// `h = τ = 2⁻ᵏ`.
    pub fn dyadic(k: i32) -> Result<Self> {
        let h = 2f64.powi(-k);
        Self::new(h, h)
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    fn check_q(&self, q: f64) -> Result<()> {
        if !(q >= 0.0 && q * self.h <= 1.0) {
            return invalid(format!("q = {q} outside [0, 1/h] for h = {}", self.h));
        }
        Ok(())
    }
}

/// `μ = Σ_{j≥2} (j−1)π̂(j)/τ · δ_{jh}`.
pub fn rescaled_levy_measure(law: &FamilyLaw, r: Rescaling) -> Result<AtomicMeasure> {
    law.require_critical()?;
    Ok(AtomicMeasure::from_unsorted(
        law.support().filter(|p| p.0 >= 2).map(|(j, p)| (j as f64 * r.h, (j - 1) as f64 * p / r.tau)).collect(),
    ))
}

/// `Ψ_{h,τ}(q) = Ψ̂(hq)/(τh)` for `0 ≤ q ≤ 1/h`.
pub fn rescaled_mechanism(law: &FamilyLaw, r: Rescaling, q: f64) -> Result<f64> {
    law.require_critical()?;
    r.check_q(q)?;
    Ok(rescaled_psi(law, r, q))
}

fn rescaled_psi(law: &FamilyLaw, r: Rescaling, q: f64) -> f64 {
    mechanism_unchecked(law, (r.h * q).min(1.0)) / (r.tau * r.h)
}

/// Number of whole steps of size `tau` in `t`, tolerant to rounding in `t/τ`.
fn step_count(t: f64, tau: f64) -> Result<u64> {
    if !(t.is_finite() && t >= 0.0) {
        return invalid(format!("time {t} must be finite and nonnegative"));
    }
    let x = t / tau;
    let n = x.round();
    Ok(if (x - n).abs() <= 1e-9 * x.max(1.0) { n } else { x.floor() } as u64)
}

/// Euler iterates `φ⁰ = (1 − e^{−qh})/h`, `φⁿ⁺¹ = φⁿ − τΨ_{h,τ}(φⁿ)` for `n ≤ steps`.
pub fn euler_sequence(law: &FamilyLaw, r: Rescaling, q: f64, steps: u64) -> Result<Vec<f64>> {
    law.require_critical()?;
    r.check_q(q)?;
    let mut phi = -(-q * r.h).exp_m1() / r.h;
    let mut out = vec![phi];
    for _ in 0..steps {
        phi -= r.tau * rescaled_psi(law, r, phi);
        out.push(phi);
    }
    Ok(out)
}

/// `φ^{⌊t/τ⌋}` of [`euler_sequence`].
pub fn euler_exponent(law: &FamilyLaw, r: Rescaling, q: f64, t: f64) -> Result<f64> {
    law.require_critical()?;
    r.check_q(q)?;
    let n = step_count(t, r.tau)?;
    let mut phi = -(-q * r.h).exp_m1() / r.h;
    for _ in 0..n {
        phi -= r.tau * rescaled_psi(law, r, phi);
    }
    Ok(phi)
}

/// `φ(∞, t)` estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoEstimate {
    /// `φ(10⁶, t)`, or `+∞` when Grey's condition fails.
    pub value: f64,
    /// Set when `φ(10⁶, t)` and `φ(10⁴, t)` differ by more than `10⁻³` relative.
    pub saturated: bool,
}

/// `φ(q, t)` on a grid, with `ρₜ` and `β₀(t)` per time.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentTable {
    pub q_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    /// `values[i][j] = φ(q_grid[j], t_grid[i])`.
    pub values: Vec<Vec<f64>>,
    pub rho: Vec<RhoEstimate>,
    /// `exp(−Ψ′(∞)t)`, zero for `t > 0` when `Ψ′(∞) = ∞`.
    pub beta0: Vec<f64>,
    /// `φ(10⁶, t)/10⁶`.
    pub beta0_numeric: Vec<f64>,
}

impl ExponentTable {
    /// `φ(q_grid[j], t_grid[i])`.
    pub fn phi(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return invalid("empty time grid");
    }
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || times.windows(2).any(|w| w[1] <= w[0]) {
        return invalid("time grid must be finite, nonnegative and increasing");
    }
    Ok(())
}

/// `φ(q, t)` at each of the nondecreasing `times`.
pub fn solve_phi(t: &LevyTriple, q: f64, times: &[f64]) -> Result<Vec<f64>> {
    if !(q.is_finite() && q > 0.0) {
        return invalid(format!("q = {q} must be finite and positive"));
    }
    solve_autonomous(|y| -t.psi(y.max(0.0)), q, times, OdeOptions::default())
}

fn grey_passes(t: &LevyTriple) -> bool {
    grey_check(t).map(|g| g.converges).unwrap_or(false)
}

fn analytic_beta0(t: &LevyTriple, time: f64) -> f64 {
    if time == 0.0 {
        return 1.0;
    }
    let d = t.psi_prime_infinity();
    if d.is_infinite() {
        0.0
    } else {
        (-d * time).exp()
    }
}

fn rho_estimate(grey: bool, big: f64, mid: f64) -> RhoEstimate {
    if grey {
        RhoEstimate { value: big, saturated: (big - mid).abs() > RHO_SATURATION_TOL * big.abs() }
    } else {
        RhoEstimate { value: f64::INFINITY, saturated: false }
    }
}

/// Solves `∂ₜφ = −Ψ(φ)`, `φ(q, 0) = q` for each `q` in `q_grid` and fills
/// `ρₜ` and `β₀(t)` from the solution at `q = 10⁶`.
pub fn solve_exponent(t: &LevyTriple, q_grid: &[f64], t_grid: &[f64]) -> Result<ExponentTable> {
    check_grid(q_grid)?;
    check_times(t_grid)?;
    let columns: Vec<Vec<f64>> = q_grid.par_iter().map(|&q| solve_phi(t, q, t_grid)).collect::<Result<_>>()?;
    let values = (0..t_grid.len()).map(|i| columns.iter().map(|c| c[i]).collect()).collect();
    let big = solve_phi(t, RHO_Q, t_grid)?;
    let mid = solve_phi(t, RHO_CHECK_Q, t_grid)?;
    let grey = grey_passes(t);
    Ok(ExponentTable {
        q_grid: q_grid.to_vec(),
        t_grid: t_grid.to_vec(),
        values,
        rho: big.iter().zip(&mid).map(|(&b, &m)| rho_estimate(grey, b, m)).collect(),
        beta0: t_grid.iter().map(|&s| analytic_beta0(t, s)).collect(),
        beta0_numeric: big.iter().map(|b| b / RHO_Q).collect(),
    })
}

/// Result of [`beta_and_rho`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaRho {
    pub beta0: f64,
    /// `φ(10⁶, t)/10⁶`.
    pub beta0_numeric: f64,
    /// `|β₀ − β₀_numeric| ≤ 10⁻⁴`.
    pub beta0_consistent: bool,
    pub grey: bool,
    pub rho: RhoEstimate,
}

/// `β₀(t)` and `ρₜ`, read from `table` when `time` is on its time grid.
pub fn beta_and_rho(t: &LevyTriple, table: &ExponentTable, time: f64) -> Result<BetaRho> {
    let grey = grey_passes(t);
    let hit = table.t_grid.iter().position(|&s| (s - time).abs() <= 1e-12 * time.max(1.0));
    let (beta0, beta0_numeric, rho) = match hit {
        Some(i) => (table.beta0[i], table.beta0_numeric[i], table.rho[i]),
        None => {
            check_times(&[time])?;
            let big = solve_phi(t, RHO_Q, &[time])?[0];
            let mid = solve_phi(t, RHO_CHECK_Q, &[time])?[0];
            (analytic_beta0(t, time), big / RHO_Q, rho_estimate(grey, big, mid))
        }
    };
    Ok(BetaRho { beta0, beta0_numeric, beta0_consistent: (beta0 - beta0_numeric).abs() <= BETA_CHECK_TOL, grey, rho })
}

/// `ρ^k |Ψ^{(k)}(ρ)|/k!`, the rate of `k`-fold mergers at total mass `ρ`.
pub fn poisson_rate(t: &LevyTriple, rho: f64, k: u32) -> f64 {
    let kf = k as f64;
    let lf = statrs::function::gamma::ln_gamma(kf + 1.0);
    let jumps = t.mu().sum(|x| (kf * (rho * x).ln() - rho * x - lf).exp() / x);
    if k == 2 {
        0.5 * t.alpha0() * rho * rho + jumps
    } else {
        jumps
    }
}

/// Result of [`damped_smol_residual`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampedSmolReport {
    /// `|Σ_{k=2}^K Rₖ Iₖ − (Ψ(0) − Ψ(φ) + φΨ′(0⁺))|`.
    pub gap: f64,
    /// `|∂ₜφ + Ψ(φ)|` with `∂ₜφ` a centered difference of the ODE solution.
    pub derivative_gap: f64,
    pub phi: f64,
    pub rho: f64,
}

/// Truncated damped Smoluchowski identity tested on `f_q(x) = 1 − e^{−qx}`.
///
/// `Iₖ = 1 − (1 − φ/ρ)^k − kφ/ρ` is the normalized merger functional and
/// `Rₖ` the [`poisson_rate`] at `ρ = ρₜ`.
pub fn damped_smol_residual(t: &LevyTriple, time: f64, q: f64, kmax: u32) -> Result<DampedSmolReport> {
    if kmax < 2 {
        return invalid("the merger order K must be at least 2");
    }
    if !(time.is_finite() && time > 0.0) {
        return invalid(format!("time {time} must be positive"));
    }
    if !grey_passes(t) {
        return invalid("Grey's condition fails: ρₜ is infinite");
    }
    let delta = (1e-4 * time.max(1.0)).min(0.5 * time);
    let phis = solve_phi(t, q, &[time - delta, time, time + delta])?;
    let phi = phis[1];
    let rho = solve_phi(t, RHO_Q, &[time])?[0];
    let u = phi / rho;
    let sum: f64 = (2..=kmax).map(|k| poisson_rate(t, rho, k) * (1.0 - (1.0 - u).powi(k as i32) - k as f64 * u)).sum();
    let rhs = -t.psi(phi) + phi * t.psi_prime_zero();
    let fd = (phis[2] - phis[0]) / (2.0 * delta);
    Ok(DampedSmolReport { gap: (sum - rhs).abs(), derivative_gap: (fd + t.psi(phi)).abs(), phi, rho })
}

/// Distances of a rescaled family-law sequence to its estimated limit.
#[derive(Debug, Clone)]
pub struct LevyConvergenceReport {
    /// `(0, 0, μₖ)` with `μₖ` the rescaled Lévy measure.
    pub triples: Vec<LevyTriple>,
    pub limit: LevyTriple,
    /// κ-distance of each `μₖ` to the limit.
    pub kappa: Vec<f64>,
    /// Sup over grid points `q ≤ 1/hₖ` of `|Ψ_{hₖ,τₖ}(q) − Ψ(q)|`.
    pub mechanism: Vec<f64>,
}

pub fn levy_convergence_report(entries: &[(FamilyLaw, Rescaling)], grid: &[f64]) -> Result<LevyConvergenceReport> {
    check_grid(grid)?;
    if entries.len() < 3 {
        return invalid("Lévy-convergence report needs at least three entries");
    }
    let triples: Vec<LevyTriple> = entries
        .iter()
        .map(|(law, r)| rescaled_levy_measure(law, *r).map(LevyTriple::pure_jump))
        .collect::<Result<_>>()?;
    let limit = estimate_limit(&triples);
    let kl = kappa_of(&limit);
    let kappa = triples.iter().map(|t| kappa_distance(&kappa_of(t), &kl, grid)).collect::<Result<_>>()?;
    let mechanism = entries
        .iter()
        .map(|(law, r)| {
            let pts: Vec<f64> = grid.iter().copied().filter(|q| q * r.h <= 1.0).collect();
            sup_gap(&pts, |q| rescaled_psi(law, *r, q) - limit.psi(q))
        })
        .collect();
    Ok(LevyConvergenceReport { triples, limit, kappa, mechanism })
}

/// Grimvall drift `â`, diffusion `b̂` and sampled tail of the jump law.
#[derive(Debug, Clone, PartialEq)]
pub struct GrimvallStats {
    pub a_hat: f64,
    pub b_hat: f64,
    pub tail_points: Vec<f64>,
    /// Tail mass at each of `tail_points`.
    pub tail: Vec<f64>,
}

/// Sample points for Grimvall tails: 13 log-spaced points on `[1/8, 8]`.
pub fn default_tail_points() -> Vec<f64> {
    crate::measure::log_grid(0.125, 8.0, 13)
}

/// Statistics of `η = Σ_j π̂(j+1)δ_{jh}` normalized by `hτ`:
/// `â = ∫x/(1+x²)dη`, `b̂ = ∫x²/(1+x²)dη` and `η([x, ∞))`.
pub fn grimvall_stats(law: &FamilyLaw, r: Rescaling, tail_points: &[f64]) -> Result<GrimvallStats> {
    let scale = r.h * r.tau;
    let eta: Vec<(f64, f64)> = law.support().map(|(j, p)| ((j as f64 - 1.0) * r.h, p)).collect();
    let a_hat = eta.iter().map(|&(x, p)| p * (x / (1.0 + x * x))).sum::<f64>() / scale;
    let b_hat = eta.iter().map(|&(x, p)| p * (x * x / (1.0 + x * x))).sum::<f64>() / scale;
    let tail = tail_points.iter().map(|&z| eta.iter().filter(|e| e.0 >= z).map(|e| e.1).sum::<f64>() / scale).collect();
    Ok(GrimvallStats { a_hat, b_hat, tail_points: tail_points.to_vec(), tail })
}

/// Limits of [`grimvall_stats`] for a triple: `â = −α_∞ − ∫x²/(1+x²)dμ`,
/// `b̂ = α₀ + ∫x/(1+x²)dμ`, tail `∫_{[z,∞)} dμ(x)/x`.
pub fn grimvall_limit_targets(t: &LevyTriple, tail_points: &[f64]) -> GrimvallStats {
    let mu = t.mu();
    let a_hat = -t.alpha_inf() - mu.sum(|x| x * x / (1.0 + x * x));
    let b_hat = t.alpha0() + mu.sum(|x| x / (1.0 + x * x));
    let tail = tail_points.iter().map(|&z| mu.atoms().filter(|a| a.0 >= z).map(|(x, w)| w / x).sum()).collect();
    GrimvallStats { a_hat, b_hat, tail_points: tail_points.to_vec(), tail }
}

/// `E exp(−q h X_{⌊t/τ⌋})` for the Galton-Watson process started from
/// `⌊x/h⌋` individuals: `(1 − hφ)^{⌊x/h⌋}` with `φ` the Euler exponent.
pub fn rescaled_gw_laplace(law: &FamilyLaw, r: Rescaling, x: f64, q: f64, t: f64) -> Result<f64> {
    if !(x.is_finite() && x >= 0.0) {
        return invalid(format!("initial mass {x} must be finite and nonnegative"));
    }
    let phi = euler_exponent(law, r, q, t)?;
    let n = (x / r.h).floor();
    if n == 0.0 {
        return Ok(1.0);
    }
    Ok((n * (-r.h * phi).ln_1p()).exp())
}
