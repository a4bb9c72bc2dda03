//! Family laws, the coagulation process, Galton-Watson simulation (direct and
//! through the discrete Lamperti transform), the exact descendant recursion,
//! generating-function iteration, the discrete Bernstein transform and
//! mechanism, rate constants and the discrete Smoluchowski residual.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::measure::{convolve, convolve_power, DiscreteDistribution, DEFAULT_CAP};
use crate::rng::{domain, Stream};

/// Tolerance on `|Ξ − 1|` for the criticality flag, and on `Σπ̂ − 1`.
pub const CRITICAL_TOL: f64 = 1e-12;

/// Populations above this value abort a path.
pub const POPULATION_GUARD: u64 = (1u64 << 63) - 1;

/// Clusters per independently seeded chunk in [`simulate_coagulation`].
pub const COAGULATION_CHUNK: usize = 1 << 16;

/// Largest family size accepted by the exact recursion.
pub const RECURSION_MAX_FAMILY: u64 = 1 << 16;

/// Family-size law `π̂` on the nonnegative integers, stored on its support.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyLaw {
    sizes: Vec<u64>,
    probs: Vec<f64>,
    cdf: Vec<f64>,
    xi: f64,
}

impl FamilyLaw {
    /// Law with `π̂(j) = weights[j]`.
    pub fn new(weights: &[f64]) -> Result<Self> {
        Self::from_sparse(weights.iter().enumerate().map(|(j, &w)| (j as u64, w)).collect())
    }

    /// Law from `(size, probability)` pairs; sizes must be distinct.
    pub fn from_sparse(mut pairs: Vec<(u64, f64)>) -> Result<Self> {
        if pairs.iter().any(|p| !(p.1.is_finite() && p.1 >= 0.0)) {
            return invalid("family law weights must be finite and nonnegative");
        }
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        if (total - 1.0).abs() > CRITICAL_TOL {
            return invalid(format!("family law weights sum to {total}, expected 1"));
        }
        pairs.retain(|p| p.1 > 0.0);
        pairs.sort_by_key(|p| p.0);
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return invalid("duplicate family size");
        }
        let (sizes, probs): (Vec<u64>, Vec<f64>) = pairs.into_iter().unzip();
        let mut acc = 0.0;
        let cdf = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        let xi = sizes.iter().zip(&probs).map(|(&j, &p)| j as f64 * p).sum();
        Ok(Self { sizes, probs, cdf, xi })
    }

    /// Built-in laws: `unit` δ₁, `binary` (½,0,½), `ternary` (⅔,0,0,⅓),
    /// `subcritical-demo` (¾,0,¼).
    pub fn named(name: &str) -> Result<Self> {
        match name {
            "unit" => Self::new(&[0.0, 1.0]),
            "binary" => Self::new(&[0.5, 0.0, 0.5]),
            "ternary" => Self::new(&[2.0 / 3.0, 0.0, 0.0, 1.0 / 3.0]),
            "subcritical-demo" => Self::new(&[0.75, 0.0, 0.25]),
            _ => invalid(format!("unknown law '{name}'")),
        }
    }

    /// Mean family size `Ξ`.
    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn is_critical(&self) -> bool {
        (self.xi - 1.0).abs() <= CRITICAL_TOL
    }

    /// Errors unless the law is critical.
    pub fn require_critical(&self) -> Result<()> {
        if self.is_critical() {
            Ok(())
        } else {
            Err(Error::NonCritical(self.xi))
        }
    }

    /// `π̂(j)`.
    pub fn prob(&self, j: u64) -> f64 {
        self.sizes.binary_search(&j).map(|i| self.probs[i]).unwrap_or(0.0)
    }

    /// `(j, π̂(j))` over the support in increasing `j`.
    pub fn support(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.sizes.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn max_size(&self) -> u64 {
        self.sizes.last().copied().unwrap_or(0)
    }

    /// `π̂` as a distribution truncated at `cap`.
    pub fn dist(&self, cap: usize) -> DiscreteDistribution {
        let top = (self.max_size() as usize).min(cap);
        let mut masses = vec![0.0; top + 1];
        let mut tail = 0.0;
        for (j, p) in self.support() {
            match usize::try_from(j) {
                Ok(i) if i <= cap => masses[i] = p,
                _ => tail += p,
            }
        }
        DiscreteDistribution::raw(masses, tail)
    }

    /// `G(z) = Σ π̂(j) z^j`.
    pub fn generating(&self, z: f64) -> f64 {
        self.support().map(|(j, p)| p * pow_u64(z, j)).sum()
    }

    /// Inverse-CDF draw from a uniform `u ∈ [0, 1)`.
    pub fn sample(&self, u: f64) -> u64 {
        let i = self.cdf.partition_point(|&c| c <= u);
        self.sizes[i.min(self.sizes.len() - 1)]
    }
}

fn pow_u64(z: f64, j: u64) -> f64 {
    match i32::try_from(j) {
        Ok(n) => z.powi(n),
        Err(_) => z.powf(j as f64),
    }
}

/// Cluster sizes after `step` coagulation steps.
#[derive(Debug, Clone, PartialEq)]
pub struct CoagulationEnsemble {
    pub clusters: Vec<u64>,
    pub step: usize,
    pub seed: u64,
    pub law: FamilyLaw,
}

impl CoagulationEnsemble {
    pub fn empirical(&self, cap: usize) -> DiscreteDistribution {
        DiscreteDistribution::empirical(self.clusters.iter().copied(), cap).expect("ensemble is nonempty")
    }
}

/// Runs the grouping rule for `n_steps` steps and returns `n_clusters`
/// consecutive clusters of the final configuration.
///
/// Every step-0 cluster has size 1. A step-`l` cluster is the sum of the next
/// `K` step-`(l−1)` clusters, `K ~ π̂`. Clusters are produced in chunks of
/// [`COAGULATION_CHUNK`]; chunk `c` draws its step-`l` group sizes from the
/// stream `(seed, COAGULATION, c, l)`, so output is independent of thread count.
pub fn simulate_coagulation(
    law: &FamilyLaw,
    n_steps: usize,
    n_clusters: usize,
    seed: u64,
) -> Result<CoagulationEnsemble> {
    if n_clusters == 0 {
        return invalid("need at least one cluster");
    }
    let chunks = n_clusters.div_ceil(COAGULATION_CHUNK);
    let parts: Vec<Result<Vec<u64>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = COAGULATION_CHUNK.min(n_clusters - c * COAGULATION_CHUNK);
            let mut streams: Vec<Stream> =
                (0..=n_steps).map(|l| Stream::new(seed, &[domain::COAGULATION, c as u64, l as u64])).collect();
            (0..len).map(|_| pull_cluster(law, n_steps, &mut streams)).collect()
        })
        .collect();
    let mut clusters = Vec::with_capacity(n_clusters);
    for p in parts {
        clusters.extend(p?);
    }
    Ok(CoagulationEnsemble { clusters, step: n_steps, seed, law: law.clone() })
}

fn pull_cluster(law: &FamilyLaw, level: usize, streams: &mut [Stream]) -> Result<u64> {
    if level == 0 {
        return Ok(1);
    }
    let k = law.sample(streams[level].next_f64());
    let mut size = 0u64;
    for _ in 0..k {
        size = size
            .checked_add(pull_cluster(law, level - 1, streams)?)
            .filter(|s| *s <= POPULATION_GUARD)
            .ok_or_else(|| Error::Overflow("cluster size".into()))?;
    }
    Ok(size)
}

/// One simulated population trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct GWPath {
    /// `X₀, X₁, …`; shorter than requested when the path overflowed.
    pub populations: Vec<u64>,
    pub seed: u64,
    pub index: u64,
    /// Set when a population exceeded [`POPULATION_GUARD`].
    pub overflowed: bool,
}

impl GWPath {
    /// `X_n`, or `None` if the path aborted before generation `n`.
    pub fn at(&self, n: usize) -> Option<u64> {
        self.populations.get(n).copied()
    }
}

/// Galton-Watson paths started from one individual.
pub fn simulate_gw(law: &FamilyLaw, n_gens: usize, n_paths: usize, seed: u64) -> Vec<GWPath> {
    simulate_gw_from(law, 1, n_gens, n_paths, seed)
}

/// Galton-Watson paths started from `x0` individuals. Generation `g` of path
/// `p` draws its offspring from the stream `(seed, GALTON_WATSON, p, g)`.
pub fn simulate_gw_from(law: &FamilyLaw, x0: u64, n_gens: usize, n_paths: usize, seed: u64) -> Vec<GWPath> {
    (0..n_paths as u64)
        .into_par_iter()
        .map(|p| {
            let mut pops = Vec::with_capacity(n_gens + 1);
            pops.push(x0);
            let mut overflowed = false;
            let mut x = x0;
            for g in 1..=n_gens as u64 {
                let mut s = Stream::new(seed, &[domain::GALTON_WATSON, p, g]);
                let mut next = 0u64;
                for _ in 0..x {
                    match next.checked_add(law.sample(s.next_f64())).filter(|v| *v <= POPULATION_GUARD) {
                        Some(v) => next = v,
                        None => {
                            overflowed = true;
                            break;
                        }
                    }
                }
                if overflowed {
                    break;
                }
                x = next;
                pops.push(x);
            }
            GWPath { populations: pops, seed, index: p, overflowed }
        })
        .collect()
}

/// Galton-Watson paths through the discrete Lamperti transform.
///
/// Path `p` owns the walk `S_m = Σ_{i≤m}(ξ_i − 1)` drawn from the stream
/// `(seed, LAMPERTI, p)`. The clock is `Θ₀ = 0`, `Θ_{n+1} = Θ_n + X_n` and
/// `X_n = x0 + S_{Θ_n}`.
pub fn lamperti_gw(law: &FamilyLaw, x0: u64, n_gens: usize, n_paths: usize, seed: u64) -> Result<Vec<GWPath>> {
    if x0 == 0 {
        return invalid("initial population must be at least 1");
    }
    Ok((0..n_paths as u64)
        .into_par_iter()
        .map(|p| {
            let mut s = Stream::new(seed, &[domain::LAMPERTI, p]);
            let mut walk: i128 = 0;
            let mut clock: u64 = 0;
            let mut pops = vec![x0];
            let mut overflowed = false;
            for _ in 0..n_gens {
                let x = (x0 as i128 + walk) as u64;
                match clock.checked_add(x).filter(|c| *c <= POPULATION_GUARD) {
                    Some(c) => clock = c,
                    None => {
                        overflowed = true;
                        break;
                    }
                }
                for _ in 0..x {
                    walk += law.sample(s.next_f64()) as i128 - 1;
                }
                let next = x0 as i128 + walk;
                if next > POPULATION_GUARD as i128 {
                    overflowed = true;
                    break;
                }
                pops.push(next as u64);
            }
            GWPath { populations: pops, seed, index: p, overflowed }
        })
        .collect())
}

/// Empirical law of `X_n` over paths that reached generation `n`.
pub fn empirical_generation(paths: &[GWPath], n: usize, cap: usize) -> Result<DiscreteDistribution> {
    DiscreteDistribution::empirical(paths.iter().filter_map(|p| p.at(n)), cap)
}

/// `ν₀ = δ₁` and `ν_{m+1} = Σ_k π̂(k) ν_m^{*k}` for `m < n`, truncated at `cap`.
pub fn descendant_sequence(law: &FamilyLaw, n: usize, cap: usize) -> Result<Vec<DiscreteDistribution>> {
    if law.max_size() > RECURSION_MAX_FAMILY {
        return Err(Error::Truncation(format!(
            "family sizes up to {} exceed the recursion limit {RECURSION_MAX_FAMILY}",
            law.max_size()
        )));
    }
    let mut seq = vec![DiscreteDistribution::point(1).truncate(cap)];
    for _ in 0..n {
        let next = descendant_step(law, seq.last().unwrap(), cap);
        seq.push(next);
    }
    Ok(seq)
}

fn descendant_step(law: &FamilyLaw, nu: &DiscreteDistribution, cap: usize) -> DiscreteDistribution {
    let kmax = law.max_size();
    let mut masses = vec![0.0; cap + 1];
    let mut tail = 0.0;
    let mut power = DiscreteDistribution::point(0);
    for k in 0..=kmax {
        let p = law.prob(k);
        if p > 0.0 {
            for (m, &v) in masses.iter_mut().zip(power.masses()) {
                *m += p * v;
            }
            tail += p * power.tail_mass();
        }
        if k < kmax {
            power = convolve(&power, nu, cap);
        }
    }
    DiscreteDistribution::raw(masses, tail)
}

/// `ν_n` truncated at `cap`.
pub fn descendant_distribution(law: &FamilyLaw, n: usize, cap: usize) -> Result<DiscreteDistribution> {
    Ok(descendant_sequence(law, n, cap)?.pop().unwrap())
}

/// `G_n(z)` with `G₀(z) = z`, `G_{m+1} = G(G_m)`.
pub fn generating_iterate(law: &FamilyLaw, n: usize, z: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&z) {
        return invalid(format!("z = {z} outside [0, 1]"));
    }
    Ok((0..n).fold(z, |g, _| law.generating(g)))
}

/// `φ̂(q) = Σ_{j≥1} ν(j)(1 − e^{−qj})` over the explicit masses.
pub fn discrete_bernstein(nu: &DiscreteDistribution, q: f64) -> Result<f64> {
    if !(q >= 0.0) {
        return invalid(format!("q = {q} must be nonnegative"));
    }
    Ok(nu.masses().iter().enumerate().skip(1).map(|(j, m)| -m * (-q * j as f64).exp_m1()).sum())
}

/// `(1 − s)^j − 1 + js`, with a binomial series when `js` is small.
fn mechanism_term(j: u64, s: f64) -> f64 {
    match j {
        0 | 1 => return 0.0,
        2 => return s * s,
        _ => {}
    }
    let jf = j as f64;
    if jf * s < 0.5 {
        let mut term = jf * (jf - 1.0) / 2.0 * s * s;
        let mut sum = term;
        let mut i = 2.0;
        while i < jf && term.abs() > 1e-18 * sum.abs() {
            term *= -s * (jf - i) / (i + 1.0);
            sum += term;
            i += 1.0;
        }
        sum
    } else {
        (jf * (-s).ln_1p()).exp() - 1.0 + jf * s
    }
}

/// `Ψ̂(s) = G(1 − s) − 1 + s` on `[0, 1]`.
pub fn discrete_mechanism(law: &FamilyLaw, s: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) {
        return invalid(format!("s = {s} outside [0, 1]"));
    }
    Ok(mechanism_unchecked(law, s))
}

pub(crate) fn mechanism_unchecked(law: &FamilyLaw, s: f64) -> f64 {
    let body: f64 = law.support().map(|(j, p)| p * mechanism_term(j, s)).sum();
    body + (1.0 - law.xi()) * s
}

/// `k`-th derivative of `Ψ̂` at `s ∈ [0, 1]`, `k ≥ 1`.
pub fn discrete_mechanism_derivative(law: &FamilyLaw, s: f64, k: u32) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) {
        return invalid(format!("s = {s} outside [0, 1]"));
    }
    match k {
        0 => invalid("derivative order must be at least 1"),
        1 => {
            Ok(1.0
                - law.support().filter(|p| p.0 >= 1).map(|(j, p)| p * j as f64 * pow_u64(1.0 - s, j - 1)).sum::<f64>())
        }
        _ => {
            let kk = k as u64;
            let sum: f64 = law
                .support()
                .filter(|p| p.0 >= kk)
                .map(|(j, p)| p * falling_factorial(j, k) * pow_u64(1.0 - s, j - kk))
                .sum();
            Ok(if k.is_multiple_of(2) { sum } else { -sum })
        }
    }
}

fn falling_factorial(j: u64, k: u32) -> f64 {
    if j <= 170 {
        (0..k as u64).map(|i| (j - i) as f64).product()
    } else {
        (ln_gamma(j as f64 + 1.0) - ln_gamma((j - k as u64) as f64 + 1.0)).exp()
    }
}

fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// `C(l, k) ρ^k (1 − ρ)^{l−k}`.
fn binomial_pmf(l: u64, k: u64, rho: f64) -> f64 {
    if l <= 1000 {
        let c: f64 = (1..=k).map(|i| (l - k + i) as f64 / i as f64).product();
        c * rho.powi(k as i32) * (1.0 - rho).powi((l - k) as i32)
    } else {
        let lc = ln_gamma(l as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((l - k) as f64 + 1.0);
        let tail = if l == k { 0.0 } else { (l - k) as f64 * (-rho).ln_1p() };
        (lc + k as f64 * rho.ln() + tail).exp()
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho <= 1.0) {
        return invalid(format!("ρ = {rho} outside (0, 1]"));
    }
    Ok(())
}

/// `R̂_k(ρ) = Σ_{l≥k} π̂(l) C(l,k) ρ^k (1−ρ)^{l−k}` for `k = 2..=kmax`;
/// entry `i` holds `R̂_{i+2}`.
pub fn discrete_rates(law: &FamilyLaw, rho: f64, kmax: usize) -> Result<Vec<f64>> {
    check_rho(rho)?;
    Ok((2..=kmax as u64)
        .map(|k| law.support().filter(|p| p.0 >= k).map(|(l, p)| p * binomial_pmf(l, k, rho)).sum())
        .collect())
}

/// Same rates through `(−ρ)^k Ψ̂^{(k)}(ρ)/k!`.
pub fn discrete_rates_derivative_form(law: &FamilyLaw, rho: f64, kmax: usize) -> Result<Vec<f64>> {
    check_rho(rho)?;
    (2..=kmax as u32)
        .map(|k| {
            let d = discrete_mechanism_derivative(law, rho, k)?;
            let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
            Ok(sign * d * (k as f64 * rho.ln() - ln_gamma(k as f64 + 1.0)).exp())
        })
        .collect()
}

/// Largest index `J` such that `ν_{n+1}` fits without truncation, capped at `limit`.
fn safe_cap(law: &FamilyLaw, n: usize, limit: usize) -> usize {
    let k = law.max_size().max(1) as f64;
    let need = k.powi(n as i32 + 1);
    if need >= limit as f64 {
        limit
    } else {
        need as usize
    }
}

/// Max over `j ∈ [1, cap]` of the discrete Smoluchowski defect
/// `|ν_{n+1}(j) − ν_n(j) − (Ξ−1)ν_n(j) − Σ_{k≥2} R̂_k(ρ_n) Î_k(j)|`, where
/// `Î_k = p^{*k} − k·p` and `p = ν_n|_{j>0}/ρ_n`.
pub fn smoluchowski_residual(law: &FamilyLaw, n: usize, cap: usize) -> Result<f64> {
    let seq = descendant_sequence(law, n + 1, cap)?;
    let (nu, next) = (&seq[n], &seq[n + 1]);
    if next.tail_mass() > 0.0 {
        return Err(Error::Truncation(format!("ν_{} does not fit below {cap}", n + 1)));
    }
    let rho = nu.positive_mass();
    let mut rhs = vec![0.0; cap + 1];
    if rho > 0.0 {
        let mut pm = nu.masses().to_vec();
        pm[0] = 0.0;
        pm.iter_mut().for_each(|m| *m /= rho);
        let p = DiscreteDistribution::raw(pm, 0.0);
        let kmax = law.max_size() as usize;
        let rates = discrete_rates(law, rho.min(1.0), kmax)?;
        let mut power = p.clone();
        for k in 2..=kmax {
            power = convolve(&power, &p, cap);
            let r = rates[k - 2];
            if r == 0.0 {
                continue;
            }
            for (j, v) in rhs.iter_mut().enumerate().skip(1) {
                *v += r * (power.mass(j) - k as f64 * p.mass(j));
            }
        }
    }
    let damp = law.xi() - 1.0;
    Ok((1..=cap).map(|j| (next.mass(j) - nu.mass(j) - damp * nu.mass(j) - rhs[j]).abs()).fold(0.0, f64::max))
}

/// Max over `grid` of `|φ̂_{n+1}(q) − φ̂_n(q) + Ψ̂(φ̂_n(q))|`, using the exact
/// recursion with a truncation-safe cap.
pub fn bernstein_step_residual(law: &FamilyLaw, n: usize, grid: &[f64]) -> Result<f64> {
    let cap = safe_cap(law, n, 1 << 18);
    let seq = descendant_sequence(law, n + 1, cap)?;
    if seq[n + 1].tail_mass() > 0.0 {
        return Err(Error::Truncation(format!("ν_{} does not fit below {cap}", n + 1)));
    }
    let mut worst = 0.0f64;
    for &q in grid {
        let a = discrete_bernstein(&seq[n], q)?;
        let b = discrete_bernstein(&seq[n + 1], q)?;
        worst = worst.max((b - a + mechanism_unchecked(law, a.clamp(0.0, 1.0))).abs());
    }
    Ok(worst)
}

/// Truncation-safe cap for `ν_{n+1}` bounded by [`DEFAULT_CAP`] multiples.
pub fn truncation_safe_cap(law: &FamilyLaw, n: usize) -> usize {
    safe_cap(law, n, 1 << 18)
}

/// Convolution power of a family law truncated at `cap`.
pub fn family_power(law: &FamilyLaw, k: usize, cap: usize) -> DiscreteDistribution {
    convolve_power(&law.dist(cap), k, cap)
}

/// Default truncation cap re-exported for callers of this module.
pub const CAP: usize = DEFAULT_CAP;
