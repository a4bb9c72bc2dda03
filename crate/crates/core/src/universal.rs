//! Universal Lévy triples: the schedule `c_k = c·e^{k²}`, finite-mass
//! truncations of target triples, the packing construction of `Φ★`, the
//! coarse-grained universal family law and the dilation demonstrations.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::gw::FamilyLaw;
use crate::levy::{kappa_of, sup_gap, LevyTriple};
use crate::measure::{check_grid, kappa_distance, AtomicMeasure};
use crate::scaling::solve_phi;

/// Largest supported `k_max`; `e^{k²}` overflows beyond it.
pub const MAX_LEVELS: usize = 26;

/// `c_k = c·e^{k²}` for `k = 1..=k_max` and the quantities controlling it.
#[derive(Debug, Clone, PartialEq)]
pub struct UniversalSchedule {
    pub c: f64,
    /// `c_seq[k−1] = c_k`.
    pub c_seq: Vec<f64>,
    /// `Σ_{j≤J} j/c_j`.
    pub partial_sum: f64,
    /// Number of terms `J` in `partial_sum`.
    pub partial_terms: usize,
    /// Geometric bound on `Σ_{j>J} j/c_j`.
    pub remainder_bound: f64,
    /// `tail_bounds[k−1] = c_k Σ_{j>k} j/c_j`.
    pub tail_bounds: Vec<f64>,
}

impl UniversalSchedule {
    /// Upper bound on `Σ_{j≥1} j/c_j`.
    pub fn sum_bound(&self) -> f64 {
        self.partial_sum + self.remainder_bound
    }

    pub fn k_max(&self) -> usize {
        self.c_seq.len()
    }

    /// `c_k` for `k ≥ 1`.
    pub fn c_k(&self, k: usize) -> f64 {
        self.c_seq[k - 1]
    }
}

/// Builds and validates the schedule: `Σ_{j≥1} j/c_j < 1` and
/// `c_k Σ_{j>k} j/c_j` decreasing over `k ≤ k_max`.
pub fn make_schedule(c: f64, k_max: usize) -> Result<UniversalSchedule> {
    if !(c.is_finite() && c > 0.0) {
        return invalid(format!("schedule constant c = {c} must be finite and positive"));
    }
    if !(1..=MAX_LEVELS).contains(&k_max) {
        return invalid(format!("k_max = {k_max} outside 1..={MAX_LEVELS}"));
    }
    let term = |j: usize| j as f64 * (-((j * j) as f64)).exp() / c;
    let terms = k_max.max(6);
    let partial_sum: f64 = (1..=terms).map(term).sum();
    let ratio = (terms + 2) as f64 / (terms + 1) as f64 * (-((2 * terms + 3) as f64)).exp();
    let remainder_bound = term(terms + 1) / (1.0 - ratio);
    if partial_sum + remainder_bound >= 1.0 {
        return Err(Error::Config(format!("schedule invalid for c = {c}: Σ j/c_j = {partial_sum} ≥ 1")));
    }
    let tail_bounds: Vec<f64> = (1..=k_max)
        .map(|k| (k + 1..=k + 40).map(|j| j as f64 * (((k * k) as f64) - (j * j) as f64).exp()).sum())
        .collect();
    if tail_bounds.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config("schedule tail values are not decreasing".into()));
    }
    Ok(UniversalSchedule {
        c,
        c_seq: (1..=k_max).map(|k| c * ((k * k) as f64).exp()).collect(),
        partial_sum,
        partial_terms: terms,
        remainder_bound,
        tail_bounds,
    })
}

/// Finite-mass pure-jump members approximating a list of targets.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTargetFamily {
    pub targets: Vec<LevyTriple>,
    /// `members[k−1] = (0, 0, μ_k)`.
    pub members: Vec<LevyTriple>,
    /// Truncation level `ε_k` of each member.
    pub epsilons: Vec<f64>,
    /// `subsequences[i]`: increasing indices `k` whose members approximate target `i`.
    pub subsequences: Vec<Vec<usize>>,
}

/// Member `k` approximates target `(k−1) mod n` at its `m`-th appearance by
/// `1{x ≥ ε}μ + (α₀/ε)δ_ε + α_∞δ_{1/ε}` with `ε = max(4⁻ᵐ, ·)` raised until
/// each nonzero component has mass at most `k/(number of nonzero components)`.
/// An `α_∞` above that cap is clipped to it.
pub fn dense_targets(targets: &[LevyTriple], k_max: usize) -> Result<DenseTargetFamily> {
    if targets.is_empty() {
        return invalid("need at least one target");
    }
    let n = targets.len();
    let mut members = Vec::with_capacity(k_max);
    let mut epsilons = Vec::with_capacity(k_max);
    let mut subsequences = vec![Vec::new(); n];
    for k in 1..=k_max {
        let i = (k - 1) % n;
        let m = (k - 1) / n + 1;
        let (member, eps) = truncate_target(&targets[i], k, m)?;
        members.push(member);
        epsilons.push(eps);
        subsequences[i].push(k);
    }
    Ok(DenseTargetFamily { targets: targets.to_vec(), members, epsilons, subsequences })
}

fn truncate_target(t: &LevyTriple, k: usize, m: usize) -> Result<(LevyTriple, f64)> {
    let mu = t.mu();
    let parts = [t.alpha0() > 0.0, t.alpha_inf() > 0.0, !mu.is_empty()].iter().filter(|&&p| p).count();
    let mut eps = 4f64.powi(-(m as i32));
    if parts == 0 {
        return Ok((LevyTriple::default(), eps));
    }
    let cap = k as f64 / parts as f64;
    if t.alpha0() > 0.0 {
        eps = eps.max(t.alpha0() / cap);
    }
    let mut acc = 0.0;
    for (x, w) in mu.atoms().collect::<Vec<_>>().into_iter().rev() {
        acc += w;
        if acc > cap {
            eps = eps.max(x * (1.0 + f64::EPSILON));
            break;
        }
    }
    let mut atoms: Vec<(f64, f64)> = mu.atoms().filter(|a| a.0 >= eps).collect();
    if t.alpha0() > 0.0 {
        atoms.push((eps, t.alpha0() / eps));
    }
    if t.alpha_inf() > 0.0 {
        atoms.push((1.0 / eps, t.alpha_inf().min(cap)));
    }
    Ok((LevyTriple::pure_jump(AtomicMeasure::new(atoms)?), eps))
}

/// Output of [`pack`].
#[derive(Debug, Clone, PartialEq)]
pub struct Packing {
    pub c_seq: Vec<f64>,
    pub b_seq: Vec<f64>,
    /// `head_bounds[k−1] = c_k Σ_{j<k} c_j⁻¹Φ_j(b_j q_max/b_k)`.
    pub head_bounds: Vec<f64>,
    /// `c_k Σ_{j>k} j/c_j` from the schedule.
    pub tail_bounds: Vec<f64>,
    /// Bound on the omitted terms `Σ_{j>k_max} j/c_j` of `Φ★`.
    pub truncation_bound: f64,
    pub members: Vec<LevyTriple>,
    /// `(0, 0, μ★)` with `μ★ = Σ_j c_j⁻¹ μ_j(·/b_j)`.
    pub lambda_star: LevyTriple,
    pub q_max: f64,
}

impl Packing {
    /// `Φ★(q) = Σ_j c_j⁻¹Φ_j(b_j q)`.
    pub fn phi_star(&self, q: f64) -> f64 {
        self.lambda_star.bernstein(q)
    }

    /// `λ★` dilated by `(b_k, c_k)`, with Bernstein transform `c_kΦ★(q/b_k)`.
    pub fn scaled(&self, k: usize) -> LevyTriple {
        self.lambda_star.scale(self.b_seq[k - 1], self.c_seq[k - 1]).expect("schedule values are positive")
    }
}

/// Packing construction. `b_1 = c_1` and `b_k` doubles from `b_{k−1}c_k`
/// until the head bound at the grid maximum is below `1/k`.
pub fn pack(family: &DenseTargetFamily, schedule: &UniversalSchedule, grid: &[f64]) -> Result<Packing> {
    check_grid(grid)?;
    let k_max = family.members.len();
    if k_max > schedule.k_max() {
        return invalid(format!("{k_max} members exceed the schedule length {}", schedule.k_max()));
    }
    for (i, m) in family.members.iter().enumerate() {
        if m.alpha0() != 0.0 || m.alpha_inf() != 0.0 || m.mu().total_mass() > (i + 1) as f64 * (1.0 + 1e-12) {
            return invalid(format!("member {} is not a pure-jump measure of mass at most {}", i + 1, i + 1));
        }
    }
    let q_max = grid.iter().copied().fold(0.0, f64::max);
    let mut b_seq: Vec<f64> = Vec::with_capacity(k_max);
    let mut head_bounds = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let ck = schedule.c_k(k);
        let head = |b: f64| -> f64 {
            ck * (1..k)
                .map(|j| family.members[j - 1].bernstein(b_seq[j - 1] * q_max / b) / schedule.c_k(j))
                .fold(0.0, |a, x| a + x)
        };
        let mut b = if k == 1 { ck } else { b_seq[k - 2] * ck };
        let mut hb = head(b);
        while hb >= 1.0 / k as f64 {
            b *= 2.0;
            if !b.is_finite() {
                return Err(Error::NoConvergence(format!("no b_{k} below 2^1024")));
            }
            hb = head(b);
        }
        b_seq.push(b);
        head_bounds.push(hb);
    }
    let atoms = family
        .members
        .iter()
        .enumerate()
        .flat_map(|(i, m)| {
            let (b, c) = (b_seq[i], schedule.c_k(i + 1));
            m.mu().atoms().map(move |(x, w)| (b * x, w / c))
        })
        .collect();
    let truncation_bound = (k_max + 1..=k_max + 40).map(|j| j as f64 / (schedule.c * ((j * j) as f64).exp())).sum();
    Ok(Packing {
        c_seq: schedule.c_seq[..k_max].to_vec(),
        b_seq,
        head_bounds,
        tail_bounds: schedule.tail_bounds[..k_max].to_vec(),
        truncation_bound,
        members: family.members.clone(),
        lambda_star: LevyTriple::pure_jump(AtomicMeasure::from_unsorted(atoms)),
        q_max,
    })
}

/// `π̂(j) = μ★((j−2, j−1])/(j−1)` for `j ≥ 2`, `π̂(1) = 1 − Σ_{j≥2} jπ̂(j)`,
/// `π̂(0)` the remaining mass. Requires `μ★` of total mass below `½`.
pub fn universal_family_law(mu_star: &AtomicMeasure) -> Result<FamilyLaw> {
    let total = mu_star.total_mass();
    if total >= 0.5 {
        return invalid(format!("μ★ has mass {total} ≥ 1/2"));
    }
    let mut bins: BTreeMap<u64, f64> = BTreeMap::new();
    for (x, w) in mu_star.atoms() {
        let j1 = x.ceil();
        if j1 >= u64::MAX as f64 {
            return Err(Error::Overflow(format!("atom at {x} exceeds the family-size range")));
        }
        *bins.entry(j1 as u64 + 1).or_insert(0.0) += w;
    }
    let mut pairs: Vec<(u64, f64)> = bins.into_iter().map(|(j, m)| (j, m / (j - 1) as f64)).collect();
    let mean_big: f64 = pairs.iter().map(|&(j, p)| j as f64 * p).sum();
    let mass_big: f64 = pairs.iter().map(|p| p.1).sum();
    let p1 = 1.0 - mean_big;
    pairs.push((1, p1));
    pairs.push((0, 1.0 - p1 - mass_big));
    FamilyLaw::from_sparse(pairs)
}

/// `μ̂ = Σ_{j≥2} (j−1)π̂(j)δ_j`.
pub fn coarse_grained_measure(law: &FamilyLaw) -> AtomicMeasure {
    AtomicMeasure::from_unsorted(
        law.support().filter(|p| p.0 >= 2).map(|(j, p)| (j as f64, (j - 1) as f64 * p)).collect(),
    )
}

/// One sample of the tail comparison `μ★((z,∞)) ≤ μ̂((z,∞)) ≤ μ★((z−2,∞))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichSample {
    pub z: f64,
    pub lower: f64,
    pub value: f64,
    pub upper: f64,
}

impl SandwichSample {
    /// Holds up to a relative rounding allowance of `10⁻¹²`.
    pub fn holds(&self) -> bool {
        let slack = 1e-12 * self.upper.abs().max(1e-300);
        self.lower <= self.value + slack && self.value <= self.upper + slack
    }
}

/// Tail sandwich of the coarse-grained measure at points `z > 2`.
pub fn tail_sandwich(mu_star: &AtomicMeasure, law: &FamilyLaw, points: &[f64]) -> Result<Vec<SandwichSample>> {
    if points.iter().any(|z| !(*z > 2.0 && z.is_finite())) {
        return invalid("sandwich points must be finite and above 2");
    }
    let hat = coarse_grained_measure(law);
    Ok(points
        .iter()
        .map(|&z| SandwichSample {
            z,
            lower: mu_star.mass_where(|x| x > z),
            value: hat.mass_where(|x| x > z),
            upper: mu_star.mass_where(|x| x > z - 2.0),
        })
        .collect())
}

/// Per-`k` distances of the dilated universal triple to a target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemoRow {
    pub k: usize,
    pub kappa: f64,
    /// Sup-grid `|c_kΦ★(q/b_k) − Φ(q)|`.
    pub bernstein: f64,
}

pub fn universality_demo(
    packing: &Packing,
    target: &LevyTriple,
    subsequence: &[usize],
    grid: &[f64],
) -> Result<Vec<DemoRow>> {
    check_grid(grid)?;
    let kt = kappa_of(target);
    subsequence
        .iter()
        .map(|&k| {
            check_level(packing, k)?;
            let s = packing.scaled(k);
            Ok(DemoRow {
                k,
                kappa: kappa_distance(&kappa_of(&s), &kt, grid)?,
                bernstein: sup_gap(grid, |q| s.bernstein(q) - target.bernstein(q)),
            })
        })
        .collect()
}

fn check_level(packing: &Packing, k: usize) -> Result<()> {
    if k == 0 || k > packing.b_seq.len() {
        return invalid(format!("level {k} outside 1..={}", packing.b_seq.len()));
    }
    Ok(())
}

/// Per-`k` sup over `(q, t)` of `|b_k φ★(q/b_k, c_k t) − φ̃(q, t)|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsbpRow {
    pub k: usize,
    pub gap: f64,
}

/// Compares the dilated exponents of `λ★` with those of `target`.
pub fn universal_csbp_demo(
    packing: &Packing,
    target: &LevyTriple,
    subsequence: &[usize],
    grid: &[f64],
    times: &[f64],
) -> Result<Vec<CsbpRow>> {
    check_grid(grid)?;
    let reference: Vec<Vec<f64>> = grid.par_iter().map(|&q| solve_phi(target, q, times)).collect::<Result<_>>()?;
    subsequence
        .iter()
        .map(|&k| {
            check_level(packing, k)?;
            let (b, c) = (packing.b_seq[k - 1], packing.c_seq[k - 1]);
            let scaled_times: Vec<f64> = times.iter().map(|t| c * t).collect();
            let gaps: Vec<f64> = grid
                .par_iter()
                .zip(&reference)
                .map(|(&q, refs)| {
                    let star = solve_phi(&packing.lambda_star, q / b, &scaled_times)?;
                    Ok(star
                        .iter()
                        .zip(refs)
                        .zip(times)
                        .map(|((s, r), &t)| if t == 0.0 { (q - r).abs() } else { (b * s - r).abs() })
                        .fold(0.0, f64::max))
                })
                .collect::<Result<_>>()?;
            Ok(CsbpRow { k, gap: gaps.into_iter().fold(0.0, f64::max) })
        })
        .collect()
}

/// Sup over the grid of `|φ_{λ^{b,c}}(q, t) − bφ_λ(q/b, ct)|`.
pub fn dilation_gap(t: &LevyTriple, b: f64, c: f64, grid: &[f64], times: &[f64]) -> Result<f64> {
    check_grid(grid)?;
    let scaled = t.scale(b, c)?;
    let ct: Vec<f64> = times.iter().map(|s| c * s).collect();
    let gaps: Vec<f64> = grid
        .par_iter()
        .map(|&q| {
            let direct = solve_phi(&scaled, q, times)?;
            let dilated = solve_phi(t, q / b, &ct)?;
            Ok(direct.iter().zip(&dilated).map(|(d, v)| (d - b * v).abs()).fold(0.0, f64::max))
        })
        .collect::<Result<_>>()?;
    Ok(gaps.into_iter().fold(0.0, f64::max))
}
