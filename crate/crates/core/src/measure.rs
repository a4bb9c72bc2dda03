//! Distributions on the nonnegative integers, finite atomic measures on
//! `(0, ∞)` and `[0, ∞]`, and the distances used by convergence diagnostics.

use crate::error::{invalid, Error, Result};

/// Default truncation cap for integer-supported distributions.
pub const DEFAULT_CAP: usize = 4096;

/// Absolute tolerance under which two atom locations are merged.
pub const MERGE_TOL: f64 = 1e-15;

/// Probability masses on `0..=J` plus the mass lost beyond `J`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    masses: Vec<f64>,
    tail: f64,
}

impl DiscreteDistribution {
    /// Validating constructor. Masses and tail must be finite and nonnegative
    /// and sum to one within `1e-9`.
    pub fn new(masses: Vec<f64>, tail: f64) -> Result<Self> {
        if masses.iter().chain(std::iter::once(&tail)).any(|m| !m.is_finite() || *m < 0.0) {
            return invalid("masses must be finite and nonnegative");
        }
        let total: f64 = masses.iter().sum::<f64>() + tail;
        if (total - 1.0).abs() > 1e-9 {
            return invalid(format!("masses sum to {total}, expected 1"));
        }
        Ok(Self::raw(masses, tail))
    }

    /// Trusted constructor for internally produced masses.
    pub(crate) fn raw(mut masses: Vec<f64>, tail: f64) -> Self {
        while masses.len() > 1 && masses[masses.len() - 1] == 0.0 {
            masses.pop();
        }
        if masses.is_empty() {
            masses.push(0.0);
        }
        Self { masses, tail }
    }

    /// Point mass at `j`.
    pub fn point(j: usize) -> Self {
        let mut masses = vec![0.0; j + 1];
        masses[j] = 1.0;
        Self { masses, tail: 0.0 }
    }

    /// Empirical law of integer samples; samples above `cap` go to the tail.
    pub fn empirical<I: IntoIterator<Item = u64>>(samples: I, cap: usize) -> Result<Self> {
        let mut counts = vec![0u64; cap + 1];
        let mut over = 0u64;
        let mut n = 0u64;
        for s in samples {
            n += 1;
            match usize::try_from(s) {
                Ok(i) if i <= cap => counts[i] += 1,
                _ => over += 1,
            }
        }
        if n == 0 {
            return invalid("no samples");
        }
        let nf = n as f64;
        let masses = counts.into_iter().map(|c| c as f64 / nf).collect();
        Ok(Self::raw(masses, over as f64 / nf))
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Mass at `j`, zero beyond the stored range.
    pub fn mass(&self, j: usize) -> f64 {
        self.masses.get(j).copied().unwrap_or(0.0)
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail
    }

    /// Largest index carried explicitly.
    pub fn support_max(&self) -> usize {
        self.masses.len() - 1
    }

    /// Sum of explicit masses plus tail.
    pub fn total(&self) -> f64 {
        self.masses.iter().sum::<f64>() + self.tail
    }

    /// `Σ j·m(j)` over the explicit range.
    pub fn mean(&self) -> f64 {
        self.masses.iter().enumerate().map(|(j, m)| j as f64 * m).sum()
    }

    /// Mass on `j ≥ 1` including the tail.
    pub fn positive_mass(&self) -> f64 {
        self.masses.iter().skip(1).sum::<f64>() + self.tail
    }

    /// Errors if the tail exceeds `budget`.
    pub fn check_tail(&self, budget: f64) -> Result<()> {
        if self.tail > budget {
            return Err(Error::Truncation(format!("tail mass {} exceeds budget {budget}", self.tail)));
        }
        Ok(())
    }

    /// Moves mass above `cap` into the tail.
    pub fn truncate(&self, cap: usize) -> Self {
        if self.masses.len() <= cap + 1 {
            return self.clone();
        }
        let extra: f64 = self.masses[cap + 1..].iter().sum();
        Self::raw(self.masses[..=cap].to_vec(), self.tail + extra)
    }
}

/// Convolution of two distributions truncated at `cap`.
pub fn convolve(a: &DiscreteDistribution, b: &DiscreteDistribution, cap: usize) -> DiscreteDistribution {
    let (am, bm) = (a.masses(), b.masses());
    let len = (am.len() + bm.len() - 1).min(cap + 1);
    let mut out = vec![0.0; len];
    let mut suffix = vec![0.0; bm.len() + 1];
    for j in (0..bm.len()).rev() {
        suffix[j] = suffix[j + 1] + bm[j];
    }
    let mut overflow = 0.0;
    for (i, &ai) in am.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        if i > cap {
            overflow += ai * suffix[0];
            continue;
        }
        let room = (cap - i + 1).min(bm.len());
        for (o, &bj) in out[i..i + room].iter_mut().zip(&bm[..room]) {
            *o += ai * bj;
        }
        overflow += ai * suffix[room];
    }
    let tail = a.tail + b.tail - a.tail * b.tail + overflow;
    DiscreteDistribution::raw(out, tail)
}

/// `k`-fold convolution power truncated at `cap`; `p^{*0} = δ₀`.
pub fn convolve_power(p: &DiscreteDistribution, k: usize, cap: usize) -> DiscreteDistribution {
    let mut result = DiscreteDistribution::point(0);
    let mut base = p.truncate(cap);
    let mut k = k;
    while k > 0 {
        if k & 1 == 1 {
            result = convolve(&result, &base, cap);
        }
        k >>= 1;
        if k > 0 {
            base = convolve(&base, &base, cap);
        }
    }
    result
}

/// Total variation distance, counting the tails as one extra cell.
pub fn total_variation(a: &DiscreteDistribution, b: &DiscreteDistribution) -> f64 {
    let n = a.masses.len().max(b.masses.len());
    let body: f64 = (0..n).map(|j| (a.mass(j) - b.mass(j)).abs()).sum();
    0.5 * body + 0.5 * (a.tail - b.tail).abs()
}

/// Finite measure on `(0, ∞)` given by weighted atoms at sorted distinct locations.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AtomicMeasure {
    locs: Vec<f64>,
    weights: Vec<f64>,
}

impl AtomicMeasure {
    /// Builds a measure from `(location, weight)` pairs. Sorts, merges
    /// locations within [`MERGE_TOL`] and drops zero weights.
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        for &(x, w) in &atoms {
            if !(x.is_finite() && x > 0.0) {
                return invalid(format!("atom location {x} must be finite and positive"));
            }
            if !(w.is_finite() && w >= 0.0) {
                return invalid(format!("atom weight {w} must be finite and nonnegative"));
            }
        }
        Ok(Self::from_unsorted(atoms))
    }

    pub(crate) fn from_unsorted(mut atoms: Vec<(f64, f64)>) -> Self {
        atoms.retain(|a| a.1 > 0.0);
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut locs: Vec<f64> = Vec::with_capacity(atoms.len());
        let mut weights: Vec<f64> = Vec::with_capacity(atoms.len());
        for (x, w) in atoms {
            match locs.last() {
                Some(&last) if (x - last).abs() <= MERGE_TOL => {
                    *weights.last_mut().unwrap() += w;
                }
                _ => {
                    locs.push(x);
                    weights.push(w);
                }
            }
        }
        Self { locs, weights }
    }

    /// Single atom `(x, w)`.
    pub fn dirac(x: f64, w: f64) -> Result<Self> {
        Self::new(vec![(x, w)])
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.locs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locs.is_empty()
    }

    pub fn locations(&self) -> &[f64] {
        &self.locs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.locs.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `Σ w·f(x)`; errors if `f` is not finite at some atom.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> Result<f64> {
        let mut s = 0.0;
        for (x, w) in self.atoms() {
            let v = f(x);
            if !v.is_finite() {
                return invalid(format!("integrand not finite at atom {x}"));
            }
            s += w * v;
        }
        Ok(s)
    }

    /// `Σ w·f(x)` for integrands known to be finite.
    pub(crate) fn sum(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.atoms().map(|(x, w)| w * f(x)).sum()
    }

    /// Mass of the atoms satisfying `keep`.
    pub fn mass_where(&self, keep: impl Fn(f64) -> bool) -> f64 {
        self.atoms().filter(|a| keep(a.0)).map(|a| a.1).sum()
    }

    /// Atoms satisfying `keep`.
    pub fn restrict(&self, keep: impl Fn(f64) -> bool) -> Self {
        let (locs, weights) = self.atoms().filter(|a| keep(a.0)).unzip();
        Self { locs, weights }
    }

    /// Image under `(x, w) ↦ (x·a, w·c)`.
    pub fn dilate(&self, a: f64, c: f64) -> Self {
        Self { locs: self.locs.iter().map(|x| x * a).collect(), weights: self.weights.iter().map(|w| w * c).collect() }
    }

    /// Sum of two measures.
    pub fn union(&self, other: &Self) -> Self {
        Self::from_unsorted(self.atoms().chain(other.atoms()).collect())
    }
}

/// Finite measure on `[0, ∞]`: atoms at `0` and `∞` plus interior atoms.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CompactifiedMeasure {
    pub mass_at_zero: f64,
    pub mass_at_infinity: f64,
    pub interior: AtomicMeasure,
}

impl CompactifiedMeasure {
    pub fn new(mass_at_zero: f64, mass_at_infinity: f64, interior: AtomicMeasure) -> Result<Self> {
        if !(mass_at_zero >= 0.0 && mass_at_infinity >= 0.0)
            || !mass_at_zero.is_finite()
            || !mass_at_infinity.is_finite()
        {
            return invalid("boundary masses must be finite and nonnegative");
        }
        Ok(Self { mass_at_zero, mass_at_infinity, interior })
    }

    pub fn total_mass(&self) -> f64 {
        self.mass_at_zero + self.mass_at_infinity + self.interior.total_mass()
    }

    /// `⟨g_q, κ⟩`.
    pub fn pair_gq(&self, q: f64) -> f64 {
        q * self.mass_at_zero + self.mass_at_infinity + self.interior.sum(|x| g_q(q, x))
    }
}

/// Test function `g_q(x) = (1 − e^{−qx})/(x∧1)` on `(0, ∞)`.
pub fn g_q(q: f64, x: f64) -> f64 {
    -(-q * x).exp_m1() / x.min(1.0)
}

/// Mass gap plus sup over `grid` of `|⟨g_q, a⟩ − ⟨g_q, b⟩|`.
pub fn kappa_distance(a: &CompactifiedMeasure, b: &CompactifiedMeasure, grid: &[f64]) -> Result<f64> {
    check_grid(grid)?;
    let sup = grid.iter().map(|&q| (a.pair_gq(q) - b.pair_gq(q)).abs()).fold(0.0, f64::max);
    Ok((a.total_mass() - b.total_mass()).abs() + sup)
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let r = hi / lo;
            let mut g: Vec<f64> = (0..n).map(|i| lo * r.powf(i as f64 / (n - 1) as f64)).collect();
            g[n - 1] = hi;
            g
        }
    }
}

/// 41 log-spaced points on `[2⁻¹⁰, 2¹⁰]`.
pub fn default_q_grid() -> Vec<f64> {
    log_grid(2f64.powi(-10), 2f64.powi(10), 41)
}

/// Errors unless `grid` is nonempty with finite positive entries.
pub fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return invalid("empty grid");
    }
    if grid.iter().any(|q| !(q.is_finite() && *q > 0.0)) {
        return invalid("grid entries must be finite and positive");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dd(m: &[f64]) -> DiscreteDistribution {
        DiscreteDistribution::new(m.to_vec(), 0.0).unwrap()
    }

    #[test]
    fn power_of_point_mass_shifts() {
        let p = convolve_power(&DiscreteDistribution::point(1), 3, 10);
        assert_eq!(p, DiscreteDistribution::point(3));
    }

    #[test]
    fn zeroth_power_is_delta_zero() {
        let p = convolve_power(&dd(&[0.2, 0.3, 0.5]), 0, 7);
        assert_eq!(p, DiscreteDistribution::point(0));
    }

    #[test]
    fn square_of_two_point_law() {
        let p = convolve_power(&dd(&[0.5, 0.0, 0.5]), 2, 4);
        assert_eq!(p.masses(), &[0.25, 0.0, 0.5, 0.0, 0.25]);
        assert_eq!(p.tail_mass(), 0.0);
    }

    #[test]
    fn truncation_goes_to_tail() {
        let p = convolve_power(&dd(&[0.5, 0.0, 0.5]), 2, 3);
        assert_eq!(p.masses(), &[0.25, 0.0, 0.5]);
        assert!((p.tail_mass() - 0.25).abs() < 1e-15);
        assert!(p.check_tail(0.1).is_err());
    }

    #[test]
    fn tv_examples() {
        let p = dd(&[0.1, 0.6, 0.3]);
        assert_eq!(total_variation(&p, &p), 0.0);
        assert_eq!(total_variation(&DiscreteDistribution::point(0), &DiscreteDistribution::point(1)), 1.0);
        assert_eq!(total_variation(&dd(&[0.5, 0.5]), &DiscreteDistribution::point(0)), 0.5);
    }

    #[test]
    fn integrate_examples() {
        let id = |x: f64| x;
        assert_eq!(AtomicMeasure::empty().integrate(id).unwrap(), 0.0);
        assert_eq!(AtomicMeasure::dirac(1.0, 2.0).unwrap().integrate(id).unwrap(), 2.0);
        let m = AtomicMeasure::new(vec![(2.0, 1.0), (1.0, 1.0)]).unwrap();
        assert_eq!(m.integrate(|x| x * x).unwrap(), 5.0);
        assert!(m.integrate(|x| 1.0 / (x - 1.0)).is_err());
    }

    #[test]
    fn atoms_merge_and_sort() {
        let m = AtomicMeasure::new(vec![(0.3, 1.0), (0.1, 2.0), (0.3 + 1e-17, 0.5), (0.2, 0.0)]).unwrap();
        assert_eq!(m.locations(), &[0.1, 0.3]);
        assert_eq!(m.weights(), &[2.0, 1.5]);
        assert!(AtomicMeasure::new(vec![(0.0, 1.0)]).is_err());
        assert!(AtomicMeasure::new(vec![(1.0, -1.0)]).is_err());
    }

    fn delta0(m: f64) -> CompactifiedMeasure {
        CompactifiedMeasure::new(m, 0.0, AtomicMeasure::empty()).unwrap()
    }

    #[test]
    fn kappa_distance_examples() {
        let g = default_q_grid();
        let k = CompactifiedMeasure::new(0.2, 0.1, AtomicMeasure::dirac(0.7, 1.3).unwrap()).unwrap();
        assert_eq!(kappa_distance(&k, &k, &g).unwrap(), 0.0);
        assert!(kappa_distance(&delta0(1.0), &delta0(2.0), &g).unwrap() >= 1.0);
        assert!(kappa_distance(&k, &k, &[]).is_err());
    }

    #[test]
    fn kappa_distance_of_shrinking_atom_decreases() {
        let g = default_q_grid();
        let d: Vec<f64> = [1e-1, 1e-2, 1e-3]
            .iter()
            .map(|&h| {
                let a = CompactifiedMeasure::new(0.0, 0.0, AtomicMeasure::dirac(2.0 * h, 1.0).unwrap()).unwrap();
                kappa_distance(&a, &delta0(1.0), &g).unwrap()
            })
            .collect();
        assert!(d[0] > d[1] && d[1] > d[2]);
        // sup_q |g_q(2h) − q| on the grid, evaluated independently
        let direct = g.iter().map(|&q| (q - (1.0 - (-q * 2e-3).exp()) / 2e-3).abs()).fold(0.0, f64::max);
        assert!((d[2] - direct).abs() < 1e-9 * direct);
    }

    #[test]
    fn default_grid_shape() {
        let g = default_q_grid();
        assert_eq!(g.len(), 41);
        assert_eq!(g[0], 2f64.powi(-10));
        assert_eq!(g[40], 1024.0);
        assert!((g[20] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn empirical_counts() {
        let e = DiscreteDistribution::empirical([0u64, 2, 2, 9], 4).unwrap();
        assert_eq!(e.masses(), &[0.25, 0.0, 0.5]);
        assert_eq!(e.tail_mass(), 0.25);
    }

    fn arb_dd(max_len: usize) -> impl Strategy<Value = DiscreteDistribution> {
        prop::collection::vec(0.0f64..1.0, 1..max_len).prop_filter_map("positive", |w| {
            let s: f64 = w.iter().sum();
            (s > 1e-6).then(|| DiscreteDistribution::raw(w.iter().map(|x| x / s).collect(), 0.0))
        })
    }

    proptest! {
        #[test]
        fn tv_symmetric_and_triangle(a in arb_dd(12), b in arb_dd(12), c in arb_dd(12)) {
            let ab = total_variation(&a, &b);
            prop_assert_eq!(ab, total_variation(&b, &a));
            prop_assert!(ab <= total_variation(&a, &c) + total_variation(&c, &b) + 1e-15);
            prop_assert!((0.0..=1.0 + 1e-15).contains(&ab));
            prop_assert_eq!(total_variation(&a, &a), 0.0);
        }

        #[test]
        fn power_conserves_mass_and_mean(p in arb_dd(8), k in 0usize..10, cap in 1usize..40) {
            let pk = convolve_power(&p, k, cap);
            prop_assert!((pk.total() - 1.0).abs() < 1e-12);
            if pk.tail_mass() == 0.0 && p.support_max() * k <= cap {
                prop_assert!((pk.mean() - k as f64 * p.mean()).abs() < 1e-12 * (1.0 + k as f64));
            }
        }

        #[test]
        fn kappa_distance_symmetric(
            m0 in 0.0f64..2.0, mi in 0.0f64..2.0, x in 0.01f64..10.0, w in 0.0f64..3.0,
            n0 in 0.0f64..2.0, y in 0.01f64..10.0,
        ) {
            let g = default_q_grid();
            let a = CompactifiedMeasure::new(m0, mi, AtomicMeasure::dirac(x, w).unwrap()).unwrap();
            let b = CompactifiedMeasure::new(n0, 0.0, AtomicMeasure::dirac(y, 1.0).unwrap()).unwrap();
            prop_assert_eq!(kappa_distance(&a, &b, &g).unwrap(), kappa_distance(&b, &a, &g).unwrap());
            prop_assert_eq!(kappa_distance(&a, &a, &g).unwrap(), 0.0);
        }
    }
}
