//! Lévy triples `(α₀, α_∞, μ)`, their Bernstein transforms and branching
//! mechanisms, dilations, left/right distribution functions, Grey's
//! condition and the continuity diagnostics.
//!
//! The Lévy measure `μ` is always an [`AtomicMeasure`]. Continuous measures
//! such as the stable density are discretized by a [`QuadratureRecipe`].
//! The jump measure `π` of the general mechanism, related by `x dπ = dμ`, is
//! not stored.

use crate::error::{invalid, Error, Result};
use crate::measure::{check_grid, kappa_distance, AtomicMeasure, CompactifiedMeasure};
use crate::numeric::adaptive_simpson;

/// Lévy triple: diffusion `α₀`, killing `α_∞`, Lévy measure `μ`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LevyTriple {
    alpha0: f64,
    alpha_inf: f64,
    mu: AtomicMeasure,
}

impl LevyTriple {
    pub fn new(alpha0: f64, alpha_inf: f64, mu: AtomicMeasure) -> Result<Self> {
        if !(alpha0.is_finite() && alpha0 >= 0.0 && alpha_inf.is_finite() && alpha_inf >= 0.0) {
            return invalid("α₀ and α_∞ must be finite and nonnegative");
        }
        Ok(Self { alpha0, alpha_inf, mu })
    }

    /// `(α₀, α_∞, ∅)`.
    pub fn constants(alpha0: f64, alpha_inf: f64) -> Result<Self> {
        Self::new(alpha0, alpha_inf, AtomicMeasure::empty())
    }

    /// `(0, 0, μ)`.
    pub fn pure_jump(mu: AtomicMeasure) -> Self {
        Self { alpha0: 0.0, alpha_inf: 0.0, mu }
    }

    /// `(1, 0, ∅)`, the Feller diffusion with `Ψ(q) = q²/2`.
    pub fn feller() -> Self {
        Self { alpha0: 1.0, alpha_inf: 0.0, mu: AtomicMeasure::empty() }
    }

    /// `(0, 0, μ)` with `μ` the quadrature of the `α`-stable density, `Ψ(q) ≈ q^α`.
    pub fn stable(alpha: f64) -> Result<Self> {
        Ok(Self::pure_jump(QuadratureRecipe::stable(alpha)?.build()?))
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    pub fn alpha_inf(&self) -> f64 {
        self.alpha_inf
    }

    pub fn mu(&self) -> &AtomicMeasure {
        &self.mu
    }

    /// `f(q) = α₀q + α_∞ + ∫(1 − e^{−qx})dμ`.
    pub fn bernstein_value(&self, q: f64) -> Result<f64> {
        if !(q > 0.0) {
            return invalid(format!("q = {q} must be positive"));
        }
        Ok(self.bernstein(q))
    }

    pub(crate) fn bernstein(&self, q: f64) -> f64 {
        self.alpha0 * q + self.alpha_inf + self.mu.sum(|x| -(-q * x).exp_m1())
    }

    /// `Ψ(q) = ½α₀q² + α_∞q + ∫(e^{−qx} − 1 + qx)/x dμ`.
    pub fn mechanism(&self, q: f64) -> Result<f64> {
        if !(q >= 0.0) {
            return invalid(format!("q = {q} must be nonnegative"));
        }
        Ok(self.psi(q))
    }

    pub(crate) fn psi(&self, q: f64) -> f64 {
        0.5 * self.alpha0 * q * q + self.alpha_inf * q + self.mu.sum(|x| psi_kernel(q * x) / x)
    }

    /// `k`-th derivative of `Ψ` at `q > 0`, `k ≥ 1`.
    pub fn mechanism_derivative(&self, q: f64, k: u32) -> Result<f64> {
        if !(q > 0.0) {
            return invalid(format!("q = {q} must be positive"));
        }
        match k {
            0 => invalid("derivative order must be at least 1"),
            1 => Ok(self.bernstein(q)),
            2 => Ok(self.alpha0 + self.mu.sum(|x| x * (-q * x).exp())),
            _ => {
                let s = self.mu.sum(|x| ((k - 1) as f64 * x.ln() - q * x).exp());
                Ok(if k.is_multiple_of(2) { s } else { -s })
            }
        }
    }

    /// `λ^{b,c} = (cα₀/b, cα_∞, μ^{b,c})` with atoms `(x, w) ↦ (x/b, c·w)`.
    pub fn scale(&self, b: f64, c: f64) -> Result<Self> {
        if !(b > 0.0 && c > 0.0 && b.is_finite() && c.is_finite()) {
            return invalid("scale factors must be finite and positive");
        }
        let mu = AtomicMeasure::from_unsorted(self.mu.atoms().map(|(x, w)| (x / b, c * w)).collect());
        Ok(Self { alpha0: c * self.alpha0 / b, alpha_inf: c * self.alpha_inf, mu })
    }

    /// `(κ_L(x), κ_R(x)) = (α₀ + ∫_{(0,x]} z dμ, α_∞ + μ((x,∞)))`.
    pub fn left_right(&self, x: f64) -> Result<(f64, f64)> {
        if !(x > 0.0) {
            return invalid(format!("x = {x} must be positive"));
        }
        let left = self.alpha0 + self.mu.atoms().filter(|a| a.0 <= x).map(|(z, w)| z * w).sum::<f64>();
        let right = self.alpha_inf + self.mu.mass_where(|z| z > x);
        Ok((left, right))
    }

    /// `Ψ′(∞)`: infinite iff `α₀ > 0`, otherwise `α_∞ + μ(0,∞)`.
    pub fn psi_prime_infinity(&self) -> f64 {
        if self.alpha0 > 0.0 {
            f64::INFINITY
        } else {
            self.alpha_inf + self.mu.total_mass()
        }
    }

    /// `Ψ′(0⁺) = α_∞`.
    pub fn psi_prime_zero(&self) -> f64 {
        self.alpha_inf
    }
}

/// `e^{−z} − 1 + z`, accurate for small `z`.
pub fn psi_kernel(z: f64) -> f64 {
    if z.abs() < 1e-2 {
        z * z * (0.5 - z * (1.0 / 6.0 - z * (1.0 / 24.0 - z * (1.0 / 120.0 - z * (1.0 / 720.0 - z / 5040.0)))))
    } else {
        (-z).exp_m1() + z
    }
}

/// `κ = α₀δ₀ + α_∞δ_∞ + (x∧1)μ`.
pub fn kappa_of(t: &LevyTriple) -> CompactifiedMeasure {
    let interior = AtomicMeasure::from_unsorted(t.mu.atoms().map(|(x, w)| (x, x.min(1.0) * w)).collect());
    CompactifiedMeasure { mass_at_zero: t.alpha0, mass_at_infinity: t.alpha_inf, interior }
}

/// Inverse of [`kappa_of`].
pub fn triple_of(k: &CompactifiedMeasure) -> LevyTriple {
    let mu = AtomicMeasure::from_unsorted(k.interior.atoms().map(|(x, m)| (x, m / x.min(1.0))).collect());
    LevyTriple { alpha0: k.mass_at_zero, alpha_inf: k.mass_at_infinity, mu }
}

/// Log-grid discretization of a density on `(0, ∞)`.
///
/// Cells are log-spaced on `[lo, hi]`; each becomes one atom at its geometric
/// midpoint `x` with weight `density(x)·x·Δ(ln x)`. The first moment of the
/// part below `lo` is folded into the first atom and the mass above `hi`
/// into the last one.
pub struct QuadratureRecipe {
    pub density: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub lo: f64,
    pub hi: f64,
    pub cells: usize,
    /// `∫_{(0, lo)} x dμ`.
    pub head_first_moment: f64,
    /// `μ((hi, ∞))`.
    pub tail_mass: f64,
}

impl QuadratureRecipe {
    /// `α`-stable density `x^{−α}/Γ(−α)`, `α ∈ (1, 2)`, on 2000 cells over `[10⁻⁸, 10⁸]`.
    pub fn stable(alpha: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha < 2.0) {
            return invalid(format!("stable index {alpha} must lie in (1, 2)"));
        }
        let c = 1.0 / statrs::function::gamma::gamma(-alpha);
        let (lo, hi) = (1e-8, 1e8);
        Ok(Self {
            density: Box::new(move |x: f64| c * x.powf(-alpha)),
            lo,
            hi,
            cells: 2000,
            head_first_moment: c * lo.powf(2.0 - alpha) / (2.0 - alpha),
            tail_mass: c * hi.powf(1.0 - alpha) / (alpha - 1.0),
        })
    }

    pub fn build(&self) -> Result<AtomicMeasure> {
        if !(self.lo > 0.0 && self.hi > self.lo && self.cells >= 1) {
            return invalid("quadrature needs 0 < lo < hi and at least one cell");
        }
        let du = (self.hi / self.lo).ln() / self.cells as f64;
        let mut atoms: Vec<(f64, f64)> = (0..self.cells)
            .map(|i| {
                let x = self.lo * ((i as f64 + 0.5) * du).exp();
                (x, (self.density)(x) * x * du)
            })
            .collect();
        atoms[0].1 += self.head_first_moment / atoms[0].0;
        atoms[self.cells - 1].1 += self.tail_mass;
        AtomicMeasure::new(atoms)
    }
}

/// Result of [`grey_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreyOutcome {
    pub converges: bool,
    /// `∫₁^∞ du/Ψ(u)`, infinite when divergent.
    pub value: f64,
}

/// Upper end of the numerically integrated part of the Grey integral.
pub const GREY_CUTOFF: f64 = 1e6;
/// Minimum excess growth exponent `uΨ′(u)/Ψ(u) − 1` at the cutoff for convergence.
pub const GREY_MIN_EXCESS: f64 = 0.1;

/// Grey's condition `∫₁^∞ du/Ψ(u) < ∞`.
///
/// The integral over `[1, U]`, `U = 10⁶`, is computed by adaptive Simpson in
/// `ln u`. Beyond `U` the mechanism is extended as a power `Ψ(U)(u/U)^p`
/// with local exponent `p = UΨ′(U)/Ψ(U)`; convexity with `Ψ(0) = 0` gives
/// `p ≥ 1`. The integral is declared divergent when `p < 1.1`, otherwise the
/// tail contributes `U/((p − 1)Ψ(U))`.
pub fn grey_check(t: &LevyTriple) -> Result<GreyOutcome> {
    let u = GREY_CUTOFF;
    let psi_u = t.psi(u);
    if psi_u <= 0.0 {
        return Err(Error::InvalidInput("mechanism vanishes on [1, ∞)".into()));
    }
    let p = u * t.bernstein(u) / psi_u;
    if p < 1.0 + GREY_MIN_EXCESS {
        return Ok(GreyOutcome { converges: false, value: f64::INFINITY });
    }
    let f = |s: f64| {
        let v = s.exp();
        v / t.psi(v)
    };
    let body = adaptive_simpson(&f, 0.0, u.ln(), 1e-10)?;
    Ok(GreyOutcome { converges: true, value: body + u / ((p - 1.0) * psi_u) })
}

/// Gap sequences of [`continuity_report`].
#[derive(Debug, Clone)]
pub struct ContinuityReport {
    /// Limit estimate shared by the four criteria.
    pub limit: LevyTriple,
    /// Sup-grid Bernstein transform gaps.
    pub bernstein: Vec<f64>,
    /// κ-distances.
    pub kappa: Vec<f64>,
    /// Sup-grid mechanism gaps.
    pub mechanism: Vec<f64>,
    /// Sup left/right distribution gaps over the continuity points.
    pub left_right: Vec<f64>,
    pub continuity_points: Vec<f64>,
}

impl ContinuityReport {
    /// Decrease flags in the order Bernstein, κ, mechanism, left/right.
    pub fn decreasing(&self) -> [bool; 4] {
        [
            is_decreasing(&self.bernstein),
            is_decreasing(&self.kappa),
            is_decreasing(&self.mechanism),
            is_decreasing(&self.left_right),
        ]
    }

    pub fn all_decreasing(&self) -> bool {
        self.decreasing().iter().all(|&d| d)
    }
}

/// Nonincreasing within relative `1e-12`, and either strictly lower at the
/// end or identically zero.
pub fn is_decreasing(seq: &[f64]) -> bool {
    let monotone = seq.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs().max(1e-300));
    let (first, last) = match (seq.first(), seq.last()) {
        (Some(f), Some(l)) => (*f, *l),
        _ => return true,
    };
    monotone && (last < first || first.abs() <= 1e-12)
}

/// Limit estimate for a sequence of triples.
///
/// Starts from the last triple. When every triple has the same number of
/// atoms, atoms are matched by rank; an atom whose location is strictly
/// decreasing along the whole sequence and ends below 1 is moved to `0`,
/// and one strictly increasing and ending above 1 is moved to `∞`, carrying
/// its κ-mass.
pub fn estimate_limit(ts: &[LevyTriple]) -> LevyTriple {
    let Some(last) = ts.last() else { return LevyTriple::default() };
    let n = last.mu.len();
    let mut alpha0 = last.alpha0;
    let mut alpha_inf = last.alpha_inf;
    let mut kept = Vec::new();
    let matched = ts.len() >= 2 && ts.iter().all(|t| t.mu.len() == n);
    for (r, (x, w)) in last.mu.atoms().enumerate() {
        if matched {
            let path: Vec<f64> = ts.iter().map(|t| t.mu.locations()[r]).collect();
            if x < 1.0 && path.windows(2).all(|p| p[1] < p[0]) {
                alpha0 += x * w;
                continue;
            }
            if x > 1.0 && path.windows(2).all(|p| p[1] > p[0]) {
                alpha_inf += w;
                continue;
            }
        }
        kept.push((x, w));
    }
    LevyTriple { alpha0, alpha_inf, mu: AtomicMeasure::from_unsorted(kept) }
}

/// Evaluates the four equivalent convergence criteria of a sequence against
/// the [`estimate_limit`] of the sequence.
pub fn continuity_report(ts: &[LevyTriple], grid: &[f64]) -> Result<ContinuityReport> {
    check_grid(grid)?;
    if ts.len() < 3 {
        return invalid("continuity report needs at least three triples");
    }
    let limit = estimate_limit(ts);
    let points = continuity_points(&limit);
    let kl = kappa_of(&limit);
    let lim_lr: Vec<(f64, f64)> = points.iter().map(|&x| limit.left_right(x).unwrap()).collect();
    let mut r = ContinuityReport {
        limit: limit.clone(),
        bernstein: Vec::new(),
        kappa: Vec::new(),
        mechanism: Vec::new(),
        left_right: Vec::new(),
        continuity_points: points.clone(),
    };
    for t in ts {
        r.bernstein.push(sup_gap(grid, |q| t.bernstein(q) - limit.bernstein(q)));
        r.kappa.push(kappa_distance(&kappa_of(t), &kl, grid)?);
        r.mechanism.push(sup_gap(grid, |q| t.psi(q) - limit.psi(q)));
        let lr = points
            .iter()
            .zip(&lim_lr)
            .map(|(&x, &(l, rr))| {
                let (a, b) = t.left_right(x).unwrap();
                (a - l).abs() + (b - rr).abs()
            })
            .fold(0.0, f64::max);
        r.left_right.push(lr);
    }
    Ok(r)
}

/// Continuity points of the limit's left/right distribution functions:
/// geometric midpoints between its consecutive atoms plus one point below and
/// one above them, or `x = 1` when the limit has no atoms.
pub fn continuity_points(limit: &LevyTriple) -> Vec<f64> {
    let locs = limit.mu.locations();
    if locs.is_empty() {
        return vec![1.0];
    }
    let mut pts = vec![0.5 * locs[0]];
    pts.extend(locs.windows(2).map(|w| (w[0] * w[1]).sqrt()));
    pts.push(2.0 * locs[locs.len() - 1]);
    pts
}

pub(crate) fn sup_gap(grid: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    grid.iter().map(|&q| f(q).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::default_q_grid;
    use proptest::prelude::*;

    fn atom(x: f64, w: f64) -> AtomicMeasure {
        AtomicMeasure::dirac(x, w).unwrap()
    }

    #[test]
    fn bernstein_examples() {
        assert_eq!(LevyTriple::default().bernstein_value(1.3).unwrap(), 0.0);
        assert_eq!(LevyTriple::feller().bernstein_value(2.5).unwrap(), 2.5);
        assert_eq!(LevyTriple::constants(0.0, 1.0).unwrap().bernstein_value(7.0).unwrap(), 1.0);
        let d1 = LevyTriple::pure_jump(atom(1.0, 1.0));
        assert!((d1.bernstein_value(1.0).unwrap() - 0.6321205588285577).abs() < 1e-15);
        assert!(d1.bernstein_value(0.0).is_err());
    }

    #[test]
    fn kappa_examples() {
        let k = kappa_of(&LevyTriple::feller());
        assert_eq!((k.mass_at_zero, k.mass_at_infinity, k.interior.len()), (1.0, 0.0, 0));
        let k = kappa_of(&LevyTriple::pure_jump(atom(2.0, 3.0)));
        assert_eq!(k.interior.atoms().collect::<Vec<_>>(), vec![(2.0, 3.0)]);
        let k = kappa_of(&LevyTriple::pure_jump(atom(0.5, 2.0)));
        assert_eq!(k.interior.atoms().collect::<Vec<_>>(), vec![(0.5, 1.0)]);
    }

    #[test]
    fn mechanism_examples() {
        assert_eq!(LevyTriple::feller().mechanism(2.0).unwrap(), 2.0);
        assert_eq!(LevyTriple::constants(0.0, 1.0).unwrap().mechanism(3.5).unwrap(), 3.5);
        assert_eq!(LevyTriple::pure_jump(atom(1.0, 1.0)).mechanism(0.0).unwrap(), 0.0);
    }

    /// Independent oracle: 10⁵-cell log-midpoint quadrature of
    /// `(e^{−qx} − 1 + qx)x^{−5/2}` over `[10⁻¹⁰, 10¹⁰]`, normalized by its value at `q = 1`.
    fn stable_oracle(q: f64) -> f64 {
        let n = 100_000;
        let (lo, hi) = (1e-10f64, 1e10f64);
        let du = (hi / lo).ln() / n as f64;
        let integral = |q: f64| -> f64 {
            (0..n)
                .map(|i| {
                    let x = lo * ((i as f64 + 0.5) * du).exp();
                    let z = q * x;
                    let k = if z < 1e-3 { z * z / 2.0 - z * z * z / 6.0 } else { (-z).exp() - 1.0 + z };
                    k * x.powf(-2.5) * x * du
                })
                .sum()
        };
        integral(q) / integral(1.0)
    }

    #[test]
    fn stable_mechanism_matches_power() {
        let t = LevyTriple::stable(1.5).unwrap();
        assert_eq!(t.mu().len(), 2000);
        for q in [0.5f64, 1.0, 2.0] {
            let psi = t.mechanism(q).unwrap();
            assert!((psi / q.powf(1.5) - 1.0).abs() < 1e-4, "q={q} psi={psi}");
            let oracle = stable_oracle(q);
            assert!((psi / oracle - 1.0).abs() < 1e-4, "q={q} psi={psi} oracle={oracle}");
        }
    }

    #[test]
    fn stable_quadrature_integrates_x_min_1() {
        let t = LevyTriple::stable(1.5).unwrap();
        let c = 1.0 / statrs::function::gamma::gamma(-1.5);
        // ∫ (x∧1) x^{-3/2} dx = 2 + 2
        let exact = c * 4.0;
        let got = t.mu().integrate(|x| x.min(1.0)).unwrap();
        assert!((got / exact - 1.0).abs() < 1e-4);
        assert!(LevyTriple::stable(2.5).is_err());
    }

    #[test]
    fn derivative_examples() {
        let f = LevyTriple::feller();
        assert_eq!(f.mechanism_derivative(0.7, 2).unwrap(), 1.0);
        assert_eq!(f.mechanism_derivative(3.0, 1).unwrap(), 3.0);
        assert!(f.mechanism_derivative(1.0, 0).is_err());
        let d1 = LevyTriple::pure_jump(atom(1.0, 1.0));
        assert!((d1.mechanism_derivative(1e-8, 2).unwrap() - 1.0).abs() < 1e-7);
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let t = LevyTriple::new(0.3, 0.2, AtomicMeasure::new(vec![(0.4, 1.5), (2.0, 0.7)]).unwrap()).unwrap();
        let q = 0.9;
        let h = 1e-3;
        for k in 1..=4u32 {
            let lower = |q: f64| if k == 1 { t.psi(q) } else { t.mechanism_derivative(q, k - 1).unwrap() };
            let fd = (lower(q + h) - lower(q - h)) / (2.0 * h);
            assert!((fd - t.mechanism_derivative(q, k).unwrap()).abs() < 1e-5, "k={k}");
        }
    }

    #[test]
    fn scale_examples() {
        let (b, c) = (2.0, 3.0);
        let s = LevyTriple::feller().scale(b, c).unwrap();
        assert_eq!((s.alpha0(), s.alpha_inf(), s.mu().len()), (1.5, 0.0, 0));
        let s = LevyTriple::constants(0.0, 1.0).unwrap().scale(b, c).unwrap();
        assert_eq!((s.alpha0(), s.alpha_inf()), (0.0, 3.0));
        let s = LevyTriple::pure_jump(atom(2.0, 1.0)).scale(2.0, 3.0).unwrap();
        assert_eq!(s.mu().atoms().collect::<Vec<_>>(), vec![(1.0, 3.0)]);
        assert!(LevyTriple::feller().scale(0.0, 1.0).is_err());
    }

    #[test]
    fn left_right_examples() {
        assert_eq!(LevyTriple::feller().left_right(0.3).unwrap(), (1.0, 0.0));
        assert_eq!(LevyTriple::constants(0.0, 2.0).unwrap().left_right(5.0).unwrap(), (0.0, 2.0));
        let t = LevyTriple::pure_jump(atom(1.0, 3.0));
        assert_eq!(t.left_right(0.5).unwrap(), (0.0, 3.0));
        assert_eq!(t.left_right(2.0).unwrap(), (3.0, 0.0));
    }

    #[test]
    fn grey_examples() {
        let g = grey_check(&LevyTriple::feller()).unwrap();
        assert!(g.converges && (g.value - 2.0).abs() < 1e-6, "{g:?}");
        let g = grey_check(&LevyTriple::constants(0.0, 1.0).unwrap()).unwrap();
        assert!(!g.converges && g.value.is_infinite());
        let g = grey_check(&LevyTriple::stable(1.5).unwrap()).unwrap();
        assert!(g.converges && (g.value - 2.0).abs() < 1e-3, "{g:?}");
        assert!(!grey_check(&LevyTriple::pure_jump(atom(1.0, 1.0))).unwrap().converges);
        assert!(grey_check(&LevyTriple::default()).is_err());
    }

    #[test]
    fn psi_prime_infinity_examples() {
        assert!(LevyTriple::feller().psi_prime_infinity().is_infinite());
        assert_eq!(LevyTriple::pure_jump(atom(1.0, 2.5)).psi_prime_infinity(), 2.5);
        assert_eq!(LevyTriple::constants(0.0, 0.5).unwrap().psi_prime_infinity(), 0.5);
    }

    #[test]
    fn continuity_constant_sequence() {
        let t = LevyTriple::new(0.2, 0.1, atom(0.7, 1.1)).unwrap();
        let r = continuity_report(&[t.clone(), t.clone(), t.clone()], &default_q_grid()).unwrap();
        assert_eq!(r.limit, t);
        for seq in [&r.bernstein, &r.kappa, &r.mechanism, &r.left_right] {
            assert!(seq.iter().all(|&g| g == 0.0));
        }
        assert!(r.all_decreasing());
    }

    #[test]
    fn continuity_atom_to_zero() {
        let ts: Vec<_> = (1..=6).map(|k| LevyTriple::pure_jump(atom(1.0 / k as f64, k as f64))).collect();
        let r = continuity_report(&ts, &default_q_grid()).unwrap();
        assert!((r.limit.alpha0() - 1.0).abs() < 1e-15 && r.limit.mu().is_empty());
        assert!(r.all_decreasing(), "{:?}", r.decreasing());
    }

    #[test]
    fn continuity_atom_to_infinity() {
        let ts: Vec<_> = (1..=6).map(|k| LevyTriple::pure_jump(atom(k as f64, 1.0))).collect();
        let r = continuity_report(&ts, &default_q_grid()).unwrap();
        assert_eq!(r.limit, LevyTriple::constants(0.0, 1.0).unwrap());
        assert!(r.all_decreasing(), "{:?}", r.decreasing());
        assert!(continuity_report(&ts, &[]).is_err());
        assert!(continuity_report(&ts[..2], &default_q_grid()).is_err());
    }

    fn arb_triple() -> impl Strategy<Value = LevyTriple> {
        (0.0f64..2.0, 0.0f64..2.0, prop::collection::vec((0.01f64..20.0, 0.0f64..3.0), 0..5))
            .prop_map(|(a0, ai, atoms)| LevyTriple::new(a0, ai, AtomicMeasure::new(atoms).unwrap()).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn scale_identities(t in arb_triple(), b in 0.1f64..10.0, c in 0.1f64..10.0, q in 0.01f64..20.0) {
            let s = t.scale(b, c).unwrap();
            let fb = s.bernstein_value(q).unwrap();
            prop_assert!((fb - c * t.bernstein_value(q / b).unwrap()).abs() <= 1e-12 * fb.max(1.0));
            let pb = s.mechanism(q).unwrap();
            prop_assert!((pb - c * b * t.mechanism(q / b).unwrap()).abs() <= 1e-10 * pb.max(1.0));
        }

        #[test]
        fn kappa_round_trip(t in arb_triple()) {
            let back = triple_of(&kappa_of(&t));
            prop_assert_eq!(back.alpha0(), t.alpha0());
            prop_assert_eq!(back.alpha_inf(), t.alpha_inf());
            prop_assert_eq!(back.mu().locations(), t.mu().locations());
            for (a, b) in back.mu().weights().iter().zip(t.mu().weights()) {
                prop_assert!((a - b).abs() <= 2.0 * f64::EPSILON * b);
            }
        }

        #[test]
        fn shape_properties(t in arb_triple()) {
            let g = default_q_grid();
            let f: Vec<f64> = g.iter().map(|&q| t.bernstein(q)).collect();
            let p: Vec<f64> = g.iter().map(|&q| t.psi(q)).collect();
            prop_assert_eq!(t.mechanism(0.0).unwrap(), 0.0);
            for i in 1..g.len() {
                prop_assert!(f[i] >= f[i - 1] - 1e-12 * f[i].abs());
                prop_assert!(p[i] >= p[i - 1] - 1e-12 * p[i].abs());
            }
            for i in 1..g.len() - 1 {
                // second divided differences on the nonuniform grid
                let d1 = (f[i] - f[i - 1]) / (g[i] - g[i - 1]);
                let d2 = (f[i + 1] - f[i]) / (g[i + 1] - g[i]);
                prop_assert!(d2 <= d1 + 1e-12 * d1.abs().max(1.0));
                let e1 = (p[i] - p[i - 1]) / (g[i] - g[i - 1]);
                let e2 = (p[i + 1] - p[i]) / (g[i + 1] - g[i]);
                prop_assert!(e2 >= e1 - 1e-12 * e2.abs().max(1.0));
            }
            for &q in &g {
                for k in 2..6u32 {
                    let d = t.mechanism_derivative(q, k).unwrap();
                    let ok = if k.is_multiple_of(2) { d >= 0.0 } else { d <= 0.0 };
                    prop_assert!(ok);
                }
            }
        }

        #[test]
        fn bernstein_limits(t in arb_triple()) {
            let lo = t.bernstein(1e-12);
            prop_assert!((lo - t.alpha_inf()).abs() <= 1e-9 * (1.0 + t.mu().total_mass() * 20.0));
            if t.alpha0() > 0.0 {
                let hi = 1e9;
                let rest = t.alpha_inf() + t.mu().total_mass();
                prop_assert!((t.bernstein(hi) / hi - t.alpha0()).abs() <= rest / hi + 1e-12);
            }
        }
    }
}
