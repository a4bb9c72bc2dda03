//! Scalar quadrature and ODE integration.

use crate::error::{Error, Result};

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let v = simpson_step(f, a, b, fa, fm, fb, whole, tol, 48);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NoConvergence("quadrature produced a non-finite value".into()))
    }
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Controls for [`solve_autonomous`].
#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    /// Accepted local error relative to the solution magnitude.
    pub rel_tol: f64,
    /// Hard cap on accepted plus rejected steps.
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-12, max_steps: 2_000_000 }
    }
}

fn rk4(g: &impl Fn(f64) -> f64, y: f64, h: f64, k1: f64) -> f64 {
    let k2 = g(y + 0.5 * h * k1);
    let k3 = g(y + 0.5 * h * k2);
    let k4 = g(y + h * k3);
    y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Integrates `y' = g(y)`, `y(0) = y0` and returns `y` at each of the
/// nondecreasing nonnegative `times`.
///
/// Classical RK4 with step doubling: each step is taken once with `h` and
/// twice with `h/2`; the difference is the Richardson error estimate, the
/// extrapolated value is kept, and `h` is halved until the estimate is below
/// `rel_tol·|y|`.
pub fn solve_autonomous(g: impl Fn(f64) -> f64, y0: f64, times: &[f64], opts: OdeOptions) -> Result<Vec<f64>> {
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput("times must be finite, nonnegative and nondecreasing".into()));
    }
    let mut out = Vec::with_capacity(times.len());
    let (mut t, mut y) = (0.0f64, y0);
    let mut h = f64::NAN;
    let mut steps = 0usize;
    for &target in times {
        while t < target {
            let k1 = g(y);
            if k1 == 0.0 {
                t = target;
                break;
            }
            if !h.is_finite() {
                h = 1e-3 * (y.abs() / k1.abs()).max(f64::MIN_POSITIVE);
            }
            let span = target - t;
            let last = h >= span;
            let hh = if last { span } else { h };
            let full = rk4(&g, y, hh, k1);
            let mid = rk4(&g, y, 0.5 * hh, k1);
            let half = rk4(&g, mid, 0.5 * hh, g(mid));
            let err = (half - full).abs() / 15.0;
            let scale = half.abs().max(f64::MIN_POSITIVE);
            steps += 1;
            if steps > opts.max_steps {
                return Err(Error::NoConvergence(format!("step budget exhausted at t = {t}")));
            }
            if err.is_finite() && err <= opts.rel_tol * scale {
                y = half + (half - full) / 15.0;
                t = if last { target } else { t + hh };
                let grow =
                    if err == 0.0 { 4.0 } else { (0.9 * (opts.rel_tol * scale / err).powf(0.2)).clamp(1.0, 4.0) };
                h = if last { h.max(hh * grow) } else { hh * grow };
            } else {
                let shrink =
                    if err.is_finite() { (0.9 * (opts.rel_tol * scale / err).powf(0.2)).clamp(0.1, 0.5) } else { 0.25 };
                h = hh * shrink;
                if t + h == t {
                    return Err(Error::NoConvergence(format!("step size underflow at t = {t}")));
                }
            }
        }
        out.push(y);
    }
    Ok(out)
}
