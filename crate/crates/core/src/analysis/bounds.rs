//! Closed-form bounds and potentials used in the runtime analysis.

use super::quad::integrate;
use crate::algorithm::MarginalVector;
use crate::error::{domain, Result};

/// Lower bound on the expected one-step change of marginal `i` under cGA:
/// `(2/11) * p_i(1 - p_i)/K * (sum_{j != i} p_j(1 - p_j))^(-1/2)`.
///
/// Valid while `1/n + 1/K <= p_i <= 1 - 1/n - 1/K`.
pub fn drift_lower_bound(model: &MarginalVector, i: usize, k: f64) -> Result<f64> {
    let n = model.n();
    if i >= n {
        return domain(format!("bit {i} out of range for n = {n}"));
    }
    if !(k > 0.0) {
        return domain(format!("K = {k} must be positive"));
    }
    let p = model.get(i);
    let lo = 1.0 / n as f64 + 1.0 / k;
    let hi = 1.0 - 1.0 / n as f64 - 1.0 / k;
    let eps = 1e-12;
    if p < lo - eps {
        return domain(format!("p_{i} = {p} violates the lower bound 1/n + 1/K = {lo}"));
    }
    if p > hi + eps {
        return domain(format!("p_{i} = {p} violates the upper bound 1 - 1/n - 1/K = {hi}"));
    }
    let variance: f64 = model
        .probs()
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &q)| q * (1.0 - q))
        .sum();
    if !(variance > 0.0) {
        return domain("sampling variance of the other bits is zero");
    }
    Ok(2.0 / 11.0 * p * (1.0 - p) / k / variance.sqrt())
}

/// Distance of the model from all marginals at the upper border.
pub fn phi_potential(model: &MarginalVector) -> f64 {
    let hi = model.upper_border();
    model.probs().iter().map(|p| hi - p).sum()
}

/// Variance-flattening potential on the cGA grid `{0, ..., K}` (K even):
/// `g(K/2) = 0`, `g(i) - g(i+1) = sqrt(2K/(i+1))` below the centre and
/// `g(K - i) = -g(i)` above it.
pub fn potential_g_cga(i: u64, k: u64) -> Result<f64> {
    if k == 0 || !k.is_multiple_of(2) {
        return domain(format!("potential g needs an even K, got {k}"));
    }
    if i > k {
        return domain(format!("state {i} outside 0..={k}"));
    }
    let half = k / 2;
    let (j, sign) = if i <= half { (i, 1.0) } else { (k - i, -1.0) };
    let two_k = 2.0 * k as f64;
    let sum: f64 = (j..half).map(|l| (two_k / (l + 1) as f64).sqrt()).sum();
    Ok(sign * sum)
}

/// Continuous potential `integral_x^{1/2} 1/(rho sqrt z) dz = (2/rho)(sqrt(1/2) - sqrt x)`.
pub fn potential_g_mmas(x: f64, rho: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return domain(format!("potential needs 0 < x < 1, got {x}"));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return domain(format!("potential needs 0 < rho < 1, got {rho}"));
    }
    Ok(2.0 / rho * (0.5f64.sqrt() - x.sqrt()))
}

/// A positive, monotonically increasing drift bound `h` on `[a, m]`.
pub struct DriftFunction<'a> {
    h: Box<dyn Fn(f64) -> f64 + 'a>,
}

impl<'a> DriftFunction<'a> {
    pub fn new(h: impl Fn(f64) -> f64 + 'a) -> Self {
        DriftFunction { h: Box::new(h) }
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.h)(x)
    }
}

pub const DRIFT_REL_TOL: f64 = 1e-6;

/// Expected-hitting-time bound `a/h(a) + integral_a^m 1/h(x) dx`.
pub fn variable_drift_bound(h: &DriftFunction<'_>, a: f64, m: f64) -> Result<f64> {
    if !(a > 0.0 && a <= m) {
        return domain(format!("variable drift needs 0 < a <= m, got a = {a}, m = {m}"));
    }
    let ha = h.eval(a);
    if !(ha > 0.0) {
        return domain(format!("h({a}) = {ha} is not positive"));
    }
    // spot-check positivity and monotonicity on a grid
    let grid = 64;
    let mut prev = ha;
    for s in 1..=grid {
        let x = a + (m - a) * s as f64 / grid as f64;
        let v = h.eval(x);
        if !(v > 0.0) {
            return domain(format!("h({x}) = {v} is not positive"));
        }
        if v < prev * (1.0 - 1e-12) {
            return domain(format!("h decreases near x = {x}"));
        }
        prev = v;
    }
    let bad = std::cell::Cell::new(None);
    let integral = integrate(
        |x| {
            let v = h.eval(x);
            if !(v > 0.0) {
                bad.set(Some((x, v)));
                return 0.0;
            }
            1.0 / v
        },
        a,
        m,
        DRIFT_REL_TOL * 1e-2,
        0.0,
    );
    if let Some((x, v)) = bad.get() {
        return domain(format!("h({x}) = {v} is not positive"));
    }
    Ok(a / ha + integral)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal CDF by quadrature of the density.
pub fn normal_cdf(x: f64) -> f64 {
    if x.abs() > 38.0 {
        return if x > 0.0 { 1.0 } else { 0.0 };
    }
    let half = integrate(normal_pdf, 0.0, x.abs(), 1e-12, 1e-16);
    if x >= 0.0 {
        0.5 + half
    } else {
        0.5 - half
    }
}

/// Mills-ratio sandwich: bounds on `1 - Phi(x)` for `x > 0`, on `Phi(x)` for `x < 0`.
pub fn normal_cdf_bounds(x: f64) -> Result<(f64, f64)> {
    if x == 0.0 || !x.is_finite() {
        return domain(format!("normal tail bounds need a finite x != 0, got {x}"));
    }
    let a = x.abs();
    let dens = normal_pdf(a);
    Ok(((1.0 / a - 1.0 / (a * a * a)) * dens, dens / a))
}
