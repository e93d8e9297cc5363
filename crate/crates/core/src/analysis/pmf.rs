//! Exact distributions of sums of independent Bernoulli trials.

use crate::error::{domain, Result};

/// Probability mass function on the integers `offset, offset + 1, ...`.
#[derive(Clone, Debug, PartialEq)]
pub struct Pmf {
    offset: i64,
    masses: Vec<f64>,
}

impl Pmf {
    pub fn new(offset: i64, masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() {
            return domain("pmf needs at least one support point");
        }
        if let Some(m) = masses.iter().find(|m| !(**m >= 0.0)) {
            return domain(format!("negative or NaN mass {m}"));
        }
        let total = neumaier_sum(masses.iter().copied());
        if (total - 1.0).abs() > 1e-12 {
            return domain(format!("masses sum to {total}, not 1"));
        }
        Ok(Pmf { offset, masses })
    }

    pub fn point(at: i64) -> Self {
        Pmf { offset: at, masses: vec![1.0] }
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn mass(&self, k: i64) -> f64 {
        usize::try_from(k - self.offset)
            .ok()
            .and_then(|i| self.masses.get(i).copied())
            .unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        neumaier_sum(self.masses.iter().copied())
    }

    pub fn max_mass(&self) -> f64 {
        self.masses.iter().copied().fold(0.0, f64::max)
    }

    /// Smallest and largest support point.
    pub fn support(&self) -> (i64, i64) {
        (self.offset, self.offset + self.masses.len() as i64 - 1)
    }

    /// Distribution of `self - other` for independent variables.
    pub fn difference(&self, other: &Pmf) -> Pmf {
        let (a_lo, _) = self.support();
        let (_, b_hi) = other.support();
        let len = self.masses.len() + other.masses.len() - 1;
        let nb = other.masses.len();
        let masses = (0..len)
            .map(|idx| {
                // idx indexes value a_lo - b_hi + idx; pairs (i, j) with i - (nb-1-j) = idx
                let lo = idx.saturating_sub(nb - 1);
                let hi = idx.min(self.masses.len() - 1);
                neumaier_sum((lo..=hi).map(|i| {
                    let j = nb - 1 - (idx - i);
                    self.masses[i] * other.masses[j]
                }))
            })
            .collect();
        Pmf { offset: a_lo - b_hi, masses }
    }
}

/// Compensated summation.
pub(crate) fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Exact pmf of the number of successes in independent trials, O(m^2).
pub fn poisson_binomial_pmf(probs: &[f64]) -> Result<Pmf> {
    if let Some(p) = probs.iter().find(|p| !(**p >= 0.0 && **p <= 1.0)) {
        return domain(format!("trial probability {p} outside [0, 1]"));
    }
    let mut masses = Vec::with_capacity(probs.len() + 1);
    masses.push(1.0);
    for &p in probs {
        masses.push(0.0);
        for k in (1..masses.len()).rev() {
            masses[k] = masses[k] * (1.0 - p) + masses[k - 1] * p;
        }
        masses[0] *= 1.0 - p;
    }
    Ok(Pmf { offset: 0, masses })
}

/// Exact probability that bit `i` sees a biased step, i.e. `D` in {0, -1}
/// where `D` is the difference of two independent copies of the number of
/// ones sampled at all other bits.
pub fn bstep_probability_exact(probs: &[f64], i: usize) -> Result<f64> {
    if probs.len() < 2 {
        return domain("b-step probability needs n >= 2");
    }
    if i >= probs.len() {
        return domain(format!("bit {i} out of range for n = {}", probs.len()));
    }
    let others: Vec<f64> = probs
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &p)| p)
        .collect();
    let s = poisson_binomial_pmf(&others)?;
    let d = s.difference(&s);
    Ok(d.mass(0) + d.mass(-1))
}

/// Largest point mass of a Poisson-binomial sum with trials in [1/6, 5/6],
/// and that mass scaled by sqrt(m).
pub fn mode_bound_check(probs: &[f64]) -> Result<(f64, f64)> {
    if probs.is_empty() {
        return domain("mode bound needs at least one trial");
    }
    let (lo, hi) = (1.0 / 6.0, 5.0 / 6.0);
    if let Some(p) = probs.iter().find(|p| !(**p >= lo - 1e-15 && **p <= hi + 1e-15)) {
        return domain(format!("trial probability {p} outside [1/6, 5/6]"));
    }
    let max_mass = poisson_binomial_pmf(probs)?.max_mass();
    Ok((max_mass, max_mass * (probs.len() as f64).sqrt()))
}

/// Which neighbour of a non-integral mean `np` a mode bound refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeSide {
    Ceil,
    Floor,
}

/// Upper bound on `P(X = np)` (integral mean) or on `P(X = ceil(np))` /
/// `P(X = floor(np))` for `X ~ Bin(n, p)`.
pub fn binomial_mode_bound(n: u64, p: f64, side: ModeSide) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("binomial mode bound needs 0 < p < 1, got {p}"));
    }
    if n == 0 {
        return domain("binomial mode bound needs n >= 1");
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let mean = n as f64 * p;
    if (mean - mean.round()).abs() < 1e-9 {
        return Ok(1.0 / (two_pi * mean * (1.0 - p)).sqrt());
    }
    let scale = match side {
        ModeSide::Ceil => mean.ceil() / mean,
        ModeSide::Floor => mean.floor() / mean,
    };
    let shifted = p * scale;
    if shifted >= 1.0 || shifted <= 0.0 {
        return domain(format!(
            "p(1 +/- a) = {shifted} leaves (0, 1) for n = {n}, p = {p}"
        ));
    }
    Ok(std::f64::consts::E / (two_pi * mean * scale * (1.0 - shifted)).sqrt())
}
