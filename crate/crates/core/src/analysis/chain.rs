//! Exact expected hitting times of small absorbing Markov chains.
//!
//! Solves the first-step equations `h(s) = 1 + sum_t P(s, t) h(t)` on the
//! transient states with banded Gaussian elimination. The chains built
//! here only jump between nearby states, so the band stays narrow.

use crate::error::{domain, Error, Result};

pub const MAX_STATES: usize = 10_000;

/// A finite chain on states `0..len` with an absorbing target set.
#[derive(Clone, Debug)]
pub struct Chain {
    /// Sparse transition rows; missing mass is a self-loop.
    rows: Vec<Vec<(usize, f64)>>,
    target: Vec<bool>,
}

impl Chain {
    pub fn new(len: usize) -> Self {
        Chain { rows: vec![Vec::new(); len], target: vec![false; len] }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Adds probability mass `p` to the move `from -> to`.
    pub fn add(&mut self, from: usize, to: usize, p: f64) {
        if p == 0.0 || from == to {
            return;
        }
        match self.rows[from].iter_mut().find(|(t, _)| *t == to) {
            Some((_, q)) => *q += p,
            None => self.rows[from].push((to, p)),
        }
    }

    pub fn set_target(&mut self, state: usize) {
        self.target[state] = true;
    }

    pub fn is_target(&self, state: usize) -> bool {
        self.target[state]
    }

    /// Expected number of steps until the target set is entered, for every start state.
    pub fn expected_hitting_times(&self) -> Result<Vec<f64>> {
        let len = self.len();
        if len > MAX_STATES {
            return domain(format!("{len} states exceed the solver limit of {MAX_STATES}"));
        }
        if !self.target.iter().any(|&t| t) {
            return Err(Error::Singular("no target state".into()));
        }
        for (s, row) in self.rows.iter().enumerate() {
            let out: f64 = row.iter().map(|&(_, p)| p).sum();
            if row.iter().any(|&(t, p)| t >= len || !(p >= 0.0)) || out > 1.0 + 1e-12 {
                return domain(format!("row {s} is not a sub-stochastic distribution"));
            }
        }

        // dense index over transient states, in state order
        let transient: Vec<usize> = (0..len).filter(|&s| !self.target[s]).collect();
        let mut index = vec![usize::MAX; len];
        for (k, &s) in transient.iter().enumerate() {
            index[s] = k;
        }
        let size = transient.len();
        if size == 0 {
            return Ok(vec![0.0; len]);
        }
        let idx = &index;
        let band = transient
            .iter()
            .flat_map(|&s| self.rows[s].iter().filter(|(t, _)| !self.target[*t]).map(move |&(t, _)| (idx[s], idx[t])))
            .map(|(a, b)| a.abs_diff(b))
            .max()
            .unwrap_or(0);

        // row k stores columns k - band ..= k + band at offset col + band - k
        let width = 2 * band + 1;
        let mut a = vec![0.0f64; size * width];
        let mut rhs = vec![1.0f64; size];
        for (k, &s) in transient.iter().enumerate() {
            let out: f64 = self.rows[s].iter().map(|&(_, p)| p).sum();
            // I - P on the transient block; self-loop mass cancels on the diagonal
            a[k * width + band] = out;
            for &(t, p) in &self.rows[s] {
                if !self.target[t] {
                    let c = index[t];
                    a[k * width + c + band - k] -= p;
                }
            }
        }

        for k in 0..size {
            let pivot = a[k * width + band];
            if pivot.abs() < 1e-300 || !pivot.is_finite() {
                return Err(Error::Singular(format!(
                    "state {} cannot reach the target set",
                    transient[k]
                )));
            }
            let last = (k + band).min(size - 1);
            for r in k + 1..=last {
                let factor = a[r * width + k + band - r] / pivot;
                if factor == 0.0 {
                    continue;
                }
                for c in k..=last {
                    a[r * width + c + band - r] -= factor * a[k * width + c + band - k];
                }
                rhs[r] -= factor * rhs[k];
            }
        }
        let mut h = vec![0.0f64; size];
        for k in (0..size).rev() {
            let last = (k + band).min(size - 1);
            let mut acc = rhs[k];
            for c in k + 1..=last {
                acc -= a[k * width + c + band - k] * h[c];
            }
            h[k] = acc / a[k * width + band];
            if !h[k].is_finite() || h[k] < 0.0 {
                return Err(Error::Singular(format!(
                    "state {} has no finite hitting time",
                    transient[k]
                )));
            }
        }
        let mut out = vec![0.0; len];
        for (k, &s) in transient.iter().enumerate() {
            out[s] = h[k];
        }
        Ok(out)
    }
}

/// Single-bit random-walk dynamics on a grid `{0, 1/K, ..., 1}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Dynamics {
    /// Fair walk without self-loops.
    FairWalk,
    /// cGA rw-step: up and down by one state with probability p(1 - p) each.
    CgaRw,
    /// MMAS rw-step: to p + rho(1 - p) with probability p, else to (1 - rho)p,
    /// both rounded to the nearest grid point.
    MmasRw { rho: f64 },
}

/// Grid resolution that resolves the smallest MMAS move above `border`
/// (a step of `rho * border`) to within half a grid cell.
pub fn mmas_grid_size(rho: f64, border: f64) -> Result<u64> {
    if !(rho > 0.0 && rho < 1.0 && border > 0.0 && border < 0.5) {
        return domain(format!("grid needs 0 < rho < 1 and 0 < border < 1/2, got {rho}, {border}"));
    }
    let k = (1.0 / (rho * border)).ceil();
    if k > (MAX_STATES - 1) as f64 {
        return domain(format!("MMAS grid of {k} cells exceeds the solver limit"));
    }
    Ok(k as u64)
}

pub fn build_chain(k: u64, borders: (u64, u64), dynamics: Dynamics) -> Result<Chain> {
    let (lo, hi) = borders;
    if k == 0 || lo >= hi || hi > k {
        return domain(format!("borders ({lo}, {hi}) invalid for grid 0..={k}"));
    }
    let len = k as usize + 1;
    if len > MAX_STATES {
        return domain(format!("{len} states exceed the solver limit of {MAX_STATES}"));
    }
    let mut chain = Chain::new(len);
    let kf = k as f64;
    for i in 0..=k as usize {
        if i as u64 <= lo || i as u64 >= hi {
            chain.set_target(i);
            continue;
        }
        let p = i as f64 / kf;
        match dynamics {
            Dynamics::FairWalk => {
                chain.add(i, i - 1, 0.5);
                chain.add(i, i + 1, 0.5);
            }
            Dynamics::CgaRw => {
                let q = p * (1.0 - p);
                chain.add(i, i - 1, q);
                chain.add(i, i + 1, q);
            }
            Dynamics::MmasRw { rho } => {
                if !(rho > 0.0 && rho < 1.0) {
                    return domain(format!("MMAS requires 0 < rho < 1, got {rho}"));
                }
                let up = ((p + rho * (1.0 - p)) * kf).round() as usize;
                let down = ((1.0 - rho) * p * kf).round() as usize;
                chain.add(i, up.min(len - 1), p);
                chain.add(i, down, 1.0 - p);
            }
        }
    }
    Ok(chain)
}

/// Expected number of rw-steps for a single marginal, started at grid state
/// `start`, to reach a state `<= lo` or `>= hi`.
pub fn chain_hitting_time_oracle(k: u64, borders: (u64, u64), dynamics: Dynamics, start: u64) -> Result<f64> {
    if start > k {
        return domain(format!("start {start} outside 0..={k}"));
    }
    let chain = build_chain(k, borders, dynamics)?;
    Ok(chain.expected_hitting_times()?[start as usize])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamblers_ruin() {
        for k in [10u64, 20, 50] {
            let v = chain_hitting_time_oracle(k, (0, k), Dynamics::FairWalk, k / 2).unwrap();
            let want = (k as f64 / 2.0).powi(2);
            assert!((v - want).abs() < 1e-8 * want, "{v} vs {want}");
        }
    }

    #[test]
    fn start_at_border_is_zero() {
        assert_eq!(chain_hitting_time_oracle(20, (0, 20), Dynamics::CgaRw, 0).unwrap(), 0.0);
        assert_eq!(chain_hitting_time_oracle(20, (3, 17), Dynamics::CgaRw, 17).unwrap(), 0.0);
    }

    #[test]
    fn self_loops_keep_quadratic_order() {
        let v: Vec<f64> = [20u64, 40, 80]
            .iter()
            .map(|&k| chain_hitting_time_oracle(k, (0, k), Dynamics::CgaRw, k / 2).unwrap() / (k * k) as f64)
            .collect();
        let (min, max) = v.iter().fold((f64::MAX, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
        assert!(max / min <= 8.0);
    }

    #[test]
    fn unreachable_target_is_singular() {
        let mut c = Chain::new(3);
        c.set_target(0);
        c.add(1, 2, 1.0);
        c.add(2, 1, 1.0);
        assert!(matches!(c.expected_hitting_times(), Err(Error::Singular(_))));
        assert!(matches!(Chain::new(2).expected_hitting_times(), Err(Error::Singular(_))));
    }

    #[test]
    fn mmas_chain_is_finite() {
        let rho = 0.1;
        let k = mmas_grid_size(rho, rho).unwrap();
        let lo = (rho * k as f64).round() as u64;
        let v = chain_hitting_time_oracle(k, (lo, k - lo), Dynamics::MmasRw { rho }, k / 2).unwrap();
        assert!(v.is_finite() && v > 1.0);
    }
}
