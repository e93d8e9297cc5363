//! Recovery cost when some bits start at the lower border.

use serde::Serialize;

use super::stats::{mean, median};
use super::sweep::{default_budget, run_indexed};
use crate::algorithm::{run, Init, OneMax, RunConfig, UpdateRule};
use crate::error::{config, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct CouponConfig {
    pub n: usize,
    /// Bits initialised at 1/n; the rest start at 1 - 1/n.
    pub m: usize,
    pub rule: UpdateRule,
    pub trials: usize,
    pub budget: Option<u64>,
    pub base_seed: u64,
    pub jobs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CouponSummary {
    pub n: usize,
    pub m: usize,
    pub trials: usize,
    /// (n/2 - 1)(eps/2) ln n with m = n^eps; absent for m <= 1.
    pub threshold: Option<f64>,
    /// Fraction of trials whose remaining time reached the threshold.
    pub at_least_threshold: Option<f64>,
    pub mean: f64,
    pub median: f64,
    pub censored: usize,
    /// Iterations until the optimum, budget for censored trials.
    pub times: Vec<u64>,
}

/// Threshold time for `m` bits at the lower border out of `n`.
pub fn coupon_threshold(n: usize, m: usize) -> Option<f64> {
    if m < 2 {
        return None;
    }
    let ln_n = (n as f64).ln();
    let eps = (m as f64).ln() / ln_n;
    Some((n as f64 / 2.0 - 1.0) * (eps / 2.0) * ln_n)
}

pub fn coupon_collector_experiment(cfg: &CouponConfig) -> Result<CouponSummary> {
    if cfg.m >= cfg.n {
        return config(format!("m = {} leaves no bit off the border for n = {}", cfg.m, cfg.n));
    }
    if cfg.trials == 0 {
        return config("trials must be at least 1");
    }
    if cfg.budget == Some(0) {
        return config("budget must be at least 1");
    }
    let n = cfg.n;
    let lo = 1.0 / n as f64;
    let probs: Vec<f64> = (0..n).map(|i| if i < cfg.m { lo } else { 1.0 - lo }).collect();
    let mut rc = RunConfig::new(n, cfg.rule, cfg.budget.unwrap_or_else(|| default_budget(n)));
    rc.init = Init::Probs(probs);
    rc.initial_model()?;

    let records = run_indexed(cfg.jobs, 0..cfg.trials, |t| run(&rc, cfg.base_seed.wrapping_add(t as u64), &OneMax))?;
    let times: Vec<u64> = records.iter().map(|r| r.iterations.unwrap_or(r.iterations_run)).collect();
    let tf: Vec<f64> = times.iter().map(|&t| t as f64).collect();
    let threshold = coupon_threshold(n, cfg.m);
    Ok(CouponSummary {
        n,
        m: cfg.m,
        trials: cfg.trials,
        threshold,
        at_least_threshold: threshold
            .map(|th| tf.iter().filter(|&&t| t >= th).count() as f64 / tf.len() as f64),
        mean: mean(&tf),
        median: median(&tf),
        censored: records.iter().filter(|r| r.censored()).count(),
        times,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_value() {
        let t = coupon_threshold(100, 10).unwrap();
        assert!((t - 49.0 * 0.25 * 100f64.ln()).abs() < 1e-9);
        assert!(coupon_threshold(100, 0).is_none());
    }

    #[test]
    fn rejects_all_bits_at_border() {
        let cfg = CouponConfig {
            n: 10,
            m: 10,
            rule: UpdateRule::cga(10.0).unwrap(),
            trials: 1,
            budget: None,
            base_seed: 0,
            jobs: 1,
        };
        assert!(coupon_collector_experiment(&cfg).is_err());
    }

    #[test]
    fn no_border_bits_has_no_claim() {
        let cfg = CouponConfig {
            n: 10,
            m: 0,
            rule: UpdateRule::cga(10.0).unwrap(),
            trials: 5,
            budget: None,
            base_seed: 3,
            jobs: 1,
        };
        let s = coupon_collector_experiment(&cfg).unwrap();
        assert!(s.threshold.is_none() && s.at_least_threshold.is_none());
        assert_eq!(s.times.len(), 5);
    }
}
