//! Single-bit hitting times and the normality of the rescaled random walk.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::persist::{Table, HITTING_COLUMNS, HITTING_SCHEMA};
use super::stats::{ks_distance, mean, proportion_se, std_dev};
use super::sweep::run_indexed;
use crate::algorithm::{Algorithm, AlgorithmState, MarginalVector, OneMax, UpdateRule};
use crate::analysis::{normal_cdf, potential_g_cga};
use crate::error::{config, Result};
use crate::Fitness;

const EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum HittingMode {
    /// One marginal under pure rw-step dynamics.
    RwOnly,
    /// A designated bit inside a full OneMax run.
    FullAlgo,
}

impl HittingMode {
    pub fn name(self) -> &'static str {
        match self {
            HittingMode::RwOnly => "RW_ONLY",
            HittingMode::FullAlgo => "FULL_ALGO",
        }
    }
}

impl std::str::FromStr for HittingMode {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "rw_only" | "rw" => Ok(HittingMode::RwOnly),
            "full_algo" | "full" => Ok(HittingMode::FullAlgo),
            _ => config(format!("unknown hitting mode `{s}` (expected rw-only or full-algo)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Outcome {
    ReachedNeg,
    ReachedPos,
    Border,
    Censored,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::ReachedNeg => "REACHED_NEG",
            Outcome::ReachedPos => "REACHED_POS",
            Outcome::Border => "BORDER",
            Outcome::Censored => "CENSORED",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HittingTimeSample {
    pub bit: usize,
    pub trial: usize,
    #[serde(rename = "T")]
    pub t: u64,
    pub outcome: Outcome,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HittingConfig {
    pub mode: HittingMode,
    pub algorithm: Algorithm,
    /// K for cGA, rho for MMAS.
    pub param: f64,
    /// Signed target displacement of the marginal.
    pub s: f64,
    pub alpha: f64,
    pub trials: usize,
    /// Step cap; `None` uses a multiple of the window.
    pub budget: Option<u64>,
    /// Initial marginal.
    pub start: f64,
    /// The walk stops once min(p, 1 - p) <= border. `None`: 0 for cGA in
    /// RW_ONLY mode, rho for MMAS in RW_ONLY mode, 1/n in FULL_ALGO mode.
    pub border: Option<f64>,
    /// Problem size for FULL_ALGO.
    pub n: usize,
    pub base_seed: u64,
    pub jobs: usize,
}

impl HittingConfig {
    pub fn new(mode: HittingMode, algorithm: Algorithm, param: f64, s: f64, alpha: f64, trials: usize) -> Self {
        HittingConfig {
            mode,
            algorithm,
            param,
            s,
            alpha,
            trials,
            budget: None,
            start: 0.5,
            border: None,
            n: 100,
            base_seed: 0,
            jobs: 1,
        }
    }

    pub fn rule(&self) -> Result<UpdateRule> {
        match self.algorithm {
            Algorithm::Cga => UpdateRule::cga(self.param),
            Algorithm::Mmas => UpdateRule::mmas(self.param),
        }
    }

    /// The window alpha (sK)^2 for cGA, alpha (s/rho)^2 for MMAS.
    pub fn window(&self) -> f64 {
        let scale = match self.algorithm {
            Algorithm::Cga => self.param,
            Algorithm::Mmas => 1.0 / self.param,
        };
        self.alpha * (self.s * scale).powi(2)
    }

    pub fn border_value(&self) -> f64 {
        self.border.unwrap_or(match (self.mode, self.algorithm) {
            (HittingMode::RwOnly, Algorithm::Cga) => 0.0,
            (HittingMode::RwOnly, Algorithm::Mmas) => self.param,
            (HittingMode::FullAlgo, _) => 1.0 / self.n as f64,
        })
    }

    pub fn budget_value(&self) -> u64 {
        self.budget.unwrap_or_else(|| ((100.0 * self.window()).ceil() as u64).max(10_000))
    }

    /// The lower bound on P(T >= window or border) for this algorithm.
    pub fn second_statement_bound(&self) -> f64 {
        match self.algorithm {
            Algorithm::Cga => 1.0 - (-1.0 / (4.0 * self.alpha)).exp(),
            Algorithm::Mmas => 1.0 - (-1.0 / (16.0 * self.alpha)).exp(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.rule()?;
        if self.trials == 0 {
            return config("trials must be at least 1");
        }
        if self.s == 0.0 || !self.s.is_finite() {
            return config(format!("s must be finite and nonzero, got {}", self.s));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return config(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(0.0..=1.0).contains(&self.start) {
            return config(format!("start {} outside [0, 1]", self.start));
        }
        let b = self.border_value();
        if !(0.0..0.5).contains(&b) {
            return config(format!("border {b} outside [0, 1/2)"));
        }
        if self.budget == Some(0) {
            return config("budget must be at least 1");
        }
        if self.jobs == 0 {
            return config("jobs must be at least 1");
        }
        if self.mode == HittingMode::FullAlgo {
            MarginalVector::uniform(self.n)?;
        }
        Ok(())
    }
}

/// Checks the stopping conditions at marginal `p`.
fn classify(p: f64, start: f64, s: f64, border: f64) -> Option<Outcome> {
    if s.signum() * (p - start) >= s.abs() - EPS {
        return Some(if s > 0.0 { Outcome::ReachedPos } else { Outcome::ReachedNeg });
    }
    if p.min(1.0 - p) <= border + EPS {
        return Some(Outcome::Border);
    }
    None
}

/// One RW_ONLY trajectory. cGA moves on the grid {0, 1/K, ..., 1}.
fn rw_only_trial(cfg: &HittingConfig, seed: u64) -> (u64, Outcome) {
    let (s, border, budget) = (cfg.s, cfg.border_value(), cfg.budget_value());
    if let Some(o) = classify(cfg.start, cfg.start, s, border) {
        return (0, o);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match cfg.algorithm {
        Algorithm::Cga => {
            // integer offset keeps grid positions exact
            let k = cfg.param;
            let mut j = 0i64;
            for t in 1..=budget {
                let p = cfg.start + j as f64 / k;
                let q = p * (1.0 - p);
                let u: f64 = rng.gen();
                if u < q {
                    j += 1;
                } else if u < 2.0 * q {
                    j -= 1;
                }
                let p = cfg.start + j as f64 / k;
                if let Some(o) = classify(p, cfg.start, s, border) {
                    return (t, o);
                }
            }
        }
        Algorithm::Mmas => {
            let rho = cfg.param;
            let mut p = cfg.start;
            for t in 1..=budget {
                p = if rng.gen::<f64>() < p { p + rho * (1.0 - p) } else { (1.0 - rho) * p };
                if let Some(o) = classify(p, cfg.start, s, border) {
                    return (t, o);
                }
            }
        }
    }
    (budget, Outcome::Censored)
}

/// Bit 0 inside a OneMax run from the uniform model (the start marginal is
/// written into bit 0). T counts iterations; finding the optimum censors.
fn full_algo_trial(cfg: &HittingConfig, seed: u64) -> Result<(u64, Outcome)> {
    let (s, border, budget) = (cfg.s, cfg.border_value(), cfg.budget_value());
    let n = cfg.n;
    let mut probs = vec![0.5; n];
    probs[0] = cfg.start;
    let model = MarginalVector::from_probs(probs)?;
    let start = model.get(0);
    if let Some(o) = classify(start, start, s, border) {
        return Ok((0, o));
    }
    let mut state = AlgorithmState::new(model, cfg.rule()?, seed);
    let f = OneMax;
    let optimum = f.optimum(n);
    for t in 1..=budget {
        let (x, y) = state.sample_pair();
        if f.evaluate(&x) == optimum || f.evaluate(&y) == optimum {
            return Ok((t, Outcome::Censored));
        }
        state.apply(&x, &y, &f);
        if let Some(o) = classify(state.model().get(0), start, s, border) {
            return Ok((t, o));
        }
    }
    Ok((budget, Outcome::Censored))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HittingSummary {
    pub trials: usize,
    pub window: f64,
    /// Fraction with T >= window, or a border reached within the window.
    pub not_bridged: f64,
    pub not_bridged_se: f64,
    /// Fraction with T >= window, regardless of borders.
    pub survived_window: f64,
    pub bound: f64,
    /// Fraction with T <= window and a displacement outcome.
    pub bridged: f64,
    /// The first-statement lower bound without its o(1) factor. Informational only.
    pub first_statement: f64,
    pub mean_t: f64,
    pub sd_t: f64,
    pub censored: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HittingResult {
    pub samples: Vec<HittingTimeSample>,
    pub summary: HittingSummary,
}

/// Cga: (1/2)(1/c - 1/c^3) phi(0) e^{-169/(2|s|a)} with c = 13 sqrt(1/(|s|a)).
pub fn cga_bridging_lower_bound(s: f64, alpha: f64) -> f64 {
    let sa = s.abs() * alpha;
    let c = 13.0 * (1.0 / sa).sqrt();
    0.5 * (1.0 / c - 1.0 / c.powi(3)) * (-169.0 / (2.0 * sa)).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// MMAS: (1/sqrt(c) - 1/c^3) phi(0) e^{-288/(|s|a)} with c = 24/(|s|a).
pub fn mmas_bridging_lower_bound(s: f64, alpha: f64) -> f64 {
    let sa = s.abs() * alpha;
    let c = 24.0 / sa;
    (1.0 / c.sqrt() - 1.0 / c.powi(3)) * (-288.0 / sa).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

pub fn hitting_time_experiment(cfg: &HittingConfig) -> Result<HittingResult> {
    cfg.validate()?;
    let outcomes = run_indexed(cfg.jobs, 0..cfg.trials, |trial| {
        let seed = cfg.base_seed.wrapping_add(trial as u64);
        match cfg.mode {
            HittingMode::RwOnly => Ok(rw_only_trial(cfg, seed)),
            HittingMode::FullAlgo => full_algo_trial(cfg, seed),
        }
    })?;
    let samples: Vec<HittingTimeSample> = outcomes
        .into_iter()
        .enumerate()
        .map(|(trial, (t, outcome))| HittingTimeSample { bit: 0, trial, t, outcome })
        .collect();

    let window = cfg.window();
    let frac = |pred: &dyn Fn(&HittingTimeSample) -> bool| {
        samples.iter().filter(|x| pred(x)).count() as f64 / samples.len() as f64
    };
    let not_bridged = frac(&|x| x.t as f64 >= window || x.outcome == Outcome::Border);
    let ts: Vec<f64> = samples.iter().map(|x| x.t as f64).collect();
    let summary = HittingSummary {
        trials: samples.len(),
        window,
        not_bridged,
        not_bridged_se: proportion_se(not_bridged, samples.len() as u64),
        survived_window: frac(&|x| x.t as f64 >= window),
        bound: cfg.second_statement_bound(),
        bridged: frac(&|x| {
            x.t as f64 <= window && matches!(x.outcome, Outcome::ReachedNeg | Outcome::ReachedPos)
        }),
        first_statement: match cfg.algorithm {
            Algorithm::Cga => cga_bridging_lower_bound(cfg.s, cfg.alpha),
            Algorithm::Mmas => mmas_bridging_lower_bound(cfg.s, cfg.alpha),
        },
        mean_t: mean(&ts),
        sd_t: std_dev(&ts),
        censored: samples.iter().filter(|x| x.outcome == Outcome::Censored).count(),
    };
    Ok(HittingResult { samples, summary })
}

pub fn hitting_table(cfg: &HittingConfig, samples: &[HittingTimeSample]) -> Table {
    let mut t = Table::new(HITTING_SCHEMA, HITTING_COLUMNS);
    for x in samples {
        t.push(vec![
            cfg.mode.name().to_string(),
            cfg.algorithm.to_string(),
            cfg.param.to_string(),
            cfg.s.to_string(),
            cfg.alpha.to_string(),
            x.trial.to_string(),
            x.t.to_string(),
            x.outcome.to_string(),
        ]);
    }
    t
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CltSummary {
    pub k: u64,
    pub steps: u64,
    pub trials: usize,
    pub ks_distance: f64,
    pub mean: f64,
    pub sd: f64,
    /// Fewer than 100 trials.
    pub low_confidence: bool,
}

/// Normalized sums of potential increments of the cGA rw-walk.
///
/// The walk lives on {1, ..., K-1} (borders 1/K and 1 - 1/K, as for cGA
/// with n = K) and starts at K/2. Each increment g(X') - g(X) is centred by
/// its conditional mean and the sum is divided by the square root of the
/// summed conditional variances.
pub fn clt_samples(k: u64, steps: u64, trials: usize, seed: u64, jobs: usize) -> Result<Vec<f64>> {
    if k < 4 || k % 2 == 1 {
        return config(format!("K must be even and at least 4, got {k}"));
    }
    if steps == 0 || trials == 0 {
        return config("steps and trials must be at least 1");
    }
    let g: Vec<f64> = (0..=k).map(|i| potential_g_cga(i, k)).collect::<Result<_>>()?;
    let kf = k as f64;
    // per state: probability of each move, increments, conditional mean and variance
    let moves: Vec<(f64, f64, f64, f64, f64)> = (0..=k as usize)
        .map(|i| {
            if i == 0 || i == k as usize {
                return (0.0, 0.0, 0.0, 0.0, 0.0);
            }
            let p = i as f64 / kf;
            let q = p * (1.0 - p);
            let up = if i + 1 < k as usize { g[i + 1] - g[i] } else { 0.0 };
            let down = if i > 1 { g[i - 1] - g[i] } else { 0.0 };
            let m = q * (up + down);
            let v = q * (up * up + down * down) - m * m;
            (q, up, down, m, v)
        })
        .collect();
    run_indexed(jobs, 0..trials, |trial| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(trial as u64));
        let mut x = k as usize / 2;
        let (mut sum, mut var) = (0.0, 0.0);
        for _ in 0..steps {
            let (q, up, down, m, v) = moves[x];
            let u: f64 = rng.gen();
            let psi = if u < q {
                if up != 0.0 {
                    x += 1;
                }
                up
            } else if u < 2.0 * q {
                if down != 0.0 {
                    x -= 1;
                }
                down
            } else {
                0.0
            };
            sum += psi - m;
            var += v;
        }
        Ok(if var > 0.0 { sum / var.sqrt() } else { 0.0 })
    })
}

pub fn clt_diagnostic(k: u64, steps: u64, trials: usize, seed: u64, jobs: usize) -> Result<CltSummary> {
    let z = clt_samples(k, steps, trials, seed, jobs)?;
    Ok(CltSummary {
        k,
        steps,
        trials,
        ks_distance: ks_distance(&z, normal_cdf),
        mean: mean(&z),
        sd: std_dev(&z),
        low_confidence: trials < 100,
    })
}
