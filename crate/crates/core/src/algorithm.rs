//! The compact Genetic Algorithm and the two-ant MMAS on a univariate model.
//!
//! Both algorithms sample two offspring from the same [`MarginalVector`],
//! keep the fitter one as the winner (ties go to the first sample) and move
//! each marginal toward the winner. They differ only in [`UpdateRule`].

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};
use crate::instrument::{self, StepClass, Trajectory};

/// A sampled candidate solution.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BitVector(Vec<bool>);

impl BitVector {
    pub fn new(bits: Vec<bool>) -> Self {
        BitVector(bits)
    }

    /// Builds a vector from 0/1 integers; any non-zero value is a one.
    pub fn from_ones(bits: &[u8]) -> Self {
        BitVector(bits.iter().map(|&b| b != 0).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn ones(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Pseudo-Boolean fitness to be maximized.
pub trait Fitness: Sync {
    fn evaluate(&self, x: &BitVector) -> usize;

    /// Best attainable value for strings of length `n`.
    fn optimum(&self, n: usize) -> usize;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct OneMax;

impl Fitness for OneMax {
    fn evaluate(&self, x: &BitVector) -> usize {
        evaluate_onemax(x)
    }

    fn optimum(&self, n: usize) -> usize {
        n
    }
}

pub fn evaluate_onemax(x: &BitVector) -> usize {
    x.ones()
}

/// Restricts a marginal probability to the border interval `[1/n, 1 - 1/n]`.
pub fn clamp_borders(p: f64, n: usize) -> f64 {
    let lo = 1.0 / n as f64;
    (1.0 - lo).min(lo.max(p))
}

/// The univariate probabilistic model: one probability of sampling a one per bit.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginalVector {
    probs: Vec<f64>,
}

impl MarginalVector {
    pub const MIN_N: usize = 4;

    /// All marginals at 1/2, the initial model of both algorithms.
    pub fn uniform(n: usize) -> Result<Self> {
        Self::filled(n, 0.5)
    }

    pub fn filled(n: usize, p: f64) -> Result<Self> {
        Self::from_probs(vec![p; n])
    }

    /// Accepts probabilities that already lie within the borders.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        let n = probs.len();
        if n < Self::MIN_N {
            return domain(format!(
                "problem size n = {n} is below the minimum {}",
                Self::MIN_N
            ));
        }
        let (lo, hi) = borders(n);
        for (i, &p) in probs.iter().enumerate() {
            // tolerate representation error when callers compute 1 - 1/n themselves
            if !(p >= lo - 1e-12 && p <= hi + 1e-12) {
                return domain(format!(
                    "marginal {i} = {p} lies outside the borders [{lo}, {hi}]"
                ));
            }
        }
        Ok(MarginalVector {
            probs: probs.into_iter().map(|p| clamp_borders(p, n)).collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, i: usize) -> f64 {
        self.probs[i]
    }

    pub fn lower_border(&self) -> f64 {
        borders(self.n()).0
    }

    pub fn upper_border(&self) -> f64 {
        borders(self.n()).1
    }

    /// Hash of the exact bit patterns of all marginals.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for p in &self.probs {
            p.to_bits().hash(&mut h);
        }
        h.finish()
    }
}

pub(crate) fn borders(n: usize) -> (f64, f64) {
    let lo = 1.0 / n as f64;
    (lo, 1.0 - lo)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Cga,
    Mmas,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Cga => "cga",
            Algorithm::Mmas => "mmas",
        }
    }

    /// Rule with update strength `strength` (1/K for cGA, rho for MMAS).
    pub fn rule_with_strength(self, strength: f64) -> Result<UpdateRule> {
        match self {
            Algorithm::Cga => {
                if !(strength > 0.0) {
                    return domain(format!("cGA strength 1/K = {strength} must be positive"));
                }
                let k = 1.0 / strength;
                // 1/(1/K) can miss an integral K by an ulp
                let k = if (k - k.round()).abs() < 1e-9 { k.round() } else { k };
                UpdateRule::cga(k)
            }
            Algorithm::Mmas => UpdateRule::mmas(strength),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cga" => Ok(Algorithm::Cga),
            "mmas" => Ok(Algorithm::Mmas),
            other => config(format!("unknown algorithm `{other}` (expected cga or mmas)")),
        }
    }
}

/// How a marginal probability reacts to one (winner, loser) pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum UpdateRule {
    /// cGA with step size 1/K.
    Cga { k: f64 },
    /// MMAS with evaporation factor rho.
    Mmas { rho: f64 },
}

impl UpdateRule {
    pub fn cga(k: f64) -> Result<Self> {
        if !(k >= 2.0) || !k.is_finite() {
            return domain(format!("cGA requires K >= 2, got {k}"));
        }
        Ok(UpdateRule::Cga { k })
    }

    pub fn mmas(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return domain(format!("MMAS requires 0 < rho < 1, got {rho}"));
        }
        Ok(UpdateRule::Mmas { rho })
    }

    pub fn algorithm(&self) -> Algorithm {
        match self {
            UpdateRule::Cga { .. } => Algorithm::Cga,
            UpdateRule::Mmas { .. } => Algorithm::Mmas,
        }
    }

    /// 1/K for cGA, rho for MMAS.
    pub fn strength(&self) -> f64 {
        match *self {
            UpdateRule::Cga { k } => 1.0 / k,
            UpdateRule::Mmas { rho } => rho,
        }
    }

    /// New value of one marginal given the winner's and loser's bit, clamped.
    pub fn apply_bit(&self, p: f64, winner: bool, loser: bool, n: usize) -> f64 {
        let raw = match *self {
            UpdateRule::Cga { k } => match (winner, loser) {
                (true, false) => p + 1.0 / k,
                (false, true) => p - 1.0 / k,
                _ => p,
            },
            // reinforce whatever value the winner carries
            UpdateRule::Mmas { rho } => {
                if winner {
                    (1.0 - rho) * p + rho
                } else {
                    (1.0 - rho) * p
                }
            }
        };
        clamp_borders(raw, n)
    }

    pub fn update(&self, model: &MarginalVector, winner: &BitVector, loser: &BitVector) -> MarginalVector {
        let n = model.n();
        let probs = model
            .probs
            .iter()
            .enumerate()
            .map(|(i, &p)| self.apply_bit(p, winner.get(i), loser.get(i), n))
            .collect();
        MarginalVector { probs }
    }
}

/// Samples each bit independently: bit `i` is one with probability `probs[i]`.
pub fn sample_bits<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> BitVector {
    BitVector(probs.iter().map(|&p| rng.gen::<f64>() < p).collect())
}

pub fn sample_offspring<R: Rng + ?Sized>(model: &MarginalVector, rng: &mut R) -> BitVector {
    sample_bits(model.probs(), rng)
}

/// Orders two offspring as (winner, loser). Ties keep `x` as the winner.
pub fn select_winner<'a, F: Fitness + ?Sized>(
    x: &'a BitVector,
    y: &'a BitVector,
    f: &F,
) -> (&'a BitVector, &'a BitVector) {
    if f.evaluate(x) < f.evaluate(y) {
        (y, x)
    } else {
        (x, y)
    }
}

pub fn cga_update(model: &MarginalVector, winner: &BitVector, loser: &BitVector, k: f64) -> Result<MarginalVector> {
    Ok(UpdateRule::cga(k)?.update(model, winner, loser))
}

pub fn mmas_update(model: &MarginalVector, winner: &BitVector, loser: &BitVector, rho: f64) -> Result<MarginalVector> {
    Ok(UpdateRule::mmas(rho)?.update(model, winner, loser))
}

/// Mutable state of one run. Cloning it forks an identical random stream.
#[derive(Clone, Debug)]
pub struct AlgorithmState {
    model: MarginalVector,
    rule: UpdateRule,
    iteration: u64,
    evaluations: u64,
    rng: ChaCha8Rng,
}

impl AlgorithmState {
    pub fn new(model: MarginalVector, rule: UpdateRule, seed: u64) -> Self {
        AlgorithmState {
            model,
            rule,
            iteration: 0,
            evaluations: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn model(&self) -> &MarginalVector {
        &self.model
    }

    pub fn rule(&self) -> UpdateRule {
        self.rule
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    /// Samples `x` then `y` and counts the iteration. Does not touch the model.
    pub fn sample_pair(&mut self) -> (BitVector, BitVector) {
        let x = sample_offspring(&self.model, &mut self.rng);
        let y = sample_offspring(&self.model, &mut self.rng);
        self.iteration += 1;
        self.evaluations += 2;
        (x, y)
    }

    /// Applies the update for an already sampled pair (in sampled order).
    pub fn apply<F: Fitness + ?Sized>(&mut self, x: &BitVector, y: &BitVector, f: &F) {
        let (winner, loser) = select_winner(x, y, f);
        self.model = self.rule.update(&self.model, winner, loser);
    }

    /// One full iteration. Returns both offspring in sampled (pre-swap) order.
    pub fn step<F: Fitness + ?Sized>(&mut self, f: &F) -> (BitVector, BitVector) {
        let (x, y) = self.sample_pair();
        self.apply(&x, &y, f);
        (x, y)
    }
}

/// Initial model of a run.
#[derive(Clone, Debug, PartialEq)]
pub enum Init {
    /// All marginals at 1/2.
    Uniform,
    /// Explicit marginals (oracle scenarios).
    Probs(Vec<f64>),
}

/// Which bits get per-step classification.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackedBits {
    None,
    All,
    /// The first `k` bit positions.
    Sample(usize),
}

impl TrackedBits {
    pub fn indices(&self, n: usize) -> Vec<usize> {
        match *self {
            TrackedBits::None => Vec::new(),
            TrackedBits::All => (0..n).collect(),
            TrackedBits::Sample(k) => (0..k.min(n)).collect(),
        }
    }
}

impl std::str::FromStr for TrackedBits {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(TrackedBits::None),
            "all" => Ok(TrackedBits::All),
            other => match other.strip_prefix("sample:").map(str::parse::<usize>) {
                Some(Ok(k)) => Ok(TrackedBits::Sample(k)),
                _ => config(format!("tracked bits `{other}` (expected none, all or sample:<k>)")),
            },
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub n: usize,
    pub rule: UpdateRule,
    /// Maximum number of iterations.
    pub budget: u64,
    pub init: Init,
    pub tracked: TrackedBits,
    /// Record (t, p) of every tracked bit each `stride` iterations.
    pub trajectory_stride: Option<u64>,
}

impl RunConfig {
    pub fn new(n: usize, rule: UpdateRule, budget: u64) -> Self {
        RunConfig {
            n,
            rule,
            budget,
            init: Init::Uniform,
            tracked: TrackedBits::None,
            trajectory_stride: None,
        }
    }

    pub fn initial_model(&self) -> Result<MarginalVector> {
        match &self.init {
            Init::Uniform => MarginalVector::uniform(self.n),
            Init::Probs(p) => {
                if p.len() != self.n {
                    return config(format!(
                        "initial model has {} entries for n = {}",
                        p.len(),
                        self.n
                    ));
                }
                MarginalVector::from_probs(p.clone())
            }
        }
    }
}

/// Min/max/final of the potential sum(1 - 1/n - p_i) over a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiSummary {
    pub min: f64,
    pub max: f64,
    pub last: f64,
}

/// Outcome of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub algorithm: Algorithm,
    pub n: usize,
    pub strength: f64,
    pub budget: u64,
    pub seed: u64,
    /// Iteration in which an optimal offspring was first sampled; `None` if censored.
    pub iterations: Option<u64>,
    /// Iterations actually executed.
    pub iterations_run: u64,
    pub evaluations: u64,
    /// Bits whose marginal was at 1/n at some observed time.
    pub lower_border_hits: usize,
    pub upper_border_hits: usize,
    /// Smallest marginal probability observed on any bit.
    pub min_marginal: f64,
    /// (bit, number of b-steps) for every tracked bit.
    pub b_steps: Vec<(usize, u64)>,
    pub phi: PhiSummary,
    pub final_model: MarginalVector,
    pub trajectories: Vec<Trajectory>,
}

impl RunRecord {
    pub fn censored(&self) -> bool {
        self.iterations.is_none()
    }
}

/// Runs until an offspring is optimal or the budget is spent.
pub fn run<F: Fitness + ?Sized>(cfg: &RunConfig, seed: u64, f: &F) -> Result<RunRecord> {
    if cfg.budget == 0 {
        return config("budget must be at least one iteration");
    }
    if matches!(cfg.trajectory_stride, Some(0)) {
        return config("trajectory stride must be positive");
    }
    let model = cfg.initial_model()?;
    let n = model.n();
    let (lo, hi) = borders(n);
    let optimum = f.optimum(n);
    let tracked = cfg.tracked.indices(n);
    let mut b_steps = vec![0u64; tracked.len()];
    let mut trajectories: Vec<Trajectory> = match cfg.trajectory_stride {
        Some(_) => tracked.iter().map(|&b| Trajectory::new(b)).collect(),
        None => Vec::new(),
    };

    let mut hit_lower = vec![false; n];
    let mut hit_upper = vec![false; n];
    let mut min_marginal = f64::INFINITY;
    let mut observe = |m: &MarginalVector, hit_lower: &mut [bool], hit_upper: &mut [bool]| {
        let mut phi = 0.0;
        for (i, &p) in m.probs().iter().enumerate() {
            if p <= lo {
                hit_lower[i] = true;
            }
            if p >= hi {
                hit_upper[i] = true;
            }
            if p < min_marginal {
                min_marginal = p;
            }
            phi += hi - p;
        }
        phi
    };

    let mut state = AlgorithmState::new(model, cfg.rule, seed);
    let phi0 = observe(state.model(), &mut hit_lower, &mut hit_upper);
    let mut phi = PhiSummary { min: phi0, max: phi0, last: phi0 };
    for tr in &mut trajectories {
        tr.push(0, state.model().get(tr.bit));
    }

    let mut found = None;
    while state.iteration() < cfg.budget {
        let (x, y) = state.sample_pair();
        let t = state.iteration();
        if f.evaluate(&x) == optimum || f.evaluate(&y) == optimum {
            found = Some(t);
            break;
        }
        if !tracked.is_empty() {
            let (ox, oy) = (x.ones() as i64, y.ones() as i64);
            for (slot, &i) in tracked.iter().enumerate() {
                let d = (ox - x.get(i) as i64) - (oy - y.get(i) as i64);
                if instrument::classify_step(d) == StepClass::Biased {
                    b_steps[slot] += 1;
                }
            }
        }
        state.apply(&x, &y, f);
        let value = observe(state.model(), &mut hit_lower, &mut hit_upper);
        phi.min = phi.min.min(value);
        phi.max = phi.max.max(value);
        phi.last = value;
        if let Some(stride) = cfg.trajectory_stride {
            if t.is_multiple_of(stride) {
                for tr in &mut trajectories {
                    tr.push(t, state.model().get(tr.bit));
                }
            }
        }
    }

    Ok(RunRecord {
        algorithm: cfg.rule.algorithm(),
        n,
        strength: cfg.rule.strength(),
        budget: cfg.budget,
        seed,
        iterations: found,
        iterations_run: state.iteration(),
        evaluations: state.evaluations(),
        lower_border_hits: hit_lower.iter().filter(|&&h| h).count(),
        upper_border_hits: hit_upper.iter().filter(|&&h| h).count(),
        min_marginal,
        b_steps: tracked.into_iter().zip(b_steps).collect(),
        phi,
        final_model: state.model,
        trajectories,
    })
}
