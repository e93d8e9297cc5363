//! Frozen-model experiments: sample offspring from a fixed model, classify
//! the step at one bit and record what the update would do, without applying it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::persist::{Table, BSTEP_COLUMNS, BSTEP_SCHEMA};
use super::stats::proportion_se;
use super::sweep::run_indexed;
use crate::algorithm::{sample_bits, AlgorithmState, MarginalVector, UpdateRule};
use crate::analysis::bstep_probability_exact;
use crate::error::{config, Result};
use crate::instrument::{record_step, StepClass};

/// Moment accumulator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Moments {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.count as f64
    }

    pub fn std_err(&self) -> f64 {
        let n = self.count as f64;
        let m = self.mean();
        let var = (self.sum_sq - n * m * m) / (n - 1.0);
        (var.max(0.0) / n).sqrt()
    }
}

/// Conditional step statistics of one bit under a frozen model.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuperpositionStats {
    pub steps: u64,
    pub p: f64,
    pub rw_steps: u64,
    pub rw_up: u64,
    pub rw_down: u64,
    pub b_steps: u64,
    pub b_up: u64,
    pub b_down: u64,
    /// Delta over b-steps only.
    pub b_delta: Moments,
    /// Delta over rw-steps only.
    pub rw_delta: Moments,
    /// Delta over all steps.
    pub delta: Moments,
    /// The model fingerprint did not change over the experiment.
    pub model_unchanged: bool,
}

/// Samples `steps` offspring pairs from a model with every marginal at `p`
/// and classifies bit `bit` in each. The model is never updated.
pub fn superposition_stats(rule: UpdateRule, n: usize, p: f64, steps: u64, bit: usize, seed: u64) -> Result<SuperpositionStats> {
    if steps == 0 {
        return config("steps must be at least 1");
    }
    if bit >= n {
        return config(format!("bit {bit} out of range for n = {n}"));
    }
    let model = MarginalVector::filled(n, p)?;
    let before = model.fingerprint();
    let mut state = AlgorithmState::new(model, rule, seed);
    let mut st = SuperpositionStats {
        steps,
        p,
        rw_steps: 0,
        rw_up: 0,
        rw_down: 0,
        b_steps: 0,
        b_up: 0,
        b_down: 0,
        b_delta: Moments::default(),
        rw_delta: Moments::default(),
        delta: Moments::default(),
        model_unchanged: false,
    };
    let tracked = [bit];
    for _ in 0..steps {
        let (x, y) = state.sample_pair();
        let rec = record_step(&state, &x, &y, &tracked)[0];
        let (up, down) = (rec.delta > 0.0, rec.delta < 0.0);
        match rec.class {
            StepClass::RandomWalk => {
                st.rw_steps += 1;
                st.rw_up += up as u64;
                st.rw_down += down as u64;
                st.rw_delta.push(rec.delta);
            }
            StepClass::Biased => {
                st.b_steps += 1;
                st.b_up += up as u64;
                st.b_down += down as u64;
                st.b_delta.push(rec.delta);
            }
        }
        st.delta.push(rec.delta);
    }
    st.model_unchanged = state.model().fingerprint() == before;
    Ok(st)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BstepRow {
    pub n: usize,
    pub trials: u64,
    pub b_steps: u64,
    pub empirical: f64,
    pub se: f64,
    pub exact: f64,
}

/// Empirical b-step frequency at bit 0 with all marginals frozen at 1/2,
/// next to the exact convolution value. `n >= 2` (no border constraint here).
pub fn bstep_frequency_experiment(n_values: &[usize], trials: u64, seed: u64, jobs: usize) -> Result<Vec<BstepRow>> {
    if trials == 0 {
        return config("trials must be at least 1");
    }
    if let Some(n) = n_values.iter().find(|&&n| n < 2) {
        return config(format!("b-step frequency needs n >= 2, got {n}"));
    }
    run_indexed(jobs, 0..n_values.len(), |idx| {
        let n = n_values[idx];
        let probs = vec![0.5; n];
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(idx as u64));
        let mut b_steps = 0u64;
        for _ in 0..trials {
            let x = sample_bits(&probs, &mut rng);
            let y = sample_bits(&probs, &mut rng);
            let d = crate::instrument::compute_d(&x, &y, 0);
            if crate::instrument::classify_step(d) == StepClass::Biased {
                b_steps += 1;
            }
        }
        let empirical = b_steps as f64 / trials as f64;
        Ok(BstepRow {
            n,
            trials,
            b_steps,
            empirical,
            se: proportion_se(empirical, trials),
            exact: bstep_probability_exact(&probs, 0)?,
        })
    })
}

pub fn bstep_table(rows: &[BstepRow]) -> Table {
    let mut t = Table::new(BSTEP_SCHEMA, BSTEP_COLUMNS);
    for r in rows {
        t.push(vec![
            r.n.to_string(),
            r.trials.to_string(),
            r.b_steps.to_string(),
            r.empirical.to_string(),
            r.se.to_string(),
            r.exact.to_string(),
            (r.empirical / r.exact).to_string(),
        ]);
    }
    t
}
