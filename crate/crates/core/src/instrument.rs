//! Per-bit classification of iterations into random-walk and biased steps,
//! marginal trajectories and border-hit detection.

use serde::{Deserialize, Serialize};

use crate::algorithm::{borders, AlgorithmState, BitVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StepClass {
    /// The other bits decide the comparison; the marginal moves like a fair walk.
    RandomWalk,
    /// The bit can decide the comparison; the marginal has positive drift.
    Biased,
}

/// OneMax difference of the two offspring at all bits other than `i`,
/// taken in sampled order: `(|x| - x_i) - (|y| - y_i)`.
pub fn compute_d(x: &BitVector, y: &BitVector, i: usize) -> i64 {
    debug_assert_eq!(x.len(), y.len());
    (x.ones() as i64 - x.get(i) as i64) - (y.ones() as i64 - y.get(i) as i64)
}

pub fn classify_step(d: i64) -> StepClass {
    match d {
        0 | -1 => StepClass::Biased,
        _ => StepClass::RandomWalk,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: u64,
    pub bit: usize,
    pub d: i64,
    pub class: StepClass,
    /// Realized change of the marginal, after clamping.
    pub delta: f64,
    pub p_before: f64,
}

/// Classifies the pending update of `state` for every tracked bit.
///
/// `state` must still hold the model the pair was sampled from; `delta` is
/// what the state's rule would do to each bit, whether or not it is applied.
pub fn record_step(state: &AlgorithmState, x: &BitVector, y: &BitVector, tracked: &[usize]) -> Vec<StepRecord> {
    if tracked.is_empty() {
        return Vec::new();
    }
    let model = state.model();
    let n = model.n();
    let rule = state.rule();
    let (ox, oy) = (x.ones() as i64, y.ones() as i64);
    // tie keeps x, matching select_winner on OneMax
    let x_wins = ox >= oy;
    tracked
        .iter()
        .map(|&i| {
            let d = (ox - x.get(i) as i64) - (oy - y.get(i) as i64);
            let (w, l) = if x_wins { (x.get(i), y.get(i)) } else { (y.get(i), x.get(i)) };
            let p = model.get(i);
            StepRecord {
                t: state.iteration(),
                bit: i,
                d,
                class: classify_step(d),
                delta: rule.apply_bit(p, w, l, n) - p,
                p_before: p,
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BorderSide {
    Lower,
    Upper,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BorderEvent {
    pub bit: usize,
    pub t: u64,
    pub side: BorderSide,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub bit: usize,
    pub samples: Vec<(u64, f64)>,
}

impl Trajectory {
    pub fn new(bit: usize) -> Self {
        Trajectory { bit, samples: Vec::new() }
    }

    pub fn push(&mut self, t: u64, p: f64) {
        self.samples.push((t, p));
    }
}

/// First time each trajectory touches each border of `[1/n, 1 - 1/n]`.
///
/// Exact only for stride-1 trajectories; coarser strides can miss short visits.
pub fn detect_border_hits(trajectories: &[Trajectory], n: usize) -> Vec<BorderEvent> {
    let (lo, hi) = borders(n);
    let eps = 1e-12;
    let mut events = Vec::new();
    for tr in trajectories {
        let lower = tr.samples.iter().find(|&&(_, p)| p <= lo + eps);
        let upper = tr.samples.iter().find(|&&(_, p)| p >= hi - eps);
        if let Some(&(t, _)) = lower {
            events.push(BorderEvent { bit: tr.bit, t, side: BorderSide::Lower });
        }
        if let Some(&(t, _)) = upper {
            events.push(BorderEvent { bit: tr.bit, t, side: BorderSide::Upper });
        }
    }
    events.sort_by_key(|e| (e.t, e.bit, e.side == BorderSide::Upper));
    events
}

/// Sum of the deltas of the random-walk steps among `records` with `t` in `window`.
pub fn rw_displacement(records: &[StepRecord], window: std::ops::Range<u64>) -> f64 {
    records
        .iter()
        .filter(|r| r.class == StepClass::RandomWalk && window.contains(&r.t))
        .map(|r| r.delta)
        .sum()
}
