//! Runtime sweeps and border censuses over (n, strength) grids.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::persist::{
    write_table, PartialTable, Table, CENSUS_COLUMNS, CENSUS_SCHEMA, SWEEP_COLUMNS, SWEEP_SCHEMA,
    SWEEP_SUMMARY_COLUMNS, SWEEP_SUMMARY_SCHEMA,
};
use super::stats::Summary;
use crate::algorithm::{run, Algorithm, OneMax, RunConfig, RunRecord, TrackedBits};
use crate::error::{config, Result};

/// Default budget: 100 n ln n iterations.
pub fn default_budget(n: usize) -> u64 {
    let n = n as f64;
    (100.0 * n * n.ln()).ceil().max(1.0) as u64
}

/// The update strength sqrt(n) ln n balances drift and genetic drift; K = ceil(sqrt(n) ln n).
pub fn balanced_k(n: usize) -> f64 {
    let n = n as f64;
    (n.sqrt() * n.ln()).ceil()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub algorithm: Algorithm,
    pub n_values: Vec<usize>,
    /// 1/K for cGA, rho for MMAS.
    pub strengths: Vec<f64>,
    pub trials: usize,
    /// Iteration budget per run; `None` uses [`default_budget`].
    pub budget: Option<u64>,
    pub base_seed: u64,
    pub tracked_bits: TrackedBits,
    /// Worker threads for trials. Output does not depend on it.
    pub jobs: usize,
}

impl SweepConfig {
    pub fn new(algorithm: Algorithm, n_values: Vec<usize>, strengths: Vec<f64>, trials: usize) -> Self {
        SweepConfig {
            algorithm,
            n_values,
            strengths,
            trials,
            budget: None,
            base_seed: 0,
            tracked_bits: TrackedBits::None,
            jobs: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return config("trials must be at least 1");
        }
        if self.budget == Some(0) {
            return config("budget must be at least 1");
        }
        if self.n_values.is_empty() || self.strengths.is_empty() {
            return config("grid needs at least one n and one strength");
        }
        if self.jobs == 0 {
            return config("jobs must be at least 1");
        }
        for &s in &self.strengths {
            if !(s > 0.0 && s < 1.0) {
                return config(format!("strength {s} outside (0, 1)"));
            }
            self.algorithm.rule_with_strength(s)?;
        }
        for &n in &self.n_values {
            crate::algorithm::MarginalVector::uniform(n)?;
        }
        Ok(())
    }

    pub fn budget_for(&self, n: usize) -> u64 {
        self.budget.unwrap_or_else(|| default_budget(n))
    }

    /// Grid cells in output order: n outer, strength inner.
    pub fn cells(&self) -> Vec<(usize, f64)> {
        self.n_values
            .iter()
            .flat_map(|&n| self.strengths.iter().map(move |&s| (n, s)))
            .collect()
    }

    /// Seed of trial `trial` in cell `cell`; distinct across the whole grid.
    pub fn seed(&self, cell: usize, trial: usize) -> u64 {
        self.base_seed.wrapping_add((cell * self.trials + trial) as u64)
    }

    fn run_config(&self, n: usize, strength: f64) -> Result<RunConfig> {
        let mut cfg = RunConfig::new(n, self.algorithm.rule_with_strength(strength)?, self.budget_for(n));
        cfg.tracked = self.tracked_bits.clone();
        Ok(cfg)
    }
}

/// Runs `f(i)` for `i` in `range` on `jobs` threads, results in index order.
pub fn run_indexed<T, F>(jobs: usize, range: std::ops::Range<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    if jobs <= 1 {
        return range.map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| crate::Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| range.into_par_iter().map(f).collect())
}

fn fmt_iterations(r: &RunRecord) -> String {
    r.iterations.unwrap_or(r.iterations_run).to_string()
}

pub fn sweep_row(r: &RunRecord, trial: usize) -> Vec<String> {
    vec![
        r.algorithm.to_string(),
        r.n.to_string(),
        r.strength.to_string(),
        trial.to_string(),
        r.seed.to_string(),
        fmt_iterations(r),
        r.evaluations.to_string(),
        r.lower_border_hits.to_string(),
        r.upper_border_hits.to_string(),
        r.censored().to_string(),
    ]
}

/// Summary rows recomputed from sweep data rows (censored runs count at their budget).
pub fn summarize_sweep(data: &Table) -> Table {
    let mut out = Table::new(SWEEP_SUMMARY_SCHEMA, SWEEP_SUMMARY_COLUMNS);
    let mut start = 0;
    while start < data.rows.len() {
        let key = &data.rows[start][..3];
        let end = data.rows[start..]
            .iter()
            .position(|r| &r[..3] != key)
            .map_or(data.rows.len(), |p| start + p);
        let cell = &data.rows[start..end];
        let iters: Vec<f64> = cell.iter().map(|r| r[5].parse().unwrap_or(f64::NAN)).collect();
        let censored = cell.iter().filter(|r| r[9] == "true").count();
        let s = Summary::of(&iters);
        let mut row = key.to_vec();
        row.extend([
            cell.len().to_string(),
            censored.to_string(),
            s.mean.to_string(),
            s.median.to_string(),
            s.q1.to_string(),
            s.q3.to_string(),
        ]);
        out.push(row);
        start = end;
    }
    out
}

/// Everything a sweep produced, in canonical order.
#[derive(Clone, Debug)]
pub struct SweepResult {
    pub records: Vec<RunRecord>,
    pub data: Table,
    pub summary: Table,
}

impl SweepResult {
    /// Iterations-to-optimum (budget when censored) of one cell.
    pub fn cell_iterations(&self, n: usize, strength: f64) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.n == n && (r.strength - strength).abs() <= 1e-12 * strength)
            .map(|r| r.iterations.unwrap_or(r.iterations_run) as f64)
            .collect()
    }
}

/// Runs every (n, strength, trial) of the grid in memory.
pub fn runtime_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let mut data = Table::new(SWEEP_SCHEMA, SWEEP_COLUMNS);
    let mut records = Vec::new();
    for (cell, (n, strength)) in cfg.cells().into_iter().enumerate() {
        let rc = cfg.run_config(n, strength)?;
        let batch = run_indexed(cfg.jobs, 0..cfg.trials, |t| run(&rc, cfg.seed(cell, t), &OneMax))?;
        for (t, r) in batch.into_iter().enumerate() {
            data.push(sweep_row(&r, t));
            records.push(r);
        }
    }
    let summary = summarize_sweep(&data);
    Ok(SweepResult { records, data, summary })
}

/// Runs the sweep straight to disk: data rows are flushed to `<out>.partial`
/// after every cell and the summary goes to `summary_out`. With `resume`, rows
/// already present in the partial file are kept and their trials skipped.
pub fn runtime_sweep_to_files(
    cfg: &SweepConfig,
    out: &Path,
    summary_out: &Path,
    resume: bool,
    mut progress: impl FnMut(usize, usize),
) -> Result<Table> {
    cfg.validate()?;
    let (mut sink, done_rows) = if resume {
        PartialTable::resume(out, SWEEP_SCHEMA, SWEEP_COLUMNS)?
    } else {
        (PartialTable::create(out, SWEEP_SCHEMA, SWEEP_COLUMNS)?, Vec::new())
    };
    let mut data = Table::new(SWEEP_SCHEMA, SWEEP_COLUMNS);
    data.rows = done_rows;
    let cells = cfg.cells();
    let total = cells.len() * cfg.trials;
    for (cell, (n, strength)) in cells.into_iter().enumerate() {
        let first = cell * cfg.trials;
        let skip = data.rows.len().saturating_sub(first).min(cfg.trials);
        if skip == cfg.trials {
            continue;
        }
        let rc = cfg.run_config(n, strength)?;
        let batch = run_indexed(cfg.jobs, skip..cfg.trials, |t| run(&rc, cfg.seed(cell, t), &OneMax))?;
        let rows: Vec<Vec<String>> = batch.iter().zip(skip..).map(|(r, t)| sweep_row(r, t)).collect();
        sink.write(&rows)?;
        data.rows.extend(rows);
        progress(data.rows.len(), total);
    }
    sink.finish()?;
    let summary = summarize_sweep(&data);
    write_table(summary_out, &summary)?;
    Ok(data)
}

/// Per-trial border statistics at a fixed checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct CensusResult {
    pub records: Vec<RunRecord>,
    pub checkpoint: u64,
    pub table: Table,
}

impl CensusResult {
    /// Bits that ever touched the lower border, one entry per trial.
    pub fn lower_hits(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.lower_border_hits).collect()
    }
}

/// Runs each cell until the optimum or `checkpoint` iterations and counts
/// bits that touched the borders. Requires `tracked_bits = all`.
pub fn border_census(cfg: &SweepConfig, checkpoint: u64) -> Result<CensusResult> {
    cfg.validate()?;
    if cfg.tracked_bits != TrackedBits::All {
        return config("border census needs tracked bits = all");
    }
    if checkpoint == 0 {
        return config("checkpoint must be at least 1");
    }
    let mut table = Table::new(CENSUS_SCHEMA, CENSUS_COLUMNS);
    let mut records = Vec::new();
    for (cell, (n, strength)) in cfg.cells().into_iter().enumerate() {
        let mut rc = cfg.run_config(n, strength)?;
        // border counts are computed for all bits regardless; skip per-bit classification
        rc.tracked = TrackedBits::None;
        rc.budget = checkpoint;
        let batch = run_indexed(cfg.jobs, 0..cfg.trials, |t| run(&rc, cfg.seed(cell, t), &OneMax))?;
        for (t, r) in batch.into_iter().enumerate() {
            let lo = r.final_model.lower_border();
            let at_lower = r.final_model.probs().iter().filter(|&&p| p <= lo).count();
            table.push(vec![
                r.algorithm.to_string(),
                n.to_string(),
                strength.to_string(),
                t.to_string(),
                r.seed.to_string(),
                checkpoint.to_string(),
                r.iterations_run.to_string(),
                (!r.censored()).to_string(),
                r.lower_border_hits.to_string(),
                at_lower.to_string(),
                r.upper_border_hits.to_string(),
                r.min_marginal.to_string(),
            ]);
            records.push(r);
        }
    }
    Ok(CensusResult { records, checkpoint, table })
}
