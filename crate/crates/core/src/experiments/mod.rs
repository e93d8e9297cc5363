//! Experiment drivers and their file formats.

pub mod coupon;
pub mod hitting;
pub mod persist;
pub mod stats;
pub mod superposition;
pub mod sweep;

pub use coupon::{coupon_collector_experiment, coupon_threshold, CouponConfig, CouponSummary};
pub use hitting::{
    clt_diagnostic, clt_samples, hitting_table, hitting_time_experiment, mmas_bridging_lower_bound,
    cga_bridging_lower_bound, CltSummary, HittingConfig, HittingMode, HittingResult, HittingSummary,
    HittingTimeSample, Outcome,
};
pub use superposition::{
    bstep_frequency_experiment, bstep_table, superposition_stats, BstepRow, Moments, SuperpositionStats,
};
pub use sweep::{
    balanced_k, border_census, default_budget, run_indexed, runtime_sweep, runtime_sweep_to_files,
    summarize_sweep, CensusResult, SweepConfig, SweepResult,
};
