//! Executable forms of the analytical quantities: drift bounds, potentials,
//! distribution modes, the variable-drift integral, normal tail bounds and
//! exact small-instance oracles.

mod bounds;
mod chain;
mod pmf;
pub mod quad;

pub use bounds::{
    drift_lower_bound, normal_cdf, normal_cdf_bounds, normal_pdf, phi_potential, potential_g_cga,
    potential_g_mmas, variable_drift_bound, DriftFunction, DRIFT_REL_TOL,
};
pub use chain::{build_chain, chain_hitting_time_oracle, mmas_grid_size, Chain, Dynamics, MAX_STATES};
pub use pmf::{
    binomial_mode_bound, bstep_probability_exact, mode_bound_check, poisson_binomial_pmf, ModeSide, Pmf,
};
