//! Closed-form bounds: exact combinatorics, quadrature over the phase
//! measurement density, the truncated sine series and tail bounds.

mod exact;
mod quadrature;
mod suite;
mod tails;
mod taylor;

pub use exact::{
    binomial, hypergeometric_zero, pr_win_given_bad, pr_win_given_bad_closed_form,
    survival_lower_bound, ExactRational,
};
pub use quadrature::{
    adaptive_simpson, bin_mass, integrate_f, integrate_f_with, three_bin_mass, wraparound_mass,
    Boundary, QuadratureResult, DEFAULT_BUDGET, DEFAULT_TOL,
};
pub use suite::{
    delta_grid, run_bound_suite, three_bin_series, BoundCheck, SuiteOptions, DELTA_GRID, FAMILIES,
    SUITE_DIMS,
};
pub use tails::{
    bin_overcount_bound, bin_undercount_bound, chernoff_bound, rounds_threshold,
    samples_for_undercount, Tail,
};
pub use taylor::{taylor_gap, taylor_sin2_lower, TaylorGap, TERMS};
