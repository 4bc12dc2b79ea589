//! Ground-truth oracles and goodness-of-fit tools.
//!
//! The oracles enumerate every reversion history with its exact rational
//! probability. They share no code with the generating-function routes
//! they check.

mod oracle;
mod stats;

pub use oracle::{
    enumerate_clock, enumerate_integrated, enumerate_walk, for_each_history, reversion_branches,
    IntegratedEnumeration, WalkEnumeration, OCCASIONAL_ENUMERATION_MAX_N, CLOCK_ENUMERATION_MAX_N,
    WALK_ENUMERATION_MAX_N, INTEGRATED_ENUMERATION_MAX_N,
};
pub use stats::{
    binned_conditional_means, chi_square, counts, ks_statistic, normal_cdf, tv_distance, BinStat,
    ChiSquare, KsConvention,
};
