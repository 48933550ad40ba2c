//! Direct solution of the steady system at finite `ε` and `d`, used as ground truth for the
//! asymptotic fluxes.

pub mod compare;
pub mod mesh;
pub mod solver;

pub use compare::{asymptotic_comparison, log_log_slope, ComparisonRow, ComparisonTable};
pub use mesh::Mesh;
pub use solver::{jump_indicator, solve_bvp, solve_bvp_continued, solve_bvp_ladder, BvpOptions, BvpStats, DiscreteSystem, Profile};
