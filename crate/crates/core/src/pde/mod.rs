//! Phase-space solver for the nonlinear kinetic equation
//!
//! ```text
//! ∂_t f = -v ∂_x f - ∂_v[(G(M) - v) f] + σ ∂_vv f,   M = (φ*j) / (φ*ρ)
//! ```
//!
//! on the torus in `x` times a truncated velocity interval, together with the
//! Picard iteration that freezes `M` from the previous iterate.

mod field;
mod mean_field;
mod picard;
mod residual;
mod solver;

pub use field::{DensityField, PhaseGrid};
pub use mean_field::{local_mean_field, local_mean_field_with, ConvolutionPath, Convolver, MeanField, DIRECT_LIMIT};
pub use picard::{
    picard_iterate, picard_iterate_with_budget, weighted_l1_distance, PicardReport, DEFAULT_MEMORY_BUDGET,
};
pub use residual::stationarity_residual;
pub use solver::{
    kinetic_step, solve, solve_with, KineticSolver, PdeDiagnostics, PdeSample, StepStats, Transport, CLIP_TOLERANCE,
    MAX_DT,
};
