//! Space-homogeneous dynamics: moments and cumulants, the velocity-space
//! Fokker–Planck solver and the entropy functional with its production.

mod density;
mod entropy;
mod moments;

pub use density::{homogeneous_step, HomogeneousSolver, VDensity, VGrid};
pub use entropy::{
    entropy, entropy_decay_experiment, entropy_production, run_homogeneous, DecayReport, HomogeneousSample,
};
pub use moments::{
    cumulant_closed_form, cumulants_to_moments, gaussian_evolution, integrate_moments, integrate_moments_with,
    moment_rhs, moments_to_cumulants, solve_mean_ode, CumulantState, GaussianEvolution, MomentState,
};
