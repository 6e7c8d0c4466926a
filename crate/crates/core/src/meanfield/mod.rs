//! Particle versus PDE comparison: test-function pairings, distances between
//! an empirical measure and a density, and the martingale part of the
//! empirical dynamics.

mod convergence;
mod distances;
mod martingale;
mod test_functions;

pub use convergence::{fit_order, particle_member, ConvergenceReport, ConvergenceRow, MemberConfig};
pub use distances::{empirical_vs_density_gap, v_marginal_w1, w1_samples};
pub use martingale::{martingale_diagnostic, MartingaleTracker};
pub use test_functions::{pairing, Jet, Pairing, SpatialMode, TestFunction, TestFunctionFamily, VelocityProfile};
