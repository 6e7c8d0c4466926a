//! The `N`-particle system: positions on the torus, velocities relaxing to
//! the herding law of their kernel-weighted local mean, with independent
//! Brownian forcing, integrated by Euler–Maruyama.

mod ensemble;
mod forces;
mod sde;

pub use ensemble::{empirical_histogram, sample_from_density, wrap, EmpiricalHistogram, ParticleEnsemble};
pub use forces::{compute_local_averages, ForcePath, LocalAverages};
pub use sde::{
    em_step, simulate, simulate_with, EmStepper, NoiseStreams, ParticleSample, SdeConfig, Trajectory, MAX_SDE_DT,
};
