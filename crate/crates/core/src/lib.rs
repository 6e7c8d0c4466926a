//! Numerics for a nonlinear kinetic model of self-propelled particles on the
//! one-dimensional torus.
//!
//! The crate is `no_std` (it needs `alloc`) and holds every algorithm: the
//! herding law and interaction kernel ([`model`]), the space-homogeneous
//! moment, cumulant and entropy machinery ([`homogeneous`]), the phase-space
//! solver and its Picard iteration ([`pde`]), the interacting particle system
//! ([`particles`]), particle/PDE comparison tools ([`meanfield`]) and the
//! equilibrium experiments ([`stationary`]). File formats, configuration and
//! the command-line driver live in the `kflock` crate.

#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` is how NaN gets rejected along with the out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod chang_cooper;
pub mod error;
pub mod homogeneous;
pub mod meanfield;
pub mod model;
pub mod numerics;
pub mod particles;
pub mod pde;
pub mod stationary;

pub use error::{Error, Result};
pub use model::{HerdingFunction, InteractionKernel, KernelFamily, ModelParams};
