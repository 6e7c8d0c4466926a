//! Implicit finite-volume step for the one-dimensional Fokker–Planck operator
//!
//! ```text
//! ∂_t f = -∂_v[(b - v) f] + σ ∂_vv f
//! ```
//!
//! with zero-flux walls. Interface fluxes use Chang–Cooper (exponential
//! fitting) weights, so the sampled Gaussian `exp(-(v-b)²/2σ)` is an exact
//! discrete equilibrium, and the time step is backward Euler: the system
//! matrix is a column-stochastic M-matrix, which gives exact mass
//! conservation and positivity for every `dt > 0`.

use alloc::vec;
use alloc::vec::Vec;

use crate::numerics::tridiag;

/// `B(w) = w / (e^w - 1)`, the Bernoulli weight.
#[inline]
pub fn bernoulli(w: f64) -> f64 {
    if libm::fabs(w) < 1e-10 {
        1.0 - 0.5 * w
    } else {
        w / libm::expm1(w)
    }
}

/// Reusable buffers and interface positions for one velocity grid.
#[derive(Debug, Clone)]
pub struct ChangCooper {
    dv: f64,
    interfaces: Vec<f64>,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    scratch: Vec<f64>,
}

impl ChangCooper {
    /// `centers` are the (uniformly spaced) cell centers of the velocity grid.
    pub fn new(centers: &[f64], dv: f64) -> Self {
        let n = centers.len();
        let interfaces = centers.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        Self {
            dv,
            interfaces,
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
            scratch: vec![0.0; n],
        }
    }

    /// Advances `f` (cell values) by `dt` with drift `b - v` and diffusion `sigma`.
    pub fn step(&mut self, f: &mut [f64], b: f64, sigma: f64, dt: f64) {
        let n = f.len();
        debug_assert_eq!(n, self.diag.len());
        let r = dt * sigma / (self.dv * self.dv);
        for d in self.diag.iter_mut() {
            *d = 1.0;
        }
        self.lower[0] = 0.0;
        self.upper[n - 1] = 0.0;
        // flux through j+1/2:  (σ/dv) [B(-w) f_j - B(w) f_{j+1}],  w = (b - v_{j+1/2}) dv / σ
        for j in 0..n - 1 {
            let w = (b - self.interfaces[j]) * self.dv / sigma;
            let out_right = r * bernoulli(-w);
            let in_left = r * bernoulli(w);
            self.diag[j] += out_right;
            self.upper[j] = -in_left;
            self.diag[j + 1] += in_left;
            self.lower[j + 1] = -out_right;
        }
        tridiag::solve_in_place(&self.lower, &self.diag, &self.upper, f, &mut self.scratch);
    }
}
