//! The Gaussian equilibria `N(0, σ)`, `N(±1, σ)`, their residuals under the
//! stationary equation, and steady states for kernels `φ = 1 + λ cos 2πkx`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::homogeneous::{VDensity, VGrid};
use crate::model::{HerdingFunction, KernelFamily, ModelParams};
use crate::numerics::special::normal_cdf;
use crate::pde::{stationarity_residual, DensityField, KineticSolver, PhaseGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquilibriumBranch {
    Zero,
    Plus,
    Minus,
}

impl EquilibriumBranch {
    pub fn mean(self) -> f64 {
        match self {
            EquilibriumBranch::Zero => 0.0,
            EquilibriumBranch::Plus => 1.0,
            EquilibriumBranch::Minus => -1.0,
        }
    }

    pub fn all() -> [EquilibriumBranch; 3] {
        [EquilibriumBranch::Zero, EquilibriumBranch::Plus, EquilibriumBranch::Minus]
    }
}

/// Discrete `N(branch mean, σ)`: cell-center samples renormalized to unit
/// mass, which is an exact fixed point of the velocity scheme.
pub fn equilibrium_density(branch: EquilibriumBranch, p: &ModelParams, grid: VGrid) -> Result<VDensity> {
    if !grid.covers(branch.mean(), p.sigma) {
        return Err(invalid("v_range", "grid too narrow: need max(|m|,1) + 6√σ on both sides"));
    }
    VDensity::gaussian(grid, branch.mean(), p.sigma)
}

/// [`equilibrium_density`] copied into every spatial cell.
pub fn equilibrium_field(branch: EquilibriumBranch, p: &ModelParams, grid: PhaseGrid) -> Result<DensityField> {
    DensityField::homogeneous(grid.n_x(), &equilibrium_density(branch, p, *grid.vgrid())?)
}

/// Exact cell averages of `N(mean, σ)`, renormalized to unit mass.
pub fn cell_averaged_gaussian(grid: VGrid, mean: f64, sigma: f64) -> Result<VDensity> {
    let sd = libm::sqrt(sigma);
    let dv = grid.dv();
    let values: Vec<f64> = (0..grid.len())
        .map(|j| {
            let lo = grid.v_min() + j as f64 * dv;
            (normal_cdf((lo + dv - mean) / sd) - normal_cdf((lo - mean) / sd)) / dv
        })
        .collect();
    let mass: f64 = values.iter().sum::<f64>() * dv;
    VDensity::new(grid, values.into_iter().map(|v| v / mass).collect())
}

/// Mean of the deliberately non-stationary control density.
pub const CONTROL_MEAN: f64 = 0.3;

/// Stationarity residuals of the three equilibria and of `N(0.3, σ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualScan {
    pub zero: f64,
    pub plus: f64,
    pub minus: f64,
    pub control: f64,
}

pub fn residual_scan(p: &ModelParams, grid: PhaseGrid) -> Result<ResidualScan> {
    let r = |b| -> Result<f64> { stationarity_residual(&equilibrium_field(b, p, grid)?, p) };
    let control = DensityField::homogeneous(grid.n_x(), &VDensity::gaussian(*grid.vgrid(), CONTROL_MEAN, p.sigma)?)?;
    Ok(ResidualScan {
        zero: r(EquilibriumBranch::Zero)?,
        plus: r(EquilibriumBranch::Plus)?,
        minus: r(EquilibriumBranch::Minus)?,
        control: stationarity_residual(&control, p)?,
    })
}

/// `α(x) = ∫ v f(x, v) dv` per spatial cell.
pub fn momentum_profile(f: &DensityField) -> Vec<f64> {
    f.momentum()
}

/// `∫ v f dv / ∫ f dv` per spatial cell.
pub fn local_mean_velocity(f: &DensityField) -> Vec<f64> {
    f.momentum().iter().zip(f.x_marginal()).map(|(j, r)| j / r).collect()
}

/// Settings of the pseudo-time relaxation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxationOptions {
    pub dt: f64,
    /// Stop once `‖f_{n+1} - f_n‖_{L1} / dt` falls below this.
    pub tol: f64,
    pub max_steps: usize,
    /// Amplitude of the `cos 2πkx` modulation of the initial guess.
    pub eta: f64,
}

impl Default for RelaxationOptions {
    fn default() -> Self {
        Self { dt: 0.01, tol: 1e-8, max_steps: 100_000, eta: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationResult {
    pub lambda: f64,
    pub k: u32,
    pub steady: DensityField,
    pub alpha: Vec<f64>,
    /// L1 distance to the exact `N(1, σ)` (cell averages) ⊗ uniform.
    pub deviation_l1: f64,
    /// L1 distance to the discrete equilibrium on the same grid.
    pub deviation_discrete: f64,
    /// `max α - min α`.
    pub alpha_variation: f64,
    pub steps: usize,
}

/// Relaxes `μ_+(v)(1 + η cos 2πkx)` under the full solver until it is
/// stationary. The kernel must be `Uniform` (reported as `λ = 0`) or a cosine
/// perturbation with `λ ≤ 0.5`.
pub fn perturbed_steady_state(p: &ModelParams, grid: PhaseGrid, opts: &RelaxationOptions) -> Result<PerturbationResult> {
    let (lambda, k) = match p.kernel.family() {
        KernelFamily::Uniform => (0.0, 1),
        KernelFamily::CosinePerturbation { lambda, k } if lambda <= 0.5 => (lambda, k),
        _ => return Err(invalid("kernel", "cosine kernel with lambda in (0, 0.5] (or uniform) required")),
    };
    if !(opts.eta.abs() < 1.0) {
        return Err(invalid("eta", "|eta| < 1 required"));
    }
    let mu = equilibrium_density(EquilibriumBranch::Plus, p, *grid.vgrid())?;
    let kf = k as f64;
    let mut f = DensityField::product(grid.n_x(), |x| 1.0 + opts.eta * libm::cos(2.0 * PI * kf * x), &mu)?;
    let mut solver = KineticSolver::new(grid, p.kernel);
    let cell = grid.dx() * grid.dv();
    let mut prev = f.values.clone();
    let mut change = f64::INFINITY;
    let mut steps = 0;
    while steps < opts.max_steps {
        prev.copy_from_slice(&f.values);
        solver.step(&mut f, p, opts.dt)?;
        steps += 1;
        change = f.values.iter().zip(&prev).map(|(a, b)| libm::fabs(a - b)).sum::<f64>() * cell / opts.dt;
        if change <= opts.tol {
            break;
        }
    }
    if change > opts.tol {
        return Err(Error::NotConverged { steps, last_change: change });
    }
    let exact = DensityField::homogeneous(grid.n_x(), &cell_averaged_gaussian(*grid.vgrid(), 1.0, p.sigma)?)?;
    let discrete = DensityField::homogeneous(grid.n_x(), &mu)?;
    let l1 = |g: &DensityField| f.values.iter().zip(&g.values).map(|(a, b)| libm::fabs(a - b)).sum::<f64>() * cell;
    let alpha = momentum_profile(&f);
    let hi = alpha.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = alpha.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(PerturbationResult {
        lambda,
        k,
        deviation_l1: l1(&exact),
        deviation_discrete: l1(&discrete),
        alpha_variation: hi - lo,
        alpha,
        steady: f,
        steps,
    })
}

/// `|G(α) - α|` at the mean of a momentum profile.
pub fn fixed_point_defect(g: &HerdingFunction, alpha: &[f64]) -> f64 {
    let a = alpha.iter().sum::<f64>() / alpha.len() as f64;
    libm::fabs(g.eval(a) - a)
}
