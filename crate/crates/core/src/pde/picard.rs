use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::model::ModelParams;

use super::field::DensityField;
use super::mean_field::{mean_field_from, ConvolutionPath, Convolver};
use super::solver::{step_count, KineticSolver, MAX_DT};

/// Default cap on the stored iterate trajectories (both buffers together).
pub const DEFAULT_MEMORY_BUDGET: usize = 1 << 30;

/// Gaps between consecutive Picard iterates.
#[derive(Debug, Clone, PartialEq)]
pub struct PicardReport {
    /// `ξ^n` for `n = 1..=n_iters`.
    pub gaps: Vec<f64>,
    /// `ξ^n / ξ^{n-1}` for `n = 2..=n_iters`.
    pub ratios: Vec<f64>,
    /// Last iterate at `t_final`.
    pub last: DensityField,
    pub steps: usize,
    pub dt: f64,
}

/// `(Σ|f - g| dx dv, Σ|f - g| √(1+v²) dx dv)`.
pub fn weighted_l1_distance(f: &DensityField, g: &DensityField) -> Result<(f64, f64)> {
    if f.grid != g.grid || f.values.len() != g.values.len() {
        return Err(Error::GridMismatch("densities live on different grids".into()));
    }
    Ok(weighted_l1_raw(&f.values, &g.values, &weights(f), f.grid.dx() * f.grid.dv()))
}

fn weights(f: &DensityField) -> Vec<f64> {
    let g = f.grid;
    (0..g.n_v()).map(|j| libm::sqrt(1.0 + g.v(j) * g.v(j))).collect()
}

fn weighted_l1_raw(a: &[f64], b: &[f64], w: &[f64], dxdv: f64) -> (f64, f64) {
    let n_v = w.len();
    let (mut plain, mut weighted) = (0.0, 0.0);
    for (ca, cb) in a.chunks_exact(n_v).zip(b.chunks_exact(n_v)) {
        for ((x, y), wj) in ca.iter().zip(cb).zip(w) {
            let d = libm::fabs(x - y);
            plain += d;
            weighted += d * wj;
        }
    }
    (plain * dxdv, weighted * dxdv)
}

/// Runs `n_iters` Picard iterates with the default memory budget.
pub fn picard_iterate(f0: &DensityField, p: &ModelParams, t_final: f64, dt: f64, n_iters: usize) -> Result<PicardReport> {
    picard_iterate_with_budget(f0, p, t_final, dt, n_iters, DEFAULT_MEMORY_BUDGET)
}

/// Picard iteration for the nonlinear equation: `f⁰ ≡ f0` for all times and
/// `f^n` solves the linear equation whose drift uses `M^{n-1}(t, x)` read
/// from the stored trajectory of `f^{n-1}`.
pub fn picard_iterate_with_budget(
    f0: &DensityField,
    p: &ModelParams,
    t_final: f64,
    dt: f64,
    n_iters: usize,
    budget: usize,
) -> Result<PicardReport> {
    if n_iters < 2 {
        return Err(invalid("iters", "at least 2 iterates required"));
    }
    if !(dt > 0.0 && dt <= MAX_DT) {
        return Err(invalid("dt", "dt in (0, 0.1] required"));
    }
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(invalid("t_final", "t_final must be > 0"));
    }
    p.require_diffusion()?;
    f0.validate()?;
    let steps = step_count(t_final, dt);
    let h = t_final / steps as f64;
    let size = f0.grid.size();
    let needed = 2usize
        .saturating_mul(steps + 1)
        .saturating_mul(size)
        .saturating_mul(core::mem::size_of::<f64>());
    if needed > budget {
        return Err(Error::MemoryBudget { needed, budget });
    }

    let grid = f0.grid;
    let n_x = grid.n_x();
    let w = weights(f0);
    let dxdv = grid.dx() * grid.dv();
    let mut solver = KineticSolver::new(grid, p.kernel);
    let mut conv = Convolver::new(&p.kernel, n_x);
    let mut prev: Vec<f64> = Vec::with_capacity((steps + 1) * size);
    for _ in 0..=steps {
        prev.extend_from_slice(&f0.values);
    }
    let mut cur: Vec<f64> = alloc::vec![0.0; (steps + 1) * size];
    let mut drift = alloc::vec![0.0; n_x];
    let mut gaps = Vec::with_capacity(n_iters);
    let mut f = f0.clone();
    for _ in 0..n_iters {
        f.values.copy_from_slice(&f0.values);
        cur[..size].copy_from_slice(&f0.values);
        let mut gap: f64 = 0.0;
        for k in 0..steps {
            let old = DensityField { grid, values: prev[k * size..(k + 1) * size].to_vec() };
            let m = mean_field_from(&old, &p.kernel, &mut conv, ConvolutionPath::Auto)?;
            for (b, mi) in drift.iter_mut().zip(&m.values) {
                *b = p.herding.eval(*mi);
            }
            solver.step_with_drift(&mut f, &drift, p.sigma, h);
            cur[(k + 1) * size..(k + 2) * size].copy_from_slice(&f.values);
        }
        for k in 0..=steps {
            let (a, b) = weighted_l1_raw(&cur[k * size..(k + 1) * size], &prev[k * size..(k + 1) * size], &w, dxdv);
            gap = gap.max(a + b);
        }
        gaps.push(gap);
        core::mem::swap(&mut prev, &mut cur);
    }
    let ratios = gaps.windows(2).map(|g| g[1] / g[0]).collect();
    Ok(PicardReport { gaps, ratios, last: f, steps, dt: h })
}
