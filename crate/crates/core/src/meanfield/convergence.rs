use alloc::vec::Vec;

use crate::error::Result;
use crate::model::ModelParams;
use crate::numerics::log_log_slope;
use crate::particles::{sample_from_density, simulate_with, ForcePath, SdeConfig};
use crate::pde::DensityField;

use super::distances::{empirical_vs_density_gap, v_marginal_w1};
use super::martingale::MartingaleTracker;
use super::test_functions::{TestFunction, TestFunctionFamily};

/// One particle run of a convergence study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemberConfig {
    pub n: usize,
    pub seed: u64,
    pub dt: f64,
    pub t_final: f64,
    pub force_path: ForcePath,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub seed: u64,
    pub gap: f64,
    pub w1: f64,
    /// Largest `sup_t |M_t^ψ|` over the tracked test functions.
    pub sup_martingale: f64,
}

/// Samples `n` particles from `f0`, evolves them to `t_final` and compares
/// the result with the PDE density `f_t` at the same time.
pub fn particle_member(
    f0: &DensityField,
    f_t: &DensityField,
    p: &ModelParams,
    cfg: &MemberConfig,
    fam: &TestFunctionFamily,
    psis: &[TestFunction],
) -> Result<ConvergenceRow> {
    let e0 = sample_from_density(f0, cfg.n, cfg.seed.wrapping_mul(2).wrapping_add(1))?;
    let sde = SdeConfig::new(cfg.dt, cfg.t_final, cfg.seed.wrapping_mul(2), cfg.force_path);
    let (_, h) = sde.schedule();
    let mut tracker = MartingaleTracker::new(psis, p, h);
    let last = simulate_with(&e0, p, &sde, |_, e, avg| tracker.observe(e, &avg.values))?;
    Ok(ConvergenceRow {
        n: cfg.n,
        seed: cfg.seed,
        gap: empirical_vs_density_gap(&last, f_t, fam),
        w1: v_marginal_w1(&last, f_t),
        sup_martingale: tracker.sup().iter().copied().fold(0.0, f64::max),
    })
}

/// Slope of `ln y` against `ln n`.
pub fn fit_order(ns: &[f64], ys: &[f64]) -> f64 {
    log_log_slope(ns, ys).unwrap_or(f64::NAN)
}

/// Seed-aggregated distances per particle number and their fitted orders.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub ns: Vec<usize>,
    pub mean_gap: Vec<f64>,
    pub mean_w1: Vec<f64>,
    /// Root mean square over seeds of `sup_t |M_t^ψ|`.
    pub rms_martingale: Vec<f64>,
    pub gap_order: f64,
    pub w1_order: f64,
    pub martingale_order: f64,
}

impl ConvergenceReport {
    pub fn from_rows(rows: Vec<ConvergenceRow>) -> Self {
        let mut ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
        ns.sort_unstable();
        ns.dedup();
        let (mut mean_gap, mut mean_w1, mut rms_martingale) = (Vec::new(), Vec::new(), Vec::new());
        for &n in &ns {
            let sel: Vec<&ConvergenceRow> = rows.iter().filter(|r| r.n == n).collect();
            let k = sel.len() as f64;
            mean_gap.push(sel.iter().map(|r| r.gap).sum::<f64>() / k);
            mean_w1.push(sel.iter().map(|r| r.w1).sum::<f64>() / k);
            rms_martingale.push(libm::sqrt(sel.iter().map(|r| r.sup_martingale * r.sup_martingale).sum::<f64>() / k));
        }
        let x: Vec<f64> = ns.iter().map(|n| *n as f64).collect();
        Self {
            gap_order: fit_order(&x, &mean_gap),
            w1_order: fit_order(&x, &mean_w1),
            martingale_order: fit_order(&x, &rms_martingale),
            rows,
            ns,
            mean_gap,
            mean_w1,
            rms_martingale,
        }
    }

    /// Whether the seed-averaged W1 decreases strictly with `N`.
    pub fn w1_monotone(&self) -> bool {
        self.mean_w1.windows(2).all(|w| w[1] < w[0])
    }
}
