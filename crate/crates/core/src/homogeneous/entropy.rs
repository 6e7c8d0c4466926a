//! The Liapunov functional `S(f) = ∫ f log f + v² f / 2σ + V(⟨w⟩_f)/σ` and
//! its dissipation `D_S`.

use alloc::vec::Vec;

use super::density::{HomogeneousSolver, VDensity};
use super::moments::{moments_to_cumulants, MomentState};
use crate::error::{invalid, Result};
use crate::model::ModelParams;
use crate::numerics::linear_fit;

/// Cells below this value contribute nothing to `f log f` and are skipped in
/// the `1/f` integrand of the production.
const TINY: f64 = 1e-300;

pub fn entropy(f: &VDensity, p: &ModelParams) -> f64 {
    let dv = f.grid.dv();
    let mut s = 0.0;
    for (j, &fj) in f.values.iter().enumerate() {
        let v = f.grid.center(j);
        if fj > TINY {
            s += fj * libm::log(fj);
        }
        s += v * v * fj / (2.0 * p.sigma);
    }
    s * dv + p.herding.potential(f.mean()) / p.sigma
}

/// `D_S(f) = ∫ [σ ∂_v f + (v - G(M_1)) f]² / (σ f) dv`, with centered
/// differences inside and one-sided differences at the two walls.
pub fn entropy_production(f: &VDensity, p: &ModelParams) -> f64 {
    let n = f.values.len();
    let dv = f.grid.dv();
    let g = p.herding.eval(f.mean());
    let vals = &f.values;
    let mut d = 0.0;
    for j in 0..n {
        let fj = vals[j];
        if fj <= TINY {
            continue;
        }
        let df = if j == 0 {
            (vals[1] - vals[0]) / dv
        } else if j == n - 1 {
            (vals[n - 1] - vals[n - 2]) / dv
        } else {
            (vals[j + 1] - vals[j - 1]) / (2.0 * dv)
        };
        let flux = p.sigma * df + (f.grid.center(j) - g) * fj;
        d += flux * flux / (p.sigma * fj);
    }
    d * dv
}

/// One diagnostic row of a homogeneous run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneousSample {
    pub t: f64,
    pub m1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub entropy: f64,
    pub production: f64,
}

impl HomogeneousSample {
    pub fn of(f: &VDensity, p: &ModelParams, t: f64) -> Self {
        let m = f.moments(4);
        let mass = m[0];
        let normalized: Vec<f64> = m.iter().map(|x| x / mass).collect();
        let c = moments_to_cumulants(&MomentState { moments: normalized, time: t });
        Self {
            t,
            m1: c.cumulants[1],
            c2: c.cumulants[2],
            c3: c.cumulants[3],
            c4: c.cumulants[4],
            entropy: entropy(f, p),
            production: entropy_production(f, p),
        }
    }
}

/// Evolves `f0` to `t_final` with steps of at most `dt`, recording a sample
/// every `stride` steps plus the initial and final states. Returns the final
/// density and the samples.
pub fn run_homogeneous(
    f0: &VDensity,
    p: &ModelParams,
    t_final: f64,
    dt: f64,
    stride: usize,
) -> Result<(VDensity, Vec<HomogeneousSample>)> {
    if !(dt > 0.0) {
        return Err(invalid("dt", "dt must be > 0"));
    }
    f0.validate()?;
    let steps = libm::ceil(t_final / dt - 1e-9).max(0.0) as usize;
    let h = if steps > 0 { t_final / steps as f64 } else { dt };
    let stride = stride.max(1);
    let mut f = f0.clone();
    let mut solver = HomogeneousSolver::new(f.grid);
    let mut out = Vec::with_capacity(steps / stride + 2);
    out.push(HomogeneousSample::of(&f, p, 0.0));
    for k in 1..=steps {
        solver.step(&mut f, p, h)?;
        if k % stride == 0 || k == steps {
            out.push(HomogeneousSample::of(&f, p, k as f64 * h));
        }
    }
    Ok((f, out))
}

/// Relative entropy history of a homogeneous run and its fitted decay rate.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub times: Vec<f64>,
    /// `S(f_t) - S(μ_±)`.
    pub relative_entropy: Vec<f64>,
    pub production: Vec<f64>,
    /// `+1` when the run relaxes to `μ_+`, `-1` for `μ_-`.
    pub branch: f64,
    /// Negative slope of `ln S(f_t | μ_±)` over the last half of the horizon.
    pub fitted_rate: f64,
}

/// Entries at or below this value are treated as round-off and left out of the
/// exponential fit.
pub const DECAY_FIT_FLOOR: f64 = 1e-13;

/// Runs the homogeneous solver from `f0` and fits the exponential decay of
/// the relative entropy over `t ∈ [t_final/2, t_final]`.
pub fn entropy_decay_experiment(f0: &VDensity, p: &ModelParams, t_final: f64, dt: f64) -> Result<DecayReport> {
    let m1 = f0.mean();
    if libm::fabs(m1) < 1e-8 {
        return Err(invalid("m1", "initial mean must be nonzero (|M_1(0)| ≥ 1e-8)"));
    }
    let branch = if m1 > 0.0 { 1.0 } else { -1.0 };
    let eq = VDensity::gaussian(f0.grid, branch, p.sigma)?;
    let s_eq = entropy(&eq, p);
    let (_, samples) = run_homogeneous(f0, p, t_final, dt, 1)?;
    let times: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let relative_entropy: Vec<f64> = samples.iter().map(|s| s.entropy - s_eq).collect();
    let production = samples.iter().map(|s| s.production).collect();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (t, r) in times.iter().zip(&relative_entropy) {
        if *t >= 0.5 * t_final && *r > DECAY_FIT_FLOOR {
            xs.push(*t);
            ys.push(libm::log(*r));
        }
    }
    let fitted_rate = linear_fit(&xs, &ys).map(|(s, _)| -s).unwrap_or(f64::NAN);
    Ok(DecayReport { times, relative_entropy, production, branch, fitted_rate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homogeneous::VGrid;
    use core::f64::consts::{LN_2, PI};

    fn p(sigma: f64) -> ModelParams {
        ModelParams::standard(sigma).unwrap()
    }

    #[test]
    fn gaussian_entropy_closed_forms() {
        let g = VGrid::truncated(1.0, 1.0, 1024).unwrap();
        let f0 = VDensity::gaussian(g, 0.0, 1.0).unwrap();
        let want0 = -0.5 * libm::log(2.0 * PI);
        assert!((entropy(&f0, &p(1.0)) - want0).abs() < 1e-6);
        let f1 = VDensity::gaussian(g, 1.0, 1.0).unwrap();
        let want1 = -0.5 * libm::log(2.0 * PI) + 0.5 - LN_2;
        assert!((entropy(&f1, &p(1.0)) - want1).abs() < 1e-6);
    }

    #[test]
    fn production_vanishes_at_equilibrium_and_is_nonnegative() {
        let sigma = 0.25;
        let g = VGrid::truncated(1.0, sigma, 256).unwrap();
        let dv = g.dv();
        let eq = VDensity::gaussian(g, 1.0, sigma).unwrap();
        assert!(entropy_production(&eq, &p(sigma)) <= 10.0 * dv * dv);
        let bumpy = VDensity::from_fn(g, |v| 1.0 + libm::sin(3.0 * v) * libm::exp(-v * v)).unwrap();
        assert!(entropy_production(&bumpy, &p(sigma)) >= 0.0);
    }

    #[test]
    fn decay_requires_nonzero_mean() {
        let g = VGrid::truncated(0.0, 1.0, 64).unwrap();
        let f = VDensity::gaussian(g, 0.0, 1.0).unwrap();
        assert!(entropy_decay_experiment(&f, &p(1.0), 1.0, 0.01).is_err());
    }

    #[test]
    fn equilibrium_has_no_relative_entropy() {
        let sigma = 0.25;
        let g = VGrid::truncated(1.0, sigma, 256).unwrap();
        let eq = VDensity::gaussian(g, 1.0, sigma).unwrap();
        let r = entropy_decay_experiment(&eq, &p(sigma), 2.0, 0.01).unwrap();
        assert!(r.relative_entropy.iter().all(|x| x.abs() <= 1e-8));
    }

    #[test]
    fn entropy_rate_matches_production() {
        let sigma = 0.25;
        let g = VGrid::truncated(0.5, sigma, 512).unwrap();
        let f0 = VDensity::gaussian(g, 0.5, sigma).unwrap();
        let dt = 1e-3;
        let (_, s) = run_homogeneous(&f0, &p(sigma), 0.5, dt, 1).unwrap();
        for w in s.windows(2) {
            let rate = (w[1].entropy - w[0].entropy) / (w[1].t - w[0].t);
            let d = 0.5 * (w[0].production + w[1].production);
            assert!((rate + d).abs() < 5.0 * (dt + g.dv() * g.dv()), "t={} rate={rate} d={d}", w[0].t);
        }
    }

    #[test]
    fn relative_entropy_stays_nonnegative() {
        let sigma = 0.25;
        let g = VGrid::truncated(0.5, sigma, 256).unwrap();
        let f0 = VDensity::from_fn(g, |v| libm::exp(-(v + 0.6) * (v + 0.6) * 4.0) + 2.0 * libm::exp(-(v - 0.5) * (v - 0.5) * 8.0)).unwrap();
        let r = entropy_decay_experiment(&f0, &p(sigma), 6.0, 0.01).unwrap();
        assert!(r.relative_entropy.iter().all(|&x| x >= -1e-12));
    }
}
