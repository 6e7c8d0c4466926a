//! Velocity moments and cumulants of space-homogeneous solutions.
//!
//! The moment hierarchy is closed from below (`Ṁ_n` only involves `M_0..M_n`),
//! so truncating it at any order is exact.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::model::{HerdingFunction, ModelParams};

/// Moments `M_0..=M_K` of the velocity law at `time`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentState {
    pub moments: Vec<f64>,
    pub time: f64,
}

impl MomentState {
    /// Requires `K ≥ 2`, `M_0 = 1` and `M_2 ≥ M_1²`.
    pub fn new(moments: Vec<f64>, time: f64) -> Result<Self> {
        if moments.len() < 3 {
            return Err(invalid("moments", "at least M_0, M_1, M_2 are required"));
        }
        if (moments[0] - 1.0).abs() > 1e-12 {
            return Err(invalid("moments", "M_0 must be 1"));
        }
        if moments[2] < moments[1] * moments[1] - 1e-12 {
            return Err(invalid("moments", "M_2 must be at least M_1²"));
        }
        Ok(Self { moments, time })
    }

    /// Moments of the Gaussian `N(mean, variance)` up to order `k`.
    pub fn gaussian(mean: f64, variance: f64, k: usize) -> Self {
        let mut c = vec![0.0; k + 1];
        if k >= 1 {
            c[1] = mean;
        }
        if k >= 2 {
            c[2] = variance;
        }
        let moments = cumulants_to_moments(&CumulantState { cumulants: c, time: 0.0 });
        Self { moments, time: 0.0 }
    }

    pub fn order(&self) -> usize {
        self.moments.len() - 1
    }
}

/// Cumulants `C_1..=C_K`; `cumulants[0]` is `C_0 = 0` and `cumulants[n]` is `C_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulantState {
    pub cumulants: Vec<f64>,
    pub time: f64,
}

impl CumulantState {
    pub fn order(&self) -> usize {
        self.cumulants.len().saturating_sub(1)
    }
}

fn binomial_row(n: usize) -> Vec<f64> {
    let mut row = vec![1.0; n + 1];
    for k in 1..n {
        row[k] = row[k - 1] * (n - k + 1) as f64 / k as f64;
    }
    row
}

/// `C_n = M_n - Σ_{j=1}^{n-1} binom(n-1, j-1) C_j M_{n-j}`.
pub fn moments_to_cumulants(s: &MomentState) -> CumulantState {
    let m = &s.moments;
    let k = m.len() - 1;
    let mut c = vec![0.0; k + 1];
    for n in 1..=k {
        let row = binomial_row(n - 1);
        let mut acc = m[n];
        for j in 1..n {
            acc -= row[j - 1] * c[j] * m[n - j];
        }
        c[n] = acc;
    }
    CumulantState { cumulants: c, time: s.time }
}

/// Inverse of [`moments_to_cumulants`]; the result starts with `M_0 = 1`.
pub fn cumulants_to_moments(c: &CumulantState) -> Vec<f64> {
    let k = c.order();
    let mut m = vec![0.0; k + 1];
    m[0] = 1.0;
    for n in 1..=k {
        let row = binomial_row(n - 1);
        let mut acc = c.cumulants[n];
        for j in 1..n {
            acc += row[j - 1] * c.cumulants[j] * m[n - j];
        }
        m[n] = acc;
    }
    m
}

/// `Ṁ_n = n G(M_1) M_{n-1} - n M_n + σ n(n-1) M_{n-2}` with `Ṁ_0 = 0`.
pub fn moment_rhs(s: &MomentState, p: &ModelParams) -> Result<Vec<f64>> {
    if s.moments.len() < 3 {
        return Err(invalid("moments", "the moment hierarchy needs K ≥ 2"));
    }
    Ok(rhs(&s.moments, &p.herding, p.sigma))
}

fn rhs(m: &[f64], g: &HerdingFunction, sigma: f64) -> Vec<f64> {
    let gm = g.eval(m[1]);
    let mut d = vec![0.0; m.len()];
    for n in 1..m.len() {
        let nf = n as f64;
        let m_nm2 = if n >= 2 { m[n - 2] } else { m[0] };
        d[n] = nf * gm * m[n - 1] - nf * m[n] + sigma * nf * (nf - 1.0) * m_nm2;
    }
    d
}

fn rk4_steps(t_final: f64, dt: f64) -> (usize, f64) {
    if t_final <= 0.0 {
        return (0, 0.0);
    }
    let n = libm::ceil(t_final / dt - 1e-9).max(1.0) as usize;
    (n, t_final / n as f64)
}

/// Classical RK4 integration of the moment hierarchy to `t_final`, calling
/// `observer` after every step (and once with the initial state).
pub fn integrate_moments_with(
    s0: &MomentState,
    p: &ModelParams,
    t_final: f64,
    dt: f64,
    mut observer: impl FnMut(&MomentState),
) -> Result<MomentState> {
    if !(dt > 0.0) || dt > 0.1 {
        return Err(invalid("dt", "dt in (0, 0.1] required"));
    }
    if s0.moments.len() < 3 {
        return Err(invalid("moments", "the moment hierarchy needs K ≥ 2"));
    }
    let (steps, h) = rk4_steps(t_final - s0.time, dt);
    let mut s = s0.clone();
    observer(&s);
    let g = &p.herding;
    let n = s.moments.len();
    let mut tmp = vec![0.0; n];
    for step in 0..steps {
        let m = &s.moments;
        let k1 = rhs(m, g, p.sigma);
        for i in 0..n {
            tmp[i] = m[i] + 0.5 * h * k1[i];
        }
        let k2 = rhs(&tmp, g, p.sigma);
        for i in 0..n {
            tmp[i] = m[i] + 0.5 * h * k2[i];
        }
        let k3 = rhs(&tmp, g, p.sigma);
        for i in 0..n {
            tmp[i] = m[i] + h * k3[i];
        }
        let k4 = rhs(&tmp, g, p.sigma);
        for i in 0..n {
            s.moments[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        s.time = s0.time + (step + 1) as f64 * h;
        observer(&s);
    }
    Ok(s)
}

pub fn integrate_moments(s0: &MomentState, p: &ModelParams, t_final: f64, dt: f64) -> Result<MomentState> {
    integrate_moments_with(s0, p, t_final, dt, |_| {})
}

/// Solves `ċ = G(c) - c` from `c0` over `[0, t]` with RK4 steps of at most `1e-3`.
pub fn solve_mean_ode(g: &HerdingFunction, c0: f64, t: f64) -> f64 {
    let (steps, h) = rk4_steps(t, 1e-3);
    let f = |c: f64| g.eval(c) - c;
    let mut c = c0;
    for _ in 0..steps {
        let k1 = f(c);
        let k2 = f(c + 0.5 * h * k1);
        let k3 = f(c + 0.5 * h * k2);
        let k4 = f(c + h * k3);
        c += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    c
}

/// Cumulants at time `t` from the exact laws `C_n(t) = C_n(0) e^{-nt}` (n ≥ 3),
/// `C_2(t) = σ + (C_2(0) - σ) e^{-2t}`, with `C_1` from the mean ODE.
pub fn cumulant_closed_form(c0: &CumulantState, p: &ModelParams, t: f64) -> Result<CumulantState> {
    if !(t >= 0.0) {
        return Err(invalid("t", "t must be ≥ 0"));
    }
    let k = c0.order();
    let mut c = vec![0.0; k + 1];
    if k >= 1 {
        c[1] = solve_mean_ode(&p.herding, c0.cumulants[1], t);
    }
    if k >= 2 {
        c[2] = p.sigma + (c0.cumulants[2] - p.sigma) * libm::exp(-2.0 * t);
    }
    for n in 3..=k {
        c[n] = c0.cumulants[n] * libm::exp(-(n as f64) * t);
    }
    Ok(CumulantState { cumulants: c, time: c0.time + t })
}

/// Mean and variance of the Gaussian family preserved by the dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianEvolution {
    pub mean: f64,
    pub variance: f64,
}

/// `B_t = e^{-2t} B_0 + σ(1 - e^{-2t})`, mean from the mean ODE.
pub fn gaussian_evolution(m0: f64, b0: f64, p: &ModelParams, t: f64) -> Result<GaussianEvolution> {
    if !(b0 > 0.0) {
        return Err(invalid("b0", "initial variance must be > 0"));
    }
    if !(t >= 0.0) {
        return Err(invalid("t", "t must be ≥ 0"));
    }
    let e = libm::exp(-2.0 * t);
    Ok(GaussianEvolution { mean: solve_mean_ode(&p.herding, m0, t), variance: e * b0 + p.sigma * (1.0 - e) })
}
