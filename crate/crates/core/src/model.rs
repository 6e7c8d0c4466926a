//! Herding law `G`, interaction kernel `φ` and the global model parameters.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::numerics::special::{bessel_i0, bessel_ratios};
use crate::numerics::spline::OddSpline;

/// Odd, bounded drift law whose only fixed points are `-1`, `0` and `1`.
#[derive(Debug, Clone, PartialEq)]
pub enum HerdingFunction {
    /// `G(u) = (1+β)u / (1+βu²)`.
    RationalBeta { beta: f64 },
    /// Cubic spline through `(u_i, G(u_i))`, `u_i ≥ 0`, reflected oddly.
    Tabulated(OddSpline),
    /// `G ≡ 0`. Reduces the kinetic equation to the hypoelliptic
    /// Ornstein–Uhlenbeck Fokker–Planck equation; not a valid herding law.
    Null,
}

impl HerdingFunction {
    pub fn rational(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(invalid("beta", "beta must be > 0"));
        }
        Ok(Self::RationalBeta { beta })
    }

    /// Builds a tabulated law from samples on `u ≥ 0` and checks the
    /// fixed-point structure.
    pub fn tabulated(knots: &[f64], values: &[f64]) -> Result<Self> {
        let spline = OddSpline::new(knots, values)
            .ok_or_else(|| invalid("herding", "tabulated knots must start at 0 and increase strictly"))?;
        let h = Self::Tabulated(spline);
        h.validate()?;
        Ok(h)
    }

    pub fn eval(&self, u: f64) -> f64 {
        match self {
            Self::RationalBeta { beta } => (1.0 + beta) * u / (1.0 + beta * u * u),
            Self::Tabulated(s) => {
                if u >= 0.0 {
                    s.eval_pos(u)
                } else {
                    -s.eval_pos(-u)
                }
            }
            Self::Null => 0.0,
        }
    }

    pub fn derivative(&self, u: f64) -> f64 {
        match self {
            Self::RationalBeta { beta } => {
                let d = 1.0 + beta * u * u;
                (1.0 + beta) * (1.0 - beta * u * u) / (d * d)
            }
            Self::Tabulated(s) => s.deriv_pos(libm::fabs(u)),
            Self::Null => 0.0,
        }
    }

    /// `V` with `V' = -G` and `V(0) = 0`.
    pub fn potential(&self, u: f64) -> f64 {
        match self {
            Self::RationalBeta { beta } => -(1.0 + beta) / (2.0 * beta) * libm::log1p(beta * u * u),
            // G odd ⇒ ∫_0^u G is even
            Self::Tabulated(s) => -s.integral_pos(libm::fabs(u)),
            Self::Null => 0.0,
        }
    }

    /// `sup |G|`.
    pub fn sup_abs(&self) -> f64 {
        match self {
            Self::RationalBeta { beta } => (1.0 + beta) / (2.0 * libm::sqrt(*beta)),
            Self::Tabulated(s) => {
                let last = *s.knots().last().unwrap();
                let n = 20_000;
                (0..=n).map(|k| libm::fabs(s.eval_pos(last * k as f64 / n as f64))).fold(0.0, f64::max)
            }
            Self::Null => 0.0,
        }
    }

    /// Scans `[-10, 10]` with step `1e-3` and checks that `G(u) - u` is
    /// positive on `(0,1)` and `(-∞,-1)`, negative on `(1,∞)` and `(-1,0)`,
    /// and that `G(0) = 0`, `G(±1) = ±1`.
    pub fn validate(&self) -> Result<()> {
        if let Self::Null = self {
            return Err(invalid("herding", "G ≡ 0 has no fixed point at ±1"));
        }
        for (u, want) in [(0.0, 0.0), (1.0, 1.0), (-1.0, -1.0)] {
            if libm::fabs(self.eval(u) - want) > 1e-12 {
                return Err(invalid("herding", format!("G({u}) must equal {want}")));
            }
        }
        let steps = 20_000;
        for k in 0..=steps {
            let u = -10.0 + 20.0 * k as f64 / steps as f64;
            let a = libm::fabs(u);
            if a < 1e-9 || libm::fabs(a - 1.0) < 1e-9 {
                continue;
            }
            let expected = if (0.0 < u && u < 1.0) || u < -1.0 { 1.0 } else { -1.0 };
            let d = self.eval(u) - u;
            if d * expected <= 0.0 {
                return Err(invalid("herding", format!("G(u) - u has the wrong sign at u = {u}")));
            }
        }
        Ok(())
    }
}

/// Shape of the interaction kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelFamily {
    Uniform,
    /// `exp(κ cos 2πx) / I₀(κ)`.
    VonMises { kappa: f64 },
    /// `1 + λ cos(2πkx)`.
    CosinePerturbation { lambda: f64, k: u32 },
}

/// Positive, even, unit-mass weight on the torus `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionKernel {
    family: KernelFamily,
    norm: f64,
}

impl InteractionKernel {
    pub fn uniform() -> Self {
        Self { family: KernelFamily::Uniform, norm: 1.0 }
    }

    pub fn von_mises(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa <= 50.0) {
            return Err(invalid("kappa", "kappa in (0, 50] required"));
        }
        Ok(Self { family: KernelFamily::VonMises { kappa }, norm: 1.0 / bessel_i0(kappa) })
    }

    pub fn cosine(lambda: f64, k: u32) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(invalid("lambda", "lambda in (0,1) required for φ ≥ ε > 0"));
        }
        if k == 0 {
            return Err(invalid("mode", "mode k must be ≥ 1"));
        }
        Ok(Self { family: KernelFamily::CosinePerturbation { lambda, k }, norm: 1.0 })
    }

    pub fn from_family(family: KernelFamily) -> Result<Self> {
        match family {
            KernelFamily::Uniform => Ok(Self::uniform()),
            KernelFamily::VonMises { kappa } => Self::von_mises(kappa),
            KernelFamily::CosinePerturbation { lambda, k } => Self::cosine(lambda, k),
        }
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    /// `φ(x)`; `x` is reduced modulo 1.
    pub fn eval(&self, x: f64) -> f64 {
        match self.family {
            KernelFamily::Uniform => 1.0,
            KernelFamily::VonMises { kappa } => self.norm * libm::exp(kappa * libm::cos(2.0 * PI * x)),
            KernelFamily::CosinePerturbation { lambda, k } => 1.0 + lambda * libm::cos(2.0 * PI * k as f64 * x),
        }
    }

    /// Lower bound `ε` of `φ`.
    pub fn epsilon_floor(&self) -> f64 {
        match self.family {
            KernelFamily::Uniform => 1.0,
            KernelFamily::VonMises { kappa } => self.norm * libm::exp(-kappa),
            KernelFamily::CosinePerturbation { lambda, .. } => 1.0 - lambda,
        }
    }

    /// Highest harmonic present, or `None` for kernels that are not band-limited.
    pub fn band_limit(&self) -> Option<usize> {
        match self.family {
            KernelFamily::Uniform => Some(0),
            KernelFamily::VonMises { .. } => None,
            KernelFamily::CosinePerturbation { k, .. } => Some(k as usize),
        }
    }

    /// Cosine-series coefficients `a_0..=a_n` with `φ(x) = Σ a_m cos(2πmx)`.
    pub fn cosine_coefficients(&self, n: usize) -> Vec<f64> {
        let mut a = vec![0.0; n + 1];
        a[0] = 1.0;
        match self.family {
            KernelFamily::Uniform => {}
            KernelFamily::VonMises { kappa } => {
                let r = bessel_ratios(kappa, n);
                for m in 1..=n {
                    a[m] = 2.0 * r[m];
                }
            }
            KernelFamily::CosinePerturbation { lambda, k } => {
                if (k as usize) <= n {
                    a[k as usize] = lambda;
                }
            }
        }
        a
    }

    /// Smallest number of harmonics whose neglected tail `Σ_{m>n} |a_m|` is
    /// below `tol` (exact band limit for band-limited kernels).
    pub fn modes_for_tolerance(&self, tol: f64) -> usize {
        if let Some(b) = self.band_limit() {
            return b;
        }
        let cap = 512;
        let a = self.cosine_coefficients(cap);
        let mut tail: f64 = a[1..].iter().sum();
        for (n, &am) in a.iter().enumerate().skip(1) {
            tail -= am;
            if tail < tol {
                return n;
            }
        }
        cap
    }
}

/// Noise strength, herding law and interaction kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub sigma: f64,
    pub herding: HerdingFunction,
    pub kernel: InteractionKernel,
}

impl ModelParams {
    pub fn new(sigma: f64, herding: HerdingFunction, kernel: InteractionKernel) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid("sigma", "sigma must be > 0"));
        }
        herding.validate()?;
        Ok(Self { sigma, herding, kernel })
    }

    /// Model with `G ≡ 0`: the linear kinetic Fokker–Planck equation.
    pub fn linear_limit(sigma: f64, kernel: InteractionKernel) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid("sigma", "sigma must be > 0"));
        }
        Ok(Self { sigma, herding: HerdingFunction::Null, kernel })
    }

    /// Noiseless model (`σ = 0`). Only the particle system accepts it; the
    /// PDE steppers require `σ > 0`.
    pub fn deterministic(herding: HerdingFunction, kernel: InteractionKernel) -> Result<Self> {
        herding.validate()?;
        Ok(Self { sigma: 0.0, herding, kernel })
    }

    pub(crate) fn require_diffusion(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(invalid("sigma", "sigma must be > 0"));
        }
        Ok(())
    }

    /// `σ`, `G_β` with `β = 1`, von Mises kernel with `κ = 4`.
    pub fn standard(sigma: f64) -> Result<Self> {
        Self::new(sigma, HerdingFunction::rational(1.0)?, InteractionKernel::von_mises(4.0)?)
    }
}
