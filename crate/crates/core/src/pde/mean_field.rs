use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::InteractionKernel;
use crate::numerics::fft::Fft;

use super::field::DensityField;

/// Largest `n_x` for which [`ConvolutionPath::Auto`] uses direct quadrature.
pub const DIRECT_LIMIT: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConvolutionPath {
    /// Direct quadrature for `n_x ≤ 64`, FFT above.
    #[default]
    Auto,
    Direct,
    Fft,
}

/// `M(x) = (φ*j)(x) / (φ*ρ)(x)` with both convolutions kept.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanField {
    pub values: Vec<f64>,
    pub numerator: Vec<f64>,
    pub denominator: Vec<f64>,
}

/// Periodic convolution with a sampled kernel, `(φ*u)_i = Σ_j φ(x_i - x_j) u_j dx`.
#[derive(Debug, Clone)]
pub struct Convolver {
    n: usize,
    phi: Vec<f64>,
    phi_hat: Vec<Complex64>,
    fft: Fft,
    buf: Vec<Complex64>,
}

impl Convolver {
    pub fn new(kernel: &InteractionKernel, n: usize) -> Self {
        let dx = 1.0 / n as f64;
        let phi: Vec<f64> = (0..n).map(|m| kernel.eval(m as f64 * dx)).collect();
        let fft = Fft::new(n);
        let mut phi_hat: Vec<Complex64> = phi.iter().map(|&p| Complex64::new(p * dx, 0.0)).collect();
        fft.forward(&mut phi_hat);
        Self { n, phi, phi_hat, fft, buf: vec![Complex64::new(0.0, 0.0); n] }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn direct(&self, u: &[f64], out: &mut [f64]) {
        let n = self.n;
        let dx = 1.0 / n as f64;
        for (i, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for (j, uj) in u.iter().enumerate() {
                s += self.phi[(i + n - j) % n] * uj;
            }
            *o = s * dx;
        }
    }

    pub fn fft(&mut self, u: &[f64], out: &mut [f64]) {
        for (b, &x) in self.buf.iter_mut().zip(u) {
            *b = Complex64::new(x, 0.0);
        }
        self.fft.forward(&mut self.buf);
        for (b, p) in self.buf.iter_mut().zip(&self.phi_hat) {
            *b *= p;
        }
        self.fft.inverse(&mut self.buf);
        for (o, b) in out.iter_mut().zip(&self.buf) {
            *o = b.re;
        }
    }

    pub fn apply(&mut self, u: &[f64], out: &mut [f64], path: ConvolutionPath) {
        match path {
            ConvolutionPath::Direct => self.direct(u, out),
            ConvolutionPath::Fft => self.fft(u, out),
            ConvolutionPath::Auto if self.n <= DIRECT_LIMIT => self.direct(u, out),
            ConvolutionPath::Auto => self.fft(u, out),
        }
    }
}

/// Local mean velocity of `f` for the given kernel (automatic convolution path).
pub fn local_mean_field(f: &DensityField, kernel: &InteractionKernel) -> Result<MeanField> {
    local_mean_field_with(f, kernel, ConvolutionPath::Auto)
}

pub fn local_mean_field_with(f: &DensityField, kernel: &InteractionKernel, path: ConvolutionPath) -> Result<MeanField> {
    f.validate()?;
    let mut conv = Convolver::new(kernel, f.grid.n_x());
    mean_field_from(f, kernel, &mut conv, path)
}

/// As [`local_mean_field_with`] with a reusable convolver and no validation of `f`.
pub(crate) fn mean_field_from(
    f: &DensityField,
    kernel: &InteractionKernel,
    conv: &mut Convolver,
    path: ConvolutionPath,
) -> Result<MeanField> {
    let n = f.grid.n_x();
    let rho = f.x_marginal();
    let j = f.momentum();
    let mut numerator = vec![0.0; n];
    let mut denominator = vec![0.0; n];
    conv.apply(&j, &mut numerator, path);
    conv.apply(&rho, &mut denominator, path);
    let floor = kernel.epsilon_floor() * rho.iter().sum::<f64>() * f.grid.dx() * (1.0 - 1e-6);
    if let Some(i) = denominator.iter().position(|d| !(*d >= floor)) {
        return Err(Error::Invariant(format!(
            "local density {} at x cell {i} is below the floor {floor}",
            denominator[i]
        )));
    }
    let values = numerator.iter().zip(&denominator).map(|(a, b)| a / b).collect();
    Ok(MeanField { values, numerator, denominator })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homogeneous::{VDensity, VGrid};
    use crate::pde::PhaseGrid;

    fn two_bump(n_x: usize) -> DensityField {
        let g = PhaseGrid::new(n_x, VGrid::truncated(1.0, 0.25, 64).unwrap()).unwrap();
        DensityField::from_fn(g, |x, v| {
            let a = libm::exp(-40.0 * (x - 0.3) * (x - 0.3)) * libm::exp(-8.0 * (v - 0.8) * (v - 0.8));
            let b = libm::exp(-60.0 * (x - 0.7) * (x - 0.7)) * libm::exp(-8.0 * (v + 0.6) * (v + 0.6));
            a + 0.7 * b + 1e-3
        })
        .unwrap()
    }

    // brute-force M(x_i) straight from the definition
    fn oracle(f: &DensityField, k: &InteractionKernel) -> Vec<f64> {
        let g = f.grid;
        (0..g.n_x())
            .map(|i| {
                let (mut num, mut den) = (0.0, 0.0);
                for ip in 0..g.n_x() {
                    let w = k.eval(g.x(i) - g.x(ip));
                    for jv in 0..g.n_v() {
                        let fv = f.values[ip * g.n_v() + jv];
                        num += w * g.v(jv) * fv;
                        den += w * fv;
                    }
                }
                num / den
            })
            .collect()
    }

    #[test]
    fn homogeneous_field_gives_constant_mean() {
        let fv = VDensity::gaussian(VGrid::truncated(1.0, 0.25, 64).unwrap(), 0.37, 0.25).unwrap();
        let f = DensityField::homogeneous(32, &fv).unwrap();
        for k in [InteractionKernel::von_mises(3.0).unwrap(), InteractionKernel::cosine(0.4, 2).unwrap()] {
            let m = local_mean_field(&f, &k).unwrap();
            assert!(m.values.iter().all(|x| (x - fv.mean()).abs() < 1e-12));
        }
    }

    #[test]
    fn uniform_kernel_gives_global_mean() {
        let f = two_bump(32);
        let m = local_mean_field(&f, &InteractionKernel::uniform()).unwrap();
        let mean = f.mean_velocity();
        assert!(m.values.iter().all(|x| (x - mean).abs() < 1e-12));
    }

    #[test]
    fn matches_brute_force_and_paths_agree() {
        for n_x in [32, 128] {
            let f = two_bump(n_x);
            let k = InteractionKernel::cosine(0.5, 1).unwrap();
            let want = oracle(&f, &k);
            let d = local_mean_field_with(&f, &k, ConvolutionPath::Direct).unwrap();
            let s = local_mean_field_with(&f, &k, ConvolutionPath::Fft).unwrap();
            for i in 0..n_x {
                assert!((d.values[i] - want[i]).abs() < 1e-10);
                assert!((s.values[i] - want[i]).abs() < 1e-10);
            }
        }
        let f = two_bump(64);
        let k = InteractionKernel::von_mises(8.0).unwrap();
        let d = local_mean_field_with(&f, &k, ConvolutionPath::Direct).unwrap();
        let s = local_mean_field_with(&f, &k, ConvolutionPath::Fft).unwrap();
        for (a, b) in d.values.iter().zip(&s.values) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn field_is_bounded_by_grid_velocities() {
        let f = two_bump(16);
        let k = InteractionKernel::von_mises(20.0).unwrap();
        let m = local_mean_field(&f, &k).unwrap();
        let vmax = f.grid.vgrid().v_max();
        assert!(m.values.iter().all(|x| x.abs() <= vmax));
        let mass: f64 = f.x_marginal().iter().sum::<f64>() * f.grid.dx();
        assert!(m.denominator.iter().all(|d| *d >= k.epsilon_floor() * mass * (1.0 - 1e-6)));
        // sanity on the convolution itself: φ*1 = 1
        let mut c = Convolver::new(&k, 16);
        let mut out = vec![0.0; 16];
        c.fft(&[1.0; 16], &mut out);
        let s: f64 = (0..16).map(|m| k.eval(m as f64 / 16.0)).sum::<f64>() / 16.0;
        assert!(out.iter().all(|o| (o - s).abs() < 1e-12));
    }
}
