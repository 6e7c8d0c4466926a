use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::model::InteractionKernel;

use super::ensemble::ParticleEnsemble;

/// How the kernel-weighted sums over particle pairs are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForcePath {
    /// Pairwise sums, `O(N²)`.
    Direct,
    /// Cosine expansion of `φ` truncated after `n_modes` harmonics, `O(N n_modes)`.
    Fourier { n_modes: usize },
}

impl ForcePath {
    /// Fourier path with enough modes that the neglected kernel tail is below
    /// `1e-10 ε` (exact for band-limited kernels).
    pub fn fourier_for(kernel: &InteractionKernel) -> Self {
        let n = kernel.modes_for_tolerance(1e-10 * kernel.epsilon_floor());
        ForcePath::Fourier { n_modes: n.max(1) }
    }
}

/// Kernel-weighted local mean velocity seen by each particle.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalAverages {
    pub values: Vec<f64>,
}

/// `Σ_j φ(x_i - x_j) v_j / Σ_j φ(x_i - x_j)` for every particle `i` (the
/// `j = i` term included).
pub fn compute_local_averages(e: &ParticleEnsemble, kernel: &InteractionKernel, path: ForcePath) -> LocalAverages {
    let mut out = vec![0.0; e.len()];
    let mut scratch = FourierScratch::default();
    local_averages_into(e, kernel, path, &mut out, &mut scratch);
    LocalAverages { values: out }
}

#[derive(Debug, Clone, Default)]
pub(crate) struct FourierScratch {
    coeffs: Vec<f64>,
    // per particle e^{2πi m x}, stored as (cos, sin), mode-major
    cos: Vec<f64>,
    sin: Vec<f64>,
}

pub(crate) fn local_averages_into(
    e: &ParticleEnsemble,
    kernel: &InteractionKernel,
    path: ForcePath,
    out: &mut [f64],
    scratch: &mut FourierScratch,
) {
    match path {
        ForcePath::Direct => direct(e, kernel, out),
        ForcePath::Fourier { n_modes } => fourier(e, kernel, n_modes.max(1), out, scratch),
    }
}

fn direct(e: &ParticleEnsemble, kernel: &InteractionKernel, out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        let xi = e.positions[i];
        let (mut num, mut den) = (0.0, 0.0);
        for (xj, vj) in e.positions.iter().zip(&e.velocities) {
            let w = kernel.eval(xi - xj);
            num += w * vj;
            den += w;
        }
        *o = num / den;
    }
}

fn fourier(e: &ParticleEnsemble, kernel: &InteractionKernel, n_modes: usize, out: &mut [f64], s: &mut FourierScratch) {
    let n = e.len();
    if s.coeffs.len() != n_modes + 1 {
        s.coeffs = kernel.cosine_coefficients(n_modes);
    }
    s.cos.resize(n_modes * n, 0.0);
    s.sin.resize(n_modes * n, 0.0);
    // cos/sin of 2πmx by repeated rotation, reseeded every 8 modes
    for (i, &x) in e.positions.iter().enumerate() {
        let (s1, c1) = libm::sincos(2.0 * PI * x);
        let (mut c, mut sn) = (c1, s1);
        for m in 0..n_modes {
            if m > 0 {
                if m % 8 == 0 {
                    let (a, b) = libm::sincos(2.0 * PI * (m + 1) as f64 * x);
                    c = b;
                    sn = a;
                } else {
                    let nc = c * c1 - sn * s1;
                    sn = sn * c1 + c * s1;
                    c = nc;
                }
            }
            s.cos[m * n + i] = c;
            s.sin[m * n + i] = sn;
        }
    }
    let a = &s.coeffs;
    let sum_v: f64 = e.velocities.iter().sum();
    let mut den = vec![a[0] * n as f64; n];
    for o in out.iter_mut() {
        *o = a[0] * sum_v;
    }
    for m in 0..n_modes {
        let am = a[m + 1];
        if am == 0.0 {
            continue;
        }
        let cm = &s.cos[m * n..(m + 1) * n];
        let sm = &s.sin[m * n..(m + 1) * n];
        let (mut cv, mut sv, mut c1, mut s1) = (0.0, 0.0, 0.0, 0.0);
        for ((c, sn), v) in cm.iter().zip(sm).zip(&e.velocities) {
            cv += c * v;
            sv += sn * v;
            c1 += c;
            s1 += sn;
        }
        for i in 0..n {
            out[i] += am * (cm[i] * cv + sm[i] * sv);
            den[i] += am * (cm[i] * c1 + sm[i] * s1);
        }
    }
    for (o, d) in out.iter_mut().zip(&den) {
        *o /= d;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn constant_velocities_are_reproduced() {
        let e = ParticleEnsemble::gaussian_uniform(50, 0.0, 1.0, 1).unwrap();
        let e = ParticleEnsemble { velocities: vec![0.7; 50], ..e };
        for k in [InteractionKernel::uniform(), InteractionKernel::von_mises(5.0).unwrap()] {
            for path in [ForcePath::Direct, ForcePath::fourier_for(&k)] {
                let m = compute_local_averages(&e, &k, path);
                assert!(m.values.iter().all(|v| (v - 0.7).abs() < 1e-12));
            }
        }
    }

    #[test]
    fn two_particles_uniform_kernel() {
        let e = ParticleEnsemble::new(vec![0.1, 0.6], vec![0.0, 2.0]).unwrap();
        let m = compute_local_averages(&e, &InteractionKernel::uniform(), ForcePath::Direct);
        assert_eq!(m.values, vec![1.0, 1.0]);
    }

    #[test]
    fn fourier_matches_direct_for_band_limited_kernel() {
        let e = ParticleEnsemble::gaussian_uniform(100, 0.2, 1.0, 11).unwrap();
        let k = InteractionKernel::cosine(0.5, 1).unwrap();
        let d = compute_local_averages(&e, &k, ForcePath::Direct);
        let f = compute_local_averages(&e, &k, ForcePath::Fourier { n_modes: 1 });
        for (a, b) in d.values.iter().zip(&f.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn fourier_matches_direct_for_von_mises() {
        let e = ParticleEnsemble::gaussian_uniform(200, -0.3, 1.0, 5).unwrap();
        let k = InteractionKernel::von_mises(6.0).unwrap();
        let d = compute_local_averages(&e, &k, ForcePath::Direct);
        let f = compute_local_averages(&e, &k, ForcePath::fourier_for(&k));
        for (a, b) in d.values.iter().zip(&f.values) {
            assert!((a - b).abs() < 1e-9, "{a} {b}");
        }
    }

    #[test]
    fn averages_are_convex_combinations() {
        let e = ParticleEnsemble::gaussian_uniform(300, 0.0, 2.0, 9).unwrap();
        let lo = e.velocities.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = e.velocities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let k = InteractionKernel::von_mises(30.0).unwrap();
        let m = compute_local_averages(&e, &k, ForcePath::Direct);
        assert!(m.values.iter().all(|v| *v >= lo && *v <= hi));
    }
}
