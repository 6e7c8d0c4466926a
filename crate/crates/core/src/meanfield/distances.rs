use alloc::vec::Vec;

use crate::particles::ParticleEnsemble;
use crate::pde::DensityField;

use super::test_functions::{Pairing, TestFunctionFamily};

/// `max_ψ |⟨S^N, ψ⟩ - ⟨f, ψ⟩| ∧ 1` over the family.
pub fn empirical_vs_density_gap(e: &ParticleEnsemble, f: &DensityField, fam: &TestFunctionFamily) -> f64 {
    fam.functions
        .iter()
        .map(|psi| libm::fabs(e.pairing(psi) - f.pairing(psi)))
        .fold(0.0, f64::max)
        .min(1.0)
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut s = xs.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    s
}

/// `∫ |F(t) - c| dt` over `[a, b]` with `F` linear from `fa` to `fb`.
fn abs_linear_integral(a: f64, b: f64, fa: f64, fb: f64, c: f64) -> f64 {
    let (d1, d2) = (fa - c, fb - c);
    if d1 * d2 >= 0.0 {
        (b - a) * libm::fabs(0.5 * (d1 + d2))
    } else {
        let (d1, d2) = (libm::fabs(d1), libm::fabs(d2));
        (b - a) * (d1 * d1 + d2 * d2) / (2.0 * (d1 + d2))
    }
}

/// Exact Wasserstein-1 distance between the empirical velocity law of `e`
/// and the velocity marginal of `f` (piecewise constant on the cells).
pub fn v_marginal_w1(e: &ParticleEnsemble, f: &DensityField) -> f64 {
    let vg = *f.grid.vgrid();
    let m = f.v_marginal_values();
    let dv = vg.dv();
    let total: f64 = m.iter().sum::<f64>() * dv;
    let mut prefix = Vec::with_capacity(m.len() + 1);
    prefix.push(0.0);
    for mj in &m {
        let last = *prefix.last().unwrap();
        prefix.push(last + mj * dv / total);
    }
    let cdf = |v: f64| -> f64 {
        if v <= vg.v_min() {
            0.0
        } else if v >= vg.v_max() {
            1.0
        } else {
            let j = vg.locate(v);
            prefix[j] + m[j] / total * (v - (vg.v_min() + j as f64 * dv))
        }
    };
    let samples = sorted(&e.velocities);
    let n = samples.len() as f64;
    let mut points: Vec<f64> = (0..=vg.len()).map(|j| vg.v_min() + j as f64 * dv).collect();
    points.extend_from_slice(&samples);
    points.sort_by(|a, b| a.total_cmp(b));
    let mut below = 0usize;
    let mut w1 = 0.0;
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        while below < samples.len() && samples[below] <= a {
            below += 1;
        }
        if b > a {
            w1 += abs_linear_integral(a, b, cdf(a), cdf(b), below as f64 / n);
        }
    }
    w1
}

/// Exact Wasserstein-1 distance between two empirical laws on the line.
pub fn w1_samples(a: &[f64], b: &[f64]) -> f64 {
    let (sa, sb) = (sorted(a), sorted(b));
    if sa.len() == sb.len() {
        return sa.iter().zip(&sb).map(|(x, y)| libm::fabs(x - y)).sum::<f64>() / sa.len() as f64;
    }
    let mut points: Vec<f64> = sa.iter().chain(&sb).copied().collect();
    points.sort_by(|x, y| x.total_cmp(y));
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut ia, mut ib) = (0usize, 0usize);
    let mut w1 = 0.0;
    for w in points.windows(2) {
        while ia < sa.len() && sa[ia] <= w[0] {
            ia += 1;
        }
        while ib < sb.len() && sb[ib] <= w[0] {
            ib += 1;
        }
        w1 += (w[1] - w[0]) * libm::fabs(ia as f64 / na - ib as f64 / nb);
    }
    w1
}
