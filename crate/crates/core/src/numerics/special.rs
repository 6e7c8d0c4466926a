//! Special functions: modified Bessel functions of the first kind and the
//! normal distribution.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

/// I₀(x) from its power series; accurate to a few ulps for |x| ≤ 100.
pub fn bessel_i0(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= q / (k * k);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
        k += 1.0;
    }
    sum
}

/// Ratios `I_m(x) / I_0(x)` for `m = 0..=n`, by Miller's backward recurrence.
pub fn bessel_ratios(x: f64, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    out[0] = 1.0;
    if n == 0 || x == 0.0 {
        return out;
    }
    // start well above both n and x so the seed error has decayed by m = n
    let start = n + 40 + (2.0 * x) as usize + libm::sqrt(40.0 * (n as f64 + x)) as usize;
    let mut next = 0.0; // I_{m+1}
    let mut cur = 1e-300; // I_m
    let mut tail = vec![0.0; n + 1];
    for m in (1..=start).rev() {
        let prev = (2.0 * m as f64 / x) * cur + next;
        next = cur;
        cur = prev;
        if m - 1 <= n {
            tail[m - 1] = cur;
        }
        if cur > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            for t in tail.iter_mut() {
                *t *= 1e-250;
            }
        }
    }
    let i0 = tail[0];
    for m in 1..=n {
        out[m] = tail[m] / i0;
    }
    out
}

/// Standard normal density.
pub fn normal_pdf(z: f64) -> f64 {
    libm::exp(-0.5 * z * z) / libm::sqrt(2.0 * PI)
}

/// Standard normal cumulative distribution.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / core::f64::consts::SQRT_2)
}
