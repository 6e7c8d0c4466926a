//! Cubic spline on `[0, u_max]` with a zero second derivative at the origin
//! and a zero slope at `u_max`, extended as a constant beyond `u_max`.
//!
//! The condition at the origin makes the odd reflection `u ↦ -S(-u)` a C²
//! function, which is what the tabulated herding law relies on.

use alloc::vec;
use alloc::vec::Vec;

use super::tridiag;

#[derive(Debug, Clone, PartialEq)]
pub struct OddSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    second: Vec<f64>,
    integral_at_knot: Vec<f64>,
}

impl OddSpline {
    /// `knots` must start at 0, be strictly increasing, and have the same
    /// length as `values` (at least 2). `values[0]` is forced to 0.
    pub fn new(knots: &[f64], values: &[f64]) -> Option<Self> {
        let n = knots.len();
        if n < 2 || values.len() != n || knots[0] != 0.0 {
            return None;
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) || values.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let mut g = values.to_vec();
        g[0] = 0.0;
        let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
        // unknowns M_1..M_{n-1}; M_0 = 0
        let m = n - 1;
        let mut lower = vec![0.0; m];
        let mut diag = vec![0.0; m];
        let mut upper = vec![0.0; m];
        let mut rhs = vec![0.0; m];
        for r in 0..m {
            let i = r + 1;
            if i < n - 1 {
                lower[r] = h[i - 1];
                diag[r] = 2.0 * (h[i - 1] + h[i]);
                upper[r] = h[i];
                rhs[r] = 6.0 * ((g[i + 1] - g[i]) / h[i] - (g[i] - g[i - 1]) / h[i - 1]);
            } else {
                lower[r] = h[i - 1];
                diag[r] = 2.0 * h[i - 1];
                rhs[r] = -6.0 * (g[i] - g[i - 1]) / h[i - 1];
            }
        }
        let mut scratch = vec![0.0; m];
        tridiag::solve_in_place(&lower, &diag, &upper, &mut rhs, &mut scratch);
        let mut second = vec![0.0; n];
        second[1..].copy_from_slice(&rhs);
        let mut s = Self { knots: knots.to_vec(), values: g, second, integral_at_knot: vec![0.0; n] };
        for i in 1..n {
            s.integral_at_knot[i] = s.integral_at_knot[i - 1] + s.segment_integral(i - 1, h[i - 1]);
        }
        Some(s)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn segment(&self, u: f64) -> usize {
        match self.knots.binary_search_by(|k| k.partial_cmp(&u).unwrap()) {
            Ok(i) => i.min(self.knots.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.knots.len() - 2),
        }
    }

    fn coeffs(&self, i: usize) -> (f64, f64, f64, f64, f64) {
        let h = self.knots[i + 1] - self.knots[i];
        let (mi, mj) = (self.second[i], self.second[i + 1]);
        let b = (self.values[i + 1] - self.values[i]) / h - h * (2.0 * mi + mj) / 6.0;
        (h, self.values[i], b, mi, mj)
    }

    fn segment_integral(&self, i: usize, t: f64) -> f64 {
        let (h, g, b, mi, mj) = self.coeffs(i);
        g * t + 0.5 * b * t * t + mi * t * t * t / 6.0 + (mj - mi) / (24.0 * h) * t * t * t * t
    }

    /// Value for `u ≥ 0`.
    pub fn eval_pos(&self, u: f64) -> f64 {
        let last = *self.knots.last().unwrap();
        if u >= last {
            return *self.values.last().unwrap();
        }
        let i = self.segment(u);
        let (h, g, b, mi, mj) = self.coeffs(i);
        let t = u - self.knots[i];
        g + b * t + 0.5 * mi * t * t + (mj - mi) / (6.0 * h) * t * t * t
    }

    /// Slope for `u ≥ 0`.
    pub fn deriv_pos(&self, u: f64) -> f64 {
        let last = *self.knots.last().unwrap();
        if u >= last {
            return 0.0;
        }
        let i = self.segment(u);
        let (h, _, b, mi, mj) = self.coeffs(i);
        let t = u - self.knots[i];
        b + mi * t + (mj - mi) / (2.0 * h) * t * t
    }

    /// `∫_0^u S` for `u ≥ 0` (exact for the piecewise cubic).
    pub fn integral_pos(&self, u: f64) -> f64 {
        let n = self.knots.len();
        let last = self.knots[n - 1];
        if u >= last {
            return self.integral_at_knot[n - 1] + self.values[n - 1] * (u - last);
        }
        let i = self.segment(u);
        self.integral_at_knot[i] + self.segment_integral(i, u - self.knots[i])
    }
}
