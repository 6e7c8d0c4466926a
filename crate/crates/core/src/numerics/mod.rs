//! Small numerical kernels shared by the solvers.

pub mod fft;
pub mod special;
pub mod spline;
pub mod tridiag;

/// Least-squares slope and intercept of `y` against `x`.
///
/// Returns `None` when fewer than two points are given or all `x` coincide.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = x[..n].iter().sum::<f64>() / nf;
    let my = y[..n].iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for i in 0..n {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Slope of `ln y` against `ln x`; every entry must be positive.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.iter().chain(y.iter()).any(|&v| !(v > 0.0)) {
        return None;
    }
    let lx: alloc::vec::Vec<f64> = x.iter().map(|&v| libm::log(v)).collect();
    let ly: alloc::vec::Vec<f64> = y.iter().map(|&v| libm::log(v)).collect();
    linear_fit(&lx, &ly).map(|(s, _)| s)
}
