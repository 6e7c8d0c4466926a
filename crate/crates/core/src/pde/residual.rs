use crate::error::Result;
use crate::model::ModelParams;

use super::field::DensityField;
use super::mean_field::{mean_field_from, ConvolutionPath, Convolver};

/// L1 norm of `∂_v(σ ∂_v f + v f) - v ∂_x f - G(M(x)) ∂_v f`, discretized with
/// centered second-order differences (periodic in `x`, zero outside the
/// velocity grid).
pub fn stationarity_residual(f: &DensityField, p: &ModelParams) -> Result<f64> {
    f.validate()?;
    let g = f.grid;
    let (n_x, n_v) = (g.n_x(), g.n_v());
    let (dx, dv) = (g.dx(), g.dv());
    let mut conv = Convolver::new(&p.kernel, n_x);
    let m = mean_field_from(f, &p.kernel, &mut conv, ConvolutionPath::Auto)?;
    let at = |i: usize, j: isize| -> f64 {
        if j < 0 || j >= n_v as isize {
            0.0
        } else {
            f.values[i * n_v + j as usize]
        }
    };
    let mut total = 0.0;
    for i in 0..n_x {
        let (ip, im) = ((i + 1) % n_x, (i + n_x - 1) % n_x);
        let b = p.herding.eval(m.values[i]);
        for j in 0..n_v {
            let jj = j as isize;
            let v = g.v(j);
            let (fl, fc, fr) = (at(i, jj - 1), at(i, jj), at(i, jj + 1));
            let dxf = (at(ip, jj) - at(im, jj)) / (2.0 * dx);
            let dvf = (fr - fl) / (2.0 * dv);
            let diffusion = p.sigma * (fr - 2.0 * fc + fl) / (dv * dv);
            let friction = ((v + dv) * fr - (v - dv) * fl) / (2.0 * dv);
            total += libm::fabs(diffusion + friction - v * dxf - b * dvf);
        }
    }
    Ok(total * dx * dv)
}
