use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::homogeneous::{VDensity, VGrid};

/// Periodic `x` cells on `[0, 1)` times a velocity grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseGrid {
    n_x: usize,
    vgrid: VGrid,
}

impl PhaseGrid {
    /// `n_x` must be a power of two and at least 16.
    pub fn new(n_x: usize, vgrid: VGrid) -> Result<Self> {
        if n_x < 16 || !n_x.is_power_of_two() {
            return Err(invalid("n_x", "n_x must be a power of two ≥ 16"));
        }
        Ok(Self { n_x, vgrid })
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_v(&self) -> usize {
        self.vgrid.len()
    }

    pub fn vgrid(&self) -> &VGrid {
        &self.vgrid
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.n_x as f64
    }

    pub fn dv(&self) -> f64 {
        self.vgrid.dv()
    }

    /// Center of spatial cell `i`.
    pub fn x(&self, i: usize) -> f64 {
        (i as f64 + 0.5) / self.n_x as f64
    }

    pub fn v(&self, j: usize) -> f64 {
        self.vgrid.center(j)
    }

    /// Total number of cells.
    pub fn size(&self) -> usize {
        self.n_x * self.vgrid.len()
    }

    /// Spatial cell containing `x` (reduced modulo 1).
    pub fn locate_x(&self, x: f64) -> usize {
        let u = x - libm::floor(x);
        ((u * self.n_x as f64) as usize).min(self.n_x - 1)
    }
}

/// Phase-space density, stored x-major: `values[i * n_v + j]` is the cell
/// `(x_i, v_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    pub grid: PhaseGrid,
    pub values: Vec<f64>,
}

impl DensityField {
    /// Validates nonnegativity and unit mass (±1e-10).
    pub fn new(grid: PhaseGrid, values: Vec<f64>) -> Result<Self> {
        let f = Self { grid, values };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.grid.size() {
            return Err(Error::InvalidDensity(format!(
                "{} values for a grid of {} cells",
                self.values.len(),
                self.grid.size()
            )));
        }
        if let Some(c) = self.values.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
            let n_v = self.grid.n_v();
            return Err(Error::InvalidDensity(format!(
                "cell (x {}, v {}) holds {}",
                c / n_v,
                c % n_v,
                self.values[c]
            )));
        }
        let mass = self.mass();
        if (mass - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidDensity(format!("mass {mass} differs from 1")));
        }
        Ok(())
    }

    /// Normalized cell-center samples of `f(x, v)`.
    pub fn from_fn(grid: PhaseGrid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let n_v = grid.n_v();
        let mut values = Vec::with_capacity(grid.size());
        for i in 0..grid.n_x() {
            let x = grid.x(i);
            for j in 0..n_v {
                values.push(f(x, grid.v(j)));
            }
        }
        let mass = values.iter().sum::<f64>() * grid.dx() * grid.dv();
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::InvalidDensity(format!("cannot normalize a profile of mass {mass}")));
        }
        for v in values.iter_mut() {
            *v /= mass;
        }
        Self::new(grid, values)
    }

    /// `ρ(x) ⊗ f(v)` with `ρ` sampled at cell centers and normalized to unit
    /// mean. Positions where `rho` is negative are rejected.
    pub fn product(n_x: usize, rho: impl Fn(f64) -> f64, fv: &VDensity) -> Result<Self> {
        let grid = PhaseGrid::new(n_x, fv.grid)?;
        let r: Vec<f64> = (0..n_x).map(|i| rho(grid.x(i))).collect();
        let total = r.iter().sum::<f64>() * grid.dx();
        if !(total > 0.0) || r.iter().any(|x| !(*x >= 0.0)) {
            return Err(invalid("rho", "spatial profile must be nonnegative with positive mass"));
        }
        let mut values = Vec::with_capacity(grid.size());
        for ri in &r {
            values.extend(fv.values.iter().map(|f| f * ri / total));
        }
        Self::new(grid, values)
    }

    /// `fv` copied into every spatial cell.
    pub fn homogeneous(n_x: usize, fv: &VDensity) -> Result<Self> {
        Self::product(n_x, |_| 1.0, fv)
    }

    pub fn column(&self, i: usize) -> &[f64] {
        let n_v = self.grid.n_v();
        &self.values[i * n_v..(i + 1) * n_v]
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dx() * self.grid.dv()
    }

    /// `ρ(x_i) = Σ_v f dv`.
    pub fn x_marginal(&self) -> Vec<f64> {
        let dv = self.grid.dv();
        (0..self.grid.n_x()).map(|i| self.column(i).iter().sum::<f64>() * dv).collect()
    }

    /// `j(x_i) = Σ_v v f dv`.
    pub fn momentum(&self) -> Vec<f64> {
        let g = self.grid;
        (0..g.n_x())
            .map(|i| self.column(i).iter().enumerate().map(|(j, f)| g.v(j) * f).sum::<f64>() * g.dv())
            .collect()
    }

    /// Velocity marginal `Σ_x f dx` as raw cell values (no validation).
    pub fn v_marginal_values(&self) -> Vec<f64> {
        let n_v = self.grid.n_v();
        let dx = self.grid.dx();
        let mut out = vec![0.0; n_v];
        for i in 0..self.grid.n_x() {
            for (o, f) in out.iter_mut().zip(self.column(i)) {
                *o += f * dx;
            }
        }
        out
    }

    pub fn v_marginal(&self) -> Result<VDensity> {
        VDensity::new(self.grid.vgrid, self.v_marginal_values())
    }

    /// `∫∫ v f dx dv`.
    pub fn mean_velocity(&self) -> f64 {
        self.momentum().iter().sum::<f64>() * self.grid.dx()
    }

    /// Velocity moments `M_0..=M_k` of the whole field.
    pub fn v_moments(&self, k: usize) -> Vec<f64> {
        VDensity { grid: self.grid.vgrid, values: self.v_marginal_values() }.moments(k)
    }

    /// Largest `|ρ(x) - ρ̄|` over the spatial cells.
    pub fn x_uniformity_defect(&self) -> f64 {
        let rho = self.x_marginal();
        let mean = rho.iter().sum::<f64>() / rho.len() as f64;
        rho.iter().map(|r| libm::fabs(r - mean)).fold(0.0, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| libm::fabs(*v)).fold(0.0, f64::max)
    }
}
