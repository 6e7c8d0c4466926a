use alloc::format;
use alloc::vec::Vec;

use crate::chang_cooper::ChangCooper;
use crate::error::{invalid, Error, Result};
use crate::model::ModelParams;

/// Uniform cell-centered grid on `[v_min, v_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VGrid {
    v_min: f64,
    v_max: f64,
    n: usize,
}

impl VGrid {
    pub fn new(v_min: f64, v_max: f64, n: usize) -> Result<Self> {
        if !(v_min < 0.0 && 0.0 < v_max) || !v_min.is_finite() || !v_max.is_finite() {
            return Err(invalid("v_range", "v_min < 0 < v_max required"));
        }
        if n < 16 {
            return Err(invalid("n_v", "at least 16 velocity cells required"));
        }
        Ok(Self { v_min, v_max, n })
    }

    /// Symmetric grid with `v_max = max(|mean|, 1) + 7√σ`: one standard
    /// deviation beyond the `6√σ` minimum, so the truncated Gaussian tail
    /// moves the mean of `N(±1, σ)` by less than 1e-10.
    pub fn truncated(mean: f64, sigma: f64, n: usize) -> Result<Self> {
        let half = libm::fabs(mean).max(1.0) + 7.0 * libm::sqrt(sigma);
        Self::new(-half, half, n)
    }

    pub fn v_min(&self) -> f64 {
        self.v_min
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dv(&self) -> f64 {
        (self.v_max - self.v_min) / self.n as f64
    }

    pub fn center(&self, j: usize) -> f64 {
        self.v_min + (j as f64 + 0.5) * self.dv()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.center(j)).collect()
    }

    /// Whether the grid reaches `max(|mean|, 1) + 6√σ` on both sides.
    pub fn covers(&self, mean: f64, sigma: f64) -> bool {
        let need = libm::fabs(mean).max(1.0) + 6.0 * libm::sqrt(sigma);
        self.v_max >= need * (1.0 - 1e-12) && -self.v_min >= need * (1.0 - 1e-12)
    }

    /// Cell index containing `v`, clamped to the boundary cells.
    pub fn locate(&self, v: f64) -> usize {
        let j = libm::floor((v - self.v_min) / self.dv());
        if j < 0.0 {
            0
        } else {
            (j as usize).min(self.n - 1)
        }
    }
}

/// Velocity density given by its cell values on a [`VGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct VDensity {
    pub grid: VGrid,
    pub values: Vec<f64>,
}

impl VDensity {
    /// Validates nonnegativity and unit mass (±1e-10).
    pub fn new(grid: VGrid, values: Vec<f64>) -> Result<Self> {
        let f = Self { grid, values };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.grid.len() {
            return Err(Error::InvalidDensity(format!(
                "{} values for a grid of {} cells",
                self.values.len(),
                self.grid.len()
            )));
        }
        if let Some(j) = self.values.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidDensity(format!("cell {j} holds {}", self.values[j])));
        }
        let mass = self.mass();
        if (mass - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidDensity(format!("mass {mass} differs from 1")));
        }
        Ok(())
    }

    /// Normalized cell-center samples of `f`.
    pub fn from_fn(grid: VGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let mut values: Vec<f64> = (0..grid.len()).map(|j| f(grid.center(j))).collect();
        let mass: f64 = values.iter().sum::<f64>() * grid.dv();
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::InvalidDensity(format!("cannot normalize a profile of mass {mass}")));
        }
        for v in values.iter_mut() {
            *v /= mass;
        }
        Self::new(grid, values)
    }

    /// Discrete Gaussian: cell-center samples of `N(mean, variance)`, renormalized.
    pub fn gaussian(grid: VGrid, mean: f64, variance: f64) -> Result<Self> {
        if !(variance > 0.0) {
            return Err(invalid("variance", "variance must be > 0"));
        }
        Self::from_fn(grid, |v| libm::exp(-(v - mean) * (v - mean) / (2.0 * variance)))
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dv()
    }

    /// `Σ v^k f dv`.
    pub fn moment(&self, k: i32) -> f64 {
        let dv = self.grid.dv();
        self.values.iter().enumerate().map(|(j, f)| libm::pow(self.grid.center(j), k as f64) * f).sum::<f64>() * dv
    }

    pub fn mean(&self) -> f64 {
        let dv = self.grid.dv();
        self.values.iter().enumerate().map(|(j, f)| self.grid.center(j) * f).sum::<f64>() * dv
    }

    /// Moments `M_0..=M_k` computed from the cell values.
    pub fn moments(&self, k: usize) -> Vec<f64> {
        let dv = self.grid.dv();
        let mut m = alloc::vec![0.0; k + 1];
        for (j, &f) in self.values.iter().enumerate() {
            let v = self.grid.center(j);
            let mut p = f * dv;
            for mk in m.iter_mut() {
                *mk += p;
                p *= v;
            }
        }
        m
    }

    pub fn variance(&self) -> f64 {
        let m = self.moments(2);
        m[2] / m[0] - (m[1] / m[0]) * (m[1] / m[0])
    }

    pub fn l1_distance(&self, other: &VDensity) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("velocity grids differ".into()));
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| libm::fabs(a - b)).sum::<f64>() * self.grid.dv())
    }
}

/// Stepper for the space-homogeneous equation, reusing its work buffers.
#[derive(Debug, Clone)]
pub struct HomogeneousSolver {
    grid: VGrid,
    scheme: ChangCooper,
}

impl HomogeneousSolver {
    pub fn new(grid: VGrid) -> Self {
        Self { grid, scheme: ChangCooper::new(&grid.centers(), grid.dv()) }
    }

    /// One implicit step with the drift `G(M_1) - v` frozen at the current mean.
    pub fn step(&mut self, f: &mut VDensity, p: &ModelParams, dt: f64) -> Result<()> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(invalid("dt", "dt must be > 0"));
        }
        if f.grid != self.grid {
            return Err(Error::GridMismatch("density grid differs from solver grid".into()));
        }
        p.require_diffusion()?;
        f.validate()?;
        let b = p.herding.eval(f.mean());
        self.scheme.step(&mut f.values, b, p.sigma, dt);
        Ok(())
    }
}

/// Advances a velocity density by one step of `dt`.
pub fn homogeneous_step(f: &VDensity, p: &ModelParams, dt: f64) -> Result<VDensity> {
    let mut out = f.clone();
    HomogeneousSolver::new(f.grid).step(&mut out, p, dt)?;
    Ok(out)
}
