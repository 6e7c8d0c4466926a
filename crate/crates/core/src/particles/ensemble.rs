use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::pde::{DensityField, PhaseGrid};

/// Positions on the torus `[0, 1)` and velocities of `N` particles.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    pub positions: Vec<f64>,
    pub velocities: Vec<f64>,
    pub time: f64,
}

/// Reduces `x` modulo 1 into `[0, 1)`.
#[inline]
pub fn wrap(x: f64) -> f64 {
    let y = x - libm::floor(x);
    if y >= 1.0 {
        0.0
    } else {
        y
    }
}

impl ParticleEnsemble {
    /// Positions are wrapped into `[0, 1)`; velocities must be finite.
    pub fn new(positions: Vec<f64>, velocities: Vec<f64>) -> Result<Self> {
        if positions.len() != velocities.len() {
            return Err(invalid("n", "positions and velocities differ in length"));
        }
        if positions.is_empty() {
            return Err(invalid("n", "at least one particle required"));
        }
        if let Some(i) = velocities.iter().chain(&positions).position(|v| !v.is_finite()) {
            return Err(Error::InvalidDensity(format!("particle {} is not finite", i % positions.len())));
        }
        Ok(Self { positions: positions.into_iter().map(wrap).collect(), velocities, time: 0.0 })
    }

    /// `N` particles with uniform positions and `N(mean, variance)` velocities.
    pub fn gaussian_uniform(n: usize, mean: f64, variance: f64, seed: u64) -> Result<Self> {
        if !(variance >= 0.0) {
            return Err(invalid("variance", "variance must be ≥ 0"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sd = libm::sqrt(variance);
        let mut x = Vec::with_capacity(n);
        let mut v = Vec::with_capacity(n);
        for _ in 0..n {
            x.push(rng.random::<f64>());
            let z: f64 = rng.sample(StandardNormal);
            v.push(mean + sd * z);
        }
        Self::new(x, v)
    }

    /// The reflected state `(x, v) → (-x, -v)`.
    pub fn mirrored(&self) -> Self {
        Self {
            positions: self.positions.iter().map(|x| wrap(-x)).collect(),
            velocities: self.velocities.iter().map(|v| -v).collect(),
            time: self.time,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn mean_velocity(&self) -> f64 {
        self.velocities.iter().sum::<f64>() / self.len() as f64
    }

    /// Unbiased sample variance of the velocities (0 for a single particle).
    pub fn velocity_variance(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean_velocity();
        self.velocities.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64
    }
}

/// Draws `n` i.i.d. particles from the piecewise-constant density `f`:
/// a cell is chosen with probability `f dx dv`, then the point is uniform in
/// the cell.
pub fn sample_from_density(f: &DensityField, n: usize, seed: u64) -> Result<ParticleEnsemble> {
    f.validate()?;
    let g = f.grid;
    let cell = g.dx() * g.dv();
    let mut cdf = Vec::with_capacity(f.values.len());
    let mut acc = 0.0;
    for v in &f.values {
        acc += v * cell;
        cdf.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut xs, mut vs) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let n_v = g.n_v();
    for _ in 0..n {
        let u = rng.random::<f64>() * acc;
        let c = cdf.partition_point(|&q| q <= u).min(cdf.len() - 1);
        let (i, j) = (c / n_v, c % n_v);
        xs.push((i as f64 + rng.random::<f64>()) * g.dx());
        vs.push(g.vgrid().v_min() + (j as f64 + rng.random::<f64>()) * g.dv());
    }
    ParticleEnsemble::new(xs, vs)
}

/// Normalized cell-count histogram of an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalHistogram {
    pub density: DensityField,
    /// Particles whose velocity fell outside the grid; they are counted in the
    /// nearest boundary cell.
    pub out_of_range: usize,
}

pub fn empirical_histogram(e: &ParticleEnsemble, grid: PhaseGrid) -> Result<EmpiricalHistogram> {
    let mut values = alloc::vec![0.0; grid.size()];
    let w = 1.0 / (e.len() as f64 * grid.dx() * grid.dv());
    let vg = grid.vgrid();
    let mut out_of_range = 0;
    for (x, v) in e.positions.iter().zip(&e.velocities) {
        if *v < vg.v_min() || *v >= vg.v_max() {
            out_of_range += 1;
        }
        let c = grid.locate_x(*x) * grid.n_v() + vg.locate(*v);
        values[c] += w;
    }
    Ok(EmpiricalHistogram { density: DensityField::new(grid, values)?, out_of_range })
}
