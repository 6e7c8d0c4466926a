use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

use crate::chang_cooper::ChangCooper;
use crate::error::{invalid, Error, Result};
use crate::model::{InteractionKernel, ModelParams};
use crate::numerics::fft::{wavenumber, Fft};

use super::field::{DensityField, PhaseGrid};
use super::mean_field::{mean_field_from, ConvolutionPath, Convolver, MeanField};

/// Values below this are reported as positivity violations rather than
/// round-off.
pub const CLIP_TOLERANCE: f64 = 1e-13;

/// Largest time step accepted by the splitting scheme.
pub const MAX_DT: f64 = 0.1;

/// Exact periodic shift `g(x) ← g(x - v τ)` of every velocity row, done in
/// Fourier space. The Nyquist mode keeps only its real part.
#[derive(Debug, Clone)]
pub struct Transport {
    n_x: usize,
    n_v: usize,
    fft: Fft,
    velocities: Vec<f64>,
    tau: f64,
    phases: Vec<Complex64>,
    buf: Vec<Complex64>,
}

impl Transport {
    pub fn new(grid: &PhaseGrid) -> Self {
        let n_x = grid.n_x();
        Self {
            n_x,
            n_v: grid.n_v(),
            fft: Fft::new(n_x),
            velocities: grid.vgrid().centers(),
            tau: f64::NAN,
            phases: Vec::new(),
            buf: vec![Complex64::new(0.0, 0.0); n_x],
        }
    }

    fn prepare(&mut self, tau: f64) {
        if self.tau == tau {
            return;
        }
        self.tau = tau;
        self.phases.clear();
        for &v in &self.velocities {
            for k in 0..self.n_x {
                let a = -2.0 * PI * wavenumber(k, self.n_x) * v * tau;
                self.phases.push(Complex64::new(libm::cos(a), libm::sin(a)));
            }
        }
    }

    /// Shifts `values` (x-major layout) by `v τ` in every row.
    pub fn shift(&mut self, values: &mut [f64], tau: f64) {
        self.prepare(tau);
        let (n_x, n_v) = (self.n_x, self.n_v);
        for j in 0..n_v {
            for i in 0..n_x {
                self.buf[i] = Complex64::new(values[i * n_v + j], 0.0);
            }
            self.fft.forward(&mut self.buf);
            for (b, ph) in self.buf.iter_mut().zip(&self.phases[j * n_x..(j + 1) * n_x]) {
                *b *= ph;
            }
            self.fft.inverse(&mut self.buf);
            for i in 0..n_x {
                values[i * n_v + j] = self.buf[i].re;
            }
        }
    }
}

/// What the positivity clip did during one step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepStats {
    /// Smallest cell value before clipping.
    pub min_value: f64,
    /// Mass `Σ |f⁻| dx dv` removed by the clip.
    pub clipped_mass: f64,
}

impl StepStats {
    pub fn violates_positivity(&self) -> bool {
        self.min_value < -CLIP_TOLERANCE
    }
}

/// Strang-split solver for the kinetic equation on one phase grid:
/// half transport, implicit velocity step with drift `G(M(x)) - v`, half
/// transport.
#[derive(Debug, Clone)]
pub struct KineticSolver {
    grid: PhaseGrid,
    kernel: InteractionKernel,
    conv: Convolver,
    transport: Transport,
    scheme: ChangCooper,
    path: ConvolutionPath,
    drift: Vec<f64>,
}

impl KineticSolver {
    pub fn new(grid: PhaseGrid, kernel: InteractionKernel) -> Self {
        Self {
            grid,
            kernel,
            conv: Convolver::new(&kernel, grid.n_x()),
            transport: Transport::new(&grid),
            scheme: ChangCooper::new(&grid.vgrid().centers(), grid.dv()),
            path: ConvolutionPath::Auto,
            drift: vec![0.0; grid.n_x()],
        }
    }

    pub fn with_path(mut self, path: ConvolutionPath) -> Self {
        self.path = path;
        self
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn mean_field(&mut self, f: &DensityField) -> Result<MeanField> {
        self.check_grid(f)?;
        mean_field_from(f, &self.kernel, &mut self.conv, self.path)
    }

    /// One nonlinear step; `M` is taken from `f` at the start of the step.
    pub fn step(&mut self, f: &mut DensityField, p: &ModelParams, dt: f64) -> Result<StepStats> {
        check_dt(dt)?;
        p.require_diffusion()?;
        self.check_grid(f)?;
        if p.kernel != self.kernel {
            return Err(invalid("kernel", "solver was built for a different kernel"));
        }
        f.validate()?;
        let m = mean_field_from(f, &self.kernel, &mut self.conv, self.path)?;
        let mut drift = core::mem::take(&mut self.drift);
        for (b, m) in drift.iter_mut().zip(&m.values) {
            *b = p.herding.eval(*m);
        }
        let stats = self.step_with_drift(f, &drift, p.sigma, dt);
        self.drift = drift;
        Ok(stats)
    }

    /// One step of the linear equation with the drift center `b(x)` given
    /// per spatial cell, followed by the positivity clip and mass
    /// renormalization.
    pub fn step_with_drift(&mut self, f: &mut DensityField, b: &[f64], sigma: f64, dt: f64) -> StepStats {
        let dxdv = self.grid.dx() * self.grid.dv();
        let mass0 = f.values.iter().sum::<f64>() * dxdv;
        self.advance(&mut f.values, b, sigma, dt);
        clip_and_renormalize(&mut f.values, mass0, dxdv)
    }

    /// Raw split step on signed data: no clipping, no renormalization.
    pub fn advance(&mut self, values: &mut [f64], b: &[f64], sigma: f64, dt: f64) {
        debug_assert_eq!(values.len(), self.grid.size());
        debug_assert_eq!(b.len(), self.grid.n_x());
        let n_v = self.grid.n_v();
        self.transport.shift(values, 0.5 * dt);
        for (col, &bi) in values.chunks_exact_mut(n_v).zip(b) {
            self.scheme.step(col, bi, sigma, dt);
        }
        self.transport.shift(values, 0.5 * dt);
    }

    /// Pure transport by `tau`.
    pub fn transport(&mut self, values: &mut [f64], tau: f64) {
        self.transport.shift(values, tau);
    }

    fn check_grid(&self, f: &DensityField) -> Result<()> {
        if f.grid != self.grid {
            return Err(Error::GridMismatch("density grid differs from solver grid".into()));
        }
        Ok(())
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt <= MAX_DT) {
        return Err(invalid("dt", "dt in (0, 0.1] required"));
    }
    Ok(())
}

fn clip_and_renormalize(values: &mut [f64], mass0: f64, dxdv: f64) -> StepStats {
    let mut min_value = f64::INFINITY;
    let mut clipped = 0.0;
    for v in values.iter_mut() {
        min_value = min_value.min(*v);
        if *v < 0.0 {
            clipped -= *v;
            *v = 0.0;
        }
    }
    if clipped > 0.0 {
        let mass = values.iter().sum::<f64>() * dxdv;
        let scale = mass0 / mass;
        for v in values.iter_mut() {
            *v *= scale;
        }
    }
    StepStats { min_value, clipped_mass: clipped * dxdv }
}

/// Advances `f` by one step of `dt ≤ 0.1`.
pub fn kinetic_step(f: &DensityField, p: &ModelParams, dt: f64) -> Result<DensityField> {
    let mut out = f.clone();
    KineticSolver::new(f.grid, p.kernel).step(&mut out, p, dt)?;
    Ok(out)
}

/// Observables recorded by [`solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct PdeSample {
    pub t: f64,
    pub mass: f64,
    pub mean_velocity: f64,
    /// Moments `M_0..=M_4` of the velocity marginal.
    pub v_moments: [f64; 5],
    pub x_marginal: Vec<f64>,
    pub mean_field: Vec<f64>,
}

impl PdeSample {
    pub fn v_variance(&self) -> f64 {
        let m = &self.v_moments;
        m[2] / m[0] - (m[1] / m[0]) * (m[1] / m[0])
    }

    /// `κ₄ / κ₂²` of the velocity marginal.
    pub fn v_excess_kurtosis(&self) -> f64 {
        let m = &self.v_moments;
        let mu = m[1] / m[0];
        let c2 = m[2] / m[0] - mu * mu;
        let c4 = m[4] / m[0] - 4.0 * mu * m[3] / m[0] + 6.0 * mu * mu * m[2] / m[0] - 3.0 * mu * mu * mu * mu;
        c4 / (c2 * c2) - 3.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdeDiagnostics {
    pub samples: Vec<PdeSample>,
    pub steps: usize,
    pub dt: f64,
    /// Smallest pre-clip value seen over the run.
    pub min_value: f64,
    /// Total mass removed by positivity clipping.
    pub clipped_mass: f64,
}

impl PdeDiagnostics {
    pub fn positivity_ok(&self) -> bool {
        self.min_value >= -CLIP_TOLERANCE
    }
}

/// Solves to `t_final` recording every step.
pub fn solve(f0: &DensityField, p: &ModelParams, t_final: f64, dt: f64) -> Result<(DensityField, PdeDiagnostics)> {
    solve_with(f0, p, t_final, dt, 1, |_, _| {})
}

/// Solves to `t_final` with steps of at most `dt`, recording a sample (and
/// calling `observer`) at `t = 0`, every `stride` steps and at the end.
pub fn solve_with(
    f0: &DensityField,
    p: &ModelParams,
    t_final: f64,
    dt: f64,
    stride: usize,
    mut observer: impl FnMut(&PdeSample, &DensityField),
) -> Result<(DensityField, PdeDiagnostics)> {
    check_dt(dt)?;
    if !(t_final >= 0.0) || !t_final.is_finite() {
        return Err(invalid("t_final", "t_final must be ≥ 0"));
    }
    f0.validate()?;
    let steps = step_count(t_final, dt);
    let h = if steps > 0 { t_final / steps as f64 } else { dt };
    let stride = stride.max(1);
    let mut solver = KineticSolver::new(f0.grid, p.kernel);
    let mut f = f0.clone();
    let mut diag = PdeDiagnostics {
        samples: Vec::new(),
        steps,
        dt: h,
        min_value: f64::INFINITY,
        clipped_mass: 0.0,
    };
    let mut record = |solver: &mut KineticSolver, f: &DensityField, t: f64, diag: &mut PdeDiagnostics| -> Result<()> {
        let m = solver.mean_field(f)?;
        let vm = f.v_moments(4);
        let s = PdeSample {
            t,
            mass: f.mass(),
            mean_velocity: vm[1],
            v_moments: [vm[0], vm[1], vm[2], vm[3], vm[4]],
            x_marginal: f.x_marginal(),
            mean_field: m.values,
        };
        observer(&s, f);
        diag.samples.push(s);
        Ok(())
    };
    record(&mut solver, &f, 0.0, &mut diag)?;
    for k in 1..=steps {
        let st = solver.step(&mut f, p, h)?;
        diag.min_value = diag.min_value.min(st.min_value);
        diag.clipped_mass += st.clipped_mass;
        if k % stride == 0 || k == steps {
            record(&mut solver, &f, k as f64 * h, &mut diag)?;
        }
    }
    Ok((f, diag))
}

pub(crate) fn step_count(t_final: f64, dt: f64) -> usize {
    libm::ceil(t_final / dt - 1e-9).max(0.0) as usize
}
