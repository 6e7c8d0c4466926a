use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};
use crate::model::ModelParams;

use super::ensemble::{wrap, ParticleEnsemble};
use super::forces::{local_averages_into, FourierScratch, ForcePath, LocalAverages};

/// Largest Euler–Maruyama step accepted.
pub const MAX_SDE_DT: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdeConfig {
    pub dt: f64,
    pub t_final: f64,
    pub seed: u64,
    pub force_path: ForcePath,
    /// Record observables every `record_stride` steps.
    pub record_stride: usize,
    /// Keep an ensemble snapshot with every recorded sample.
    pub snapshots: bool,
    /// Use `-ξ` in place of every normal draw `ξ`.
    pub antithetic: bool,
}

impl SdeConfig {
    pub fn new(dt: f64, t_final: f64, seed: u64, force_path: ForcePath) -> Self {
        Self { dt, t_final, seed, force_path, record_stride: 1, snapshots: false, antithetic: false }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt <= MAX_SDE_DT) {
            return Err(invalid("dt", "dt in (0, 0.05] required"));
        }
        if !(self.t_final >= 0.0) || !self.t_final.is_finite() {
            return Err(invalid("t_final", "t_final must be ≥ 0"));
        }
        if let ForcePath::Fourier { n_modes: 0 } = self.force_path {
            return Err(invalid("n_modes", "n_modes ≥ 1 required for the Fourier path"));
        }
        Ok(())
    }

    /// Number of steps and the step actually used.
    pub fn schedule(&self) -> (usize, f64) {
        let steps = libm::ceil(self.t_final / self.dt - 1e-9).max(0.0) as usize;
        let h = if steps > 0 { self.t_final / steps as f64 } else { self.dt };
        (steps, h)
    }
}

/// One ChaCha8 stream per particle, all derived from the master seed, so a
/// particle's noise depends only on `(seed, index)`.
#[derive(Debug, Clone)]
pub struct NoiseStreams {
    streams: Vec<ChaCha8Rng>,
    sign: f64,
}

impl NoiseStreams {
    pub fn new(seed: u64, n: usize, antithetic: bool) -> Self {
        let streams = (0..n as u64)
            .map(|i| {
                let mut r = ChaCha8Rng::seed_from_u64(seed);
                r.set_stream(i);
                r
            })
            .collect();
        Self { streams, sign: if antithetic { -1.0 } else { 1.0 } }
    }

    pub fn len(&self) -> usize {
        self.streams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.streams.is_empty()
    }

    /// Next standard normal for particle `i`.
    #[inline]
    pub fn draw(&mut self, i: usize) -> f64 {
        let z: f64 = self.streams[i].sample(StandardNormal);
        self.sign * z
    }
}

/// Reusable buffers for stepping one ensemble.
#[derive(Debug, Clone, Default)]
pub struct EmStepper {
    averages: Vec<f64>,
    scratch: FourierScratch,
}

impl EmStepper {
    /// Local averages of the current state (kept for the next step).
    pub fn averages(&mut self, e: &ParticleEnsemble, p: &ModelParams, path: ForcePath) -> &[f64] {
        self.averages.resize(e.len(), 0.0);
        local_averages_into(e, &p.kernel, path, &mut self.averages, &mut self.scratch);
        &self.averages
    }

    /// Advances `e` in place using the averages from the last call to
    /// [`EmStepper::averages`].
    pub fn advance(&mut self, e: &mut ParticleEnsemble, p: &ModelParams, dt: f64, noise: &mut NoiseStreams) {
        let amp = libm::sqrt(2.0 * p.sigma * dt);
        for i in 0..e.len() {
            let v = e.velocities[i];
            e.positions[i] = wrap(e.positions[i] + v * dt);
            e.velocities[i] = v + (p.herding.eval(self.averages[i]) - v) * dt + amp * noise.draw(i);
        }
        e.time += dt;
    }
}

/// One Euler–Maruyama step:
/// `x ← x + v dt`, `v ← v + (G(M_i) - v) dt + √(2σ dt) ξ_i`.
pub fn em_step(e: &ParticleEnsemble, p: &ModelParams, cfg: &SdeConfig, noise: &mut NoiseStreams) -> ParticleEnsemble {
    let mut out = e.clone();
    let mut st = EmStepper::default();
    st.averages(&out, p, cfg.force_path);
    st.advance(&mut out, p, cfg.dt, noise);
    out
}

/// Observables of one recorded state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleSample {
    pub t: f64,
    pub mean_v: f64,
    pub var_v: f64,
    pub order_param: f64,
}

impl ParticleSample {
    pub fn of(e: &ParticleEnsemble) -> Self {
        let m = e.mean_velocity();
        Self { t: e.time, mean_v: m, var_v: e.velocity_variance(), order_param: libm::fabs(m) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<ParticleSample>,
    pub snapshots: Vec<ParticleEnsemble>,
    pub last: ParticleEnsemble,
}

/// Simulates to `cfg.t_final`, recording every `record_stride` steps and at
/// the end.
pub fn simulate(e0: &ParticleEnsemble, p: &ModelParams, cfg: &SdeConfig) -> Result<Trajectory> {
    let mut samples = Vec::new();
    let mut snapshots = Vec::new();
    let (steps, _) = cfg.schedule();
    let stride = cfg.record_stride.max(1);
    let last = simulate_with(e0, p, cfg, |k, e, _| {
        if k % stride == 0 || k == steps {
            samples.push(ParticleSample::of(e));
            if cfg.snapshots {
                snapshots.push(e.clone());
            }
        }
    })?;
    Ok(Trajectory { samples, snapshots, last })
}

/// Simulates to `cfg.t_final`, calling `observer(k, state, averages)` before
/// step `k` (with the averages that step uses) and once more on the final
/// state.
pub fn simulate_with(
    e0: &ParticleEnsemble,
    p: &ModelParams,
    cfg: &SdeConfig,
    mut observer: impl FnMut(usize, &ParticleEnsemble, &LocalAverages),
) -> Result<ParticleEnsemble> {
    cfg.validate()?;
    let (steps, h) = cfg.schedule();
    let mut e = e0.clone();
    let mut noise = NoiseStreams::new(cfg.seed, e.len(), cfg.antithetic);
    let mut st = EmStepper::default();
    let mut avg = LocalAverages { values: vec![] };
    for k in 0..=steps {
        avg.values.clear();
        avg.values.extend_from_slice(st.averages(&e, p, cfg.force_path));
        observer(k, &e, &avg);
        if k < steps {
            st.advance(&mut e, p, h, &mut noise);
        }
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homogeneous::{integrate_moments, MomentState};
    use crate::model::{HerdingFunction, InteractionKernel};

    fn params(sigma: f64, kernel: InteractionKernel) -> ModelParams {
        ModelParams::new(sigma, HerdingFunction::rational(1.0).unwrap(), kernel).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(SdeConfig::new(0.1, 1.0, 0, ForcePath::Direct).validate().is_err());
        assert!(SdeConfig::new(0.01, 1.0, 0, ForcePath::Fourier { n_modes: 0 }).validate().is_err());
        assert!(SdeConfig::new(0.01, 1.0, 0, ForcePath::Direct).validate().is_ok());
    }

    #[test]
    fn deterministic_fixed_point() {
        let p = ModelParams::deterministic(HerdingFunction::rational(1.0).unwrap(), InteractionKernel::von_mises(3.0).unwrap())
            .unwrap();
        let e = ParticleEnsemble::new(alloc::vec![0.1, 0.5, 0.9], alloc::vec![1.0; 3]).unwrap();
        let cfg = SdeConfig::new(0.01, 0.01, 1, ForcePath::Direct);
        let out = em_step(&e, &p, &cfg, &mut NoiseStreams::new(1, 3, false));
        for (i, v) in out.velocities.iter().enumerate() {
            assert!((v - 1.0).abs() < 1e-15);
            assert!((out.positions[i] - wrap(e.positions[i] + 0.01)).abs() < 1e-15);
        }
    }

    #[test]
    fn single_particle_follows_mean_ode() {
        let p = ModelParams::deterministic(HerdingFunction::rational(1.0).unwrap(), InteractionKernel::uniform()).unwrap();
        let e = ParticleEnsemble::new(alloc::vec![0.3], alloc::vec![0.5]).unwrap();
        let dt = 1e-3;
        let cfg = SdeConfig::new(dt, 3.0, 4, ForcePath::Direct);
        let tr = simulate(&e, &p, &cfg).unwrap();
        let m = integrate_moments(&MomentState::gaussian(0.5, 0.0, 2), &p, 3.0, 1e-3).unwrap();
        assert!((tr.last.velocities[0] - m.moments[1]).abs() < 2.0 * dt, "{} {}", tr.last.velocities[0], m.moments[1]);
    }

    #[test]
    fn streams_are_independent_of_population() {
        let mut a = NoiseStreams::new(42, 10, false);
        let mut b = NoiseStreams::new(42, 3, false);
        let mut c = NoiseStreams::new(42, 10, true);
        for _ in 0..5 {
            for i in 0..3 {
                let (x, y, z) = (a.draw(i), b.draw(i), c.draw(i));
                assert_eq!(x, y);
                assert_eq!(x, -z);
            }
        }
    }

    #[test]
    fn mirrored_run_mirrors_mean_velocity() {
        let p = params(0.25, InteractionKernel::von_mises(4.0).unwrap());
        let e = ParticleEnsemble::gaussian_uniform(200, 0.3, 0.25, 8).unwrap();
        let k = InteractionKernel::von_mises(4.0).unwrap();
        let cfg = SdeConfig::new(0.01, 2.0, 99, ForcePath::fourier_for(&k));
        let a = simulate(&e, &p, &cfg).unwrap();
        let b = simulate(&e.mirrored(), &p, &SdeConfig { antithetic: true, ..cfg }).unwrap();
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert!((x.mean_v + y.mean_v).abs() < 1e-9, "{} {}", x.mean_v, y.mean_v);
        }
    }

    #[test]
    fn same_seed_same_trajectory() {
        let p = params(0.25, InteractionKernel::uniform());
        let e = ParticleEnsemble::gaussian_uniform(50, 0.5, 0.25, 1).unwrap();
        let cfg = SdeConfig::new(0.02, 1.0, 5, ForcePath::Direct);
        assert_eq!(simulate(&e, &p, &cfg).unwrap(), simulate(&e, &p, &cfg).unwrap());
    }

    #[test]
    fn one_step_drift_and_variance() {
        // E[Δv] = (G(M) - v) dt, Var[Δv] = 2σ dt
        let sigma = 0.25;
        let dt = 0.01;
        let p = params(sigma, InteractionKernel::uniform());
        let e = ParticleEnsemble::new(alloc::vec![0.2, 0.7], alloc::vec![0.2, 0.6]).unwrap();
        let reps = 1_000_000usize;
        let mut noise = NoiseStreams::new(17, 2, false);
        let b = p.herding.eval(0.4);
        let (mut s, mut s2) = (0.0, 0.0);
        let mut st = EmStepper::default();
        for _ in 0..reps {
            let mut x = e.clone();
            st.averages(&x, &p, ForcePath::Direct);
            st.advance(&mut x, &p, dt, &mut noise);
            let d = x.velocities[0] - 0.2;
            s += d;
            s2 += d * d;
        }
        let mean = s / reps as f64;
        let var = s2 / reps as f64 - mean * mean;
        let want_var = 2.0 * sigma * dt;
        let se_mean = libm::sqrt(want_var / reps as f64);
        assert!((mean - (b - 0.2) * dt).abs() < 4.0 * se_mean);
        // Var of a sample variance of normals is 2 s⁴ / n
        let se_var = want_var * libm::sqrt(2.0 / reps as f64);
        assert!((var - want_var).abs() < 4.0 * se_var);
    }
}
