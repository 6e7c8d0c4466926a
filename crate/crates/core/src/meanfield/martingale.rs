use alloc::vec;
use alloc::vec::Vec;

use crate::model::ModelParams;
use crate::particles::{compute_local_averages, ForcePath, ParticleEnsemble};

use super::test_functions::TestFunction;

/// Online reconstruction of
/// `M_t^ψ = ⟨S_t, ψ⟩ - ⟨S_0, ψ⟩ - ∫_0^t ⟨S_s, v ∂_xψ + (G(M) - v) ∂_vψ + σ ∂_vvψ⟩ ds`
/// with the time integral as a left-endpoint sum.
#[derive(Debug, Clone)]
pub struct MartingaleTracker {
    psis: Vec<TestFunction>,
    params: ModelParams,
    dt: f64,
    initial: Vec<f64>,
    integral: Vec<f64>,
    current: Vec<f64>,
    sup: Vec<f64>,
    started: bool,
    pair: Vec<f64>,
    gen: Vec<f64>,
}

impl MartingaleTracker {
    pub fn new(psis: &[TestFunction], params: &ModelParams, dt: f64) -> Self {
        let n = psis.len();
        Self {
            psis: psis.to_vec(),
            params: params.clone(),
            dt,
            initial: vec![0.0; n],
            integral: vec![0.0; n],
            current: vec![0.0; n],
            sup: vec![0.0; n],
            started: false,
            pair: vec![0.0; n],
            gen: vec![0.0; n],
        }
    }

    /// Feeds the state at the start of a step and the local averages that
    /// step uses. States must arrive every `dt`.
    pub fn observe(&mut self, e: &ParticleEnsemble, averages: &[f64]) {
        self.pair.iter_mut().for_each(|x| *x = 0.0);
        self.gen.iter_mut().for_each(|x| *x = 0.0);
        let sigma = self.params.sigma;
        for i in 0..e.len() {
            let (x, v) = (e.positions[i], e.velocities[i]);
            let drift = self.params.herding.eval(averages[i]) - v;
            for (k, psi) in self.psis.iter().enumerate() {
                let j = psi.jet(x, v);
                self.pair[k] += j.value;
                self.gen[k] += j.dx * v + j.dv * drift + sigma * j.dvv;
            }
        }
        let n = e.len() as f64;
        for k in 0..self.psis.len() {
            let s = self.pair[k] / n;
            if self.started {
                self.current[k] = s - self.initial[k] - self.integral[k];
                self.sup[k] = self.sup[k].max(libm::fabs(self.current[k]));
            } else {
                self.initial[k] = s;
            }
            self.integral[k] += self.dt * self.gen[k] / n;
        }
        self.started = true;
    }

    /// `sup_t |M_t^ψ|` per test function so far.
    pub fn sup(&self) -> &[f64] {
        &self.sup
    }

    /// `M_t^ψ` at the last observed state.
    pub fn current(&self) -> &[f64] {
        &self.current
    }
}

/// `sup_t |M_t^ψ|` per test function for a trajectory recorded every `dt`.
pub fn martingale_diagnostic(
    trajectory: &[ParticleEnsemble],
    p: &ModelParams,
    psis: &[TestFunction],
    dt: f64,
    path: ForcePath,
) -> Vec<f64> {
    let mut t = MartingaleTracker::new(psis, p, dt);
    for e in trajectory {
        let avg = compute_local_averages(e, &p.kernel, path);
        t.observe(e, &avg.values);
    }
    t.sup().to_vec()
}
