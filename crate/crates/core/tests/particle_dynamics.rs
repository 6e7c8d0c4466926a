use kflock_core::model::{HerdingFunction, InteractionKernel};
use kflock_core::numerics::linear_fit;
use kflock_core::particles::{em_step, simulate, ForcePath, NoiseStreams, ParticleEnsemble, SdeConfig};
use kflock_core::ModelParams;

fn uniform_params(sigma: f64) -> ModelParams {
    ModelParams::new(sigma, HerdingFunction::rational(1.0).unwrap(), InteractionKernel::uniform()).unwrap()
}

#[test]
fn uniform_kernel_mean_drift_regresses_onto_herding() {
    let sigma = 0.25;
    let p = uniform_params(sigma);
    let n = 100_000;
    let dt = 0.05;
    let base = ParticleEnsemble::gaussian_uniform(n, 0.0, sigma, 1).unwrap();
    let centre = base.mean_velocity();
    let (mut want, mut got) = (Vec::new(), Vec::new());
    for k in 0..20 {
        let m = -1.5 + 3.0 * k as f64 / 19.0;
        let mut e = base.clone();
        e.velocities.iter_mut().for_each(|v| *v += m - centre);
        let m0 = e.mean_velocity();
        let cfg = SdeConfig::new(dt, dt, 100 + k, ForcePath::fourier_for(&p.kernel));
        let mut noise = NoiseStreams::new(cfg.seed, n, false);
        let next = em_step(&e, &p, &cfg, &mut noise);
        want.push(p.herding.eval(m0) - m0);
        got.push((next.mean_velocity() - m0) / dt);
    }
    let (slope, intercept) = linear_fit(&want, &got).unwrap();
    // per-point noise is √(2σ/(N dt)) = 0.01
    assert!((slope - 1.0).abs() < 0.05, "slope {slope}");
    assert!(intercept.abs() < 0.01, "intercept {intercept}");
    let worst = want.iter().zip(&got).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(worst < 0.05, "{worst}");
}

#[test]
fn ensemble_flocks_and_thermalises() {
    let sigma = 0.25;
    let p = ModelParams::standard(sigma).unwrap();
    let n = 2000;
    let e0 = ParticleEnsemble::gaussian_uniform(n, 0.5, 0.25, 11).unwrap();
    let cfg = SdeConfig::new(0.01, 20.0, 12, ForcePath::fourier_for(&p.kernel));
    let tr = simulate(&e0, &p, &cfg).unwrap();
    let m = tr.last.mean_velocity();
    let band = 3.0 * (sigma / n as f64).sqrt();
    // Euler–Maruyama leaves an O(dt) bias on top of the sampling band
    assert!((m - 1.0).abs() <= band + 0.02, "mean {m}");
    let var = tr.last.velocity_variance();
    let tol = 5.0 * (2.0 * sigma * sigma / n as f64).sqrt();
    assert!((var - sigma).abs() <= tol + 0.02, "variance {var}");
    let op = tr.samples.last().unwrap().order_param;
    assert!((op - m.abs()).abs() < 1e-15);
}

#[test]
fn negative_start_flocks_to_minus_one() {
    let p = uniform_params(0.25);
    let e0 = ParticleEnsemble::gaussian_uniform(1000, -0.5, 0.25, 2).unwrap();
    let tr = simulate(&e0, &p, &SdeConfig::new(0.01, 15.0, 3, ForcePath::Direct)).unwrap();
    assert!((tr.last.mean_velocity() + 1.0).abs() < 0.08, "{}", tr.last.mean_velocity());
}
