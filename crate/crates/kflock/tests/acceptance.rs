//! End-to-end acceptance criteria. Each test prints one verdict line straight
//! to stdout (bypassing the harness capture) and then asserts it.
//!
//! `cargo test -p kflock --test acceptance -- --test-threads 1` prints them in
//! order.

use std::io::Write;

use kflock::config::RunConfig;
use kflock::experiments::convergence_study;
use kflock_core::homogeneous::{
    cumulant_closed_form, entropy_decay_experiment, integrate_moments_with, moments_to_cumulants, run_homogeneous,
    CumulantState, MomentState, VDensity, VGrid,
};
use kflock_core::meanfield::{ConvergenceReport, MemberConfig};
use kflock_core::model::{HerdingFunction, InteractionKernel, ModelParams};
use kflock_core::particles::{compute_local_averages, simulate, ForcePath, ParticleEnsemble, SdeConfig};
use kflock_core::pde::{picard_iterate, solve_with, DensityField, PhaseGrid};
use kflock_core::stationary::{equilibrium_density, perturbed_steady_state, residual_scan, EquilibriumBranch, RelaxationOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SIGMA: f64 = 0.25;

fn verdict(id: u32, name: &str, pass: bool, detail: String) {
    let line = format!("criterion {id:>2} {name:<28} {} {detail}\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stdout().lock().write_all(line.as_bytes());
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

fn params(kernel: InteractionKernel) -> ModelParams {
    ModelParams::new(SIGMA, HerdingFunction::rational(1.0).unwrap(), kernel).unwrap()
}

fn branch_grid(n_v: usize) -> VGrid {
    VGrid::truncated(1.0, SIGMA, n_v).unwrap()
}

#[test]
fn c01_cumulant_law() {
    let p = params(InteractionKernel::uniform());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let mut c = vec![0.0; 7];
        c[1] = rng.random_range(-1.5..1.5);
        c[2] = rng.random_range(0.1..2.0);
        for cn in c.iter_mut().skip(3) {
            *cn = rng.random_range(-0.3..0.3);
        }
        let c0 = CumulantState { cumulants: c, time: 0.0 };
        let s0 = MomentState::new(kflock_core::homogeneous::cumulants_to_moments(&c0), 0.0).unwrap();
        let t_final = rng.random_range(1.0..5.0);
        let mut k = 0usize;
        integrate_moments_with(&s0, &p, t_final, 1e-3, |s| {
            k += 1;
            if !k.is_multiple_of(100) {
                return;
            }
            let got = moments_to_cumulants(s);
            let want = cumulant_closed_form(&c0, &p, s.time).unwrap();
            for n in 3..=6 {
                worst = worst.max((got.cumulants[n] - want.cumulants[n]).abs());
            }
        })
        .unwrap();
    }
    verdict(1, "cumulant law", worst <= 1e-6, format!("max |C_n - C_n(0)e^-nt| = {worst:.2e} (tol 1e-6)"));
}

struct Relaxation {
    l1: f64,
    monotone_violation: f64,
    min_production: f64,
    balance_ratio: f64,
}

fn relax_from(m0: f64) -> Relaxation {
    let p = params(InteractionKernel::uniform());
    let grid = branch_grid(512);
    let dt = 1e-3;
    let f0 = VDensity::gaussian(grid, m0, SIGMA).unwrap();
    let (f, samples) = run_homogeneous(&f0, &p, 20.0, dt, 1).unwrap();
    let branch = if m0 > 0.0 { EquilibriumBranch::Plus } else { EquilibriumBranch::Minus };
    let target = equilibrium_density(branch, &p, grid).unwrap();
    let bound = 5.0 * (dt + grid.dv() * grid.dv());
    let mut rel = Relaxation { l1: f.l1_distance(&target).unwrap(), monotone_violation: 0.0, min_production: f64::MAX, balance_ratio: 0.0 };
    for w in samples.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        rel.monotone_violation = rel.monotone_violation.max(b.entropy - a.entropy);
        rel.min_production = rel.min_production.min(a.production).min(b.production);
        let rate = (b.entropy - a.entropy) / (b.t - a.t);
        let d = 0.5 * (a.production + b.production);
        rel.balance_ratio = rel.balance_ratio.max((rate + d).abs() / bound);
    }
    rel
}

#[test]
fn c02_c03_flocking_selection_and_entropy() {
    let runs = [relax_from(0.5), relax_from(-0.5)];
    let l1 = runs.iter().map(|r| r.l1).fold(0.0, f64::max);
    verdict(2, "flocking selection", l1 <= 1e-3, format!("L1 to mu_+/- at t=20 = {l1:.2e} (tol 1e-3)"));
    let rise = runs.iter().map(|r| r.monotone_violation).fold(f64::MIN, f64::max);
    let dmin = runs.iter().map(|r| r.min_production).fold(f64::MAX, f64::min);
    let ratio = runs.iter().map(|r| r.balance_ratio).fold(0.0, f64::max);
    // a rise of a few ulps of S is roundoff at equilibrium, not growth
    let pass = rise <= 1e-13 && dmin >= 0.0 && ratio <= 1.0;
    verdict(
        3,
        "entropy dissipation",
        pass,
        format!("max step rise {rise:.1e}, min D {dmin:.1e}, max |dS/dt + D| / 5(dt+dv^2) = {ratio:.3}"),
    );
}

#[test]
fn c04_decay_rate() {
    let p = params(InteractionKernel::uniform());
    let f0 = VDensity::gaussian(branch_grid(512), 0.5, SIGMA).unwrap();
    let rep = entropy_decay_experiment(&f0, &p, 10.0, 1e-3).unwrap();
    let slope = -rep.fitted_rate;
    verdict(4, "decay rate", slope <= -1.8, format!("slope of ln S(f|mu_+) on [5,10] = {slope:.4} (need <= -1.8)"));
}

#[test]
fn c05_evolution_system() {
    let p = params(InteractionKernel::uniform());
    let b0 = 2.0 * SIGMA;
    let vg = VGrid::truncated(1.0, b0, 512).unwrap();
    let fv = VDensity::gaussian(vg, 0.5, b0).unwrap();
    let f0 = DensityField::product(16, |x| 1.0 + 0.3 * (2.0 * std::f64::consts::PI * x).cos(), &fv).unwrap();
    let (mut var_err, mut kurt) = (0.0f64, 0.0f64);
    solve_with(&f0, &p, 5.0, 1e-3, 10, |s, _| {
        let e = (-2.0 * s.t).exp();
        var_err = var_err.max((s.v_variance() - (e * b0 + SIGMA * (1.0 - e))).abs());
        kurt = kurt.max(s.v_excess_kurtosis().abs());
    })
    .unwrap();
    verdict(
        5,
        "evolution system",
        var_err <= 1e-3 && kurt <= 1e-3,
        format!("max variance error {var_err:.2e}, max |excess kurtosis| {kurt:.2e} (tol 1e-3)"),
    );
}

#[test]
fn c06_stationarity() {
    let p = params(InteractionKernel::von_mises(4.0).unwrap());
    let coarse = residual_scan(&p, PhaseGrid::new(64, branch_grid(256)).unwrap()).unwrap();
    let fine = residual_scan(&p, PhaseGrid::new(128, branch_grid(512)).unwrap()).unwrap();
    let ratios = [coarse.zero / fine.zero, coarse.plus / fine.plus, coarse.minus / fine.minus];
    let worst = ratios.iter().copied().fold(f64::MAX, f64::min);
    let control = (fine.control / coarse.control - 1.0).abs();
    verdict(
        6,
        "stationarity",
        worst >= 3.5 && control < 0.1,
        format!("min residual ratio {worst:.3} (need >= 3.5), control change {:.2}%", 100.0 * control),
    );
}

#[test]
fn c07_picard_contraction() {
    let cfg = kflock::config::load_str("[grid]\nn_x = 64\nn_v = 128\n", &[]).unwrap();
    let f0 = cfg.initial_field().unwrap();
    let p = cfg.model_params().unwrap();
    let rep = picard_iterate(&f0, &p, 1.0, cfg.time.dt, 6).unwrap();
    let g = &rep.gaps;
    let decreasing = g[1..].windows(2).all(|w| w[1] < w[0]);
    let shrink = g[5] / g[1];
    let ln: Vec<f64> = g.iter().map(|x| x.ln()).collect();
    let concave = ln.windows(3).all(|w| w[2] - 2.0 * w[1] + w[0] <= 0.0);
    verdict(
        7,
        "picard contraction",
        decreasing && shrink <= 1e-2 && concave,
        format!("xi^6/xi^2 = {shrink:.2e}, decreasing {decreasing}, log-concave {concave}"),
    );
}

#[test]
fn c08_particle_flocking() {
    let p = params(InteractionKernel::von_mises(4.0).unwrap());
    let n = 2000;
    let band = 3.0 * (SIGMA / n as f64).sqrt();
    let path = ForcePath::fourier_for(&p.kernel);
    let hits = (0..20u64)
        .filter(|&seed| {
            let e0 = ParticleEnsemble::gaussian_uniform(n, 0.5, SIGMA, 2 * seed + 1).unwrap();
            let mut sde = SdeConfig::new(0.01, 20.0, 2 * seed, path);
            sde.record_stride = usize::MAX;
            let tr = simulate(&e0, &p, &sde).unwrap();
            (tr.last.mean_velocity() - 1.0).abs() <= band
        })
        .count();
    verdict(8, "particle flocking", hits >= 18, format!("{hits}/20 seeds within 1 +/- {band:.4} at t=20"));
}

#[test]
fn c09_c10_mean_field_and_martingale() {
    let cfg = RunConfig::default();
    let p = cfg.model_params().unwrap();
    let f0 = cfg.initial_field().unwrap();
    let t = 5.0;
    let (f_t, _) = solve_with(&f0, &p, t, cfg.time.dt, usize::MAX, |_, _| {}).unwrap();
    let path = cfg.force_path(&p.kernel);
    // sup_t |M| is heavy-tailed enough that 20 seeds leave about ±0.06 of
    // noise on its fitted order, so the martingale fit uses 40
    let seeds = |n: usize| if n == 500 { 20u64 } else { 40 };
    let members: Vec<MemberConfig> = [500usize, 1000, 2000, 4000, 8000]
        .iter()
        .flat_map(|&n| (0..seeds(n)).map(move |seed| MemberConfig { n, seed, dt: 1e-3, t_final: t, force_path: path }))
        .collect();
    let all = convergence_study(&f0, &f_t, &p, &members).unwrap();
    let subset = |ns: &[usize], seeds: u64| {
        ConvergenceReport::from_rows(all.rows.iter().copied().filter(|r| ns.contains(&r.n) && r.seed < seeds).collect())
    };

    let mf = subset(&[500, 2000, 8000], 20);
    verdict(
        9,
        "mean-field convergence",
        (mf.gap_order + 0.5).abs() <= 0.15 && mf.w1_monotone(),
        format!("gap order {:.3} (need -0.5 +/- 0.15), mean W1 {:?}", mf.gap_order, rounded(&mf.mean_w1)),
    );
    let mg = subset(&[1000, 2000, 4000, 8000], 40);
    verdict(
        10,
        "martingale scaling",
        (mg.martingale_order + 0.5).abs() <= 0.15,
        format!("RMS sup|M| order {:.3} over 40 seeds (need -0.5 +/- 0.15), RMS {:?}", mg.martingale_order, rounded(&mg.rms_martingale)),
    );
}

fn rounded(xs: &[f64]) -> Vec<String> {
    xs.iter().map(|x| format!("{x:.4}")).collect()
}

#[test]
fn c11_perturbed_equilibrium() {
    let grid = PhaseGrid::new(64, branch_grid(256)).unwrap();
    let opts = RelaxationOptions::default();
    let run = |kernel| perturbed_steady_state(&params(kernel), grid, &opts).unwrap();
    let base = run(InteractionKernel::uniform());
    let mut worst_dev: f64 = 0.0;
    let mut worst_alpha = base.alpha_variation;
    for lambda in [0.05, 0.1, 0.2] {
        let r = run(InteractionKernel::cosine(lambda, 1).unwrap());
        worst_dev = worst_dev.max(r.deviation_l1 / base.deviation_l1);
        worst_alpha = worst_alpha.max(r.alpha_variation);
    }
    verdict(
        11,
        "perturbed equilibrium",
        worst_dev <= 2.0 && worst_alpha <= 1e-6,
        format!(
            "max deviation / baseline {worst_dev:.4} (baseline {:.2e}), max alpha variation {worst_alpha:.1e}",
            base.deviation_l1
        ),
    );
}

#[test]
fn c12_force_path_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst = [0.0f64; 2];
    for _ in 0..100 {
        let n = rng.random_range(20..400);
        let xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let vs: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let e = ParticleEnsemble::new(xs, vs).unwrap();
        let cosine = InteractionKernel::cosine(rng.random_range(0.01..0.99), rng.random_range(1..5)).unwrap();
        let von_mises = InteractionKernel::von_mises(rng.random_range(0.5..8.0)).unwrap();
        for (kernel, slot) in [(InteractionKernel::uniform(), 0), (cosine, 0), (von_mises, 1)] {
            let d = compute_local_averages(&e, &kernel, ForcePath::Direct);
            let f = compute_local_averages(&e, &kernel, ForcePath::fourier_for(&kernel));
            for (a, b) in d.values.iter().zip(&f.values) {
                worst[slot] = worst[slot].max((a - b).abs());
            }
        }
    }
    let [band, vm] = worst;
    verdict(
        12,
        "force-path equivalence",
        band <= 1e-12 && vm <= 1e-9,
        format!("band-limited {band:.1e} (tol 1e-12), von Mises {vm:.1e} (tol 1e-9)"),
    );
}
