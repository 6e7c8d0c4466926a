use kflock_core::homogeneous::{homogeneous_step, integrate_moments, MomentState, VDensity, VGrid};
use kflock_core::meanfield::{
    empirical_vs_density_gap, pairing, w1_samples, SpatialMode, TestFunction, TestFunctionFamily, VelocityProfile,
};
use kflock_core::model::{HerdingFunction, InteractionKernel};
use kflock_core::particles::{compute_local_averages, empirical_histogram, ForcePath, ParticleEnsemble};
use kflock_core::pde::{kinetic_step, weighted_l1_distance, DensityField, KineticSolver, PhaseGrid};
use kflock_core::ModelParams;
use proptest::prelude::*;

fn kernel(which: u8, a: f64) -> InteractionKernel {
    match which % 3 {
        0 => InteractionKernel::uniform(),
        1 => InteractionKernel::von_mises(0.5 + 8.0 * a).unwrap(),
        _ => InteractionKernel::cosine(0.05 + 0.9 * a, 1 + (which as u32 % 4)).unwrap(),
    }
}

fn ensemble(xs: Vec<f64>, vs: Vec<f64>) -> ParticleEnsemble {
    let n = xs.len().min(vs.len());
    ParticleEnsemble::new(xs[..n].to_vec(), vs[..n].to_vec()).unwrap()
}

fn small_grid() -> PhaseGrid {
    PhaseGrid::new(16, VGrid::new(-3.0, 3.0, 32).unwrap()).unwrap()
}

fn field(raw: &[f64]) -> DensityField {
    let g = small_grid();
    DensityField::from_fn(g, |x, v| {
        let i = g.locate_x(x);
        let j = g.vgrid().locate(v);
        raw[(i * 7 + j * 3) % raw.len()] * (-v * v / 2.0).exp()
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn local_averages_are_convex_combinations(
        xs in prop::collection::vec(0.0f64..1.0, 2..60),
        vs in prop::collection::vec(-3.0f64..3.0, 2..60),
        which in 0u8..12,
        a in 0.0f64..1.0,
    ) {
        let e = ensemble(xs, vs);
        let k = kernel(which, a);
        let lo = e.velocities.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = e.velocities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for path in [ForcePath::Direct, ForcePath::fourier_for(&k)] {
            for m in compute_local_averages(&e, &k, path).values {
                prop_assert!(m >= lo - 1e-9 && m <= hi + 1e-9);
            }
        }
    }

    #[test]
    fn kinetic_step_keeps_mass_and_sign(
        raw in prop::collection::vec(0.0f64..1.0, 5..20),
        which in 0u8..12,
        a in 0.0f64..1.0,
        dt in 1e-3f64..0.1,
        sigma in 0.05f64..1.0,
    ) {
        prop_assume!(raw.iter().sum::<f64>() > 0.1);
        let f = field(&raw);
        let p = ModelParams::new(sigma, HerdingFunction::rational(1.0).unwrap(), kernel(which, a)).unwrap();
        let g = kinetic_step(&f, &p, dt).unwrap();
        prop_assert!((g.mass() - f.mass()).abs() < 1e-12);
        prop_assert!(g.values.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn transport_commutes_with_v_marginal(raw in prop::collection::vec(0.0f64..1.0, 5..20), tau in -1.0f64..1.0) {
        prop_assume!(raw.iter().sum::<f64>() > 0.1);
        let f = field(&raw);
        let mut solver = KineticSolver::new(f.grid, InteractionKernel::uniform());
        let mut moved = f.values.clone();
        solver.transport(&mut moved, tau);
        let g = DensityField { grid: f.grid, values: moved };
        for (a, b) in g.v_marginal_values().iter().zip(f.v_marginal_values()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn homogeneous_step_keeps_mass_and_sign(
        m in -1.5f64..1.5,
        var in 0.1f64..1.0,
        dt in 1e-3f64..0.1,
        sigma in 0.1f64..1.0,
    ) {
        let grid = VGrid::truncated(m, sigma.max(var), 128).unwrap();
        let f = VDensity::gaussian(grid, m, var).unwrap();
        let g = homogeneous_step(&f, &ModelParams::standard(sigma).unwrap(), dt).unwrap();
        prop_assert!((g.mass() - 1.0).abs() < 1e-12);
        prop_assert!(g.values.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn mean_velocity_never_changes_sign(m1 in -2.0f64..2.0, extra in 0.0f64..1.0, t in 0.1f64..10.0) {
        prop_assume!(m1.abs() > 1e-6);
        let s0 = MomentState::gaussian(m1, 0.25 + extra, 4);
        let s = integrate_moments(&s0, &ModelParams::standard(0.25).unwrap(), t, 1e-2).unwrap();
        prop_assert!(s.moments[1] * m1 > 0.0);
        prop_assert_eq!(s.moments[0], 1.0);
    }

    #[test]
    fn pairings_are_bounded_and_linear_in_mixtures(
        xs in prop::collection::vec(0.0f64..1.0, 1..40),
        vs in prop::collection::vec(-3.0f64..3.0, 1..40),
        ys in prop::collection::vec(0.0f64..1.0, 1..40),
        ws in prop::collection::vec(-3.0f64..3.0, 1..40),
    ) {
        let a = ensemble(xs, vs);
        let b = ensemble(ys, ws);
        let mut both = a.clone();
        both.positions.extend(&b.positions);
        both.velocities.extend(&b.velocities);
        let wa = a.len() as f64 / both.len() as f64;
        for psi in &TestFunctionFamily::standard().functions {
            let (pa, pb) = (pairing(&a, psi), pairing(&b, psi));
            prop_assert!(pa.abs() <= 1.0 + 1e-15);
            prop_assert!((pairing(&both, psi) - (wa * pa + (1.0 - wa) * pb)).abs() < 1e-12);
        }
    }

    #[test]
    fn gap_ignores_zero_test_functions_and_labels(
        xs in prop::collection::vec(0.0f64..1.0, 2..40),
        vs in prop::collection::vec(-2.0f64..2.0, 2..40),
        raw in prop::collection::vec(0.0f64..1.0, 5..20),
    ) {
        prop_assume!(raw.iter().sum::<f64>() > 0.1);
        let e = ensemble(xs, vs);
        let f = field(&raw);
        let fam = TestFunctionFamily::standard();
        let gap = empirical_vs_density_gap(&e, &f, &fam);
        prop_assert!(gap >= 0.0);
        let mut padded = fam.clone();
        // support far outside both the grid and the samples
        padded.functions.push(TestFunction::new(SpatialMode::Cos(1), VelocityProfile::Bump { center: 40.0, width: 1.0 }));
        prop_assert_eq!(empirical_vs_density_gap(&e, &f, &padded), gap);
        let mut rev = e.clone();
        rev.positions.reverse();
        rev.velocities.reverse();
        prop_assert!((empirical_vs_density_gap(&rev, &f, &fam) - gap).abs() < 1e-14);
    }

    #[test]
    fn w1_is_a_metric_on_samples(
        a in prop::collection::vec(-5.0f64..5.0, 1..30),
        b in prop::collection::vec(-5.0f64..5.0, 1..30),
        c in prop::collection::vec(-5.0f64..5.0, 1..30),
    ) {
        let ab = w1_samples(&a, &b);
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - w1_samples(&b, &a)).abs() < 1e-12);
        prop_assert!(w1_samples(&a, &a) == 0.0);
        prop_assert!(ab <= w1_samples(&a, &c) + w1_samples(&c, &b) + 1e-12);
    }

    #[test]
    fn weighted_distance_dominates_plain(ra in prop::collection::vec(0.0f64..1.0, 5..20), rb in prop::collection::vec(0.0f64..1.0, 5..20)) {
        prop_assume!(ra.iter().sum::<f64>() > 0.1 && rb.iter().sum::<f64>() > 0.1);
        let (f, g) = (field(&ra), field(&rb));
        let (plain, weighted) = weighted_l1_distance(&f, &g).unwrap();
        prop_assert!(plain >= 0.0 && weighted >= plain);
        prop_assert!(plain <= 2.0 + 1e-12);
        prop_assert_eq!(weighted_l1_distance(&g, &f).unwrap(), (plain, weighted));
    }

    #[test]
    fn histograms_have_unit_mass(
        xs in prop::collection::vec(0.0f64..1.0, 1..80),
        vs in prop::collection::vec(-6.0f64..6.0, 1..80),
    ) {
        let e = ensemble(xs, vs);
        let h = empirical_histogram(&e, small_grid()).unwrap();
        prop_assert!((h.density.mass() - 1.0).abs() < 1e-12);
        let outside = e.velocities.iter().filter(|v| v.abs() > 3.0).count();
        prop_assert_eq!(h.out_of_range, outside);
    }
}
