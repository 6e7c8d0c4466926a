//! One function per subcommand. Each reads a validated [`RunConfig`], writes
//! its tables and snapshots through [`Outputs`] and returns the sanity checks
//! for the manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use kflock_core::homogeneous::{
    entropy_decay_experiment, integrate_moments_with, moments_to_cumulants, run_homogeneous, MomentState, VGrid,
};
use kflock_core::meanfield::{
    particle_member, ConvergenceReport, ConvergenceRow, MemberConfig, SpatialMode, TestFunction, TestFunctionFamily,
    VelocityProfile,
};
use kflock_core::model::InteractionKernel;
use kflock_core::particles::{
    empirical_histogram, sample_from_density, simulate, ParticleEnsemble, SdeConfig, Trajectory,
};
use kflock_core::pde::{picard_iterate_with_budget, solve_with, DensityField, PhaseGrid};
use kflock_core::stationary::{fixed_point_defect, perturbed_steady_state, residual_scan, RelaxationOptions};
use kflock_core::{Error as CoreError, ModelParams};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ConfigIssue, RunConfig};
use crate::format::{write_csv, write_density, write_table, FormatError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Homogeneous,
    SolvePde,
    Picard,
    Particles,
    Meanfield,
    Stationary,
    Perturb,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Homogeneous => "homogeneous",
            Experiment::SolvePde => "solve-pde",
            Experiment::Picard => "picard",
            Experiment::Particles => "particles",
            Experiment::Meanfield => "meanfield",
            Experiment::Stationary => "stationary",
            Experiment::Perturb => "perturb",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid configuration: {}", .0.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; "))]
    Config(Vec<ConfigIssue>),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("cannot write output: {0}")]
    Output(#[from] FormatError),
}

impl From<CoreError> for RunError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::NotConverged { .. } | CoreError::Invariant(_) => RunError::Numerical(e.to_string()),
            CoreError::InvalidParameter { field, reason } => {
                RunError::Config(vec![ConfigIssue { path: field.to_string(), rule: reason }])
            }
            other => RunError::Config(vec![ConfigIssue { path: "<run>".into(), rule: other.to_string() }]),
        }
    }
}

impl From<ConfigIssue> for RunError {
    fn from(i: ConfigIssue) -> Self {
        RunError::Config(vec![i])
    }
}

/// The run directory and the files written to it so far.
#[derive(Debug)]
pub struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Self {
        Self { dir: dir.to_path_buf(), files: Vec::new() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    fn record(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    pub fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<(), FormatError> {
        let p = self.record(name);
        write_csv(&p, rows)
    }

    pub fn table(&mut self, name: &str, header: &[String], rows: &[Vec<f64>]) -> Result<(), FormatError> {
        let p = self.record(name);
        write_table(&p, header, rows)
    }

    pub fn density(&mut self, name: &str, f: &DensityField) -> Result<(), FormatError> {
        let p = self.record(name);
        write_density(&p, f)
    }
}

/// Sanity checks and scalar results of a run. A failed hard check turns
/// into exit status 3 once the outputs are written.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Report {
    pub checks: BTreeMap<String, bool>,
    pub metrics: BTreeMap<String, f64>,
    pub hard_failures: Vec<String>,
}

impl Report {
    fn check(&mut self, name: &str, ok: bool) {
        self.checks.insert(name.to_string(), ok);
    }

    fn hard(&mut self, name: &str, ok: bool) {
        self.check(name, ok);
        if !ok {
            self.hard_failures.push(name.to_string());
        }
    }

    /// Non-finite values (a fit with no points, say) are left out; JSON has
    /// no encoding for them.
    fn metric(&mut self, name: &str, x: f64) {
        if x.is_finite() {
            self.metrics.insert(name.to_string(), x);
        }
    }
}

pub fn run(which: Experiment, cfg: &RunConfig, out: &mut Outputs) -> Result<Report, RunError> {
    match which {
        Experiment::Homogeneous => homogeneous(cfg, out),
        Experiment::SolvePde => solve_pde(cfg, out),
        Experiment::Picard => picard(cfg, out),
        Experiment::Particles => particles(cfg, out),
        Experiment::Meanfield => meanfield(cfg, out),
        Experiment::Stationary => stationary(cfg, out),
        Experiment::Perturb => perturb(cfg, out),
    }
}

#[derive(Serialize)]
struct HomogeneousRow {
    t: f64,
    #[serde(rename = "M_1")]
    m1: f64,
    #[serde(rename = "C_2")]
    c2: f64,
    #[serde(rename = "C_3")]
    c3: f64,
    #[serde(rename = "C_4")]
    c4: f64,
    #[serde(rename = "S")]
    entropy: f64,
    #[serde(rename = "D_S")]
    production: f64,
}

#[derive(Serialize)]
struct DecayRow {
    t: f64,
    relative_entropy: f64,
    production: f64,
}

fn homogeneous(cfg: &RunConfig, out: &mut Outputs) -> Result<Report, RunError> {
    let p = cfg.model_params()?;
    let (t, dt, stride) = (cfg.time.t, cfg.time.dt, cfg.time.stride);
    let f0 = cfg.initial_velocity_law()?;
    let mut rep = Report::default();

    let (f, samples) = run_homogeneous(&f0, &p, t, dt, stride)?;
    let rows: Vec<HomogeneousRow> = samples
        .iter()
        .map(|s| HomogeneousRow {
            t: s.t,
            m1: s.m1,
            c2: s.c2,
            c3: s.c3,
            c4: s.c4,
            entropy: s.entropy,
            production: s.production,
        })
        .collect();
    out.csv("homogeneous.csv", &rows)?;
    rep.hard("mass_conserved", (f.mass() - 1.0).abs() <= 1e-10);
    rep.hard("positivity", f.values.iter().all(|v| *v >= 0.0));
    let monotone = samples.windows(2).all(|w| w[1].entropy <= w[0].entropy + 1e-12 * w[0].entropy.abs().max(1.0));
    rep.check("entropy_monotone", monotone);
    rep.check("production_nonnegative", samples.iter().all(|s| s.production >= 0.0));
    rep.metric("final_mean_density", f.mean());

    // moment hierarchy and its cumulants against the closed-form laws
    let k = cfg.homogeneous.order;
    let b0 = cfg.initial_variance();
    let s0 = MomentState::gaussian(cfg.init.m0, b0, k);
    let c0 = moments_to_cumulants(&s0);
    let mut table = Vec::new();
    let mut worst = 0.0f64;
    let mut index = 0usize;
    let total = (t / dt - 1e-9).ceil().max(1.0) as usize;
    let last = integrate_moments_with(&s0, &p, t, dt, |s| {
        let c = moments_to_cumulants(s);
        let tt = s.time;
        worst = worst.max((c.cumulants[2] - (p.sigma + (b0 - p.sigma) * (-2.0 * tt).exp())).abs());
        for n in 3..=k {
            worst = worst.max((c.cumulants[n] - c0.cumulants[n] * (-(n as f64) * tt).exp()).abs());
        }
        if index.is_multiple_of(stride) || index == total {
            let mut row = vec![tt];
            row.extend_from_slice(&s.moments[1..]);
            row.extend_from_slice(&c.cumulants[1..]);
            table.push(row);
        }
        index += 1;
    })?;
    let mut header = vec!["t".to_string()];
    header.extend((1..=k).map(|n| format!("M_{n}")));
    header.extend((1..=k).map(|n| format!("C_{n}")));
    out.table("moments.csv", &header, &table)?;
    rep.check("cumulant_law", worst <= 1e-6);
    rep.metric("cumulant_law_max_error", worst);
    rep.metric("final_mean_moments", last.moments[1]);

    if cfg.init.m0.abs() >= 1e-8 {
        let d = entropy_decay_experiment(&f0, &p, t, dt)?;
        let rows: Vec<DecayRow> = (0..d.times.len())
            .filter(|i| i % stride == 0 || *i == d.times.len() - 1)
            .map(|i| DecayRow { t: d.times[i], relative_entropy: d.relative_entropy[i], production: d.production[i] })
            .collect();
        out.csv("decay.csv", &rows)?;
        rep.check("relative_entropy_nonnegative", d.relative_entropy.iter().all(|r| *r >= -1e-12));
        rep.metric("decay_rate", d.fitted_rate);
    }
    Ok(rep)
}

#[derive(Serialize)]
struct PdeRow {
    t: f64,
    mass: f64,
    mean_v: f64,
    var_v: f64,
    excess_kurtosis: f64,
    mean_field_min: f64,
    mean_field_max: f64,
    x_defect: f64,
}

#[derive(Serialize)]
struct ProfileRow {
    x: f64,
    rho: f64,
    momentum: f64,
}

fn profile(f: &DensityField) -> Vec<ProfileRow> {
    let rho = f.x_marginal();
    let j = f.momentum();
    (0..f.grid.n_x()).map(|i| ProfileRow { x: f.grid.x(i), rho: rho[i], momentum: j[i] }).collect()
}

fn solve_pde(cfg: &RunConfig, out: &mut Outputs) -> Result<Report, RunError> {
    let p = cfg.model_params()?;
    let f0 = cfg.initial_field()?;
    let mut rows = Vec::new();
    let (f, diag) = solve_with(&f0, &p, cfg.time.t, cfg.time.dt, cfg.time.stride, |s, _| {
        let lo = s.mean_field.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = s.mean_field.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let defect = s.x_marginal.iter().map(|r| (r - s.mass).abs()).fold(0.0, f64::max);
        rows.push(PdeRow {
            t: s.t,
            mass: s.mass,
            mean_v: s.mean_velocity,
            var_v: s.v_variance(),
            excess_kurtosis: s.v_excess_kurtosis(),
            mean_field_min: lo,
            mean_field_max: hi,
            x_defect: defect,
        });
    })?;
    out.csv("pde.csv", &rows)?;
    out.csv("profile.csv", &profile(&f))?;
    out.density("initial.kflk", &f0)?;
    out.density("final.kflk", &f)?;
    let mut rep = Report::default();
    rep.hard("positivity", diag.positivity_ok());
    rep.hard("mass_conserved", diag.samples.iter().all(|s| (s.mass - 1.0).abs() <= 1e-10));
    rep.metric("final_mean_velocity", f.mean_velocity());
    rep.metric("min_value", diag.min_value);
    rep.metric("clipped_mass", diag.clipped_mass);
    Ok(rep)
}

#[derive(Serialize)]
struct PicardRow {
    n: usize,
    xi: f64,
    ratio: Option<f64>,
}

fn picard(cfg: &RunConfig, out: &mut Outputs) -> Result<Report, RunError> {
    let p = cfg.model_params()?;
    let f0 = cfg.initial_field()?;
    let budget = cfg.picard.memory_mb << 20;
    let r = picard_iterate_with_budget(&f0, &p, cfg.time.t, cfg.time.dt, cfg.picard.iters, budget)?;
    let rows: Vec<PicardRow> = r
        .gaps
        .iter()
        .enumerate()
        .map(|(i, &xi)| PicardRow { n: i + 1, xi, ratio: if i == 0 { None } else { Some(r.ratios[i - 1]) } })
        .collect();
    out.csv("picard.csv", &rows)?;
    out.density("picard_last.kflk", &r.last)?;
    let mut rep = Report::default();
    rep.check("contracting", rows.iter().filter(|r| r.n >= 3).all(|r| r.ratio.is_some_and(|q| q < 1.0)));
    rep.metric("xi_last", *r.gaps.last().unwrap());
    Ok(rep)
}

#[derive(Serialize)]
struct ParticleRow {
    seed: u64,
    t: f64,
    mean_v: f64,
    var_v: f64,
    order_param: f64,
}

#[derive(Serialize)]
struct SnapshotRow {
    i: usize,
    x: f64,
    v: f64,
}

/// Initial ensemble for seed `seed`: exact Gaussian velocities and uniform
/// positions when the configured profile is flat, otherwise i.i.d. draws from
/// the discretized initial density.
pub fn initial_ensemble(cfg: &RunConfig, n: usize, seed: u64) -> Result<ParticleEnsemble, RunError> {
    let sample_seed = seed.wrapping_mul(2).wrapping_add(1);
    if cfg.init.eta == 0.0 {
        Ok(ParticleEnsemble::gaussian_uniform(n, cfg.init.m0, cfg.initial_variance(), sample_seed)?)
    } else {
        Ok(sample_from_density(&cfg.initial_field()?, n, sample_seed)?)
    }
}

fn particles(cfg: &RunConfig, out: &mut Outputs) -> Result<Report, RunError> {
    let p = cfg.model_params()?;
    let pc = &cfg.particles;
    let path = cfg.force_path(&p.kernel);
    let seeds: Vec<u64> = (0..pc.seeds as u64).map(|s| pc.seed + s).collect();
    let runs: Vec<Result<(u64, Trajectory), RunError>> = seeds
        .par_iter()
        .map(|&seed| {
            let e0 = initial_ensemble(cfg, pc.n, seed)?;
            let sde = SdeConfig {
                record_stride: cfg.time.stride,
                antithetic: pc.antithetic,
                ..SdeConfig::new(pc.dt, cfg.time.t, seed.wrapping_mul(2), path)
            };
            Ok((seed, simulate(&e0, &p, &sde)?))
        })
        .collect();
    let runs: Vec<(u64, Trajectory)> = runs.into_iter().collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    for (seed, tr) in &runs {
        rows.extend(tr.samples.iter().map(|s| ParticleRow {
            seed: *seed,
            t: s.t,
            mean_v: s.mean_v,
            var_v: s.var_v,
            order_param: s.order_param,
        }));
    }
    out.csv("particles.csv", &rows)?;
    let first = &runs[0].1.last;
    let snap: Vec<SnapshotRow> = (0..first.len())
        .map(|i| SnapshotRow { i, x: first.positions[i], v: first.velocities[i] })
        .collect();
    out.csv("snapshot.csv", &snap)?;
    let hist = empirical_histogram(first, cfg.phase_grid()?)?;
    out.density("histogram.kflk", &hist.density)?;

    let mut rep = Report::default();
    let target = if cfg.init.m0 >= 0.0 { 1.0 } else { -1.0 };
    let band = 3.0 * (p.sigma / pc.n as f64).sqrt();
    let hits = runs.iter().filter(|(_, tr)| (tr.last.mean_velocity() - target).abs() <= band).count();
    let frac = hits as f64 / runs.len() as f64;
    rep.check("flocked", frac >= 0.9);
    rep.metric("flocked_fraction", frac);
    rep.metric("histogram_out_of_range", hist.out_of_range as f64);
    Ok(rep)
}

/// Test functions whose martingale terms are tracked in mean-field runs.
pub fn martingale_functions() -> Vec<TestFunction> {
    vec![
        TestFunction::new(SpatialMode::Const, VelocityProfile::Bump { center: 1.0, width: 1.0 }),
        TestFunction::new(SpatialMode::Cos(1), VelocityProfile::Bump { center: 0.5, width: 1.0 }),
    ]
}

#[derive(Serialize)]
struct MemberRow {
    n: usize,
    seed: u64,
    gap: f64,
    w1: f64,
    sup_martingale: f64,
}

#[derive(Serialize)]
struct SummaryRow {
    n: usize,
    mean_gap: f64,
    mean_w1: f64,
    rms_martingale: f64,
}

#[derive(Serialize)]
struct OrdersRow {
    gap_order: f64,
    w1_order: f64,
    martingale_order: f64,
}

/// Particle runs for every `(N, seed)` pair against one PDE solution.
pub fn convergence_study(
    f0: &DensityField,
    f_t: &DensityField,
    p: &ModelParams,
    members: &[MemberConfig],
) -> Result<ConvergenceReport, RunError> {
    let fam = TestFunctionFamily::standard();
    let psis = martingale_functions();
    let rows: Vec<Result<ConvergenceRow, CoreError>> =
        members.par_iter().map(|m| particle_member(f0, f_t, p, m, &fam, &psis)).collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(ConvergenceReport::from_rows(rows))
}

fn meanfield(cfg: &RunConfig, out: &mut Outputs) -> Result<Report, RunError> {
    let p = cfg.model_params()?;
    let f0 = cfg.initial_field()?;
    let t = cfg.time.t;
    let (f_t, diag) = solve_with(&f0, &p, t, cfg.time.dt, usize::MAX, |_, _| {})?;
    let path = cfg.force_path(&p.kernel);
    let members: Vec<MemberConfig> = cfg
        .meanfield
        .ns
        .iter()
        .flat_map(|&n| {
            (0..cfg.meanfield.seeds as u64).map(move |s| MemberConfig {
                n,
                seed: cfg.particles.seed + s,
                dt: cfg.meanfield.dt,
                t_final: t,
                force_path: path,
            })
        })
        .collect();
    let report = convergence_study(&f0, &f_t, &p, &members)?;
    let rows: Vec<MemberRow> = report
        .rows
        .iter()
        .map(|r| MemberRow { n: r.n, seed: r.seed, gap: r.gap, w1: r.w1, sup_martingale: r.sup_martingale })
        .collect();
    out.csv("convergence.csv", &rows)?;
    let summary: Vec<SummaryRow> = (0..report.ns.len())
        .map(|i| SummaryRow {
            n: report.ns[i],
            mean_gap: report.mean_gap[i],
            mean_w1: report.mean_w1[i],
            rms_martingale: report.rms_martingale[i],
        })
        .collect();
    out.csv("summary.csv", &summary)?;
    out.csv(
        "orders.csv",
        &[OrdersRow { gap_order: report.gap_order, w1_order: report.w1_order, martingale_order: report.martingale_order }],
    )?;
    out.density("pde_final.kflk", &f_t)?;
    let mut rep = Report::default();
    rep.hard("pde_positivity", diag.positivity_ok());
    if report.ns.len() >= 2 {
        rep.check("w1_monotone", report.w1_monotone());
        rep.check("gap_order", (report.gap_order + 0.5).abs() <= 0.15);
        rep.check("martingale_order", (report.martingale_order + 0.5).abs() <= 0.15);
    }
    rep.metric("gap_order", report.gap_order);
    rep.metric("w1_order", report.w1_order);
    rep.metric("martingale_order", report.martingale_order);
    Ok(rep)
}

/// Velocity grid for experiments around the `±1` states.
fn branch_vgrid(cfg: &RunConfig, n_v: usize) -> Result<VGrid, ConfigIssue> {
    match cfg.grid.v_max {
        Some(v) => VGrid::new(-v, v, n_v),
        None => VGrid::truncated(1.0, cfg.model.sigma, n_v),
    }
    .map_err(|e| ConfigIssue { path: "grid".into(), rule: e.to_string() })
}

#[derive(Serialize)]
struct StationaryRow {
    n_x: usize,
    n_v: usize,
    dx: f64,
    dv: f64,
    zero: f64,
    plus: f64,
    minus: f64,
    control: f64,
}

fn stationary(cfg: &RunConfig, out: &mut Outputs) -> Result<Report, RunError> {
    let p = cfg.model_params()?;
    let grids: Vec<PhaseGrid> = (0..cfg.stationary.levels)
        .map(|l| {
            let (n_x, n_v) = (cfg.grid.n_x << l, cfg.grid.n_v << l);
            PhaseGrid::new(n_x, branch_vgrid(cfg, n_v)?).map_err(|e| ConfigIssue { path: "grid".into(), rule: e.to_string() })
        })
        .collect::<Result<_, _>>()?;
    let scans: Vec<Result<StationaryRow, CoreError>> = grids
        .par_iter()
        .map(|g| {
            let s = residual_scan(&p, *g)?;
            Ok(StationaryRow {
                n_x: g.n_x(),
                n_v: g.n_v(),
                dx: g.dx(),
                dv: g.dv(),
                zero: s.zero,
                plus: s.plus,
                minus: s.minus,
                control: s.control,
            })
        })
        .collect();
    let rows = scans.into_iter().collect::<Result<Vec<_>, _>>()?;
    out.csv("stationary.csv", &rows)?;
    let mut rep = Report::default();
    let mut second_order = true;
    let mut control_flat = true;
    for w in rows.windows(2) {
        for (a, b) in [(w[0].zero, w[1].zero), (w[0].plus, w[1].plus), (w[0].minus, w[1].minus)] {
            second_order &= a / b >= 3.5;
        }
        control_flat &= ((w[1].control - w[0].control) / w[0].control).abs() < 0.1;
    }
    rep.check("branches_second_order", second_order);
    rep.check("control_refinement_stable", control_flat);
    rep.check("plus_minus_symmetric", rows.iter().all(|r| (r.plus - r.minus).abs() <= 1e-12));
    Ok(rep)
}

#[derive(Serialize)]
struct PerturbRow {
    lambda: f64,
    k: u32,
    #[serde(rename = "deviation_L1")]
    deviation_l1: f64,
    alpha_variation: f64,
    steps_to_converge: usize,
    deviation_discrete: f64,
    fixed_point_defect: f64,
}

fn perturb(cfg: &RunConfig, out: &mut Outputs) -> Result<Report, RunError> {
    let base = cfg.model_params()?;
    let pc = &cfg.perturb;
    let grid = PhaseGrid::new(cfg.grid.n_x, branch_vgrid(cfg, cfg.grid.n_v)?)?;
    let opts = RelaxationOptions { dt: pc.dt, tol: pc.tol, max_steps: pc.max_steps, eta: pc.eta };
    let mut lambdas = vec![0.0];
    lambdas.extend_from_slice(&pc.lambdas);
    let runs: Vec<Result<PerturbRow, CoreError>> = lambdas
        .par_iter()
        .map(|&lambda| {
            let kernel =
                if lambda == 0.0 { InteractionKernel::uniform() } else { InteractionKernel::cosine(lambda, pc.mode)? };
            let p = ModelParams { kernel, ..base.clone() };
            let r = perturbed_steady_state(&p, grid, &opts)?;
            Ok(PerturbRow {
                lambda: r.lambda,
                k: if lambda == 0.0 { 0 } else { r.k },
                deviation_l1: r.deviation_l1,
                alpha_variation: r.alpha_variation,
                steps_to_converge: r.steps,
                deviation_discrete: r.deviation_discrete,
                fixed_point_defect: fixed_point_defect(&p.herding, &r.alpha),
            })
        })
        .collect();
    let rows = runs.into_iter().collect::<Result<Vec<_>, _>>()?;
    out.csv("perturb.csv", &rows)?;
    let mut rep = Report::default();
    let baseline = rows[0].deviation_l1;
    rep.check("alpha_flat", rows.iter().all(|r| r.alpha_variation <= 1e-6));
    rep.check("fixed_point", rows.iter().all(|r| r.fixed_point_defect <= 1e-4));
    rep.check("no_lambda_dependence", rows.iter().all(|r| r.deviation_l1 <= 2.0 * baseline));
    rep.metric("baseline_deviation", baseline);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_finite_metrics_are_dropped() {
        let mut rep = Report::default();
        rep.metric("rate", 1.5);
        rep.metric("empty_fit", f64::NAN);
        rep.metric("blown_up", f64::INFINITY);
        assert_eq!(rep.metrics.keys().collect::<Vec<_>>(), ["rate"]);
        rep.hard("mass", false);
        assert_eq!(rep.hard_failures, ["mass"]);
        assert!(!rep.checks["mass"]);
    }
}
