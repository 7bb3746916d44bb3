use sphvisc::harness::{run_problem, SweepSpec};
use sphvisc::model::{discrete_energy, discrete_mass, GridSpec, RadialField, RadialGrid};
use sphvisc::solver::{prepare_profile, run, step, step_with_dt, InitSpec, Profile, SolverConfig};
use sphvisc::{GasLaw64, RadialGrid64, ViscousParams64};

fn setup(eps: f64, spacing: f64) -> (ViscousParams64, GasLaw64, RadialGrid64) {
    let spec = SweepSpec::default();
    let params = spec.params::<f64>(eps).unwrap();
    let law = params.law().unwrap();
    let grid = RadialGrid::geometric_uniform(params.a, params.b, 3, &GridSpec::new(spacing)).unwrap();
    (params, law, grid)
}

fn bump(params: &ViscousParams64, grid: &RadialGrid64) -> RadialField<f64> {
    let init = prepare_profile(&Profile::default(), params, grid, &InitSpec::default()).unwrap();
    RadialField::new(0.0, init.rho, init.m, 1e-12).unwrap()
}

#[test]
fn single_step_mass_changes_by_boundary_flux_only() {
    let (params, law, grid) = setup(1e-2, 0.01);
    let mut state = bump(&params, &grid);
    let config = SolverConfig::with_uniform_snapshots(0.1, 1);
    for _ in 0..20 {
        let before = discrete_mass(&state.rho, &grid);
        let (next, d) = step(&state, &config, &params, &law, &grid).unwrap();
        let after = discrete_mass(&next.rho, &grid);
        assert!((d.mass_before - before).abs() <= 1e-14 * before);
        assert!((d.mass_after - after).abs() <= 1e-14 * after);
        let defect = (after - before + d.dt * d.boundary_flux).abs();
        assert!(defect <= 1e-10, "mass defect {defect:e}");
        state = next;
    }
}

#[test]
fn constant_state_step_is_exact() {
    let (params, law, grid) = setup(1e-1, 0.01);
    let state = RadialField::constant(grid.len(), params.rho_bar, 0.0, 1e-12).unwrap();
    let config = SolverConfig::with_uniform_snapshots(1.0, 1);
    let (next, d) = step(&state, &config, &params, &law, &grid).unwrap();
    for (&r, &m) in next.rho.iter().zip(&next.m) {
        assert!((r - params.rho_bar).abs() <= 1e-12);
        assert!(m.abs() <= 1e-12);
    }
    assert!(d.boundary_flux.abs() <= 1e-12);
}

#[test]
fn time_step_convergence_is_at_least_first_order() {
    let (params, law, grid) = setup(1e-1, 0.02);
    let config = SolverConfig::with_uniform_snapshots(0.05, 1);
    let base = step(&bump(&params, &grid), &config, &params, &law, &grid).unwrap().1.dt;
    let t_end = 0.02;
    let solve = |dt: f64| {
        let mut s = bump(&params, &grid);
        let n = (t_end / dt).round() as usize;
        for _ in 0..n {
            s = step_with_dt(&s, dt, &config, &params, &law, &grid).unwrap().0;
        }
        s
    };
    let dt0 = t_end / (t_end / base).ceil();
    let (s1, s2, s3) = (solve(dt0), solve(dt0 / 2.0), solve(dt0 / 4.0));
    let diff = |x: &RadialField<f64>, y: &RadialField<f64>| {
        x.rho.iter().zip(&y.rho).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
            + x.m.iter().zip(&y.m).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    };
    let (e1, e2) = (diff(&s1, &s2), diff(&s2, &s3));
    let order = (e1 / e2).log2();
    assert!(order >= 0.9, "observed order {order} ({e1:e}, {e2:e})");
}

#[test]
fn runs_are_bit_identical() {
    let spec = SweepSpec::default();
    let a = run_problem::<f64>(&spec, 1e-1, &spec.problem.profile).unwrap();
    let b = run_problem::<f64>(&spec, 1e-1, &spec.problem.profile).unwrap();
    assert_eq!(a.snapshots, b.snapshots);
    assert_eq!(a.energies, b.energies);
}

#[test]
fn constant_state_over_unit_time() {
    let mut spec = SweepSpec::default();
    spec.problem.t_final = 1.0;
    let traj = run_problem::<f64>(&spec, 1e-1, &Profile::Constant).unwrap();
    let rb = traj.params.rho_bar;
    for s in &traj.snapshots {
        assert!(s.rho.iter().all(|&r| (r - rb).abs() <= 1e-10));
        assert!(s.m.iter().all(|&m| m.abs() <= 1e-10));
    }
}

#[test]
fn bump_energy_never_exceeds_initial() {
    let spec = SweepSpec::default();
    let traj = run_problem::<f64>(&spec, 1e-2, &spec.problem.profile).unwrap();
    let e0 = traj.initial_energy;
    for (s, &e) in traj.snapshots.iter().zip(&traj.energies) {
        assert!(e <= e0 * (1.0 + 1e-6), "E({}) = {e} > E0 = {e0}", s.t);
        let direct = discrete_energy(&s.rho, &s.m, &traj.grid, &traj.law, traj.params.rho_bar);
        assert!((direct - e).abs() <= 1e-12 * e0.max(1.0));
    }
}

#[test]
fn boundary_traces_hold_at_every_snapshot() {
    let spec = SweepSpec::default();
    let traj = run_problem::<f64>(&spec, 1e-2, &spec.problem.profile).unwrap();
    let g = &traj.grid;
    let x = g.nodes();
    let last = g.last();
    for s in &traj.snapshots {
        let rho_r = (s.rho[1] - s.rho[0]) / (x[1] - x[0]);
        assert!(rho_r.abs() <= 1e-8);
        assert!(s.m[0].abs() <= 1e-8);
        assert!((s.rho[last] - traj.params.rho_bar).abs() <= 1e-8);
        assert!(s.m[last].abs() <= 1e-8);
        assert!(s.min_density() > 0.0);
    }
}

#[test]
fn energy_tolerance_shrinks_under_refinement() {
    let mut spec = SweepSpec::default();
    spec.problem.t_final = 0.25;
    let excess = |spec: &SweepSpec| {
        let t = run_problem::<f64>(spec, 1e-1, &spec.problem.profile).unwrap();
        let e0 = t.initial_energy;
        t.snapshots
            .iter()
            .zip(&t.energies)
            .map(|(s, &e)| e + s.dissipation.total() - e0)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let coarse = excess(&spec);
    spec.solver = spec.solver.refined(2);
    let fine = excess(&spec);
    assert!(fine < coarse, "{fine:e} !< {coarse:e}");
}

#[test]
fn failed_run_keeps_partial_trajectory() {
    let (params, law, grid) = setup(1e-1, 0.02);
    let flow = Profile::BumpWithFlow {
        amplitude: 1.0,
        width: 1.0,
        velocity: 50.0,
    };
    let init = prepare_profile(&flow, &params, &grid, &InitSpec::default()).unwrap();
    let mut config = SolverConfig::with_uniform_snapshots(0.5, 10);
    config.dt_control.fixed_dt = Some(0.02);
    let failure = run(&init, &config, &params, &law, &grid).unwrap_err();
    assert!(!failure.partial.snapshots.is_empty());
    assert!(failure.to_string().contains("aborted"));
}

#[test]
fn f32_run_tracks_f64() {
    let spec = SweepSpec::default();
    let a = run_problem::<f32>(&spec, 1e-1, &spec.problem.profile).unwrap();
    let b = run_problem::<f64>(&spec, 1e-1, &spec.problem.profile).unwrap();
    let (fa, fb) = (a.last(), b.last());
    let err = fa.rho.iter().zip(&fb.rho).map(|(&x, &y)| (x as f64 - y).abs()).fold(0.0, f64::max);
    assert!(err < 1e-3, "f32 drift {err}");
}
