use std::collections::BTreeMap;

use sphvisc::harness::*;
use sphvisc::model::{GridSpec, RadialField, RadialGrid};
use sphvisc::solver::{Profile, Trajectory};
use sphvisc::Error;

fn constant(eps: f64) -> (SweepSpec, Trajectory<f64>) {
    let spec = SweepSpec::default();
    let t = run_problem::<f64>(&spec, eps, &Profile::Constant).unwrap();
    (spec, t)
}

fn bump(eps: f64) -> (SweepSpec, Trajectory<f64>) {
    let spec = SweepSpec::default();
    let t = run_problem::<f64>(&spec, eps, &spec.problem.profile).unwrap();
    (spec, t)
}

/// Composite Simpson rule on `[lo, hi]` with `n` (even) panels.
fn simpson(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (hi - lo) / n as f64;
    let mut s = f(lo) + f(hi);
    for k in 1..n {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(lo + k as f64 * h);
    }
    s * h / 3.0
}

#[test]
fn constant_state_energy_terms_vanish() {
    let (_, t) = constant(1e-1);
    let e = energy_report(&t, 1e-4);
    assert!(e.e0.abs() < 1e-20 && e.sup_energy.abs() < 1e-20 && e.dissipation.abs() < 1e-20);
    assert!(e.pass);
}

#[test]
fn bump_energy_passes_at_reference_tolerance() {
    let (_, t) = bump(1e-1);
    let e = energy_report(&t, 1e-4);
    assert!(e.pass, "relative excess {}", e.relative_excess);
    assert!(e.dissipation > 0.0);
}

#[test]
fn energy_report_stable_under_dt_halving() {
    let (mut spec, t) = bump(1e-1);
    let coarse = energy_report(&t, 1e-4);
    spec.solver.cfl /= 2.0;
    let t2 = run_problem::<f64>(&spec, 1e-1, &spec.problem.profile).unwrap();
    let fine = energy_report(&t2, 1e-4);
    for (a, b) in [(coarse.e0, fine.e0), (coarse.sup_energy, fine.sup_energy), (coarse.dissipation, fine.dissipation)] {
        assert!((a - b).abs() <= 0.01 * a.abs(), "{a} vs {b}");
    }
}

#[test]
fn constant_state_higher_integrability_closed_form() {
    let (spec, t) = constant(1e-1);
    let om = omega();
    let law = t.law;
    let rb = t.params.rho_bar;
    let (a, b) = (t.params.a, t.params.b);
    let w_int = simpson(a, b, 20_000, |r| om.eval(r).0 * r * r);
    let expected = spec.problem.t_final * rb.powf(law.gamma() + law.theta()) * w_int;
    let got = higher_integrability(&t, &om);
    assert!((got - expected).abs() <= 1e-4 * expected, "{got} vs {expected}");
}

#[test]
fn higher_integrability_is_linear_in_its_parts() {
    let (_, t) = bump(1e-1);
    let whole = Cutoff::new(10.0, 11.0).unwrap();
    let (k, p) = higher_integrability_parts(&t, &whole);
    assert_eq!(higher_integrability(&t, &whole), k + p);
    assert!(k > 0.0 && p > 0.0);
}

#[test]
fn higher_integrability_grows_with_final_time() {
    let (_, t) = bump(1e-1);
    let om = omega();
    let mut prev = 0.0;
    for k in [2, 10, 50, t.snapshots.len()] {
        let mut part = t.clone();
        part.snapshots.truncate(k);
        part.energies.truncate(k);
        let v = higher_integrability(&part, &om);
        assert!(v >= prev);
        prev = v;
    }
}

#[test]
fn constant_state_tail_and_cube_closed_forms() {
    let (spec, t) = constant(1e-2);
    let rb = t.params.rho_bar;
    let b = t.params.b;
    let gamma = t.law.gamma();
    let r = 1.0;
    for l in 0..3 {
        let got = tail_density_integrals(t.last(), &t.grid, gamma, l, r).unwrap();
        let lp = (l + 1) as f64;
        let expected = rb.powf(gamma) * (b.powf(lp) - r.powf(lp)) / lp;
        assert!((got - expected).abs() <= 1e-12 * expected, "l={l}: {got} vs {expected}");
    }
    let got = rho_cubed_integral(&t, r).unwrap();
    let expected = spec.problem.t_final * rb.powi(3) * (b.powi(3) - 1.0) / 3.0;
    assert!((got - expected).abs() <= 1e-12 * expected);
}

#[test]
fn tail_is_decreasing_in_radius_and_rejects_outside_points() {
    let (_, t) = bump(1e-1);
    let s = t.last();
    let g = t.law.gamma();
    let x = t.grid.nodes();
    let vals: Vec<f64> = x[..x.len() - 1].iter().map(|&r| tail_density_integrals(s, &t.grid, g, 2, r).unwrap()).collect();
    assert!(vals.windows(2).all(|w| w[1] <= w[0]));
    assert!(matches!(tail_density_integrals(s, &t.grid, g, 0, t.grid.b()), Err(Error::Domain { .. })));
    assert!(tail_density_integrals(s, &t.grid, g, 0, 0.5 * t.grid.a()).is_err());
    assert!(tail_density_integrals(s, &t.grid, g, 3, 1.0).is_err());
    assert!(rho_cubed_integral(&t, 2.0 * t.grid.b()).is_err());
}

#[test]
fn cube_integral_matches_direct_trapezoid() {
    let mut spec = SweepSpec::default();
    spec.problem.gamma = 3.0;
    let t = run_problem::<f64>(&spec, 1e-1, &spec.problem.profile).unwrap();
    let x = t.grid.nodes();
    let r = *x.iter().find(|&&r| r >= 0.8).unwrap();
    let got = rho_cubed_integral(&t, r).unwrap();
    let per_snapshot: Vec<f64> = t
        .snapshots
        .iter()
        .map(|s| {
            (0..x.len() - 1)
                .filter(|&i| x[i] >= r)
                .map(|i| {
                    let f = |k: usize| s.rho[k].powi(3) * x[k] * x[k];
                    0.5 * (x[i + 1] - x[i]) * (f(i) + f(i + 1))
                })
                .sum()
        })
        .collect();
    let times = t.times();
    let direct: f64 = times.windows(2).zip(per_snapshot.windows(2)).map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1])).sum();
    assert!((got - direct).abs() <= 1e-3 * direct, "{got} vs {direct}");
}

#[test]
fn gradient_integrals_vanish_for_constant_states() {
    let (_, t) = constant(1e-1);
    assert!(t.params.rho_bar < 0.1);
    for d in [0.01, 0.1, 0.25] {
        let (l31, l32) = viscous_derivative_integrals(&t, d, &omega()).unwrap();
        assert!(l31.abs() < 1e-20 && l32.abs() < 1e-20);
    }
    assert!(matches!(viscous_derivative_integrals(&t, 0.5, &omega()), Err(Error::Domain { .. })));
    assert!(viscous_derivative_integrals(&t, 0.0, &omega()).is_err());
}

#[test]
fn constant_state_identity_both_sides_zero() {
    let (_, t) = constant(1e-1);
    for tr in [Truncation::Quadratic { delta: 0.25 }, Truncation::Log { delta: 0.1 }] {
        let id = continuity_identity_residual(&t, &tr, &omega()).unwrap();
        assert!(id.lhs.abs() < 1e-20);
        assert!(id.rhs.abs() < 1e-14, "{:?}", id);
    }
}

/// Smooth fields that do not solve the continuity equation: the identity must
/// fail by `int int f phi'(rho) omega^2 r^2` where `f` is the injected residual.
#[test]
fn manufactured_fields_break_identity_by_injected_residual() {
    let spec = SweepSpec::default();
    let params = spec.params::<f64>(1e-2).unwrap();
    let law = params.law().unwrap();
    let (a, eps) = (params.a, params.eps);
    let grid = RadialGrid::geometric_uniform(params.a, params.b, 3, &GridSpec::new(0.001)).unwrap();
    let t_final = 0.5;
    let k = |t: f64| 0.1 * (1.0 + t);
    let s = |t: f64| 0.1 * t;
    let rho = |t: f64, r: f64| 0.05 + k(t) * (-(r - a).powi(2)).exp();
    let m = |t: f64, r: f64| s(t) * (r - a) * (-(r - a).powi(2)).exp();
    let f = |t: f64, r: f64| {
        let y = r - a;
        let e = (-y * y).exp();
        let rho_t = 0.1 * e;
        let rho_r = -2.0 * y * k(t) * e;
        let rho_rr = k(t) * (4.0 * y * y - 2.0) * e;
        let m_r = s(t) * (1.0 - 2.0 * y * y) * e;
        rho_t + m_r + 2.0 * m(t, r) / r - eps * (rho_rr + 2.0 * rho_r / r)
    };
    let count = 400;
    let snapshots: Vec<RadialField<f64>> = (0..=count)
        .map(|j| {
            let t = t_final * j as f64 / count as f64;
            let x = grid.nodes();
            RadialField::new(t, x.iter().map(|&r| rho(t, r)).collect(), x.iter().map(|&r| m(t, r)).collect(), 1e-12).unwrap()
        })
        .collect();
    let traj = Trajectory {
        grid: grid.clone(),
        params,
        law,
        energies: vec![0.0; snapshots.len()],
        snapshots,
        initial_energy: 0.0,
        steps: 0,
    };
    let om = omega();
    for tr in [Truncation::Quadratic { delta: 0.25 }, Truncation::Log { delta: 0.25 }] {
        let id = continuity_identity_residual(&traj, &tr, &om).unwrap();
        let oracle = simpson(0.0, t_final, 200, |t| {
            simpson(a, om.outer, 4000, |r| f(t, r) * tr.first(rho(t, r)) * om.eval(r).0.powi(2) * r * r)
        });
        let signed = id.lhs - id.rhs;
        assert!(oracle.abs() > 1e-4);
        assert!((signed - oracle).abs() <= 1e-3 * oracle.abs(), "{tr:?}: {signed:e} vs {oracle:e}");
        assert_eq!(id.residual, signed.abs());
    }
}

#[test]
fn zero_test_function_gives_zero_residuals() {
    let (_, t) = bump(1e-1);
    let z = TestFunction::<f64>::zero();
    let c = weak_residual_continuity(&t, &z);
    assert_eq!((c.euler, c.viscous), (0.0, 0.0));
    let m = weak_residual_momentum(&t, &z).unwrap();
    assert_eq!((m.euler, m.viscous, m.delta_term), (0.0, 0.0, 0.0));
}

#[test]
fn constant_state_weak_residuals_vanish() {
    let (spec, t) = constant(1e-1);
    let tf = spec.problem.t_final;
    let starts_nonzero = TestFunction::tensor("c", Cutoff::new(0.2 * tf, 0.9 * tf).unwrap(), Cutoff::new(0.5, 1.1).unwrap(), 0);
    assert!(starts_nonzero.eval(0.0, 0.7).phi > 0.5);
    let c = weak_residual_continuity(&t, &starts_nonzero);
    assert!(c.euler.abs() < 1e-12 && c.viscous.abs() < 1e-16, "{c:?}");
    // only the pressure trace at the inner boundary survives
    let a = t.params.a;
    let p = t.law.euler_pressure(t.params.rho_bar);
    for phi in default_family::<f64>(tf).iter().filter(|f| f.name() != "bump") {
        let m = weak_residual_momentum(&t, phi).unwrap();
        let trace = p * a * a * simpson(0.0, tf, 2000, |s| phi.eval(s, a).phi).abs();
        assert!((m.euler.abs() - trace).abs() <= 1e-3 * trace, "{}: {m:?} vs {trace:e}", phi.name());
    }
}

#[test]
fn momentum_rejects_inadmissible_test_functions() {
    let (spec, t) = bump(1e-1);
    let fam = default_family::<f64>(spec.problem.t_final);
    let plain = fam.iter().find(|f| f.name() == "bump").unwrap();
    assert!(matches!(weak_residual_momentum(&t, plain), Err(Error::Admissibility { .. })));
    let linear = fam.iter().find(|f| f.name() == "linear").unwrap();
    assert!(linear.origin_trace(0.1).1 != 0.0);
    assert!(weak_residual_momentum(&t, linear).is_ok());
}

#[test]
fn multid_checks() {
    let (_, t) = bump(1e-2);
    let radial = MultiDTest::<f64>::radial(Cutoff::new(1.0, 2.0).unwrap(), Cutoff::new(0.5, 1.1).unwrap());
    let r = multid_equivalence_check(&t, &radial, 0, 16).unwrap();
    assert!(r.multid.abs() < 1e-14 && r.radial.abs() < 1e-14);
    let app = coordinate_multid::<f64>(0);
    let r = multid_equivalence_check(&t, &app, 0, 16).unwrap();
    assert!(r.discrepancy < 1e-6 && r.multid.abs() > 1e-6);

    let (_, c) = constant(1e-2);
    let r = multid_equivalence_check(&c, &app, 0, 16).unwrap();
    assert!(r.discrepancy <= 1e-10 * r.multid.abs().max(1e-12), "{r:?}");

    for j in 0..3 {
        let z = radial_test_from_multid(&coordinate_multid::<f64>(j), j, 3, 16).unwrap();
        for &s in &t.times() {
            assert!(z.origin_trace(s).0.abs() <= 1e-10);
        }
    }
    assert!(matches!(radial_test_from_multid(&app, 0, 4, 16), Err(Error::Unsupported(_))));
}

#[test]
fn snapshot_density_refinement_changes_integrals_by_less_than_one_percent() {
    let (mut spec, t) = bump(1e-2);
    let fam = default_family::<f64>(spec.problem.t_final);
    let coarse = evaluate_run(&t, &spec, &fam).unwrap();
    spec.solver.snapshots *= 2;
    let t2 = run_problem::<f64>(&spec, 1e-2, &spec.problem.profile).unwrap();
    let fine = evaluate_run(&t2, &spec, &fam).unwrap();
    let integrals = ["energy_", "higher_integrability", "tail_l", "rho_cubed", "grad_sq_d", "grad_log_d", "cont_viscous", "mom_viscous"];
    let mut checked = 0;
    for (k, &v) in &coarse {
        if !integrals.iter().any(|p| k.starts_with(p)) || v.abs() < 1e-12 {
            continue;
        }
        let w = fine[k];
        assert!((v - w).abs() <= 0.01 * v.abs(), "{k}: {v:e} -> {w:e}");
        checked += 1;
    }
    assert!(checked >= 15);
}

#[test]
fn non_negative_integrands_give_non_negative_integrals() {
    let (spec, t) = bump(1e-1);
    let q: BTreeMap<String, f64> = evaluate_run(&t, &spec, &default_family(spec.problem.t_final)).unwrap();
    for (k, v) in &q {
        let positive = ["higher_integrability", "tail_l", "rho_cubed", "grad_sq_d", "grad_log_d", "energy_dissipation"];
        if positive.iter().any(|p| k.starts_with(p)) {
            assert!(*v >= 0.0, "{k} = {v}");
        }
    }
}

#[test]
fn singleton_sweep_is_a_one_row_report() {
    let mut spec = SweepSpec::default();
    spec.schedule.eps = vec![0.1];
    let fam = default_family(spec.problem.t_final);
    let rep = sweep_report(&spec, &fam, Some(1)).unwrap();
    assert_eq!(rep.rows.len(), 1);
    assert!(rep.fits.is_empty());
    let (_, single) = single_report(&spec, 0.1, &fam).unwrap();
    assert_eq!(single.rows[0].quantities, rep.rows[0].quantities);
}

#[test]
fn loglog_fit_recovers_power_law() {
    let x = [0.1, 0.01, 0.001];
    let y: Vec<f64> = x.iter().map(|e: &f64| 3.0 * e.powf(0.75)).collect();
    let (slope, intercept) = loglog_slope(&x, &y).unwrap();
    assert!((slope - 0.75).abs() < 1e-12);
    assert!((intercept - 3f64.ln()).abs() < 1e-12);
    assert!(loglog_slope(&x[..1], &y[..1]).is_none());
    assert!(loglog_slope(&x, &[1.0, 0.0, 1.0]).is_none());
}

#[test]
fn random_family_is_seeded_and_admissible() {
    let a = random_family::<f64>(7, 5, 0.5);
    let b = random_family::<f64>(7, 5, 0.5);
    let times: Vec<f64> = (0..=50).map(|k| 0.01 * k as f64).collect();
    for (f, g) in a.iter().zip(&b) {
        assert_eq!(f.eval(0.2, 0.6), g.eval(0.2, 0.6));
        f.check_admissible(&times).unwrap();
    }
}
