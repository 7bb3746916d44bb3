use serde::{Deserialize, Serialize};

use super::testfn::{radial_test_from_multid, MultiDTest, TestFunction, TestValue};
use super::{dot, time_trapezoid, Derived};
use crate::error::Result;
use crate::model::RadialField;
use crate::quadrature::SphereRule;
use crate::scalar::{from_usize, Scalar};
use crate::solver::Trajectory;

/// Continuity equation tested against one `phi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuityResidual<T> {
    /// `int int (rho phi_t + m phi_r) r^{n-1} + int rho_0 phi(0) r^{n-1} - int rho(T) phi(T) r^{n-1}`
    pub euler: T,
    /// `eps int int rho_r phi_r r^{n-1}`
    pub viscous: T,
}

/// Momentum equation tested against one admissible `phi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentumResidual<T> {
    /// Euler weak residual with `p(rho)` and the uncut `phi`.
    pub euler: T,
    /// `eps int int ((r^{n-1} m)_r phi^eps_r + (n-1)/r (r^{n-1} m)_r phi^eps) dr`
    pub viscous: T,
    /// `int int delta rho^2 (phi_r + (n-1)/r phi) r^{n-1}`
    pub delta_term: T,
    /// Euler residual with `p_delta` and `phi^eps` minus `viscous`; zero up to
    /// discretization error for a solution of the viscous system.
    pub viscous_balance: T,
}

fn test_values<T: Scalar>(phi: &TestFunction<T>, t: T, x: &[T]) -> Vec<TestValue<T>> {
    x.iter().map(|&r| phi.eval(t, r)).collect()
}

fn endpoint_terms<T: Scalar, F>(traj: &Trajectory<T>, w: &[T], mut f: F) -> T
where
    F: FnMut(&RadialField<T>) -> Vec<T>,
{
    let first = traj.snapshots.first().expect("initial snapshot");
    dot(w, &f(first)) - dot(w, &f(traj.last()))
}

pub fn weak_residual_continuity<T: Scalar>(traj: &Trajectory<T>, phi: &TestFunction<T>) -> ContinuityResidual<T> {
    let grid = &traj.grid;
    let x = grid.nodes();
    let w = grid.hat_weights(grid.n_dim() as i32 - 1);
    let eps = traj.params.eps;
    let times = traj.times();
    let mut euler_t = Vec::with_capacity(times.len());
    let mut visc_t = Vec::with_capacity(times.len());
    for s in &traj.snapshots {
        let d = Derived::new(s, grid);
        let v = test_values(phi, s.t, x);
        let e: Vec<T> = (0..s.len()).map(|i| s.rho[i] * v[i].phi_t + s.m[i] * v[i].phi_r).collect();
        let c: Vec<T> = (0..s.len()).map(|i| eps * d.rho_r[i] * v[i].phi_r).collect();
        euler_t.push(dot(&w, &e));
        visc_t.push(dot(&w, &c));
    }
    let ends = endpoint_terms(traj, &w, |s| {
        x.iter().zip(&s.rho).map(|(&r, &rho)| rho * phi.eval(s.t, r).phi).collect()
    });
    ContinuityResidual {
        euler: time_trapezoid(&times, &euler_t) + ends,
        viscous: time_trapezoid(&times, &visc_t),
    }
}

/// Euler momentum integrand with a chosen pressure, tested against `phi`.
fn momentum_euler<T: Scalar, P: Fn(T) -> T>(traj: &Trajectory<T>, phi: &TestFunction<T>, pressure: P) -> T {
    let grid = &traj.grid;
    let x = grid.nodes();
    let w = grid.hat_weights(grid.n_dim() as i32 - 1);
    let nm1: T = from_usize(grid.n_dim() - 1);
    let times = traj.times();
    let vals: Vec<T> = traj
        .snapshots
        .iter()
        .map(|s| {
            let v = test_values(phi, s.t, x);
            let f: Vec<T> = (0..s.len())
                .map(|i| {
                    let (rho, m) = (s.rho[i], s.m[i]);
                    m * v[i].phi_t + m * m / rho * v[i].phi_r + pressure(rho) * (v[i].phi_r + nm1 / x[i] * v[i].phi)
                })
                .collect();
            dot(&w, &f)
        })
        .collect();
    let ends = endpoint_terms(traj, &w, |s| {
        x.iter().zip(&s.m).map(|(&r, &m)| m * phi.eval(s.t, r).phi).collect()
    });
    time_trapezoid(&times, &vals) + ends
}

/// Rejects `phi` unless `|phi(t, 0)|` is below the admissibility threshold at every snapshot time.
pub fn weak_residual_momentum<T: Scalar>(traj: &Trajectory<T>, phi: &TestFunction<T>) -> Result<MomentumResidual<T>> {
    let times = traj.times();
    phi.check_admissible(&times)?;
    let grid = &traj.grid;
    let x = grid.nodes();
    let law = traj.law;
    let eps = traj.params.eps;
    let delta = law.delta();
    let nm1: T = from_usize(grid.n_dim() - 1);
    let cut = phi.cut_at(grid.a());

    let euler = momentum_euler(traj, phi, |rho| law.euler_pressure(rho));
    let euler_delta_cut = momentum_euler(traj, &cut, |rho| law.pressure_unchecked(rho));

    let w0 = grid.hat_weights(0);
    let wn = grid.hat_weights(grid.n_dim() as i32 - 1);
    let mut visc_t = Vec::with_capacity(times.len());
    let mut delta_t = Vec::with_capacity(times.len());
    for s in &traj.snapshots {
        let lumped: Vec<T> = s.m.iter().zip(grid.node_weight()).map(|(&m, &k)| m * k).collect();
        let dl = grid.derivative(&lumped);
        let vc = test_values(&cut, s.t, x);
        let v = test_values(phi, s.t, x);
        let f: Vec<T> = (0..s.len())
            .map(|i| eps * dl[i] * (vc[i].phi_r + nm1 / x[i] * vc[i].phi))
            .collect();
        let g: Vec<T> = (0..s.len())
            .map(|i| delta * s.rho[i] * s.rho[i] * (v[i].phi_r + nm1 / x[i] * v[i].phi))
            .collect();
        visc_t.push(dot(&w0, &f));
        delta_t.push(dot(&wn, &g));
    }
    let viscous = time_trapezoid(&times, &visc_t);
    Ok(MomentumResidual {
        euler,
        viscous,
        delta_term: time_trapezoid(&times, &delta_t),
        viscous_balance: euler_delta_cut - viscous,
    })
}

/// Multi-dimensional against radial momentum weak integrals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub multid: f64,
    pub radial: f64,
    pub discrepancy: f64,
}

/// Evaluates the `R^n` momentum weak integral for component `j` by product
/// (radial nodes x sphere rule) quadrature of the radially symmetric fields, and
/// the radial weak integral against `zeta` from the same sphere rule.
pub fn multid_equivalence_check<T: Scalar>(
    traj: &Trajectory<T>,
    phi: &MultiDTest<T>,
    j: usize,
    order: usize,
) -> Result<EquivalenceReport> {
    let grid = &traj.grid;
    let n = grid.n_dim();
    let zeta = radial_test_from_multid(phi, j, n, order)?;
    let law = traj.law;
    let radial = momentum_euler(traj, &zeta, |rho| law.euler_pressure(rho));

    let rule = SphereRule::<T>::new(n, order)?;
    let x = grid.nodes();
    let w = grid.hat_weights(n as i32 - 1);
    let times = traj.times();
    let at = |t: T, r: T, f: &mut dyn FnMut(&[T; 3], T, &super::MultiDValue<T>)| {
        for (y, &wk) in rule.points().iter().zip(rule.weights()) {
            let p = [r * y[0], r * y[1], r * y[2]];
            let v = phi.eval(t, &p);
            f(y, wk, &v);
        }
    };
    let vals: Vec<T> = traj
        .snapshots
        .iter()
        .map(|s| {
            let f: Vec<T> = (0..s.len())
                .map(|i| {
                    let (rho, m) = (s.rho[i], s.m[i]);
                    let u = m / rho;
                    let p = law.euler_pressure(rho);
                    let mut acc = T::zero();
                    at(s.t, x[i], &mut |y, wk, v| {
                        let radial_grad = v.grad[0] * y[0] + v.grad[1] * y[1] + v.grad[2] * y[2];
                        acc = acc + wk * (m * y[j] * v.phi_t + m * u * y[j] * radial_grad + p * v.grad[j]);
                    });
                    acc
                })
                .collect();
            dot(&w, &f)
        })
        .collect();
    let ends = endpoint_terms(traj, &w, |s| {
        (0..s.len())
            .map(|i| {
                let mut acc = T::zero();
                at(s.t, x[i], &mut |y, wk, v| acc = acc + wk * s.m[i] * y[j] * v.phi);
                acc
            })
            .collect()
    });
    let multid = crate::scalar::to_f64(time_trapezoid(&times, &vals) + ends);
    let radial = crate::scalar::to_f64(radial);
    Ok(EquivalenceReport {
        multid,
        radial,
        discrepancy: (multid - radial).abs(),
    })
}
