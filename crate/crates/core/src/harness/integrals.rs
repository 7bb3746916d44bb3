use serde::{Deserialize, Serialize};

use super::testfn::{Cutoff, Truncation};
use super::{dot, time_trapezoid, Derived};
use crate::error::{Error, Result};
use crate::model::{RadialField, RadialGrid};
use crate::scalar::{from_usize, lit, to_f64, Scalar};
use crate::solver::Trajectory;

/// Absolute slack added to the relative energy tolerance, so that the
/// all-zero pattern of a constant state passes at roundoff level.
pub const ENERGY_ABS_TOL: f64 = 1e-12;

/// Energy bookkeeping of one run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub e0: f64,
    /// `max_k E(t_k)`.
    pub sup_energy: f64,
    /// Accumulated dissipation at the final time.
    pub dissipation: f64,
    /// `max_k [E(t_k) + D(t_k)]`, the quantity that must not exceed `e0`.
    pub max_balance: f64,
    /// `sup_k E(t_k) + D(T)`.
    pub sup_plus_total: f64,
    /// `max_balance / e0 - 1` (0 when `e0 = 0`).
    pub relative_excess: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn energy_report<T: Scalar>(traj: &Trajectory<T>, tol: f64) -> EnergyReport {
    let e0 = to_f64(traj.initial_energy);
    let mut sup_energy = f64::NEG_INFINITY;
    let mut max_balance = f64::NEG_INFINITY;
    for (s, &e) in traj.snapshots.iter().zip(&traj.energies) {
        let e = to_f64(e);
        sup_energy = sup_energy.max(e);
        max_balance = max_balance.max(e + to_f64(s.dissipation.total()));
    }
    let dissipation = to_f64(traj.final_dissipation().total());
    let relative_excess = if e0 > 0.0 { max_balance / e0 - 1.0 } else { 0.0 };
    EnergyReport {
        e0,
        sup_energy,
        dissipation,
        max_balance,
        sup_plus_total: sup_energy + dissipation,
        relative_excess,
        tolerance: tol,
        pass: max_balance <= e0 * (1.0 + tol) + ENERGY_ABS_TOL,
    }
}

fn space_time<T: Scalar, F>(traj: &Trajectory<T>, mut f: F) -> T
where
    F: FnMut(&RadialField<T>) -> T,
{
    let times = traj.times();
    let vals: Vec<T> = traj.snapshots.iter().map(&mut f).collect();
    time_trapezoid(&times, &vals)
}

/// `(int int rho |u|^3 omega r^{n-1}, int int rho^{gamma + theta} omega r^{n-1})`.
pub fn higher_integrability_parts<T: Scalar>(traj: &Trajectory<T>, omega: &Cutoff) -> (T, T) {
    let grid = &traj.grid;
    let w = grid.hat_weights(grid.n_dim() as i32 - 1);
    let om: Vec<T> = grid.nodes().iter().map(|&r| omega.eval(r).0).collect();
    let expo = traj.law.gamma() + traj.law.theta();
    let kinetic = space_time(traj, |s| {
        let f: Vec<T> = (0..s.len())
            .map(|i| {
                let u = s.m[i] / s.rho[i];
                s.rho[i] * u.abs().powi(3) * om[i]
            })
            .collect();
        dot(&w, &f)
    });
    let potential = space_time(traj, |s| {
        let f: Vec<T> = (0..s.len()).map(|i| s.rho[i].powf(expo) * om[i]).collect();
        dot(&w, &f)
    });
    (kinetic, potential)
}

/// `int_0^T int_a^b (rho |u|^3 + rho^{gamma + theta}) omega r^{n-1} dr dt`.
pub fn higher_integrability<T: Scalar>(traj: &Trajectory<T>, omega: &Cutoff) -> T {
    let (k, p) = higher_integrability_parts(traj, omega);
    k + p
}

fn check_radius<T: Scalar>(grid: &RadialGrid<T>, r: T) -> Result<()> {
    if !(r >= grid.a() && r < grid.b()) {
        return Err(Error::domain("radius outside [a, b)", to_f64(r)));
    }
    Ok(())
}

/// `int_r^b rho^gamma y^l dy` for one snapshot.
pub fn tail_density_integrals<T: Scalar>(
    snapshot: &RadialField<T>,
    grid: &RadialGrid<T>,
    gamma: T,
    l: usize,
    r: T,
) -> Result<T> {
    check_radius(grid, r)?;
    if l >= grid.n_dim() {
        return Err(Error::domain("power l must be below n", l as f64));
    }
    let w = grid.hat_weights_from(r, l as i32);
    let f: Vec<T> = snapshot.rho.iter().map(|&x| x.powf(gamma)).collect();
    Ok(dot(&w, &f))
}

/// `int_0^T int_r^b rho^3 y^{n-1} dy dt`.
pub fn rho_cubed_integral<T: Scalar>(traj: &Trajectory<T>, r: T) -> Result<T> {
    let grid = &traj.grid;
    check_radius(grid, r)?;
    let w = grid.hat_weights_from(r, grid.n_dim() as i32 - 1);
    Ok(space_time(traj, |s| {
        let f: Vec<T> = s.rho.iter().map(|&x| x * x * x).collect();
        dot(&w, &f)
    }))
}

/// `(eps int int rho_r^2 1{rho<D} omega^2 r^{n-1}, eps int int rho_r^2 / rho 1{rho<D} omega^2 r^{n-1})`.
pub fn viscous_derivative_integrals<T: Scalar>(traj: &Trajectory<T>, delta: f64, omega: &Cutoff) -> Result<(T, T)> {
    let q = Truncation::Quadratic { delta };
    let l = Truncation::Log { delta };
    q.validate()?;
    let a = continuity_identity_residual(traj, &q, omega)?;
    let b = continuity_identity_residual(traj, &l, omega)?;
    Ok((a.lhs, b.lhs))
}

/// Both sides of the truncated continuity identity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityTerms<T> {
    /// `eps int int phi''(rho) rho_r^2 omega^2 r^{n-1}`
    pub lhs: T,
    /// The five right-hand terms in order: time boundary, `u_r` term,
    /// `omega_r` transport term, geometric term, viscous `omega_r` term.
    pub terms: [T; 5],
    pub rhs: T,
    pub residual: T,
}

pub fn continuity_identity_residual<T: Scalar>(
    traj: &Trajectory<T>,
    trunc: &Truncation,
    omega: &Cutoff,
) -> Result<IdentityTerms<T>> {
    trunc.validate()?;
    let grid = &traj.grid;
    let eps = traj.params.eps;
    let x = grid.nodes();
    let nm1: T = from_usize(grid.n_dim() - 1);
    let w = grid.hat_weights(grid.n_dim() as i32 - 1);
    let om: Vec<(T, T)> = x.iter().map(|&r| omega.eval(r)).collect();
    let two: T = lit(2.0);

    let mut lhs_t = Vec::with_capacity(traj.snapshots.len());
    let mut rhs_t: [Vec<T>; 4] = Default::default();
    for s in &traj.snapshots {
        let d = Derived::new(s, grid);
        let n = s.len();
        let mut f = [vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n]];
        let mut g = vec![T::zero(); n];
        for i in 0..n {
            let rho = s.rho[i];
            let (o, o_r) = om[i];
            let p = trunc.value(rho);
            let p1 = trunc.first(rho);
            let gap = p - rho * p1;
            g[i] = eps * trunc.second(rho) * d.rho_r[i] * d.rho_r[i] * o * o;
            f[0][i] = gap * d.u_r[i] * o * o;
            f[1][i] = two * p * d.u[i] * o * o_r;
            f[2][i] = nm1 / x[i] * gap * d.u[i] * o * o;
            f[3][i] = -two * eps * p1 * d.rho_r[i] * o * o_r;
        }
        lhs_t.push(dot(&w, &g));
        for k in 0..4 {
            rhs_t[k].push(dot(&w, &f[k]));
        }
    }
    let times = traj.times();
    let lhs = time_trapezoid(&times, &lhs_t);
    let boundary = |s: &RadialField<T>| -> T {
        let f: Vec<T> = (0..s.len()).map(|i| trunc.value(s.rho[i]) * om[i].0 * om[i].0).collect();
        dot(&w, &f)
    };
    let first = traj.snapshots.first().expect("initial snapshot");
    let j1 = -(boundary(traj.last()) - boundary(first));
    let terms = [
        j1,
        time_trapezoid(&times, &rhs_t[0]),
        time_trapezoid(&times, &rhs_t[1]),
        time_trapezoid(&times, &rhs_t[2]),
        time_trapezoid(&times, &rhs_t[3]),
    ];
    let rhs = terms.iter().copied().sum();
    Ok(IdentityTerms {
        lhs,
        terms,
        rhs,
        residual: (lhs - rhs).abs(),
    })
}
