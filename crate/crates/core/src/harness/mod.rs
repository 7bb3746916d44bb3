//! Measurements on computed trajectories: energy bookkeeping, integrability
//! and gradient estimates, weak-form residuals, and the ε-sweep report.
//!
//! Space integrals integrate the piecewise-linear interpolant of nodal values
//! against `r^{n-1}` (or another power) exactly; time integrals use the
//! trapezoid rule over the stored snapshots.

pub mod criteria;
pub use criteria::all_criteria;
mod integrals;
mod sweep;
mod svg;
mod testfn;
mod weak;

pub use integrals::{
    continuity_identity_residual, energy_report, higher_integrability, higher_integrability_parts, rho_cubed_integral,
    tail_density_integrals, viscous_derivative_integrals, EnergyReport, IdentityTerms, ENERGY_ABS_TOL,
};
pub use svg::loglog_svg;
pub use sweep::{
    coordinate_multid, evaluate_run, identity_refinement_study, grad_sq_shape, grad_log_shape, loglog_slope, random_family, run_problem, single_report, sweep_report, EpsRow,
    EstimateReport, Fit, HarnessSpec, ProblemSpec, RefinementLevel, RunOutcome, Criterion, TRACKED, ScheduleSpec, SolverSpec, SweepSpec,
};
pub use testfn::{
    default_family, inner_cutoff, omega, radial_test_from_multid, smooth_step_with_slope, Cutoff, MultiDTest,
    MultiDValue, TestFunction, TestValue, Truncation, ADMISSIBILITY_TOL,
};
pub use weak::{
    multid_equivalence_check, weak_residual_continuity, weak_residual_momentum, ContinuityResidual, EquivalenceReport,
    MomentumResidual,
};

use crate::model::{RadialField, RadialGrid};
use crate::scalar::{lit, Scalar};

/// Trapezoid rule over (possibly nonuniform) snapshot times.
pub(crate) fn time_trapezoid<T: Scalar>(times: &[T], values: &[T]) -> T {
    let half = lit::<T>(0.5);
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| (t[1] - t[0]) * (v[0] + v[1]) * half)
        .sum()
}

/// Nodal quantities derived from one snapshot.
pub(crate) struct Derived<T> {
    pub u: Vec<T>,
    pub rho_r: Vec<T>,
    pub u_r: Vec<T>,
}

impl<T: Scalar> Derived<T> {
    /// `rho_r(a) = 0` is imposed, matching the Neumann condition of the scheme.
    pub fn new(field: &RadialField<T>, grid: &RadialGrid<T>) -> Self {
        let u = field.velocity();
        let mut rho_r = grid.derivative(&field.rho);
        rho_r[0] = T::zero();
        let u_r = grid.derivative(&u);
        Self { u, rho_r, u_r }
    }
}

pub(crate) fn dot<T: Scalar>(w: &[T], f: &[T]) -> T {
    w.iter().zip(f).map(|(&a, &b)| a * b).sum()
}
