//! Coupled choice of `(delta, rho_bar, a, b)` for each viscosity level and the
//! smallness constraints they must satisfy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::GasLaw;
use crate::scalar::{from_usize, lit, to_f64, Scalar};

pub const DEFAULT_BUDGET: f64 = 10.0;

/// Power laws of the schedule:
/// `a = eps^a`, `b = eps^{-b / n}`, `delta = eps^delta`,
/// `rho_bar = min(eps^{rho_bar_power / gamma}, |log eps|^{-rho_bar_log / theta})`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleExponents {
    pub a: f64,
    pub b: f64,
    pub delta: f64,
    pub rho_bar_power: f64,
    pub rho_bar_log: f64,
}

impl Default for ScheduleExponents {
    fn default() -> Self {
        Self {
            a: 1.0 / 3.0,
            b: 0.25,
            delta: 3.0,
            rho_bar_power: 0.5,
            rho_bar_log: 2.0,
        }
    }
}

/// Every quantity the constraints are made of.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintValues<T> {
    /// `eps b^n / a`
    pub eps_bn_over_a: T,
    /// `delta |log a| (1 + b^n / eps)`
    pub delta_log_a: T,
    /// `rho_bar^theta |log a|`
    pub rho_bar_theta_log_a: T,
    /// `rho_bar^gamma b^n`
    pub rho_bar_gamma_bn: T,
    /// `sqrt(eps) / a`
    pub sqrt_eps_over_a: T,
    /// `rho_bar^gamma b^n + (delta / eps) b^n`
    pub convergence_bound: T,
}

impl<T: Scalar> ConstraintValues<T> {
    /// Named addends in a fixed order.
    pub fn named(&self) -> [(&'static str, T); 6] {
        [
            ("eps_bn_over_a", self.eps_bn_over_a),
            ("delta_log_a", self.delta_log_a),
            ("rho_bar_theta_log_a", self.rho_bar_theta_log_a),
            ("rho_bar_gamma_bn", self.rho_bar_gamma_bn),
            ("sqrt_eps_over_a", self.sqrt_eps_over_a),
            ("convergence_bound", self.convergence_bound),
        ]
    }

    /// Sum of the five smallness addends (the convergence bound is a separate
    /// condition).
    pub fn total(&self) -> T {
        self.eps_bn_over_a + self.delta_log_a + self.rho_bar_theta_log_a + self.rho_bar_gamma_bn + self.sqrt_eps_over_a
    }
}

/// Full parameter set for one viscosity level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViscousParams<T> {
    pub eps: T,
    pub delta: T,
    pub rho_bar: T,
    pub a: T,
    pub b: T,
    pub n_dim: usize,
    pub gamma: T,
    pub m0_budget: T,
    pub constraint_values: ConstraintValues<T>,
}

impl<T: Scalar> ViscousParams<T> {
    /// Parameters from explicit values; constraint values are evaluated but not gated.
    pub fn from_values(eps: T, delta: T, rho_bar: T, a: T, b: T, n_dim: usize, law: &GasLaw<T>, m0_budget: T) -> Self {
        let constraint_values = evaluate_constraints(eps, delta, rho_bar, a, b, n_dim, law);
        Self {
            eps,
            delta,
            rho_bar,
            a,
            b,
            n_dim,
            gamma: law.gamma(),
            m0_budget,
            constraint_values,
        }
    }

    /// Gas law with this level's artificial pressure.
    pub fn law(&self) -> Result<GasLaw<T>> {
        GasLaw::with_delta(self.gamma, self.delta)
    }
}

fn evaluate_constraints<T: Scalar>(eps: T, delta: T, rho_bar: T, a: T, b: T, n_dim: usize, law: &GasLaw<T>) -> ConstraintValues<T> {
    let bn = b.powi(n_dim as i32);
    let log_a = a.ln().abs();
    ConstraintValues {
        eps_bn_over_a: eps * bn / a,
        delta_log_a: delta * log_a * (T::one() + bn / eps),
        rho_bar_theta_log_a: rho_bar.powf(law.theta()) * log_a,
        rho_bar_gamma_bn: rho_bar.powf(law.gamma()) * bn,
        sqrt_eps_over_a: eps.sqrt() / a,
        convergence_bound: rho_bar.powf(law.gamma()) * bn + delta / eps * bn,
    }
}

/// Parameters for viscosity `eps` under `exponents`; fails with the first
/// violating addend if the constraints exceed `m0_budget`.
pub fn schedule<T: Scalar>(
    eps: T,
    n_dim: usize,
    m0_budget: T,
    law: &GasLaw<T>,
    exponents: &ScheduleExponents,
) -> Result<ViscousParams<T>> {
    if !(eps > T::zero()) || !eps.is_finite() {
        return Err(Error::domain("viscosity must be positive", to_f64(eps)));
    }
    if n_dim < 2 {
        return Err(Error::domain("spatial dimension must be >= 2", n_dim as f64));
    }
    let nf: T = from_usize(n_dim);
    let a = eps.powf(lit(exponents.a));
    let b = eps.powf(-lit::<T>(exponents.b) / nf);
    let delta = eps.powf(lit(exponents.delta));
    let log_eps = eps.ln().abs();
    let rho_bar = eps
        .powf(lit::<T>(exponents.rho_bar_power) / law.gamma())
        .min(log_eps.powf(-lit::<T>(exponents.rho_bar_log) / law.theta()));
    if !(a > T::zero() && a < T::one()) {
        return Err(Error::Schedule {
            addend: "a in (0, 1)".into(),
            value: to_f64(a),
            budget: 1.0,
        });
    }
    if !(b > T::one()) || !b.is_finite() {
        return Err(Error::Schedule {
            addend: "b in (1, inf)".into(),
            value: to_f64(b),
            budget: 1.0,
        });
    }
    let params = ViscousParams::from_values(eps, delta, rho_bar, a, b, n_dim, law, m0_budget);
    let report = verify_constraints(&params);
    if let Some(v) = report.first_violation() {
        return Err(v);
    }
    Ok(params)
}

/// Default-exponent schedule with budget [`DEFAULT_BUDGET`].
pub fn default_schedule<T: Scalar>(eps: T, n_dim: usize, law: &GasLaw<T>) -> Result<ViscousParams<T>> {
    schedule(eps, n_dim, lit(DEFAULT_BUDGET), law, &ScheduleExponents::default())
}

/// Result of checking one parameter set against its budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub eps: f64,
    pub a: f64,
    pub b: f64,
    pub delta: f64,
    pub rho_bar: f64,
    pub addends: Vec<(String, f64)>,
    pub total: f64,
    pub budget: f64,
    pub delta_le_eps: bool,
    pub pass: bool,
}

impl ConstraintReport {
    fn first_violation(&self) -> Option<Error> {
        if !self.delta_le_eps {
            return Some(Error::Schedule {
                addend: "delta <= eps".into(),
                value: self.delta,
                budget: self.eps,
            });
        }
        if let Some((name, v)) = self.addends.iter().find(|(_, v)| !(*v <= self.budget)) {
            return Some(Error::Schedule {
                addend: name.clone(),
                value: *v,
                budget: self.budget,
            });
        }
        if !(self.total <= self.budget) {
            return Some(Error::Schedule {
                addend: "total".into(),
                value: self.total,
                budget: self.budget,
            });
        }
        None
    }

    pub fn addend(&self, name: &str) -> Option<f64> {
        self.addends.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

/// Re-evaluates every constraint from the stored parameters.
pub fn verify_constraints<T: Scalar>(params: &ViscousParams<T>) -> ConstraintReport {
    let budget = to_f64(params.m0_budget);
    let law = GasLaw::new(params.gamma);
    let values = match law {
        Ok(law) => evaluate_constraints(params.eps, params.delta, params.rho_bar, params.a, params.b, params.n_dim, &law),
        Err(_) => params.constraint_values,
    };
    let addends: Vec<(String, f64)> = values.named().iter().map(|(n, v)| (n.to_string(), to_f64(*v))).collect();
    let total = to_f64(values.total());
    let delta_le_eps = params.delta <= params.eps;
    let mut report = ConstraintReport {
        eps: to_f64(params.eps),
        a: to_f64(params.a),
        b: to_f64(params.b),
        delta: to_f64(params.delta),
        rho_bar: to_f64(params.rho_bar),
        addends,
        total,
        budget,
        delta_le_eps,
        pass: false,
    };
    report.pass = report.first_violation().is_none();
    report
}

/// Flat CSV row of a schedule table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleRow {
    pub eps: f64,
    pub a: f64,
    pub b: f64,
    pub delta: f64,
    pub rho_bar: f64,
    pub eps_bn_over_a: f64,
    pub delta_log_a: f64,
    pub rho_bar_theta_log_a: f64,
    pub rho_bar_gamma_bn: f64,
    pub sqrt_eps_over_a: f64,
    pub convergence_bound: f64,
    pub total: f64,
    pub pass: bool,
}

impl From<&ConstraintReport> for ScheduleRow {
    fn from(r: &ConstraintReport) -> Self {
        let g = |n: &str| r.addend(n).unwrap_or(f64::NAN);
        Self {
            eps: r.eps,
            a: r.a,
            b: r.b,
            delta: r.delta,
            rho_bar: r.rho_bar,
            eps_bn_over_a: g("eps_bn_over_a"),
            delta_log_a: g("delta_log_a"),
            rho_bar_theta_log_a: g("rho_bar_theta_log_a"),
            rho_bar_gamma_bn: g("rho_bar_gamma_bn"),
            sqrt_eps_over_a: g("sqrt_eps_over_a"),
            convergence_bound: g("convergence_bound"),
            total: r.total,
            pass: r.pass,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eps_one_is_rejected() {
        let law = GasLaw::<f64>::new(2.0).unwrap();
        assert!(matches!(default_schedule(1.0, 3, &law), Err(Error::Schedule { .. })));
        assert!(default_schedule(0.0, 3, &law).is_err());
    }

    #[test]
    fn reference_level() {
        let law = GasLaw::<f64>::new(2.0).unwrap();
        let p = default_schedule(1e-3, 3, &law).unwrap();
        assert!((p.a - 0.1).abs() < 1e-14);
        assert!((p.b - 10f64.powf(0.25)).abs() < 1e-12);
        assert!((p.delta - 1e-9).abs() < 1e-22);
        let r = verify_constraints(&p);
        assert!(r.pass);
        for (_, v) in &r.addends {
            assert!(*v <= 10.0);
        }
    }

    #[test]
    fn zero_addends_drop() {
        let law = GasLaw::<f64>::new(2.0).unwrap();
        let p = ViscousParams::from_values(1e-2, 0.0, 0.0, 0.3, 2.0, 3, &law, 10.0);
        let r = verify_constraints(&p);
        let expected = 1e-2 * 8.0 / 0.3 + 0.1 / 0.3;
        assert!((r.total - expected).abs() < 1e-14);
        let wider = ViscousParams::from_values(1e-2, 0.0, 0.0, 0.3, 4.0, 3, &law, 10.0);
        assert!(verify_constraints(&wider).total > r.total);
    }

    #[test]
    fn too_small_budget_reports_addend() {
        let law = GasLaw::<f64>::new(2.0).unwrap();
        let err = schedule(0.1, 3, 0.01, &law, &ScheduleExponents::default()).unwrap_err();
        assert!(matches!(err, Error::Schedule { .. }));
    }
}
