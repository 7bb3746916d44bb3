//! Test functions for the weak formulations, cutoffs and truncations.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::SphereRule;
use crate::scalar::{lit, to_f64, Scalar};

/// Admissibility threshold on `|phi(t, 0)|` for the momentum equation.
pub const ADMISSIBILITY_TOL: f64 = 1e-12;

/// Value and first derivatives of a test function at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TestValue<T> {
    pub phi: T,
    pub phi_t: T,
    pub phi_r: T,
}

type Eval<T> = Arc<dyn Fn(T, T) -> TestValue<T> + Send + Sync>;

/// Smooth `phi(t, r)` with `phi = 0` for `r >= support_bound` or `t >= time_bound`.
#[derive(Clone)]
pub struct TestFunction<T> {
    name: String,
    eval: Eval<T>,
    support_bound: T,
    time_bound: T,
}

impl<T: Scalar> fmt::Debug for TestFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("name", &self.name)
            .field("support_bound", &self.support_bound)
            .field("time_bound", &self.time_bound)
            .finish()
    }
}

/// `(s, s')` for the flat step of [`crate::solver::smooth_step`].
pub fn smooth_step_with_slope<T: Scalar>(x: T) -> (T, T) {
    if x <= T::zero() {
        return (T::zero(), T::zero());
    }
    if x >= T::one() {
        return (T::one(), T::zero());
    }
    let y = T::one() - x;
    let f = (-T::one() / x).exp();
    let g = (-T::one() / y).exp();
    let fp = f / (x * x);
    let gp = g / (y * y);
    let s = f + g;
    (f / s, (fp * g + f * gp) / (s * s))
}

/// `1` on `[0, inner]`, `0` on `[outer, inf)`, smooth and monotone in between.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub inner: f64,
    pub outer: f64,
}

impl Cutoff {
    pub fn new(inner: f64, outer: f64) -> Result<Self> {
        if !(inner >= 0.0) || !(outer > inner) || !outer.is_finite() {
            return Err(Error::Config(format!("cutoff needs 0 <= inner < outer (got {inner}, {outer})")));
        }
        Ok(Self { inner, outer })
    }

    /// `(chi, chi')` at `x`.
    pub fn eval<T: Scalar>(&self, x: T) -> (T, T) {
        let w: T = lit(self.outer - self.inner);
        let (s, ds) = smooth_step_with_slope((x - lit(self.inner)) / w);
        (T::one() - s, -ds / w)
    }
}

/// The radial weight of the integrability estimates: `1` on `[0, 1]`, `0` from `1.2`.
///
/// The outer edge stays inside the smallest outer radius of the reference schedule.
pub fn omega() -> Cutoff {
    Cutoff { inner: 1.0, outer: 1.2 }
}

/// `(S_a, S_a')`: `0` on `[0, a]`, `1` on `[2a, inf)`.
pub fn inner_cutoff<T: Scalar>(r: T, a: T) -> (T, T) {
    let (s, ds) = smooth_step_with_slope((r - a) / a);
    (s, ds / a)
}

impl<T: Scalar> TestFunction<T> {
    pub fn new<F>(name: impl Into<String>, support_bound: T, time_bound: T, f: F) -> Self
    where
        F: Fn(T, T) -> TestValue<T> + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            eval: Arc::new(f),
            support_bound,
            time_bound,
        }
    }

    pub fn zero() -> Self {
        Self::new("zero", T::zero(), T::zero(), |_, _| TestValue::default())
    }

    /// `psi(t) r^power chi(r)`.
    pub fn tensor(name: impl Into<String>, time: Cutoff, radial: Cutoff, power: i32) -> Self {
        let p: T = lit(power as f64);
        Self::new(name, lit(radial.outer), lit(time.outer), move |t: T, r: T| {
            let (psi, psi_t) = time.eval(t);
            let (chi, chi_r) = radial.eval(r);
            let (rp, rp_r) = match power {
                0 => (T::one(), T::zero()),
                _ => (r.powi(power), p * r.powi(power - 1)),
            };
            TestValue {
                phi: psi * rp * chi,
                phi_t: psi_t * rp * chi,
                phi_r: psi * (rp_r * chi + rp * chi_r),
            }
        })
    }

    /// `r chi(r) psi(t)`: vanishes at the origin with nonzero slope there.
    pub fn linear(time: Cutoff, radial: Cutoff) -> Self {
        Self::tensor("linear", time, radial, 1)
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn support_bound(&self) -> T {
        self.support_bound
    }
    pub fn time_bound(&self) -> T {
        self.time_bound
    }

    pub fn eval(&self, t: T, r: T) -> TestValue<T> {
        (self.eval)(t, r)
    }

    /// `(phi(t, 0), phi_r(t, 0))`.
    pub fn origin_trace(&self, t: T) -> (T, T) {
        let v = self.eval(t, T::zero());
        (v.phi, v.phi_r)
    }

    /// Errors if `|phi(t, 0)|` exceeds [`ADMISSIBILITY_TOL`] at any of `times`.
    pub fn check_admissible(&self, times: &[T]) -> Result<()> {
        for &t in times {
            let v = self.origin_trace(t).0;
            if !(v.abs() <= lit(ADMISSIBILITY_TOL)) {
                return Err(Error::Admissibility {
                    t: to_f64(t),
                    value: to_f64(v),
                });
            }
        }
        Ok(())
    }

    /// `phi S_a`, vanishing on `[0, a]`.
    pub fn cut_at(&self, a: T) -> Self {
        let inner = self.eval.clone();
        Self::new(format!("{}_cut", self.name), self.support_bound, self.time_bound, move |t, r| {
            let v = inner(t, r);
            let (s, ds) = inner_cutoff(r, a);
            TestValue {
                phi: v.phi * s,
                phi_t: v.phi_t * s,
                phi_r: v.phi_r * s + v.phi * ds,
            }
        })
    }
}

/// The test-function family of the sweep: a plain bump (continuity only), an
/// `r^2` bump (`phi_r(t, 0) = 0`) and the linear class (`phi_r(t, 0) != 0`).
pub fn default_family<T: Scalar>(t_final: f64) -> Vec<TestFunction<T>> {
    let time = Cutoff {
        inner: 0.2 * t_final,
        outer: 0.9 * t_final,
    };
    let radial = Cutoff { inner: 0.5, outer: 1.1 };
    vec![
        TestFunction::tensor("bump", time, radial, 0),
        TestFunction::tensor("r2_bump", time, radial, 2),
        TestFunction::linear(time, radial),
    ]
}

/// Value, time derivative and spatial gradient at a point of `R^n`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MultiDValue<T> {
    pub phi: T,
    pub phi_t: T,
    pub grad: [T; 3],
}

type MultiDEval<T> = Arc<dyn Fn(T, &[T; 3]) -> MultiDValue<T> + Send + Sync>;

/// Test function on `[0, inf) x R^n` (`n <= 3`; unused components are zero).
#[derive(Clone)]
pub struct MultiDTest<T> {
    name: String,
    eval: MultiDEval<T>,
    support_bound: T,
    time_bound: T,
}

impl<T: Scalar> fmt::Debug for MultiDTest<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MultiDTest").field("name", &self.name).finish()
    }
}

fn norm<T: Scalar>(x: &[T; 3]) -> T {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

impl<T: Scalar> MultiDTest<T> {
    pub fn new<F>(name: impl Into<String>, support_bound: T, time_bound: T, f: F) -> Self
    where
        F: Fn(T, &[T; 3]) -> MultiDValue<T> + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            eval: Arc::new(f),
            support_bound,
            time_bound,
        }
    }

    /// `x_j chi(|x|) psi(t)`.
    pub fn coordinate(j: usize, time: Cutoff, radial: Cutoff) -> Self {
        Self::new(format!("x{}_chi_psi", j + 1), lit(radial.outer), lit(time.outer), move |t, x| {
            let r = norm(x);
            let (psi, psi_t) = time.eval(t);
            let (chi, chi_r) = radial.eval(r);
            let mut grad = [T::zero(); 3];
            for (k, g) in grad.iter_mut().enumerate() {
                let radial_part = if r > T::zero() { x[j] * chi_r * x[k] / r } else { T::zero() };
                let own = if k == j { chi } else { T::zero() };
                *g = psi * (own + radial_part);
            }
            MultiDValue {
                phi: x[j] * chi * psi,
                phi_t: x[j] * chi * psi_t,
                grad,
            }
        })
    }

    /// `x_j exp(-|x|^2) psi(t)` (numerically supported in `|x| <= 7`).
    pub fn gaussian(j: usize, time: Cutoff) -> Self {
        Self::new(format!("x{}_gauss_psi", j + 1), lit(7.0), lit(time.outer), move |t, x| {
            let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            let e = (-r2).exp();
            let (psi, psi_t) = time.eval(t);
            let two: T = lit(2.0);
            let mut grad = [T::zero(); 3];
            for (k, g) in grad.iter_mut().enumerate() {
                let own = if k == j { e } else { T::zero() };
                *g = psi * (own - two * x[j] * x[k] * e);
            }
            MultiDValue {
                phi: x[j] * e * psi,
                phi_t: x[j] * e * psi_t,
                grad,
            }
        })
    }

    /// `chi(|x|) psi(t)`.
    pub fn radial(time: Cutoff, radial: Cutoff) -> Self {
        Self::new("chi_psi", lit(radial.outer), lit(time.outer), move |t, x| {
            let r = norm(x);
            let (psi, psi_t) = time.eval(t);
            let (chi, chi_r) = radial.eval(r);
            let mut grad = [T::zero(); 3];
            if r > T::zero() {
                for (k, g) in grad.iter_mut().enumerate() {
                    *g = psi * chi_r * x[k] / r;
                }
            }
            MultiDValue {
                phi: chi * psi,
                phi_t: chi * psi_t,
                grad,
            }
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn support_bound(&self) -> T {
        self.support_bound
    }
    pub fn time_bound(&self) -> T {
        self.time_bound
    }
    pub fn eval(&self, t: T, x: &[T; 3]) -> MultiDValue<T> {
        (self.eval)(t, x)
    }
}

/// `zeta(t, r) = int_{|y|=1} y_j phi(t, r y) dS_y` by sphere quadrature.
pub fn radial_test_from_multid<T: Scalar>(
    phi: &MultiDTest<T>,
    j: usize,
    n_dim: usize,
    order: usize,
) -> Result<TestFunction<T>> {
    if !(2..=3).contains(&n_dim) {
        return Err(Error::Unsupported(format!("radial reduction in dimension {n_dim}")));
    }
    if j >= n_dim {
        return Err(Error::Config(format!("component {j} out of range for dimension {n_dim}")));
    }
    let rule = SphereRule::<T>::new(n_dim, order)?;
    let f = phi.eval.clone();
    Ok(TestFunction::new(
        format!("zeta_{}", phi.name),
        phi.support_bound,
        phi.time_bound,
        move |t, r| {
            let mut out = TestValue::default();
            for (y, &w) in rule.points().iter().zip(rule.weights()) {
                let x = [r * y[0], r * y[1], r * y[2]];
                let v = f(t, &x);
                let radial = v.grad[0] * y[0] + v.grad[1] * y[1] + v.grad[2] * y[2];
                out.phi = out.phi + w * y[j] * v.phi;
                out.phi_t = out.phi_t + w * y[j] * v.phi_t;
                out.phi_r = out.phi_r + w * y[j] * radial;
            }
            out
        },
    ))
}

/// Convex truncations of the density used with the continuity equation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Truncation {
    /// `rho^2 / 2` below `delta`, continued linearly above.
    Quadratic { delta: f64 },
    /// `rho log rho - rho` below `delta`, continued linearly above.
    Log { delta: f64 },
}

impl Truncation {
    pub fn delta(&self) -> f64 {
        match *self {
            Truncation::Quadratic { delta } | Truncation::Log { delta } => delta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.delta();
        if !(d > 0.0 && d < 0.5) {
            return Err(Error::domain("truncation threshold must lie in (0, 1/2)", d));
        }
        Ok(())
    }

    pub fn value<T: Scalar>(&self, rho: T) -> T {
        let d: T = lit(self.delta());
        let half: T = lit(0.5);
        match self {
            Truncation::Quadratic { .. } => {
                if rho < d {
                    half * rho * rho
                } else {
                    half * d * d + d * (rho - d)
                }
            }
            Truncation::Log { .. } => {
                if rho < d {
                    rho * rho.ln() - rho
                } else {
                    rho * d.ln() - d
                }
            }
        }
    }

    pub fn first<T: Scalar>(&self, rho: T) -> T {
        let d: T = lit(self.delta());
        match self {
            Truncation::Quadratic { .. } => rho.min(d),
            Truncation::Log { .. } => rho.min(d).ln(),
        }
    }

    /// Second derivative with the indicator evaluated pointwise.
    pub fn second<T: Scalar>(&self, rho: T) -> T {
        let d: T = lit(self.delta());
        if !(rho < d) {
            return T::zero();
        }
        match self {
            Truncation::Quadratic { .. } => T::one(),
            Truncation::Log { .. } => T::one() / rho,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::sphere_area;

    #[test]
    fn step_slope_matches_difference() {
        for &x in &[0.1f64, 0.3, 0.5, 0.77, 0.95] {
            let h = 1e-6;
            let fd = (smooth_step_with_slope(x + h).0 - smooth_step_with_slope(x - h).0) / (2.0 * h);
            assert!((fd - smooth_step_with_slope(x).1).abs() < 1e-7);
        }
    }

    #[test]
    fn test_function_derivatives() {
        let phi = TestFunction::<f64>::linear(Cutoff::new(0.1, 0.4).unwrap(), Cutoff::new(0.5, 1.1).unwrap());
        let h = 1e-6;
        for &(t, r) in &[(0.2, 0.7), (0.3, 0.9), (0.05, 0.2)] {
            let v = phi.eval(t, r);
            let fr = (phi.eval(t, r + h).phi - phi.eval(t, r - h).phi) / (2.0 * h);
            let ft = (phi.eval(t + h, r).phi - phi.eval(t - h, r).phi) / (2.0 * h);
            assert!((fr - v.phi_r).abs() < 1e-7);
            assert!((ft - v.phi_t).abs() < 1e-7);
        }
        assert_eq!(phi.origin_trace(0.0), (0.0, 1.0));
        assert!(phi.check_admissible(&[0.0, 0.1]).is_ok());
        let bump = TestFunction::<f64>::tensor("b", Cutoff::new(0.1, 0.4).unwrap(), Cutoff::new(0.5, 1.1).unwrap(), 0);
        assert!(matches!(bump.check_admissible(&[0.0]), Err(Error::Admissibility { .. })));
    }

    #[test]
    fn cut_vanishes_near_inner_radius() {
        let phi = TestFunction::<f64>::linear(Cutoff::new(1.0, 2.0).unwrap(), Cutoff::new(0.5, 1.1).unwrap());
        let c = phi.cut_at(0.2);
        assert_eq!(c.eval(0.0, 0.15).phi, 0.0);
        assert_eq!(c.eval(0.0, 0.5).phi, phi.eval(0.0, 0.5).phi);
    }

    #[test]
    fn zeta_of_gaussian_matches_closed_form() {
        let time = Cutoff::new(1.0, 2.0).unwrap();
        let phi = MultiDTest::<f64>::gaussian(0, time);
        let z = radial_test_from_multid(&phi, 0, 3, 16).unwrap();
        for &r in &[0.0, 0.3, 1.0, 2.0] {
            let exact = 4.0 * std::f64::consts::PI / 3.0 * r * (-r * r).exp();
            assert!((z.eval(0.5, r).phi - exact).abs() < 1e-8);
        }
    }

    #[test]
    fn zeta_slope_at_origin() {
        let time = Cutoff::new(1.0, 2.0).unwrap();
        for n in [2, 3] {
            let phi = MultiDTest::<f64>::coordinate(0, time, omega());
            let z = radial_test_from_multid(&phi, 0, n, 16).unwrap();
            let (v, d) = z.origin_trace(1.0);
            assert!(v.abs() < 1e-10);
            assert!((d - sphere_area(n) / n as f64).abs() < 1e-8);
        }
        let phi = MultiDTest::<f64>::coordinate(0, time, omega());
        assert!(matches!(radial_test_from_multid(&phi, 0, 4, 8), Err(Error::Unsupported(_))));
    }

    #[test]
    fn symmetric_function_gives_zero_zeta() {
        let phi = MultiDTest::<f64>::radial(Cutoff::new(1.0, 2.0).unwrap(), omega());
        let z = radial_test_from_multid(&phi, 1, 3, 12).unwrap();
        assert!(z.eval(0.3, 0.8).phi.abs() < 1e-14);
    }

    #[test]
    fn truncation_identities() {
        for tr in [Truncation::Quadratic { delta: 0.25 }, Truncation::Log { delta: 0.25 }] {
            for &rho in &[0.01f64, 0.1, 0.24, 0.3, 2.0] {
                let lhs = tr.value(rho) - rho * tr.first(rho);
                let rhs = match tr {
                    Truncation::Quadratic { delta } => -0.5 * rho.min(delta).powi(2),
                    Truncation::Log { delta } => -rho.min(delta),
                };
                assert!((lhs - rhs).abs() < 1e-14);
            }
        }
        assert!(Truncation::Log { delta: 0.6 }.validate().is_err());
    }
}
