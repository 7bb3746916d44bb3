//! Weak entropy pairs generated by the kernel
//! `[rho^{2 theta} - (u - s)^2]_+^lambda`, the modified pair that vanishes to
//! second order at `(rho_bar, 0)`, and the mechanical entropy Hessian.
//!
//! Conservative derivatives use the convention `eta_m = d eta / d m` at fixed
//! `rho` and `eta_rho = d eta / d rho` at fixed `m`. Quantities "as functions of
//! `(rho, u)`" are derivatives at fixed `u` (resp. fixed `rho`).

mod bounds;

pub use bounds::{bound_refinement_study, verify_entropy_bounds, BoundReport, BoundRow, BoundSampleSpec, Inequality};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::GasLaw;
use crate::quadrature::JacobiRule;
use crate::scalar::{lit, to_f64, Scalar};

pub const DEFAULT_ORDER: usize = 64;
pub const DEFAULT_TOLERANCE: f64 = 1e-10;
/// Densities below this are rejected by derivative evaluations.
pub const DEFAULT_EVAL_FLOOR: f64 = 1e-12;

/// Pointwise evaluation of the entropy pairs at one state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyEval<T> {
    pub eta_check: T,
    pub q_check: T,
    pub eta_rho: T,
    pub eta_m: T,
    pub eta_tilde: T,
    pub q_tilde: T,
    /// `xi^T Hess(eta_check)(rho, m) xi` for the supplied direction.
    pub hessian_form: T,
}

/// Kernel integrals and their `(rho, u)` derivatives, with
/// `E(rho, u) = eta_check(rho, rho u)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelDerivatives<T> {
    pub e: T,
    pub q: T,
    pub e_u: T,
    pub e_rho: T,
    pub e_uu: T,
    pub e_rho_u: T,
    pub e_rho_rho: T,
    /// `(eta_m)_rho` at fixed `u`.
    pub eta_m_rho: T,
    /// `(eta_m)_u` at fixed `rho`.
    pub eta_m_u: T,
}

/// Quadrature engine for the weak entropy kernel of one gas law.
#[derive(Clone, Debug)]
pub struct EntropyKernel<T> {
    law: GasLaw<T>,
    lambda: T,
    theta: T,
    full: JacobiRule<T>,
    right: JacobiRule<T>,
    right_coarse: JacobiRule<T>,
    left: JacobiRule<T>,
    left_coarse: JacobiRule<T>,
    tolerance: T,
    eval_floor: T,
}

impl<T: Scalar> EntropyKernel<T> {
    pub fn new(law: GasLaw<T>) -> Result<Self> {
        Self::with_order(law, DEFAULT_ORDER)
    }

    pub fn with_order(law: GasLaw<T>, order: usize) -> Result<Self> {
        if order < 4 {
            return Err(Error::Config(format!("entropy quadrature order {order} below 4")));
        }
        let lambda = law.lambda_kernel();
        let zero = T::zero();
        Ok(Self {
            law,
            lambda,
            theta: law.theta(),
            full: JacobiRule::new(order, lambda, lambda)?,
            right: JacobiRule::new(order, lambda, zero)?,
            right_coarse: JacobiRule::new(order / 2, lambda, zero)?,
            left: JacobiRule::new(order, zero, lambda)?,
            left_coarse: JacobiRule::new(order / 2, zero, lambda)?,
            tolerance: lit(DEFAULT_TOLERANCE),
            eval_floor: lit(DEFAULT_EVAL_FLOOR),
        })
    }

    pub fn with_tolerance(mut self, tolerance: T) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_eval_floor(mut self, floor: T) -> Self {
        self.eval_floor = floor;
        self
    }

    pub fn law(&self) -> &GasLaw<T> {
        &self.law
    }

    pub fn order(&self) -> usize {
        self.full.order()
    }

    /// `int_{-1}^{1} sign(u + c tau) f(tau, u + c tau) (1 - tau^2)^lambda dtau`
    /// for `c > 0`, splitting at the sign change so that every rule sees a
    /// smooth integrand.
    fn signed_quadrature<const K: usize, F>(&self, u: T, c: T, f: F) -> Result<[T; K]>
    where
        F: Fn(T, T) -> [T; K],
    {
        let mut full = [T::zero(); K];
        let mut scale = [T::zero(); K];
        for (&tau, &w) in self.full.nodes().iter().zip(self.full.weights()) {
            let v = f(tau, u + c * tau);
            for k in 0..K {
                full[k] = full[k] + w * v[k];
                scale[k] = scale[k] + w * v[k].abs();
            }
        }
        let tau0 = -u / c;
        let one = T::one();
        if tau0 <= -one {
            return Ok(full);
        }
        if tau0 >= one {
            return Ok(full.map(|x| -x));
        }
        let two = lit::<T>(2.0);
        let (piece, coarse, sign) = if tau0 >= T::zero() {
            // int_{tau0}^{1}: weight (1 - x)^lambda after mapping, (1 + tau)^lambda is smooth
            let half = (one - tau0) / two;
            let map = |x: T| tau0 + half * (x + one);
            let jac = half.powf(self.lambda + one);
            let piece = |rule: &JacobiRule<T>| {
                let mut acc = [T::zero(); K];
                for (&x, &w) in rule.nodes().iter().zip(rule.weights()) {
                    let tau = map(x);
                    let smooth = (one + tau).powf(self.lambda);
                    let v = f(tau, u + c * tau);
                    for k in 0..K {
                        acc[k] = acc[k] + w * smooth * v[k];
                    }
                }
                acc.map(|a| a * jac)
            };
            (piece(&self.right), piece(&self.right_coarse), -one)
        } else {
            // int_{-1}^{tau0}: weight (1 + x)^lambda after mapping
            let half = (one + tau0) / two;
            let map = |x: T| -one + half * (x + one);
            let jac = half.powf(self.lambda + one);
            let piece = |rule: &JacobiRule<T>| {
                let mut acc = [T::zero(); K];
                for (&x, &w) in rule.nodes().iter().zip(rule.weights()) {
                    let tau = map(x);
                    let smooth = (one - tau).powf(self.lambda);
                    let v = f(tau, u + c * tau);
                    for k in 0..K {
                        acc[k] = acc[k] + w * smooth * v[k];
                    }
                }
                acc.map(|a| a * jac)
            };
            (piece(&self.left), piece(&self.left_coarse), one)
        };
        let mut out = [T::zero(); K];
        for k in 0..K {
            let err = (piece[k] - coarse[k]).abs();
            let allowed = self.tolerance * (scale[k] + T::min_positive_value());
            if err > allowed {
                return Err(Error::Quadrature {
                    estimate: to_f64(err),
                    tolerance: to_f64(allowed),
                });
            }
            // tau0 >= 0: -J + 2K ; tau0 < 0: J - 2K
            out[k] = sign * full[k] - sign * two * piece[k];
        }
        Ok(out)
    }

    fn check_density(rho: T) -> Result<()> {
        if rho >= T::zero() && rho.is_finite() {
            Ok(())
        } else {
            Err(Error::domain("density must be finite and >= 0", to_f64(rho)))
        }
    }

    fn check_velocity(u: T) -> Result<()> {
        if u.is_finite() {
            Ok(())
        } else {
            Err(Error::domain("velocity must be finite", to_f64(u)))
        }
    }

    /// `(eta_check, q_check)` at density `rho` and velocity `u`.
    pub fn pair(&self, rho: T, u: T) -> Result<(T, T)> {
        Self::check_density(rho)?;
        Self::check_velocity(u)?;
        if rho == T::zero() {
            return Ok((T::zero(), T::zero()));
        }
        let c = rho.powf(self.theta);
        let half = lit::<T>(0.5);
        let (th, one_th) = (self.theta, T::one() - self.theta);
        let [i, q] = self.signed_quadrature(u, c, |_, s| {
            let e = half * s * s;
            [e, e * (th * s + one_th * u)]
        })?;
        Ok((rho * i, rho * q))
    }

    /// Kernel value, flux and all first and second `(rho, u)` derivatives.
    pub fn derivatives(&self, rho: T, u: T) -> Result<KernelDerivatives<T>> {
        Self::check_velocity(u)?;
        if !(rho >= self.eval_floor) || !rho.is_finite() {
            return Err(Error::domain("density below the derivative evaluation floor", to_f64(rho)));
        }
        let th = self.theta;
        let c = rho.powf(th);
        let c1 = th * rho.powf(th - T::one());
        let c2 = th * (th - T::one()) * rho.powf(th - lit(2.0));
        let half = lit::<T>(0.5);
        let one_th = T::one() - th;
        // the two parts of the second rho-derivative are integrated separately:
        // their sum cancels exactly at u = 0 for gamma = 2
        let [i, q, a, i_r, b, i_ru, i_rr1, i_rr2] = self.signed_quadrature(u, c, |tau, s| {
            let e = half * s * s;
            let ct = c1 * tau;
            [e, e * (th * s + one_th * u), s, s * ct, T::one(), ct, ct * ct, s * c2 * tau]
        })?;
        let i_rr = i_rr1 + i_rr2;
        Ok(KernelDerivatives {
            e: rho * i,
            q: rho * q,
            e_u: rho * a,
            e_rho: i + rho * i_r,
            e_uu: rho * b,
            e_rho_u: a + rho * i_ru,
            e_rho_rho: lit::<T>(2.0) * i_r + rho * i_rr,
            eta_m_rho: i_ru,
            eta_m_u: b,
        })
    }

    /// `(eta_rho, eta_m)` in conservative variables.
    pub fn gradient(&self, rho: T, u: T) -> Result<(T, T)> {
        let d = self.derivatives(rho, u)?;
        Ok((d.e_rho - u / rho * d.e_u, d.e_u / rho))
    }

    /// Hessian `[[eta_rho_rho, eta_rho_m], [eta_rho_m, eta_m_m]]` in `(rho, m)`.
    pub fn hessian(&self, rho: T, u: T) -> Result<[[T; 2]; 2]> {
        let d = self.derivatives(rho, u)?;
        Ok(conservative_hessian(&d, rho, u))
    }

    /// `eta_check_m(rho_bar, 0) = rho_bar^theta / (lambda + 1)`; the
    /// `rho`-component of the gradient at `(rho_bar, 0)` vanishes.
    pub fn base_slope(&self, rho_bar: T) -> T {
        rho_bar.powf(self.theta) / (self.lambda + T::one())
    }

    /// `(eta_tilde, q_tilde)`. At `rho_bar = 0` the correction vanishes.
    pub fn modified_pair(&self, rho: T, u: T, rho_bar: T) -> Result<(T, T)> {
        Self::check_density(rho_bar)?;
        let (eta, q) = self.pair(rho, u)?;
        let slope = self.base_slope(rho_bar);
        let m = rho * u;
        let flux = if rho > T::zero() { m * u + self.law.euler_pressure(rho) } else { T::zero() };
        Ok((eta - slope * m, q - slope * flux))
    }

    /// Full pointwise evaluation; `xi = (rho_r, m_r)` for the Hessian form.
    pub fn evaluate(&self, rho: T, u: T, rho_bar: T, xi: [T; 2]) -> Result<EntropyEval<T>> {
        let d = self.derivatives(rho, u)?;
        let (eta_tilde, q_tilde) = self.modified_pair(rho, u, rho_bar)?;
        let h = conservative_hessian(&d, rho, u);
        Ok(EntropyEval {
            eta_check: d.e,
            q_check: d.q,
            eta_rho: d.e_rho - u / rho * d.e_u,
            eta_m: d.e_u / rho,
            eta_tilde,
            q_tilde,
            hessian_form: quadratic_form(&h, xi),
        })
    }
}

fn conservative_hessian<T: Scalar>(d: &KernelDerivatives<T>, rho: T, u: T) -> [[T; 2]; 2] {
    let two = lit::<T>(2.0);
    let w = u / rho;
    let mm = d.e_uu / (rho * rho);
    let rm = (d.e_rho_u - w * d.e_uu) / rho - d.e_u / (rho * rho);
    let rr = d.e_rho_rho - two * w * d.e_rho_u + two * u / (rho * rho) * d.e_u + w * w * d.e_uu;
    [[rr, rm], [rm, mm]]
}

pub(crate) fn quadratic_form<T: Scalar>(h: &[[T; 2]; 2], xi: [T; 2]) -> T {
    h[0][0] * xi[0] * xi[0] + lit::<T>(2.0) * h[0][1] * xi[0] * xi[1] + h[1][1] * xi[1] * xi[1]
}

/// `(eta_check, q_check)` with the default quadrature order.
pub fn weak_entropy_pair<T: Scalar>(rho: T, u: T, law: &GasLaw<T>) -> Result<(T, T)> {
    EntropyKernel::new(*law)?.pair(rho, u)
}

/// `(eta_rho, eta_m)` with the default quadrature order.
pub fn weak_entropy_gradient<T: Scalar>(rho: T, u: T, law: &GasLaw<T>) -> Result<(T, T)> {
    EntropyKernel::new(*law)?.gradient(rho, u)
}

/// `(eta_tilde, q_tilde)` with the default quadrature order.
pub fn modified_pair<T: Scalar>(rho: T, u: T, rho_bar: T, law: &GasLaw<T>) -> Result<(T, T)> {
    EntropyKernel::new(*law)?.modified_pair(rho, u, rho_bar)
}

/// `kappa gamma rho^{gamma-2} rho_r^2 + rho u_r^2` with `u_r = (m_r - u rho_r) / rho`.
pub fn physical_entropy_hessian_form<T: Scalar>(rho: T, u: T, xi: [T; 2], law: &GasLaw<T>) -> Result<T> {
    if !(rho > T::zero()) || !rho.is_finite() {
        return Err(Error::domain("density must be positive", to_f64(rho)));
    }
    let [rho_r, m_r] = xi;
    let u_r = (m_r - u * rho_r) / rho;
    Ok(law.kappa() * law.gamma() * rho.powf(law.gamma() - lit(2.0)) * rho_r * rho_r + rho * u_r * u_r)
}

/// Hessian of `eta* = m^2 / (2 rho) + kappa rho^gamma / (gamma - 1)` in `(rho, m)`.
pub fn physical_entropy_hessian<T: Scalar>(rho: T, u: T, law: &GasLaw<T>) -> [[T; 2]; 2] {
    let rr = u * u / rho + law.kappa() * law.gamma() * rho.powf(law.gamma() - lit(2.0));
    let rm = -u / rho;
    [[rr, rm], [rm, T::one() / rho]]
}

/// Mechanical entropy `eta*(rho, m)`.
pub fn physical_entropy<T: Scalar>(rho: T, m: T, law: &GasLaw<T>) -> T {
    m * m / (lit::<T>(2.0) * rho) + law.kappa() * rho.powf(law.gamma()) / (law.gamma() - T::one())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn law(g: f64) -> GasLaw<f64> {
        GasLaw::new(g).unwrap()
    }

    // gamma = 3: eta = F(u + rho) - F(u - rho), F(s) = s^2 |s| / 6
    fn eta3(rho: f64, u: f64) -> f64 {
        let f = |s: f64| s * s * s.abs() / 6.0;
        f(u + rho) - f(u - rho)
    }

    #[test]
    fn gamma3_closed_forms() {
        let (e, q) = weak_entropy_pair(1.0, 1.0, &law(3.0)).unwrap();
        assert!((e - 4.0 / 3.0).abs() < 1e-13);
        assert!((q - 2.0).abs() < 1e-13);
        for &(r, u) in &[(0.3, -0.1), (2.0, 0.5), (1.5, -4.0)] {
            let (e, _) = weak_entropy_pair(r, u, &law(3.0)).unwrap();
            assert!((e - eta3(r, u)).abs() < 1e-12 * (1.0 + e.abs()));
        }
    }

    #[test]
    fn vacuum_and_symmetry() {
        for g in [1.4, 2.0, 3.0, 4.5] {
            let l = law(g);
            assert_eq!(weak_entropy_pair(0.0, 7.0, &l).unwrap(), (0.0, 0.0));
            let (e, _) = weak_entropy_pair(1.0, 0.0, &l).unwrap();
            assert!(e.abs() < 1e-14);
            let (e1, _) = weak_entropy_pair(0.7, 0.4, &l).unwrap();
            let (e2, _) = weak_entropy_pair(0.7, -0.4, &l).unwrap();
            assert!((e1 + e2).abs() < 1e-12);
            let (er, _) = weak_entropy_gradient(1.0, 0.0, &l).unwrap();
            assert!(er.abs() < 1e-13);
        }
    }

    #[test]
    fn gradient_matches_finite_differences_gamma3() {
        let l = law(3.0);
        let k = EntropyKernel::new(l).unwrap();
        let (er, em) = k.gradient(1.0, 1.0).unwrap();
        let eta = |rho: f64, m: f64| k.pair(rho, m / rho).unwrap().0;
        let h = 1e-5;
        let fd_r = (eta(1.0 + h, 1.0) - eta(1.0 - h, 1.0)) / (2.0 * h);
        let fd_m = (eta(1.0, 1.0 + h) - eta(1.0, 1.0 - h)) / (2.0 * h);
        assert!((er - fd_r).abs() / (1.0 + er.abs()) < 1e-6);
        assert!((em - fd_m).abs() / (1.0 + em.abs()) < 1e-6);
    }

    #[test]
    fn modified_pair_gamma3_assembly() {
        let l = law(3.0);
        let (et, _) = modified_pair(1.0, 1.0, 0.5, &l).unwrap();
        // eta_m(0.5, 0) = (1/rho)(F'(rho) - F'(-rho)) = rho for gamma = 3; eta_rho(0.5, 0) = 0
        let h = 1e-6;
        let eta_m_bar = (eta3(0.5, h / 0.5) - eta3(0.5, -h / 0.5)) / (2.0 * h);
        let expected = eta3(1.0, 1.0) - 0.0 * 0.5 - eta_m_bar * 1.0;
        assert!((et - expected).abs() < 1e-8, "{et} vs {expected}");
        assert!((et - 5.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn modified_pair_vanishes_at_base_point() {
        for g in [1.4, 2.0, 3.0, 5.0] {
            let l = law(g);
            let (et, _) = modified_pair(0.3, 0.0, 0.3, &l).unwrap();
            assert!(et.abs() < 1e-12);
            let k = EntropyKernel::new(l).unwrap();
            let (gr, gm) = k.gradient(0.3, 0.0).unwrap();
            assert!(gr.abs() < 1e-12);
            assert!((gm - k.base_slope(0.3)).abs() < 1e-12);
            let (a, b) = modified_pair(0.8, 0.2, 0.0, &l).unwrap();
            assert_eq!((a, b), weak_entropy_pair(0.8, 0.2, &l).unwrap());
        }
    }

    #[test]
    fn hessian_form_examples() {
        let l = law(2.0);
        assert_eq!(physical_entropy_hessian_form(1.0, 0.3, [0.0, 0.0], &l).unwrap(), 0.0);
        let v = physical_entropy_hessian_form(1.0, 0.0, [1.0, 1.0], &l).unwrap();
        assert!((v - 1.25).abs() < 1e-15);
        assert!(physical_entropy_hessian_form(0.0, 0.0, [1.0, 1.0], &l).is_err());
    }

    #[test]
    fn kernel_hessian_matches_finite_differences() {
        let l = law(1.4);
        let k = EntropyKernel::new(l).unwrap();
        let (rho, u) = (0.8, 0.3);
        let h = k.hessian(rho, u).unwrap();
        let grad = |r: f64, m: f64| k.gradient(r, m / r).unwrap();
        let d = 1e-5;
        let m = rho * u;
        let (gr_p, gm_p) = grad(rho + d, m);
        let (gr_m, gm_m) = grad(rho - d, m);
        let (_, gm_mp) = grad(rho, m + d);
        let (_, gm_mm) = grad(rho, m - d);
        assert!((h[0][0] - (gr_p - gr_m) / (2.0 * d)).abs() < 1e-6);
        assert!((h[0][1] - (gm_p - gm_m) / (2.0 * d)).abs() < 1e-6);
        assert!((h[1][1] - (gm_mp - gm_mm) / (2.0 * d)).abs() < 1e-6);
    }

    #[test]
    fn endpoint_singular_weight() {
        // gamma > 3 gives lambda in (-1/2, 0)
        let l = law(5.0);
        assert!(l.lambda_kernel() < 0.0);
        let (e, q) = weak_entropy_pair(1.2, 0.3, &l).unwrap();
        assert!(e.is_finite() && q.is_finite() && e > 0.0);
    }
}
