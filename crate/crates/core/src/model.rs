//! Gas law, radial grids and discrete field containers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::JacobiRule;
use crate::scalar::{from_usize, lit, to_f64, Scalar};

/// Polytropic gas law `p_delta(rho) = kappa rho^gamma + delta rho^2` with the
/// scaling `kappa = (gamma - 1)^2 / (4 gamma)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GasLaw<T> {
    gamma: T,
    kappa: T,
    theta: T,
    lambda_kernel: T,
    delta: T,
}

impl<T: Scalar> GasLaw<T> {
    /// Gas law without artificial pressure.
    pub fn new(gamma: T) -> Result<Self> {
        Self::with_delta(gamma, T::zero())
    }

    pub fn with_delta(gamma: T, delta: T) -> Result<Self> {
        if !(gamma > T::one()) || !gamma.is_finite() {
            return Err(Error::domain("adiabatic exponent must exceed 1", to_f64(gamma)));
        }
        if !(delta >= T::zero()) || !delta.is_finite() {
            return Err(Error::domain("artificial pressure coefficient must be >= 0", to_f64(delta)));
        }
        let one = T::one();
        let two = lit::<T>(2.0);
        let gm1 = gamma - one;
        Ok(Self {
            gamma,
            kappa: gm1 * gm1 / (lit::<T>(4.0) * gamma),
            theta: gm1 / two,
            lambda_kernel: (lit::<T>(3.0) - gamma) / (two * gm1),
            delta,
        })
    }

    /// Same exponent, different artificial pressure.
    pub fn set_delta(&self, delta: T) -> Result<Self> {
        Self::with_delta(self.gamma, delta)
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }
    pub fn kappa(&self) -> T {
        self.kappa
    }
    pub fn theta(&self) -> T {
        self.theta
    }
    /// Exponent of the entropy-kernel window `[rho^{2 theta} - (u - s)^2]_+`.
    pub fn lambda_kernel(&self) -> T {
        self.lambda_kernel
    }
    pub fn delta(&self) -> T {
        self.delta
    }

    fn check_density(rho: T) -> Result<()> {
        if rho >= T::zero() && rho.is_finite() {
            Ok(())
        } else {
            Err(Error::domain("density must be finite and >= 0", to_f64(rho)))
        }
    }

    /// `kappa rho^gamma`, the pressure of the limiting Euler system.
    pub fn euler_pressure(&self, rho: T) -> T {
        self.kappa * rho.powf(self.gamma)
    }

    /// Unchecked `p_delta`; callers guarantee `rho >= 0`.
    #[inline]
    pub fn pressure_unchecked(&self, rho: T) -> T {
        self.kappa * rho.powf(self.gamma) + self.delta * rho * rho
    }

    /// `p_delta(rho) = kappa rho^gamma + delta rho^2`.
    pub fn pressure(&self, rho: T) -> Result<T> {
        Self::check_density(rho)?;
        Ok(self.pressure_unchecked(rho))
    }

    /// `p_delta'(rho)`.
    #[inline]
    pub fn pressure_derivative(&self, rho: T) -> T {
        self.kappa * self.gamma * rho.powf(self.gamma - T::one()) + lit::<T>(2.0) * self.delta * rho
    }

    #[inline]
    pub fn sound_speed(&self, rho: T) -> T {
        self.pressure_derivative(rho.max(T::zero())).sqrt()
    }

    /// `h_delta(rho) = kappa rho^gamma / (gamma - 1) + delta rho^2`.
    #[inline]
    pub fn internal_energy(&self, rho: T) -> T {
        self.kappa * rho.powf(self.gamma) / (self.gamma - T::one()) + self.delta * rho * rho
    }

    #[inline]
    pub fn internal_energy_derivative(&self, rho: T) -> T {
        self.kappa * self.gamma / (self.gamma - T::one()) * rho.powf(self.gamma - T::one())
            + lit::<T>(2.0) * self.delta * rho
    }

    /// `h_delta''(rho) = kappa gamma rho^{gamma - 2} + 2 delta`.
    #[inline]
    pub fn internal_energy_second(&self, rho: T) -> T {
        self.kappa * self.gamma * rho.powf(self.gamma - lit::<T>(2.0)) + lit::<T>(2.0) * self.delta
    }

    /// Unchecked relative internal energy; both densities must be `>= 0`.
    pub fn relative_internal_energy_unchecked(&self, rho: T, rho_bar: T) -> T {
        let polytropic = self.kappa / (self.gamma - T::one()) * power_remainder(rho, rho_bar, self.gamma);
        let diff = rho - rho_bar;
        polytropic + self.delta * diff * diff
    }

    /// `h_delta(rho) - h_delta(rho_bar) - h_delta'(rho_bar) (rho - rho_bar)`.
    pub fn relative_internal_energy(&self, rho: T, rho_bar: T) -> Result<T> {
        Self::check_density(rho)?;
        Self::check_density(rho_bar)?;
        Ok(self.relative_internal_energy_unchecked(rho, rho_bar))
    }
}

/// `x^g - y^g - g y^{g-1} (x - y)` for `x, y >= 0`, evaluated without
/// cancellation when `x` is close to `y`.
fn power_remainder<T: Scalar>(x: T, y: T, g: T) -> T {
    if y == T::zero() {
        return x.powf(g);
    }
    let z = x / y - T::one();
    if z.abs() <= lit(0.5) {
        // binomial series sum_{k>=2} C(g, k) z^k
        let mut coeff = g * (g - T::one()) / lit(2.0);
        let mut zk = z * z;
        let mut sum = coeff * zk;
        for k in 3..200 {
            let kf: T = from_usize(k);
            coeff = coeff * (g - kf + T::one()) / kf;
            zk = zk * z;
            let term = coeff * zk;
            sum = sum + term;
            if term.abs() <= T::epsilon() * sum.abs() {
                break;
            }
        }
        y.powf(g) * sum
    } else {
        let r = x.powf(g) - y.powf(g) - g * y.powf(g - T::one()) * (x - y);
        r.max(T::zero())
    }
}

/// Free-function form of [`GasLaw::pressure`].
pub fn pressure<T: Scalar>(rho: T, law: &GasLaw<T>) -> Result<T> {
    law.pressure(rho)
}

/// Free-function form of [`GasLaw::relative_internal_energy`].
pub fn relative_internal_energy<T: Scalar>(rho: T, rho_bar: T, law: &GasLaw<T>) -> Result<T> {
    law.relative_internal_energy(rho, rho_bar)
}

/// Samples used by [`dominating_constant`].
pub const DOMINATING_SAMPLES: usize = 100_000;

/// Safety factor applied to the sampled supremum in [`dominating_constant`].
pub const DOMINATING_SAFETY: f64 = 1.05;

/// Smallest `M` such that `rho + rho^gamma <= M (hbar(rho, rho_bar) + 1)` on a
/// uniform sample of `[0, rho_max]`, inflated by [`DOMINATING_SAFETY`].
pub fn dominating_constant<T: Scalar>(rho_max: T, rho_bar: T, law: &GasLaw<T>) -> Result<T> {
    dominating_constant_sampled(rho_max, rho_bar, law, DOMINATING_SAMPLES)
}

pub fn dominating_constant_sampled<T: Scalar>(
    rho_max: T,
    rho_bar: T,
    law: &GasLaw<T>,
    samples: usize,
) -> Result<T> {
    if !(rho_max > T::zero()) || !rho_max.is_finite() {
        return Err(Error::domain("rho_max must be positive", to_f64(rho_max)));
    }
    GasLaw::<T>::check_density(rho_bar)?;
    if samples < 2 {
        return Err(Error::Config("dominating_constant needs at least two samples".into()));
    }
    let last: T = from_usize(samples - 1);
    let mut sup = T::zero();
    for k in 0..samples {
        let rho = rho_max * from_usize::<T>(k) / last;
        let ratio = (rho + rho.powf(law.gamma())) / (law.relative_internal_energy_unchecked(rho, rho_bar) + T::one());
        sup = sup.max(ratio);
    }
    Ok(sup * lit(DOMINATING_SAFETY))
}

/// Resolution of a [`RadialGrid`]: geometric from `a` to 1, uniform from 1 to `b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec<T> {
    /// Uniform spacing on `[1, b]`; the geometric ratio on `[a, 1]` is chosen so
    /// that the spacing approaches this value at `r = 1`.
    pub outer_spacing: T,
    /// Smallest admissible spacing.
    pub min_spacing: T,
}

impl<T: Scalar> GridSpec<T> {
    pub fn new(outer_spacing: T) -> Self {
        Self {
            outer_spacing,
            min_spacing: lit(1e-9),
        }
    }

    /// Same grid family with every spacing divided by `factor`.
    pub fn refined(&self, factor: T) -> Self {
        Self {
            outer_spacing: self.outer_spacing / factor,
            min_spacing: self.min_spacing / factor,
        }
    }
}

/// Strictly increasing radial nodes on `[a, b]` with cached geometric weights.
#[derive(Clone, Debug, Serialize)]
pub struct RadialGrid<T> {
    a: T,
    b: T,
    n_dim: usize,
    nodes: Vec<T>,
    #[serde(skip)]
    node_weight: Vec<T>,
    #[serde(skip)]
    face_weight: Vec<T>,
    #[serde(skip)]
    vertex_volume: Vec<T>,
}

impl<T: Scalar> RadialGrid<T> {
    /// Geometric spacing on `[a, min(1, b)]`, uniform spacing on `[max(1, a), b]`.
    pub fn geometric_uniform(a: T, b: T, n_dim: usize, spec: &GridSpec<T>) -> Result<Self> {
        Self::check_bounds(a, b, n_dim)?;
        let h = spec.outer_spacing;
        if !(h > T::zero()) || !h.is_finite() {
            return Err(Error::Config(format!("outer spacing must be positive, got {}", h)));
        }
        let one = T::one();
        let mut nodes = vec![a];
        let split = one.max(a).min(b);
        if a < split {
            let ratio_target = one + h;
            let intervals = ((split / a).ln() / ratio_target.ln()).ceil().max(one);
            let k = intervals.to_usize().unwrap_or(1);
            let q = (split / a).powf(one / intervals);
            let mut r = a;
            for i in 1..k {
                r = a * q.powi(i as i32);
                nodes.push(r);
            }
            let _ = r;
            nodes.push(split);
        }
        if split < b {
            let intervals = ((b - split) / h).ceil().max(one);
            let k = intervals.to_usize().unwrap_or(1);
            let dh = (b - split) / intervals;
            for i in 1..k {
                nodes.push(split + dh * from_usize::<T>(i));
            }
            nodes.push(b);
        }
        Self::from_nodes(nodes, n_dim, spec.min_spacing)
    }

    /// Grid from explicit nodes; the first and last node are `a` and `b`.
    pub fn from_nodes(nodes: Vec<T>, n_dim: usize, min_spacing: T) -> Result<Self> {
        if nodes.len() < 4 {
            return Err(Error::Config(format!("grid needs at least 4 nodes, got {}", nodes.len())));
        }
        let a = nodes[0];
        let b = *nodes.last().unwrap();
        Self::check_bounds(a, b, n_dim)?;
        for w in nodes.windows(2) {
            let h = w[1] - w[0];
            if !(h >= min_spacing) || !(h > T::zero()) {
                return Err(Error::Config(format!(
                    "grid spacing {} at r = {} below minimum {}",
                    h, w[0], min_spacing
                )));
            }
        }
        let pw = |r: T| r.powi(n_dim as i32 - 1);
        let node_weight: Vec<T> = nodes.iter().map(|&r| pw(r)).collect();
        let face_weight: Vec<T> = nodes.windows(2).map(|w| pw((w[0] + w[1]) / lit(2.0))).collect();
        let nf: T = from_usize(n_dim);
        let last = nodes.len() - 1;
        let vertex_volume = (0..=last)
            .map(|i| {
                let lo = if i == 0 { nodes[0] } else { (nodes[i - 1] + nodes[i]) / lit(2.0) };
                let hi = if i == last { nodes[last] } else { (nodes[i] + nodes[i + 1]) / lit(2.0) };
                (hi.powi(n_dim as i32) - lo.powi(n_dim as i32)) / nf
            })
            .collect();
        Ok(Self {
            a,
            b,
            n_dim,
            nodes,
            node_weight,
            face_weight,
            vertex_volume,
        })
    }

    fn check_bounds(a: T, b: T, n_dim: usize) -> Result<()> {
        if !(a > T::zero()) {
            return Err(Error::domain("inner radius must be positive", to_f64(a)));
        }
        if !(b > a) || !b.is_finite() {
            return Err(Error::domain("outer radius must exceed inner radius", to_f64(b)));
        }
        if n_dim < 2 {
            return Err(Error::domain("spatial dimension must be >= 2", n_dim as f64));
        }
        Ok(())
    }

    pub fn a(&self) -> T {
        self.a
    }
    pub fn b(&self) -> T {
        self.b
    }
    pub fn n_dim(&self) -> usize {
        self.n_dim
    }
    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
    pub fn last(&self) -> usize {
        self.nodes.len() - 1
    }
    /// `r_i^{n-1}`.
    pub fn node_weight(&self) -> &[T] {
        &self.node_weight
    }
    /// `r_{i+1/2}^{n-1}` at the midpoint between node `i` and `i + 1`.
    pub fn face_weight(&self) -> &[T] {
        &self.face_weight
    }
    /// `int r^{n-1} dr` over the dual cell of each node (half cells at the ends).
    pub fn vertex_volume(&self) -> &[T] {
        &self.vertex_volume
    }
    /// Spacing between node `i` and `i + 1`.
    pub fn spacing(&self, i: usize) -> T {
        self.nodes[i + 1] - self.nodes[i]
    }
    pub fn min_spacing(&self) -> T {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(T::infinity(), T::min)
    }

    /// Weights `w_i` with `sum_i w_i f_i = int_a^b I[f](y) y^power dy` for the
    /// piecewise-linear interpolant `I[f]`.
    pub fn hat_weights(&self, power: i32) -> Vec<T> {
        self.hat_weights_from(self.a, power)
    }

    /// As [`hat_weights`](Self::hat_weights) but integrating over `[lo, b]`.
    pub fn hat_weights_from(&self, lo: T, power: i32) -> Vec<T> {
        let n = self.len();
        let mut w = vec![T::zero(); n];
        let order = ((power.max(0) as usize) + 3) / 2 + 1;
        let rule = JacobiRule::<T>::legendre(order.max(2)).expect("legendre rule");
        for i in 0..n - 1 {
            let (x0, x1) = (self.nodes[i], self.nodes[i + 1]);
            if x1 <= lo {
                continue;
            }
            let start = x0.max(lo);
            let h = x1 - x0;
            let half = (x1 - start) / lit(2.0);
            let mid = (x1 + start) / lit(2.0);
            let (mut left, mut right) = (T::zero(), T::zero());
            for (&x, &wt) in rule.nodes().iter().zip(rule.weights()) {
                let y = mid + half * x;
                let yp = y.powi(power) * wt * half;
                let s = (y - x0) / h;
                left = left + yp * (T::one() - s);
                right = right + yp * s;
            }
            w[i] = w[i] + left;
            w[i + 1] = w[i + 1] + right;
        }
        w
    }

    /// Second-order derivative of nodal data; one-sided three-point stencils at the ends.
    pub fn derivative(&self, f: &[T]) -> Vec<T> {
        let n = self.len();
        let x = &self.nodes;
        let mut d = vec![T::zero(); n];
        for i in 1..n - 1 {
            let hm = x[i] - x[i - 1];
            let hp = x[i + 1] - x[i];
            d[i] = (hm * hm * f[i + 1] - hp * hp * f[i - 1] + (hp * hp - hm * hm) * f[i]) / (hm * hp * (hm + hp));
        }
        d[0] = one_sided(x[0], x[1], x[2], f[0], f[1], f[2]);
        d[n - 1] = one_sided(x[n - 1], x[n - 2], x[n - 3], f[n - 1], f[n - 2], f[n - 3]);
        d
    }

    /// Index of the node closest to `r`.
    pub fn nearest(&self, r: T) -> usize {
        match self
            .nodes
            .binary_search_by(|x| x.partial_cmp(&r).unwrap_or(std::cmp::Ordering::Less))
        {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) if i >= self.len() => self.len() - 1,
            Err(i) => {
                if r - self.nodes[i - 1] <= self.nodes[i] - r {
                    i - 1
                } else {
                    i
                }
            }
        }
    }
}

/// Derivative at `x0` of the quadratic through three points.
fn one_sided<T: Scalar>(x0: T, x1: T, x2: T, f0: T, f1: T, f2: T) -> T {
    let d1 = x1 - x0;
    let d2 = x2 - x0;
    let c1 = d2 / (d1 * (d2 - d1));
    let c2 = -d1 / (d2 * (d2 - d1));
    let c0 = -(c1 + c2);
    c0 * f0 + c1 * f1 + c2 * f2
}

/// The three time-integrated, viscosity-weighted dissipation terms of the
/// energy estimate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Dissipation<T> {
    /// `eps int int h_delta''(rho) |rho_r|^2 r^{n-1}`
    pub density_gradient: T,
    /// `eps int int rho |u_r|^2 r^{n-1}`
    pub velocity_gradient: T,
    /// `eps int int (n-1) rho u^2 / r^2 r^{n-1}`
    pub geometric: T,
}

impl<T: Scalar> Dissipation<T> {
    pub fn total(&self) -> T {
        self.density_gradient + self.velocity_gradient + self.geometric
    }
}

/// Density and momentum at the grid nodes at time `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialField<T> {
    pub t: T,
    pub rho: Vec<T>,
    pub m: Vec<T>,
    pub dissipation: Dissipation<T>,
    /// Positive lower bound every density value must respect.
    pub floor: T,
}

impl<T: Scalar> RadialField<T> {
    pub fn new(t: T, rho: Vec<T>, m: Vec<T>, floor: T) -> Result<Self> {
        let field = Self {
            t,
            rho,
            m,
            dissipation: Dissipation::default(),
            floor,
        };
        field.validate()?;
        Ok(field)
    }

    /// Constant state on `len` nodes.
    pub fn constant(len: usize, rho: T, m: T, floor: T) -> Result<Self> {
        Self::new(T::zero(), vec![rho; len], vec![m; len], floor)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rho.len() != self.m.len() {
            return Err(Error::Data("density and momentum lengths differ".into()));
        }
        if !(self.floor > T::zero()) {
            return Err(Error::domain("density floor must be positive", to_f64(self.floor)));
        }
        for (&r, &m) in self.rho.iter().zip(&self.m) {
            if !r.is_finite() || !m.is_finite() {
                return Err(Error::Data("non-finite field value".into()));
            }
        }
        if let Some((i, &r)) = self.rho.iter().enumerate().find(|(_, &r)| r < self.floor) {
            return Err(Error::DensityFloor {
                t: to_f64(self.t),
                r: i as f64,
                rho: to_f64(r),
                floor: to_f64(self.floor),
            });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }
    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    /// `u = m / rho` at every node.
    pub fn velocity(&self) -> Vec<T> {
        self.rho.iter().zip(&self.m).map(|(&r, &m)| m / r).collect()
    }

    pub fn min_density(&self) -> T {
        self.rho.iter().copied().fold(T::infinity(), T::min)
    }
}

/// Discrete relative energy `sum_i V_i (m_i^2 / (2 rho_i) + hbar(rho_i, rho_bar))`.
pub fn discrete_energy<T: Scalar>(rho: &[T], m: &[T], grid: &RadialGrid<T>, law: &GasLaw<T>, rho_bar: T) -> T {
    grid.vertex_volume()
        .iter()
        .zip(rho.iter().zip(m))
        .map(|(&v, (&r, &mm))| {
            let kinetic = if r > T::zero() { mm * mm / (lit::<T>(2.0) * r) } else { T::zero() };
            v * (kinetic + law.relative_internal_energy_unchecked(r.max(T::zero()), rho_bar))
        })
        .sum()
}

/// Discrete mass `sum_i V_i rho_i`.
pub fn discrete_mass<T: Scalar>(rho: &[T], grid: &RadialGrid<T>) -> T {
    grid.vertex_volume().iter().zip(rho).map(|(&v, &r)| v * r).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pressure_examples() {
        let law = GasLaw::<f64>::new(2.0).unwrap();
        assert_eq!(law.pressure(0.0).unwrap(), 0.0);
        assert!((law.pressure(1.0).unwrap() - 0.125).abs() < 1e-15);
        let law3 = GasLaw::<f64>::new(3.0).unwrap();
        assert!((law3.pressure(2.0).unwrap() - 8.0 / 3.0).abs() < 1e-14);
        assert!(matches!(law.pressure(-1.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn pressure_includes_artificial_term() {
        let law = GasLaw::<f64>::with_delta(2.0, 0.5).unwrap();
        assert!((law.pressure(2.0).unwrap() - (0.5 + 2.0)).abs() < 1e-14);
    }

    #[test]
    fn invalid_gamma_rejected() {
        assert!(GasLaw::<f64>::new(1.0).is_err());
        assert!(GasLaw::<f64>::new(f64::NAN).is_err());
        assert!(GasLaw::<f64>::with_delta(2.0, -1.0).is_err());
    }

    #[test]
    fn relative_energy_examples() {
        let law = GasLaw::<f64>::new(2.0).unwrap();
        assert_eq!(law.relative_internal_energy(0.7, 0.7).unwrap(), 0.0);
        assert!((law.relative_internal_energy(1.0, 0.0).unwrap() - 0.125).abs() < 1e-15);
        assert!(law.relative_internal_energy(0.7 + 1e-9, 0.7).unwrap() > 0.0);
        assert!(law.relative_internal_energy(-0.1, 0.7).is_err());
        assert!(law.relative_internal_energy(0.1, -0.7).is_err());
    }

    #[test]
    fn relative_energy_series_matches_direct_formula() {
        let law = GasLaw::<f64>::with_delta(1.4, 0.01).unwrap();
        let h = |r: f64| law.internal_energy(r);
        let hp = |r: f64| law.internal_energy_derivative(r);
        for &(rho, bar) in &[(0.9, 0.6), (1.3, 1.0), (0.31, 0.3), (2.0, 1.5)] {
            let direct = h(rho) - h(bar) - hp(bar) * (rho - bar);
            let got = law.relative_internal_energy(rho, bar).unwrap();
            assert!((direct - got).abs() <= 1e-13 * (1.0 + direct.abs()), "{rho} {bar}: {direct} vs {got}");
        }
    }

    #[test]
    fn dominating_constant_scan() {
        let law = GasLaw::<f64>::new(2.0).unwrap();
        let m = dominating_constant(100.0, 0.0, &law).unwrap();
        // independent golden-section search on (rho + rho^2) / (rho^2 / 8 + 1)
        let f = |r: f64| (r + r * r) / (r * r / 8.0 + 1.0);
        let (mut lo, mut hi) = (0.0f64, 100.0f64);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let x1 = hi - g * (hi - lo);
            let x2 = lo + g * (hi - lo);
            if f(x1) < f(x2) {
                lo = x1;
            } else {
                hi = x2;
            }
        }
        let sup = f(0.5 * (lo + hi));
        assert!((m / 1.05 - sup).abs() < 1e-6 * sup, "{m} vs {sup}");
        let small = dominating_constant(10.0, 0.0, &law).unwrap();
        assert!(small <= m);
        assert!(dominating_constant(0.0, 0.0, &law).is_err());
    }

    #[test]
    fn grid_is_geometric_then_uniform() {
        let spec = GridSpec::new(0.01);
        let g = RadialGrid::<f64>::geometric_uniform(0.1, 1.5, 3, &spec).unwrap();
        assert_eq!(g.nodes()[0], 0.1);
        assert_eq!(*g.nodes().last().unwrap(), 1.5);
        let one = g.nodes().iter().position(|&r| r == 1.0).expect("split node at r = 1");
        let q0 = g.nodes()[1] / g.nodes()[0];
        let q1 = g.nodes()[one] / g.nodes()[one - 1];
        assert!((q0 - q1).abs() < 1e-12);
        let h0 = g.spacing(one);
        let h1 = g.spacing(g.len() - 2);
        assert!((h0 - h1).abs() < 1e-12);
        assert!(h0 <= 0.01 + 1e-15);
        let vol: f64 = g.vertex_volume().iter().sum();
        assert!((vol - (1.5f64.powi(3) - 0.1f64.powi(3)) / 3.0).abs() < 1e-14);
    }

    #[test]
    fn grid_rejects_bad_bounds() {
        let spec = GridSpec::new(0.1);
        assert!(RadialGrid::<f64>::geometric_uniform(0.0, 1.5, 3, &spec).is_err());
        assert!(RadialGrid::<f64>::geometric_uniform(0.5, 0.4, 3, &spec).is_err());
        assert!(RadialGrid::<f64>::geometric_uniform(0.5, 1.5, 1, &spec).is_err());
        assert!(RadialGrid::<f64>::from_nodes(vec![0.1, 0.2, 0.2, 0.4], 3, 1e-9).is_err());
    }

    #[test]
    fn hat_weights_integrate_polynomials() {
        let g = RadialGrid::<f64>::geometric_uniform(0.2, 1.7, 3, &GridSpec::new(0.05)).unwrap();
        let w = g.hat_weights(2);
        let one: f64 = w.iter().sum();
        assert!((one - (1.7f64.powi(3) - 0.2f64.powi(3)) / 3.0).abs() < 1e-13);
        let lin: f64 = w.iter().zip(g.nodes()).map(|(w, r)| w * r).sum();
        assert!((lin - (1.7f64.powi(4) - 0.2f64.powi(4)) / 4.0).abs() < 1e-13);
        let w = g.hat_weights_from(0.777, 1);
        let part: f64 = w.iter().sum();
        assert!((part - (1.7f64.powi(2) - 0.777f64.powi(2)) / 2.0).abs() < 1e-13);
    }

    #[test]
    fn derivative_exact_for_quadratics() {
        let g = RadialGrid::<f64>::geometric_uniform(0.2, 1.7, 2, &GridSpec::new(0.05)).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|r| 3.0 * r * r - r + 2.0).collect();
        let d = g.derivative(&f);
        for (r, d) in g.nodes().iter().zip(d) {
            assert!((d - (6.0 * r - 1.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn field_floor_breach_is_an_error() {
        assert!(RadialField::new(0.0, vec![1.0, 0.5, 1e-9], vec![0.0; 3], 1e-6).is_err());
        assert!(RadialField::new(0.0, vec![1.0, 0.5, 1e-3], vec![0.0; 3], 1e-6).is_ok());
        assert!(RadialField::new(0.0, vec![1.0, f64::NAN], vec![0.0; 2], 1e-6).is_err());
    }

    #[test]
    fn generic_over_f32() {
        let law = GasLaw::<f32>::new(2.0).unwrap();
        assert!((law.pressure(1.0).unwrap() - 0.125).abs() < 1e-7);
        assert!(law.relative_internal_energy(1.0, 0.5).unwrap() > 0.0);
    }
}
