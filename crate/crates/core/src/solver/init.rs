//! Initial profiles and their preparation into compatible discrete data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{discrete_energy, GasLaw, RadialGrid};
use crate::quadrature::JacobiRule;
use crate::scalar::{lit, to_f64, Scalar};
use crate::scheduler::ViscousParams;

/// Named raw initial profiles. Densities are offsets above the far-field value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    /// `(rho_bar, 0)`.
    Constant,
    /// `rho = rho_bar + amplitude exp(-(r / width)^2)`, `m = 0`.
    GaussianBump { amplitude: f64, width: f64 },
    /// Gaussian density bump carrying velocity `u = velocity r exp(-(r / width)^2)`.
    BumpWithFlow { amplitude: f64, width: f64, velocity: f64 },
}

impl Default for Profile {
    fn default() -> Self {
        Profile::GaussianBump {
            amplitude: 1.0,
            width: 1.0,
        }
    }
}

impl Profile {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Profile::Constant => Ok(()),
            Profile::GaussianBump { amplitude, width } | Profile::BumpWithFlow { amplitude, width, .. } => {
                if !(amplitude >= 0.0) || !(width > 0.0) {
                    return Err(Error::Config(format!(
                        "bump needs amplitude >= 0 and width > 0 (got {amplitude}, {width})"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn density<T: Scalar>(&self, r: T, rho_bar: T) -> T {
        match *self {
            Profile::Constant => rho_bar,
            Profile::GaussianBump { amplitude, width } | Profile::BumpWithFlow { amplitude, width, .. } => {
                let x = r / lit::<T>(width);
                rho_bar + lit::<T>(amplitude) * (-x * x).exp()
            }
        }
    }

    pub fn momentum<T: Scalar>(&self, r: T, rho_bar: T) -> T {
        match *self {
            Profile::BumpWithFlow { width, velocity, .. } => {
                let x = r / lit::<T>(width);
                self.density(r, rho_bar) * lit::<T>(velocity) * r * (-x * x).exp()
            }
            _ => T::zero(),
        }
    }
}

/// Knobs of [`prepare_initial_data`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitSpec {
    /// Half-width of the mollifier; 0 disables mollification.
    pub mollification_width: f64,
    /// Width of the layer over which data is flattened next to `a`, in units of `a`.
    pub inner_layer: f64,
    /// Width of the layer over which data is blended to `(rho_bar, 0)` before `b`.
    pub outer_layer: f64,
    /// Lower bound on the prepared density.
    pub floor: f64,
    /// Optional target for the discrete energy and its relative tolerance.
    pub energy_target: Option<f64>,
    pub energy_tolerance: f64,
}

impl Default for InitSpec {
    fn default() -> Self {
        Self {
            mollification_width: 0.0,
            inner_layer: 1.0,
            outer_layer: 0.1,
            floor: 1e-10,
            energy_target: None,
            energy_tolerance: 1e-2,
        }
    }
}

/// Prepared discrete initial data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialData<T> {
    pub rho: Vec<T>,
    pub m: Vec<T>,
    pub mollification_width: T,
    /// Smallest prepared density.
    pub floor: T,
    /// Discrete relative energy of the prepared data.
    pub energy: T,
}

/// `C^infinity` step: 0 for `x <= 0`, 1 for `x >= 1`, all derivatives vanish at both ends.
pub fn smooth_step<T: Scalar>(x: T) -> T {
    if x <= T::zero() {
        return T::zero();
    }
    if x >= T::one() {
        return T::one();
    }
    let f = |y: T| (-T::one() / y).exp();
    let a = f(x);
    let b = f(T::one() - x);
    a / (a + b)
}

fn mollify<T: Scalar, F: Fn(T) -> T>(f: &F, r: T, width: T, odd: bool, rule: &JacobiRule<T>) -> T {
    // kernel exp(-1 / (1 - x^2)) on [-1, 1], normalised on the rule itself
    let mut num = T::zero();
    let mut den = T::zero();
    for (&x, &w) in rule.nodes().iter().zip(rule.weights()) {
        let k = w * (-T::one() / (T::one() - x * x)).exp();
        let s = r - width * x;
        let v = if s >= T::zero() {
            f(s)
        } else if odd {
            -f(-s)
        } else {
            f(-s)
        };
        num = num + k * v;
        den = den + k;
    }
    num / den
}

/// Mollifies, blends to the boundary values, lifts to the floor and enforces
/// the boundary and compatibility conditions on the discrete stencils.
pub fn prepare_initial_data<T: Scalar, R, M>(
    rho0_raw: R,
    m0_raw: M,
    params: &ViscousParams<T>,
    grid: &RadialGrid<T>,
    spec: &InitSpec,
) -> Result<InitialData<T>>
where
    R: Fn(T) -> T,
    M: Fn(T) -> T,
{
    let a = grid.a();
    let b = grid.b();
    let width: T = lit(spec.mollification_width);
    if !(width >= T::zero()) || width > (b - a) / lit(4.0) {
        return Err(Error::Config(format!(
            "mollification width {} outside [0, (b - a) / 4 = {}]",
            spec.mollification_width,
            to_f64((b - a) / lit(4.0))
        )));
    }
    let inner: T = lit::<T>(spec.inner_layer) * a;
    let outer: T = lit(spec.outer_layer);
    if !(inner >= T::zero()) || !(outer > T::zero()) || inner + outer > b - a {
        return Err(Error::Config("boundary layers do not fit inside (a, b)".into()));
    }
    if grid.len() < 8 {
        return Err(Error::Config("grid too coarse for boundary corrections".into()));
    }
    let rho_bar = params.rho_bar;
    let law: GasLaw<T> = params.law()?;
    let rule = JacobiRule::<T>::legendre(24)?;

    let sample = |r: T, odd: bool, f: &dyn Fn(T) -> T| -> T {
        if width > T::zero() {
            mollify(&f, r, width, odd, &rule)
        } else {
            f(r)
        }
    };
    let mut rho: Vec<T> = grid.nodes().iter().map(|&r| sample(r, false, &rho0_raw)).collect();
    let mut m: Vec<T> = grid.nodes().iter().map(|&r| sample(r, true, &m0_raw)).collect();
    if rho.iter().chain(&m).any(|v| !v.is_finite()) {
        return Err(Error::Data("raw profiles are not finite on the grid".into()));
    }
    if rho.iter().any(|&v| v < T::zero()) {
        return Err(Error::Data("raw density is negative".into()));
    }

    let rho_at_a = rho[0];
    for (i, &r) in grid.nodes().iter().enumerate() {
        let s_a = if inner > T::zero() { smooth_step((r - a) / inner) } else { T::one() };
        let s_b = smooth_step((b - r) / outer);
        let base = rho_at_a + s_a * (rho[i] - rho_at_a);
        rho[i] = rho_bar + s_b * (base - rho_bar);
        m[i] = s_b * s_a * m[i];
    }

    let lift = rho_bar.max(lit(spec.floor));
    for v in rho.iter_mut() {
        *v = v.max(lift);
    }

    rho[0] = rho[1];
    m[0] = T::zero();
    m[1] = T::zero();
    let last = grid.last();
    for i in last - 3..=last {
        rho[i] = rho_bar.max(lit(spec.floor));
        m[i] = T::zero();
    }
    rho[last] = rho_bar;

    let energy = discrete_energy(&rho, &m, grid, &law, rho_bar);
    if !energy.is_finite() {
        return Err(Error::Data("prepared data has infinite discrete energy".into()));
    }
    if let Some(target) = spec.energy_target {
        let e = to_f64(energy);
        if (e - target).abs() > spec.energy_tolerance * target.abs().max(f64::MIN_POSITIVE) {
            return Err(Error::Data(format!("prepared energy {e} misses target {target}")));
        }
    }
    let floor = rho.iter().copied().fold(T::infinity(), T::min);
    Ok(InitialData {
        rho,
        m,
        mollification_width: width,
        floor,
        energy,
    })
}

/// [`prepare_initial_data`] for a named profile.
pub fn prepare_profile<T: Scalar>(
    profile: &Profile,
    params: &ViscousParams<T>,
    grid: &RadialGrid<T>,
    spec: &InitSpec,
) -> Result<InitialData<T>> {
    profile.validate()?;
    let rb = params.rho_bar;
    prepare_initial_data(|r| profile.density(r, rb), |r| profile.momentum(r, rb), params, grid, spec)
}
