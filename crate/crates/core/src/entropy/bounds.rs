//! Empirical constants for the growth, sign and Hessian inequalities satisfied
//! by the weak and modified entropy pairs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{physical_entropy_hessian, EntropyKernel};
use crate::error::{Error, Result};
use crate::model::GasLaw;
use crate::scalar::{from_usize, lit, to_f64, Scalar};

/// Inequalities checked by [`verify_entropy_bounds`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Inequality {
    /// `q_tilde >= (rho |u|^3 + rho^{gamma+theta}) / M - M (rho u^2 + rho + rho^gamma)`
    FluxLowerBound,
    /// `-q_check + m (eta_rho + u eta_m) <= 0`
    SignCondition,
    /// `|eta_m| <= M (|u| + rho^theta)`
    EtaMGrowth,
    /// `|eta_rho| <= M (u^2 + rho^{2 theta})`
    EtaRhoGrowth,
    /// `|eta_tilde| + rho |eta_tilde_rho + u eta_tilde_m| <= M (rho u^2 + rho + rho^gamma)`
    ModifiedGrowth,
    /// `|(eta_rho + u eta_m)_rho| <= M (rho^{theta-1} |u| + rho^{2 theta - 1})`
    CombinedRho,
    /// `|(eta_rho + u eta_m)_u| <= M (|u| + rho^theta)`
    CombinedU,
    /// `|(eta_tilde_m)_rho| <= M rho^{theta - 1}`
    SlopeRho,
    /// `|(eta_tilde_m)_u| <= M`
    SlopeU,
    /// `|m eta_tilde_m| <= M (rho u^2 + rho^gamma + rho rho_bar^{2 theta})`
    MomentumSlope,
    /// `|xi Hess(eta_tilde) xi^T| <= M xi Hess(eta*) xi^T`
    HessianDomination,
}

impl Inequality {
    pub const ALL: [Inequality; 11] = [
        Inequality::FluxLowerBound,
        Inequality::SignCondition,
        Inequality::EtaMGrowth,
        Inequality::EtaRhoGrowth,
        Inequality::ModifiedGrowth,
        Inequality::CombinedRho,
        Inequality::CombinedU,
        Inequality::SlopeRho,
        Inequality::SlopeU,
        Inequality::MomentumSlope,
        Inequality::HessianDomination,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Inequality::FluxLowerBound => "flux_lower_bound",
            Inequality::SignCondition => "sign_condition",
            Inequality::EtaMGrowth => "eta_m_growth",
            Inequality::EtaRhoGrowth => "eta_rho_growth",
            Inequality::ModifiedGrowth => "modified_growth",
            Inequality::CombinedRho => "combined_rho",
            Inequality::CombinedU => "combined_u",
            Inequality::SlopeRho => "slope_rho",
            Inequality::SlopeU => "slope_u",
            Inequality::MomentumSlope => "momentum_slope",
            Inequality::HessianDomination => "hessian_domination",
        }
    }
}

/// Tensor grid of `(rho, u)` samples: geometric in `rho`, uniform in `u`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundSampleSpec<T> {
    pub rho_min: T,
    pub rho_max: T,
    pub u_max: T,
    pub rho_samples: usize,
    pub u_samples: usize,
}

impl<T: Scalar> Default for BoundSampleSpec<T> {
    fn default() -> Self {
        Self {
            rho_min: lit(1e-3),
            rho_max: lit(10.0),
            u_max: lit(10.0),
            rho_samples: 200,
            u_samples: 200,
        }
    }
}

impl<T: Scalar> BoundSampleSpec<T> {
    /// Same box with twice as many samples per axis.
    pub fn doubled(&self) -> Self {
        Self {
            rho_samples: 2 * self.rho_samples,
            u_samples: 2 * self.u_samples,
            ..*self
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.rho_min > T::zero()) || !(self.rho_max > self.rho_min) || !self.rho_max.is_finite() {
            return Err(Error::Config("bound samples need 0 < rho_min < rho_max".into()));
        }
        if !(self.u_max >= T::zero()) || !self.u_max.is_finite() {
            return Err(Error::Config("bound samples need a finite u_max >= 0".into()));
        }
        if self.rho_samples < 2 || self.u_samples < 2 {
            return Err(Error::Config("bound samples need at least 2 points per axis".into()));
        }
        Ok(())
    }

    pub fn rho_values(&self) -> Vec<T> {
        let last: T = from_usize(self.rho_samples - 1);
        let ratio = self.rho_max / self.rho_min;
        (0..self.rho_samples)
            .map(|i| self.rho_min * ratio.powf(from_usize::<T>(i) / last))
            .collect()
    }

    pub fn u_values(&self) -> Vec<T> {
        let last: T = from_usize(self.u_samples - 1);
        (0..self.u_samples)
            .map(|j| -self.u_max + (self.u_max + self.u_max) * from_usize::<T>(j) / last)
            .collect()
    }
}

/// One inequality at one sampling level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub inequality: String,
    pub level: usize,
    pub samples: usize,
    /// Smallest constant making the inequality hold on the samples. For the
    /// sign condition this is the largest normalized value of the left side.
    pub empirical_m: f64,
    /// Largest normalized positive part of the sign-condition left side; zero
    /// for the other inequalities.
    pub max_violation: f64,
    pub worst_rho: f64,
    pub worst_u: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub gamma: f64,
    pub rho_bar: f64,
    pub rows: Vec<BoundRow>,
}

impl BoundReport {
    pub fn row(&self, which: Inequality, level: usize) -> Option<&BoundRow> {
        self.rows.iter().find(|r| r.inequality == which.id() && r.level == level)
    }

    /// Appends rows from another report (e.g. a refined sampling level).
    pub fn extend(&mut self, other: BoundReport) {
        self.rows.extend(other.rows);
    }
}

#[derive(Clone, Copy)]
struct Sup {
    value: f64,
    rho: f64,
    u: f64,
}

impl Sup {
    const EMPTY: Sup = Sup {
        value: f64::NEG_INFINITY,
        rho: f64::NAN,
        u: f64::NAN,
    };
    fn max(self, other: Sup) -> Sup {
        if other.value > self.value {
            other
        } else {
            self
        }
    }
}

/// Largest `|mu|` with `det(H - mu H*) = 0`, `H*` positive definite.
fn generalized_spectral_radius(h: &[[f64; 2]; 2], hs: &[[f64; 2]; 2]) -> f64 {
    let l11 = hs[0][0].sqrt();
    let l21 = hs[0][1] / l11;
    let l22 = (hs[1][1] - l21 * l21).max(0.0).sqrt();
    // C = L^{-1} H L^{-T}
    let i11 = 1.0 / l11;
    let i21 = -l21 / (l11 * l22);
    let i22 = 1.0 / l22;
    let c11 = i11 * i11 * h[0][0];
    let c12 = i11 * (i21 * h[0][0] + i22 * h[0][1]);
    let c22 = i21 * i21 * h[0][0] + 2.0 * i21 * i22 * h[0][1] + i22 * i22 * h[1][1];
    let mean = 0.5 * (c11 + c22);
    let rad = (0.25 * (c11 - c22).powi(2) + c12 * c12).sqrt();
    (mean + rad).abs().max((mean - rad).abs())
}

/// Evaluates every [`Inequality`] on the sample grid. Quadrature failures are
/// propagated; inequality violations are report entries.
pub fn verify_entropy_bounds<T: Scalar>(
    spec: &BoundSampleSpec<T>,
    rho_bar: T,
    law: &GasLaw<T>,
) -> Result<BoundReport> {
    verify_entropy_bounds_at_level(spec, rho_bar, law, 0)
}

pub(crate) fn verify_entropy_bounds_at_level<T: Scalar>(
    spec: &BoundSampleSpec<T>,
    rho_bar: T,
    law: &GasLaw<T>,
    level: usize,
) -> Result<BoundReport> {
    spec.validate()?;
    if !(rho_bar >= T::zero()) {
        return Err(Error::domain("rho_bar must be >= 0", to_f64(rho_bar)));
    }
    let kernel = EntropyKernel::new(*law)?;
    let rhos = spec.rho_values();
    let us = spec.u_values();
    let g = to_f64(law.gamma());
    let th = to_f64(law.theta());
    let slope = to_f64(kernel.base_slope(rho_bar));
    let rb = to_f64(rho_bar);
    let n = Inequality::ALL.len();

    let per_rho: Vec<Result<Vec<Sup>>> = rhos
        .par_iter()
        .map(|&rho_t| {
            let mut sups = vec![Sup::EMPTY; n];
            let rho = to_f64(rho_t);
            for &u_t in &us {
                let u = to_f64(u_t);
                let d = kernel.derivatives(rho_t, u_t)?;
                let (eta_t, q_t) = kernel.modified_pair(rho_t, u_t, rho_bar)?;
                let (eta_t, q_t) = (to_f64(eta_t), to_f64(q_t));
                let q = to_f64(d.q);
                let e_u = to_f64(d.e_u);
                let e_r = to_f64(d.e_rho);
                let eta_m = e_u / rho;
                let eta_rho = e_r - u / rho * e_u;
                let au = u.abs();
                let m = rho * u;
                let rg = rho.powf(g);
                let rth = rho.powf(th);

                let a = rho * au.powi(3) + rho.powf(g + th);
                let b = rho * u * u + rho + rg;
                let flux_m = (-q_t + (q_t * q_t + 4.0 * a * b).sqrt()) / (2.0 * b);

                let lhs = -q + m * (eta_rho + u * eta_m);
                let norm = q.abs() + (m * (eta_rho + u * eta_m)).abs() + f64::MIN_POSITIVE;
                let sign = lhs / norm;

                let combined = e_r - u * slope;
                let modified = (eta_t.abs() + rho * combined.abs()) / b;

                let h = super::conservative_hessian(&d, rho_t, u_t);
                let h = [[to_f64(h[0][0]), to_f64(h[0][1])], [to_f64(h[1][0]), to_f64(h[1][1])]];
                let hs = physical_entropy_hessian(rho_t, u_t, law);
                let hs = [[to_f64(hs[0][0]), to_f64(hs[0][1])], [to_f64(hs[1][0]), to_f64(hs[1][1])]];

                let values = [
                    flux_m,
                    sign,
                    eta_m.abs() / (au + rth),
                    eta_rho.abs() / (u * u + rth * rth),
                    modified,
                    to_f64(d.e_rho_rho).abs() / (rho.powf(th - 1.0) * au + rho.powf(2.0 * th - 1.0)),
                    to_f64(d.e_rho_u).abs() / (au + rth),
                    to_f64(d.eta_m_rho).abs() / rho.powf(th - 1.0),
                    to_f64(d.eta_m_u).abs(),
                    (m * (eta_m - slope)).abs() / (rho * u * u + rg + rho * rb.powf(2.0 * th)),
                    generalized_spectral_radius(&h, &hs),
                ];
                for (k, &v) in values.iter().enumerate() {
                    sups[k] = sups[k].max(Sup { value: v, rho, u });
                }
            }
            Ok(sups)
        })
        .collect();

    let mut sups = vec![Sup::EMPTY; n];
    for part in per_rho {
        for (k, s) in part?.into_iter().enumerate() {
            sups[k] = sups[k].max(s);
        }
    }
    let samples = rhos.len() * us.len();
    let rows = Inequality::ALL
        .iter()
        .zip(sups)
        .map(|(which, s)| BoundRow {
            inequality: which.id().to_string(),
            level,
            samples,
            empirical_m: s.value,
            max_violation: if *which == Inequality::SignCondition { s.value.max(0.0) } else { 0.0 },
            worst_rho: s.rho,
            worst_u: s.u,
        })
        .collect();
    Ok(BoundReport {
        gamma: g,
        rho_bar: rb,
        rows,
    })
}

/// Runs the suite at `levels` successive doublings of `spec`.
pub fn bound_refinement_study<T: Scalar>(
    spec: &BoundSampleSpec<T>,
    rho_bar: T,
    law: &GasLaw<T>,
    levels: usize,
) -> Result<BoundReport> {
    let mut current = *spec;
    let mut report: Option<BoundReport> = None;
    for level in 0..levels.max(1) {
        let r = verify_entropy_bounds_at_level(&current, rho_bar, law, level)?;
        match report.as_mut() {
            Some(rep) => rep.extend(r),
            None => report = Some(r),
        }
        current = current.doubled();
    }
    Ok(report.expect("at least one level"))
}
