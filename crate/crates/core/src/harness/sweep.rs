use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::integrals::{
    continuity_identity_residual, energy_report, higher_integrability_parts, rho_cubed_integral,
    tail_density_integrals,
};
use super::testfn::{omega, Cutoff, MultiDTest, TestFunction, Truncation};
use super::weak::{multid_equivalence_check, weak_residual_continuity, weak_residual_momentum};
use crate::error::{Error, Result};
use crate::model::{GasLaw, GridSpec, RadialGrid};
use crate::scalar::{lit, to_f64, Scalar};
use crate::scheduler::{schedule, ScheduleExponents, ViscousParams, DEFAULT_BUDGET};
use crate::solver::{
    prepare_profile, run, ConvectiveScheme, DtControl, InitSpec, Profile, SolverConfig, Trajectory,
};

/// Initial data, gas law and horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSpec {
    pub profile: Profile,
    pub gamma: f64,
    pub n_dim: usize,
    pub t_final: f64,
    pub init: InitSpec,
}

impl Default for ProblemSpec {
    fn default() -> Self {
        Self {
            profile: Profile::default(),
            gamma: 2.0,
            n_dim: 3,
            t_final: 0.5,
            init: InitSpec::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleSpec {
    /// Strictly decreasing viscosities.
    pub eps: Vec<f64>,
    pub budget: f64,
    pub exponents: ScheduleExponents,
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        Self {
            eps: vec![1e-1, 1e-2, 1e-3],
            budget: DEFAULT_BUDGET,
            exponents: ScheduleExponents::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub outer_spacing: f64,
    pub scheme: ConvectiveScheme,
    pub cfl: f64,
    pub viscous_factor: Option<f64>,
    pub max_dt: Option<f64>,
    pub fixed_dt: Option<f64>,
    /// Number of equispaced snapshots after the initial one.
    pub snapshots: usize,
    pub density_floor: f64,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            outer_spacing: 0.005,
            scheme: ConvectiveScheme::Llf,
            cfl: 0.1,
            viscous_factor: None,
            max_dt: None,
            fixed_dt: None,
            snapshots: 100,
            density_floor: 1e-12,
        }
    }
}

impl SolverSpec {
    pub fn config<T: Scalar>(&self, t_final: f64) -> SolverConfig<T> {
        let mut c = SolverConfig::with_uniform_snapshots(lit(t_final), self.snapshots);
        c.scheme = self.scheme;
        c.dt_control = DtControl {
            cfl: lit(self.cfl),
            viscous_factor: self.viscous_factor.map(lit),
            max_dt: self.max_dt.map(lit),
            fixed_dt: self.fixed_dt.map(lit),
        };
        c.density_floor = lit(self.density_floor);
        c
    }

    /// Spacing, time-step bounds divided by `factor`, snapshot count multiplied.
    pub fn refined(&self, factor: usize) -> Self {
        let f = factor as f64;
        Self {
            outer_spacing: self.outer_spacing / f,
            max_dt: self.max_dt.map(|d| d / f),
            fixed_dt: self.fixed_dt.map(|d| d / f),
            snapshots: self.snapshots * factor,
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessSpec {
    /// Truncation thresholds, each in `(0, 1/2)`.
    pub deltas: Vec<f64>,
    pub sphere_order: usize,
    /// Radius of the tail and `rho^3` integrals; must lie in `[a, b)` at every level.
    pub tail_radius: f64,
    pub energy_tolerance: f64,
    /// Run the constant state at the smallest viscosity as a quadrature control.
    pub control: bool,
    /// Component `j` of the multi-dimensional momentum check.
    pub component: usize,
}

impl Default for HarnessSpec {
    fn default() -> Self {
        Self {
            deltas: vec![0.1, 0.25],
            sphere_order: 16,
            tail_radius: 1.0,
            energy_tolerance: 1e-4,
            control: true,
            component: 0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub problem: ProblemSpec,
    pub schedule: ScheduleSpec,
    pub solver: SolverSpec,
    pub harness: HarnessSpec,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.schedule.eps.is_empty() {
            return Err(Error::Config("eps list is empty".into()));
        }
        if self.schedule.eps.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::Config("eps list must be strictly decreasing".into()));
        }
        for &d in &self.harness.deltas {
            Truncation::Quadratic { delta: d }.validate()?;
        }
        if !(self.problem.t_final > 0.0) {
            return Err(Error::Config("t_final must be positive".into()));
        }
        if self.solver.snapshots == 0 {
            return Err(Error::Config("at least one snapshot is required".into()));
        }
        if !(self.solver.outer_spacing > 0.0) {
            return Err(Error::Config("outer grid spacing must be positive".into()));
        }
        self.solver.config::<f64>(self.problem.t_final).validate()?;
        self.problem.profile.validate()
    }

    pub fn params<T: Scalar>(&self, eps: f64) -> Result<ViscousParams<T>> {
        let law = GasLaw::new(lit(self.problem.gamma))?;
        schedule(lit(eps), self.problem.n_dim, lit(self.schedule.budget), &law, &self.schedule.exponents)
    }
}

/// Sets up and integrates one level of `spec` with `profile` in place of the configured one.
pub fn run_problem<T: Scalar>(spec: &SweepSpec, eps: f64, profile: &Profile) -> Result<Trajectory<T>> {
    let params = spec.params::<T>(eps)?;
    let law = params.law()?;
    let grid = RadialGrid::geometric_uniform(
        params.a,
        params.b,
        spec.problem.n_dim,
        &GridSpec::new(lit(spec.solver.outer_spacing)),
    )?;
    let init = prepare_profile(profile, &params, &grid, &spec.problem.init)?;
    let config = spec.solver.config(spec.problem.t_final);
    run(&init, &config, &params, &law, &grid).map_err(Error::from)
}

/// `sqrt(eps)(1 + D^{4-gamma}) + D/a + D^{3/2}/sqrt(eps)`
pub fn grad_sq_shape(eps: f64, delta: f64, a: f64, gamma: f64) -> f64 {
    eps.sqrt() * (1.0 + delta.powf(4.0 - gamma)) + delta / a + delta.powf(1.5) / eps.sqrt()
}

/// `|log D| + sqrt(D/eps) + sqrt(D)/a + sqrt(eps)|log D| D^{(2-gamma)/2}`
pub fn grad_log_shape(eps: f64, delta: f64, a: f64, gamma: f64) -> f64 {
    let l = delta.ln().abs();
    l + (delta / eps).sqrt() + delta.sqrt() / a + eps.sqrt() * l * delta.powf((2.0 - gamma) / 2.0)
}

fn key(prefix: &str, delta: f64) -> String {
    format!("{prefix}_d{delta}")
}

/// The multi-dimensional test function of the equivalence check.
pub fn coordinate_multid<T: Scalar>(j: usize) -> MultiDTest<T> {
    MultiDTest::coordinate(j, Cutoff { inner: 1.0, outer: 2.0 }, Cutoff { inner: 0.5, outer: 1.1 })
}

/// Every harness quantity of one trajectory, by name.
pub fn evaluate_run<T: Scalar>(
    traj: &Trajectory<T>,
    spec: &SweepSpec,
    family: &[TestFunction<T>],
) -> Result<BTreeMap<String, f64>> {
    let mut q = BTreeMap::new();
    let p = &traj.params;
    let (eps, a, b) = (to_f64(p.eps), to_f64(p.a), to_f64(p.b));
    let gamma = spec.problem.gamma;
    let n = spec.problem.n_dim;
    let e = energy_report(traj, spec.harness.energy_tolerance);
    q.insert("energy_e0".into(), e.e0);
    q.insert("energy_sup".into(), e.sup_energy);
    q.insert("energy_dissipation".into(), e.dissipation);
    q.insert("energy_max_balance".into(), e.max_balance);
    q.insert("energy_sup_plus_total".into(), e.sup_plus_total);
    q.insert("energy_excess".into(), e.relative_excess);
    q.insert("energy_pass".into(), if e.pass { 1.0 } else { 0.0 });
    q.insert("min_density".into(), to_f64(traj.snapshots.iter().map(|s| s.min_density()).fold(T::infinity(), T::min)));

    let om = omega();
    let (k, pot) = higher_integrability_parts(traj, &om);
    q.insert("higher_integrability".into(), to_f64(k + pot));
    q.insert("higher_integrability_kinetic".into(), to_f64(k));
    q.insert("higher_integrability_potential".into(), to_f64(pot));

    let r: T = lit(spec.harness.tail_radius);
    for l in 0..n {
        let mut sup = T::zero();
        for s in &traj.snapshots {
            sup = sup.max(tail_density_integrals(s, &traj.grid, traj.law.gamma(), l, r)?);
        }
        q.insert(format!("tail_l{l}"), to_f64(sup));
    }
    let rc = to_f64(rho_cubed_integral(traj, r)?);
    q.insert("rho_cubed".into(), rc);
    q.insert("rho_cubed_scaled".into(), rc / (1.0 + b.powi(n as i32) / eps));

    for &d in &spec.harness.deltas {
        let quad = continuity_identity_residual(traj, &Truncation::Quadratic { delta: d }, &om)?;
        let log = continuity_identity_residual(traj, &Truncation::Log { delta: d }, &om)?;
        let (l31, l32) = (to_f64(quad.lhs), to_f64(log.lhs));
        q.insert(key("grad_sq", d), l31);
        q.insert(key("grad_log", d), l32);
        q.insert(key("grad_sq_ratio", d), l31 / grad_sq_shape(eps, d, a, gamma));
        q.insert(key("grad_log_ratio", d), l32 / grad_log_shape(eps, d, a, gamma));
        q.insert(key("identity_quadratic", d), to_f64(quad.residual));
        q.insert(key("identity_log", d), to_f64(log.residual));
    }

    for phi in family {
        let c = weak_residual_continuity(traj, phi);
        q.insert(format!("cont_euler_{}", phi.name()), to_f64(c.euler));
        q.insert(format!("cont_viscous_{}", phi.name()), to_f64(c.viscous));
        match weak_residual_momentum(traj, phi) {
            Ok(m) => {
                q.insert(format!("mom_euler_{}", phi.name()), to_f64(m.euler));
                q.insert(format!("mom_viscous_{}", phi.name()), to_f64(m.viscous));
                q.insert(format!("mom_delta_{}", phi.name()), to_f64(m.delta_term));
                q.insert(format!("mom_balance_{}", phi.name()), to_f64(m.viscous_balance));
            }
            Err(Error::Admissibility { .. }) => {}
            Err(e) => return Err(e),
        }
    }

    if (2..=3).contains(&n) {
        let md = coordinate_multid::<T>(spec.harness.component);
        let eq = multid_equivalence_check(traj, &md, spec.harness.component, spec.harness.sphere_order)?;
        q.insert("multid_value".into(), eq.multid);
        q.insert("multid_discrepancy".into(), eq.discrepancy);
    }
    Ok(q)
}

/// Status of one level of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunOutcome {
    Ok,
    Failed { message: String },
}

/// One ε level: parameters, grid and every measured quantity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsRow {
    pub eps: f64,
    pub a: f64,
    pub b: f64,
    pub delta: f64,
    pub rho_bar: f64,
    pub n_nodes: usize,
    pub outer_spacing: f64,
    pub steps: usize,
    pub outcome: RunOutcome,
    pub quantities: BTreeMap<String, f64>,
}

impl EpsRow {
    pub fn is_ok(&self) -> bool {
        self.outcome == RunOutcome::Ok
    }
    pub fn get(&self, q: &str) -> Option<f64> {
        self.quantities.get(q).copied()
    }
}

/// Least-squares line through `(ln eps, ln |value|)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub quantity: String,
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
}

/// Slope and intercept of the least-squares fit of `ln |y|` against `ln x`;
/// `None` with fewer than two points or any zero or non-finite value.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let pts: Vec<(f64, f64)> = x.iter().zip(y).map(|(&a, &b)| (a.ln(), b.abs().ln())).collect();
    if pts.iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Pass/fail of one acceptance criterion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub id: u8,
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl std::fmt::Display for Criterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} criterion {:>2} {}: {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail
        )
    }
}

/// Per-ε rows, log-log fits and the sweep-level criteria.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub spec: SweepSpec,
    pub rows: Vec<EpsRow>,
    /// Constant-state quantities at the smallest viscosity.
    pub control: BTreeMap<String, f64>,
    pub fits: Vec<Fit>,
    pub family: Vec<String>,
    pub criteria: Vec<Criterion>,
}

/// Quantity prefixes that get a fit and a plot.
pub const TRACKED: &[&str] = &[
    "energy_dissipation",
    "higher_integrability",
    "rho_cubed_scaled",
    "grad_sq_ratio",
    "grad_log_ratio",
    "identity_quadratic",
    "identity_log",
    "cont_euler",
    "mom_euler",
    "mom_viscous",
    "multid_discrepancy",
];

impl EstimateReport {
    pub fn fit(&self, quantity: &str) -> Option<&Fit> {
        self.fits.iter().find(|f| f.quantity == quantity)
    }

    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(EpsRow::is_ok) && self.criteria.iter().all(|c| c.pass)
    }

    /// Values of `quantity` over the successful rows, as `(eps, value)`.
    pub fn series(&self, quantity: &str) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.is_ok())
            .filter_map(|r| r.get(quantity).map(|v| (r.eps, v)))
            .collect()
    }

    /// Names of the tracked quantities present in the report.
    pub fn tracked(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .rows
            .iter()
            .flat_map(|r| r.quantities.keys())
            .filter(|k| TRACKED.iter().any(|p| k.starts_with(p)))
            .cloned()
            .collect();
        names.sort();
        names.dedup();
        names
    }
}

/// Seeded random admissible test functions `psi(t) r^k chi(r)`, `k` in {1, 2}.
pub fn random_family<T: Scalar>(seed: u64, count: usize, t_final: f64) -> Vec<TestFunction<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let ri = rng.gen_range(0.2..0.7);
            let ro = rng.gen_range(ri + 0.2..1.15);
            let ti = rng.gen_range(0.1..0.4) * t_final;
            let to = rng.gen_range(ti + 0.2 * t_final..t_final);
            let power = rng.gen_range(1..=2);
            TestFunction::tensor(format!("random_{k}"), Cutoff { inner: ti, outer: to }, Cutoff { inner: ri, outer: ro }, power)
        })
        .collect()
}

fn evaluate_level(spec: &SweepSpec, eps: f64, family: &[TestFunction<f64>]) -> EpsRow {
    let params = spec.params::<f64>(eps);
    let (a, b, delta, rho_bar) = params
        .as_ref()
        .map(|p| (p.a, p.b, p.delta, p.rho_bar))
        .unwrap_or((f64::NAN, f64::NAN, f64::NAN, f64::NAN));
    let mut row = EpsRow {
        eps,
        a,
        b,
        delta,
        rho_bar,
        n_nodes: 0,
        outer_spacing: spec.solver.outer_spacing,
        steps: 0,
        outcome: RunOutcome::Ok,
        quantities: BTreeMap::new(),
    };
    let result = run_problem::<f64>(spec, eps, &spec.problem.profile).and_then(|traj| {
        row.n_nodes = traj.grid.len();
        row.steps = traj.steps;
        evaluate_run(&traj, spec, family)
    });
    match result {
        Ok(q) => row.quantities = q,
        Err(e) => row.outcome = RunOutcome::Failed { message: e.to_string() },
    }
    row
}

/// Runs every level (in parallel, on `jobs` threads if given), evaluates the
/// harness, fits trends and checks the sweep-level criteria.
pub fn sweep_report(spec: &SweepSpec, family: &[TestFunction<f64>], jobs: Option<usize>) -> Result<EstimateReport> {
    spec.validate()?;
    for &eps in &spec.schedule.eps {
        spec.params::<f64>(eps)?;
    }
    let work = || -> (Vec<EpsRow>, BTreeMap<String, f64>) {
        let rows: Vec<EpsRow> = spec
            .schedule
            .eps
            .par_iter()
            .map(|&eps| evaluate_level(spec, eps, family))
            .collect();
        let control = if spec.harness.control {
            let finest = *spec.schedule.eps.last().expect("non-empty eps list");
            run_problem::<f64>(spec, finest, &Profile::Constant)
                .and_then(|t| evaluate_run(&t, spec, family))
                .unwrap_or_default()
        } else {
            BTreeMap::new()
        };
        (rows, control)
    };
    let (rows, control) = match jobs {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    let mut report = EstimateReport {
        spec: spec.clone(),
        rows,
        control,
        fits: vec![],
        family: family.iter().map(|f| f.name().to_string()).collect(),
        criteria: vec![],
    };
    for q in report.tracked() {
        let s = report.series(&q);
        let (x, y): (Vec<f64>, Vec<f64>) = s.iter().copied().unzip();
        if let Some((slope, intercept)) = loglog_slope(&x, &y) {
            report.fits.push(Fit {
                quantity: q,
                slope,
                intercept,
                points: x.len(),
            });
        }
    }
    report.criteria = super::criteria::sweep_criteria(&report);
    Ok(report)
}

/// One level of `spec` as a single-row report, together with its trajectory.
///
/// The criteria are the per-run ones: the energy estimate (with the
/// constant-state control when enabled) and, for `n` in {2, 3}, the
/// multi-dimensional equivalence.
pub fn single_report(
    spec: &SweepSpec,
    eps: f64,
    family: &[TestFunction<f64>],
) -> Result<(Trajectory<f64>, EstimateReport)> {
    spec.validate()?;
    let params = spec.params::<f64>(eps)?;
    let traj = run_problem::<f64>(spec, eps, &spec.problem.profile)?;
    let quantities = evaluate_run(&traj, spec, family)?;
    let control = if spec.harness.control {
        run_problem::<f64>(spec, eps, &Profile::Constant).and_then(|t| evaluate_run(&t, spec, family))?
    } else {
        BTreeMap::new()
    };
    let mut one = spec.clone();
    one.schedule.eps = vec![eps];
    let mut report = EstimateReport {
        spec: one,
        rows: vec![EpsRow {
            eps,
            a: params.a,
            b: params.b,
            delta: params.delta,
            rho_bar: params.rho_bar,
            n_nodes: traj.grid.len(),
            outer_spacing: spec.solver.outer_spacing,
            steps: traj.steps,
            outcome: RunOutcome::Ok,
            quantities,
        }],
        control,
        fits: vec![],
        family: family.iter().map(|f| f.name().to_string()).collect(),
        criteria: vec![],
    };
    report.criteria = vec![super::criteria::criterion_4(&report)];
    if (2..=3).contains(&spec.problem.n_dim) {
        report.criteria.push(super::criteria::criterion_10(&traj, spec.harness.sphere_order));
    }
    Ok((traj, report))
}

/// One resolution of [`identity_refinement_study`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementLevel {
    pub factor: usize,
    pub outer_spacing: f64,
    pub n_nodes: usize,
    pub steps: usize,
    pub snapshots: usize,
    /// `(truncation name, residual)` for every configured threshold.
    pub residuals: Vec<(String, f64)>,
}

/// Identity residuals of the configured problem at `eps` under simultaneous
/// refinement of space, time step and snapshot density by `2^k`, `k < levels`.
pub fn identity_refinement_study(spec: &SweepSpec, eps: f64, levels: usize) -> Result<Vec<RefinementLevel>> {
    spec.validate()?;
    let om = omega();
    let per_level = |k: usize| -> Result<RefinementLevel> {
        let factor = 1usize << k;
        let mut s = spec.clone();
        s.solver = spec.solver.refined(factor);
        let traj = run_problem::<f64>(&s, eps, &s.problem.profile)?;
        let mut residuals = vec![];
        for &d in &spec.harness.deltas {
            for tr in [Truncation::Quadratic { delta: d }, Truncation::Log { delta: d }] {
                let name = match tr {
                    Truncation::Quadratic { .. } => key("quadratic", d),
                    Truncation::Log { .. } => key("log", d),
                };
                residuals.push((name, continuity_identity_residual(&traj, &tr, &om)?.residual));
            }
        }
        Ok(RefinementLevel {
            factor,
            outer_spacing: s.solver.outer_spacing,
            n_nodes: traj.grid.len(),
            steps: traj.steps,
            snapshots: s.solver.snapshots,
            residuals,
        })
    };
    (0..levels).into_par_iter().map(per_level).collect()
}
