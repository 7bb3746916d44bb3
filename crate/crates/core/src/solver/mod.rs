//! IMEX finite-volume integration of the viscous radial system on `(a, b)`.
//!
//! Convection and pressure are explicit (local Lax–Friedrichs fluxes weighted by
//! `r^{n-1}`), both viscous operators implicit. The density lives on vertex
//! cells; the first two nodes share one cell so that `rho_r(a) = 0` holds
//! exactly on the two-point stencil. The momentum viscosity acts on
//! `w = r^{n-1} m` through `eps (w_rr - (n-1)/r w_r)` with `w(a) = w(b) = 0`.

mod init;
mod tridiag;

pub use init::{prepare_initial_data, prepare_profile, smooth_step, InitSpec, InitialData, Profile};
pub use tridiag::solve_tridiagonal;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{discrete_energy, discrete_mass, Dissipation, GasLaw, RadialField, RadialGrid};
use crate::scalar::{lit, to_f64, Scalar};
use crate::scheduler::ViscousParams;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvectiveScheme {
    /// First-order local Lax–Friedrichs.
    #[default]
    Llf,
    /// Local Lax–Friedrichs on minmod-limited linear reconstructions.
    LlfMuscl,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DtControl<T> {
    /// Courant number on `|u| + sqrt(p_delta'(rho))`.
    pub cfl: T,
    /// If set, also `dt <= viscous_factor h_min^2 / eps`.
    pub viscous_factor: Option<T>,
    pub max_dt: Option<T>,
    /// Overrides the adaptive choice (still clipped to output times).
    pub fixed_dt: Option<T>,
}

impl<T: Scalar> Default for DtControl<T> {
    fn default() -> Self {
        Self {
            cfl: lit(0.4),
            viscous_factor: None,
            max_dt: None,
            fixed_dt: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig<T> {
    pub scheme: ConvectiveScheme,
    pub dt_control: DtControl<T>,
    pub t_final: T,
    /// Output times in `(0, t_final]`; `0` and `t_final` are always recorded.
    pub snapshot_times: Vec<T>,
    /// Densities below this abort the run.
    pub density_floor: T,
}

impl<T: Scalar> SolverConfig<T> {
    /// `count` equispaced snapshots after the initial one.
    pub fn with_uniform_snapshots(t_final: T, count: usize) -> Self {
        let snapshot_times = (1..=count)
            .map(|k| t_final * crate::scalar::from_usize::<T>(k) / crate::scalar::from_usize::<T>(count.max(1)))
            .collect();
        Self {
            scheme: ConvectiveScheme::Llf,
            dt_control: DtControl::default(),
            t_final,
            snapshot_times,
            density_floor: lit(1e-12),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.dt_control.cfl;
        if !(c > T::zero() && c <= T::one()) {
            return Err(Error::Config(format!("CFL number {} outside (0, 1]", c)));
        }
        if !(self.t_final >= T::zero()) || !self.t_final.is_finite() {
            return Err(Error::Config(format!("final time {} must be finite and >= 0", self.t_final)));
        }
        if !(self.density_floor > T::zero()) {
            return Err(Error::Config("density floor must be positive".into()));
        }
        for dt in [self.dt_control.max_dt, self.dt_control.fixed_dt, self.dt_control.viscous_factor]
            .into_iter()
            .flatten()
        {
            if !(dt > T::zero()) {
                return Err(Error::Config("time-step bounds must be positive".into()));
            }
        }
        Ok(())
    }

    fn output_times(&self) -> Vec<T> {
        let mut times: Vec<T> = self
            .snapshot_times
            .iter()
            .copied()
            .filter(|&t| t > T::zero() && t <= self.t_final)
            .collect();
        if self.t_final > T::zero() {
            times.push(self.t_final);
        }
        times.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        times.dedup();
        times
    }
}

/// Per-step bookkeeping.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics<T> {
    pub dt: T,
    /// Convective minus diffusive `r^{n-1}`-weighted mass flux through the last
    /// interior face; the discrete mass changes by exactly `-dt` times this.
    pub boundary_flux: T,
    pub mass_before: T,
    pub mass_after: T,
}

/// Adaptive step size for the current state.
pub fn stable_dt<T: Scalar>(state: &RadialField<T>, config: &SolverConfig<T>, eps: T, law: &GasLaw<T>, grid: &RadialGrid<T>) -> T {
    if let Some(dt) = config.dt_control.fixed_dt {
        return dt;
    }
    let speed = |i: usize| (state.m[i] / state.rho[i]).abs() + law.sound_speed(state.rho[i]);
    let mut dt = T::infinity();
    for f in 0..grid.last() {
        let a = speed(f).max(speed(f + 1)).max(T::min_positive_value());
        dt = dt.min(grid.spacing(f) / a);
    }
    dt = dt * config.dt_control.cfl;
    if let Some(vf) = config.dt_control.viscous_factor {
        let h = grid.min_spacing();
        dt = dt.min(vf * h * h / eps);
    }
    if let Some(mx) = config.dt_control.max_dt {
        dt = dt.min(mx);
    }
    dt
}

fn minmod<T: Scalar>(a: T, b: T) -> T {
    if a * b <= T::zero() {
        T::zero()
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// Face states `(rho_L, m_L, rho_R, m_R)` for the face between node `f` and `f + 1`.
fn face_states<T: Scalar>(rho: &[T], m: &[T], grid: &RadialGrid<T>, scheme: ConvectiveScheme) -> Vec<[T; 4]> {
    let n = rho.len();
    match scheme {
        ConvectiveScheme::Llf => (0..n - 1).map(|f| [rho[f], m[f], rho[f + 1], m[f + 1]]).collect(),
        ConvectiveScheme::LlfMuscl => {
            let mut sr = vec![T::zero(); n];
            let mut sm = vec![T::zero(); n];
            for i in 1..n - 1 {
                let (hm, hp) = (grid.spacing(i - 1), grid.spacing(i));
                sr[i] = minmod((rho[i] - rho[i - 1]) / hm, (rho[i + 1] - rho[i]) / hp);
                sm[i] = minmod((m[i] - m[i - 1]) / hm, (m[i + 1] - m[i]) / hp);
            }
            let half = lit::<T>(0.5);
            (0..n - 1)
                .map(|f| {
                    let h = grid.spacing(f) * half;
                    let rl = rho[f] + sr[f] * h;
                    let rr = rho[f + 1] - sr[f + 1] * h;
                    if rl > T::zero() && rr > T::zero() {
                        [rl, m[f] + sm[f] * h, rr, m[f + 1] - sm[f + 1] * h]
                    } else {
                        [rho[f], m[f], rho[f + 1], m[f + 1]]
                    }
                })
                .collect()
        }
    }
}

/// One IMEX step of size `dt`.
pub fn step_with_dt<T: Scalar>(
    state: &RadialField<T>,
    dt: T,
    config: &SolverConfig<T>,
    params: &ViscousParams<T>,
    law: &GasLaw<T>,
    grid: &RadialGrid<T>,
) -> Result<(RadialField<T>, StepDiagnostics<T>)> {
    let n = grid.len();
    if state.len() != n {
        return Err(Error::Config("state and grid lengths differ".into()));
    }
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(Error::Config(format!("time step {} must be positive", dt)));
    }
    let last = n - 1;
    let eps = params.eps;
    let rho_bar = params.rho_bar;
    let half = lit::<T>(0.5);
    let two = lit::<T>(2.0);
    let x = grid.nodes();
    let wf = grid.face_weight();
    let wn = grid.node_weight();
    let vol = grid.vertex_volume();
    let (rho, m) = (&state.rho, &state.m);

    let faces = face_states(rho, m, grid, config.scheme);
    let speed = |r: T, mm: T| (mm / r).abs() + law.sound_speed(r);
    let alpha: Vec<T> = faces
        .iter()
        .enumerate()
        .map(|(f, s)| {
            speed(s[0], s[1])
                .max(speed(s[2], s[3]))
                .max(speed(rho[f], m[f]))
                .max(speed(rho[f + 1], m[f + 1]))
        })
        .collect();

    // continuity: convective face fluxes and implicit diffusion
    let conv: Vec<T> = faces
        .iter()
        .zip(&alpha)
        .zip(wf)
        .map(|((s, &a), &w)| w * ((s[1] + s[3]) * half - a * half * (s[2] - s[0])))
        .collect();
    let kdiff: Vec<T> = (0..last).map(|f| eps * wf[f] / grid.spacing(f)).collect();

    let rows = last - 1; // unknowns at nodes 1..=last-1
    let mut lower = vec![T::zero(); rows];
    let mut diag = vec![T::zero(); rows];
    let mut upper = vec![T::zero(); rows];
    let mut rhs = vec![T::zero(); rows];
    for j in 0..rows {
        let i = j + 1;
        let v = if i == 1 { vol[0] + vol[1] } else { vol[i] };
        let left_k = if i == 1 { T::zero() } else { kdiff[i - 1] };
        let left_f = if i == 1 { T::zero() } else { conv[i - 1] };
        diag[j] = v / dt + left_k + kdiff[i];
        lower[j] = -left_k;
        upper[j] = -kdiff[i];
        rhs[j] = v / dt * rho[i] - (conv[i] - left_f);
    }
    rhs[rows - 1] = rhs[rows - 1] + kdiff[last - 1] * rho_bar;
    solve_tridiagonal(&lower, &diag, &upper, &mut rhs)?;
    let mut rho_new = vec![T::zero(); n];
    rho_new[1..last].copy_from_slice(&rhs);
    rho_new[0] = rho_new[1];
    rho_new[last] = rho_bar;
    let t_new = state.t + dt;
    for (i, &r) in rho_new.iter().enumerate() {
        if !(r >= config.density_floor) {
            return Err(Error::DensityFloor {
                t: to_f64(t_new),
                r: to_f64(x[i]),
                rho: to_f64(r),
                floor: to_f64(config.density_floor),
            });
        }
    }
    let boundary_flux = conv[last - 1] - kdiff[last - 1] * (rho_new[last] - rho_new[last - 1]);

    // momentum: explicit flux differencing with the pressure source folded into each face
    let flux = |r: T, mm: T| mm * mm / r + law.pressure_unchecked(r);
    let face_flux: Vec<T> = faces.iter().map(|s| (flux(s[0], s[1]) + flux(s[2], s[3])) * half).collect();
    let mut w_star = vec![T::zero(); rows];
    for j in 0..rows {
        let i = j + 1;
        let p_i = law.pressure_unchecked(rho[i]);
        let right = wf[i] * (face_flux[i] - p_i - alpha[i] * half * (faces[i][3] - faces[i][1]));
        let left = wf[i - 1] * (face_flux[i - 1] - p_i - alpha[i - 1] * half * (faces[i - 1][3] - faces[i - 1][1]));
        let m_star = m[i] - dt * (right - left) / vol[i];
        w_star[j] = wn[i] * m_star;
    }
    let nm1: T = crate::scalar::from_usize(grid.n_dim() - 1);
    let de = dt * eps;
    for j in 0..rows {
        let i = j + 1;
        let (hm, hp) = (grid.spacing(i - 1), grid.spacing(i));
        let s = hm + hp;
        let geo = nm1 / (x[i] * s);
        let c_minus = two / (hm * s) + geo;
        let c_plus = two / (hp * s) - geo;
        lower[j] = -de * c_minus;
        upper[j] = -de * c_plus;
        diag[j] = T::one() + de * two / (hm * hp);
    }
    solve_tridiagonal(&lower, &diag, &upper, &mut w_star)?;
    let mut m_new = vec![T::zero(); n];
    for j in 0..rows {
        m_new[j + 1] = w_star[j] / wn[j + 1];
    }

    // dissipation at the time-averaged state
    let rho_h: Vec<T> = rho.iter().zip(&rho_new).map(|(&a, &b)| (a + b) * half).collect();
    let m_h: Vec<T> = m.iter().zip(&m_new).map(|(&a, &b)| (a + b) * half).collect();
    let u_h: Vec<T> = rho_h.iter().zip(&m_h).map(|(&r, &mm)| mm / r).collect();
    let (mut d_rho, mut d_u, mut d_geo) = (T::zero(), T::zero(), T::zero());
    for f in 0..last {
        let h = grid.spacing(f);
        let rf = (rho_h[f] + rho_h[f + 1]) * half;
        let gr = (rho_h[f + 1] - rho_h[f]) / h;
        let gu = (u_h[f + 1] - u_h[f]) / h;
        d_rho = d_rho + wf[f] * h * law.internal_energy_second(rf) * gr * gr;
        d_u = d_u + wf[f] * h * rf * gu * gu;
    }
    for i in 0..n {
        d_geo = d_geo + vol[i] * nm1 * rho_h[i] * u_h[i] * u_h[i] / (x[i] * x[i]);
    }
    let scale = eps * dt;
    let dissipation = Dissipation {
        density_gradient: state.dissipation.density_gradient + scale * d_rho,
        velocity_gradient: state.dissipation.velocity_gradient + scale * d_u,
        geometric: state.dissipation.geometric + scale * d_geo,
    };

    let diag_out = StepDiagnostics {
        dt,
        boundary_flux,
        mass_before: discrete_mass(rho, grid),
        mass_after: discrete_mass(&rho_new, grid),
    };
    Ok((
        RadialField {
            t: t_new,
            rho: rho_new,
            m: m_new,
            dissipation,
            floor: config.density_floor,
        },
        diag_out,
    ))
}

/// One step with the step size from [`stable_dt`], clipped to `t_final`.
pub fn step<T: Scalar>(
    state: &RadialField<T>,
    config: &SolverConfig<T>,
    params: &ViscousParams<T>,
    law: &GasLaw<T>,
    grid: &RadialGrid<T>,
) -> Result<(RadialField<T>, StepDiagnostics<T>)> {
    let mut dt = stable_dt(state, config, params.eps, law, grid);
    let remaining = config.t_final - state.t;
    if remaining > T::zero() {
        dt = dt.min(remaining);
    }
    step_with_dt(state, dt, config, params, law, grid)
}

/// Snapshots of one run.
#[derive(Clone, Debug, Serialize)]
pub struct Trajectory<T> {
    pub grid: RadialGrid<T>,
    pub params: ViscousParams<T>,
    pub law: GasLaw<T>,
    pub snapshots: Vec<RadialField<T>>,
    /// Discrete relative energy at each snapshot.
    pub energies: Vec<T>,
    pub initial_energy: T,
    pub steps: usize,
}

impl<T: Scalar> Trajectory<T> {
    pub fn times(&self) -> Vec<T> {
        self.snapshots.iter().map(|s| s.t).collect()
    }
    pub fn last(&self) -> &RadialField<T> {
        self.snapshots.last().expect("trajectory has the initial snapshot")
    }
    pub fn final_dissipation(&self) -> Dissipation<T> {
        self.last().dissipation
    }
}

/// A failed run with everything computed before the failure.
#[derive(Debug)]
pub struct RunFailure<T> {
    pub error: Error,
    pub partial: Box<Trajectory<T>>,
}

impl<T: Scalar> std::fmt::Display for RunFailure<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "run aborted after {} snapshots: {}", self.partial.snapshots.len(), self.error)
    }
}

impl<T: Scalar> std::error::Error for RunFailure<T> {}

impl<T: Scalar> From<RunFailure<T>> for Error {
    fn from(f: RunFailure<T>) -> Self {
        f.error
    }
}

/// Integrates from the prepared data to `t_final`, recording snapshots.
pub fn run<T: Scalar>(
    init: &InitialData<T>,
    config: &SolverConfig<T>,
    params: &ViscousParams<T>,
    law: &GasLaw<T>,
    grid: &RadialGrid<T>,
) -> std::result::Result<Trajectory<T>, RunFailure<T>> {
    let field = RadialField {
        t: T::zero(),
        rho: init.rho.clone(),
        m: init.m.clone(),
        dissipation: Dissipation::default(),
        floor: config.density_floor,
    };
    let e0 = discrete_energy(&field.rho, &field.m, grid, law, params.rho_bar);
    let mut traj = Trajectory {
        grid: grid.clone(),
        params: *params,
        law: *law,
        snapshots: vec![],
        energies: vec![],
        initial_energy: e0,
        steps: 0,
    };
    let fail = |error: Error, traj: Trajectory<T>| RunFailure {
        error,
        partial: Box::new(traj),
    };
    if let Err(e) = config.validate().and_then(|_| field.validate()) {
        return Err(fail(e, traj));
    }
    if field.len() != grid.len() {
        return Err(fail(Error::Config("initial data and grid lengths differ".into()), traj));
    }
    traj.energies.push(e0);
    traj.snapshots.push(field.clone());
    let mut state = field;
    for target in config.output_times() {
        while state.t < target {
            let mut dt = stable_dt(&state, config, params.eps, law, grid);
            let remaining = target - state.t;
            // avoid a sliver step just before the output time
            if dt >= remaining || remaining - dt < remaining * lit(1e-9) {
                dt = remaining;
            }
            match step_with_dt(&state, dt, config, params, law, grid) {
                Ok((next, _)) => {
                    state = next;
                    traj.steps += 1;
                }
                Err(e) => return Err(fail(e, traj)),
            }
            if dt == remaining {
                state.t = target;
            }
        }
        traj.energies.push(discrete_energy(&state.rho, &state.m, grid, law, params.rho_bar));
        traj.snapshots.push(state.clone());
    }
    Ok(traj)
}
