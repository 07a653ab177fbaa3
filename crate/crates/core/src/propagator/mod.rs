//! Time stepping for `i psi_t = -psi_xx + g(x, t) |psi|^2 psi`.
//!
//! The flow is split into the nonlinear part, solved exactly as a pointwise
//! phase rotation, and the dispersive part, advanced with Crank-Nicolson on
//! the three-point Laplacian. Both sub-steps preserve `sum |psi_i|^2` up to
//! roundoff, so every composition of them does too.
//!
//! [`rk4`] holds an explicit method-of-lines integrator on the same spatial
//! discretisation, used as an independent reference.

pub mod rk4;
pub mod tridiag;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::diagnostics::{self, DiagnosticsRecord};
use crate::disorder::{nonlinearity, SigmaSchedule};
use crate::error::{Error, Result};
use crate::field::{power, Grid1D, WaveField};
use tridiag::{CyclicTridiagonal, Tridiagonal};

pub use rk4::{rk4_evolve, rk4_reference_step};

/// Largest relative growth of the power tolerated in one step.
pub const MAX_STEP_POWER_GROWTH: f64 = 1e-6;

/// Distance from a Dirichlet wall at which a drifting peak is reported.
pub const BOUNDARY_WARNING_DISTANCE: f64 = 2.0;

const STEP_RATIO_TOL: f64 = 1e-6;
const REFRESH_ALIGN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    /// `psi = 0` on both end nodes.
    Dirichlet,
    /// Nodes `0..n` form a ring; node `n - 1` neighbours node 0.
    Periodic,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Dirichlet => "dirichlet",
            Boundary::Periodic => "periodic",
        })
    }
}

impl FromStr for Boundary {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dirichlet" => Ok(Boundary::Dirichlet),
            "periodic" => Ok(Boundary::Periodic),
            other => Err(format!("unknown boundary `{other}` (expected dirichlet or periodic)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Splitting {
    /// half phase, full linear, half phase
    Strang,
    /// full phase, full linear
    Lie,
}

impl fmt::Display for Splitting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Splitting::Strang => "strang",
            Splitting::Lie => "lie",
        })
    }
}

impl FromStr for Splitting {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "strang" => Ok(Splitting::Strang),
            "lie" => Ok(Splitting::Lie),
            other => Err(format!("unknown splitting `{other}` (expected strang or lie)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    pub dt: f64,
    pub t_final: f64,
    /// Background nonlinearity `G`.
    pub g_background: f64,
    pub boundary: Boundary,
    pub splitting: Splitting,
    /// Time between diagnostics samples; a multiple of `dt`.
    pub sample_interval: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            dt: 1e-4,
            t_final: 200.0,
            g_background: -2.0,
            boundary: Boundary::Dirichlet,
            splitting: Splitting::Strang,
            sample_interval: 1.0,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::config("solver.dt", "must be positive"));
        }
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return Err(Error::config("solver.t_final", "must be positive"));
        }
        if !self.g_background.is_finite() {
            return Err(Error::config("solver.g", "must be finite"));
        }
        whole_steps(self.t_final, self.dt)
            .filter(|&n| n >= 1)
            .ok_or_else(|| Error::config("solver.t_final", "must be a whole number of steps dt"))?;
        if !(self.sample_interval.is_finite() && self.sample_interval > 0.0) {
            return Err(Error::config("solver.sample_interval", "must be positive"));
        }
        whole_steps(self.sample_interval, self.dt)
            .filter(|&n| n >= 1)
            .ok_or_else(|| {
                Error::config(
                    "solver.sample_interval",
                    "must be a whole number of steps dt",
                )
            })?;
        Ok(())
    }

    /// Checks the step against the refresh interval of a time-dependent
    /// schedule: `dt < tau` with `tau / dt` integral, so a refresh never
    /// falls inside a step.
    pub fn validate_schedule(&self, schedule: &SigmaSchedule) -> Result<()> {
        self.validate()?;
        if schedule.t_final() < self.t_final * (1.0 - 1e-12) {
            return Err(Error::contract(format!(
                "schedule covers t <= {} but the run ends at {}",
                schedule.t_final(),
                self.t_final
            )));
        }
        if schedule.spec().kind.is_time_dependent() {
            let tau = schedule.spec().refresh_interval;
            let ratio = tau / self.dt;
            if self.dt >= tau || (ratio - ratio.round()).abs() > REFRESH_ALIGN_TOL {
                return Err(Error::config(
                    "perturbation.tau",
                    format!("refresh interval {tau} is not a whole number of steps dt = {}", self.dt),
                ));
            }
        }
        Ok(())
    }

    pub fn total_steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    pub fn sample_stride(&self) -> usize {
        ((self.sample_interval / self.dt).round() as usize).max(1)
    }
}

fn whole_steps(span: f64, dt: f64) -> Option<usize> {
    let ratio = span / dt;
    ((ratio - ratio.round()).abs() <= STEP_RATIO_TOL * ratio.max(1.0)).then(|| ratio.round() as usize)
}

/// Factored Crank-Nicolson system `(I + i dt/2 A)` plus scratch space, built
/// once per `(grid, dt, boundary)` and reused for every step.
#[derive(Debug, Clone)]
pub struct StepWorkspace {
    boundary: Boundary,
    /// `dt / (2 dx^2)`
    r: f64,
    solver: LinearSolver,
    rhs: Vec<Complex64>,
}

#[derive(Debug, Clone)]
enum LinearSolver {
    Dirichlet(Tridiagonal),
    Periodic(CyclicTridiagonal),
}

impl StepWorkspace {
    pub fn new(grid: &Grid1D, dt: f64, boundary: Boundary) -> Result<Self> {
        let n = grid.len();
        if n < 3 {
            return Err(Error::contract("the propagator needs at least 3 grid nodes"));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::config("solver.dt", "must be positive"));
        }
        let r = dt / (2.0 * grid.dx() * grid.dx());
        let off = Complex64::new(0.0, -r);
        let diag = Complex64::new(1.0, 2.0 * r);
        let (solver, m) = match boundary {
            Boundary::Dirichlet => {
                let m = n - 2;
                let solver = Tridiagonal::factor(&vec![off; m], &vec![diag; m], &vec![off; m])?;
                (LinearSolver::Dirichlet(solver), m)
            }
            Boundary::Periodic => {
                let solver = CyclicTridiagonal::factor(
                    &vec![off; n],
                    &vec![diag; n],
                    &vec![off; n],
                    off,
                    off,
                )?;
                (LinearSolver::Periodic(solver), n)
            }
        };
        Ok(Self {
            boundary,
            r,
            solver,
            rhs: vec![Complex64::new(0.0, 0.0); m],
        })
    }

    /// One Crank-Nicolson step of `i psi_t = -psi_xx` in place.
    pub fn apply(&mut self, psi: &mut [Complex64]) {
        let n = psi.len();
        let ir = Complex64::new(0.0, self.r);
        let centre = Complex64::new(1.0, -2.0 * self.r);
        match &self.solver {
            LinearSolver::Dirichlet(solver) => {
                psi[0] = Complex64::new(0.0, 0.0);
                psi[n - 1] = Complex64::new(0.0, 0.0);
                for (j, w) in psi.windows(3).enumerate() {
                    self.rhs[j] = centre * w[1] + ir * (w[0] + w[2]);
                }
                solver.solve_in_place(&mut self.rhs);
                psi[1..n - 1].copy_from_slice(&self.rhs);
            }
            LinearSolver::Periodic(solver) => {
                for i in 0..n {
                    let left = psi[(i + n - 1) % n];
                    let right = psi[(i + 1) % n];
                    self.rhs[i] = centre * psi[i] + ir * (left + right);
                }
                solver.solve_in_place(&mut self.rhs);
                psi.copy_from_slice(&self.rhs);
            }
        }
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }
}

/// Crank-Nicolson step of the free equation `i psi_t = -psi_xx`.
pub fn cn_linear_step(field: &WaveField, dt: f64, boundary: Boundary) -> Result<WaveField> {
    let mut ws = StepWorkspace::new(field.grid(), dt, boundary)?;
    let mut out = field.clone();
    ws.apply(out.values_mut());
    Ok(out)
}

/// `psi_i <- psi_i exp(-i g_i |psi_i|^2 h)`, the exact flow of
/// `i psi_t = g |psi|^2 psi` over a time `h`.
#[inline]
fn rotate_phases(psi: &mut [Complex64], g: &[f64], h: f64) {
    for (p, &gi) in psi.iter_mut().zip(g) {
        let (s, c) = (-gi * p.norm_sqr() * h).sin_cos();
        *p *= Complex64::new(c, s);
    }
}

pub fn phase_step(field: &WaveField, g: &[f64], dt: f64) -> Result<WaveField> {
    if g.len() != field.grid().len() {
        return Err(Error::contract(format!(
            "nonlinearity profile has {} entries for {} nodes",
            g.len(),
            field.grid().len()
        )));
    }
    let mut out = field.clone();
    rotate_phases(out.values_mut(), g, dt);
    Ok(out)
}

/// `G (1 + sigma_i)` for the segment active at `t`.
pub fn nonlinearity_profile(schedule: &SigmaSchedule, g_background: f64, t: f64) -> Result<Vec<f64>> {
    Ok(schedule
        .profile_at(t)?
        .iter()
        .map(|&s| nonlinearity(g_background, s))
        .collect())
}

/// One full step from `t` with the configured splitting; `g` is frozen at its
/// value for `t`.
pub fn split_step(
    field: &WaveField,
    schedule: &SigmaSchedule,
    t: f64,
    params: &SolverParams,
) -> Result<WaveField> {
    let g = nonlinearity_profile(schedule, params.g_background, t)?;
    let mut ws = StepWorkspace::new(field.grid(), params.dt, params.boundary)?;
    let mut out = field.clone();
    let p0 = power(&out);
    match params.splitting {
        Splitting::Strang => {
            rotate_phases(out.values_mut(), &g, 0.5 * params.dt);
            ws.apply(out.values_mut());
            rotate_phases(out.values_mut(), &g, 0.5 * params.dt);
        }
        Splitting::Lie => {
            rotate_phases(out.values_mut(), &g, params.dt);
            ws.apply(out.values_mut());
        }
    }
    check_step(p0, power(&out), t, field)?;
    Ok(out)
}

/// Symmetric step: half phase, Crank-Nicolson, half phase.
pub fn strang_step(
    field: &WaveField,
    schedule: &SigmaSchedule,
    t: f64,
    params: &SolverParams,
) -> Result<WaveField> {
    split_step(
        field,
        schedule,
        t,
        &SolverParams {
            splitting: Splitting::Strang,
            ..*params
        },
    )
}

fn check_step(p_before: f64, p_after: f64, t: f64, last_finite: &WaveField) -> Result<()> {
    let reason = if !p_after.is_finite() {
        Some("non-finite amplitude".to_string())
    } else if p_before > 0.0 && (p_after - p_before) / p_before > MAX_STEP_POWER_GROWTH {
        Some(format!(
            "power grew by {:.3e} (relative) in one step",
            (p_after - p_before) / p_before
        ))
    } else {
        None
    };
    match reason {
        Some(reason) => Err(Error::Diverged {
            t,
            reason,
            last_finite: Box::new(last_finite.clone()),
        }),
        None => Ok(()),
    }
}

/// The state handed to an evolution observer.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    pub step: usize,
    pub t: f64,
    pub field: &'a WaveField,
    /// Whether this step is on the diagnostics cadence (as opposed to an
    /// extra stop requested by the caller).
    pub sampled: bool,
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub final_field: WaveField,
    pub records: Vec<DiagnosticsRecord>,
    pub steps: usize,
    /// Set when the density peak came within [`BOUNDARY_WARNING_DISTANCE`] of a
    /// Dirichlet wall at some sample.
    pub near_boundary: bool,
}

/// Steps from `t = 0` to `t_final`, recording diagnostics every
/// `sample_interval` (including both ends) and handing each sample to
/// `observer`.
pub fn evolve(
    initial: &WaveField,
    schedule: &SigmaSchedule,
    params: &SolverParams,
    observer: impl FnMut(&Observation<'_>),
) -> Result<Evolution> {
    evolve_with_stops(initial, schedule, params, &[], observer)
}

/// Like [`evolve`], additionally stopping at the listed step indices so the
/// observer can capture the field there.
pub fn evolve_with_stops(
    initial: &WaveField,
    schedule: &SigmaSchedule,
    params: &SolverParams,
    extra_stops: &[usize],
    mut observer: impl FnMut(&Observation<'_>),
) -> Result<Evolution> {
    params.validate_schedule(schedule)?;
    if schedule.grid() != initial.grid() {
        return Err(Error::contract("schedule and initial field use different grids"));
    }
    if !initial.is_finite() {
        return Err(Error::contract("initial field has non-finite amplitudes"));
    }
    let grid = *initial.grid();
    let dt = params.dt;
    let n_steps = params.total_steps();
    let stride = params.sample_stride();
    let mut stops = extra_stops.to_vec();
    stops.sort_unstable();
    stops.dedup();

    let segment_steps = schedule
        .spec()
        .kind
        .is_time_dependent()
        .then(|| (schedule.spec().refresh_interval / dt).round() as usize);
    let last_segment = schedule.segments().len() - 1;
    let segment_of = |k: usize| segment_steps.map_or(0, |s| (k / s).min(last_segment));
    let is_sample = |k: usize| k.is_multiple_of(stride) || k == n_steps;
    let is_stop = |k: usize| is_sample(k) || stops.binary_search(&k).is_ok();

    let mut ws = StepWorkspace::new(&grid, dt, params.boundary)?;
    let mut field = initial.clone();
    let mut backup = initial.clone();
    let mut records = Vec::with_capacity(n_steps / stride + 2);
    let mut near_boundary = false;

    let mut observe = |k: usize, field: &WaveField, records: &mut Vec<DiagnosticsRecord>| {
        let t = k as f64 * dt;
        let sampled = is_sample(k);
        if sampled {
            let rec = diagnostics::record(t, field);
            if params.boundary == Boundary::Dirichlet
                && !near_boundary
                && rec.peak_height > 0.0
                && (rec.peak_pos - grid.x_min()).min(grid.x_max() - rec.peak_pos)
                    < BOUNDARY_WARNING_DISTANCE
            {
                log::warn!(
                    "density peak at x = {:.3} is within {BOUNDARY_WARNING_DISTANCE} of the Dirichlet boundary (t = {t:.4})",
                    rec.peak_pos
                );
                near_boundary = true;
            }
            records.push(rec);
        }
        observer(&Observation {
            step: k,
            t,
            field,
            sampled,
        });
    };
    observe(0, &field, &mut records);

    let mut g = Vec::new();
    let mut current_segment = usize::MAX;
    // Strang steps inside one segment share their trailing and leading half
    // phase rotations; `owed_half` marks a trailing half not yet applied.
    let mut owed_half = false;
    let mut p_before = power(&field);

    for k in 0..n_steps {
        let segment = segment_of(k);
        if segment != current_segment {
            debug_assert!(!owed_half);
            g = schedule.segments()[segment]
                .sigma
                .iter()
                .map(|&s| nonlinearity(params.g_background, s))
                .collect();
            current_segment = segment;
        }
        backup.values_mut().copy_from_slice(field.values());
        let backup_owes_half = owed_half;

        let psi = field.values_mut();
        match params.splitting {
            Splitting::Strang => {
                let lead = if owed_half { dt } else { 0.5 * dt };
                rotate_phases(psi, &g, lead);
                ws.apply(psi);
                let next = k + 1;
                if next == n_steps || is_stop(next) || segment_of(next) != segment {
                    rotate_phases(psi, &g, 0.5 * dt);
                    owed_half = false;
                } else {
                    owed_half = true;
                }
            }
            Splitting::Lie => {
                rotate_phases(psi, &g, dt);
                ws.apply(psi);
            }
        }

        let p_after = power(&field);
        if backup_owes_half {
            rotate_phases(backup.values_mut(), &g, 0.5 * dt);
        }
        check_step(p_before, p_after, k as f64 * dt, &backup)?;
        p_before = p_after;

        if is_stop(k + 1) {
            observe(k + 1, &field, &mut records);
        }
    }

    Ok(Evolution {
        final_field: field,
        records,
        steps: n_steps,
        near_boundary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::{PerturbationKind, PerturbationSpec};
    use crate::field::{sech, soliton_initial};

    fn sine_mode(n: usize, k: usize) -> (Grid1D, WaveField) {
        let grid = Grid1D::new(0.0, 1.0, 1.0 / (n - 1) as f64).unwrap();
        let theta = k as f64 * std::f64::consts::PI / (n - 1) as f64;
        let field = WaveField::new(
            grid,
            (0..n)
                .map(|i| Complex64::new((theta * i as f64).sin(), 0.0))
                .collect(),
        )
        .unwrap();
        (grid, field)
    }

    fn quiet_schedule(grid: &Grid1D, t_final: f64) -> SigmaSchedule {
        SigmaSchedule::build(&PerturbationSpec::default(), grid, t_final).unwrap()
    }

    #[test]
    fn zero_field_stays_zero() {
        let grid = Grid1D::new(-5.0, 5.0, 0.1).unwrap();
        let zero = WaveField::zeros(grid);
        for b in [Boundary::Dirichlet, Boundary::Periodic] {
            assert_eq!(cn_linear_step(&zero, 0.01, b).unwrap(), zero);
        }
        let params = SolverParams {
            dt: 0.01,
            t_final: 0.01,
            sample_interval: 0.01,
            ..SolverParams::default()
        };
        let s = quiet_schedule(&grid, 0.01);
        assert_eq!(strang_step(&zero, &s, 0.0, &params).unwrap(), zero);
    }

    #[test]
    fn cn_sine_mode_phase_factor() {
        let n = 64;
        let dt = 0.37e-3;
        for k in [1usize, 5, 17, 40] {
            let (grid, field) = sine_mode(n, k);
            let dx = grid.dx();
            let lambda = (2.0 - 2.0 * (k as f64 * std::f64::consts::PI / (n - 1) as f64).cos()) / (dx * dx);
            let factor = Complex64::new(1.0, -0.5 * lambda * dt) / Complex64::new(1.0, 0.5 * lambda * dt);
            let out = cn_linear_step(&field, dt, Boundary::Dirichlet).unwrap();
            for (o, i) in out.values().iter().zip(field.values()) {
                assert!((o - i * factor).norm() < 1e-12, "k={k}");
            }
        }
    }

    #[test]
    fn cn_preserves_power() {
        let grid = Grid1D::new(-10.0, 10.0, 0.05).unwrap();
        let field = WaveField::from_fn(grid, |x| {
            Complex64::new((-x * x).exp() * (3.0 * x).cos(), (0.5 * x).sin() * (-0.2 * x * x).exp())
        });
        for b in [Boundary::Dirichlet, Boundary::Periodic] {
            let out = cn_linear_step(&field, 0.01, b).unwrap();
            let (p0, p1) = (power(&field), power(&out));
            assert!((p1 - p0).abs() / p0 < 1e-12, "{b}");
        }
    }

    #[test]
    fn periodic_plane_wave_phase_factor() {
        let n = 50;
        let grid = Grid1D::new(0.0, (n - 1) as f64 * 0.2, 0.2).unwrap();
        let k = 2.0 * std::f64::consts::PI * 3.0 / (n as f64 * 0.2);
        let field = WaveField::from_fn(grid, |x| Complex64::from_polar(1.0, k * x));
        let dt = 0.05;
        let dx = grid.dx();
        let lambda = (2.0 - 2.0 * (k * dx).cos()) / (dx * dx);
        let factor = Complex64::new(1.0, -0.5 * lambda * dt) / Complex64::new(1.0, 0.5 * lambda * dt);
        let out = cn_linear_step(&field, dt, Boundary::Periodic).unwrap();
        for (o, i) in out.values().iter().zip(field.values()) {
            assert!((o - i * factor).norm() < 1e-12);
        }
    }

    #[test]
    fn phase_step_examples() {
        let grid = Grid1D::new(0.0, 2.0, 1.0).unwrap();
        let one = WaveField::from_fn(grid, |_| Complex64::new(1.0, 0.0));
        assert_eq!(phase_step(&one, &[0.0; 3], 0.3).unwrap(), one);
        let out = phase_step(&one, &[-2.0; 3], 0.5).unwrap();
        for v in out.values() {
            assert!((v - Complex64::from_polar(1.0, 1.0)).norm() < 1e-15);
        }
        assert!(phase_step(&one, &[0.0; 2], 0.1).is_err());
    }

    #[test]
    fn stationary_soliton_single_step() {
        let grid = Grid1D::new(-20.0, 20.0, 0.01).unwrap();
        let psi = soliton_initial(&grid, 0.0);
        let params = SolverParams::default();
        let s = quiet_schedule(&grid, params.t_final);
        let out = strang_step(&psi, &s, 0.0, &params).unwrap();
        let dev = psi
            .densities()
            .zip(out.densities())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(dev < 1e-8, "{dev}");
    }

    #[test]
    fn observer_fencepost() {
        let grid = Grid1D::new(-5.0, 5.0, 0.1).unwrap();
        let dt = 1e-4;
        let params = SolverParams {
            dt,
            t_final: 10.0 * dt,
            sample_interval: dt,
            ..SolverParams::default()
        };
        let s = quiet_schedule(&grid, params.t_final);
        let mut calls = 0;
        let ev = evolve(&soliton_initial(&grid, 0.0), &s, &params, |_| calls += 1).unwrap();
        assert_eq!(calls, 11);
        assert_eq!(ev.records.len(), 11);
        assert_eq!(ev.steps, 10);
        assert_eq!(ev.records[0].t, 0.0);
    }

    #[test]
    fn extra_stops_are_observed() {
        let grid = Grid1D::new(-5.0, 5.0, 0.1).unwrap();
        let params = SolverParams {
            dt: 0.01,
            t_final: 1.0,
            sample_interval: 0.5,
            ..SolverParams::default()
        };
        let s = quiet_schedule(&grid, 1.0);
        let mut seen = Vec::new();
        let ev = evolve_with_stops(&soliton_initial(&grid, 0.0), &s, &params, &[7, 33, 50], |o| {
            seen.push((o.step, o.sampled))
        })
        .unwrap();
        assert_eq!(
            seen,
            vec![(0, true), (7, false), (33, false), (50, true), (100, true)]
        );
        assert_eq!(ev.records.len(), 3);
    }

    #[test]
    fn fused_evolution_matches_repeated_steps() {
        let grid = Grid1D::new(-10.0, 10.0, 0.05).unwrap();
        let params = SolverParams {
            dt: 0.01,
            t_final: 0.5,
            sample_interval: 0.25,
            ..SolverParams::default()
        };
        let mut spec = PerturbationSpec::new(PerturbationKind::Random, 0.5, 4);
        spec.refresh_interval = 0.1;
        let s = SigmaSchedule::build(&spec, &grid, params.t_final).unwrap();
        let init = crate::field::boosted_soliton(&grid, -1.0, 0.7);
        let ev = evolve(&init, &s, &params, |_| {}).unwrap();
        let mut psi = init;
        for k in 0..params.total_steps() {
            psi = strang_step(&psi, &s, k as f64 * params.dt, &params).unwrap();
        }
        for (a, b) in psi.values().iter().zip(ev.final_field.values()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn power_is_conserved_under_disorder() {
        let grid = Grid1D::new(-20.0, 20.0, 0.05).unwrap();
        let params = SolverParams {
            dt: 0.005,
            t_final: 10.0,
            sample_interval: 1.0,
            ..SolverParams::default()
        };
        for kind in PerturbationKind::ALL {
            let mut spec = PerturbationSpec::new(kind, 0.5, 3);
            spec.refresh_interval = 0.5;
            let s = SigmaSchedule::build(&spec, &grid, params.t_final).unwrap();
            let init = soliton_initial(&grid, 0.0);
            let ev = evolve(&init, &s, &params, |_| {}).unwrap();
            let (p0, p1) = (power(&init), power(&ev.final_field));
            assert!((p1 - p0).abs() / p0 < 1e-9, "{kind}: {}", (p1 - p0) / p0);
        }
    }

    #[test]
    fn misaligned_refresh_is_rejected() {
        let grid = Grid1D::new(-5.0, 5.0, 0.1).unwrap();
        let params = SolverParams {
            dt: 0.003,
            t_final: 0.3,
            sample_interval: 0.03,
            ..SolverParams::default()
        };
        let mut spec = PerturbationSpec::new(PerturbationKind::Chaotic, 0.1, 1);
        spec.refresh_interval = 0.1;
        let s = SigmaSchedule::build(&spec, &grid, 0.3).unwrap();
        let err = evolve(&soliton_initial(&grid, 0.0), &s, &params, |_| {}).unwrap_err();
        assert!(matches!(err, Error::Config { key, .. } if key == "perturbation.tau"));
    }

    #[test]
    fn params_validation() {
        let ok = SolverParams::default();
        assert!(ok.validate().is_ok());
        assert_eq!(ok.total_steps(), 2_000_000);
        for bad in [
            SolverParams { dt: -1.0, ..ok },
            SolverParams { dt: 0.0, ..ok },
            SolverParams { t_final: 0.0, ..ok },
            SolverParams { t_final: 1.00005, ..ok },
            SolverParams { sample_interval: 0.00015, ..ok },
            SolverParams { g_background: f64::NAN, ..ok },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn blow_up_is_reported() {
        let grid = Grid1D::new(-5.0, 5.0, 0.1).unwrap();
        let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
        values[30] = Complex64::new(1e200, 0.0);
        values[31] = Complex64::new(1e200, 0.0);
        let field = WaveField::new(grid, values).unwrap();
        let params = SolverParams {
            dt: 0.01,
            t_final: 0.1,
            sample_interval: 0.1,
            ..SolverParams::default()
        };
        let s = quiet_schedule(&grid, 0.1);
        match evolve(&field, &s, &params, |_| {}) {
            Err(Error::Diverged { t, last_finite, .. }) => {
                assert_eq!(t, 0.0);
                assert!(last_finite.is_finite());
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn lie_splitting_runs_and_conserves() {
        let grid = Grid1D::new(-20.0, 20.0, 0.05).unwrap();
        let params = SolverParams {
            dt: 0.01,
            t_final: 1.0,
            sample_interval: 0.5,
            splitting: Splitting::Lie,
            ..SolverParams::default()
        };
        let s = quiet_schedule(&grid, 1.0);
        let init = soliton_initial(&grid, 0.0);
        let ev = evolve(&init, &s, &params, |_| {}).unwrap();
        assert!((power(&ev.final_field) / power(&init) - 1.0).abs() < 1e-12);
        let mid = grid.nearest_index(0.0).unwrap();
        assert!((ev.final_field.values()[mid].norm() - sech(0.0)).abs() < 1e-2);
    }

    #[test]
    fn enum_parsing() {
        assert_eq!("Periodic".parse::<Boundary>().unwrap(), Boundary::Periodic);
        assert_eq!("lie".parse::<Splitting>().unwrap(), Splitting::Lie);
        assert!("neumann".parse::<Boundary>().is_err());
    }
}
