//! Single runs and sweeps, plus their on-disk outputs.
//!
//! A run writes, into its output directory:
//!
//! * `timeseries.csv`: one diagnostics record per sample,
//! * `snapshots.csv`: the full field at each snapshot time,
//! * `summary.csv`: a single summary row,
//! * `sigma.csv`: the realised perturbation segments (only with
//!   `output.emit_sigma = true`).
//!
//! A sweep runs the cartesian product of kinds, amplitudes and seeds, each in
//! its own sub-directory, and joins the rows into one `summary.csv`.

pub mod config;
pub mod io;

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::diagnostics::{self, DiagnosticsRecord, RunSummary};
use crate::disorder::{PerturbationKind, SigmaSchedule};
use crate::error::{Error, Result};
use crate::field::{soliton_initial, WaveField};
use crate::propagator::evolve_with_stops;

pub use config::{parse_config, parse_config_with_base, Preset, RunConfig};
pub use io::SummaryRow;

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Completed,
    Diverged { t: f64, reason: String },
}

impl RunStatus {
    pub fn label(&self) -> String {
        match self {
            RunStatus::Completed => "ok".to_string(),
            RunStatus::Diverged { t, reason } => format!("diverged at t={t}: {reason}"),
        }
    }
}

/// Everything a run produces, held in memory.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub config: RunConfig,
    pub schedule: SigmaSchedule,
    pub initial: WaveField,
    /// Final field, or the last finite state for a diverged run.
    pub final_field: WaveField,
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<(f64, WaveField)>,
    pub summary: RunSummary,
    pub status: RunStatus,
    pub near_boundary: bool,
}

impl Simulation {
    pub fn summary_row(&self) -> SummaryRow {
        let spec = self.config.perturbation_spec();
        let e = &self.summary.error_report;
        SummaryRow {
            kind: spec.kind.to_string(),
            epsilon: spec.epsilon,
            seed: spec.seed,
            power_error: self.summary.power_error,
            signed_mean: e.signed_mean,
            mean_abs: e.mean_abs,
            rms: e.rms,
            l_inf: e.l_inf,
            min_peak_height: self.summary.min_peak_height,
            final_centroid: self.summary.final_centroid,
            status: self.status.label(),
        }
    }
}

/// Builds the schedule, evolves the soliton and summarises, without touching
/// the filesystem. Divergence is reported through [`Simulation::status`];
/// configuration problems are errors.
pub fn simulate(config: &RunConfig) -> Result<Simulation> {
    config.validate()?;
    let grid = config.make_grid()?;
    let params = config.solver_params();
    let spec = config.perturbation_spec();
    let schedule = SigmaSchedule::build(&spec, &grid, params.t_final)?;
    let initial = soliton_initial(&grid, config.initial.x0);

    let mut snapshot_plan: Vec<(usize, f64)> = config
        .snapshot_times()
        .into_iter()
        .map(|t| ((t / params.dt).round() as usize, t))
        .collect();
    snapshot_plan.sort_by_key(|&(step, _)| step);
    let stops: Vec<usize> = snapshot_plan.iter().map(|&(s, _)| s).collect();

    let mut records = Vec::new();
    let mut snapshots = Vec::new();
    let outcome = evolve_with_stops(&initial, &schedule, &params, &stops, |obs| {
        if obs.sampled {
            records.push(diagnostics::record(obs.t, obs.field));
        }
        for &(_, t) in snapshot_plan.iter().filter(|(s, _)| *s == obs.step) {
            snapshots.push((t, obs.field.clone()));
        }
    });

    let (final_field, status, near_boundary) = match outcome {
        Ok(ev) => (ev.final_field, RunStatus::Completed, ev.near_boundary),
        Err(Error::Diverged {
            t,
            reason,
            last_finite,
        }) => {
            log::error!("run diverged at t = {t}: {reason}");
            (*last_finite, RunStatus::Diverged { t, reason }, false)
        }
        Err(e) => return Err(e),
    };
    let summary = diagnostics::summarize(&initial, &final_field, &records)?;

    Ok(Simulation {
        config: config.clone(),
        schedule,
        initial,
        final_field,
        records,
        snapshots,
        summary,
        status,
        near_boundary,
    })
}

/// Writes the run's CSV files into `dir` (created if missing).
pub fn write_outputs(sim: &Simulation, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    io::write_timeseries(&dir.join("timeseries.csv"), &sim.records)?;
    if !sim.snapshots.is_empty() {
        io::write_snapshots(&dir.join("snapshots.csv"), &sim.snapshots)?;
    }
    io::write_summary(&dir.join("summary.csv"), &[sim.summary_row()])?;
    if sim.config.output.emit_sigma {
        io::write_sigma(&dir.join("sigma.csv"), &sim.schedule)?;
    }
    Ok(())
}

/// [`simulate`] followed by [`write_outputs`] into `config.output.directory`.
/// Outputs of a diverged run are still written, flagged in `summary.csv`.
pub fn run(config: &RunConfig) -> Result<Simulation> {
    let sim = simulate(config)?;
    write_outputs(&sim, &config.output.directory)?;
    Ok(sim)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// In `kinds x epsilons x seeds` order, seeds varying fastest.
    pub rows: Vec<SummaryRow>,
}

/// Directory name of one sweep member.
pub fn sweep_member_dir(root: &Path, kind: PerturbationKind, epsilon: f64, seed: u64) -> PathBuf {
    root.join(format!("{kind}_eps{epsilon}_seed{seed}"))
}

/// Runs every combination in parallel, each writing into its own
/// sub-directory of `base.output.directory`, and writes the joined
/// `summary.csv` there. A failing member becomes a row with its reason in
/// `status`; the sweep itself only fails on I/O errors for the joined file
/// or on empty inputs.
pub fn sweep(
    base: &RunConfig,
    kinds: &[PerturbationKind],
    epsilons: &[f64],
    seeds: &[u64],
) -> Result<SweepResult> {
    if kinds.is_empty() || epsilons.is_empty() || seeds.is_empty() {
        return Err(Error::config("sweep", "kinds, epsilons and seeds must be non-empty"));
    }
    let root = base.output.directory.clone();
    let members: Vec<(PerturbationKind, f64, u64)> = kinds
        .iter()
        .flat_map(|&k| {
            epsilons
                .iter()
                .flat_map(move |&e| seeds.iter().map(move |&s| (k, e, s)))
        })
        .collect();

    let rows = members
        .par_iter()
        .map(|&(kind, epsilon, seed)| {
            let mut config = base.clone();
            config.perturbation.kind = kind;
            config.perturbation.epsilon = epsilon;
            config.perturbation.alpha = None;
            config.perturbation.seed = seed;
            config.output.directory = sweep_member_dir(&root, kind, epsilon, seed);
            match run(&config) {
                Ok(sim) => sim.summary_row(),
                Err(e) => SummaryRow {
                    kind: kind.to_string(),
                    epsilon,
                    seed,
                    power_error: f64::NAN,
                    signed_mean: f64::NAN,
                    mean_abs: f64::NAN,
                    rms: f64::NAN,
                    l_inf: f64::NAN,
                    min_peak_height: f64::NAN,
                    final_centroid: f64::NAN,
                    status: format!("error: {e}"),
                },
            }
        })
        .collect::<Vec<_>>();

    std::fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
    io::write_summary(&root.join("summary.csv"), &rows)?;
    Ok(SweepResult { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(dir: &Path) -> RunConfig {
        let mut c = RunConfig::preset(Preset::Desk);
        c.grid = config::GridConfig {
            x_min: -10.0,
            x_max: 10.0,
            dx: 0.05,
        };
        c.solver.dt = 0.005;
        c.solver.t_final = 1.0;
        c.perturbation.tau = 0.25;
        c.output.directory = dir.to_path_buf();
        c
    }

    #[test]
    fn noise_free_run_summary() {
        let dir = tempfile::tempdir().unwrap();
        let sim = run(&small_config(dir.path())).unwrap();
        assert_eq!(sim.status, RunStatus::Completed);
        assert!(sim.summary.relative_power_error < 1e-9);
        assert!(sim.summary.error_report.mean_abs < 1e-3);
        assert_eq!(sim.records.len(), 201);
        assert_eq!(sim.snapshots.len(), 2);
        for f in ["timeseries.csv", "snapshots.csv", "summary.csv"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        assert!(!dir.path().join("sigma.csv").exists());
    }

    #[test]
    fn sigma_dump_when_requested() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = small_config(dir.path());
        c.perturbation.kind = PerturbationKind::Chaotic;
        c.perturbation.epsilon = 0.1;
        c.output.emit_sigma = true;
        run(&c).unwrap();
        let text = std::fs::read_to_string(dir.path().join("sigma.csv")).unwrap();
        assert_eq!(text.lines().next().unwrap(), "segment,t_start,x,sigma");
        // 4 segments of 401 nodes
        assert_eq!(text.lines().count(), 1 + 4 * 401);
    }

    #[test]
    fn sweep_row_count_and_zero_epsilon() {
        let dir = tempfile::tempdir().unwrap();
        let base = small_config(dir.path());
        let kinds = [
            PerturbationKind::Chaotic,
            PerturbationKind::Random,
            PerturbationKind::Quasiperiodic,
        ];
        let result = sweep(&base, &kinds, &[0.0, 0.5], &[3]).unwrap();
        assert_eq!(result.rows.len(), 6);
        assert!(result.rows.iter().all(SummaryRow::is_ok));

        let baseline = simulate(&base).unwrap().summary_row();
        for row in result.rows.iter().filter(|r| r.epsilon == 0.0) {
            assert_eq!(row.power_error, baseline.power_error, "{}", row.kind);
            assert_eq!(row.mean_abs, baseline.mean_abs);
            assert_eq!(row.min_peak_height, baseline.min_peak_height);
        }
        let joined = io::read_summary(&dir.path().join("summary.csv")).unwrap();
        assert_eq!(joined, result.rows);
        assert!(sweep_member_dir(dir.path(), PerturbationKind::Random, 0.5, 3)
            .join("timeseries.csv")
            .exists());
    }

    #[test]
    fn sweep_keeps_failed_members() {
        let dir = tempfile::tempdir().unwrap();
        let base = small_config(dir.path());
        // negative amplitude fails validation for that member only
        let result = sweep(&base, &[PerturbationKind::Random], &[-1.0, 0.1], &[1]).unwrap();
        assert_eq!(result.rows.len(), 2);
        assert!(result.rows[0].status.starts_with("error"));
        assert!(result.rows[1].is_ok());
        assert!(sweep(&base, &[], &[0.1], &[1]).is_err());
    }
}
