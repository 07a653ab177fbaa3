//! Run configuration in a flat, line-oriented `section.key = value` format.
//!
//! ```text
//! # 50% random perturbation, desk-scale grid
//! grid.dx = 0.02
//! solver.dt = 0.001
//! solver.t_final = 100
//! perturbation.kind = random
//! perturbation.epsilon = 0.5
//! ```
//!
//! Blank lines and `#` comments are ignored. Every key is optional; missing
//! keys keep the value of the base configuration (the `paper` preset baseline
//! unless a preset is chosen). Unknown and repeated keys are rejected.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::disorder::{PerturbationKind, PerturbationSpec};
use crate::error::{Error, Result};
use crate::field::Grid1D;
use crate::propagator::{Boundary, SolverParams, Splitting};

/// Number of diagnostics samples per run when `solver.sample_interval` is unset.
pub const DEFAULT_SAMPLES_PER_RUN: f64 = 200.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Full resolution: dx = 0.01, dt = 1e-4, t_final = 200.
    Paper,
    /// dx = 0.02, dt = 1e-3, t_final = 100; minutes instead of hours.
    Desk,
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "paper" => Ok(Preset::Paper),
            "desk" => Ok(Preset::Desk),
            other => Err(format!("unknown preset `{other}` (expected desk or paper)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub dx: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_final: f64,
    pub g: f64,
    pub boundary: Boundary,
    pub splitting: Splitting,
    /// `t_final / 200` when unset.
    pub sample_interval: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationConfig {
    pub kind: PerturbationKind,
    pub epsilon: f64,
    /// Quasiperiodic amplitude; falls back to `epsilon`.
    pub alpha: Option<f64>,
    pub tau: f64,
    pub mu: f64,
    pub seed: u64,
    pub c0: Option<f64>,
    pub x_lo: Option<f64>,
    pub x_hi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialConfig {
    pub x0: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub directory: PathBuf,
    /// `[0, t_final]` when unset.
    pub snapshot_times: Option<Vec<f64>>,
    pub emit_sigma: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub solver: SolverConfig,
    pub perturbation: PerturbationConfig,
    pub initial: InitialConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::preset(Preset::Paper)
    }
}

impl RunConfig {
    pub fn preset(preset: Preset) -> Self {
        let (dx, dt, t_final) = match preset {
            Preset::Paper => (0.01, 1e-4, 200.0),
            Preset::Desk => (0.02, 1e-3, 100.0),
        };
        Self {
            grid: GridConfig {
                x_min: -20.0,
                x_max: 20.0,
                dx,
            },
            solver: SolverConfig {
                dt,
                t_final,
                g: -2.0,
                boundary: Boundary::Dirichlet,
                splitting: Splitting::Strang,
                sample_interval: None,
            },
            perturbation: PerturbationConfig {
                kind: PerturbationKind::None,
                epsilon: 0.0,
                alpha: None,
                tau: 2.0,
                mu: 4.0,
                seed: 1,
                c0: None,
                x_lo: None,
                x_hi: None,
            },
            initial: InitialConfig { x0: 0.0 },
            output: OutputConfig {
                directory: PathBuf::from("out"),
                snapshot_times: None,
                emit_sigma: false,
            },
        }
    }

    pub fn make_grid(&self) -> Result<Grid1D> {
        Grid1D::new(self.grid.x_min, self.grid.x_max, self.grid.dx)
    }

    pub fn solver_params(&self) -> SolverParams {
        let s = &self.solver;
        SolverParams {
            dt: s.dt,
            t_final: s.t_final,
            g_background: s.g,
            boundary: s.boundary,
            splitting: s.splitting,
            sample_interval: s
                .sample_interval
                .unwrap_or(s.t_final / DEFAULT_SAMPLES_PER_RUN),
        }
    }

    pub fn perturbation_spec(&self) -> PerturbationSpec {
        let p = &self.perturbation;
        let epsilon = match p.kind {
            PerturbationKind::Quasiperiodic => p.alpha.unwrap_or(p.epsilon),
            _ => p.epsilon,
        };
        let region = match (p.x_lo, p.x_hi) {
            (None, None) => None,
            (lo, hi) => Some((
                lo.unwrap_or(self.grid.x_min),
                hi.unwrap_or(self.grid.x_max),
            )),
        };
        PerturbationSpec {
            kind: p.kind,
            epsilon,
            refresh_interval: p.tau,
            logistic_mu: p.mu,
            seed: p.seed,
            initial_iterate: p.c0,
            region,
        }
    }

    pub fn snapshot_times(&self) -> Vec<f64> {
        self.output
            .snapshot_times
            .clone()
            .unwrap_or_else(|| vec![0.0, self.solver.t_final])
    }

    /// Checks every component invariant; errors name the offending key.
    pub fn validate(&self) -> Result<()> {
        let grid = self.make_grid()?;
        let params = self.solver_params();
        params.validate()?;
        let spec = self.perturbation_spec();
        spec.validate()?;
        spec.affected_nodes(&grid)?;
        if let Some(alpha) = self.perturbation.alpha {
            if !(alpha.is_finite() && alpha >= 0.0) {
                return Err(Error::config("perturbation.alpha", "must be finite and non-negative"));
            }
        }
        if spec.kind.is_time_dependent() {
            let ratio = spec.refresh_interval / params.dt;
            if params.dt >= spec.refresh_interval || (ratio - ratio.round()).abs() > 1e-9 {
                return Err(Error::config(
                    "perturbation.tau",
                    "must be a whole number (> 1) of solver.dt steps",
                ));
            }
        }
        if grid.nearest_index(self.initial.x0).is_none() {
            return Err(Error::config("initial.x0", "must lie inside the grid"));
        }
        for &t in &self.snapshot_times() {
            if !(t >= 0.0 && t <= params.t_final) {
                return Err(Error::config(
                    "output.snapshot_times",
                    format!("time {t} outside [0, {}]", params.t_final),
                ));
            }
        }
        Ok(())
    }

    /// Applies `key = value` assignments from `text` on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut seen = HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Syntax {
                    line: line_no,
                    message: format!("expected `key = value`, found `{line}`"),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(Error::Syntax {
                    line: line_no,
                    message: "missing key".into(),
                });
            }
            if !seen.insert(key.to_string()) {
                return Err(Error::Syntax {
                    line: line_no,
                    message: format!("`{key}` assigned more than once"),
                });
            }
            self.set(key, value, line_no)?;
        }
        Ok(())
    }

    fn set(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        let num = || parse_value::<f64>(value, line, key);
        let opt_num = || -> Result<Option<f64>> {
            if value.eq_ignore_ascii_case("auto") || value.is_empty() {
                Ok(None)
            } else {
                num().map(Some)
            }
        };
        match key {
            "grid.x_min" => self.grid.x_min = num()?,
            "grid.x_max" => self.grid.x_max = num()?,
            "grid.dx" => self.grid.dx = num()?,
            "solver.dt" => self.solver.dt = num()?,
            "solver.t_final" => self.solver.t_final = num()?,
            "solver.g" => self.solver.g = num()?,
            "solver.boundary" => self.solver.boundary = parse_value(value, line, key)?,
            "solver.splitting" => self.solver.splitting = parse_value(value, line, key)?,
            "solver.sample_interval" => self.solver.sample_interval = opt_num()?,
            "perturbation.kind" => self.perturbation.kind = parse_value(value, line, key)?,
            "perturbation.epsilon" => self.perturbation.epsilon = num()?,
            "perturbation.alpha" => self.perturbation.alpha = opt_num()?,
            "perturbation.tau" => self.perturbation.tau = num()?,
            "perturbation.mu" => self.perturbation.mu = num()?,
            "perturbation.seed" => self.perturbation.seed = parse_value(value, line, key)?,
            "perturbation.c0" => self.perturbation.c0 = opt_num()?,
            "perturbation.x_lo" => self.perturbation.x_lo = opt_num()?,
            "perturbation.x_hi" => self.perturbation.x_hi = opt_num()?,
            "initial.x0" => self.initial.x0 = num()?,
            "output.directory" => self.output.directory = PathBuf::from(value),
            "output.snapshot_times" => {
                self.output.snapshot_times = if value.is_empty() || value.eq_ignore_ascii_case("auto") {
                    None
                } else {
                    Some(
                        value
                            .split(',')
                            .map(|v| parse_value::<f64>(v.trim(), line, key))
                            .collect::<Result<_>>()?,
                    )
                }
            }
            "output.emit_sigma" => self.output.emit_sigma = parse_value(value, line, key)?,
            _ => return Err(Error::config(key, "unknown configuration key")),
        }
        Ok(())
    }

    /// Every key in a fixed order, one per line; unset optional keys are
    /// omitted. Parsing this text on top of any base reproduces `self`
    /// as long as the base has the same optional keys unset.
    pub fn to_canonical_text(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        let g = &self.grid;
        put("grid.x_min", num(g.x_min));
        put("grid.x_max", num(g.x_max));
        put("grid.dx", num(g.dx));
        let s = &self.solver;
        put("solver.dt", num(s.dt));
        put("solver.t_final", num(s.t_final));
        put("solver.g", num(s.g));
        put("solver.boundary", s.boundary.to_string());
        put("solver.splitting", s.splitting.to_string());
        if let Some(v) = s.sample_interval {
            put("solver.sample_interval", num(v));
        }
        let p = &self.perturbation;
        put("perturbation.kind", p.kind.to_string());
        put("perturbation.epsilon", num(p.epsilon));
        if let Some(v) = p.alpha {
            put("perturbation.alpha", num(v));
        }
        put("perturbation.tau", num(p.tau));
        put("perturbation.mu", num(p.mu));
        put("perturbation.seed", p.seed.to_string());
        for (k, v) in [
            ("perturbation.c0", p.c0),
            ("perturbation.x_lo", p.x_lo),
            ("perturbation.x_hi", p.x_hi),
        ] {
            if let Some(v) = v {
                put(k, num(v));
            }
        }
        put("initial.x0", num(self.initial.x0));
        put("output.directory", self.output.directory.display().to_string());
        if let Some(times) = &self.output.snapshot_times {
            put(
                "output.snapshot_times",
                times.iter().map(|&t| num(t)).collect::<Vec<_>>().join(","),
            );
        }
        put("output.emit_sigma", self.output.emit_sigma.to_string());
        out
    }

    /// SHA-256 of the canonical text, lowercase hex.
    pub fn fingerprint(&self) -> String {
        Sha256::digest(self.to_canonical_text().as_bytes())
            .iter()
            .fold(String::with_capacity(64), |mut s, b| {
                let _ = write!(s, "{b:02x}");
                s
            })
    }
}

fn num(v: f64) -> String {
    // Debug prints the shortest representation that parses back exactly.
    format!("{v:?}")
}

fn parse_value<T: FromStr>(value: &str, line: usize, key: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| Error::Syntax {
        line,
        message: format!("bad value `{value}` for `{key}`: {e}"),
    })
}

/// Parses `text` over the `paper` preset defaults and validates the result.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_with_base(text, RunConfig::default())
}

pub fn parse_config_with_base(text: &str, base: RunConfig) -> Result<RunConfig> {
    let mut config = base;
    config.apply_text(text)?;
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_baseline() {
        let c = parse_config("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!((c.grid.x_min, c.grid.x_max, c.grid.dx), (-20.0, 20.0, 0.01));
        assert_eq!((c.solver.dt, c.solver.t_final, c.solver.g), (1e-4, 200.0, -2.0));
        assert_eq!((c.initial.x0, c.perturbation.tau), (0.0, 2.0));
        assert_eq!(c.solver_params().sample_interval, 1.0);
        assert_eq!(c.make_grid().unwrap().len(), 4001);
    }

    #[test]
    fn random_half_strength() {
        let c = parse_config("perturbation.kind = random\nperturbation.epsilon = 0.5\n").unwrap();
        assert_eq!(c.perturbation.kind, PerturbationKind::Random);
        assert_eq!(c.perturbation_spec().epsilon, 0.5);
    }

    #[test]
    fn negative_dt_names_the_key() {
        match parse_config("solver.dt = -1") {
            Err(Error::Config { key, .. }) => assert_eq!(key, "solver.dt"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        match parse_config("# header\n\ngrid.dx 0.01\n") {
            Err(Error::Syntax { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match parse_config("grid.dx = abc") {
            Err(Error::Syntax { line, .. }) => assert_eq!(line, 1),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_config("grid.dx = 0.01\ngrid.dx = 0.02"),
            Err(Error::Syntax { line: 2, .. })
        ));
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(matches!(
            parse_config("solver.theta = 0.5"),
            Err(Error::Config { key, .. }) if key == "solver.theta"
        ));
    }

    #[test]
    fn alpha_overrides_epsilon_for_quasiperiodic() {
        let c = parse_config(
            "perturbation.kind = quasiperiodic\nperturbation.epsilon = 0.1\nperturbation.alpha = 0.5",
        )
        .unwrap();
        assert_eq!(c.perturbation_spec().epsilon, 0.5);
        let c = parse_config("perturbation.kind = random\nperturbation.epsilon = 0.1\nperturbation.alpha = 0.5")
            .unwrap();
        assert_eq!(c.perturbation_spec().epsilon, 0.1);
    }

    #[test]
    fn misaligned_tau_rejected() {
        assert!(matches!(
            parse_config("perturbation.kind = chaotic\nperturbation.tau = 0.00015"),
            Err(Error::Config { key, .. }) if key == "perturbation.tau"
        ));
    }

    #[test]
    fn comments_and_optional_values() {
        let c = parse_config(
            "solver.sample_interval = 0.5 # every half unit\noutput.snapshot_times = 0, 50, 200\noutput.emit_sigma = true\nperturbation.x_lo = -5\n",
        )
        .unwrap();
        assert_eq!(c.solver.sample_interval, Some(0.5));
        assert_eq!(c.snapshot_times(), vec![0.0, 50.0, 200.0]);
        assert!(c.output.emit_sigma);
        assert_eq!(c.perturbation_spec().region, Some((-5.0, 20.0)));
        assert!(parse_config("output.snapshot_times = 300").is_err());
    }

    #[test]
    fn canonical_text_round_trips() {
        let mut c = RunConfig::preset(Preset::Desk);
        c.perturbation.kind = PerturbationKind::Chaotic;
        c.perturbation.epsilon = 0.1;
        c.perturbation.c0 = Some(0.123_456_789);
        c.output.snapshot_times = Some(vec![0.0, 12.5]);
        let text = c.to_canonical_text();
        assert_eq!(parse_config(&text).unwrap(), c);
    }

    #[test]
    fn desk_preset() {
        let c = RunConfig::preset(Preset::Desk);
        assert_eq!((c.grid.dx, c.solver.dt, c.solver.t_final), (0.02, 1e-3, 100.0));
        c.validate().unwrap();
    }
}
