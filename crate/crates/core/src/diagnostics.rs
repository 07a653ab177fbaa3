//! Observables sampled along a run and the end-of-run summary.

use crate::error::{Error, Result};
use crate::field::{comparative_error, power, ErrorReport, WaveField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub power: f64,
    /// `|psi(0, t)|^2` at the node nearest `x = 0` (0 if the grid excludes it).
    pub height_x0: f64,
    pub centroid: f64,
    pub peak_pos: f64,
    pub peak_height: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    /// `|P(t_f) - P(0)|` with the bare-sum power.
    pub power_error: f64,
    /// `power_error / P(0)`.
    pub relative_power_error: f64,
    pub error_report: ErrorReport,
    pub min_peak_height: f64,
    pub max_peak_height: f64,
    pub initial_centroid: f64,
    pub final_centroid: f64,
    pub centroid_displacement: f64,
}

/// Density at the node nearest `x`.
pub fn height_at(field: &WaveField, x: f64) -> Result<f64> {
    let grid = field.grid();
    let i = grid.nearest_index(x).ok_or_else(|| {
        Error::contract(format!(
            "x = {x} outside grid [{}, {}]",
            grid.x_min(),
            grid.x_max()
        ))
    })?;
    Ok(field.values()[i].norm_sqr())
}

/// Density-weighted mean position.
pub fn centroid(field: &WaveField) -> Result<f64> {
    let grid = field.grid();
    let (mut weighted, mut total) = (0.0, 0.0);
    for (i, d) in field.densities().enumerate() {
        weighted += grid.x(i) * d;
        total += d;
    }
    if total <= 0.0 {
        return Err(Error::UndefinedCentroid);
    }
    Ok(weighted / total)
}

/// Position and density of the densest node; the first index wins ties.
pub fn peak(field: &WaveField) -> (f64, f64) {
    let (mut best_i, mut best) = (0, f64::NEG_INFINITY);
    for (i, d) in field.densities().enumerate() {
        if d > best {
            best = d;
            best_i = i;
        }
    }
    (field.grid().x(best_i), best)
}

/// Discrete energy `sum(|(psi_{i+1} - psi_i)/dx|^2 + (g_i/2)|psi_i|^4) dx`,
/// conserved by the continuous flow when `g` is constant in time.
pub fn energy(field: &WaveField, g: &[f64]) -> f64 {
    let dx = field.grid().dx();
    let v = field.values();
    let kinetic: f64 = v.windows(2).map(|w| ((w[1] - w[0]) / dx).norm_sqr()).sum();
    let interaction: f64 = v
        .iter()
        .zip(g)
        .map(|(p, g)| 0.5 * g * p.norm_sqr().powi(2))
        .sum();
    (kinetic + interaction) * dx
}

pub fn record(t: f64, field: &WaveField) -> DiagnosticsRecord {
    let grid = field.grid();
    let height_x0 = grid
        .nearest_index(0.0)
        .map(|i| field.values()[i].norm_sqr())
        .unwrap_or(0.0);
    let (peak_pos, peak_height) = peak(field);
    DiagnosticsRecord {
        t,
        power: power(field),
        height_x0,
        // An all-zero field has no centroid; report the grid midpoint.
        centroid: centroid(field).unwrap_or(0.5 * (grid.x_min() + grid.x_max())),
        peak_pos,
        peak_height,
    }
}

pub fn summarize(
    initial: &WaveField,
    final_state: &WaveField,
    records: &[DiagnosticsRecord],
) -> Result<RunSummary> {
    if records.is_empty() {
        return Err(Error::contract("summarize needs at least one record"));
    }
    let p0 = power(initial);
    let power_error = (power(final_state) - p0).abs();
    let (min_peak_height, max_peak_height) = records
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
            (lo.min(r.peak_height), hi.max(r.peak_height))
        });
    let initial_centroid = record(0.0, initial).centroid;
    let final_centroid = record(0.0, final_state).centroid;
    Ok(RunSummary {
        power_error,
        relative_power_error: if p0 > 0.0 { power_error / p0 } else { 0.0 },
        error_report: comparative_error(initial, final_state)?,
        min_peak_height,
        max_peak_height,
        initial_centroid,
        final_centroid,
        centroid_displacement: final_centroid - initial_centroid,
    })
}
