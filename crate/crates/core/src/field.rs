//! Spatial grid, the complex wavefunction container, initial states, and the
//! two scalar metrics used to judge a run: the power (sum of densities) and the
//! comparative error between an input and an output state.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Uniform grid over `[x_min, x_max]` with both endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    dx: f64,
    n: usize,
}

impl Grid1D {
    /// Builds the grid with `n = round((x_max - x_min) / dx) + 1` nodes.
    ///
    /// The span must be an integer multiple of `dx`: the ratio
    /// `(x_max - x_min) / dx` has to lie within `dx / 2` of an integer.
    pub fn new(x_min: f64, x_max: f64, dx: f64) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite() && dx.is_finite()) {
            return Err(Error::config("grid", "bounds and spacing must be finite"));
        }
        if x_max <= x_min {
            return Err(Error::config("grid.x_max", "x_max must exceed x_min"));
        }
        if dx <= 0.0 {
            return Err(Error::config("grid.dx", "dx must be positive"));
        }
        let ratio = (x_max - x_min) / dx;
        let intervals = ratio.round();
        if (ratio - intervals).abs() >= dx / 2.0 || intervals < 1.0 {
            return Err(Error::config(
                "grid.dx",
                format!("span {} is not a whole number of steps of {dx}", x_max - x_min),
            ));
        }
        Ok(Self {
            x_min,
            x_max,
            dx,
            n: intervals as usize + 1,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.x(i))
    }

    /// Index of the node closest to `x`, or `None` when `x` lies outside
    /// the grid bounds.
    pub fn nearest_index(&self, x: f64) -> Option<usize> {
        if !(x >= self.x_min && x <= self.x_max) {
            return None;
        }
        let i = ((x - self.x_min) / self.dx).round() as usize;
        Some(i.min(self.n - 1))
    }
}

/// Complex amplitudes sampled on every node of a [`Grid1D`].
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    grid: Grid1D,
    values: Vec<Complex64>,
}

impl WaveField {
    pub fn new(grid: Grid1D, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::contract(format!(
                "field has {} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::contract(format!("non-finite amplitude at node {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid1D) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Samples `f(x)` at every node.
    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> Complex64) -> Self {
        Self {
            grid,
            values: grid.nodes().map(f).collect(),
        }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn densities(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.values.iter().map(|v| v.norm_sqr())
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Bright soliton `sech(x - x0)` at rest, the stationary state for `G = -2`.
pub fn soliton_initial(grid: &Grid1D, x0: f64) -> WaveField {
    WaveField::from_fn(*grid, |x| Complex64::new(sech(x - x0), 0.0))
}

/// Soliton carrying momentum: `sech(x - x0) exp(i v (x - x0) / 2)` moves with
/// velocity `v` under the free dispersion `-psi_xx`.
pub fn boosted_soliton(grid: &Grid1D, x0: f64, velocity: f64) -> WaveField {
    WaveField::from_fn(*grid, |x| {
        Complex64::from_polar(sech(x - x0), 0.5 * velocity * (x - x0))
    })
}

#[inline]
pub fn sech(x: f64) -> f64 {
    // cosh overflows to inf past |x| ~ 710, which still gives the right 0.
    1.0 / x.cosh()
}

/// Bare sum of densities over the nodes (no `dx` weight).
pub fn power(field: &WaveField) -> f64 {
    field.densities().sum()
}

/// `dx`-weighted norm, the discrete approximation of the integral of `|psi|^2`.
pub fn power_dx(field: &WaveField) -> f64 {
    power(field) * field.grid().dx()
}

/// Density-difference metrics between an input and an output state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorReport {
    /// `(1/N) sum(|a|^2 - |b|^2)`, i.e. `(P(a) - P(b)) / N`.
    pub signed_mean: f64,
    /// `(1/N) sum | |a|^2 - |b|^2 |`.
    pub mean_abs: f64,
    /// `sqrt(sum (|a|^2 - |b|^2)^2)`; a sum, not a mean, under the square root.
    pub rms: f64,
    pub l_inf: f64,
}

pub fn comparative_error(initial: &WaveField, final_state: &WaveField) -> Result<ErrorReport> {
    if initial.grid() != final_state.grid() {
        return Err(Error::contract("comparative_error: fields live on different grids"));
    }
    let n = initial.grid().len() as f64;
    let mut abs_sum = 0.0;
    let mut sq_sum = 0.0;
    let mut l_inf: f64 = 0.0;
    for (a, b) in initial.densities().zip(final_state.densities()) {
        let d = (a - b).abs();
        abs_sum += d;
        sq_sum += d * d;
        l_inf = l_inf.max(d);
    }
    Ok(ErrorReport {
        signed_mean: (power(initial) - power(final_state)) / n,
        mean_abs: abs_sum / n,
        rms: sq_sum.sqrt(),
        l_inf,
    })
}
