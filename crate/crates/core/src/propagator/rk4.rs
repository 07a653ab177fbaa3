//! Classical fourth-order Runge-Kutta on the method-of-lines system
//! `i psi_t = A psi + g |psi|^2 psi`, with `A` the same three-point `-d^2/dx^2`
//! used by the split-step scheme. It shares no code with the split-step path
//! and serves as a reference for it.

use num_complex::Complex64;

use super::Boundary;
use crate::error::{Error, Result};
use crate::field::WaveField;

/// Imaginary-axis stability bound of classical RK4, `2 sqrt(2)`.
const RK4_IMAGINARY_LIMIT: f64 = 2.828;

fn rhs(psi: &[Complex64], g: &[f64], inv_dx2: f64, boundary: Boundary, out: &mut [Complex64]) {
    let n = psi.len();
    let minus_i = Complex64::new(0.0, -1.0);
    for i in 0..n {
        let (left, right) = match boundary {
            Boundary::Dirichlet => {
                if i == 0 || i == n - 1 {
                    out[i] = Complex64::new(0.0, 0.0);
                    continue;
                }
                (psi[i - 1], psi[i + 1])
            }
            Boundary::Periodic => (psi[(i + n - 1) % n], psi[(i + 1) % n]),
        };
        let laplacian = (2.0 * psi[i] - left - right) * inv_dx2;
        out[i] = minus_i * (laplacian + g[i] * psi[i].norm_sqr() * psi[i]);
    }
}

fn check_stability(field: &WaveField, g: &[f64], dt: f64) -> Result<()> {
    if g.len() != field.grid().len() {
        return Err(Error::contract("nonlinearity profile does not match the grid"));
    }
    let dx = field.grid().dx();
    let max_density = field.densities().fold(0.0, f64::max);
    let max_g = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let spectral_radius = 4.0 / (dx * dx) + max_g * max_density;
    if dt * spectral_radius > RK4_IMAGINARY_LIMIT {
        return Err(Error::contract(format!(
            "RK4 step dt = {dt} exceeds the explicit stability limit {:.3e}",
            RK4_IMAGINARY_LIMIT / spectral_radius
        )));
    }
    Ok(())
}

struct Rk4Scratch {
    k: [Vec<Complex64>; 4],
    stage: Vec<Complex64>,
}

impl Rk4Scratch {
    fn new(n: usize) -> Self {
        let zero = vec![Complex64::new(0.0, 0.0); n];
        Self {
            k: [zero.clone(), zero.clone(), zero.clone(), zero.clone()],
            stage: zero,
        }
    }

    fn step(&mut self, psi: &mut [Complex64], g: &[f64], dt: f64, inv_dx2: f64, boundary: Boundary) {
        if boundary == Boundary::Dirichlet {
            let n = psi.len();
            psi[0] = Complex64::new(0.0, 0.0);
            psi[n - 1] = Complex64::new(0.0, 0.0);
        }
        let [k1, k2, k3, k4] = &mut self.k;
        rhs(psi, g, inv_dx2, boundary, k1);
        for ((s, p), k) in self.stage.iter_mut().zip(psi.iter()).zip(k1.iter()) {
            *s = p + 0.5 * dt * k;
        }
        rhs(&self.stage, g, inv_dx2, boundary, k2);
        for ((s, p), k) in self.stage.iter_mut().zip(psi.iter()).zip(k2.iter()) {
            *s = p + 0.5 * dt * k;
        }
        rhs(&self.stage, g, inv_dx2, boundary, k3);
        for ((s, p), k) in self.stage.iter_mut().zip(psi.iter()).zip(k3.iter()) {
            *s = p + dt * k;
        }
        rhs(&self.stage, g, inv_dx2, boundary, k4);
        for (i, p) in psi.iter_mut().enumerate() {
            *p += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
}

/// One explicit RK4 step with the nonlinearity profile `g` held fixed.
pub fn rk4_reference_step(
    field: &WaveField,
    g: &[f64],
    dt: f64,
    boundary: Boundary,
) -> Result<WaveField> {
    rk4_evolve(field, g, dt, 1, boundary)
}

/// `steps` RK4 steps of size `dt` with a time-independent `g`.
pub fn rk4_evolve(
    field: &WaveField,
    g: &[f64],
    dt: f64,
    steps: usize,
    boundary: Boundary,
) -> Result<WaveField> {
    check_stability(field, g, dt)?;
    let dx = field.grid().dx();
    let inv_dx2 = 1.0 / (dx * dx);
    let mut out = field.clone();
    let mut scratch = Rk4Scratch::new(out.grid().len());
    for _ in 0..steps {
        scratch.step(out.values_mut(), g, dt, inv_dx2, boundary);
    }
    if !out.is_finite() {
        return Err(Error::Diverged {
            t: steps as f64 * dt,
            reason: "non-finite amplitude in RK4 reference".into(),
            last_finite: Box::new(field.clone()),
        });
    }
    Ok(out)
}
