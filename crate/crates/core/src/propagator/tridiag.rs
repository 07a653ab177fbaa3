//! Factored tridiagonal systems with complex coefficients.
//!
//! The Crank-Nicolson matrix is fixed for a given `(dt, grid, boundary)`, so the
//! forward-elimination coefficients are computed once and each solve is a
//! single forward and backward sweep.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Thomas factorisation of a tridiagonal matrix
///
/// ```text
/// | d0 u0          |
/// | l1 d1 u1       |
/// |    l2 d2 u2    |
/// |       ..    .. |
/// ```
///
/// `lower[0]` and `upper[n - 1]` are ignored.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    lower: Vec<Complex64>,
    /// `u_i / pivot_i`
    upper_scaled: Vec<Complex64>,
    inv_pivot: Vec<Complex64>,
}

impl Tridiagonal {
    pub fn factor(lower: &[Complex64], diag: &[Complex64], upper: &[Complex64]) -> Result<Self> {
        let n = diag.len();
        if n == 0 || lower.len() != n || upper.len() != n {
            return Err(Error::contract("tridiagonal bands must share a non-zero length"));
        }
        let mut upper_scaled = vec![Complex64::new(0.0, 0.0); n];
        let mut inv_pivot = vec![Complex64::new(0.0, 0.0); n];
        let mut prev = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let pivot = if i == 0 {
                diag[0]
            } else {
                diag[i] - lower[i] * prev
            };
            // Diagonal dominance rules this out for the CN operator.
            if pivot.norm() <= f64::EPSILON * diag[i].norm().max(1.0) {
                return Err(Error::contract(format!("zero pivot at row {i}")));
            }
            inv_pivot[i] = pivot.inv();
            upper_scaled[i] = upper[i] * inv_pivot[i];
            prev = upper_scaled[i];
        }
        Ok(Self {
            lower: lower.to_vec(),
            upper_scaled,
            inv_pivot,
        })
    }

    pub fn len(&self) -> usize {
        self.inv_pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_pivot.is_empty()
    }

    /// Overwrites `rhs` with the solution.
    pub fn solve_in_place(&self, rhs: &mut [Complex64]) {
        let n = self.len();
        assert_eq!(rhs.len(), n, "rhs length does not match the factored system");
        rhs[0] *= self.inv_pivot[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.lower[i] * rhs[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.upper_scaled[i] * rhs[i + 1];
        }
    }
}

/// Tridiagonal matrix with the two corner entries of a periodic stencil,
/// solved as a rank-one update of a plain tridiagonal system
/// (Sherman-Morrison).
#[derive(Debug, Clone)]
pub struct CyclicTridiagonal {
    inner: Tridiagonal,
    /// Solution of `T z = u` for the rank-one vector `u`.
    correction: Vec<Complex64>,
    /// `top_right / gamma`
    beta_over_gamma: Complex64,
    denom: Complex64,
}

impl CyclicTridiagonal {
    /// `top_right` is entry `(0, n-1)` and `bottom_left` is `(n-1, 0)`.
    pub fn factor(
        lower: &[Complex64],
        diag: &[Complex64],
        upper: &[Complex64],
        top_right: Complex64,
        bottom_left: Complex64,
    ) -> Result<Self> {
        let n = diag.len();
        if n < 3 {
            return Err(Error::contract("cyclic system needs at least 3 rows"));
        }
        let gamma = -diag[0];
        let mut modified = diag.to_vec();
        modified[0] = diag[0] - gamma;
        modified[n - 1] = diag[n - 1] - bottom_left * top_right / gamma;
        let inner = Tridiagonal::factor(lower, &modified, upper)?;

        let mut correction = vec![Complex64::new(0.0, 0.0); n];
        correction[0] = gamma;
        correction[n - 1] = bottom_left;
        inner.solve_in_place(&mut correction);

        let beta_over_gamma = top_right / gamma;
        let denom = Complex64::new(1.0, 0.0) + correction[0] + beta_over_gamma * correction[n - 1];
        if denom.norm() <= f64::EPSILON {
            return Err(Error::contract("singular cyclic system"));
        }
        Ok(Self {
            inner,
            correction,
            beta_over_gamma,
            denom,
        })
    }

    pub fn solve_in_place(&self, rhs: &mut [Complex64]) {
        let n = rhs.len();
        self.inner.solve_in_place(rhs);
        let fact = (rhs[0] + self.beta_over_gamma * rhs[n - 1]) / self.denom;
        for (x, z) in rhs.iter_mut().zip(&self.correction) {
            *x -= fact * z;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Gaussian elimination with partial pivoting on a dense copy.
    fn dense_solve(mut a: Vec<Vec<Complex64>>, mut b: Vec<Complex64>) -> Vec<Complex64> {
        let n = b.len();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[i][k].norm().partial_cmp(&a[j][k].norm()).unwrap())
                .unwrap();
            a.swap(k, p);
            b.swap(k, p);
            for i in k + 1..n {
                let f = a[i][k] / a[k][k];
                for j in k..n {
                    let akj = a[k][j];
                    a[i][j] -= f * akj;
                }
                let bk = b[k];
                b[i] -= f * bk;
            }
        }
        let mut x = vec![c(0.0, 0.0); n];
        for i in (0..n).rev() {
            let s: Complex64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
            x[i] = (b[i] - s) / a[i][i];
        }
        x
    }

    fn bands(n: usize) -> (Vec<Complex64>, Vec<Complex64>, Vec<Complex64>, Vec<Complex64>) {
        let lower = (0..n).map(|i| c(-0.3 + 0.01 * i as f64, 0.7)).collect();
        let diag = (0..n).map(|i| c(2.5 + 0.1 * i as f64, -0.4)).collect();
        let upper = (0..n).map(|i| c(0.2, -0.5 + 0.02 * i as f64)).collect();
        let rhs = (0..n).map(|i| c((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        (lower, diag, upper, rhs)
    }

    #[test]
    fn thomas_matches_dense() {
        let n = 9;
        let (l, d, u, rhs) = bands(n);
        let mut a = vec![vec![c(0.0, 0.0); n]; n];
        for i in 0..n {
            a[i][i] = d[i];
            if i > 0 {
                a[i][i - 1] = l[i];
            }
            if i + 1 < n {
                a[i][i + 1] = u[i];
            }
        }
        let expect = dense_solve(a, rhs.clone());
        let mut x = rhs;
        Tridiagonal::factor(&l, &d, &u).unwrap().solve_in_place(&mut x);
        for (x, e) in x.iter().zip(&expect) {
            assert!((x - e).norm() < 1e-13, "{x} vs {e}");
        }
    }

    #[test]
    fn cyclic_matches_dense() {
        let n = 7;
        let (l, d, u, rhs) = bands(n);
        let (tr, bl) = (c(0.4, 0.1), c(-0.2, 0.6));
        let mut a = vec![vec![c(0.0, 0.0); n]; n];
        for i in 0..n {
            a[i][i] = d[i];
            if i > 0 {
                a[i][i - 1] = l[i];
            }
            if i + 1 < n {
                a[i][i + 1] = u[i];
            }
        }
        a[0][n - 1] = tr;
        a[n - 1][0] = bl;
        let expect = dense_solve(a, rhs.clone());
        let mut x = rhs;
        CyclicTridiagonal::factor(&l, &d, &u, tr, bl)
            .unwrap()
            .solve_in_place(&mut x);
        for (x, e) in x.iter().zip(&expect) {
            assert!((x - e).norm() < 1e-13, "{x} vs {e}");
        }
    }

    #[test]
    fn singular_system_is_rejected() {
        let z = vec![c(0.0, 0.0); 4];
        assert!(Tridiagonal::factor(&z, &z, &z).is_err());
        assert!(Tridiagonal::factor(&[], &[], &[]).is_err());
    }
}
