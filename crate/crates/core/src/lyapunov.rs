//! Continuous Lyapunov equations `A W + W Aᵀ + C = 0` via a complex Schur
//! form (Bartels–Stewart style back substitution).

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;

/// Largest real part among the eigenvalues of `a`.
pub fn max_real_part(a: &DMatrix<f64>) -> f64 {
    linalg::eigenvalues(a)
        .map(|e| e.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
        .unwrap_or(f64::NAN)
}

/// Reusable factorisation `A = Q T Qᴴ` of a Hurwitz matrix.
pub struct LyapunovSolver {
    q: DMatrix<Complex64>,
    t: DMatrix<Complex64>,
}

impl LyapunovSolver {
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        let max_re = max_real_part(a);
        if !(max_re < 0.0) {
            return Err(Error::NotHurwitz { max_re });
        }
        let (q, t) = linalg::complex_schur(a)
            .ok_or_else(|| Error::Numeric("Schur decomposition did not converge".into()))?;
        Ok(LyapunovSolver { q, t })
    }

    pub fn n(&self) -> usize {
        self.t.nrows()
    }

    /// Solves `A W + W Aᵀ + C = 0` for symmetric real `C`.
    pub fn solve(&self, c: &DMatrix<f64>) -> DMatrix<f64> {
        let f = -(self.q.adjoint() * linalg::to_complex(c) * &self.q);
        let y = self.solve_triangular(&f);
        let w = (&self.q * y * self.q.adjoint()).map(|z| z.re);
        (&w + w.transpose()) * 0.5
    }

    /// Gramian of a single actuated state: `C = e_s e_sᵀ`.
    pub fn solve_unit(&self, s: usize) -> DMatrix<f64> {
        let n = self.n();
        let qs = DMatrix::from_fn(n, 1, |r, _| self.q[(s, r)].conj());
        let f = -(&qs * qs.adjoint());
        let y = self.solve_triangular(&f);
        let w = (&self.q * y * self.q.adjoint()).map(|z| z.re);
        (&w + w.transpose()) * 0.5
    }

    /// `T Y + Y Tᴴ = F` with `T` upper triangular, column by column from the
    /// last one.
    fn solve_triangular(&self, f: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let n = self.n();
        let t = &self.t;
        let mut y = DMatrix::<Complex64>::zeros(n, n);
        for j in (0..n).rev() {
            let mut rhs: Vec<Complex64> = (0..n).map(|r| f[(r, j)]).collect();
            for k in j + 1..n {
                let c = t[(j, k)].conj();
                if c != Complex64::new(0.0, 0.0) {
                    for r in 0..n {
                        rhs[r] -= c * y[(r, k)];
                    }
                }
            }
            let shift = t[(j, j)].conj();
            for r in (0..n).rev() {
                let mut acc = rhs[r];
                for k in r + 1..n {
                    acc -= t[(r, k)] * y[(k, j)];
                }
                y[(r, j)] = acc / (t[(r, r)] + shift);
            }
        }
        y
    }
}

/// One-shot solve of `A W + W Aᵀ + C = 0`.
pub fn solve_lyapunov(a: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(LyapunovSolver::new(a)?.solve(c))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residual_is_small() {
        let a = DMatrix::from_row_slice(3, 3, &[-2.0, 1.0, 0.0, 0.5, -3.0, 1.0, 0.0, 2.0, -1.5]);
        let c = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let w = solve_lyapunov(&a, &c).unwrap();
        let r = &a * &w + &w * a.transpose() + &c;
        assert!(r.norm() < 1e-12, "residual {}", r.norm());
        let s = LyapunovSolver::new(&a).unwrap();
        let w2 = s.solve_unit(0) + s.solve_unit(2);
        assert!((w2 - w).norm() < 1e-12);
    }

    #[test]
    fn complex_spectrum() {
        let a = DMatrix::from_row_slice(2, 2, &[-0.5, 2.0, -2.0, -0.5]);
        let c = DMatrix::identity(2, 2);
        let w = solve_lyapunov(&a, &c).unwrap();
        assert!((&a * &w + &w * a.transpose() + &c).norm() < 1e-12);
    }

    #[test]
    fn rejects_unstable() {
        let a = DMatrix::identity(2, 2);
        assert!(matches!(LyapunovSolver::new(&a), Err(Error::NotHurwitz { .. })));
    }
}
