use nalgebra::Schur;
use num_complex::Complex64;

use super::{ensure_finite, ensure_square, to_complex, CMatrix, Matrix};
use crate::error::{MorError, Result};

/// Triangular Schur form `M = Q T Q^H` of a real matrix, computed in complex
/// arithmetic so that `T` is truly triangular.
///
/// `lower` marks the factor of a transposed matrix: for real `A = Q T Q^H`,
/// `A^T = Q T^H Q^H` with `T^H` lower triangular.
#[derive(Debug, Clone)]
pub struct SchurFactor {
    pub(crate) q: CMatrix,
    pub(crate) t: CMatrix,
    pub(crate) lower: bool,
    pub(crate) norm: f64,
}

impl SchurFactor {
    pub fn new(m: &Matrix) -> Result<Self> {
        ensure_square(m, "Schur input")?;
        ensure_finite(m, "Schur input")?;
        let n = m.nrows();
        let norm = m.norm();
        if n == 0 {
            return Ok(SchurFactor {
                q: CMatrix::zeros(0, 0),
                t: CMatrix::zeros(0, 0),
                lower: false,
                norm,
            });
        }
        let max_iter = 300 * n.max(10);
        let schur = Schur::try_new(to_complex(m), f64::EPSILON, max_iter).ok_or(
            MorError::NoConvergence {
                what: "complex Schur iteration",
                iterations: max_iter,
            },
        )?;
        let (q, mut t) = schur.unpack();
        for j in 0..n {
            for i in (j + 1)..n {
                t[(i, j)] = Complex64::new(0.0, 0.0);
            }
        }
        Ok(SchurFactor {
            q,
            t,
            lower: false,
            norm,
        })
    }

    /// Factor of the transpose of the (real) factored matrix.
    pub fn transposed(&self) -> SchurFactor {
        SchurFactor {
            q: self.q.clone(),
            t: self.t.adjoint(),
            lower: !self.lower,
            norm: self.norm,
        }
    }

    pub fn dim(&self) -> usize {
        self.t.nrows()
    }

    pub fn eigenvalues(&self) -> impl Iterator<Item = Complex64> + '_ {
        (0..self.dim()).map(move |i| self.t[(i, i)])
    }

    pub fn max_real_part(&self) -> f64 {
        self.eigenvalues()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Frobenius norm of the factored matrix.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub(crate) fn rightmost(&self) -> Complex64 {
        self.eigenvalues()
            .max_by(|a, b| a.re.total_cmp(&b.re))
            .unwrap_or_default()
    }
}

/// Eigenvalues and unit right eigenvectors of a real matrix (diagonalizable case),
/// by back-substitution on the complex Schur form.
pub fn eigenvectors(m: &Matrix) -> Result<(Vec<Complex64>, CMatrix)> {
    let f = SchurFactor::new(m)?;
    let n = f.dim();
    let t = &f.t;
    let mut y = CMatrix::zeros(n, n);
    let small = f64::EPSILON * f.norm.max(f64::MIN_POSITIVE);
    for k in 0..n {
        let lambda = t[(k, k)];
        y[(k, k)] = Complex64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut s = Complex64::new(0.0, 0.0);
            for j in (i + 1)..=k {
                s += t[(i, j)] * y[(j, k)];
            }
            let mut den = t[(i, i)] - lambda;
            if den.norm() < small {
                den = Complex64::new(small, 0.0);
            }
            y[(i, k)] = -s / den;
        }
    }
    let mut x = &f.q * y;
    for mut col in x.column_iter_mut() {
        let nrm = col.norm();
        if nrm > 0.0 {
            col /= Complex64::new(nrm, 0.0);
        }
    }
    Ok((f.eigenvalues().collect(), x))
}
