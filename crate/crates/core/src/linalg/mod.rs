//! Dense matrix-equation kernels.
//!
//! Sylvester and Lyapunov equations are solved with a Bartels–Stewart scheme
//! on top of a complex Schur form; the algebraic Riccati solver works on the
//! invariant subspaces of the associated Hamiltonian. Every solver can report
//! the relative residual of the returned solution.

mod care;
mod schur;
mod sylvester;

pub use care::{care_residual, solve_care, solve_care_with, CareBranch, CareOptions, CareSolution};
pub use schur::{eigenvectors, SchurFactor};
pub use sylvester::{
    lyapunov_cached, lyapunov_factor, lyapunov_residual, solve_lyapunov, solve_lyapunov_with, solve_sylvester,
    solve_sylvester_factored, solve_sylvester_kronecker, solve_sylvester_with, sylvester_residual,
    sylvester_cached, Factored, SolveOptions,
};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{MorError, Result};

/// Real dense matrix.
pub type Matrix = DMatrix<f64>;
/// Complex dense matrix.
pub type CMatrix = DMatrix<Complex64>;

pub(crate) fn ensure_finite(m: &Matrix, name: &'static str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(MorError::NonFinite(name))
    }
}

pub(crate) fn ensure_square(m: &Matrix, name: &str) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(MorError::Dimension(format!(
            "{name} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )))
    }
}

/// Frobenius norm.
pub fn fro(m: &Matrix) -> f64 {
    m.norm()
}

pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

pub fn to_complex(m: &Matrix) -> CMatrix {
    m.map(|v| Complex64::new(v, 0.0))
}

/// Inverse via LU, failing on (numerically) singular input.
pub fn inverse(m: &Matrix, what: &str) -> Result<Matrix> {
    if m.nrows() == 0 {
        return Ok(m.clone());
    }
    let inv = m
        .clone()
        .try_inverse()
        .ok_or_else(|| MorError::Singular(what.to_string()))?;
    if inv.iter().all(|v| v.is_finite()) {
        Ok(inv)
    } else {
        Err(MorError::Singular(what.to_string()))
    }
}

/// Singular values, descending.
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Orthonormal basis of the column span (thin QR with sign-normalized diagonal).
pub fn orthonormalize(m: &Matrix) -> Matrix {
    let qr = m.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..q.ncols().min(r.nrows()) {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Eigenvalue summary of a real square matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub eigenvalues: Vec<Complex64>,
    pub max_real_part: f64,
    pub is_hurwitz: bool,
}

impl SpectrumSummary {
    pub fn from_eigenvalues(mut eigenvalues: Vec<Complex64>) -> Self {
        eigenvalues.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        let max_real_part = eigenvalues
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        SpectrumSummary {
            is_hurwitz: max_real_part < 0.0,
            max_real_part,
            eigenvalues,
        }
    }

    /// Eigenvalue with the largest real part, if any.
    pub fn rightmost(&self) -> Option<Complex64> {
        self.eigenvalues
            .iter()
            .copied()
            .max_by(|a, b| a.re.total_cmp(&b.re))
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

/// All eigenvalues of a real square matrix.
pub fn eigenvalues(m: &Matrix) -> Result<SpectrumSummary> {
    ensure_square(m, "matrix")?;
    ensure_finite(m, "eigenvalue input")?;
    let n = m.nrows();
    if n == 0 {
        return Ok(SpectrumSummary::from_eigenvalues(Vec::new()));
    }
    let schur = nalgebra::Schur::try_new(m.clone(), f64::EPSILON, 200 * n.max(10)).ok_or(
        MorError::NoConvergence {
            what: "real Schur iteration",
            iterations: 200 * n.max(10),
        },
    )?;
    let mut ev: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    // Pair up conjugates exactly so the list is closed under conjugation.
    for z in ev.iter_mut() {
        if z.im.abs() <= 1e-300 {
            z.im = 0.0;
        }
    }
    Ok(SpectrumSummary::from_eigenvalues(ev))
}

/// Fails with `NotHurwitz` naming the rightmost eigenvalue when `m` is not Hurwitz.
pub fn require_hurwitz(m: &Matrix) -> Result<SpectrumSummary> {
    let spec = eigenvalues(m)?;
    if spec.is_hurwitz {
        Ok(spec)
    } else {
        let z = spec.rightmost().unwrap_or_default();
        Err(MorError::NotHurwitz { re: z.re, im: z.im })
    }
}
