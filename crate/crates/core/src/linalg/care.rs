use super::{
    eigenvalues, ensure_finite, ensure_square, fro, solve_lyapunov_with, solve_sylvester_with,
    symmetrize, Matrix, SolveOptions,
};
use crate::error::{MorError, Result};

/// Which invariant subspace of the Hamiltonian defines the solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CareBranch {
    /// `A + S X` Hurwitz.
    Stabilizing,
    /// `A + S X` has all eigenvalues in the open right half-plane.
    AntiStabilizing,
}

#[derive(Debug, Clone, Copy)]
pub struct CareOptions {
    pub tol: f64,
    pub branch: CareBranch,
    /// Number of Newton refinement sweeps applied after the subspace solve.
    pub newton_sweeps: usize,
}

impl Default for CareOptions {
    fn default() -> Self {
        CareOptions {
            tol: 1e-8,
            branch: CareBranch::Stabilizing,
            newton_sweeps: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CareSolution {
    pub x: Matrix,
    /// `‖AᵀX + XA + XSX + Q‖_F`.
    pub residual: f64,
    /// Residual divided by `2‖A‖‖X‖ + ‖S‖‖X‖² + ‖Q‖`.
    pub relative_residual: f64,
    /// Largest real part of `eig(A + S X)`.
    pub closed_loop_max_real: f64,
}

/// `‖AᵀX + XA + XSX + Q‖_F`.
pub fn care_residual(a: &Matrix, s: &Matrix, q: &Matrix, x: &Matrix) -> f64 {
    fro(&(a.transpose() * x + x * a + x * s * x + q))
}

/// Stabilizing solution of `AᵀX + XA + XSX + Q = 0`.
pub fn solve_care(a: &Matrix, s: &Matrix, q: &Matrix) -> Result<Matrix> {
    solve_care_with(a, s, q, CareOptions::default()).map(|sol| sol.x)
}

pub fn solve_care_with(a: &Matrix, s: &Matrix, q: &Matrix, opts: CareOptions) -> Result<CareSolution> {
    match solve_unchecked(a, s, q, opts) {
        Err(e @ (MorError::Residual { .. } | MorError::NoStabilizingSolution(_))) => {
            Err(imaginary_axis_diagnosis(a, s, q).unwrap_or(e))
        }
        other => other,
    }
}

/// Names a Hamiltonian eigenvalue on the imaginary axis, if there is one.
fn imaginary_axis_diagnosis(a: &Matrix, s: &Matrix, q: &Matrix) -> Option<MorError> {
    let h = hamiltonian(a, s, q);
    let tol = 1e-10 * fro(&h);
    let spec = eigenvalues(&h).ok()?;
    let z = spec.eigenvalues.iter().min_by(|x, y| x.re.abs().total_cmp(&y.re.abs()))?;
    (z.re.abs() <= tol).then(|| {
        MorError::NoStabilizingSolution(format!(
            "Hamiltonian has an eigenvalue on the imaginary axis ({:.3e}{:+.3e}i)",
            z.re, z.im
        ))
    })
}

fn hamiltonian(a: &Matrix, s: &Matrix, q: &Matrix) -> Matrix {
    let n = a.nrows();
    let mut h = Matrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(a);
    h.view_mut((0, n), (n, n)).copy_from(s);
    h.view_mut((n, 0), (n, n)).copy_from(&(-q));
    h.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));
    h
}

fn solve_unchecked(a: &Matrix, s: &Matrix, q: &Matrix, opts: CareOptions) -> Result<CareSolution> {
    ensure_square(a, "A")?;
    let n = a.nrows();
    for (mtx, name) in [(s, "S"), (q, "Q")] {
        if mtx.shape() != (n, n) {
            return Err(MorError::Dimension(format!(
                "CARE: {name} is {}x{}, expected {n}x{n}",
                mtx.nrows(),
                mtx.ncols()
            )));
        }
    }
    ensure_finite(a, "A")?;
    ensure_finite(s, "S")?;
    ensure_finite(q, "Q")?;
    check_psd(s, "S")?;
    check_psd(q, "Q")?;
    if n == 0 {
        return Ok(CareSolution {
            x: Matrix::zeros(0, 0),
            residual: 0.0,
            relative_residual: 0.0,
            closed_loop_max_real: f64::NEG_INFINITY,
        });
    }

    let s = symmetrize(s);
    let q = symmetrize(q);
    let mut x = hamiltonian_subspace_solution(a, &s, &q, CareBranch::Stabilizing)?;
    if opts.branch == CareBranch::AntiStabilizing {
        x = anti_from_stabilizing(a, &s, &q, x, opts.newton_sweeps)?;
    }

    let mut res = care_residual(a, &s, &q, &x);
    for _ in 0..opts.newton_sweeps {
        let Some(cand) = newton_step(a, &s, &q, &x) else {
            break;
        };
        let cres = care_residual(a, &s, &q, &cand);
        if cres < res {
            x = cand;
            res = cres;
        } else {
            break;
        }
    }

    let closed = a + &s * &x;
    let spec = eigenvalues(&closed)?;
    let branch_ok = match opts.branch {
        CareBranch::Stabilizing => spec.max_real_part < 0.0,
        CareBranch::AntiStabilizing => spec.eigenvalues.iter().all(|z| z.re > 0.0),
    };
    if !branch_ok {
        return Err(MorError::NoStabilizingSolution(format!(
            "closed-loop matrix A + SX does not have the requested spectrum (max Re = {:.3e})",
            spec.max_real_part
        )));
    }
    let nx = fro(&x);
    let scale = 2.0 * fro(a) * nx + fro(&s) * nx * nx + fro(&q);
    let relative_residual = if scale > 0.0 { res / scale } else { res };
    if relative_residual > opts.tol {
        return Err(MorError::Residual {
            what: "CARE",
            residual: relative_residual,
            bound: opts.tol,
        });
    }
    Ok(CareSolution {
        x,
        residual: res,
        relative_residual,
        closed_loop_max_real: spec.max_real_part,
    })
}

fn check_psd(m: &Matrix, name: &str) -> Result<()> {
    let nrm = fro(m);
    if nrm == 0.0 {
        return Ok(());
    }
    if fro(&(m - m.transpose())) > 1e-10 * nrm {
        return Err(MorError::Precondition(format!("{name} is not symmetric")));
    }
    let ev = symmetrize(m).symmetric_eigenvalues();
    let min = ev.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -1e-10 * nrm {
        return Err(MorError::Precondition(format!(
            "{name} is not positive semidefinite (min eigenvalue {min:.3e})"
        )));
    }
    Ok(())
}

/// Solution read off the stable (or anti-stable) invariant subspace of
/// `H = [[A, S], [-Q, -Aᵀ]]`, obtained through the matrix sign function.
fn hamiltonian_subspace_solution(a: &Matrix, s: &Matrix, q: &Matrix, branch: CareBranch) -> Result<Matrix> {
    let n = a.nrows();
    let sign = matrix_sign(hamiltonian(a, s, q))?;
    let w11 = sign.view((0, 0), (n, n)).into_owned();
    let w12 = sign.view((0, n), (n, n)).into_owned();
    let w21 = sign.view((n, 0), (n, n)).into_owned();
    let w22 = sign.view((n, n), (n, n)).into_owned();
    let id = Matrix::identity(n, n);

    // Stable subspace: (sign(H) + I)[I; X] = 0; anti-stable: (sign(H) - I)[I; X] = 0.
    let sgn = match branch {
        CareBranch::Stabilizing => 1.0,
        CareBranch::AntiStabilizing => -1.0,
    };
    let mut lhs = Matrix::zeros(2 * n, n);
    lhs.view_mut((0, 0), (n, n)).copy_from(&w12);
    lhs.view_mut((n, 0), (n, n)).copy_from(&(&w22 + &id * sgn));
    let mut rhs = Matrix::zeros(2 * n, n);
    rhs.view_mut((0, 0), (n, n)).copy_from(&(-(&w11 + &id * sgn)));
    rhs.view_mut((n, 0), (n, n)).copy_from(&(-w21));

    let qr = lhs.qr();
    let r = qr.r();
    let diag_max = (0..n).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    let diag_min = (0..n).map(|i| r[(i, i)].abs()).fold(f64::INFINITY, f64::min);
    if !(diag_min > 1e-14 * diag_max) {
        return Err(MorError::NoStabilizingSolution(
            "invariant subspace is not a graph subspace".into(),
        ));
    }
    let qtb = qr.q().transpose() * rhs;
    let x = r
        .solve_upper_triangular(&qtb)
        .ok_or_else(|| MorError::NoStabilizingSolution("singular subspace basis".into()))?;
    if !x.iter().all(|v| v.is_finite()) {
        return Err(MorError::NoStabilizingSolution("non-finite solution".into()));
    }
    Ok(symmetrize(&x))
}

/// Anti-stabilizing solution `X₋ = X₊ + Z⁻¹` from the stabilizing one, where
/// `(A + SX₊)Z + Z(A + SX₊)ᵀ + S = 0`.
fn anti_from_stabilizing(a: &Matrix, s: &Matrix, q: &Matrix, xp: Matrix, sweeps: usize) -> Result<Matrix> {
    let mut xp = xp;
    let mut res = care_residual(a, s, q, &xp);
    for _ in 0..sweeps {
        let Some(cand) = newton_step(a, s, q, &xp) else { break };
        let cres = care_residual(a, s, q, &cand);
        if cres < res {
            xp = cand;
            res = cres;
        } else {
            break;
        }
    }
    let acl = a + s * &xp;
    let (z, _) = solve_lyapunov_with(&acl, s, SolveOptions::lenient()).map_err(|e| {
        MorError::NoStabilizingSolution(format!("anti-stabilizing branch: {e}"))
    })?;
    let zi = z
        .clone()
        .try_inverse()
        .filter(|m| m.iter().all(|v| v.is_finite()))
        .ok_or_else(|| {
            MorError::NoStabilizingSolution(
                "anti-stabilizing branch does not exist ((A, S) not controllable)".into(),
            )
        })?;
    Ok(symmetrize(&(xp + zi)))
}

/// Newton iteration for the matrix sign function with determinant scaling.
fn matrix_sign(mut z: Matrix) -> Result<Matrix> {
    let dim = z.nrows();
    const MAX_ITER: usize = 100;
    let mut scaled = true;
    let mut prev_delta = f64::INFINITY;
    for _ in 0..MAX_ITER {
        let lu = z.clone().lu();
        let det_log = (0..dim)
            .map(|i| lu.u()[(i, i)].abs().ln())
            .sum::<f64>();
        let zinv = lu.try_inverse().ok_or_else(|| {
            MorError::NoStabilizingSolution("Hamiltonian has eigenvalues on the imaginary axis".into())
        })?;
        if !zinv.iter().all(|v| v.is_finite()) || !det_log.is_finite() {
            return Err(MorError::NoStabilizingSolution(
                "Hamiltonian has eigenvalues on the imaginary axis".into(),
            ));
        }
        let c = if scaled { (-det_log / dim as f64).exp() } else { 1.0 };
        let next = (&z * c + zinv / c) * 0.5;
        let delta = (&next - &z).norm();
        let nn = next.norm();
        z = next;
        if delta <= 1e-2 * nn {
            scaled = false;
        }
        if delta <= 1e-13 * nn {
            return Ok(z);
        }
        // Past the quadratic phase the update stalls at the rounding floor.
        if !scaled && delta <= 1e-6 * nn && delta > 0.5 * prev_delta {
            return Ok(z);
        }
        prev_delta = delta;
    }
    let check = (&z * &z - Matrix::identity(dim, dim)).norm() / z.norm().powi(2).max(1.0);
    if check < 1e-6 {
        Ok(z)
    } else {
        Err(MorError::NoConvergence {
            what: "matrix sign iteration",
            iterations: MAX_ITER,
        })
    }
}

/// One Newton step: solve `(A+SX)ᵀ X⁺ + X⁺ (A+SX) - XSX + Q = 0`.
fn newton_step(a: &Matrix, s: &Matrix, q: &Matrix, x: &Matrix) -> Option<Matrix> {
    let ac = a + s * x;
    let rhs = q - x * s * x;
    solve_sylvester_with(&ac.transpose(), &ac, &rhs, SolveOptions::lenient())
        .ok()
        .map(|(xn, _)| symmetrize(&xn))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s1(v: f64) -> Matrix {
        Matrix::from_element(1, 1, v)
    }

    #[test]
    fn scalar_stabilizing_root() {
        let x = solve_care(&s1(-2.0), &s1(1.0), &s1(3.0)).unwrap();
        assert!((x[(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scalar_anti_stabilizing_root() {
        let opts = CareOptions {
            branch: CareBranch::AntiStabilizing,
            ..CareOptions::default()
        };
        let sol = solve_care_with(&s1(-2.0), &s1(1.0), &s1(3.0), opts).unwrap();
        assert!((sol.x[(0, 0)] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_quadratic_term_is_lyapunov() {
        let x = solve_care(&s1(-1.0), &s1(0.0), &s1(4.0)).unwrap();
        assert!((x[(0, 0)] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn imaginary_axis_hamiltonian_rejected() {
        // A = 0, S = 0, Q = 0: every eigenvalue of H is zero.
        let err = solve_care(&s1(0.0), &s1(0.0), &s1(0.0));
        assert!(err.is_err());
    }

    #[test]
    fn indefinite_q_rejected() {
        let err = solve_care(&s1(-1.0), &s1(1.0), &s1(-1.0));
        assert!(matches!(err, Err(MorError::Precondition(_))));
    }
}
