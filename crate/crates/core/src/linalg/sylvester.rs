use num_complex::Complex64;

use super::{ensure_finite, ensure_square, fro, symmetrize, to_complex, CMatrix, Matrix, SchurFactor};
use crate::error::{MorError, Result};

/// Tolerances for the Sylvester/Lyapunov solvers.
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Relative residual bound `‖AX + XB + C‖ ≤ tol_rel (‖A‖‖X‖ + ‖X‖‖B‖ + ‖C‖)`.
    pub tol_rel: f64,
    /// Return an error when the bound is not met (otherwise the residual is only reported).
    pub strict: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol_rel: 1e-10,
            strict: true,
        }
    }
}

impl SolveOptions {
    pub fn lenient() -> Self {
        SolveOptions {
            strict: false,
            ..Self::default()
        }
    }
}

const KRONECKER_FALLBACK_LIMIT: usize = 4000;
const SEPARATION_FACTOR: f64 = 1e-12;

/// Relative residual of `AX + XB + C = 0`.
pub fn sylvester_residual(a: &Matrix, b: &Matrix, c: &Matrix, x: &Matrix) -> f64 {
    let r = a * x + x * b + c;
    let scale = fro(a) * fro(x) + fro(x) * fro(b) + fro(c);
    if scale == 0.0 {
        fro(&r)
    } else {
        fro(&r) / scale
    }
}

/// Relative residual of `AP + PA^T + Q = 0`.
pub fn lyapunov_residual(a: &Matrix, q: &Matrix, p: &Matrix) -> f64 {
    sylvester_residual(a, &a.transpose(), q, p)
}

/// Solves `AX + XB + C = 0`.
pub fn solve_sylvester(a: &Matrix, b: &Matrix, c: &Matrix) -> Result<Matrix> {
    solve_sylvester_with(a, b, c, SolveOptions::default()).map(|(x, _)| x)
}

/// Solves `AX + XB + C = 0`, returning the solution and its relative residual.
pub fn solve_sylvester_with(
    a: &Matrix,
    b: &Matrix,
    c: &Matrix,
    opts: SolveOptions,
) -> Result<(Matrix, f64)> {
    check_dims(a, b, c)?;
    let fa = SchurFactor::new(a)?;
    let fb = SchurFactor::new(b)?;
    solve_factored_checked(&fa, &fb, a, b, c, opts)
}

/// Solves `AX + XB + C = 0` with precomputed Schur factors of `A` and `B`.
///
/// `a` and `b` are the factored matrices themselves; they are used for the
/// residual and refinement steps.
pub fn solve_sylvester_factored(
    fa: &SchurFactor,
    fb: &SchurFactor,
    a: &Matrix,
    b: &Matrix,
    c: &Matrix,
    opts: SolveOptions,
) -> Result<(Matrix, f64)> {
    check_dims(a, b, c)?;
    solve_factored_checked(fa, fb, a, b, c, opts)
}

/// Solves `AP + PA^T + Q = 0` for Hurwitz `A`; the result is symmetrized.
pub fn solve_lyapunov(a: &Matrix, q: &Matrix) -> Result<Matrix> {
    solve_lyapunov_with(a, q, SolveOptions::default()).map(|(p, _)| p)
}

pub fn solve_lyapunov_with(a: &Matrix, q: &Matrix, opts: SolveOptions) -> Result<(Matrix, f64)> {
    ensure_square(a, "A")?;
    if q.shape() != a.shape() {
        return Err(MorError::Dimension(format!(
            "Lyapunov: Q is {}x{}, A is {}x{}",
            q.nrows(),
            q.ncols(),
            a.nrows(),
            a.ncols()
        )));
    }
    ensure_finite(q, "Q")?;
    let sym_err = fro(&(q - q.transpose()));
    if sym_err > 1e-10 * fro(q).max(1e-300) {
        return Err(MorError::Precondition(format!(
            "Lyapunov right-hand side is not symmetric (‖Q-Qᵀ‖ = {sym_err:.3e})"
        )));
    }
    let fa = SchurFactor::new(a)?;
    if fa.dim() > 0 && fa.max_real_part() >= 0.0 {
        let z = fa.rightmost();
        return Err(MorError::NotHurwitz { re: z.re, im: z.im });
    }
    let at = a.transpose();
    let (p, res) = solve_factored_checked(&fa, &fa.transposed(), a, &at, q, opts)?;
    Ok((symmetrize(&p), res))
}

/// A matrix with cached Schur factors of itself and its transpose, for
/// repeated Sylvester solves against the same coefficient.
#[derive(Debug, Clone)]
pub struct Factored {
    m: Matrix,
    mt: Matrix,
    f: SchurFactor,
    ft: SchurFactor,
}

impl Factored {
    pub fn new(m: &Matrix) -> Result<Self> {
        let f = SchurFactor::new(m)?;
        let ft = f.transposed();
        Ok(Factored {
            m: m.clone(),
            mt: m.transpose(),
            f,
            ft,
        })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.m
    }

    pub fn transpose(&self) -> Factored {
        Factored {
            m: self.mt.clone(),
            mt: self.m.clone(),
            f: self.ft.clone(),
            ft: self.f.clone(),
        }
    }

    pub fn is_hurwitz(&self) -> bool {
        self.f.dim() == 0 || self.f.max_real_part() < 0.0
    }

    pub fn factor(&self) -> &SchurFactor {
        &self.f
    }
}

/// `AX + XB + C = 0` with cached factors.
pub fn sylvester_cached(a: &Factored, b: &Factored, c: &Matrix) -> Result<Matrix> {
    solve_sylvester_factored(&a.f, &b.f, &a.m, &b.m, c, SolveOptions::default()).map(|(x, _)| x)
}

/// `AP + PAᵀ + Q = 0` with cached factors; `A` must be Hurwitz.
pub fn lyapunov_cached(a: &Factored, q: &Matrix) -> Result<Matrix> {
    if !a.is_hurwitz() {
        let z = a.f.rightmost();
        return Err(MorError::NotHurwitz { re: z.re, im: z.im });
    }
    let p = solve_sylvester_factored(&a.f, &a.ft, &a.m, &a.mt, q, SolveOptions::default())?.0;
    Ok(symmetrize(&p))
}

/// Cholesky-type factor `L` (complex, `n × n`) of the solution of
/// `AP + PAᵀ + BBᵀ = 0`, `P = L Lᴴ`, computed directly on the Schur form
/// without forming `P`.
pub fn lyapunov_factor(a: &Matrix, b: &Matrix) -> Result<CMatrix> {
    ensure_square(a, "A")?;
    if b.nrows() != a.nrows() {
        return Err(MorError::Dimension(format!(
            "Lyapunov factor: B has {} rows, A is {}x{}",
            b.nrows(),
            a.nrows(),
            a.ncols()
        )));
    }
    ensure_finite(b, "B")?;
    let f = SchurFactor::new(a)?;
    let n = f.dim();
    if n > 0 && f.max_real_part() >= 0.0 {
        let z = f.rightmost();
        return Err(MorError::NotHurwitz { re: z.re, im: z.im });
    }
    let t = &f.t;
    // Work on T U Uᴴ + U Uᴴ Tᴴ + B̃ B̃ᴴ = 0 with U upper triangular.
    let mut bt = f.q.adjoint() * to_complex(b);
    let mut u = CMatrix::zeros(n, n);
    for k in (0..n).rev() {
        let lambda = t[(k, k)];
        let beta = bt.row(k).into_owned();
        let bnorm = beta.norm();
        if bnorm == 0.0 {
            continue;
        }
        let tau = bnorm / (-2.0 * lambda.re).sqrt();
        u[(k, k)] = Complex64::new(tau, 0.0);
        if k == 0 {
            break;
        }
        // (T1 + λ̄ I) u = -(t τ² + B1 βᴴ) / τ
        let mut rhs = CMatrix::zeros(k, 1);
        for i in 0..k {
            let mut acc = t[(i, k)] * (tau * tau);
            for j in 0..beta.ncols() {
                acc += bt[(i, j)] * beta[(0, j)].conj();
            }
            rhs[(i, 0)] = -acc / tau;
        }
        let mut col = vec![Complex64::new(0.0, 0.0); k];
        for i in (0..k).rev() {
            let mut acc = rhs[(i, 0)];
            for (j, cj) in col.iter().enumerate().take(k).skip(i + 1) {
                acc -= t[(i, j)] * cj;
            }
            col[i] = acc / (t[(i, i)] + lambda.conj());
        }
        for i in 0..k {
            u[(i, k)] = col[i];
            for j in 0..beta.ncols() {
                let upd = col[i] * beta[(0, j)] / tau;
                bt[(i, j)] -= upd;
            }
        }
    }
    Ok(&f.q * u)
}

/// Dense Kronecker-vectorization solve of `AX + XB + C = 0`:
/// `(I ⊗ A + Bᵀ ⊗ I) vec(X) = -vec(C)`.
pub fn solve_sylvester_kronecker(a: &Matrix, b: &Matrix, c: &Matrix) -> Result<Matrix> {
    check_dims(a, b, c)?;
    let (p, q) = (a.nrows(), b.nrows());
    if p == 0 || q == 0 {
        return Ok(Matrix::zeros(p, q));
    }
    let n = p * q;
    let mut k = Matrix::zeros(n, n);
    for j in 0..q {
        for i in 0..p {
            let row = j * p + i;
            for l in 0..p {
                k[(row, j * p + l)] += a[(i, l)];
            }
            for l in 0..q {
                k[(row, l * p + i)] += b[(l, j)];
            }
        }
    }
    let rhs = nalgebra::DVector::from_iterator(n, c.iter().map(|v| -v));
    let sol = k
        .lu()
        .solve(&rhs)
        .ok_or_else(|| MorError::Singular("Kronecker Sylvester operator".into()))?;
    Ok(Matrix::from_column_slice(p, q, sol.as_slice()))
}

fn check_dims(a: &Matrix, b: &Matrix, c: &Matrix) -> Result<()> {
    ensure_square(a, "A")?;
    ensure_square(b, "B")?;
    if c.nrows() != a.nrows() || c.ncols() != b.nrows() {
        return Err(MorError::Dimension(format!(
            "Sylvester: C is {}x{}, expected {}x{}",
            c.nrows(),
            c.ncols(),
            a.nrows(),
            b.nrows()
        )));
    }
    ensure_finite(c, "C")
}

fn solve_factored_checked(
    fa: &SchurFactor,
    fb: &SchurFactor,
    a: &Matrix,
    b: &Matrix,
    c: &Matrix,
    opts: SolveOptions,
) -> Result<(Matrix, f64)> {
    let (p, q) = (fa.dim(), fb.dim());
    if p == 0 || q == 0 {
        return Ok((Matrix::zeros(p, q), 0.0));
    }
    let sep = separation(fa, fb);
    if sep < SEPARATION_FACTOR * (fa.norm() + fb.norm()) {
        return Err(MorError::IllPosed { separation: sep });
    }

    let mut x = solve_transformed(fa, fb, c);
    let mut res = sylvester_residual(a, b, c, &x);
    // Iterative refinement against the same factorization.
    for _ in 0..2 {
        if res <= opts.tol_rel * 1e-2 {
            break;
        }
        let r = a * &x + &x * b + c;
        let dx = solve_transformed(fa, fb, &r);
        let cand = &x + dx;
        let cres = sylvester_residual(a, b, c, &cand);
        if cres < res {
            x = cand;
            res = cres;
        } else {
            break;
        }
    }
    if res > opts.tol_rel && p * q <= KRONECKER_FALLBACK_LIMIT {
        if let Ok(xk) = solve_sylvester_kronecker(a, b, c) {
            let rk = sylvester_residual(a, b, c, &xk);
            if rk < res {
                x = xk;
                res = rk;
            }
        }
    }
    if opts.strict && res > opts.tol_rel {
        return Err(MorError::Residual {
            what: "Sylvester",
            residual: res,
            bound: opts.tol_rel,
        });
    }
    Ok((x, res))
}

fn separation(fa: &SchurFactor, fb: &SchurFactor) -> f64 {
    let mut sep = f64::INFINITY;
    for la in fa.eigenvalues() {
        for lb in fb.eigenvalues() {
            sep = sep.min((la + lb).norm());
        }
    }
    sep
}

/// Solves `AX + XB + C = 0` in Schur coordinates: `Ta Y + Y Tb + F = 0` with
/// `Y = Qa^H X Qb` and `F = Qa^H C Qb`.
fn solve_transformed(fa: &SchurFactor, fb: &SchurFactor, c: &Matrix) -> Matrix {
    let (p, q) = (fa.dim(), fb.dim());
    let f = fa.q.adjoint() * to_complex(c) * &fb.q;
    let mut y = CMatrix::zeros(p, q);
    let order: Vec<usize> = if fb.lower {
        (0..q).rev().collect()
    } else {
        (0..q).collect()
    };
    let mut rhs = vec![Complex64::new(0.0, 0.0); p];
    for &k in &order {
        for i in 0..p {
            rhs[i] = -f[(i, k)];
        }
        // Coupling with already-solved columns.
        let solved: Box<dyn Iterator<Item = usize>> = if fb.lower {
            Box::new((k + 1)..q)
        } else {
            Box::new(0..k)
        };
        for j in solved {
            let t = fb.t[(j, k)];
            if t != Complex64::new(0.0, 0.0) {
                for i in 0..p {
                    rhs[i] -= y[(i, j)] * t;
                }
            }
        }
        let shift = fb.t[(k, k)];
        triangular_shifted_solve(&fa.t, fa.lower, shift, &mut rhs);
        for i in 0..p {
            y[(i, k)] = rhs[i];
        }
    }
    let x = &fa.q * y * fb.q.adjoint();
    x.map(|z| z.re)
}

/// In-place solve of `(T + shift I) y = rhs` for triangular `T`.
fn triangular_shifted_solve(t: &CMatrix, lower: bool, shift: Complex64, rhs: &mut [Complex64]) {
    let p = t.nrows();
    if lower {
        for i in 0..p {
            let mut acc = rhs[i];
            for l in 0..i {
                acc -= t[(i, l)] * rhs[l];
            }
            rhs[i] = acc / (t[(i, i)] + shift);
        }
    } else {
        for i in (0..p).rev() {
            let mut acc = rhs[i];
            for l in (i + 1)..p {
                acc -= t[(i, l)] * rhs[l];
            }
            rhs[i] = acc / (t[(i, i)] + shift);
        }
    }
}
