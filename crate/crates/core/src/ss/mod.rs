//! State-space realizations and their algebra.

mod norms;
mod spectral;

pub use norms::{
    frequency_response, h2_norm, h2_norm_factored, h2_norm_factored_observability, h2_norm_observability, hinf_norm, log_grid, probe_frequencies,
    FrequencyResponseTable, HINF_DEFAULT_TOL,
};
pub use spectral::{
    conjugate_inverse_of_factor, inverse_spectral_weight, left_spectral_factor, spectral_factor, spectral_factor_with,
    SpectralFactor,
};

use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{MorError, Result};
use crate::linalg::{self, ensure_finite, inverse, to_complex, CMatrix, Matrix, SpectrumSummary};

/// Realization `(A, B, C, D)` of a square `m × m` transfer matrix
/// `H(s) = C (sI - A)⁻¹ B + D` with `n` states.
#[derive(Debug, Clone)]
pub struct StateSpace {
    a: Matrix,
    b: Matrix,
    c: Matrix,
    d: Matrix,
    stable: OnceLock<bool>,
    minimum_phase: OnceLock<bool>,
}

impl PartialEq for StateSpace {
    fn eq(&self, other: &Self) -> bool {
        self.a == other.a && self.b == other.b && self.c == other.c && self.d == other.d
    }
}

impl StateSpace {
    pub fn new(a: Matrix, b: Matrix, c: Matrix, d: Matrix) -> Result<Self> {
        let n = a.nrows();
        let m = d.nrows();
        if !a.is_square() {
            return Err(MorError::Dimension(format!("A is {}x{}", a.nrows(), a.ncols())));
        }
        if m == 0 || !d.is_square() {
            return Err(MorError::Dimension(format!(
                "D must be square and non-empty, got {}x{}",
                d.nrows(),
                d.ncols()
            )));
        }
        if b.shape() != (n, m) {
            return Err(MorError::Dimension(format!(
                "B is {}x{}, expected {n}x{m}",
                b.nrows(),
                b.ncols()
            )));
        }
        if c.shape() != (m, n) {
            return Err(MorError::Dimension(format!(
                "C is {}x{}, expected {m}x{n}",
                c.nrows(),
                c.ncols()
            )));
        }
        ensure_finite(&a, "A")?;
        ensure_finite(&b, "B")?;
        ensure_finite(&c, "C")?;
        ensure_finite(&d, "D")?;
        Ok(StateSpace {
            a,
            b,
            c,
            d,
            stable: OnceLock::new(),
            minimum_phase: OnceLock::new(),
        })
    }

    /// Memoryless gain `H(s) = D`.
    pub fn static_gain(d: Matrix) -> Result<Self> {
        let m = d.nrows();
        Self::new(Matrix::zeros(0, 0), Matrix::zeros(0, m), Matrix::zeros(m, 0), d)
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }
    pub fn b(&self) -> &Matrix {
        &self.b
    }
    pub fn c(&self) -> &Matrix {
        &self.c
    }
    pub fn d(&self) -> &Matrix {
        &self.d
    }
    /// State dimension.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }
    /// Port dimension.
    pub fn m(&self) -> usize {
        self.d.nrows()
    }

    pub fn into_parts(self) -> (Matrix, Matrix, Matrix, Matrix) {
        (self.a, self.b, self.c, self.d)
    }

    /// Same dynamics with a different feedthrough.
    pub fn with_d(&self, d: Matrix) -> Result<Self> {
        Self::new(self.a.clone(), self.b.clone(), self.c.clone(), d)
    }

    pub fn poles(&self) -> Result<SpectrumSummary> {
        linalg::eigenvalues(&self.a)
    }

    pub fn is_stable(&self) -> bool {
        *self
            .stable
            .get_or_init(|| self.poles().map(|s| s.is_hurwitz).unwrap_or(false))
    }

    /// `false` also when `D` is singular.
    pub fn is_minimum_phase(&self) -> bool {
        *self
            .minimum_phase
            .get_or_init(|| zeros(self).map(|s| s.is_hurwitz).unwrap_or(false))
    }

    pub fn require_stable(&self) -> Result<()> {
        if self.is_stable() {
            return Ok(());
        }
        let z = self.poles()?.rightmost().unwrap_or_default();
        Err(MorError::NotHurwitz { re: z.re, im: z.im })
    }

    /// `H(s)` at a complex point.
    pub fn eval(&self, s: Complex64) -> Result<CMatrix> {
        let n = self.n();
        let d = to_complex(&self.d);
        if n == 0 {
            return Ok(d);
        }
        let resolvent = CMatrix::identity(n, n) * s - to_complex(&self.a);
        let lu = resolvent.lu();
        let x = lu
            .solve(&to_complex(&self.b))
            .ok_or_else(|| MorError::Singular(format!("resolvent at s = {s}")))?;
        if !x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(MorError::Singular(format!("resolvent at s = {s}")));
        }
        Ok(to_complex(&self.c) * x + d)
    }

    /// `H(jω)`.
    pub fn eval_jw(&self, omega: f64) -> Result<CMatrix> {
        self.eval(Complex64::new(0.0, omega))
    }

    /// Realization `(T⁻¹AT, T⁻¹B, CT, D)`.
    pub fn similarity(&self, t: &Matrix) -> Result<Self> {
        let ti = inverse(t, "similarity transform")?;
        Self::new(&ti * &self.a * t, &ti * &self.b, &self.c * t, self.d.clone())
    }
}

/// Smallest-to-largest singular value ratio test for rank deficiency.
pub fn is_rank_deficient(d: &Matrix) -> bool {
    let sv = linalg::singular_values(d);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) => hi == 0.0 || lo < 1e-12 * hi,
        _ => true,
    }
}

/// Replaces a rank-deficient `D` by `εI`.
pub fn regularize_d(sys: &StateSpace, epsilon: f64) -> Result<StateSpace> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(MorError::Precondition(format!("epsilon must be positive, got {epsilon}")));
    }
    if is_rank_deficient(sys.d()) {
        sys.with_d(Matrix::identity(sys.m(), sys.m()) * epsilon)
    } else {
        Ok(sys.clone())
    }
}

/// Realization of `H⁻¹(s)`: `(A - BD⁻¹C, -BD⁻¹, D⁻¹C, D⁻¹)`.
pub fn inverse_realization(sys: &StateSpace) -> Result<StateSpace> {
    let di = inverse(sys.d(), "feedthrough D")?;
    let bdi = sys.b() * &di;
    StateSpace::new(
        sys.a() - &bdi * sys.c(),
        -bdi,
        &di * sys.c(),
        di,
    )
}

/// Invariant zeros of a system with invertible `D`: `eig(A - BD⁻¹C)`.
pub fn zeros(sys: &StateSpace) -> Result<SpectrumSummary> {
    let di = inverse(sys.d(), "feedthrough D")?;
    linalg::eigenvalues(&(sys.a() - sys.b() * di * sys.c()))
}

/// Realization of the para-Hermitian conjugate `H*(s) = Hᵀ(-s)`.
pub fn conjugate(sys: &StateSpace) -> Result<StateSpace> {
    StateSpace::new(
        -sys.a().transpose(),
        -sys.c().transpose(),
        sys.b().transpose(),
        sys.d().transpose(),
    )
}

/// Cascade: `first` drives `then`, i.e. the transfer matrix `then(s)·first(s)`.
pub fn series(first: &StateSpace, then: &StateSpace) -> Result<StateSpace> {
    if first.m() != then.m() {
        return Err(MorError::Dimension(format!(
            "series: port mismatch {} vs {}",
            first.m(),
            then.m()
        )));
    }
    let (n1, n2) = (first.n(), then.n());
    let mut a = Matrix::zeros(n1 + n2, n1 + n2);
    a.view_mut((0, 0), (n1, n1)).copy_from(first.a());
    a.view_mut((n1, 0), (n2, n1)).copy_from(&(then.b() * first.c()));
    a.view_mut((n1, n1), (n2, n2)).copy_from(then.a());
    let b = stack_rows(first.b(), &(then.b() * first.d()));
    let c = stack_cols(&(then.d() * first.c()), then.c());
    StateSpace::new(a, b, c, then.d() * first.d())
}

/// Parallel difference `G1(s) - G2(s)`.
pub fn subtract(g1: &StateSpace, g2: &StateSpace) -> Result<StateSpace> {
    if g1.m() != g2.m() {
        return Err(MorError::Dimension(format!(
            "subtract: port mismatch {} vs {}",
            g1.m(),
            g2.m()
        )));
    }
    StateSpace::new(
        block_diag(g1.a(), g2.a()),
        stack_rows(g1.b(), g2.b()),
        stack_cols(g1.c(), &(-g2.c())),
        g1.d() - g2.d(),
    )
}

pub fn block_diag(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut(a.shape(), b.shape()).copy_from(b);
    out
}

pub fn stack_rows(top: &Matrix, bottom: &Matrix) -> Matrix {
    let mut out = DMatrix::zeros(top.nrows() + bottom.nrows(), top.ncols());
    out.view_mut((0, 0), top.shape()).copy_from(top);
    out.view_mut((top.nrows(), 0), bottom.shape()).copy_from(bottom);
    out
}

pub fn stack_cols(left: &Matrix, right: &Matrix) -> Matrix {
    let mut out = DMatrix::zeros(left.nrows(), left.ncols() + right.ncols());
    out.view_mut((0, 0), left.shape()).copy_from(left);
    out.view_mut((0, left.ncols()), right.shape()).copy_from(right);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn siso(a: f64, b: f64, c: f64, d: f64) -> StateSpace {
        StateSpace::new(
            Matrix::from_element(1, 1, a),
            Matrix::from_element(1, 1, b),
            Matrix::from_element(1, 1, c),
            Matrix::from_element(1, 1, d),
        )
        .unwrap()
    }

    #[test]
    fn regularize_zero_d() {
        let sys = StateSpace::new(
            Matrix::identity(2, 2) * -1.0,
            Matrix::identity(2, 2),
            Matrix::identity(2, 2),
            Matrix::zeros(2, 2),
        )
        .unwrap();
        let r = regularize_d(&sys, 0.001).unwrap();
        assert_eq!(r.d(), &(Matrix::identity(2, 2) * 0.001));
    }

    #[test]
    fn regularize_keeps_full_rank() {
        let sys = siso(-1.0, 1.0, 1.0, 1.0).with_d(Matrix::identity(1, 1)).unwrap();
        assert_eq!(regularize_d(&sys, 0.5).unwrap(), sys);
    }

    #[test]
    fn regularize_near_singular() {
        let d = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1e-15]));
        let sys = StateSpace::static_gain(d).unwrap();
        let r = regularize_d(&sys, 0.01).unwrap();
        assert_eq!(r.d(), &(Matrix::identity(2, 2) * 0.01));
        assert!(regularize_d(&sys, 0.0).is_err());
    }

    #[test]
    fn inverse_of_first_order() {
        let inv = inverse_realization(&siso(-1.0, 1.0, 1.0, 1.0)).unwrap();
        assert_eq!(inv, siso(-2.0, -1.0, 1.0, 1.0));
        let g = inverse_realization(&StateSpace::static_gain(Matrix::from_element(1, 1, 2.0)).unwrap())
            .unwrap();
        assert_eq!(g.d()[(0, 0)], 0.5);
        assert!(inverse_realization(&siso(-1.0, 1.0, 1.0, 0.0)).is_err());
    }

    #[test]
    fn scalar_zeros() {
        let z = zeros(&siso(-1.0, 1.0, 1.0, 1.0)).unwrap();
        assert!((z.eigenvalues[0].re + 2.0).abs() < 1e-15 && z.is_hurwitz);
        let z = zeros(&siso(-1.0, 1.0, -3.0, 1.0)).unwrap();
        assert!((z.eigenvalues[0].re - 2.0).abs() < 1e-15 && !z.is_hurwitz);
        assert!(!siso(-1.0, 1.0, -3.0, 1.0).is_minimum_phase());
    }

    #[test]
    fn decoupled_zeros_are_union() {
        let a = Matrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -3.0]);
        let sys = StateSpace::new(
            a,
            Matrix::identity(2, 2),
            Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -5.0]),
            Matrix::identity(2, 2),
        )
        .unwrap();
        let z = zeros(&sys).unwrap();
        assert!((z.eigenvalues[0].re + 2.0).abs() < 1e-14);
        assert!((z.eigenvalues[1].re - 2.0).abs() < 1e-14);
    }

    #[test]
    fn series_and_subtract_pointwise() {
        let g1 = siso(-1.0, 1.0, 1.0, 0.0);
        let g2 = siso(-2.0, 1.0, 1.0, 0.0);
        let s = series(&g1, &g2).unwrap();
        for w in [0.0, 0.3, 1.0, 7.0] {
            let jw = Complex64::new(0.0, w);
            let expect = Complex64::new(1.0, 0.0) / ((jw + 1.0) * (jw + 2.0));
            assert!((s.eval(jw).unwrap()[(0, 0)] - expect).norm() < 1e-14);
        }
        let id = StateSpace::static_gain(Matrix::identity(1, 1)).unwrap();
        let h = series(&g1, &id).unwrap();
        assert!((h.eval_jw(2.0).unwrap() - g1.eval_jw(2.0).unwrap()).norm() < 1e-15);
        let zero = subtract(&g1, &g1).unwrap();
        assert!(zero.eval_jw(1.0).unwrap().norm() < 1e-15);
        assert!(series(&g1, &StateSpace::static_gain(Matrix::identity(2, 2)).unwrap()).is_err());
    }

    #[test]
    fn dimension_validation() {
        let err = StateSpace::new(
            Matrix::zeros(2, 2),
            Matrix::zeros(2, 1),
            Matrix::zeros(1, 3),
            Matrix::zeros(1, 1),
        );
        assert!(matches!(err, Err(MorError::Dimension(_))));
    }
}
