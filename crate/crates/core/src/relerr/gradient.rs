use nalgebra::DMatrixView;

use super::gramians::{compute_gramians, h2_norm_delta_mul_forms, ErrorSystemGramians, Terms};
use super::RomCandidate;
use crate::error::{MorError, Result};
use crate::linalg::{fro, inverse, Matrix};
use crate::ss::StateSpace;

/// Left-hand sides of the three first-order optimality conditions.
#[derive(Debug, Clone)]
pub struct OpcResiduals {
    /// `Q̂12ᵀP12 + Q̂22P̂22 + X̄`.
    pub opc1: Matrix,
    /// `Q̂12ᵀB + Q̂22B̄r + Ȳ`.
    pub opc2: Matrix,
    /// `-(DDᵀ)⁻¹CP12 + (DDᵀ)⁻¹C̄rP̂22 + Z̄`.
    pub opc3: Matrix,
}

impl OpcResiduals {
    pub fn norms(&self) -> [f64; 3] {
        [fro(&self.opc1), fro(&self.opc2), fro(&self.opc3)]
    }
}

/// Closed-form deviations of the optimality conditions under
/// `V̄r = P12P̂22⁻¹`, `W̄r = -Q̂12Q̂22⁻¹`.
#[derive(Debug, Clone)]
pub struct Deviations {
    pub d1: Matrix,
    pub d2: Matrix,
    pub d3: Matrix,
}

#[derive(Debug, Clone)]
pub struct GradientBundle {
    pub d_ar: Matrix,
    pub d_br: Matrix,
    pub d_cr: Matrix,
    pub xbar: Matrix,
    pub ybar: Matrix,
    pub zbar: Matrix,
    pub opc: OpcResiduals,
    /// `None` when `P̂22` or `Q̂22` is singular.
    pub deviations: Option<Deviations>,
    pub gramians: ErrorSystemGramians,
    /// `‖Δ_mul‖²_H2`.
    pub objective: f64,
}

/// `J = ‖Δ_mul‖²_H2` for a minimum-phase reduced model.
pub fn objective(full: &StateSpace, rom: &StateSpace) -> Result<f64> {
    let g = compute_gramians(full, rom)?;
    let (c, _) = h2_norm_delta_mul_forms(&g, full, rom)?;
    Ok(c * c)
}

fn block(m: &Matrix, (r0, c0): (usize, usize), (nr, nc): (usize, usize)) -> Matrix {
    let v: DMatrixView<f64> = m.view((r0, c0), (nr, nc));
    v.into_owned()
}

/// Gradients of `J` with respect to `(Ār, B̄r, C̄r)` and the optimality residuals.
pub fn gradients(full: &StateSpace, rom: &StateSpace) -> Result<GradientBundle> {
    let g = compute_gramians(full, rom)?;
    let t = Terms::new(full, rom)?;
    let (n, r) = (full.n(), rom.n());
    let qp = g.q_mul() * g.p_mul();
    let qp31 = block(&qp, (n + r, 0), (r, n));
    let qp32 = block(&qp, (n + r, n), (r, r));
    let qp33 = block(&qp, (n + r, n + r), (r, r));
    let (c, cr, di) = (&t.c, &t.cr, &t.di);
    let e = di.transpose() * di;

    let xbar = g.q13.transpose() * &g.p13
        + &g.q23 * g.p23.transpose()
        + g.q23.transpose() * &g.p23
        + &g.q33 * &g.p33;
    let ybar = (-(&qp31 * c.transpose()) + &qp32 * cr.transpose() - &qp33 * cr.transpose())
        * di.transpose();
    let zbar = di.transpose()
        * (di * c * &g.p13 - di * cr * &g.p23 - di * cr * g.p23.transpose() + di * cr * &g.p33)
        + di.transpose() * rom.b().transpose() * (&qp32 - &qp33);

    let opc = OpcResiduals {
        opc1: g.q12.transpose() * &g.p12 + &g.q22 * &g.p22 + &xbar,
        opc2: g.q12.transpose() * full.b() + &g.q22 * rom.b() + &ybar,
        opc3: -(&e * c * &g.p12) + &e * cr * &g.p22 + &zbar,
    };
    let deviations = deviation_formulas(full, &g).ok();
    let (jc, _) = h2_norm_delta_mul_forms(&g, full, rom)?;
    Ok(GradientBundle {
        d_ar: &opc.opc1 * 2.0,
        d_br: &opc.opc2 * 2.0,
        d_cr: &opc.opc3 * 2.0,
        xbar,
        ybar,
        zbar,
        opc,
        deviations,
        gramians: g,
        objective: jc * jc,
    })
}

fn deviation_formulas(full: &StateSpace, g: &ErrorSystemGramians) -> Result<Deviations> {
    let p22i = inverse(&g.p22, "P̂22")?;
    let q22i = inverse(&g.q22, "Q̂22")?;
    let di = inverse(full.d(), "feedthrough D")?;
    let (b, c) = (full.b(), full.c());
    let q13t = g.q13.transpose();
    let p12t = g.p12.transpose();
    let d1 = &q13t * &g.p13 + &g.q33 * &g.p33;
    let d2 = (-(&q13t * &g.p11) + &q13t * &g.p12 * &p22i * &p12t
        - &q13t * &g.p13 * &p22i * &p12t
        - &g.q33 * g.p13.transpose()
        - &g.q33 * &g.p33 * &p22i * &p12t)
        * c.transpose()
        * di.transpose();
    let bq = b.transpose() * &g.q13;
    let d3 = di.transpose()
        * (&di * c * &g.p13 + &di * c * &g.p12 * &p22i * &g.p33
            + &bq * &q22i * &q13t * &g.p12
            - &bq * &q22i * &q13t * &g.p13
            - &bq * &g.p22
            - &bq * &g.p33);
    Ok(Deviations { d1, d2, d3 })
}

/// Deviation matrices for a projected reduced model.
pub fn deviations(full: &StateSpace, rom: &RomCandidate) -> Result<Deviations> {
    if rom.v.is_none() || rom.w.is_none() {
        return Err(MorError::Precondition(
            "deviations require a projection-based reduced model".into(),
        ));
    }
    let g = compute_gramians(full, &rom.rom)?;
    deviation_formulas(full, &g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relerr::build_delta_mul;
    use crate::ss::h2_norm;

    fn siso(a: f64, b: f64, c: f64, d: f64) -> StateSpace {
        let e = |v| Matrix::from_element(1, 1, v);
        StateSpace::new(e(a), e(b), e(c), e(d)).unwrap()
    }

    fn j(full: &StateSpace, a: f64, b: f64, c: f64) -> f64 {
        let hr = siso(a, b, c, full.d()[(0, 0)]);
        h2_norm(&build_delta_mul(full, &hr).unwrap()).unwrap().powi(2)
    }

    #[test]
    fn scalar_finite_differences() {
        let full = StateSpace::new(
            Matrix::from_row_slice(2, 2, &[-1.0, 0.3, 0.0, -3.0]),
            Matrix::from_row_slice(2, 1, &[1.0, 0.5]),
            Matrix::from_row_slice(1, 2, &[0.7, -0.4]),
            Matrix::from_element(1, 1, 1.0),
        )
        .unwrap();
        let (a, b, c) = (-1.7, 0.6, 0.3);
        let gb = gradients(&full, &siso(a, b, c, 1.0)).unwrap();
        let fd = |f: &dyn Fn(f64) -> f64, x: f64| {
            let h = 1e-6 * (1.0 + x.abs());
            (f(x + h) - f(x - h)) / (2.0 * h)
        };
        let da = fd(&|x| j(&full, x, b, c), a);
        let db = fd(&|x| j(&full, a, x, c), b);
        let dc = fd(&|x| j(&full, a, b, x), c);
        assert!((gb.d_ar[(0, 0)] - da).abs() <= 1e-5 * da.abs().max(1e-3));
        assert!((gb.d_br[(0, 0)] - db).abs() <= 1e-5 * db.abs().max(1e-3));
        assert!((gb.d_cr[(0, 0)] - dc).abs() <= 1e-5 * dc.abs().max(1e-3));
        assert!((gb.objective - j(&full, a, b, c)).abs() < 1e-10);
    }

    #[test]
    fn scalar_d1_hand_substitution() {
        let full = siso(-1.0, 1.0, 1.0, 1.0);
        let rom = RomCandidate::project(&full, Matrix::identity(1, 1), Matrix::identity(1, 1)).unwrap();
        let d = deviations(&full, &rom).unwrap();
        let g = compute_gramians(&full, &rom.rom).unwrap();
        let expect = g.q13[(0, 0)] * g.p13[(0, 0)] + g.q33[(0, 0)] * g.p33[(0, 0)];
        assert!((d.d1[(0, 0)] - expect).abs() < 1e-15);
        assert!(deviations(&full, &RomCandidate::direct(full.clone())).is_err());
    }
}
