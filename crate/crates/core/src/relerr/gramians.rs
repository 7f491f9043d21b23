use super::require_shared_d;
use crate::error::{MorError, Result};
use crate::linalg::{fro, inverse, lyapunov_cached, symmetrize, sylvester_cached, Factored, Matrix};
use crate::ss::StateSpace;

/// Block gramians of `Δ_mul` in the state order `(x, x̄r, x̂)`.
///
/// `P_mul = [P11 P12 P13; P12ᵀ P22 P23; P13ᵀ P23ᵀ P33]` and likewise `Q_mul`.
#[derive(Debug, Clone)]
pub struct ErrorSystemGramians {
    pub p11: Matrix,
    pub p12: Matrix,
    pub p13: Matrix,
    pub p22: Matrix,
    pub p23: Matrix,
    pub p33: Matrix,
    pub q11: Matrix,
    pub q12: Matrix,
    pub q13: Matrix,
    pub q22: Matrix,
    pub q23: Matrix,
    pub q33: Matrix,
}

fn assemble(
    b11: &Matrix,
    b12: &Matrix,
    b13: &Matrix,
    b22: &Matrix,
    b23: &Matrix,
    b33: &Matrix,
) -> Matrix {
    let (n, r) = b12.shape();
    let mut m = Matrix::zeros(n + 2 * r, n + 2 * r);
    m.view_mut((0, 0), (n, n)).copy_from(b11);
    m.view_mut((0, n), (n, r)).copy_from(b12);
    m.view_mut((0, n + r), (n, r)).copy_from(b13);
    m.view_mut((n, 0), (r, n)).copy_from(&b12.transpose());
    m.view_mut((n, n), (r, r)).copy_from(b22);
    m.view_mut((n, n + r), (r, r)).copy_from(b23);
    m.view_mut((n + r, 0), (r, n)).copy_from(&b13.transpose());
    m.view_mut((n + r, n), (r, r)).copy_from(&b23.transpose());
    m.view_mut((n + r, n + r), (r, r)).copy_from(b33);
    m
}

impl ErrorSystemGramians {
    pub fn p_mul(&self) -> Matrix {
        assemble(&self.p11, &self.p12, &self.p13, &self.p22, &self.p23, &self.p33)
    }

    pub fn q_mul(&self) -> Matrix {
        assemble(&self.q11, &self.q12, &self.q13, &self.q22, &self.q23, &self.q33)
    }

    /// Relative deviations from the three structural identities
    /// `Q̂12 + Q̂13 = 0`, `Q̂33 + Q̂23 = 0`, `Q̂33 - Q̂22 = 0`.
    pub fn identity_residuals(&self) -> [f64; 3] {
        let rel = |d: f64, s: f64| if s == 0.0 { d } else { d / s };
        [
            rel(fro(&(&self.q12 + &self.q13)), fro(&self.q12)),
            rel(fro(&(&self.q33 + &self.q23)), fro(&self.q33)),
            rel(fro(&(&self.q33 - &self.q22)), fro(&self.q33)),
        ]
    }

    /// Relative residuals of the defining block equations, in the order
    /// `P11, P12, P13, P22, P23, P33, Q33, Q23, Q13, Q22, Q12, Q11`.
    pub fn block_residuals(&self, full: &StateSpace, rom: &StateSpace) -> Result<Vec<f64>> {
        let t = Terms::new(full, rom)?;
        let g = self;
        let (a, ar, ad) = (full.a(), rom.a(), &t.ad);
        let rel = |terms: &[&Matrix], res: Matrix| {
            let s: f64 = terms.iter().map(|m| fro(m)).sum();
            if s == 0.0 { fro(&res) } else { fro(&res) / s }
        };
        let mut out = Vec::with_capacity(12);
        let bb = full.b() * full.b().transpose();
        let (l, r) = (a * &g.p11, &g.p11 * a.transpose());
        out.push(rel(&[&l, &r, &bb], &l + &r + &bb));
        let (l, r, c) = (a * &g.p12, &g.p12 * ar.transpose(), full.b() * rom.b().transpose());
        out.push(rel(&[&l, &r, &c], &l + &r + &c));
        let (l, r, c) = (a * &g.p13, &g.p13 * ad.transpose(), t.p13_rhs(g));
        out.push(rel(&[&l, &r, &c], &l + &r + &c));
        let (l, r, c) = (ar * &g.p22, &g.p22 * ar.transpose(), rom.b() * rom.b().transpose());
        out.push(rel(&[&l, &r, &c], &l + &r + &c));
        let (l, r, c) = (ar * &g.p23, &g.p23 * ad.transpose(), t.p23_rhs(g));
        out.push(rel(&[&l, &r, &c], &l + &r + &c));
        let (l, r, c) = (ad * &g.p33, &g.p33 * ad.transpose(), t.p33_rhs(g));
        out.push(rel(&[&l, &r, &c], &l + &r + &c));
        let (l, r, c) = (ad.transpose() * &g.q33, &g.q33 * ad, t.crecr.clone());
        out.push(rel(&[&l, &r, &c], &l + &r + &c));
        let (l, r, c) = (ar.transpose() * &g.q23, &g.q23 * ad, t.q23_rhs(g));
        out.push(rel(&[&l, &r, &c], &l + &r + &c));
        let (l, r, c) = (a.transpose() * &g.q13, &g.q13 * ad, t.q13_rhs(g));
        out.push(rel(&[&l, &r, &c], &l + &r + &c));
        let (l, r, c) = (ar.transpose() * &g.q22, &g.q22 * ar, t.q22_rhs(g));
        out.push(rel(&[&l, &r, &c], &l + &r + &c));
        let (l, r, c) = (a.transpose() * &g.q12, &g.q12 * ar, t.q12_rhs(g));
        out.push(rel(&[&l, &r, &c], &l + &r + &c));
        let (l, r, c) = (a.transpose() * &g.q11, &g.q11 * a, t.q11_rhs(g));
        out.push(rel(&[&l, &r, &c], &l + &r + &c));
        Ok(out)
    }
}

/// Recurring products of the `Δ_mul` realization.
pub(crate) struct Terms {
    pub di: Matrix,
    /// `K = B̄r D⁻¹`.
    pub k: Matrix,
    /// `Â = Ār - B̄r D⁻¹ C̄r`.
    pub ad: Matrix,
    pub c: Matrix,
    pub cr: Matrix,
    /// `C̄rᵀ D⁻ᵀD⁻¹ C̄r`.
    pub crecr: Matrix,
    /// `Cᵀ D⁻ᵀD⁻¹ C̄r`.
    pub cecr: Matrix,
    /// `Cᵀ D⁻ᵀD⁻¹ C`.
    pub cec: Matrix,
}

impl Terms {
    pub fn new(full: &StateSpace, rom: &StateSpace) -> Result<Self> {
        require_shared_d(full, rom)?;
        let di = inverse(full.d(), "feedthrough D")?;
        let k = rom.b() * &di;
        let ad = rom.a() - &k * rom.c();
        let e = di.transpose() * &di;
        let c = full.c().clone();
        let cr = rom.c().clone();
        Ok(Terms {
            crecr: cr.transpose() * &e * &cr,
            cecr: c.transpose() * &e * &cr,
            cec: c.transpose() * &e * &c,
            di,
            k,
            ad,
            c,
            cr,
        })
    }

    fn p13_rhs(&self, g: &ErrorSystemGramians) -> Matrix {
        (&g.p12 * self.cr.transpose() - &g.p11 * self.c.transpose()) * self.k.transpose()
    }
    fn p23_rhs(&self, g: &ErrorSystemGramians) -> Matrix {
        (&g.p22 * self.cr.transpose() - g.p12.transpose() * self.c.transpose()) * self.k.transpose()
    }
    fn p33_rhs(&self, g: &ErrorSystemGramians) -> Matrix {
        let m = &self.k * (&self.cr * &g.p23 - &self.c * &g.p13);
        &m + m.transpose()
    }
    fn q23_rhs(&self, g: &ErrorSystemGramians) -> Matrix {
        self.cr.transpose() * self.k.transpose() * &g.q33 - &self.crecr
    }
    fn q13_rhs(&self, g: &ErrorSystemGramians) -> Matrix {
        &self.cecr - self.c.transpose() * self.k.transpose() * &g.q33
    }
    fn q22_rhs(&self, g: &ErrorSystemGramians) -> Matrix {
        let m = &g.q23 * &self.k * &self.cr;
        &m + m.transpose() + &self.crecr
    }
    fn q12_rhs(&self, g: &ErrorSystemGramians) -> Matrix {
        &g.q13 * &self.k * &self.cr
            - self.c.transpose() * self.k.transpose() * g.q23.transpose()
            - &self.cecr
    }
    fn q11_rhs(&self, g: &ErrorSystemGramians) -> Matrix {
        let m = &g.q13 * &self.k * &self.c;
        &self.cec - &m - m.transpose()
    }
}

/// Block gramians of `Δ_mul`, solved in dependency order.
pub fn compute_gramians(full: &StateSpace, rom: &StateSpace) -> Result<ErrorSystemGramians> {
    full.require_stable()?;
    rom.require_stable()?;
    let t = Terms::new(full, rom)?;
    let fa = Factored::new(full.a())?;
    let fat = fa.transpose();
    let far = Factored::new(rom.a())?;
    let fart = far.transpose();
    let fad = Factored::new(&t.ad)?;
    if !fad.is_hurwitz() {
        let z = crate::linalg::eigenvalues(&t.ad)?.rightmost().unwrap_or_default();
        return Err(MorError::NotMinimumPhase { re: z.re, im: z.im });
    }
    let fadt = fad.transpose();

    let mut g = ErrorSystemGramians {
        p11: lyapunov_cached(&fa, &(full.b() * full.b().transpose()))?,
        p12: Matrix::zeros(0, 0),
        p13: Matrix::zeros(0, 0),
        p22: lyapunov_cached(&far, &(rom.b() * rom.b().transpose()))?,
        p23: Matrix::zeros(0, 0),
        p33: Matrix::zeros(0, 0),
        q11: Matrix::zeros(0, 0),
        q12: Matrix::zeros(0, 0),
        q13: Matrix::zeros(0, 0),
        q22: Matrix::zeros(0, 0),
        q23: Matrix::zeros(0, 0),
        q33: lyapunov_cached(&fadt, &t.crecr)?,
    };
    g.p12 = sylvester_cached(&fa, &fart, &(full.b() * rom.b().transpose()))?;
    g.p13 = sylvester_cached(&fa, &fadt, &t.p13_rhs(&g))?;
    g.p23 = sylvester_cached(&far, &fadt, &t.p23_rhs(&g))?;
    g.p33 = lyapunov_cached(&fad, &symmetrize(&t.p33_rhs(&g)))?;
    g.q23 = sylvester_cached(&fart, &fad, &t.q23_rhs(&g))?;
    g.q13 = sylvester_cached(&fat, &fad, &t.q13_rhs(&g))?;
    g.q22 = lyapunov_cached(&fart, &symmetrize(&t.q22_rhs(&g)))?;
    g.q12 = sylvester_cached(&fat, &far, &t.q12_rhs(&g))?;
    g.q11 = lyapunov_cached(&fat, &symmetrize(&t.q11_rhs(&g)))?;
    Ok(g)
}

/// Both trace forms of `‖Δ_mul‖²_H2`: `(trace(C P Cᵀ), trace(Bᵀ Q B))`.
fn trace_forms(g: &ErrorSystemGramians, full: &StateSpace, rom: &StateSpace) -> Result<(f64, f64, f64)> {
    let t = Terms::new(full, rom)?;
    let (c, cr) = (&t.c, &t.cr);
    let inner = c * &g.p11 * c.transpose() - (c * &g.p12 * cr.transpose()) * 2.0
        + (c * &g.p13 * cr.transpose()) * 2.0
        + cr * &g.p22 * cr.transpose()
        - (cr * &g.p23 * cr.transpose()) * 2.0
        + cr * &g.p33 * cr.transpose();
    let ctrl = (&t.di * inner * t.di.transpose()).trace();
    let (b, br) = (full.b(), rom.b());
    let obs = (b.transpose() * &g.q11 * b).trace()
        + 2.0 * (b.transpose() * &g.q12 * br).trace()
        + (br.transpose() * &g.q22 * br).trace();
    let scale = (&t.di * c * &g.p11 * c.transpose() * t.di.transpose()).trace().abs()
        + (b.transpose() * &g.q11 * b).trace().abs();
    Ok((ctrl, obs, scale))
}

/// `(controllability form, observability form)` of `‖Δ_mul‖_H2`.
pub fn h2_norm_delta_mul_forms(
    g: &ErrorSystemGramians,
    full: &StateSpace,
    rom: &StateSpace,
) -> Result<(f64, f64)> {
    let (ctrl, obs, scale) = trace_forms(g, full, rom)?;
    let floor = -1e-10 * scale.max(f64::MIN_POSITIVE);
    if ctrl < floor || obs < floor {
        return Err(MorError::Inconsistent(format!(
            "negative squared norm: trace(CPCᵀ) = {ctrl:.6e}, trace(BᵀQB) = {obs:.6e}"
        )));
    }
    Ok((ctrl.max(0.0).sqrt(), obs.max(0.0).sqrt()))
}

/// `‖Δ_mul‖_H2` from the block gramians (controllability form).
pub fn h2_norm_delta_mul(g: &ErrorSystemGramians, full: &StateSpace, rom: &StateSpace) -> Result<f64> {
    h2_norm_delta_mul_forms(g, full, rom).map(|(c, _)| c)
}
