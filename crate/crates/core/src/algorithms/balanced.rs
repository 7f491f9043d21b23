use nalgebra::DVector;

use super::ReductionConfig;
use crate::error::{MorError, Result};
use crate::linalg::{solve_lyapunov, symmetrize, Matrix};
use crate::relerr::RomCandidate;
use crate::ss::{regularize_d, spectral_factor, StateSpace};

const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct BalancedResult {
    pub candidate: RomCandidate,
    /// All Hankel singular values, descending.
    pub hankel: Vec<f64>,
    /// `WᵀPW` with the controllability-side gramian.
    pub projected_p: Matrix,
    /// `VᵀQV` with the observability-side gramian (`X_φ` for BST).
    pub projected_q: Matrix,
    /// Feedthrough of the input model before regularization.
    pub original_d: Matrix,
}

/// `L` with `LLᵀ = P` for symmetric positive semidefinite `P`.
fn psd_factor(p: &Matrix) -> Matrix {
    let eig = symmetrize(p).symmetric_eigen();
    let mut l = eig.eigenvectors;
    for (j, lam) in eig.eigenvalues.iter().enumerate() {
        let s = lam.max(0.0).sqrt();
        l.column_mut(j).scale_mut(s);
    }
    l
}

/// Square-root balancing of the pair `(P, Q)`, keeping `r` states.
fn balance(full: &StateSpace, p: &Matrix, q: &Matrix, r: usize, d: Matrix) -> Result<BalancedResult> {
    let lp = psd_factor(p);
    let lq = psd_factor(q);
    let svd = (lq.transpose() * &lp).svd(true, true);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let hankel: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let top = hankel.first().copied().unwrap_or(0.0);
    let rank = hankel.iter().filter(|&&s| s > RANK_TOL * top && s > 0.0).count();
    if r == 0 || r > rank {
        return Err(MorError::Order {
            requested: r,
            achievable: rank,
        });
    }
    let u = svd.u.as_ref().expect("requested U");
    let vt = svd.v_t.as_ref().expect("requested Vᵀ");
    let n = full.n();
    let mut v = Matrix::zeros(n, r);
    let mut w = Matrix::zeros(n, r);
    for (k, &i) in order.iter().take(r).enumerate() {
        let s = 1.0 / svd.singular_values[i].sqrt();
        let vc: DVector<f64> = &lp * vt.row(i).transpose() * s;
        let wc: DVector<f64> = &lq * u.column(i) * s;
        v.set_column(k, &vc);
        w.set_column(k, &wc);
    }
    let projected_p = w.transpose() * p * &w;
    let projected_q = v.transpose() * q * &v;
    let original_d = full.d().clone();
    let sys = full.with_d(d)?;
    let candidate = RomCandidate::project(&sys, v, w)?;
    Ok(BalancedResult {
        candidate,
        hankel,
        projected_p,
        projected_q,
        original_d,
    })
}

/// Square-root balanced truncation.
pub fn balanced_truncation(full: &StateSpace, r: usize) -> Result<BalancedResult> {
    full.require_stable()?;
    let p = solve_lyapunov(full.a(), &(full.b() * full.b().transpose()))?;
    let q = solve_lyapunov(&full.a().transpose(), &(full.c().transpose() * full.c()))?;
    balance(full, &p, &q, r, full.d().clone())
}

/// Balanced stochastic truncation: balances the controllability gramian
/// against the Riccati solution of the minimum-phase spectral factor.
///
/// The reduced model carries the regularized feedthrough.
pub fn balanced_stochastic_truncation(
    full: &StateSpace,
    r: usize,
    cfg: &ReductionConfig,
) -> Result<BalancedResult> {
    full.require_stable()?;
    let reg = regularize_d(full, cfg.epsilon)?;
    let sf = spectral_factor(&reg)?;
    let mut out = balance(&reg, &sf.p, &sf.x, r, reg.d().clone())?;
    out.original_d = full.d().clone();
    Ok(out)
}
