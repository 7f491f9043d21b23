use super::{conjugate, inverse_realization, StateSpace};
use crate::error::{MorError, Result};
use crate::linalg::{
    eigenvalues, inverse, solve_care_with, solve_lyapunov, symmetrize, CareBranch, CareOptions,
    Matrix,
};

/// Right spectral factor `G` of `H(s)H*(s) = G*(s)G(s)` with its Riccati data.
#[derive(Debug, Clone)]
pub struct SpectralFactor {
    pub factor: StateSpace,
    /// Riccati solution `X_φ`.
    pub x: Matrix,
    /// Controllability gramian of `H`.
    pub p: Matrix,
}

/// Minimum-phase spectral factor.
pub fn spectral_factor(sys: &StateSpace) -> Result<SpectralFactor> {
    spectral_factor_with(sys, CareBranch::Stabilizing)
}

/// Spectral factor on a chosen Riccati branch.
///
/// The stabilizing branch gives a minimum-phase factor; the anti-stabilizing
/// branch gives a factor whose zeros all lie in the open right half-plane, so
/// that `G⁻*` is stable.
pub fn spectral_factor_with(sys: &StateSpace, branch: CareBranch) -> Result<SpectralFactor> {
    sys.require_stable()?;
    let p = solve_lyapunov(sys.a(), &(sys.b() * sys.b().transpose()))?;
    let d = sys.d();
    let di = inverse(d, "feedthrough D")?;
    let ri = di.transpose() * &di;
    let bx = &p * sys.c().transpose() + sys.b() * d.transpose();
    let ax = sys.a() - &bx * &ri * sys.c();
    let s = symmetrize(&(&bx * &ri * bx.transpose()));
    let q = symmetrize(&(sys.c().transpose() * &ri * sys.c()));
    let sol = solve_care_with(
        &ax,
        &s,
        &q,
        CareOptions {
            branch,
            ..CareOptions::default()
        },
    )?;
    let c_sp = &di * (sys.c() - bx.transpose() * &sol.x);
    let factor = StateSpace::new(sys.a().clone(), bx, c_sp, d.transpose())?;
    Ok(SpectralFactor {
        factor,
        x: sol.x,
        p,
    })
}

/// Stable realization of `G⁻*(s)` for a factor whose zeros lie in the open right half-plane.
pub fn conjugate_inverse_of_factor(factor: &StateSpace) -> Result<StateSpace> {
    let gi = inverse_realization(&conjugate(factor)?)?;
    let spec = eigenvalues(gi.a())?;
    if !spec.is_hurwitz {
        let z = spec.rightmost().unwrap_or_default();
        return Err(MorError::NotHurwitz { re: z.re, im: z.im });
    }
    Ok(gi)
}

/// Minimum-phase left spectral factor `L` with `L(s)L*(s) = H(s)H*(s)`:
/// `L = (A, (B_x - YCᵀ)D⁻ᵀ, C, D)` with `Y` the stabilizing solution of
/// `A_xY + YA_xᵀ + YCᵀ(DDᵀ)⁻¹CY + B_x(DDᵀ)⁻¹B_xᵀ = 0`.
pub fn left_spectral_factor(sys: &StateSpace) -> Result<SpectralFactor> {
    sys.require_stable()?;
    let p = solve_lyapunov(sys.a(), &(sys.b() * sys.b().transpose()))?;
    let d = sys.d();
    let di = inverse(d, "feedthrough D")?;
    let ri = di.transpose() * &di;
    let bx = &p * sys.c().transpose() + sys.b() * d.transpose();
    let ax = sys.a() - &bx * &ri * sys.c();
    let s = symmetrize(&(sys.c().transpose() * &ri * sys.c()));
    let q = symmetrize(&(&bx * &ri * bx.transpose()));
    let sol = solve_care_with(&ax.transpose(), &s, &q, CareOptions::default())?;
    let k = (&bx - &sol.x * sys.c().transpose()) * di.transpose();
    let factor = StateSpace::new(sys.a().clone(), k, sys.c().clone(), d.clone())?;
    Ok(SpectralFactor {
        factor,
        x: sol.x,
        p,
    })
}

/// Stable weight `W` with `W*W = (HH*)⁻¹`: the inverse of the minimum-phase
/// left spectral factor.
pub fn inverse_spectral_weight(sys: &StateSpace) -> Result<StateSpace> {
    let lf = left_spectral_factor(sys)?;
    let w = inverse_realization(&lf.factor)?;
    w.require_stable()?;
    Ok(w)
}
