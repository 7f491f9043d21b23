//! Relative error II: `Δ_mul = H̄r⁻¹(H - H̄r)`.
//!
//! The error system is assembled block-wise, its gramians are computed one
//! block at a time, and the H2 norm, the first-order optimality conditions
//! and their gradients are derived from those blocks.

mod gradient;
mod gramians;
pub(crate) mod weighted;

pub use gradient::{deviations, gradients, objective, Deviations, GradientBundle, OpcResiduals};
pub use gramians::{compute_gramians, h2_norm_delta_mul, h2_norm_delta_mul_forms, ErrorSystemGramians};
pub use weighted::{
    delta_mul_norm, weighted_error_gramians, weighted_h2_norm, DeltaMulNorm, NormRoute,
    WeightedGramians,
};

use serde::{Deserialize, Serialize};

use crate::error::{MorError, Result};
use crate::linalg::{fro, inverse, Matrix};
use crate::ss::{block_diag, stack_cols, stack_rows, StateSpace};

/// A reduced model, optionally with the oblique projection that produced it.
#[derive(Debug, Clone)]
pub struct RomCandidate {
    pub rom: StateSpace,
    /// Right basis `V̄r` (`n × r`).
    pub v: Option<Matrix>,
    /// Left basis `W̄r` (`n × r`).
    pub w: Option<Matrix>,
}

impl RomCandidate {
    pub fn direct(rom: StateSpace) -> Self {
        RomCandidate { rom, v: None, w: None }
    }

    /// Projects `full` with `(V, W)`: `(WᵀAV, WᵀB, CV, D)`.
    pub fn project(full: &StateSpace, v: Matrix, w: Matrix) -> Result<Self> {
        if v.nrows() != full.n() || w.shape() != v.shape() {
            return Err(MorError::Dimension(format!(
                "projection bases {}x{} / {}x{} for n = {}",
                v.nrows(),
                v.ncols(),
                w.nrows(),
                w.ncols(),
                full.n()
            )));
        }
        let wt = w.transpose();
        let rom = StateSpace::new(
            &wt * full.a() * &v,
            &wt * full.b(),
            full.c() * &v,
            full.d().clone(),
        )?;
        Ok(RomCandidate {
            rom,
            v: Some(v),
            w: Some(w),
        })
    }

    pub fn order(&self) -> usize {
        self.rom.n()
    }

    /// `‖WᵀV - I‖_F`, if the bases are present.
    pub fn biorthogonality_error(&self) -> Option<f64> {
        match (&self.v, &self.w) {
            (Some(v), Some(w)) => {
                let r = v.ncols();
                Some(fro(&(w.transpose() * v - Matrix::identity(r, r))))
            }
            _ => None,
        }
    }
}

/// Scalar flags describing a reduced model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RomFlags {
    pub stable: bool,
    pub minimum_phase: bool,
}

impl RomFlags {
    pub fn of(sys: &StateSpace) -> Self {
        RomFlags {
            stable: sys.is_stable(),
            minimum_phase: sys.is_minimum_phase(),
        }
    }
}

pub(crate) fn require_shared_d(full: &StateSpace, rom: &StateSpace) -> Result<()> {
    if full.m() != rom.m() {
        return Err(MorError::Dimension(format!(
            "port mismatch {} vs {}",
            full.m(),
            rom.m()
        )));
    }
    let diff = fro(&(full.d() - rom.d()));
    if diff > 1e-12 * fro(full.d()).max(1.0) {
        return Err(MorError::Precondition(format!(
            "full and reduced models must share D (‖D - D̄r‖ = {diff:.3e})"
        )));
    }
    Ok(())
}

/// Realization of `Δ_mul` with states `(x, x̄r, x̂)`.
pub fn build_delta_mul(full: &StateSpace, rom: &StateSpace) -> Result<StateSpace> {
    require_shared_d(full, rom)?;
    if !rom.is_minimum_phase() {
        return Err(MorError::Precondition(
            "reduced model is not minimum phase; use the spectral-factor route".into(),
        ));
    }
    let di = inverse(full.d(), "feedthrough D")?;
    let k = rom.b() * &di;
    let ad = rom.a() - &k * rom.c();
    let (n, r) = (full.n(), rom.n());
    let mut a = block_diag(&block_diag(full.a(), rom.a()), &ad);
    a.view_mut((n + r, 0), (r, n)).copy_from(&(-(&k * full.c())));
    a.view_mut((n + r, n), (r, r)).copy_from(&(&k * rom.c()));
    let b = stack_rows(&stack_rows(full.b(), rom.b()), &Matrix::zeros(r, full.m()));
    let dc = &di * full.c();
    let dcr = &di * rom.c();
    let c = stack_cols(&stack_cols(&dc, &(-&dcr)), &dcr);
    StateSpace::new(a, b, c, Matrix::zeros(full.m(), full.m()))
}
