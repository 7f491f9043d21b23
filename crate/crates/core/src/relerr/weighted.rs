use serde::{Deserialize, Serialize};

use super::gramians::{compute_gramians, h2_norm_delta_mul_forms};
use super::require_shared_d;
use crate::error::{MorError, Result};
use crate::linalg::{lyapunov_cached, symmetrize, sylvester_cached, Factored, Matrix};
use crate::ss::{inverse_spectral_weight, StateSpace};

/// Observability blocks of the weighted error `W(s)(H(s) - H̄r(s))` in the
/// state order `(x, x̄r, x_w)`.
#[derive(Debug, Clone)]
pub struct WeightedGramians {
    pub q11: Option<Matrix>,
    pub q12: Matrix,
    pub q13: Matrix,
    pub q22: Option<Matrix>,
    pub q23: Matrix,
    pub q33: Matrix,
}

/// Schur factors of the full model's `A` and `Aᵀ`, reused across iterations.
#[derive(Debug, Clone)]
pub(crate) struct ModelFactors {
    #[allow(dead_code)]
    pub a: Factored,
    pub at: Factored,
}

impl ModelFactors {
    pub fn new(full: &StateSpace) -> Result<Self> {
        let a = Factored::new(full.a())?;
        let at = a.transpose();
        Ok(ModelFactors { a, at })
    }
}

pub(crate) fn weighted_blocks(
    mf: &ModelFactors,
    full: &StateSpace,
    rom: &StateSpace,
    weight: &StateSpace,
    norm_blocks: bool,
) -> Result<WeightedGramians> {
    let (aw, bw, cw, dw) = (weight.a(), weight.b(), weight.c(), weight.d());
    let (c, cr) = (full.c(), rom.c());
    let faw = Factored::new(aw)?;
    let fawt = faw.transpose();
    let far = Factored::new(rom.a())?;
    let fart = far.transpose();

    let q33 = lyapunov_cached(&fawt, &symmetrize(&(cw.transpose() * cw)))?;
    let g = bw.transpose() * &q33 + dw.transpose() * cw;
    let q13 = sylvester_cached(&mf.at, &faw, &(c.transpose() * &g))?;
    let q23 = sylvester_cached(&fart, &faw, &(-(cr.transpose() * &g)))?;
    let dtd = dw.transpose() * dw;
    let q12_rhs = c.transpose() * bw.transpose() * q23.transpose() - &q13 * bw * cr
        - c.transpose() * &dtd * cr;
    let q12 = sylvester_cached(&mf.at, &far, &q12_rhs)?;
    let (q11, q22) = if norm_blocks {
        let m = &q13 * bw * c;
        let q11 = lyapunov_cached(&mf.at, &symmetrize(&(&m + m.transpose() + c.transpose() * &dtd * c)))?;
        let m = &q23 * bw * cr;
        let q22 = lyapunov_cached(&fart, &symmetrize(&(-(&m + m.transpose()) + cr.transpose() * &dtd * cr)))?;
        (Some(q11), Some(q22))
    } else {
        (None, None)
    };
    Ok(WeightedGramians {
        q11,
        q12,
        q13,
        q22,
        q23,
        q33,
    })
}

fn check_weight(full: &StateSpace, rom: &StateSpace, weight: &StateSpace) -> Result<()> {
    require_shared_d(full, rom)?;
    if weight.m() != full.m() {
        return Err(MorError::Dimension(format!(
            "weight has {} ports, model has {}",
            weight.m(),
            full.m()
        )));
    }
    full.require_stable()?;
    rom.require_stable()?;
    weight.require_stable()
}

/// Observability blocks of `W(H - H̄r)` for a stable weight `W`.
pub fn weighted_error_gramians(
    full: &StateSpace,
    rom: &StateSpace,
    weight: &StateSpace,
) -> Result<WeightedGramians> {
    check_weight(full, rom, weight)?;
    weighted_blocks(&ModelFactors::new(full)?, full, rom, weight, true)
}

pub(crate) fn weighted_norm_from_blocks(
    full: &StateSpace,
    rom: &StateSpace,
    g: &WeightedGramians,
) -> Result<f64> {
    let (b, br) = (full.b(), rom.b());
    let (q11, q22) = match (&g.q11, &g.q22) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(MorError::Precondition("norm blocks were not computed".into())),
    };
    let s = (b.transpose() * q11 * b).trace()
        + 2.0 * (b.transpose() * &g.q12 * br).trace()
        + (br.transpose() * q22 * br).trace();
    let scale = (b.transpose() * q11 * b).trace().abs() + (br.transpose() * q22 * br).trace().abs();
    if s < -1e-10 * scale {
        return Err(MorError::Inconsistent(format!("negative weighted squared norm {s:.6e}")));
    }
    Ok(s.max(0.0).sqrt())
}

/// `‖W(H - H̄r)‖_H2`.
pub fn weighted_h2_norm(full: &StateSpace, rom: &StateSpace, weight: &StateSpace) -> Result<f64> {
    let g = weighted_error_gramians(full, rom, weight)?;
    weighted_norm_from_blocks(full, rom, &g)
}

/// How `‖Δ_mul‖_H2` was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormRoute {
    /// Block gramians of the `H̄r⁻¹Δ_add` realization.
    Direct,
    /// Weight `Ḡr⁻*` built from the reduced model's spectral factor.
    SpectralFactor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaMulNorm {
    /// Controllability-factor evaluation on the assembled error realization.
    pub value: f64,
    /// Observability-factor evaluation on the same realization.
    pub check: f64,
    /// Block-gramian trace form. Loses accuracy like `eps·(‖WH‖/‖WΔ‖)²`.
    pub trace_form: f64,
    pub route: NormRoute,
}

fn rel(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

impl DeltaMulNorm {
    pub fn relative_mismatch(&self) -> f64 {
        rel(self.value, self.check)
    }

    pub fn trace_mismatch(&self) -> f64 {
        rel(self.value, self.trace_form)
    }
}

/// `‖Δ_mul‖_H2`, through `H̄r⁻¹` when the reduced model is minimum phase and
/// through `Ḡr⁻*` otherwise.
pub fn delta_mul_norm(full: &StateSpace, rom: &StateSpace) -> Result<DeltaMulNorm> {
    require_shared_d(full, rom)?;
    let (err, trace_form, route) = if rom.is_minimum_phase() {
        let g = compute_gramians(full, rom)?;
        let (ctrl, _) = h2_norm_delta_mul_forms(&g, full, rom)?;
        (super::build_delta_mul(full, rom)?, ctrl, NormRoute::Direct)
    } else {
        let w = inverse_spectral_weight(rom)?;
        let g = weighted_error_gramians(full, rom, &w)?;
        let t = weighted_norm_from_blocks(full, rom, &g)?;
        let err = crate::ss::series(&crate::ss::subtract(full, rom)?, &w)?;
        (err, t, NormRoute::SpectralFactor)
    };
    Ok(DeltaMulNorm {
        value: crate::ss::h2_norm_factored(&err)?,
        check: crate::ss::h2_norm_factored_observability(&err)?,
        trace_form,
        route,
    })
}
