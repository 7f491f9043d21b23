use super::{
    biorthogonalize, initial_rom, Initialization, pole_set_change, IterationRecord, IterationTrace,
    IterativeResult, ReductionConfig,
};
use crate::error::{MorError, Result};
use crate::linalg::{
    lyapunov_cached, orthonormalize, symmetrize, sylvester_cached, Factored, Matrix,
};
use crate::relerr::weighted::{weighted_blocks, ModelFactors};
use crate::relerr::RomCandidate;
use crate::ss::{inverse_realization, inverse_spectral_weight, is_rank_deficient, regularize_d, StateSpace};

/// Frequency weight for the relative-error-I iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightRoute {
    /// `W = H⁻¹`; requires a minimum-phase model.
    Inverse,
    /// `W = G⁻*` from the spectral factor of `HH*`.
    SpectralFactor,
    /// `H⁻¹` when the model is minimum phase, `G⁻*` otherwise.
    #[default]
    Auto,
}

enum Objective {
    Additive,
    Multiplicative,
    Weighted(StateSpace),
}

struct Problem {
    full: StateSpace,
    mf: ModelFactors,
    p11: Matrix,
}

impl Problem {
    fn new(full: StateSpace) -> Result<Self> {
        let mf = ModelFactors::new(&full)?;
        let p11 = lyapunov_cached(&mf.a, &(full.b() * full.b().transpose()))?;
        Ok(Problem { full, mf, p11 })
    }

    /// `A P12 + P12 Ārᵀ + B B̄rᵀ = 0`.
    fn p12(&self, far: &Factored, rom: &StateSpace) -> Result<Matrix> {
        sylvester_cached(&self.mf.a, &far.transpose(), &(self.full.b() * rom.b().transpose()))
    }
}

/// `‖W(H - H̄r)‖_H2` from the controllability blocks; `None` if `H̄r` is unstable.
fn weighted_norm_ctrl(
    pb: &Problem,
    far: &Factored,
    p12: &Matrix,
    rom: &StateSpace,
    w: &StateSpace,
) -> Result<Option<f64>> {
    if !far.is_hurwitz() {
        return Ok(None);
    }
    let (c, cr) = (pb.full.c(), rom.c());
    let (aw, bw, cw, dw) = (w.a(), w.b(), w.c(), w.d());
    let p22 = lyapunov_cached(far, &(rom.b() * rom.b().transpose()))?;
    let faw = Factored::new(aw)?;
    let fawt = faw.transpose();
    let p13 = sylvester_cached(
        &pb.mf.a,
        &fawt,
        &((&pb.p11 * c.transpose() - p12 * cr.transpose()) * bw.transpose()),
    )?;
    let p23 = sylvester_cached(
        far,
        &fawt,
        &((p12.transpose() * c.transpose() - &p22 * cr.transpose()) * bw.transpose()),
    )?;
    let m = bw * (c * &p13 - cr * &p23);
    let p33 = lyapunov_cached(&faw, &symmetrize(&(&m + m.transpose())))?;
    let e = c * &pb.p11 * c.transpose() - (c * p12 * cr.transpose()) * 2.0 + cr * &p22 * cr.transpose();
    let s = (dw * e * dw.transpose()).trace()
        + 2.0 * (dw * (c * &p13 - cr * &p23) * cw.transpose()).trace()
        + (cw * p33 * cw.transpose()).trace();
    Ok(Some(s.max(0.0).sqrt()))
}

/// `‖H - H̄r‖_H2`; `None` if `H̄r` is unstable.
fn additive_norm(pb: &Problem, far: &Factored, p12: &Matrix, rom: &StateSpace) -> Result<Option<f64>> {
    if !far.is_hurwitz() {
        return Ok(None);
    }
    let (c, cr) = (pb.full.c(), rom.c());
    let p22 = lyapunov_cached(far, &(rom.b() * rom.b().transpose()))?;
    let s = (c * &pb.p11 * c.transpose()).trace() - 2.0 * (c * p12 * cr.transpose()).trace()
        + (cr * p22 * cr.transpose()).trace();
    Ok(Some(s.max(0.0).sqrt()))
}

/// One sweep: reduction bases for the current model and its objective value.
fn bases(pb: &Problem, obj: &Objective, rom: &StateSpace) -> Result<(Matrix, Matrix, Option<f64>)> {
    let far = Factored::new(rom.a())?;
    let p12 = pb.p12(&far, rom)?;
    match obj {
        Objective::Additive => {
            let q12 = sylvester_cached(&pb.mf.at, &far, &(-(pb.full.c().transpose() * rom.c())))?;
            let norm = additive_norm(pb, &far, &p12, rom)?;
            Ok((p12, q12, norm))
        }
        Objective::Multiplicative => {
            let w = inverse_spectral_weight(rom)?;
            let q = weighted_blocks(&pb.mf, &pb.full, rom, &w, false)?;
            let norm = weighted_norm_ctrl(pb, &far, &p12, rom, &w)?;
            Ok((p12, q.q12, norm))
        }
        Objective::Weighted(w) => {
            let q = weighted_blocks(&pb.mf, &pb.full, rom, w, false)?;
            let norm = weighted_norm_ctrl(pb, &far, &p12, rom, w)?;
            Ok((p12, q.q12, norm))
        }
    }
}

fn project(full: &StateSpace, v: &Matrix, w: &Matrix) -> Result<RomCandidate> {
    let (v, w, _) = biorthogonalize(&orthonormalize(v), &orthonormalize(w))?;
    RomCandidate::project(full, v, w)
}

/// Random initial models whose first sweeps never produce a stable iterate are
/// redrawn from a derived seed, at most this many times.
const RANDOM_RESTARTS: usize = 10;

fn iterate(full: &StateSpace, cfg: &ReductionConfig, obj: Objective, regularize: bool) -> Result<IterativeResult> {
    let mut attempt = 0;
    loop {
        let mut c = cfg.clone();
        c.seed = cfg.seed.wrapping_add((attempt as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let res = iterate_once(full, &c, &obj, regularize);
        let usable = match &res {
            Ok(r) => r.candidate.v.is_some() && r.candidate.rom.is_stable(),
            Err(_) => false,
        };
        if usable || !matches!(cfg.init, Initialization::Random) || attempt >= RANDOM_RESTARTS {
            return res.map(|mut r| {
                r.restarts = attempt;
                r
            });
        }
        attempt += 1;
    }
}

fn iterate_once(full: &StateSpace, cfg: &ReductionConfig, obj: &Objective, regularize: bool) -> Result<IterativeResult> {
    cfg.validate(full.n())?;
    full.require_stable()?;
    let original_d = full.d().clone();
    let can_escalate = regularize && is_rank_deficient(&original_d);
    let mut eps = cfg.epsilon;
    let reg = if regularize { regularize_d(full, eps)? } else { full.clone() };
    let mut pb = Problem::new(reg)?;
    let mut rom = initial_rom(&pb.full, cfg)?;
    let mut poles = rom.poles()?.eigenvalues;
    let mut current = RomCandidate::direct(rom.clone());
    let mut last_stable: Option<RomCandidate> = None;
    let mut best: Option<(f64, RomCandidate)> = None;
    let mut trace = IterationTrace::default();
    let mut converged = false;
    let mut stopped = None;
    let mut escalated = false;

    let mut it = 0;
    while it < cfg.max_iterations {
        it += 1;
        let step = bases(&pb, obj, &rom).and_then(|(v, w, norm)| Ok((project(&pb.full, &v, &w)?, norm)));
        let (next, norm) = match step {
            Ok(s) => s,
            Err(e) => {
                if can_escalate && !escalated && matches!(obj, Objective::Multiplicative) {
                    escalated = true;
                    eps *= 2.0;
                    pb = Problem::new(regularize_d(full, eps)?)?;
                    rom = rom.with_d(pb.full.d().clone())?;
                    it -= 1;
                    continue;
                }
                stopped = Some(e.to_string());
                break;
            }
        };
        if rom.is_stable() {
            if current.v.is_some() {
                last_stable = Some(current.clone());
            }
            if let Some(nv) = norm {
                if best.as_ref().is_none_or(|(b, _)| nv < *b) && current.v.is_some() {
                    best = Some((nv, current.clone()));
                }
            }
        }
        let next_poles = next.rom.poles()?.eigenvalues;
        let change = pole_set_change(&poles, &next_poles);
        trace.records.push(IterationRecord {
            iteration: it,
            norm,
            poles: next_poles.clone(),
            change,
        });
        rom = next.rom.clone();
        current = next;
        poles = next_poles;
        if change < cfg.tol {
            converged = true;
            break;
        }
    }

    if trace.is_empty() {
        return Err(MorError::Precondition(format!(
            "iteration failed before the first update: {}",
            stopped.unwrap_or_default()
        )));
    }
    let mut candidate = if converged {
        current
    } else if stopped.is_some() {
        last_stable.unwrap_or(current)
    } else if matches!(obj, Objective::Additive) {
        match best {
            Some((_, b)) if !current.rom.is_stable() => b,
            _ => current,
        }
    } else {
        current
    };
    if escalated {
        // Candidates from before the escalation carry the old feedthrough.
        candidate.rom = candidate.rom.with_d(pb.full.d().clone())?;
    }
    Ok(IterativeResult {
        candidate,
        iterations: trace.len(),
        trace,
        converged,
        epsilon: eps,
        original_d,
        stopped,
        restarts: 0,
    })
}

/// Two-sided iteration for the additive H2 error: `V̄r = P12`, `W̄r = Q12`
/// with `AᵀQ12 + Q12Ār - CᵀC̄r = 0`.
pub fn tsia(full: &StateSpace, cfg: &ReductionConfig) -> Result<IterativeResult> {
    iterate(full, cfg, Objective::Additive, false)
}

/// Iterative relative-error (Δ_mul) H2 reduction.
pub fn irhmora(full: &StateSpace, cfg: &ReductionConfig) -> Result<IterativeResult> {
    iterate(full, cfg, Objective::Multiplicative, true)
}

/// Frequency-weighted iteration minimizing `‖W(H - H̄r)‖_H2` with a
/// relative-error-I weight.
pub fn relative_error_h2_weighted(
    full: &StateSpace,
    cfg: &ReductionConfig,
    route: WeightRoute,
) -> Result<IterativeResult> {
    full.require_stable()?;
    let reg = regularize_d(full, cfg.epsilon)?;
    let weight = match route {
        WeightRoute::Inverse => inverse_weight(&reg)?,
        WeightRoute::SpectralFactor => inverse_spectral_weight(&reg)?,
        WeightRoute::Auto => {
            if reg.is_minimum_phase() {
                inverse_weight(&reg)?
            } else {
                inverse_spectral_weight(&reg)?
            }
        }
    };
    let mut out = iterate(full, cfg, Objective::Weighted(weight), true)?;
    out.original_d = full.d().clone();
    Ok(out)
}

fn inverse_weight(sys: &StateSpace) -> Result<StateSpace> {
    if !sys.is_minimum_phase() {
        let z = crate::ss::zeros(sys)?.rightmost().unwrap_or_default();
        return Err(MorError::NotMinimumPhase { re: z.re, im: z.im });
    }
    inverse_realization(sys)
}

/// `(P12, Q̄12)` for one IRHMORA sweep from `rom`; `full` must already carry
/// the invertible feedthrough used in the iteration.
pub fn irhmora_bases(full: &StateSpace, rom: &StateSpace) -> Result<(Matrix, Matrix)> {
    let pb = Problem::new(full.clone())?;
    let (v, w, _) = bases(&pb, &Objective::Multiplicative, rom)?;
    Ok((v, w))
}

/// One IRHMORA sweep from `rom`.
pub fn irhmora_step(full: &StateSpace, rom: &StateSpace) -> Result<RomCandidate> {
    let (v, w) = irhmora_bases(full, rom)?;
    project(full, &v, &w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::Initialization;

    #[test]
    fn full_order_is_fixed_point() {
        let full = crate::random::stable_system(3, 1, &mut crate::random::rng(2));
        let mut cfg = ReductionConfig::new(3);
        cfg.init = Initialization::Given(full.clone());
        let t = tsia(&full, &cfg).unwrap();
        assert!(t.converged);
        assert_eq!(t.iterations, 1);
        let r = irhmora(&full, &cfg).unwrap();
        assert!(r.converged && r.iterations == 1);
        // Trace-form cancellation with a 1/ε weight limits the attainable zero.
        assert!(r.trace.records[0].norm.unwrap() < 1e-3);
    }
}
