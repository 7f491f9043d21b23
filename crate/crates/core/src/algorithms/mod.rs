//! Reduction algorithms: balanced truncation, balanced stochastic
//! truncation, the two-sided iteration for additive H2 error, and the
//! iterative relative-error schemes.

mod balanced;
mod iterative;

pub use balanced::{balanced_stochastic_truncation, balanced_truncation, BalancedResult};
pub use iterative::{
    irhmora, irhmora_bases, irhmora_step, relative_error_h2_weighted, tsia, WeightRoute,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{MorError, Result};
use crate::linalg::{eigenvectors, fro, inverse, singular_values, to_complex, Matrix};
use crate::random;
use crate::relerr::RomCandidate;
use crate::ss::StateSpace;

/// How the first reduced model of an iteration is chosen.
#[derive(Debug, Clone, Default)]
pub enum Initialization {
    /// Random stable model drawn from `ReductionConfig::seed`.
    #[default]
    Random,
    /// Modal truncation to the poles with the largest residues.
    DominantPoles,
    /// A caller-supplied reduced model.
    Given(StateSpace),
}

#[derive(Debug, Clone)]
pub struct ReductionConfig {
    pub order: usize,
    pub max_iterations: usize,
    pub epsilon: f64,
    /// Relative pole-set change below which an iteration is converged.
    pub tol: f64,
    pub seed: u64,
    pub init: Initialization,
}

impl ReductionConfig {
    pub fn new(order: usize) -> Self {
        ReductionConfig {
            order,
            max_iterations: 200,
            epsilon: 1e-3,
            tol: 1e-6,
            seed: 0,
            init: Initialization::Random,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.order == 0 || self.order > n {
            return Err(MorError::Order {
                requested: self.order,
                achievable: n,
            });
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(MorError::Precondition(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_iterations == 0 {
            return Err(MorError::Precondition("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based.
    pub iteration: usize,
    /// Objective norm of the model entering this iteration (`None` if it could not be evaluated).
    pub norm: Option<f64>,
    /// Poles of the model produced by this iteration.
    pub poles: Vec<Complex64>,
    /// Relative pole-set change with respect to the previous model.
    pub change: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
}

impl IterationTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
    pub fn last_change(&self) -> Option<f64> {
        self.records.last().map(|r| r.change)
    }
}

/// Result of an iterative reduction.
#[derive(Debug, Clone)]
pub struct IterativeResult {
    /// Final model, with the feedthrough used during the iteration.
    pub candidate: RomCandidate,
    pub trace: IterationTrace,
    pub converged: bool,
    pub iterations: usize,
    /// `ε` in effect at the end (doubled once if a Riccati solve failed).
    pub epsilon: f64,
    /// Feedthrough of the unregularized input model.
    pub original_d: Matrix,
    /// Why the iteration stopped early, if it did.
    pub stopped: Option<String>,
    /// Random initial models discarded before this run.
    pub restarts: usize,
}

impl IterativeResult {
    /// Final model with the original `D` restored.
    pub fn rom_with_original_d(&self) -> Result<StateSpace> {
        self.candidate.rom.with_d(self.original_d.clone())
    }
}

/// Rescales `W` so that `WᵀV = I`, leaving both spans unchanged.
///
/// Returns `(V, W', cond(WᵀV))`.
pub fn biorthogonalize(v: &Matrix, w: &Matrix) -> Result<(Matrix, Matrix, f64)> {
    if v.shape() != w.shape() {
        return Err(MorError::Dimension(format!(
            "biorthogonalize: V is {}x{}, W is {}x{}",
            v.nrows(),
            v.ncols(),
            w.nrows(),
            w.ncols()
        )));
    }
    let m = w.transpose() * v;
    let sv = singular_values(&m);
    let (hi, lo) = (sv.first().copied().unwrap_or(0.0), sv.last().copied().unwrap_or(0.0));
    if !(lo > 1e-13 * hi) || lo == 0.0 {
        return Err(MorError::Singular(format!(
            "WᵀV is singular to working precision (smallest singular value {lo:.3e})"
        )));
    }
    let mi = inverse(&m, "WᵀV")?;
    Ok((v.clone(), w * mi.transpose(), hi / lo))
}

/// Hausdorff distance between two pole sets divided by the largest modulus.
pub fn pole_set_change(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    let directed = |x: &[Complex64], y: &[Complex64]| {
        x.iter()
            .map(|p| y.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    let h = directed(a, b).max(directed(b, a));
    let scale = a.iter().chain(b).map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        h
    } else {
        h / scale
    }
}

/// Random stable model of order `r` sharing `d`.
pub fn random_initial_rom(r: usize, d: &Matrix, seed: u64) -> Result<StateSpace> {
    let mut rng = random::rng(seed);
    let m = d.nrows();
    let a = random::stable_matrix(r, &mut rng);
    let b = random::gaussian(r, m, &mut rng);
    let c = random::gaussian(m, r, &mut rng);
    StateSpace::new(a, b, c, d.clone())
}

/// Modal truncation keeping the `r` poles with the largest residue-to-damping
/// ratio; complex poles are kept in conjugate pairs.
pub fn dominant_pole_rom(full: &StateSpace, r: usize) -> Result<RomCandidate> {
    let (lambda, x) = eigenvectors(full.a())?;
    let y = x
        .clone()
        .try_inverse()
        .ok_or_else(|| MorError::Singular("eigenvector matrix".into()))?;
    let cb = to_complex(full.c()) * &x;
    let yb = &y * to_complex(full.b());
    let mut scored: Vec<(usize, f64)> = (0..lambda.len())
        .filter(|&i| lambda[i].im >= 0.0)
        .map(|i| {
            let res = cb.column(i).norm() * yb.row(i).norm();
            (i, res / lambda[i].re.abs().max(f64::MIN_POSITIVE))
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let n = full.n();
    let mut v_cols: Vec<nalgebra::DVector<f64>> = Vec::new();
    let mut w_cols: Vec<nalgebra::DVector<f64>> = Vec::new();
    for (i, _) in scored {
        let complex = lambda[i].im.abs() > 1e-10 * lambda[i].norm().max(1.0);
        let need = if complex { 2 } else { 1 };
        if v_cols.len() + need > r {
            continue;
        }
        let xi = x.column(i);
        let yi = y.row(i).transpose();
        v_cols.push(xi.map(|z| z.re));
        w_cols.push(yi.map(|z| z.re));
        if complex {
            v_cols.push(xi.map(|z| z.im));
            w_cols.push(yi.map(|z| z.im));
        }
        if v_cols.len() == r {
            break;
        }
    }
    if v_cols.len() < r {
        return Err(MorError::Order {
            requested: r,
            achievable: v_cols.len(),
        });
    }
    let v = crate::linalg::orthonormalize(&Matrix::from_columns(&v_cols));
    let w = crate::linalg::orthonormalize(&Matrix::from_columns(&w_cols));
    debug_assert_eq!(v.nrows(), n);
    let (v, w, _) = biorthogonalize(&v, &w)?;
    RomCandidate::project(full, v, w)
}

pub(crate) fn initial_rom(full: &StateSpace, cfg: &ReductionConfig) -> Result<StateSpace> {
    match &cfg.init {
        Initialization::Random => random_initial_rom(cfg.order, full.d(), cfg.seed),
        Initialization::DominantPoles => Ok(dominant_pole_rom(full, cfg.order)?.rom),
        Initialization::Given(rom) => {
            if rom.n() != cfg.order || rom.m() != full.m() {
                return Err(MorError::Dimension(format!(
                    "initial model is {}-state/{}-port, expected {}/{}",
                    rom.n(),
                    rom.m(),
                    cfg.order,
                    full.m()
                )));
            }
            rom.with_d(full.d().clone())
        }
    }
}

/// `‖WᵀV - I‖_F`.
pub fn biorthogonality_error(v: &Matrix, w: &Matrix) -> f64 {
    fro(&(w.transpose() * v - Matrix::identity(v.ncols(), v.ncols())))
}
