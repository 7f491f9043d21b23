use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::StateSpace;
use crate::error::{MorError, Result};
use crate::linalg::{eigenvalues, fro, inverse, lyapunov_factor, solve_lyapunov, to_complex, CMatrix, Matrix};

pub const HINF_DEFAULT_TOL: f64 = 1e-4;
const HINF_GRID_POINTS: usize = 400;
const HINF_MAX_ROUNDS: usize = 60;

/// Per-frequency singular values of a transfer matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyResponseTable {
    pub frequencies: Vec<f64>,
    /// Descending singular values, or `None` where the resolvent is singular.
    pub singular_values: Vec<Option<Vec<f64>>>,
}

impl FrequencyResponseTable {
    /// Largest singular value at each frequency (`NaN` at failed points).
    pub fn sigma_max(&self) -> Vec<f64> {
        self.singular_values
            .iter()
            .map(|s| s.as_ref().and_then(|v| v.first().copied()).unwrap_or(f64::NAN))
            .collect()
    }
}

/// `n` logarithmically spaced points on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..n)
                .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
                .collect()
        }
    }
}

/// 20 log-spaced frequencies on `[1e-3, 1e3]`.
pub fn probe_frequencies() -> Vec<f64> {
    log_grid(1e-3, 1e3, 20)
}

fn sorted_singular_values(h: CMatrix) -> Vec<f64> {
    let mut sv: Vec<f64> = h.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

pub fn frequency_response(sys: &StateSpace, grid: &[f64]) -> Result<FrequencyResponseTable> {
    if grid.is_empty() {
        return Err(MorError::Precondition("empty frequency grid".into()));
    }
    if grid.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
        return Err(MorError::Precondition("frequencies must be positive".into()));
    }
    if grid.windows(2).any(|p| p[1] <= p[0]) {
        return Err(MorError::Precondition("frequencies must be strictly increasing".into()));
    }
    let singular_values = grid
        .iter()
        .map(|&w| sys.eval_jw(w).ok().map(sorted_singular_values))
        .collect();
    Ok(FrequencyResponseTable {
        frequencies: grid.to_vec(),
        singular_values,
    })
}

fn require_strictly_proper(sys: &StateSpace) -> Result<()> {
    if sys.d().iter().any(|v| *v != 0.0) {
        return Err(MorError::Precondition(
            "H2 norm is infinite for a nonzero feedthrough".into(),
        ));
    }
    Ok(())
}

/// `sqrt(trace(C P Cᵀ))` with the controllability gramian `P`.
pub fn h2_norm(sys: &StateSpace) -> Result<f64> {
    require_strictly_proper(sys)?;
    if sys.n() == 0 {
        return Ok(0.0);
    }
    sys.require_stable()?;
    let p = solve_lyapunov(sys.a(), &(sys.b() * sys.b().transpose()))?;
    Ok((sys.c() * p * sys.c().transpose()).trace().max(0.0).sqrt())
}

/// `sqrt(trace(Bᵀ Q B))` with the observability gramian `Q`.
pub fn h2_norm_observability(sys: &StateSpace) -> Result<f64> {
    require_strictly_proper(sys)?;
    if sys.n() == 0 {
        return Ok(0.0);
    }
    sys.require_stable()?;
    let q = solve_lyapunov(&sys.a().transpose(), &(sys.c().transpose() * sys.c()))?;
    Ok((sys.b().transpose() * q * sys.b()).trace().max(0.0).sqrt())
}

/// `‖C L‖_F` with `L Lᴴ` the controllability gramian, `L` computed directly.
///
/// Avoids the squared cancellation of the trace forms when the norm is small
/// compared with the norms of the parts it is assembled from.
pub fn h2_norm_factored(sys: &StateSpace) -> Result<f64> {
    require_strictly_proper(sys)?;
    if sys.n() == 0 {
        return Ok(0.0);
    }
    sys.require_stable()?;
    let l = lyapunov_factor(sys.a(), sys.b())?;
    Ok((to_complex(sys.c()) * l).norm())
}

/// Observability counterpart of [`h2_norm_factored`]: `‖Lᴴ B‖_F` with
/// `L Lᴴ` the observability gramian.
pub fn h2_norm_factored_observability(sys: &StateSpace) -> Result<f64> {
    require_strictly_proper(sys)?;
    if sys.n() == 0 {
        return Ok(0.0);
    }
    sys.require_stable()?;
    let l = lyapunov_factor(&sys.a().transpose(), &sys.c().transpose())?;
    Ok((l.adjoint() * to_complex(sys.b())).norm())
}

fn sigma_max_at(sys: &StateSpace, w: f64) -> f64 {
    sys.eval_jw(w)
        .map(|h| sorted_singular_values(h)[0])
        .unwrap_or(f64::INFINITY)
}

/// Nonnegative frequencies at which `γ` is a singular value of `H(jω)`.
fn crossing_frequencies(sys: &StateSpace, gamma: f64) -> Result<Vec<f64>> {
    let (a, b, c, d) = (sys.a(), sys.b(), sys.c(), sys.d());
    let n = sys.n();
    let m = sys.m();
    let g2 = gamma * gamma;
    let r = d.transpose() * d - Matrix::identity(m, m) * g2;
    let s = d * d.transpose() - Matrix::identity(m, m) * g2;
    let ri = inverse(&r, "DᵀD - γ²I")?;
    let si = inverse(&s, "DDᵀ - γ²I")?;
    let mut h = Matrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n))
        .copy_from(&(a - b * &ri * d.transpose() * c));
    h.view_mut((0, n), (n, n))
        .copy_from(&(-(b * &ri * b.transpose()) * gamma));
    h.view_mut((n, 0), (n, n))
        .copy_from(&(c.transpose() * &si * c * gamma));
    h.view_mut((n, n), (n, n))
        .copy_from(&(-a.transpose() + c.transpose() * d * &ri * b.transpose()));
    let scale = fro(&h).max(1.0);
    let spec = eigenvalues(&h)?;
    let mut ws: Vec<f64> = spec
        .eigenvalues
        .iter()
        .filter(|z| z.re.abs() <= 1e-8 * scale && z.im >= 0.0)
        .map(|z| z.im)
        .collect();
    ws.sort_by(|x, y| x.total_cmp(y));
    ws.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * scale);
    Ok(ws)
}

/// `sup_ω σ_max(H(jω))` to relative accuracy `rel_tol`.
pub fn hinf_norm(sys: &StateSpace, rel_tol: f64) -> Result<f64> {
    sys.require_stable()?;
    let dmax = sorted_singular_values(sys.d().map(|v| Complex64::new(v, 0.0)))[0];
    if sys.n() == 0 {
        return Ok(dmax);
    }
    let rel_tol = if rel_tol > 0.0 { rel_tol } else { HINF_DEFAULT_TOL };
    let poles = sys.poles()?;
    let mags: Vec<f64> = poles.eigenvalues.iter().map(|z| z.norm()).filter(|v| *v > 0.0).collect();
    let lo_w = mags.iter().copied().fold(f64::INFINITY, f64::min).min(1.0) * 1e-2;
    let hi_w = mags.iter().copied().fold(0.0, f64::max).max(1.0) * 1e2;
    let mut candidates = log_grid(lo_w, hi_w, HINF_GRID_POINTS);
    candidates.push(0.0);
    candidates.extend(poles.eigenvalues.iter().map(|z| z.im.abs()));
    let mut lower = dmax;
    for w in candidates {
        lower = lower.max(sigma_max_at(sys, w));
    }
    if lower == 0.0 {
        return Ok(0.0);
    }
    for _ in 0..HINF_MAX_ROUNDS {
        let gamma = lower * (1.0 + rel_tol);
        // No crossing at γ certifies sup σ_max < γ.
        let ws = match crossing_frequencies(sys, gamma) {
            Ok(ws) => ws,
            Err(_) => return Ok(gamma),
        };
        if ws.is_empty() {
            return Ok(gamma);
        }
        let mut probes = ws.clone();
        probes.extend(ws.windows(2).map(|p| 0.5 * (p[0] + p[1])));
        let next = probes
            .iter()
            .map(|&w| sigma_max_at(sys, w))
            .fold(lower, f64::max);
        if next <= lower * (1.0 + 0.1 * rel_tol) {
            return Ok(gamma.max(next));
        }
        lower = next;
    }
    Err(MorError::NoConvergence {
        what: "H-infinity bisection",
        iterations: HINF_MAX_ROUNDS,
    })
}
