//! Comparison runs, reports and sigma tables.

use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{
    balanced_stochastic_truncation, balanced_truncation, irhmora, tsia, ReductionConfig,
};
use crate::error::{MorError, Result};
use crate::linalg::{fro, Matrix};
use crate::relerr::{build_delta_mul, delta_mul_norm, deviations, gradients, NormRoute, RomCandidate};
use crate::ss::{
    frequency_response, h2_norm_factored, inverse_spectral_weight, log_grid, regularize_d, series,
    subtract, StateSpace,
};

pub const REPORT_SCHEMA: &str = "relmor-report/1";

/// Largest accepted relative disagreement between the two `‖Δ_mul‖` evaluations.
pub const DUAL_PATH_TOL: f64 = 1e-6;
/// Norms below this are rounding noise; the relative check uses it as a floor.
pub const DUAL_PATH_FLOOR: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "BT")]
    Bt,
    #[serde(rename = "BST")]
    Bst,
    #[serde(rename = "TSIA")]
    Tsia,
    #[serde(rename = "IRHMORA")]
    Irhmora,
}

impl Algorithm {
    /// Table column order.
    pub const ALL: [Algorithm; 4] = [Algorithm::Bt, Algorithm::Bst, Algorithm::Tsia, Algorithm::Irhmora];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Bt => "BT",
            Algorithm::Bst => "BST",
            Algorithm::Tsia => "TSIA",
            Algorithm::Irhmora => "IRHMORA",
        }
    }

    pub fn is_iterative(self) -> bool {
        matches!(self, Algorithm::Tsia | Algorithm::Irhmora)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = MorError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bt" => Ok(Algorithm::Bt),
            "bst" => Ok(Algorithm::Bst),
            "tsia" => Ok(Algorithm::Tsia),
            "irhmora" => Ok(Algorithm::Irhmora),
            _ => Err(MorError::Precondition(format!(
                "unknown algorithm {s:?} (expected bt, bst, tsia or irhmora)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellMetrics {
    pub delta_add: f64,
    pub delta_mul: f64,
    /// Independent second evaluation of `delta_mul`.
    pub delta_mul_check: f64,
    /// Block-gramian trace form (diagnostic, not gating).
    pub delta_mul_trace_form: f64,
    pub delta_mul_route: NormRoute,
    pub delta_rel: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seconds: Option<f64>,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    pub restarts: Option<usize>,
    /// Regularization used for `D` in this cell.
    pub epsilon: f64,
    pub stable: bool,
    pub minimum_phase: bool,
}

impl CellMetrics {
    pub fn dual_path_mismatch(&self) -> f64 {
        (self.delta_mul - self.delta_mul_check).abs()
            / self.delta_mul.abs().max(self.delta_mul_check.abs()).max(DUAL_PATH_FLOOR)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureKind {
    /// Requested order outside `1..=n`.
    Order,
    /// The reduction itself failed.
    Algorithm,
    /// The reduced model is unstable, so the H2 errors are unbounded.
    UnstableRom,
    /// An error norm could not be evaluated.
    Evaluation,
    /// The two `‖Δ_mul‖` evaluations disagree beyond [`DUAL_PATH_TOL`].
    NormCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub kind: FailureKind,
    pub message: String,
    pub metrics: Option<CellMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum CellOutcome {
    Ok(CellMetrics),
    Failed(CellFailure),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportCell {
    pub order: usize,
    pub algorithm: Algorithm,
    pub outcome: CellOutcome,
}

impl ReportCell {
    pub fn metrics(&self) -> Option<&CellMetrics> {
        match &self.outcome {
            CellOutcome::Ok(m) => Some(m),
            CellOutcome::Failed(f) => f.metrics.as_ref(),
        }
    }

    pub fn is_failure(&self) -> bool {
        matches!(self.outcome, CellOutcome::Failed(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub name: Option<String>,
    pub n: usize,
    pub m: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSummary {
    pub seed: u64,
    pub epsilon: f64,
    pub max_iterations: usize,
    pub tol: f64,
}

impl From<&ReductionConfig> for ConfigSummary {
    fn from(c: &ReductionConfig) -> Self {
        ConfigSummary {
            seed: c.seed,
            epsilon: c.epsilon,
            max_iterations: c.max_iterations,
            tol: c.tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub schema: String,
    pub model: ModelSummary,
    pub config: ConfigSummary,
    pub algorithms: Vec<Algorithm>,
    pub orders: Vec<usize>,
    /// Sorted by order, then algorithm in table column order.
    pub cells: Vec<ReportCell>,
}

impl ReductionReport {
    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.is_failure()).count()
    }

    pub fn cell(&self, algorithm: Algorithm, order: usize) -> Option<&ReportCell> {
        self.cells
            .iter()
            .find(|c| c.algorithm == algorithm && c.order == order)
    }

    /// Copy with wall-clock timings removed, so that equal inputs give equal reports.
    pub fn without_timings(&self) -> ReductionReport {
        let mut out = self.clone();
        for c in &mut out.cells {
            match &mut c.outcome {
                CellOutcome::Ok(m) => m.seconds = None,
                CellOutcome::Failed(f) => {
                    if let Some(m) = &mut f.metrics {
                        m.seconds = None;
                    }
                }
            }
        }
        out
    }
}

struct Reduced {
    /// Model with the feedthrough of the input.
    rom: StateSpace,
    /// Model with the regularized feedthrough.
    rom_reg: StateSpace,
    epsilon: f64,
    iterations: Option<usize>,
    converged: Option<bool>,
    restarts: Option<usize>,
}

fn reduce(full: &StateSpace, algorithm: Algorithm, cfg: &ReductionConfig) -> Result<Reduced> {
    let r = cfg.order;
    let with_reg = |rom: StateSpace, eps: f64| -> Result<StateSpace> {
        rom.with_d(regularize_d(full, eps)?.d().clone())
    };
    match algorithm {
        Algorithm::Bt => {
            let rom = balanced_truncation(full, r)?.candidate.rom;
            Ok(Reduced {
                rom_reg: with_reg(rom.clone(), cfg.epsilon)?,
                rom,
                epsilon: cfg.epsilon,
                iterations: None,
                converged: None,
                restarts: None,
            })
        }
        Algorithm::Bst => {
            let res = balanced_stochastic_truncation(full, r, cfg)?;
            Ok(Reduced {
                rom: res.candidate.rom.with_d(res.original_d.clone())?,
                rom_reg: res.candidate.rom,
                epsilon: cfg.epsilon,
                iterations: None,
                converged: None,
                restarts: None,
            })
        }
        Algorithm::Tsia => {
            let res = tsia(full, cfg)?;
            let rom = res.candidate.rom.clone();
            Ok(Reduced {
                rom_reg: with_reg(rom.clone(), cfg.epsilon)?,
                rom,
                epsilon: cfg.epsilon,
                iterations: Some(res.iterations),
                converged: Some(res.converged),
                restarts: Some(res.restarts),
            })
        }
        Algorithm::Irhmora => {
            let res = irhmora(full, cfg)?;
            Ok(Reduced {
                rom: res.rom_with_original_d()?,
                rom_reg: res.candidate.rom.clone(),
                epsilon: res.epsilon,
                iterations: Some(res.iterations),
                converged: Some(res.converged),
                restarts: Some(res.restarts),
            })
        }
    }
}

fn failed(kind: FailureKind, e: impl ToString, metrics: Option<CellMetrics>) -> CellOutcome {
    CellOutcome::Failed(CellFailure {
        kind,
        message: e.to_string(),
        metrics,
    })
}

/// One (algorithm, order) cell: reduce, then evaluate the three error norms.
pub fn evaluate_cell(full: &StateSpace, algorithm: Algorithm, cfg: &ReductionConfig) -> CellOutcome {
    reduce_and_evaluate(full, algorithm, cfg).1
}

/// Like [`evaluate_cell`], also returning the reduced model (with the input
/// model's feedthrough) when the reduction succeeded.
pub fn reduce_and_evaluate(
    full: &StateSpace,
    algorithm: Algorithm,
    cfg: &ReductionConfig,
) -> (Option<StateSpace>, CellOutcome) {
    if cfg.order == 0 || cfg.order > full.n() {
        let f = failed(
            FailureKind::Order,
            MorError::Order {
                requested: cfg.order,
                achievable: full.n(),
            },
            None,
        );
        return (None, f);
    }
    let t0 = Instant::now();
    let red = match reduce(full, algorithm, cfg) {
        Ok(r) => r,
        Err(e) => return (None, failed(FailureKind::Algorithm, e, None)),
    };
    let seconds = t0.elapsed().as_secs_f64();
    let stable = red.rom_reg.is_stable();
    let minimum_phase = red.rom_reg.is_minimum_phase();
    if !stable {
        let z = red
            .rom
            .poles()
            .ok()
            .and_then(|p| p.rightmost())
            .unwrap_or_default();
        let f = failed(
            FailureKind::UnstableRom,
            MorError::NotHurwitz { re: z.re, im: z.im },
            None,
        );
        return (Some(red.rom), f);
    }
    let eval = || -> Result<CellMetrics> {
        let reg = regularize_d(full, red.epsilon)?;
        let delta_add = h2_norm_factored(&subtract(full, &red.rom)?)?;
        let dm = delta_mul_norm(&reg, &red.rom_reg)?;
        let delta_rel = inverse_spectral_weight(&reg)
            .and_then(|w| h2_norm_factored(&series(&subtract(&reg, &red.rom_reg)?, &w)?))
            .ok();
        Ok(CellMetrics {
            delta_add,
            delta_mul: dm.value,
            delta_mul_check: dm.check,
            delta_mul_trace_form: dm.trace_form,
            delta_mul_route: dm.route,
            delta_rel,
            seconds: Some(seconds),
            iterations: red.iterations,
            converged: red.converged,
            restarts: red.restarts,
            epsilon: red.epsilon,
            stable,
            minimum_phase,
        })
    };
    let outcome = match eval() {
        Ok(m) if m.dual_path_mismatch() > DUAL_PATH_TOL => {
            let msg = format!(
                "‖Δ_mul‖ evaluations disagree: {:e} vs {:e} (relative {:.3e})",
                m.delta_mul,
                m.delta_mul_check,
                m.dual_path_mismatch()
            );
            failed(FailureKind::NormCheck, msg, Some(m))
        }
        Ok(m) => CellOutcome::Ok(m),
        Err(e) => failed(FailureKind::Evaluation, e, None),
    };
    (Some(red.rom), outcome)
}

/// Runs every (algorithm, order) cell; cells are independent and evaluated in parallel.
pub fn run_comparison(
    full: &StateSpace,
    name: Option<&str>,
    algorithms: &[Algorithm],
    orders: &[usize],
    cfg: &ReductionConfig,
) -> Result<ReductionReport> {
    full.require_stable()?;
    let mut algs = algorithms.to_vec();
    algs.sort();
    algs.dedup();
    let mut ords = orders.to_vec();
    ords.sort_unstable();
    ords.dedup();
    let jobs: Vec<(usize, Algorithm)> = ords
        .iter()
        .flat_map(|&r| algs.iter().map(move |&a| (r, a)))
        .collect();
    let cells = jobs
        .par_iter()
        .map(|&(order, algorithm)| {
            let mut c = cfg.clone();
            c.order = order;
            ReportCell {
                order,
                algorithm,
                outcome: evaluate_cell(full, algorithm, &c),
            }
        })
        .collect();
    Ok(ReductionReport {
        schema: REPORT_SCHEMA.to_string(),
        model: ModelSummary {
            name: name.map(str::to_string),
            n: full.n(),
            m: full.m(),
        },
        config: cfg.into(),
        algorithms: algs,
        orders: ords,
        cells,
    })
}

fn fmt_norm(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.4e}"),
        None => "-".to_string(),
    }
}

/// Aligned text tables: `‖Δ_mul‖_H2` by order and algorithm, then one detail
/// row per cell.
pub fn render_table(report: &ReductionReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{}", report.schema);
    let _ = writeln!(
        s,
        "model {} (n={}, m={})  seed={} epsilon={:e}",
        report.model.name.as_deref().unwrap_or("-"),
        report.model.n,
        report.model.m,
        report.config.seed,
        report.config.epsilon
    );
    let _ = writeln!(s);
    let _ = writeln!(s, "H2 norm of Delta_mul");
    let mut header = format!("{:>6}", "r");
    for a in &report.algorithms {
        let _ = write!(header, " {:>12}", a.name());
    }
    let _ = writeln!(s, "{header}");
    for &r in &report.orders {
        let mut row = format!("{r:>6}");
        for &a in &report.algorithms {
            let v = report.cell(a, r).map(|c| match &c.outcome {
                CellOutcome::Ok(m) => format!("{:.4e}", m.delta_mul),
                CellOutcome::Failed(_) => "failed".to_string(),
            });
            let _ = write!(row, " {:>12}", v.unwrap_or_default());
        }
        let _ = writeln!(s, "{row}");
    }
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:>6} {:>8} {:>12} {:>12} {:>12} {:>6} {:>5} {:>6} {:>6}  status",
        "r", "algo", "Delta_add", "Delta_mul", "Delta_rel", "iters", "conv", "stable", "minph"
    );
    for c in &report.cells {
        let m = c.metrics();
        let status = match &c.outcome {
            CellOutcome::Ok(_) => "ok".to_string(),
            CellOutcome::Failed(f) => format!(
                "{}: {}",
                serde_json::to_value(f.kind)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string))
                    .unwrap_or_default(),
                f.message
            ),
        };
        let flag = |b: Option<bool>| match b {
            Some(true) => "yes",
            Some(false) => "no",
            None => "-",
        };
        let _ = writeln!(
            s,
            "{:>6} {:>8} {:>12} {:>12} {:>12} {:>6} {:>5} {:>6} {:>6}  {}",
            c.order,
            c.algorithm.name(),
            fmt_norm(m.map(|m| m.delta_add)),
            fmt_norm(m.map(|m| m.delta_mul)),
            fmt_norm(m.and_then(|m| m.delta_rel)),
            m.and_then(|m| m.iterations).map_or("-".to_string(), |i| i.to_string()),
            flag(m.and_then(|m| m.converged)),
            flag(m.map(|m| m.stable)),
            flag(m.map(|m| m.minimum_phase)),
            status
        );
    }
    s
}

/// Path of the table written next to a report.
pub fn table_path(path: &Path) -> PathBuf {
    if path.extension().is_some_and(|e| e == "txt") {
        path.with_extension("table.txt")
    } else {
        path.with_extension("txt")
    }
}

/// Writes the report as pretty JSON to `path` and the aligned table next to it.
/// Timings are only written when `timings` is set.
pub fn emit_report(report: &ReductionReport, path: &Path, timings: bool) -> Result<Vec<PathBuf>> {
    let rep = if timings {
        report.clone()
    } else {
        report.without_timings()
    };
    let mut json = serde_json::to_string_pretty(&rep).map_err(|e| MorError::Io(e.to_string()))?;
    json.push('\n');
    std::fs::write(path, json).map_err(|e| MorError::Io(format!("{}: {e}", path.display())))?;
    let tp = table_path(path);
    std::fs::write(&tp, render_table(&rep)).map_err(|e| MorError::Io(format!("{}: {e}", tp.display())))?;
    Ok(vec![path.to_path_buf(), tp])
}

/// 400 log-spaced points on `[1e-2, 1e4]` rad/s.
pub fn default_sigma_grid() -> Vec<f64> {
    log_grid(1e-2, 1e4, 400)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaCsv {
    pub text: String,
    /// Cells emitted as `nan` because the resolvent was singular.
    pub nan_cells: usize,
}

fn csv_float(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:?}")
    }
}

/// CSV with a frequency column followed by `σ_max` of each system.
pub fn emit_sigma_csv(systems: &[(&str, &StateSpace)], grid: &[f64]) -> Result<SigmaCsv> {
    if let Some((_, first)) = systems.first() {
        if let Some((name, bad)) = systems.iter().find(|(_, s)| s.m() != first.m()) {
            return Err(MorError::Dimension(format!(
                "sigma: system {name:?} has {} ports, expected {}",
                bad.m(),
                first.m()
            )));
        }
    }
    let columns: Vec<Vec<f64>> = systems
        .iter()
        .map(|(_, s)| frequency_response(s, grid).map(|t| t.sigma_max()))
        .collect::<Result<_>>()?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| MorError::Io(e.to_string());
    let mut header = vec!["frequency".to_string()];
    header.extend(systems.iter().map(|(n, _)| n.to_string()));
    w.write_record(&header).map_err(csv_err)?;
    let mut nan_cells = 0;
    for (i, f) in grid.iter().enumerate() {
        let mut rec = vec![csv_float(*f)];
        for col in &columns {
            if col[i].is_nan() {
                nan_cells += 1;
            }
            rec.push(csv_float(col[i]));
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| MorError::Io(e.to_string()))?;
    Ok(SigmaCsv {
        text: String::from_utf8(bytes).map_err(|e| MorError::Io(e.to_string()))?,
        nan_cells,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tol: f64,
    /// `None` when the check could not be run; `note` says why.
    pub passed: Option<bool>,
    pub note: String,
}

impl Check {
    fn measured(name: &str, value: f64, tol: f64, note: impl Into<String>) -> Self {
        Check {
            name: name.to_string(),
            value,
            tol,
            passed: Some(value <= tol),
            note: note.into(),
        }
    }

    fn skipped(name: &str, tol: f64, why: impl ToString) -> Self {
        Check {
            name: name.to_string(),
            value: f64::NAN,
            tol,
            passed: None,
            note: why.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub order: usize,
    pub epsilon: f64,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| c.passed == Some(false)).count()
    }
}

/// `‖Δ_mul‖²` from the factored gramian of the assembled realization.
fn accurate_objective(full: &StateSpace, rom: &StateSpace) -> Result<f64> {
    Ok(h2_norm_factored(&build_delta_mul(full, rom)?)?.powi(2))
}

fn perturbed(rom: &StateSpace, h: f64, da: &Matrix, db: &Matrix, dc: &Matrix) -> Result<StateSpace> {
    StateSpace::new(
        rom.a() + da * h,
        rom.b() + db * h,
        rom.c() + dc * h,
        rom.d().clone(),
    )
}

/// Gradient, Gramian-identity and optimality-deviation checks of the
/// relative-error machinery on one model.
///
/// The balanced stochastic model of order `cfg.order` is the evaluation point
/// for the Gramian identities and the gradient; the deviation identity is
/// checked at a converged IRHMORA model.
pub fn verify_model(full: &StateSpace, cfg: &ReductionConfig) -> Result<VerifyReport> {
    cfg.validate(full.n())?;
    let reg = regularize_d(full, cfg.epsilon)?;
    let bst = balanced_stochastic_truncation(full, cfg.order, cfg)?;
    let mut checks = Vec::new();
    let (rom, point) = if bst.candidate.rom.is_minimum_phase() {
        (bst.candidate.rom.clone(), "balanced stochastic model")
    } else {
        (minimum_phase_variant(&bst.candidate.rom)?, "balanced stochastic model with C̄r = D B̄rᵀ P̂22⁻¹")
    };

    match gradients(&reg, &rom) {
        Ok(gb) => {
            let [p1, p2, p3] = gb.gramians.identity_residuals();
            checks.push(Check::measured("gramian identity Q12 + Q13 = 0", p1, 1e-8, point));
            checks.push(Check::measured("gramian identity Q33 + Q23 = 0", p2, 1e-8, point));
            checks.push(Check::measured("gramian identity Q33 - Q22 = 0", p3, 1e-8, point));
            let mut rng = crate::random::rng(cfg.seed);
            let mut worst: f64 = 0.0;
            for _ in 0..6 {
                let (r, m) = (rom.n(), rom.m());
                // Each block moves relative to its own size; the objective is far
                // more curved along a small C̄r than along Ār.
                let total = fro(rom.a()) + fro(rom.b()) + fro(rom.c());
                let sized = |g: Matrix, block: &Matrix| {
                    let n = fro(&g).max(f64::MIN_POSITIVE);
                    g * (fro(block).max(1e-8 * total) / n)
                };
                let da = sized(crate::random::gaussian(r, r, &mut rng), rom.a());
                let db = sized(crate::random::gaussian(r, m, &mut rng), rom.b());
                let dc = sized(crate::random::gaussian(m, r, &mut rng), rom.c());
                let h = 1e-6;
                let jp = accurate_objective(&reg, &perturbed(&rom, h, &da, &db, &dc)?)?;
                let jm = accurate_objective(&reg, &perturbed(&rom, -h, &da, &db, &dc)?)?;
                let fd = (jp - jm) / (2.0 * h);
                let an = gb.d_ar.dot(&da) + gb.d_br.dot(&db) + gb.d_cr.dot(&dc);
                let denom = an.abs().max(fd.abs()).max(1e-12 * gb.objective.max(1e-300));
                worst = worst.max((an - fd).abs() / denom);
            }
            checks.push(Check::measured(
                "gradient vs central differences",
                worst,
                1e-4,
                format!("{point}, worst of 6 random directions"),
            ));
        }
        Err(e) => checks.push(Check::skipped("gradient vs central differences", 1e-4, e)),
    }

    let mut tight = cfg.clone();
    tight.tol = tight.tol.min(1e-13);
    tight.max_iterations = tight.max_iterations.max(500);
    let name = "optimality residuals equal deviation formulas";
    match irhmora(full, &tight) {
        Ok(res) if res.converged && res.candidate.rom.is_minimum_phase() => {
            let eps_reg = regularize_d(full, res.epsilon)?;
            match identity_error(&eps_reg, &res.candidate) {
                Ok(v) => checks.push(Check::measured(name, v, 1e-8, "at converged IRHMORA model")),
                Err(e) => checks.push(Check::skipped(name, 1e-8, e)),
            }
        }
        Ok(res) => checks.push(Check::skipped(
            name,
            1e-8,
            if res.converged {
                "converged IRHMORA model is not minimum phase".to_string()
            } else {
                format!(
                    "IRHMORA did not converge in {} iterations{}",
                    res.iterations,
                    res.stopped.map(|s| format!(" ({s})")).unwrap_or_default()
                )
            },
        )),
        Err(e) => checks.push(Check::skipped(name, 1e-8, e)),
    }
    Ok(VerifyReport {
        order: cfg.order,
        epsilon: cfg.epsilon,
        checks,
    })
}

/// Same poles and input map, output map chosen so that the zeros
/// `λ(Ār - B̄r B̄rᵀ P̂22⁻¹)` are stable.
fn minimum_phase_variant(rom: &StateSpace) -> Result<StateSpace> {
    let p = crate::linalg::solve_lyapunov(rom.a(), &(rom.b() * rom.b().transpose()))?;
    let pi = crate::linalg::inverse(&p, "reduced controllability gramian")?;
    let c = rom.d() * rom.b().transpose() * pi;
    StateSpace::new(rom.a().clone(), rom.b().clone(), c, rom.d().clone())
}

/// Largest relative difference between each optimality residual and its deviation formula.
pub fn identity_error(full: &StateSpace, candidate: &RomCandidate) -> Result<f64> {
    let gb = gradients(full, &candidate.rom)?;
    let d = deviations(full, candidate)?;
    let pairs = [
        (&gb.opc.opc1, &d.d1),
        (&gb.opc.opc2, &d.d2),
        (&gb.opc.opc3, &d.d3),
    ];
    Ok(pairs
        .iter()
        .map(|(o, dv)| fro(&(*o - *dv)) / fro(o).max(fro(dv)).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max))
}
