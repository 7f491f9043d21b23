use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use relmor::algorithms::{Initialization, ReductionConfig};
use relmor::io::{load_model, save_model, ModelFile, ModelFormat, ModelMeta};
use relmor::report::{
    default_sigma_grid, emit_report, emit_sigma_csv, reduce_and_evaluate, render_table, run_comparison,
    verify_model, Algorithm, CellOutcome,
};
use relmor::ss::{log_grid, StateSpace};

/// Caps the worker threads used by `compare`.
const THREADS_ENV: &str = "RELMOR_THREADS";

#[derive(Parser)]
#[command(name = "relmor", version, about = "Relative-error H2 model order reduction experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reduce a model with one algorithm and write the reduced model.
    Reduce(ReduceArgs),
    /// Run an (algorithm × order) grid and write a report.
    Compare(CompareArgs),
    /// Write a CSV of the largest singular value over frequency.
    Sigma(SigmaArgs),
    /// Check gradients and Gramian identities of the relative-error machinery on a model.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Dense,
    Sparse,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Random,
    Dominant,
}

#[derive(Args)]
struct ModelArgs {
    /// Model file: dense text, or a sparse-triplet manifest.
    model: PathBuf,
    /// Input format; detected from the file when omitted.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Args)]
struct TuneArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Regularization used when D is rank deficient.
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
    #[arg(long = "max-iters", default_value_t = 200)]
    max_iters: usize,
    /// Relative pole-set change at which TSIA and IRHMORA stop.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Initial model for the iterative algorithms.
    #[arg(long, value_enum, default_value_t = InitArg::Random)]
    init: InitArg,
}

impl TuneArgs {
    fn config(&self, order: usize) -> ReductionConfig {
        let mut c = ReductionConfig::new(order);
        c.seed = self.seed;
        c.epsilon = self.epsilon;
        c.max_iterations = self.max_iters;
        c.tol = self.tol;
        c.init = match self.init {
            InitArg::Random => Initialization::Random,
            InitArg::Dominant => Initialization::DominantPoles,
        };
        c
    }
}

#[derive(Args)]
struct ReduceArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_parser = parse_algorithm)]
    algo: Algorithm,
    #[arg(long)]
    order: usize,
    #[command(flatten)]
    tune: TuneArgs,
    /// Where to write the reduced model (dense text).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Comma-separated algorithms.
    #[arg(long, value_delimiter = ',', value_parser = parse_algorithm, default_value = "bt,bst,tsia,irhmora")]
    algo: Vec<Algorithm>,
    /// Comma-separated reduced orders.
    #[arg(long, value_delimiter = ',', required = true)]
    orders: Vec<usize>,
    #[command(flatten)]
    tune: TuneArgs,
    /// Report path (JSON); the table goes next to it with a .txt extension.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Include wall-clock seconds (makes the report run-dependent).
    #[arg(long)]
    timings: bool,
}

#[derive(Args)]
struct SigmaArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Further models to tabulate next to the first one.
    #[arg(long = "rom")]
    roms: Vec<PathBuf>,
    #[arg(long, default_value_t = 1e-2)]
    wmin: f64,
    #[arg(long, default_value_t = 1e4)]
    wmax: f64,
    #[arg(long, default_value_t = 400)]
    points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    order: usize,
    #[command(flatten)]
    tune: TuneArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: relmor::MorError| e.to_string())
}

/// Failure that maps to an exit code.
enum Fail {
    /// Usage or IO problem (exit 2).
    Usage(String),
    /// The run completed with failed cells or checks (exit 1).
    Cells(usize),
}

impl From<relmor::MorError> for Fail {
    fn from(e: relmor::MorError) -> Self {
        Fail::Usage(e.to_string())
    }
}

fn load(args: &ModelArgs) -> Result<ModelFile, Fail> {
    let format = args.format.map(|f| match f {
        FormatArg::Dense => ModelFormat::Dense,
        FormatArg::Sparse => ModelFormat::SparseManifest,
    });
    Ok(load_model(&args.model, format)?)
}

fn model_name(file: &ModelFile, path: &Path) -> String {
    file.meta.name.clone().unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "model".into())
    })
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Fail> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Fail::Usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<String, Fail> {
    serde_json::to_string_pretty(v)
        .map(|s| s + "\n")
        .map_err(|e| Fail::Usage(e.to_string()))
}

fn reduce(a: ReduceArgs) -> Result<(), Fail> {
    let file = load(&a.model)?;
    let name = model_name(&file, &a.model.model);
    let cfg = a.tune.config(a.order);
    let (rom, outcome) = reduce_and_evaluate(&file.sys, a.algo, &cfg);
    if let (Some(rom), Some(out)) = (&rom, &a.out) {
        let meta = ModelMeta {
            name: Some(format!("{name} {} r={}", a.algo, a.order)),
            source: file.meta.name.clone().or(Some(a.model.model.display().to_string())),
        };
        save_model(out, rom, &meta)?;
    }
    let summary = serde_json::json!({
        "model": name,
        "algorithm": a.algo,
        "order": a.order,
        "outcome": outcome,
    });
    print!("{}", to_json(&summary)?);
    match outcome {
        CellOutcome::Ok(_) => Ok(()),
        CellOutcome::Failed(f) => {
            eprintln!("reduction failed: {}", f.message);
            Err(Fail::Cells(1))
        }
    }
}

fn compare(a: CompareArgs) -> Result<(), Fail> {
    let file = load(&a.model)?;
    let name = model_name(&file, &a.model.model);
    let cfg = a.tune.config(a.orders.first().copied().unwrap_or(1));
    let report = run_comparison(&file.sys, Some(&name), &a.algo, &a.orders, &cfg)?;
    let shown = if a.timings { report.clone() } else { report.without_timings() };
    if let Some(p) = &a.out {
        for w in emit_report(&report, p, a.timings)? {
            eprintln!("wrote {}", w.display());
        }
    }
    print!("{}", render_table(&shown));
    match report.failures() {
        0 => Ok(()),
        k => Err(Fail::Cells(k)),
    }
}

fn sigma(a: SigmaArgs) -> Result<(), Fail> {
    let first = load(&a.model)?;
    let mut systems: Vec<(String, StateSpace)> = vec![(model_name(&first, &a.model.model), first.sys)];
    for p in &a.roms {
        let f = load_model(p, None)?;
        systems.push((model_name(&f, p), f.sys));
    }
    let grid = if (a.wmin, a.wmax, a.points) == (1e-2, 1e4, 400) {
        default_sigma_grid()
    } else {
        if !(a.wmin > 0.0 && a.wmax >= a.wmin && a.points >= 1) {
            return Err(Fail::Usage("need 0 < wmin <= wmax and points >= 1".into()));
        }
        log_grid(a.wmin, a.wmax, a.points)
    };
    let refs: Vec<(&str, &StateSpace)> = systems.iter().map(|(n, s)| (n.as_str(), s)).collect();
    let csv = emit_sigma_csv(&refs, &grid)?;
    if csv.nan_cells > 0 {
        eprintln!("warning: {} cells at singular resolvents written as nan", csv.nan_cells);
    }
    write_out(a.out.as_deref(), &csv.text)
}

fn verify(a: VerifyArgs) -> Result<(), Fail> {
    let file = load(&a.model)?;
    let rep = verify_model(&file.sys, &a.tune.config(a.order))?;
    for c in &rep.checks {
        let status = match c.passed {
            Some(true) => "pass",
            Some(false) => "FAIL",
            None => "skip",
        };
        eprintln!("{status:>4}  {:<48} {:>10.3e} (tol {:.0e})  {}", c.name, c.value, c.tol, c.note);
    }
    write_out(a.out.as_deref(), &to_json(&rep)?)?;
    match rep.failures() {
        0 => Ok(()),
        k => Err(Fail::Cells(k)),
    }
}

fn configure_threads() -> Result<(), Fail> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Fail::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Fail::Usage(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = configure_threads().and_then(|_| match cli.cmd {
        Command::Reduce(a) => reduce(a),
        Command::Compare(a) => compare(a),
        Command::Sigma(a) => sigma(a),
        Command::Verify(a) => verify(a),
    });
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail::Cells(k)) => {
            eprintln!("{k} failed cell(s)");
            ExitCode::from(1)
        }
        Err(Fail::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
