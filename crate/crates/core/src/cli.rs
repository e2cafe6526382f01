//! Command-line front end. Exit codes: 0 success or property holds, 1 usage
//! or internal error, 2 no convergence, 3 property violated.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{
    check_cocoercive, check_firmly_nonexpansive, check_monotone, check_pseudomonotone, check_quasicontraction,
    estimate_lipschitz_type, estimate_map_expansion, estimate_strong_monotonicity, PropertyReport, SampleSpec,
};
use crate::bench::{self, counterexample_rows, BenchConfig, DEFAULT_COUNTEREXAMPLE_LAMBDAS};
use crate::bifunction::BifunctionKind;
use crate::error::{Error, Result};
use crate::geometry::Vector;
use crate::iteration::{IterationConfig, KmRelaxation, RunStatus, Scheme};
use crate::linalg::Matrix;
use crate::problems::ProblemInstance;
use crate::proxmaps::{MapKind, ProxMap};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_VIOLATED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "epfix", version, about = "Fixed-point solvers and property checks for equilibrium problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a fixed-point iteration on a problem.
    Solve(SolveArgs),
    /// Check a monotonicity or nonexpansiveness property by sampling.
    Check(CheckArgs),
    /// Print B_λ((1,0)) on the rotation problem against its closed form.
    Counterexample(CounterexampleArgs),
    /// Run the benchmark matrix over the bundled problems.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Name of a bundled problem.
    #[arg(long)]
    builtin: Option<String>,
    /// Path to a JSON problem file.
    #[arg(long)]
    problem: Option<PathBuf>,
}

impl Source {
    fn load(&self) -> Result<ProblemInstance> {
        match (&self.builtin, &self.problem) {
            (Some(name), _) => ProblemInstance::builtin(name),
            (None, Some(path)) => ProblemInstance::load(path),
            (None, None) => Err(Error::InvalidInput("either --builtin or --problem is required".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SchemeArg {
    Picard,
    Km,
    Halpern,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, value_parser = parse_map, default_value = "B")]
    map: MapKind,
    #[arg(long, value_enum, default_value = "picard")]
    scheme: SchemeArg,
    /// Relaxation for the km scheme.
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long = "max-iter", default_value_t = 1000)]
    max_iter: usize,
    /// Starting point as comma-separated values; defaults to all ones.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    x0: Option<Vec<f64>>,
    /// Write the per-iteration trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the JSON summary here instead of stdout.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Property {
    Monotone,
    StrongMonotone,
    Pseudomonotone,
    LipschitzType,
    Expansion,
    Quasicontraction,
    FirmlyNonexpansive,
    Cocoercive,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, value_enum)]
    property: Property,
    #[arg(long, value_parser = parse_map, default_value = "B")]
    map: MapKind,
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    /// Contraction factor for `quasicontraction`; defaults to the
    /// closed-form factor for B when it applies, else 1.
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Write the report as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CounterexampleArgs {
    #[arg(long, value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = BenchConfig::default().samples)]
    samples: usize,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_map(s: &str) -> std::result::Result<MapKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    let result = match cli.command {
        Command::Solve(a) => solve(&a, out, err),
        Command::Check(a) => check(&a, out),
        Command::Counterexample(a) => counterexample(&a, out),
        Command::Bench(a) => run_bench(&a, out, err),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}

fn io(e: std::io::Error) -> Error {
    Error::Io(e.to_string())
}

fn emit(text: &str, path: Option<&PathBuf>, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, format!("{text}\n")).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => writeln!(out, "{text}").map_err(io),
    }
}

fn solve(a: &SolveArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let inst = a.source.load()?;
    let n = inst.bifunction.dimension();
    let x0 = match &a.x0 {
        Some(v) => Vector::from_slice(v)?,
        None => Vector::new(vec![1.0; n])?,
    };
    let scheme = match a.scheme {
        SchemeArg::Picard => Scheme::Picard,
        SchemeArg::Km => Scheme::KrasnoselskiiMann(KmRelaxation::Constant(a.alpha)),
        SchemeArg::Halpern => Scheme::Halpern { anchor: None },
    };
    let cfg = IterationConfig::new(scheme, a.map, a.lambda)
        .with_tol(a.tol)
        .with_max_iterations(a.max_iter)
        .with_reference(inst.known_solution.clone());
    let (trace, summary) = inst.solve(&x0, &cfg)?;
    if trace.start_projected {
        writeln!(err, "warning: starting point was outside the set and has been projected").map_err(io)?;
    }
    if let Some(path) = &a.trace {
        let file = std::fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        trace.write_csv(file)?;
    }
    let text = serde_json::to_string_pretty(&summary).expect("summaries serialize");
    emit(&text, a.summary.as_ref(), out)?;
    if let Some(msg) = &summary.error {
        writeln!(err, "error: {msg}").map_err(io)?;
    }
    Ok(match summary.status {
        RunStatus::Converged => EXIT_OK,
        RunStatus::MaxIter | RunStatus::Uncertified => EXIT_NOT_CONVERGED,
        RunStatus::Error => EXIT_ERROR,
    })
}

fn check(a: &CheckArgs, out: &mut dyn Write) -> Result<i32> {
    let inst = a.source.load()?;
    let spec = SampleSpec::over(&inst.set, a.samples, a.seed)?;
    let f = &inst.bifunction;
    let domain = Some(&inst.set);
    let map = ProxMap::new(f, &inst.set, a.map, a.lambda);
    let report = match a.property {
        Property::Monotone => check_monotone(f, domain, &spec)?,
        Property::StrongMonotone => estimate_strong_monotonicity(f, domain, &spec)?,
        Property::Pseudomonotone => check_pseudomonotone(f, domain, &spec)?,
        Property::LipschitzType => estimate_lipschitz_type(f, domain, &spec)?,
        Property::Expansion => estimate_map_expansion(&map, &spec)?,
        Property::FirmlyNonexpansive => check_firmly_nonexpansive(&map, &spec)?,
        Property::Quasicontraction => {
            let x_star = inst
                .known_solution
                .as_ref()
                .ok_or_else(|| Error::InvalidInput("quasicontraction needs a known solution".into()))?;
            let p = &inst.profile;
            let rho = a.rho.unwrap_or_else(|| {
                let alpha = 1.0 - 2.0 * a.lambda * (p.tau - p.l1);
                if a.map == MapKind::B && p.tau > p.l1 && (0.0..1.0).contains(&alpha) {
                    alpha.sqrt()
                } else {
                    1.0
                }
            });
            check_quasicontraction(&map, x_star, rho, &spec)?
        }
        Property::Cocoercive => {
            let (mat, b) = match f.kind() {
                BifunctionKind::MviAffine { a, b } => (a.clone(), b.clone()),
                BifunctionKind::Rotation => (Matrix::rotation(), Vector::zeros(2)),
                BifunctionKind::Bilinear { .. } => {
                    return Err(Error::InvalidInput("cocoercivity applies to mvi-affine and rotation problems".into()))
                }
            };
            check_cocoercive(&mat, &b, &SampleSpec::cube(mat.rows(), -10.0, 10.0, a.samples, a.seed)?)?
        }
    };
    print_report(&report, out)?;
    if let Some(path) = &a.out {
        let text = serde_json::to_string_pretty(&report).expect("reports serialize");
        emit(&text, Some(path), out)?;
    }
    Ok(if report.holds() { EXIT_OK } else { EXIT_VIOLATED })
}

fn print_report(r: &PropertyReport, out: &mut dyn Write) -> Result<()> {
    let modulus = r.estimated_modulus.map_or("-".to_string(), |m| format!("{m:.9}"));
    let class = r
        .classification
        .map_or(String::new(), |c| serde_json::to_string(&c).expect("serializes"));
    writeln!(out, "{:<22} {:<9} {:>16} {:>14} {:>9} {:>6}  {}", "property", "verdict", "worst_violation", "modulus", "samples", "seed", "class")
        .map_err(io)?;
    let verdict = if r.holds() { "holds" } else { "violated" };
    writeln!(
        out,
        "{:<22} {:<9} {:>16.6e} {:>14} {:>9} {:>6}  {}",
        r.property, verdict, r.worst_violation, modulus, r.samples_used, r.seed, class
    )
    .map_err(io)
}

fn counterexample(a: &CounterexampleArgs, out: &mut dyn Write) -> Result<i32> {
    let lambdas = a.lambdas.clone().unwrap_or_else(|| DEFAULT_COUNTEREXAMPLE_LAMBDAS.to_vec());
    let rows = counterexample_rows(&lambdas)?;
    writeln!(out, "{:>10} {:>24} {:>12} {:>12} {:>6}", "lambda", "B(1,0)", "ratio", "sqrt(1+l^2)", "ok").map_err(io)?;
    for r in &rows {
        writeln!(
            out,
            "{:>10} {:>24} {:>12.9} {:>12.9} {:>6}",
            r.lambda,
            format!("({:.9}, {:.9})", r.image[0], r.image[1]),
            r.ratio,
            r.predicted_ratio,
            r.agrees
        )
        .map_err(io)?;
    }
    Ok(if rows.iter().all(|r| r.agrees) { EXIT_OK } else { EXIT_ERROR })
}

fn run_bench(a: &BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let report = bench::run(&BenchConfig {
        seed: a.seed,
        samples: a.samples,
    })?;
    emit(&report.to_json(), a.out.as_ref(), out)?;
    for cell in report.failures() {
        writeln!(
            err,
            "failed cell: {} {} lambda={} {:?} estimate={} bound={}",
            cell.instance, cell.map, cell.lambda, cell.check, cell.estimate, cell.bound
        )
        .map_err(io)?;
    }
    Ok(if report.passed { EXIT_OK } else { EXIT_VIOLATED })
}
