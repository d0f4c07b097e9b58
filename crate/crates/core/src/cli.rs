//! Command-line front end. Exit codes: 0 pass, 1 condition failure,
//! 2 input error, 3 structural precondition missing.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::catalog::{builtin, BUILTIN_TAGS};
use crate::classify::{classify, SearchOptions};
use crate::error::Error;
use crate::io::{read_document, to_canonical_json, write_atomic, SolutionSpaceDocument, TripleDocument, TwistDocument};
use crate::lattice::{analytic_slope, boundedness_scan, fit_scan, scan_to_csv, scan_to_json, PlaneWavePair, TcalChoice};
use crate::linalg::{identity, operator_norm, ComplexMatrix};
use crate::report::RunReport;
use crate::triple::{verify_axioms, FiniteSpectralTriple};
use crate::twist::{
    direct_twisted_first_order, direct_twisted_order_zero, finite_first_order_conditions,
    finite_order_zero_conditions, validate_twisting_operator, TwistingOperator,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_MISSING_STRUCTURE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ncg-twist", version, about = "Finite spectral triples, twisting operators and their classification")]
pub struct Cli {
    /// Verification tolerance.
    #[arg(long, global = true, env = "NCG_TWIST_TOL", default_value_t = 1e-8)]
    pub tol: f64,
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Print JSON instead of the text summary.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check every axiom of a finite triple.
    Verify(VerifyArgs),
    /// Check a twisting operator against a triple.
    TwistCheck(TwistCheckArgs),
    /// Classify the admissible twisting operators of a triple.
    Classify(ClassifyArgs),
    /// Boundedness scan of the twisted commutator on a lattice product.
    LatticeDemo(LatticeArgs),
    /// Write a builtin triple, or one of its twists, as JSON.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Triple document path or builtin tag.
    pub triple: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TwistCheckArgs {
    pub triple: String,
    /// Twist document path, or `grading` / `identity`.
    pub twist: String,
    #[arg(long)]
    pub no_first_order: bool,
    /// Random pairs in the direct checks.
    #[arg(long, default_value_t = 8)]
    pub samples: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    pub triple: String,
    #[arg(long, default_value_t = 64)]
    pub starts: usize,
    #[arg(long)]
    pub no_first_order: bool,
    /// Write the solution-space document here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Include wall-clock time in the report.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TcalArg {
    Gamma,
    Identity,
}

#[derive(Debug, Args)]
pub struct LatticeArgs {
    pub triple: String,
    #[arg(long, value_enum, default_value_t = TcalArg::Gamma)]
    pub tcal: TcalArg,
    /// Cutoffs.
    #[arg(long = "N", value_delimiter = ',', default_values_t = [4usize, 8, 16, 32])]
    pub cutoffs: Vec<usize>,
    /// Torus side length.
    #[arg(long = "L", default_value_t = std::f64::consts::TAU)]
    pub torus_length: f64,
    /// Finite twist: path, or `grading`.
    #[arg(long, default_value = "grading")]
    pub twist: String,
    /// Index of the algebra basis element used as `m` in the pair `(1⊗m, 0)`.
    #[arg(long, default_value_t = 0)]
    pub element: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Builtin tag.
    pub tag: String,
    /// Export this twist of the triple instead: `grading` or `identity`.
    #[arg(long)]
    pub twist: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Failure carrying an exit code.
struct Exit(i32, String);

impl From<Error> for Exit {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::MissingRealStructure => EXIT_MISSING_STRUCTURE,
            _ => EXIT_INPUT,
        };
        Exit(code, e.to_string())
    }
}

type CmdResult = std::result::Result<i32, Exit>;

/// Parses `args` and runs the command. Returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_PASS };
        }
    };
    let echo: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    if !(cli.tol.is_finite() && cli.tol > 0.0) {
        eprintln!("error: --tol must be a positive number");
        return EXIT_INPUT;
    }
    let result = match &cli.command {
        Command::Verify(a) => cmd_verify(&cli, a, echo),
        Command::TwistCheck(a) => cmd_twist_check(&cli, a, echo),
        Command::Classify(a) => cmd_classify(&cli, a, echo),
        Command::LatticeDemo(a) => cmd_lattice_demo(&cli, a, echo),
        Command::Export(a) => cmd_export(a),
    };
    match result {
        Ok(code) => code,
        Err(Exit(code, msg)) => {
            eprintln!("error: {msg}");
            code
        }
    }
}

fn load_triple(source: &str) -> std::result::Result<FiniteSpectralTriple, Exit> {
    let path = Path::new(source);
    if path.exists() {
        let doc: TripleDocument = read_document(path)?;
        return Ok(doc.to_triple()?);
    }
    builtin(source).ok_or_else(|| {
        Exit(
            EXIT_INPUT,
            format!("`{source}` is neither a file nor a builtin tag ({})", BUILTIN_TAGS.join(", ")),
        )
    })
}

fn load_twist(source: &str, t: &FiniteSpectralTriple) -> std::result::Result<ComplexMatrix, Exit> {
    match source {
        "grading" => t
            .grading()
            .cloned()
            .ok_or_else(|| Exit(EXIT_MISSING_STRUCTURE, format!("triple `{}` has no grading", t.name()))),
        "identity" => Ok(identity(t.hilbert_dim())),
        path => {
            let doc: TwistDocument = read_document(Path::new(path))?;
            let m = doc.to_matrix()?;
            if m.nrows() != t.hilbert_dim() {
                return Err(Exit(
                    EXIT_INPUT,
                    format!("twist is {}x{}, triple has dimension {}", m.nrows(), m.ncols(), t.hilbert_dim()),
                ));
            }
            Ok(m)
        }
    }
}

fn emit(cli: &Cli, report: &RunReport, out: Option<&Path>) -> std::result::Result<(), Exit> {
    let json = report.to_json();
    if let Some(p) = out {
        write_atomic(p, &json)?;
    }
    if cli.json {
        print!("{json}");
    } else {
        print!("{}", report.to_text());
    }
    Ok(())
}

fn verdict_code(pass: bool) -> i32 {
    if pass {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

fn cmd_verify(cli: &Cli, a: &VerifyArgs, echo: Vec<String>) -> CmdResult {
    let t = load_triple(&a.triple)?;
    let mut run = RunReport::new(echo);
    run.set("tol", cli.tol);
    run.set("triple", t.name());
    run.add_report("axioms", verify_axioms(&t, cli.tol));
    emit(cli, &run, a.out.as_deref())?;
    Ok(verdict_code(run.overall_pass))
}

fn cmd_twist_check(cli: &Cli, a: &TwistCheckArgs, echo: Vec<String>) -> CmdResult {
    let t = load_triple(&a.triple)?;
    let x = load_twist(&a.twist, &t)?;
    t.require_real_structure()?;
    let first_order = !a.no_first_order;
    let mut run = RunReport::new(echo);
    run.set("tol", cli.tol);
    run.set("seed", cli.seed);
    run.set("triple", t.name());
    run.set("first_order", first_order);
    run.set("samples", a.samples as u64);
    run.add_report("validate", validate_twisting_operator(&x, &t, cli.tol));
    run.add_report("order_zero", finite_order_zero_conditions(&x, &t, cli.tol)?);
    if first_order {
        run.add_report("first_order", finite_first_order_conditions(&x, &t, cli.tol)?);
    }
    let op = TwistingOperator::finite(x)?;
    let mut direct = crate::triple::ConstraintReport::new();
    direct.check("order_zero", direct_twisted_order_zero(&op, &t, a.samples, cli.seed)?, cli.tol);
    if first_order {
        direct.check("first_order", direct_twisted_first_order(&op, &t, a.samples, cli.seed)?, cli.tol);
    }
    run.add_report("direct", direct);
    emit(cli, &run, a.out.as_deref())?;
    Ok(verdict_code(run.overall_pass))
}

fn cmd_classify(cli: &Cli, a: &ClassifyArgs, echo: Vec<String>) -> CmdResult {
    let t = load_triple(&a.triple)?;
    t.require_real_structure()?;
    let opts = SearchOptions {
        starts: a.starts,
        seed: cli.seed,
        include_first_order: !a.no_first_order,
        tol: cli.tol,
        ..SearchOptions::default()
    };
    let started = Instant::now();
    let space = classify(&t, &opts)?;
    let doc = SolutionSpaceDocument::new(t.name(), &opts, &space);
    let mut run = RunReport::new(echo);
    run.set("tol", cli.tol);
    run.set("seed", cli.seed);
    run.set("starts", a.starts as u64);
    run.set("triple", t.name());
    run.set("first_order", opts.include_first_order);
    if a.timing {
        run.timing_seconds = Some(started.elapsed().as_secs_f64());
    }
    if let Some(p) = &a.out {
        write_atomic(p, &to_canonical_json(&doc))?;
    }
    run.solution_space = Some(doc);
    if cli.json {
        print!("{}", run.to_json());
    } else {
        print!("{}", run.to_text());
    }
    Ok(EXIT_PASS)
}

fn cmd_lattice_demo(cli: &Cli, a: &LatticeArgs, echo: Vec<String>) -> CmdResult {
    if a.cutoffs.is_empty() {
        return Err(Exit(EXIT_INPUT, "--N needs at least one cutoff".into()));
    }
    if !(a.torus_length.is_finite() && a.torus_length > 0.0) {
        return Err(Exit(EXIT_INPUT, "--L must be positive".into()));
    }
    let t = load_triple(&a.triple)?;
    let t_finite = load_twist(&a.twist, &t)?;
    let m = t
        .algebra_basis()
        .get(a.element)
        .cloned()
        .ok_or_else(|| Exit(EXIT_INPUT, format!("--element {} out of range", a.element)))?;
    let tcal = match a.tcal {
        TcalArg::Gamma => TcalChoice::Gamma,
        TcalArg::Identity => TcalChoice::Identity,
    };
    let pair = PlaneWavePair::constant(m.clone());
    let points = boundedness_scan(&tcal, &t_finite, &t, &a.cutoffs, &pair, a.torus_length)?;
    let csv = scan_to_csv(&points, tcal.tag());
    if let Some(p) = &a.out {
        write_atomic(p, &csv)?;
    }
    let predicted = analytic_slope(a.torus_length) * operator_norm(&(&t_finite * &m));
    if cli.json {
        print!("{}", scan_to_json(&points, tcal.tag(), a.torus_length));
        println!();
    } else {
        println!("command: {}", echo.join(" "));
        print!("{csv}");
        if let Some(fit) = fit_scan(&points) {
            println!("predicted unbounded slope: {predicted}");
            println!("measured slope: {}", fit.slope);
        }
    }
    Ok(EXIT_PASS)
}

fn cmd_export(a: &ExportArgs) -> CmdResult {
    let t = builtin(&a.tag).ok_or_else(|| {
        Exit(EXIT_INPUT, format!("unknown builtin `{}` ({})", a.tag, BUILTIN_TAGS.join(", ")))
    })?;
    let text = match &a.twist {
        Some(source) => to_canonical_json(&TwistDocument::from_matrix(&load_twist(source, &t)?)),
        None => to_canonical_json(&TripleDocument::from_triple(&t)),
    };
    match &a.out {
        Some(p) => write_atomic(p, &text)?,
        None => print!("{text}"),
    }
    Ok(EXIT_PASS)
}
