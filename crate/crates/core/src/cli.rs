//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::Parser;

use crate::audit::{run_audit, AuditCase, AuditReport};
use crate::error::{Error, Result};
use crate::jdsvd::{solve, Mode, RunReport, SolverConfig, Termination};
use crate::market::load_matrix_market;
use crate::operator::DEFAULT_AUDIT_CAP;
use crate::report::{csv_summary, ConfigEcho, ReportDocument, RunSection};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
/// Partial convergence, or audit violations.
pub const EXIT_INCOMPLETE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "ipjdsvd",
    version,
    about = "Singular triplets of a sparse matrix nearest a target, by thick-restart Jacobi-Davidson"
)]
pub struct Args {
    /// Matrix Market file (coordinate or array, real/integer/pattern).
    #[arg(long, value_name = "PATH", required_unless_present = "audit", conflicts_with = "audit")]
    pub matrix: Option<PathBuf>,

    /// Target τ ≥ 0.
    #[arg(long, default_value_t = 0.0)]
    pub tau: f64,

    /// Number of triplets wanted.
    #[arg(long, default_value_t = 1)]
    pub num: usize,

    /// Outer tolerance relative to ‖A‖_e.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,

    #[arg(long, default_value_t = 30)]
    pub kmax: usize,

    #[arg(long, default_value_t = 3)]
    pub kmin: usize,

    #[arg(long, default_value_t = 0.05)]
    pub pretol1: f64,

    #[arg(long, default_value_t = 0.01)]
    pub pretol2: f64,

    /// Inner solve accuracy ε̃.
    #[arg(long, default_value_t = 1e-4)]
    pub eps_inner: f64,

    #[arg(long, default_value = "ipjdsvd", value_parser = parse_mode)]
    pub mode: Mode,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Cap on correction-equation solves (default 500·num).
    #[arg(long)]
    pub maxit_outer: Option<usize>,

    /// Write a JSON report here.
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,

    /// Run an audit case instead of a solve.
    #[arg(long, value_name = "CASE", value_parser = parse_case)]
    pub audit: Option<AuditCase>,

    /// Randomized trials per audit check.
    #[arg(long, default_value_t = 50)]
    pub trials: usize,

    /// Largest M + N for dense assembly.
    #[arg(long, default_value_t = DEFAULT_AUDIT_CAP)]
    pub audit_cap: usize,

    /// Leave timestamps and timings out of the report.
    #[arg(long)]
    pub no_timestamp: bool,

    /// Include singular vectors in the report.
    #[arg(long)]
    pub emit_vectors: bool,

    /// Write a CSV summary (index, value, residual) here.
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
}

fn parse_mode(s: &str) -> std::result::Result<Mode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_case(s: &str) -> std::result::Result<AuditCase, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl Args {
    pub fn solver_config(&self) -> SolverConfig {
        let mut cfg = SolverConfig::new(self.tau, self.num).with_mode(self.mode).with_tol(self.tol);
        cfg.k_max = self.kmax;
        cfg.k_min = self.kmin;
        cfg.pretol1 = self.pretol1;
        cfg.pretol2 = self.pretol2;
        cfg.eps_inner = self.eps_inner;
        cfg.seed = self.seed;
        cfg.maxit_outer = self.maxit_outer;
        cfg.audit_cap = self.audit_cap;
        cfg
    }
}

/// Runs the tool on `argv` (including the program name) using the process
/// streams.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// As [`run`], writing to the given streams.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match args.audit {
        Some(case) => audit_command(&args, case, out),
        None => solve_command(&args, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn io_err(e: std::io::Error) -> Error {
    Error::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    }
}

fn solve_command(args: &Args, out: &mut dyn Write) -> Result<i32> {
    let path = args.matrix.as_ref().expect("clap requires --matrix without --audit");
    let a = load_matrix_market(path)?;
    let cfg = args.solver_config();
    let run = solve(&a, &cfg)?;

    let mut echo = ConfigEcho::new(&cfg);
    echo.matrix = Some(path.display().to_string());
    echo.shape = Some(a.shape());
    echo.nnz = Some(a.nnz());
    let mut doc = ReportDocument::new(echo, !args.no_timestamp);
    doc.run = Some(RunSection::new(&run, cfg.ell, args.emit_vectors, !args.no_timestamp));
    // serialize first so a bad report is an error before anything is written
    let json = doc.to_json()?;
    if let Some(p) = &args.report {
        write_file(p, &json)?;
    }
    if let Some(p) = &args.csv {
        write_file(p, &csv_summary(&run))?;
    }
    print_run(out, &a.shape(), &cfg, &run, !args.no_timestamp).map_err(io_err)?;

    let complete = run.termination == Termination::Converged && run.triplets.len() == cfg.ell;
    Ok(if complete { EXIT_OK } else { EXIT_INCOMPLETE })
}

fn audit_command(args: &Args, case: AuditCase, out: &mut dyn Write) -> Result<i32> {
    let report = run_audit(case, args.trials, args.seed, args.audit_cap)?;
    let mut echo = ConfigEcho::new(&args.solver_config());
    echo.trials = Some(args.trials);
    let mut doc = ReportDocument::new(echo, !args.no_timestamp);
    doc.audit = Some(report.clone());
    let json = doc.to_json()?;
    if let Some(p) = &args.report {
        write_file(p, &json)?;
    }
    print_audit(out, &report).map_err(io_err)?;
    Ok(if report.passed() { EXIT_OK } else { EXIT_INCOMPLETE })
}

fn print_run(
    out: &mut dyn Write,
    shape: &(usize, usize),
    cfg: &SolverConfig,
    run: &RunReport,
    timing: bool,
) -> std::io::Result<()> {
    writeln!(
        out,
        "{} x {} matrix, tau = {}, mode = {:?}, tol = {:e}",
        shape.0, shape.1, cfg.tau, cfg.mode, cfg.tol
    )?;
    writeln!(out, "{:>4}  {:>24}  {:>12}  {:>6}", "#", "sigma", "residual", "outer")?;
    for (i, t) in run.triplets.iter().enumerate() {
        writeln!(
            out,
            "{:>4}  {:>24.16e}  {:>12.4e}  {:>6}",
            i + 1,
            t.value,
            t.residual,
            t.outer_iteration
        )?;
    }
    write!(
        out,
        "converged {}/{} ({:?}), outer iterations {}, MVs {}",
        run.triplets.len(),
        cfg.ell,
        run.termination,
        run.outer_iterations,
        run.mvs
    )?;
    if timing {
        write!(out, ", {:.3} s", run.wall_time)?;
    }
    writeln!(out)
}

fn print_audit(out: &mut dyn Write, report: &AuditReport) -> std::io::Result<()> {
    writeln!(out, "audit {} (trials {}, seed {})", report.case, report.trials, report.seed)?;
    writeln!(
        out,
        "{:<34} {:>7} {:>7} {:>10} {:>12}  result",
        "check", "trials", "skipped", "violations", "margin"
    )?;
    for c in &report.checks {
        let margin = c.worst_margin.map_or_else(|| "-".to_string(), |m| format!("{m:.3e}"));
        writeln!(
            out,
            "{:<34} {:>7} {:>7} {:>10} {:>12}  {}",
            c.name,
            c.trials,
            c.skipped,
            c.violations,
            margin,
            if c.passed() { "ok" } else { "VIOLATED" }
        )?;
    }
    writeln!(out, "total violations {}", report.violations())
}
