//! Command-line driver: argument parsing, engine dispatch and reports.
//!
//! [`run`] never exits the process; it returns the exit code together with the
//! text destined for stdout and stderr so that it can be driven from tests.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use mucert::constellation::{build_system, describe, spectral_pair_system, ConstellationSpec, PolynomialSystem, Role, SystemReport};
use mucert::gridsearch::{exclusion_search, GridSpec, DEFAULT_BUDGET, DEFAULT_WITNESSES};
use mucert::groebner::{buchberger, extract_certificate, verify_certificate, Certificate, GroebnerOptions, Limits, Outcome};
use mucert::lasserre::{build_relaxation, run_hierarchy, HierarchyOptions, HierarchyVerdict};
use mucert::linalg::{fourier_matrix, mu_residual, spectral_matrix, ComplexMatrix, ResidualMode};
use mucert::poly::{MonomialOrder, Polynomial};
use mucert::sdpsolve::sdpa::write_sdpa;
use mucert::sdpsolve::SolverOptions;
use mucert::Error;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NONEXISTENT: i32 = 10;
pub const EXIT_FOUND: i32 = 11;
pub const EXIT_INCONCLUSIVE: i32 = 12;

#[derive(Debug, Parser, Serialize)]
#[command(name = "mucert", version, about = "Certify (non-)existence of MU constellations")]
pub struct Cli {
    /// Report format.
    #[arg(long, value_enum, default_value_t = ReportFormat::Json, global = true)]
    pub report: ReportFormat,

    /// Write the report (or the instance, for sdp-build) to this file.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Text,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NamedProblem {
    /// Two vectors unbiased to the identity and the 6×6 spectral matrix.
    SpectralPair,
    /// The same with one redundant unbiasedness condition dropped per vector.
    SpectralPairReduced,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct ProblemArgs {
    /// Dimension d.
    #[arg(long)]
    pub d: Option<usize>,
    /// Set sizes, e.g. `5,3,3,3`.
    #[arg(long)]
    pub sizes: Option<String>,
    /// A named built-in problem instead of --d/--sizes.
    #[arg(long, value_enum, conflicts_with_all = ["d", "sizes"])]
    pub problem: Option<NamedProblem>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SdpFormat {
    Sdpa,
    Json,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Size parameters of a constellation.
    Describe {
        #[command(flatten)]
        problem: ProblemArgs,
    },
    /// Emit the polynomial system as JSON.
    Polysys {
        #[command(flatten)]
        problem: ProblemArgs,
    },
    /// Gröbner basis, triviality test and certificate.
    Groebner {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, default_value = "grevlex")]
        order: String,
        #[arg(long)]
        max_pairs: Option<usize>,
        #[arg(long)]
        max_degree: Option<u32>,
        /// Approximate memory limit in bytes.
        #[arg(long)]
        max_memory: Option<usize>,
        /// Skip cofactor tracking.
        #[arg(long)]
        no_certificate: bool,
    },
    /// Exhaustive grid exclusion.
    Grid {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Uniform resolution R per phase.
        #[arg(long, required_unless_present = "per_var")]
        resolution: Option<u32>,
        /// Per-phase resolutions r1,r2,...
        #[arg(long, conflicts_with = "resolution")]
        per_var: Option<String>,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u128,
        #[arg(long, default_value_t = DEFAULT_WITNESSES)]
        witnesses: usize,
    },
    /// Build the moment relaxation and emit it as SDPA or JSON.
    SdpBuild {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        r: u32,
        /// Index of the polynomial whose square is minimized.
        #[arg(long, default_value_t = 0)]
        objective: usize,
        #[arg(long, value_enum, default_value_t = SdpFormat::Sdpa)]
        format: SdpFormat,
        /// Drop the kernel monomials implied by the constraints.
        #[arg(long)]
        reduced: bool,
    },
    /// Solve the relaxation hierarchy.
    SdpRun {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Level range `lo:hi` or a single level.
        #[arg(long, default_value = "2:4")]
        r: String,
        #[arg(long, default_value_t = 0)]
        objective: usize,
        /// Floor of the positivity threshold.
        #[arg(long, default_value_t = 1e-6)]
        threshold: f64,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 200)]
        max_iter: usize,
        /// Solve every level even after a verdict.
        #[arg(long)]
        full_table: bool,
    },
    /// Check a certificate file (as written by `groebner`).
    VerifyCert {
        /// JSON file with `certificate` and, optionally, `generators`.
        #[arg(long)]
        cert: PathBuf,
        #[command(flatten)]
        problem: ProblemArgs,
    },
    /// Floating-point MU residuals of matrices whose columns form bases.
    CheckMu {
        /// JSON matrix file, or `identity:d`, `fourier:d`, `spectral`.
        #[arg(long = "matrix", required = true)]
        matrices: Vec<String>,
    },
}

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

enum Problem {
    Constellation(ConstellationSpec),
    Named(NamedProblem),
}

impl Problem {
    fn system(&self) -> PolynomialSystem {
        match self {
            Problem::Constellation(spec) => build_system(spec),
            Problem::Named(NamedProblem::SpectralPair) => spectral_pair_system(false),
            Problem::Named(NamedProblem::SpectralPairReduced) => spectral_pair_system(true),
        }
    }
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Json(_) => Failure::Runtime(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

fn resolve(p: &ProblemArgs) -> Result<Problem, Failure> {
    if let Some(named) = p.problem {
        return Ok(Problem::Named(named));
    }
    match (p.d, &p.sizes) {
        (Some(d), Some(sizes)) => Ok(Problem::Constellation(ConstellationSpec::parse(d, sizes)?)),
        _ => Err(Failure::Usage("give --d and --sizes, or --problem".into())),
    }
}

fn constellation(p: &ProblemArgs) -> Result<ConstellationSpec, Failure> {
    match resolve(p)? {
        Problem::Constellation(spec) => Ok(spec),
        Problem::Named(_) => Err(Failure::Usage("this command needs --d and --sizes".into())),
    }
}

struct Report {
    code: i32,
    body: Map<String, Value>,
    text: String,
}

fn to_map(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        other => {
            let mut m = Map::new();
            m.insert("result".into(), other);
            m
        }
    }
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I) -> RunOutcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            return if code == EXIT_OK {
                RunOutcome {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            } else {
                RunOutcome {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            };
        }
    };
    match dispatch(&cli) {
        Ok(Dispatched::Report(rep)) => finish(&cli, rep),
        Ok(Dispatched::Raw(text)) => match &cli.output {
            Some(path) => match std::fs::write(path, &text) {
                Ok(()) => RunOutcome {
                    code: EXIT_OK,
                    stdout: String::new(),
                    stderr: String::new(),
                },
                Err(e) => failure(EXIT_RUNTIME, format!("cannot write {}: {e}", path.display())),
            },
            None => RunOutcome {
                code: EXIT_OK,
                stdout: text,
                stderr: String::new(),
            },
        },
        Err(Failure::Usage(msg)) => failure(EXIT_USAGE, msg),
        Err(Failure::Runtime(msg)) => failure(EXIT_RUNTIME, msg),
    }
}

fn failure(code: i32, msg: String) -> RunOutcome {
    RunOutcome {
        code,
        stdout: String::new(),
        stderr: format!("error: {msg}\n"),
    }
}

fn finish(cli: &Cli, rep: Report) -> RunOutcome {
    let out = match cli.report {
        ReportFormat::Json => {
            let mut doc = Map::new();
            doc.insert("version".into(), json!(VERSION));
            doc.insert("config".into(), serde_json::to_value(cli).unwrap_or(Value::Null));
            doc.insert("exit_code".into(), json!(rep.code));
            doc.extend(rep.body);
            let mut s = serde_json::to_string_pretty(&Value::Object(doc)).unwrap_or_default();
            s.push('\n');
            s
        }
        ReportFormat::Text => format!("mucert {VERSION}\n{}", rep.text),
    };
    match &cli.output {
        Some(path) => match std::fs::write(path, &out) {
            Ok(()) => RunOutcome {
                code: rep.code,
                stdout: String::new(),
                stderr: String::new(),
            },
            Err(e) => failure(EXIT_RUNTIME, format!("cannot write {}: {e}", path.display())),
        },
        None => RunOutcome {
            code: rep.code,
            stdout: out,
            stderr: String::new(),
        },
    }
}

enum Dispatched {
    Report(Report),
    /// Output written verbatim (instances).
    Raw(String),
}

fn dispatch(cli: &Cli) -> Result<Dispatched, Failure> {
    let rep = match &cli.command {
        Command::Describe { problem } => cmd_describe(problem)?,
        Command::Polysys { problem } => cmd_polysys(problem)?,
        Command::Groebner {
            problem,
            order,
            max_pairs,
            max_degree,
            max_memory,
            no_certificate,
        } => {
            let order: MonomialOrder = order.parse().map_err(|e: Error| Failure::Usage(e.to_string()))?;
            let opts = GroebnerOptions {
                order,
                limits: Limits {
                    max_pairs: *max_pairs,
                    max_degree: *max_degree,
                    max_memory: *max_memory,
                },
                track_cofactors: !no_certificate,
            };
            cmd_groebner(problem, &opts)?
        }
        Command::Grid {
            problem,
            resolution,
            per_var,
            budget,
            witnesses,
        } => cmd_grid(problem, *resolution, per_var.as_deref(), *budget, *witnesses)?,
        Command::SdpBuild {
            problem,
            r,
            objective,
            format,
            reduced,
        } => {
            let sys = resolve(problem)?.system();
            let rel = build_relaxation(&sys, *objective, *r)?;
            let inst = if *reduced { rel.to_sdp_reduced() } else { rel.to_sdp() };
            let text = match format {
                SdpFormat::Sdpa => write_sdpa(&inst),
                SdpFormat::Json => {
                    let mut s = serde_json::to_string(&inst).map_err(|e| Failure::Runtime(e.to_string()))?;
                    s.push('\n');
                    s
                }
            };
            return Ok(Dispatched::Raw(text));
        }
        Command::SdpRun {
            problem,
            r,
            objective,
            threshold,
            tol,
            max_iter,
            full_table,
        } => {
            let (lo, hi) = parse_range(r)?;
            let opts = HierarchyOptions {
                r_min: lo,
                r_max: hi,
                threshold: *threshold,
                stop_at_verdict: !full_table,
                solver: SolverOptions {
                    tol: *tol,
                    max_iter: *max_iter,
                    ..SolverOptions::default()
                },
                ..HierarchyOptions::default()
            };
            cmd_sdp_run(problem, *objective, &opts)?
        }
        Command::VerifyCert { cert, problem } => cmd_verify(cert, problem)?,
        Command::CheckMu { matrices } => cmd_check_mu(matrices)?,
    };
    Ok(Dispatched::Report(rep))
}

fn parse_range(s: &str) -> Result<(u32, u32), Failure> {
    let bad = || Failure::Usage(format!("bad level range `{s}`, expected lo:hi"));
    let (lo, hi) = match s.split_once(':') {
        Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?),
        None => {
            let r = s.trim().parse().map_err(|_| bad())?;
            (r, r)
        }
    };
    if lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn cmd_describe(p: &ProblemArgs) -> Result<Report, Failure> {
    match resolve(p)? {
        Problem::Constellation(spec) => {
            let c = describe(&spec);
            let text = format!(
                "{spec}: s={} phases={} real variables={} equations={} (quartic {}, modulus {})\n",
                c.s, c.num_phases, c.num_real_vars, c.n_eq, c.n_quartic, c.n_modulus
            );
            Ok(Report {
                code: EXIT_OK,
                body: to_map(json!({ "spec": spec, "counts": c })),
                text,
            })
        }
        Problem::Named(named) => {
            let sys = Problem::Named(named).system();
            let counts = json!({
                "num_real_vars": sys.nvars(),
                "n_eq": sys.polys.len(),
                "n_modulus": sys.count(Role::Modulus),
                "n_unbiasedness": sys.count(Role::Unbiasedness),
                "n_orthogonality": sys.count(Role::Orthogonality),
            });
            let text = format!("{}: real variables={} constraints={}\n", sys.label, sys.nvars(), sys.polys.len());
            Ok(Report {
                code: EXIT_OK,
                body: to_map(json!({ "problem": sys.label, "counts": counts })),
                text,
            })
        }
    }
}

fn cmd_polysys(p: &ProblemArgs) -> Result<Report, Failure> {
    let (body, sys) = match resolve(p)? {
        Problem::Constellation(spec) => {
            let rep = SystemReport::new(&spec);
            let sys = build_system(&spec);
            (serde_json::to_value(&rep), sys)
        }
        problem => {
            let sys = problem.system();
            (serde_json::to_value(&sys), sys)
        }
    };
    let body = body.map_err(|e| Failure::Runtime(e.to_string()))?;
    let names = sys.variable_names();
    let mut text = String::new();
    for (i, sp) in sys.polys.iter().enumerate() {
        let _ = writeln!(text, "p{} = {}   [{:?}]", i + 1, sp.poly.display(&names), sp.role);
    }
    Ok(Report {
        code: EXIT_OK,
        body: to_map(body),
        text,
    })
}

fn cmd_groebner(p: &ProblemArgs, opts: &GroebnerOptions) -> Result<Report, Failure> {
    let sys = resolve(p)?.system();
    let gens = sys.polynomials();
    let names = sys.variable_names();
    let outcome = buchberger(&gens, opts)?;
    let generators = serde_json::to_value(&gens).unwrap_or(Value::Null);
    match &outcome {
        Outcome::Done(trace) => {
            let basis = &trace.basis;
            let trivial = basis.is_trivial();
            let cert = if trivial && opts.track_cofactors {
                Some(extract_certificate(trace)?)
            } else {
                None
            };
            let code = if trivial { EXIT_NONEXISTENT } else { EXIT_INCONCLUSIVE };
            let mut text = format!(
                "{}: basis of {} polynomials, trivial={trivial}\n",
                sys.label,
                basis.generators.len()
            );
            if !trivial {
                for g in &basis.generators {
                    let _ = writeln!(text, "  {}", g.display(&names));
                }
            }
            if let Some(c) = &cert {
                for (i, r) in c.cofactors.iter().enumerate() {
                    let _ = writeln!(text, "r{} = {}", i + 1, r.display(&names));
                }
            }
            let _ = writeln!(
                text,
                "S-pairs {}, reductions {}, max degree {}",
                basis.stats.s_pairs, basis.stats.reductions, basis.stats.max_degree
            );
            Ok(Report {
                code,
                body: to_map(json!({
                    "status": "done",
                    "trivial": trivial,
                    "order": basis.order,
                    "basis": basis.generators,
                    "certificate": cert.map(|c| c.cofactors),
                    "generators": generators,
                    "variables": names,
                    "stats": basis.stats,
                })),
                text,
            })
        }
        Outcome::ResourceExceeded { stats, reason } => Ok(Report {
            code: EXIT_INCONCLUSIVE,
            body: to_map(json!({
                "status": "resource_exceeded",
                "trivial": Value::Null,
                "reason": reason,
                "basis": [],
                "certificate": Value::Null,
                "stats": stats,
            })),
            text: format!("{}: resource limit reached ({reason})\n", sys.label),
        }),
    }
}

fn cmd_grid(p: &ProblemArgs, resolution: Option<u32>, per_var: Option<&str>, budget: u128, witnesses: usize) -> Result<Report, Failure> {
    let spec = constellation(p)?;
    let grid = match (resolution, per_var) {
        (_, Some(list)) => {
            let rs = list
                .split(',')
                .map(|t| t.trim().parse::<u32>().map_err(|_| Failure::Usage(format!("bad resolution `{t}`"))))
                .collect::<Result<Vec<_>, _>>()?;
            GridSpec::per_variable(spec, rs)?
        }
        (Some(r), None) => GridSpec::uniform(spec, r)?,
        (None, None) => return Err(Failure::Usage("give --resolution or --per-var".into())),
    };
    let rep = exclusion_search(&grid, budget, witnesses)?;
    let code = if rep.is_excluded() { EXIT_NONEXISTENT } else { EXIT_INCONCLUSIVE };
    let text = format!(
        "{}: {} cells, {} surviving, verdict {:?} ({:.3} s)\n",
        rep.spec, rep.total_cells, rep.surviving, rep.verdict, rep.wall_time_s
    );
    Ok(Report {
        code,
        body: to_map(serde_json::to_value(&rep).map_err(|e| Failure::Runtime(e.to_string()))?),
        text,
    })
}

fn cmd_sdp_run(p: &ProblemArgs, objective: usize, opts: &HierarchyOptions) -> Result<Report, Failure> {
    let sys = resolve(p)?.system();
    let res = run_hierarchy(&sys, objective, opts)?;
    let code = match res.verdict {
        HierarchyVerdict::Nonexistent { .. } => EXIT_NONEXISTENT,
        HierarchyVerdict::Found { .. } => EXIT_FOUND,
        HierarchyVerdict::Inconclusive => EXIT_INCONCLUSIVE,
    };
    let mut text = String::new();
    let _ = writeln!(text, "{}: minimize p{}^2", sys.label, objective + 1);
    let _ = writeln!(
        text,
        "{:>3} {:>8} {:>10} {:>14} {:>11} {:>18} {:>8}",
        "r", "N_d", "matrix", "B_L(r)", "gap", "status", "time[s]"
    );
    for l in &res.levels {
        let _ = writeln!(
            text,
            "{:>3} {:>8} {:>10} {:>14.6e} {:>11.2e} {:>18} {:>8.2}",
            l.r,
            l.num_decisions,
            format!("{0}x{0}", l.matrix_size),
            l.bound,
            l.gap,
            format!("{:?}", l.status),
            l.wall_time_s
        );
    }
    let _ = writeln!(text, "verdict: {:?}", res.verdict);
    Ok(Report {
        code,
        body: to_map(serde_json::to_value(&res).map_err(|e| Failure::Runtime(e.to_string()))?),
        text,
    })
}

#[derive(Deserialize)]
struct CertFile {
    certificate: Option<Vec<Polynomial>>,
    #[serde(default)]
    generators: Option<Vec<Polynomial>>,
}

fn cmd_verify(path: &PathBuf, p: &ProblemArgs) -> Result<Report, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Runtime(format!("cannot read {}: {e}", path.display())))?;
    let file: CertFile = serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("malformed certificate file: {e}")))?;
    let cofactors = file
        .certificate
        .ok_or_else(|| Failure::Usage("certificate file has no `certificate` entry".into()))?;
    let gens = match (p.d.is_some() || p.problem.is_some(), file.generators) {
        (true, _) => resolve(p)?.system().polynomials(),
        (false, Some(g)) => g,
        (false, None) => return Err(Failure::Usage("no generators in the file; give --d/--sizes or --problem".into())),
    };
    let valid = verify_certificate(&gens, &Certificate { cofactors })?;
    Ok(Report {
        code: if valid { EXIT_NONEXISTENT } else { EXIT_INCONCLUSIVE },
        body: to_map(json!({ "valid": valid, "generators": gens.len() })),
        text: format!("certificate valid: {valid}\n"),
    })
}

fn load_matrix(spec: &str) -> Result<(String, ComplexMatrix), Failure> {
    let dim = |s: &str| -> Result<usize, Failure> { s.parse().map_err(|_| Failure::Usage(format!("bad dimension in `{spec}`"))) };
    let m = if spec == "spectral" {
        spectral_matrix()
    } else if let Some(d) = spec.strip_prefix("identity:") {
        ComplexMatrix::identity(dim(d)?)
    } else if let Some(d) = spec.strip_prefix("fourier:") {
        fourier_matrix(dim(d)?)?
    } else {
        let text = std::fs::read_to_string(spec).map_err(|e| Failure::Runtime(format!("cannot read {spec}: {e}")))?;
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("malformed matrix {spec}: {e}")))?
    };
    Ok((spec.to_string(), m))
}

fn cmd_check_mu(specs: &[String]) -> Result<Report, Failure> {
    let mats = specs.iter().map(|s| load_matrix(s)).collect::<Result<Vec<_>, _>>()?;
    let d = mats[0].1.rows();
    let mut text = String::new();
    let mut matrices = Vec::new();
    for (name, m) in &mats {
        if m.rows() != d {
            return Err(Failure::Usage(format!("{name} has {} rows, expected {d}", m.rows())));
        }
        let orth = mu_residual(&m.columns(), &[], d, ResidualMode::Orthogonal)?;
        let defect = m.unitarity_defect();
        let _ = writeln!(text, "{name}: unitarity defect {defect:.3e}, orthogonality residual {orth:.3e}");
        matrices.push(json!({ "name": name, "unitarity_defect": defect, "orthogonality_residual": orth }));
    }
    let mut pairs = Vec::new();
    for i in 0..mats.len() {
        for j in i + 1..mats.len() {
            let r = mu_residual(&mats[i].1.columns(), &mats[j].1.columns(), d, ResidualMode::Unbiased)?;
            let _ = writeln!(text, "{} vs {}: unbiasedness residual {r:.3e}", mats[i].0, mats[j].0);
            pairs.push(json!({ "a": mats[i].0, "b": mats[j].0, "residual": r }));
        }
    }
    Ok(Report {
        code: EXIT_OK,
        body: to_map(json!({ "dimension": d, "matrices": matrices, "pairs": pairs })),
        text,
    })
}
