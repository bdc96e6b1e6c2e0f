//! Command-line drivers for `qcomb`: optimal cloning and learning of unitaries,
//! causality verification of stored operators and random comb generation.

pub mod format;
pub mod record;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use qcomb_core::comb::{random_comb, verify_causality, CausalityReport};
use qcomb_core::objective::{
    cloning_objective, cloning_reference, estimation_reference, learning_objective, PerformanceOperator,
};
use qcomb_core::optimizer::{run as run_solver, SdpProblem, SdpSolution};
use qcomb_core::CombStructure;
use serde_json::{json, Value};

use format::OperatorFile;
use record::{Parameters, Reference, ResultRecord};

/// Environment variable holding the thread count for numerical kernels.
pub const THREADS_ENV: &str = "QCOMB_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    NoConvergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Input(_) | CliError::Io(_) => 2,
            CliError::NoConvergence(_) => 3,
        }
    }
}

impl From<qcomb_core::Error> for CliError {
    fn from(e: qcomb_core::Error) -> Self {
        use qcomb_core::Error as E;
        match e {
            E::NoConvergence { .. } => CliError::NoConvergence(e.to_string()),
            E::NotHermitian { .. }
            | E::NotPsd { .. }
            | E::InvalidBranchSum { .. }
            | E::BoundUnavailable(_) => CliError::Domain(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qcomb", version, about = "Optimize, verify and generate quantum combs")]
pub struct Cli {
    /// Tolerance: solver feasibility/gap tolerance, or verification tolerance for `verify`.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Print the result as JSON.
    #[arg(long, global = true)]
    pub json: bool,
    /// Output operator file.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overwrite an existing output file.
    #[arg(long, global = true)]
    pub force: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal N → M cloning of an unknown unitary.
    Clone(CloneArgs),
    /// Optimal storage and retrieval of an unknown unitary from N uses.
    Learn(LearnArgs),
    /// Check the causality constraints of a stored operator.
    Verify(VerifyArgs),
    /// Generate a random comb from a chain of channels with memory.
    RandomComb(RandomArgs),
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 50_000)]
    pub max_iters: usize,
    /// Append the result record as a JSON line to this file.
    #[arg(long)]
    pub record: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CloneArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub dim: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct LearnArgs {
    #[arg(long)]
    pub uses: usize,
    #[arg(long)]
    pub dim: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub file: PathBuf,
    /// Comma-separated `in:out` label pairs in causal order, e.g. `0:1,2:3`.
    /// Defaults to the `teeth` entry of the file's metadata.
    #[arg(long)]
    pub teeth: Option<String>,
}

#[derive(Debug, Args)]
pub struct RandomArgs {
    /// Comma-separated `in:out` dimension pairs, one per tooth, e.g. `2:2,2:2`.
    #[arg(long)]
    pub dims: String,
    /// Comma-separated memory dimensions, one per slot.
    #[arg(long, default_value = "")]
    pub memory: String,
}

/// Parses `a:b,c:d` into pairs.
pub fn parse_pairs(spec: &str) -> Result<Vec<(String, String)>, CliError> {
    spec.split(',')
        .map(|p| {
            let mut it = p.trim().splitn(2, ':');
            match (it.next(), it.next()) {
                (Some(a), Some(b)) if !a.is_empty() && !b.is_empty() => Ok((a.to_string(), b.to_string())),
                _ => Err(CliError::Input(format!("bad tooth `{p}`; expected in:out"))),
            }
        })
        .collect()
}

fn parse_usize(s: &str, what: &str) -> Result<usize, CliError> {
    s.trim()
        .parse()
        .map_err(|_| CliError::Input(format!("bad {what} `{s}`")))
}

/// Thread count from the environment (default 1). The current kernels are
/// sequential, so the value is validated and recorded only.
pub fn threads_from_env() -> Result<usize, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(1),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(CliError::Input(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
    }
}

fn teeth_label_spec(s: &CombStructure) -> String {
    s.teeth()
        .iter()
        .map(|(i, o)| format!("{}:{}", i.label(), o.label()))
        .collect::<Vec<_>>()
        .join(",")
}

fn check_out(cli: &Cli) -> Result<(), CliError> {
    match &cli.out {
        Some(p) if p.exists() && !cli.force => Err(CliError::Input(format!(
            "{} exists; pass --force to overwrite",
            p.display()
        ))),
        _ => Ok(()),
    }
}

/// Writes `file`, reads it back, and checks the copy is identical and causal.
fn write_and_recheck(
    file: &OperatorFile,
    path: &Path,
    force: bool,
    structure: &CombStructure,
    tol: f64,
) -> Result<CausalityReport, CliError> {
    file.write(path, force)?;
    let back = OperatorFile::read(path)?;
    if &back != file {
        return Err(CliError::Domain(format!("{} did not read back identically", path.display())));
    }
    let report = verify_causality(&back.to_operator()?, structure, tol)?;
    if !report.passed {
        return Err(CliError::Domain(format!(
            "written operator fails causality verification (residual {:.3e})",
            report.feasibility_residual()
        )));
    }
    Ok(report)
}

struct Task {
    name: String,
    n: Option<usize>,
    m: Option<usize>,
    d: usize,
    objective: PerformanceOperator,
    reference: Reference,
    estimation: Reference,
}

fn solve_task(cli: &Cli, task: Task, solver: &SolverArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let threads = threads_from_env()?;
    check_out(cli)?;
    let tol = cli.tol.unwrap_or(1e-6);
    let problem = SdpProblem::from_objective(&task.objective)?
        .with_tolerances(tol, tol)?
        .with_max_iters(solver.max_iters)
        .with_seed(cli.seed);
    let start = Instant::now();
    let sol: SdpSolution = run_solver(&problem)?;
    let wall = start.elapsed().as_secs_f64();

    let structure = task.objective.structure();
    if let Some(path) = &cli.out {
        let mut meta = BTreeMap::new();
        meta.insert("task".into(), Value::from(task.name.clone()));
        meta.insert("teeth".into(), Value::from(teeth_label_spec(structure)));
        meta.insert("seed".into(), Value::from(cli.seed));
        meta.insert("value".into(), Value::from(sol.value));
        meta.insert("converged".into(), Value::from(sol.converged));
        meta.insert("d".into(), Value::from(task.d));
        if let Some(n) = task.n {
            meta.insert("n".into(), Value::from(n));
        }
        if let Some(m) = task.m {
            meta.insert("m".into(), Value::from(m));
        }
        let file = OperatorFile::from_operator(sol.r_star.operator(), meta);
        write_and_recheck(&file, path, cli.force, structure, 10.0 * tol)?;
    }

    let record = ResultRecord {
        task: task.name,
        parameters: Parameters {
            n: task.n,
            m: task.m,
            d: task.d,
            tol_feas: problem.tol_feas,
            tol_gap: problem.tol_gap,
            max_iters: problem.max_iters,
            seed: problem.seed,
        },
        value: sol.value,
        reference: task.reference,
        estimation_reference: task.estimation,
        feas_residual: sol.feas_residual,
        gap_bound: sol.gap_bound,
        upper_bound: sol.upper_bound,
        iterations: sol.iterations,
        converged: sol.converged,
        wall_time_s: wall,
        backend: "admm".into(),
        threads,
        operator_file: cli.out.as_ref().map(|p| p.display().to_string()),
    };
    if let Some(path) = &solver.record {
        record.append_to(path)?;
    }
    if cli.json {
        let _ = writeln!(out, "{}", record.to_json());
    } else {
        print_record(&record, out);
    }
    Ok(if sol.converged { 0 } else { 3 })
}

fn print_record(r: &ResultRecord, out: &mut dyn Write) {
    let _ = writeln!(out, "task                 {}", r.task);
    let _ = writeln!(out, "value                {:.9}", r.value);
    for (name, reference) in [("reference", &r.reference), ("estimation reference", &r.estimation_reference)] {
        if let Some(v) = reference.value {
            let source = serde_json::to_value(reference.source).unwrap_or(Value::Null);
            let _ = writeln!(
                out,
                "{name:<20} {v:.9} ({}, difference {:+.2e})",
                source.as_str().unwrap_or(""),
                r.value - v
            );
        }
    }
    let _ = writeln!(out, "feasibility residual {:.2e}", r.feas_residual);
    match r.gap_bound {
        Some(g) => {
            let _ = writeln!(out, "gap bound            {g:.2e}");
        }
        None => {
            let _ = writeln!(out, "gap bound            unavailable");
        }
    }
    let status = if r.converged { "converged" } else { "NOT converged" };
    let _ = writeln!(out, "iterations           {} ({status}, {:.2} s)", r.iterations, r.wall_time_s);
    if let Some(f) = &r.operator_file {
        let _ = writeln!(out, "comb written to      {f}");
    }
}

fn cmd_clone(cli: &Cli, a: &CloneArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    if a.n == 0 || a.m == 0 || a.dim < 2 {
        return Err(CliError::Input("clone needs --n >= 1, --m >= 1 and --dim >= 2".into()));
    }
    let objective = cloning_objective(a.n, a.m, a.dim)?;
    let (reference, estimation) = if (a.n, a.m) == (1, 2) {
        (
            Reference::closed_form(cloning_reference(a.dim)),
            Reference::stored(estimation_reference(1, 2, a.dim)?),
        )
    } else {
        (Reference::none(), Reference::none())
    };
    let task = Task {
        name: "clone".into(),
        n: Some(a.n),
        m: Some(a.m),
        d: a.dim,
        objective,
        reference,
        estimation,
    };
    solve_task(cli, task, &a.solver, out)
}

fn cmd_learn(cli: &Cli, a: &LearnArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    if a.uses == 0 || a.dim < 2 {
        return Err(CliError::Input("learn needs --uses >= 1 and --dim >= 2".into()));
    }
    let objective = learning_objective(a.uses, a.dim)?;
    let reference = match qcomb_core::objective::learning_reference(a.uses, a.dim) {
        Some(v) => Reference::closed_form(v),
        None => Reference::none(),
    };
    let task = Task {
        name: "learn".into(),
        n: Some(a.uses),
        m: None,
        d: a.dim,
        objective,
        reference,
        estimation: Reference::none(),
    };
    solve_task(cli, task, &a.solver, out)
}

fn cmd_verify(cli: &Cli, a: &VerifyArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let file = OperatorFile::read(&a.file)?;
    let op = file.to_operator()?;
    let spec = match (&a.teeth, file.metadata.get("teeth")) {
        (Some(s), _) => s.clone(),
        (None, Some(Value::String(s))) => s.clone(),
        _ => return Err(CliError::Input("no --teeth given and none recorded in the file".into())),
    };
    let pairs = parse_pairs(&spec)?;
    let refs: Vec<(&str, &str)> = pairs.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    let structure = CombStructure::from_labels(&refs, |l| op.wire(l).map(|w| w.dim()))?;
    let tol = cli.tol.unwrap_or(1e-9);
    let report = verify_causality(&op, &structure, tol)?;
    if cli.json {
        let v = json!({
            "passed": report.passed,
            "residuals": report.residuals,
            "min_eigenvalue": report.min_eigenvalue,
            "hermitian_residual": report.hermitian_residual,
            "failing_level": report.failing_level(),
            "tol": tol,
        });
        let _ = writeln!(out, "{v}");
    } else {
        for (n, r) in report.residuals.iter().enumerate() {
            let mark = if *r <= tol { "ok" } else { "FAIL" };
            let _ = writeln!(out, "level {n}: residual {r:.3e} {mark}");
        }
        let _ = writeln!(out, "min eigenvalue {:.3e}", report.min_eigenvalue);
        let _ = writeln!(out, "hermitian residual {:.3e}", report.hermitian_residual);
        match report.failing_level() {
            Some(n) if !report.passed => {
                let _ = writeln!(out, "not a comb: first failing level {n}");
            }
            _ if !report.passed => {
                let _ = writeln!(out, "not a comb: operator is not positive semidefinite");
            }
            _ => {
                let _ = writeln!(out, "valid comb (tol {tol:.1e})");
            }
        }
    }
    Ok(if report.passed { 0 } else { 1 })
}

fn cmd_random(cli: &Cli, a: &RandomArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let Some(path) = &cli.out else {
        return Err(CliError::Input("random-comb needs --out".into()));
    };
    check_out(cli)?;
    let dims: Vec<(usize, usize)> = parse_pairs(&a.dims)?
        .iter()
        .map(|(i, o)| Ok((parse_usize(i, "dimension")?, parse_usize(o, "dimension")?)))
        .collect::<Result<_, CliError>>()?;
    let memory: Vec<usize> = if a.memory.trim().is_empty() {
        Vec::new()
    } else {
        a.memory
            .split(',')
            .map(|m| parse_usize(m, "memory dimension"))
            .collect::<Result<_, _>>()?
    };
    let structure = CombStructure::sequential(&dims)?;
    let comb = random_comb(&structure, &memory, cli.seed)?;
    let mut meta = BTreeMap::new();
    meta.insert("task".into(), Value::from("random-comb"));
    meta.insert("teeth".into(), Value::from(teeth_label_spec(&structure)));
    meta.insert("seed".into(), Value::from(cli.seed));
    meta.insert("memory_dims".into(), Value::from(memory.clone()));
    let file = OperatorFile::from_operator(comb.operator(), meta);
    let tol = cli.tol.unwrap_or(1e-10);
    let report = write_and_recheck(&file, path, cli.force, &structure, tol)?;
    if cli.json {
        let v = json!({
            "file": path.display().to_string(),
            "teeth": teeth_label_spec(&structure),
            "dim": structure.total_dim(),
            "max_residual": report.max_residual(),
            "min_eigenvalue": report.min_eigenvalue,
        });
        let _ = writeln!(out, "{v}");
    } else {
        let _ = writeln!(
            out,
            "wrote {} (teeth {}, D = {}, max residual {:.2e})",
            path.display(),
            teeth_label_spec(&structure),
            structure.total_dim(),
            report.max_residual()
        );
    }
    Ok(0)
}

/// Runs the CLI on `args` and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return 2;
            }
            let _ = write!(out, "{e}");
            return 0;
        }
    };
    if let Some(t) = cli.tol {
        if !(t > 0.0 && t.is_finite()) {
            let _ = writeln!(err, "error: --tol must be positive");
            return 2;
        }
    }
    let result = match &cli.command {
        Command::Clone(a) => cmd_clone(&cli, a, out),
        Command::Learn(a) => cmd_learn(&cli, a, out),
        Command::Verify(a) => cmd_verify(&cli, a, out),
        Command::RandomComb(a) => cmd_random(&cli, a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
