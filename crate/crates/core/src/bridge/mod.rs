//! Runs external MaxSAT and MILP solvers on exported models and turns
//! their answers back into verified trees.

mod parse;
mod process;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

pub use parse::{parse_maxsat_output, parse_milp_solution, MaxSatOutput, MilpOutput, SolverStatus};
pub use process::{run_with_timeout, RunOutcome};

use crate::adversary::adversarial_errors;
use crate::attack::AttackModel;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::exact::{solve_exact, SearchBudget, SolveResult, SolveStatus};
use crate::greedy::fit_greedy;
use crate::margin::maximize_margin;
use crate::maxsat::{self, assignment_for_tree, build_encoding, WcnfFormat};
use crate::milp::{self, build_milp, MilpMode};
use crate::tree::Tree;

/// How the solver reports its answer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolutionFormat {
    /// `s`/`o`/`v` lines as printed by MaxSAT solvers.
    MaxSatVLine,
    /// A `name value` solution file (CBC and Gurobi layouts accepted).
    LpSolutionFile,
}

/// Layout of the MILP start file handed to the solver.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WarmFormat {
    /// `name value` lines.
    NameValue,
    /// CBC's `mips` layout: a status header, then `index name value`.
    Cbc,
}

/// How to call one external solver.
///
/// The command is a shell-quoted template. `{instance}` is required;
/// `{solution}`, `{timeout}` (whole seconds) and `{warm}` are optional.
/// A token `{warm:FLAG}` expands to `FLAG path` (or `FLAGpath` when FLAG
/// ends in `=`) and vanishes without a warm start, as does any token that
/// mentions `{warm}`. Without `{solution}` the answer is read from stdout.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub command: String,
    pub timeout: Duration,
    pub format: SolutionFormat,
    pub warm_format: WarmFormat,
    pub wcnf_format: WcnfFormat,
    /// Where instance files go; a fresh temporary directory when `None`.
    pub working_dir: Option<PathBuf>,
}

impl SolverConfig {
    pub fn new(command: impl Into<String>, timeout: Duration, format: SolutionFormat) -> Result<Self> {
        let config = SolverConfig {
            command: command.into(),
            timeout,
            format,
            warm_format: WarmFormat::NameValue,
            wcnf_format: WcnfFormat::Classic,
            working_dir: None,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.timeout.is_zero() {
            return Err(Error::InvalidArgument("solver timeout must be positive".into()));
        }
        if !self.command.contains("{instance}") {
            return Err(Error::InvalidArgument(format!(
                "solver command `{}` lacks the {{instance}} placeholder",
                self.command
            )));
        }
        let argv = shlex::split(&self.command)
            .ok_or_else(|| Error::InvalidArgument(format!("cannot split solver command `{}`", self.command)))?;
        if argv.is_empty() {
            return Err(Error::InvalidArgument("empty solver command".into()));
        }
        Ok(())
    }

    fn wants_solution_file(&self) -> bool {
        self.command.contains("{solution}")
    }

    /// Expands the template into an argument vector.
    pub fn argv(&self, instance: &Path, solution: &Path, warm: Option<&Path>) -> Result<Vec<String>> {
        self.validate()?;
        let tokens = shlex::split(&self.command).unwrap_or_default();
        let secs = self.timeout.as_secs().max(1).to_string();
        let mut argv = Vec::with_capacity(tokens.len() + 1);
        for tok in tokens {
            if let Some(flag) = tok.strip_prefix("{warm:").and_then(|t| t.strip_suffix('}')) {
                if let Some(w) = warm {
                    let path = w.display().to_string();
                    if flag.ends_with('=') {
                        argv.push(format!("{flag}{path}"));
                    } else {
                        argv.push(flag.to_string());
                        argv.push(path);
                    }
                }
                continue;
            }
            if tok.contains("{warm}") && warm.is_none() {
                continue;
            }
            let mut t = tok
                .replace("{instance}", &instance.display().to_string())
                .replace("{solution}", &solution.display().to_string())
                .replace("{timeout}", &secs);
            if let Some(w) = warm {
                t = t.replace("{warm}", &w.display().to_string());
            }
            argv.push(t);
        }
        Ok(argv)
    }
}

/// A parsed solver answer plus how the run ended.
#[derive(Clone, Debug, PartialEq)]
pub struct Solved<T> {
    pub answer: T,
    pub status: SolverStatus,
    pub timed_out: bool,
    pub elapsed: Duration,
}

fn work_dir(config: &SolverConfig, instance: &Path) -> PathBuf {
    config
        .working_dir
        .clone()
        .or_else(|| instance.parent().map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn check_instance(instance: &Path) -> Result<()> {
    if !instance.is_file() {
        return Err(Error::file(
            instance,
            std::io::Error::new(std::io::ErrorKind::NotFound, "instance file not found"),
        ));
    }
    Ok(())
}

fn describe_failure(out: &RunOutcome) -> String {
    let tail: String = out.stderr.lines().rev().take(5).collect::<Vec<_>>().into_iter().rev().collect::<Vec<_>>().join("\n");
    match out.status {
        Some(s) => format!("solver exited with {s} and no model; stderr: {tail}"),
        None => format!("solver killed at the time limit; stderr: {tail}"),
    }
}

/// Runs a MaxSAT solver on a WCNF file and returns the last model it
/// printed, also when it was stopped at the deadline.
pub fn run_maxsat(instance: &Path, n_vars: usize, config: &SolverConfig) -> Result<Solved<MaxSatOutput>> {
    check_instance(instance)?;
    let dir = work_dir(config, instance);
    let solution = dir.join("solution.txt");
    let argv = config.argv(instance, &solution, None)?;
    let out = run_with_timeout(&argv, &dir, config.timeout)?;
    let text = if config.wants_solution_file() && solution.is_file() {
        process::read_lossy(&solution)?
    } else {
        out.stdout.clone()
    };
    let parsed = match parse_maxsat_output(&text, n_vars) {
        Err(Error::NoIncumbent) if !out.timed_out && !out.status.is_some_and(|s| s.success()) => {
            log::warn!("{}", describe_failure(&out));
            return Err(Error::NoIncumbent);
        }
        other => other?,
    };
    let status = if out.timed_out { SolverStatus::Feasible } else { parsed.status };
    Ok(Solved {
        status,
        timed_out: out.timed_out,
        elapsed: out.elapsed,
        answer: parsed,
    })
}

/// Runs a MILP solver on an LP file and returns its variable values.
pub fn run_milp(instance: &Path, warm: Option<&Path>, config: &SolverConfig) -> Result<Solved<MilpOutput>> {
    check_instance(instance)?;
    let dir = work_dir(config, instance);
    let solution = dir.join("solution.sol");
    let _ = fs::remove_file(&solution);
    let argv = config.argv(instance, &solution, warm)?;
    let out = run_with_timeout(&argv, &dir, config.timeout)?;
    let text = if config.wants_solution_file() {
        if !solution.is_file() {
            log::warn!("{}", describe_failure(&out));
            return Err(Error::NoIncumbent);
        }
        process::read_lossy(&solution)?
    } else {
        out.stdout.clone()
    };
    let parsed = parse_milp_solution(&text)?;
    let status = if out.timed_out { SolverStatus::Feasible } else { parsed.status };
    Ok(Solved {
        status,
        timed_out: out.timed_out,
        elapsed: out.elapsed,
        answer: parsed,
    })
}

/// Training methods.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Maxsat,
    MilpContinuous,
    MilpBinary,
    Exact,
    Greedy,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Maxsat,
        Method::MilpContinuous,
        Method::MilpBinary,
        Method::Exact,
        Method::Greedy,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Maxsat => "maxsat",
            Method::MilpContinuous => "milp-continuous",
            Method::MilpBinary => "milp-binary",
            Method::Exact => "exact",
            Method::Greedy => "greedy",
        }
    }

    /// Whether the method needs an external solver.
    pub fn is_external(self) -> bool {
        matches!(self, Method::Maxsat | Method::MilpContinuous | Method::MilpBinary)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method `{s}`")))
    }
}

#[derive(Clone, Debug)]
pub struct FitOptions {
    pub method: Method,
    /// Start from the greedy tree (ignored by the greedy method).
    pub warm: bool,
    pub solver: Option<SolverConfig>,
    /// Time limit for the built-in exact search.
    pub time_limit: Option<Duration>,
    pub matching_pruning: bool,
}

impl FitOptions {
    pub fn new(method: Method) -> Self {
        FitOptions {
            method,
            warm: false,
            solver: None,
            time_limit: None,
            matching_pruning: true,
        }
    }
}

/// Fits a tree with the chosen method, then centres its thresholds and
/// re-checks its error count on the training data.
pub fn fit(data: &Dataset, attack: &AttackModel, depth: usize, options: &FitOptions) -> Result<SolveResult> {
    let start = Instant::now();
    let warm_tree = || maximize_margin(&fit_greedy(data, attack, depth), data, attack);
    let result = match options.method {
        Method::Greedy => {
            let tree = fit_greedy(data, attack, depth);
            SolveResult {
                objective: adversarial_errors(&tree, data, attack),
                tree,
                status: SolveStatus::Feasible,
                nodes_expanded: 0,
                elapsed: Duration::ZERO,
            }
        }
        Method::Exact => {
            let budget = SearchBudget {
                time_limit: options.time_limit,
                node_limit: None,
                incumbent: options.warm.then(warm_tree),
                matching_pruning: options.matching_pruning,
            };
            solve_exact(data, attack, depth, budget)?
        }
        method => {
            let config = options
                .solver
                .as_ref()
                .ok_or_else(|| Error::Usage(format!("method {method} needs a solver command")))?;
            let warm = options.warm.then(warm_tree);
            let scratch;
            let dir = match &config.working_dir {
                Some(d) => {
                    fs::create_dir_all(d).map_err(|e| Error::file(d, e))?;
                    d.clone()
                }
                None => {
                    scratch = tempfile::tempdir()?;
                    scratch.path().to_path_buf()
                }
            };
            let mut config = config.clone();
            config.working_dir = Some(dir.clone());
            let solved = if method == Method::Maxsat {
                solve_maxsat(data, attack, depth, warm.as_ref(), &config, &dir)?
            } else {
                let mode = if method == Method::MilpBinary { MilpMode::Binary } else { MilpMode::Continuous };
                solve_milp(data, attack, depth, mode, warm.as_ref(), &config, &dir)?
            };
            keep_better(solved, warm, data, attack)
        }
    };
    finish(result, data, attack, start)
}

/// Prefers the start tree when the solver came back with something worse.
fn keep_better(solved: SolveResult, warm: Option<Tree>, data: &Dataset, attack: &AttackModel) -> SolveResult {
    if let Some(tree) = warm {
        let warm_errors = adversarial_errors(&tree, data, attack);
        if warm_errors < solved.objective {
            log::warn!(
                "solver answer has {} errors, start tree {}; keeping the start tree",
                solved.objective,
                warm_errors
            );
            return SolveResult {
                tree,
                objective: warm_errors,
                ..solved
            };
        }
    }
    solved
}

fn finish(result: SolveResult, data: &Dataset, attack: &AttackModel, start: Instant) -> Result<SolveResult> {
    let tree = maximize_margin(&result.tree, data, attack);
    let verified = adversarial_errors(&tree, data, attack);
    if verified != result.objective {
        return Err(Error::VerificationMismatch {
            verified,
            claimed: result.objective,
        });
    }
    Ok(SolveResult {
        tree,
        elapsed: start.elapsed(),
        ..result
    })
}

fn run_status(status: SolverStatus, timed_out: bool) -> SolveStatus {
    match (timed_out, status) {
        (true, _) => SolveStatus::TimeoutWithIncumbent,
        (false, SolverStatus::Optimal) => SolveStatus::Optimal,
        _ => SolveStatus::Feasible,
    }
}

fn solve_maxsat(
    data: &Dataset,
    attack: &AttackModel,
    depth: usize,
    warm: Option<&Tree>,
    config: &SolverConfig,
    dir: &Path,
) -> Result<SolveResult> {
    let encoding = build_encoding(data, attack, depth)?;
    let instance = dir.join("instance.wcnf");
    let file = fs::File::create(&instance).map_err(|e| Error::file(&instance, e))?;
    encoding.wcnf.write(std::io::BufWriter::new(file), config.wcnf_format)?;
    if let Some(tree) = warm {
        // Solvers that take phase hints can read this; the others ignore it.
        let asg = assignment_for_tree(&encoding, tree, data, attack)?;
        let mut line = String::from("v");
        for (k, &on) in asg.bits().iter().enumerate() {
            let id = k as i64 + 1;
            let _ = write!(line, " {}", if on { id } else { -id });
        }
        line.push_str(" 0\n");
        let path = dir.join("warm.txt");
        fs::write(&path, line).map_err(|e| Error::file(&path, e))?;
    }
    let solved = run_maxsat(&instance, encoding.vars.n_vars(), config)?;
    let decoded = maxsat::decode_tree(&encoding, &solved.answer.assignment, data, attack)?;
    let status = run_status(solved.status, solved.timed_out);
    if status == SolveStatus::Optimal {
        let claimed = solved.answer.cost.map_or(decoded.cost, |c| c as usize);
        if decoded.errors != claimed || decoded.cost != claimed {
            return Err(Error::VerificationMismatch {
                verified: decoded.errors,
                claimed,
            });
        }
    }
    Ok(SolveResult {
        tree: decoded.tree,
        objective: decoded.errors,
        status,
        nodes_expanded: 0,
        elapsed: solved.elapsed,
    })
}

fn write_cbc_start(model: &milp::MilpModel, values: &[f64], path: &Path) -> Result<()> {
    let mut text = format!("Feasible - objective value {}\n", model.objective_value(values));
    for (k, (name, v)) in model.names.iter().zip(values).enumerate() {
        let _ = writeln!(text, "{k} {name} {v}");
    }
    fs::write(path, text).map_err(|e| Error::file(path, e))
}

fn fill_missing(model: &milp::MilpModel, map: &HashMap<String, f64>) -> Vec<f64> {
    let missing: Vec<&str> = model.names.iter().filter(|n| !map.contains_key(*n)).map(String::as_str).collect();
    if !missing.is_empty() {
        log::warn!("solution omits {} variables; taking them as 0", missing.len());
    }
    model.names.iter().map(|n| map.get(n).copied().unwrap_or(0.0)).collect()
}

fn solve_milp(
    data: &Dataset,
    attack: &AttackModel,
    depth: usize,
    mode: MilpMode,
    warm: Option<&Tree>,
    config: &SolverConfig,
    dir: &Path,
) -> Result<SolveResult> {
    let model = build_milp(data, attack, depth, mode)?;
    let instance = dir.join("instance.lp");
    let file = fs::File::create(&instance).map_err(|e| Error::file(&instance, e))?;
    model.write_lp(std::io::BufWriter::new(file))?;
    let mut warm_objective = None;
    let warm_path = dir.join("warm.mst");
    if let Some(tree) = warm {
        let values = match config.warm_format {
            WarmFormat::NameValue => {
                let file = fs::File::create(&warm_path).map_err(|e| Error::file(&warm_path, e))?;
                milp::write_warm_start(&model, tree, data, attack, std::io::BufWriter::new(file))?
            }
            WarmFormat::Cbc => {
                let values = milp::warm_start_values(&model, tree, data, attack)?;
                write_cbc_start(&model, &values, &warm_path)?;
                values
            }
        };
        warm_objective = Some(model.objective_value(&values));
    }
    let solved = run_milp(&instance, warm.map(|_| warm_path.as_path()), config)?;
    let values = fill_missing(&model, &solved.answer.values);
    let decoded = milp::decode_tree(&model, &values, data, attack)?;
    let status = run_status(solved.status, solved.timed_out);
    if status == SolveStatus::Optimal {
        let claimed = solved.answer.objective.unwrap_or(decoded.cost as f64);
        if (decoded.errors as f64 - claimed).abs() > 1e-6 {
            return Err(Error::VerificationMismatch {
                verified: decoded.errors,
                claimed: claimed.round() as usize,
            });
        }
    }
    if let Some(w) = warm_objective {
        if decoded.errors as f64 > w + 1e-6 {
            log::warn!("solver answer ({}) is worse than its start ({w})", decoded.errors);
        }
    }
    Ok(SolveResult {
        tree: decoded.tree,
        objective: decoded.errors,
        status,
        nodes_expanded: 0,
        elapsed: solved.elapsed,
    })
}
