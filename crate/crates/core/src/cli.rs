//! The `robtree` command line.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::adversary::{accuracy, adversarial_accuracy, adversarial_errors, attack_witness, is_robust};
use crate::attack::AttackModel;
use crate::bound::{adversarial_accuracy_bound, epsilon_sweep, linear_grid, min_errors, select_epsilons, write_sweep_csv};
use crate::bridge::{fit, FitOptions, Method, SolutionFormat, SolverConfig, WarmFormat};
use crate::data::{load_csv, scale_features, Dataset, ScalingInfo};
use crate::error::{Error, Result};
use crate::experiment::{run_experiment, stratified_split, write_results_csv, AttackSetting, ExperimentPlan};
use crate::greedy::fit_greedy;
use crate::margin::maximize_margin;
use crate::maxsat::{build_encoding, WcnfFormat};
use crate::milp::{build_milp, write_warm_start, MilpMode};
use crate::tree::Tree;

/// Exit code for bad invocations.
pub const EXIT_USAGE: i32 = 1;
/// Exit code for failures while running.
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "robtree", version, about = "Robust decision trees under box-shaped perturbations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a tree and write it as JSON.
    Fit(FitArgs),
    /// Score a saved tree under an attack.
    Eval(EvalArgs),
    /// Upper bound on adversarial accuracy for one attack.
    Bound(BoundArgs),
    /// Bound over a grid of radii, as CSV.
    Sweep(SweepArgs),
    /// Pick radii that lower the bound by given fractions.
    SelectEps(SelectArgs),
    /// Export a solver model or a warm start.
    Encode(EncodeArgs),
    /// Split, cross-validate over depths and report a results table.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// CSV with a header; the last column holds 0/1 labels.
    #[arg(long)]
    data: PathBuf,
    /// Features are already in [0, 1]; skip min-max scaling.
    #[arg(long)]
    prescaled: bool,
}

#[derive(Debug, Args)]
struct AttackArgs {
    /// Same radius on both sides of every feature.
    #[arg(long, conflicts_with_all = ["delta_left", "delta_right"])]
    epsilon: Option<f64>,
    /// Per-feature leftward radii, comma separated.
    #[arg(long, value_delimiter = ',', requires = "delta_right")]
    delta_left: Option<Vec<f64>>,
    /// Per-feature rightward radii, comma separated.
    #[arg(long, value_delimiter = ',', requires = "delta_left")]
    delta_right: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
struct SolverArgs {
    /// Solver command template, e.g. "cbc {instance} solve solu {solution}".
    #[arg(long)]
    solver_cmd: Option<String>,
    /// Layout of the MILP start file.
    #[arg(long, value_enum, default_value_t = WarmArg::NameValue)]
    warm_format: WarmArg,
    /// WCNF dialect handed to MaxSAT solvers.
    #[arg(long, value_enum, default_value_t = WcnfArg::Classic)]
    wcnf_format: WcnfArg,
    /// Time limit in seconds for solvers and the exact search.
    #[arg(long, default_value_t = 60.0)]
    timeout: f64,
    /// Keep solver files here instead of a temporary directory.
    #[arg(long)]
    work_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum WarmArg {
    NameValue,
    Cbc,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum WcnfArg {
    Classic,
    Modern,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    attack: AttackArgs,
    #[arg(long)]
    depth: usize,
    /// maxsat, milp-continuous, milp-binary, exact or greedy.
    #[arg(long, default_value = "exact", value_parser = parse_method)]
    method: Method,
    /// Start from the greedy tree.
    #[arg(long)]
    warm: bool,
    #[command(flatten)]
    solver: SolverArgs,
    /// Hold out this fraction of the data (stratified) for testing.
    #[arg(long)]
    test_fraction: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Tree JSON path; the scaling goes next to it as `<stem>.scaling.json`.
    #[arg(long, default_value = "model.json")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Tree JSON written by `fit`.
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    attack: AttackArgs,
    /// Write a CSV of successful attacks (scaled coordinates).
    #[arg(long)]
    witnesses: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BoundArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    attack: AttackArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Largest radius on the grid.
    #[arg(long, default_value_t = 0.5)]
    max_epsilon: f64,
    /// Number of grid intervals; the grid has one more point.
    #[arg(long, default_value_t = 20)]
    steps: usize,
    /// CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SelectArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Fractions of the bound's range to drop, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,0.75")]
    fractions: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum EncodeFormat {
    /// MaxSAT, classic WCNF.
    Wcnf,
    /// MaxSAT, header-less WCNF with `h` hard clauses.
    #[value(name = "wcnf-2022")]
    Wcnf2022,
    /// MILP with one real threshold per node.
    Lp,
    /// MILP with the boolean threshold chains.
    LpBinary,
    /// Start values for the `lp` model.
    Warm,
    /// Start values for the `lp-binary` model.
    WarmBinary,
}

#[derive(Debug, Args)]
struct EncodeArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    attack: AttackArgs,
    #[arg(long)]
    depth: usize,
    #[arg(long, value_enum)]
    format: EncodeFormat,
    /// Tree to turn into a warm start; the greedy tree when absent.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Radii to evaluate, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["delta_left", "delta_right"])]
    epsilon: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', requires = "delta_right")]
    delta_left: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', requires = "delta_left")]
    delta_right: Option<Vec<f64>>,
    /// Depths to cross-validate over, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    depth: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "greedy,exact", value_parser = parse_method)]
    method: Vec<Method>,
    #[arg(long)]
    warm: bool,
    /// `[METHOD=]TEMPLATE`; without a method it serves every external one.
    #[arg(long)]
    solver_cmd: Vec<String>,
    #[arg(long, value_enum, default_value_t = WarmArg::NameValue)]
    warm_format: WarmArg,
    #[arg(long, default_value_t = 60.0)]
    timeout: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.8)]
    train_fraction: f64,
    #[arg(long, default_value_t = 3)]
    folds: usize,
    /// Concurrent fits; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::Usage(_) | Error::InvalidArgument(_) => EXIT_USAGE,
                _ => EXIT_RUNTIME,
            }
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Fit(a) => cmd_fit(a, out),
        Command::Eval(a) => cmd_eval(a, out),
        Command::Bound(a) => cmd_bound(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
        Command::SelectEps(a) => cmd_select(a, out),
        Command::Encode(a) => cmd_encode(a, out),
        Command::Experiment(a) => cmd_experiment(a, out),
    }
}

fn load(args: &DataArgs) -> Result<(Dataset, Option<ScalingInfo>)> {
    let raw = load_csv(&args.data)?;
    if args.prescaled {
        if let Some((i, j)) = raw
            .rows
            .iter()
            .enumerate()
            .find_map(|(i, r)| r.iter().position(|v| !(0.0..=1.0).contains(v)).map(|j| (i, j)))
        {
            return Err(Error::InvalidData(format!(
                "--prescaled data has {} at row {i}, feature {j}",
                raw.rows[i][j]
            )));
        }
        Ok((Dataset::with_names(&raw.rows, &raw.labels, raw.feature_names)?, None))
    } else {
        let (data, info) = scale_features(&raw)?;
        Ok((data, Some(info)))
    }
}

fn attack_model(args: &AttackArgs, p: usize) -> Result<AttackModel> {
    match (&args.epsilon, &args.delta_left, &args.delta_right) {
        (Some(e), _, _) => AttackModel::epsilon(p, *e),
        (None, Some(l), Some(r)) => AttackModel::new(l.clone(), r.clone()),
        _ => Err(Error::Usage("give --epsilon or both --delta-left and --delta-right".into())),
    }
}

fn timeout(secs: f64) -> Result<Duration> {
    Duration::try_from_secs_f64(secs)
        .ok()
        .filter(|d| !d.is_zero())
        .ok_or_else(|| Error::InvalidArgument(format!("timeout {secs} must be a positive number of seconds")))
}

fn solver_format(method: Method) -> SolutionFormat {
    if method == Method::Maxsat {
        SolutionFormat::MaxSatVLine
    } else {
        SolutionFormat::LpSolutionFile
    }
}

fn solver_config(command: &str, method: Method, limit: Duration, warm: WarmArg, wcnf: WcnfArg) -> Result<SolverConfig> {
    let mut config = SolverConfig::new(command, limit, solver_format(method))?;
    config.warm_format = match warm {
        WarmArg::NameValue => WarmFormat::NameValue,
        WarmArg::Cbc => WarmFormat::Cbc,
    };
    config.wcnf_format = match wcnf {
        WcnfArg::Classic => WcnfFormat::Classic,
        WcnfArg::Modern => WcnfFormat::Modern,
    };
    Ok(config)
}

fn write_output(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Error::file(p, e)),
        None => Ok(out.write_all(text.as_bytes())?),
    }
}

fn scaling_path(model: &Path) -> PathBuf {
    let stem = model.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "model".into());
    model.with_file_name(format!("{stem}.scaling.json"))
}

fn cmd_fit(a: FitArgs, out: &mut dyn Write) -> Result<()> {
    if a.method.is_external() && a.solver.solver_cmd.is_none() {
        return Err(Error::Usage(format!("--method {} needs --solver-cmd", a.method)));
    }
    let (data, scaling) = load(&a.data)?;
    let attack = attack_model(&a.attack, data.n_features())?;
    let limit = timeout(a.solver.timeout)?;
    let (train, test) = match a.test_fraction {
        Some(f) => {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::InvalidArgument(format!("test fraction {f} is outside (0, 1)")));
            }
            let (tr, te) = stratified_split(&data, 1.0 - f, a.seed);
            (data.subset(&tr), Some(data.subset(&te)))
        }
        None => (data, None),
    };
    let mut options = FitOptions::new(a.method);
    options.warm = a.warm;
    options.time_limit = Some(limit);
    if let Some(cmd) = &a.solver.solver_cmd {
        let mut config = solver_config(cmd, a.method, limit, a.solver.warm_format, a.solver.wcnf_format)?;
        config.working_dir = a.solver.work_dir.clone();
        options.solver = Some(config);
    }
    let started = Instant::now();
    let result = fit(&train, &attack, a.depth, &options)?;
    let wall = started.elapsed();
    fs::write(&a.out, result.tree.to_json()).map_err(|e| Error::file(&a.out, e))?;
    if let Some(info) = &scaling {
        let path = scaling_path(&a.out);
        let json = serde_json::to_string_pretty(info).map_err(|e| Error::InvalidData(e.to_string()))?;
        fs::write(&path, json + "\n").map_err(|e| Error::file(&path, e))?;
    }
    writeln!(out, "method: {}", a.method)?;
    writeln!(out, "depth: {}", a.depth)?;
    writeln!(out, "status: {}", result.status)?;
    writeln!(out, "objective: {}", result.objective)?;
    writeln!(out, "train_adv_accuracy: {:.6}", adversarial_accuracy(&result.tree, &train, &attack))?;
    writeln!(out, "train_accuracy: {:.6}", accuracy(&result.tree, &train))?;
    if let Some(test) = &test {
        writeln!(out, "test_adv_accuracy: {:.6}", adversarial_accuracy(&result.tree, test, &attack))?;
        writeln!(out, "test_accuracy: {:.6}", accuracy(&result.tree, test))?;
    }
    writeln!(out, "wall_time_s: {:.3}", wall.as_secs_f64())?;
    writeln!(out, "model: {}", a.out.display())?;
    Ok(())
}

fn load_for_model(data_args: &DataArgs, model: &Path) -> Result<Dataset> {
    let raw = load_csv(&data_args.data)?;
    let scaling = scaling_path(model);
    if !data_args.prescaled && scaling.is_file() {
        let text = fs::read_to_string(&scaling).map_err(|e| Error::file(&scaling, e))?;
        let info: ScalingInfo = serde_json::from_str(&text)
            .map_err(|e| Error::schema(scaling.display().to_string(), e.to_string()))?;
        return info.apply(&raw);
    }
    load(data_args).map(|(d, _)| d)
}

fn cmd_eval(a: EvalArgs, out: &mut dyn Write) -> Result<()> {
    let data = load_for_model(&a.data, &a.model)?;
    let text = fs::read_to_string(&a.model).map_err(|e| Error::file(&a.model, e))?;
    let tree = Tree::from_json_for(&text, data.n_features())?;
    let attack = attack_model(&a.attack, data.n_features())?;
    writeln!(out, "samples: {}", data.n_samples())?;
    writeln!(out, "adv_accuracy: {:.6}", adversarial_accuracy(&tree, &data, &attack))?;
    writeln!(out, "adv_errors: {}", adversarial_errors(&tree, &data, &attack))?;
    writeln!(out, "accuracy: {:.6}", accuracy(&tree, &data))?;
    if let Some(path) = &a.witnesses {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        let mut header = vec!["sample".to_string(), "label".into(), "prediction".into()];
        header.extend(data.feature_names().iter().cloned());
        w.write_record(&header).map_err(io)?;
        for i in 0..data.n_samples() {
            if is_robust(&tree, data.row(i), data.label(i), &attack) {
                continue;
            }
            let x = attack_witness(&tree, data.row(i), data.label(i), &attack)
                .ok_or_else(|| Error::InvalidData(format!("no witness for non-robust sample {i}")))?;
            let mut rec = vec![i.to_string(), data.label(i).to_string(), tree.predict(&x).to_string()];
            rec.extend(x.iter().map(|v| format!("{v:e}")));
            w.write_record(&rec).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
        fs::write(path, bytes).map_err(|e| Error::file(path, e))?;
        writeln!(out, "witnesses: {}", path.display())?;
    }
    Ok(())
}

fn cmd_bound(a: BoundArgs, out: &mut dyn Write) -> Result<()> {
    let (data, _) = load(&a.data)?;
    let attack = attack_model(&a.attack, data.n_features())?;
    writeln!(out, "samples: {}", data.n_samples())?;
    writeln!(out, "min_errors: {}", min_errors(&data, &attack))?;
    writeln!(out, "adv_accuracy_bound: {:.6}", adversarial_accuracy_bound(&data, &attack)?)?;
    Ok(())
}

fn cmd_sweep(a: SweepArgs, out: &mut dyn Write) -> Result<()> {
    let (data, _) = load(&a.data)?;
    if a.steps == 0 {
        return Err(Error::InvalidArgument("--steps must be at least 1".into()));
    }
    let sweep = epsilon_sweep(&data, &linear_grid(a.max_epsilon, a.steps))?;
    let mut buf = Vec::new();
    write_sweep_csv(&sweep, &mut buf)?;
    write_output(a.out.as_deref(), &String::from_utf8_lossy(&buf), out)
}

fn cmd_select(a: SelectArgs, out: &mut dyn Write) -> Result<()> {
    let (data, _) = load(&a.data)?;
    let picks = select_epsilons(&data, &a.fractions)?;
    let mut text = String::from("fraction,target,epsilon,bound\n");
    for s in picks {
        text.push_str(&format!("{},{},{},{}\n", s.fraction, s.target, s.epsilon, s.bound));
    }
    write_output(a.out.as_deref(), &text, out)
}

fn cmd_encode(a: EncodeArgs, out: &mut dyn Write) -> Result<()> {
    let (data, _) = load(&a.data)?;
    let attack = attack_model(&a.attack, data.n_features())?;
    let mut buf = Vec::new();
    match a.format {
        EncodeFormat::Wcnf | EncodeFormat::Wcnf2022 => {
            let enc = build_encoding(&data, &attack, a.depth)?;
            let format = if a.format == EncodeFormat::Wcnf { WcnfFormat::Classic } else { WcnfFormat::Modern };
            enc.wcnf.write(&mut buf, format)?;
        }
        EncodeFormat::Lp | EncodeFormat::LpBinary => {
            let mode = if a.format == EncodeFormat::Lp { MilpMode::Continuous } else { MilpMode::Binary };
            build_milp(&data, &attack, a.depth, mode)?.write_lp(&mut buf)?;
        }
        EncodeFormat::Warm | EncodeFormat::WarmBinary => {
            let mode = if a.format == EncodeFormat::Warm { MilpMode::Continuous } else { MilpMode::Binary };
            let tree = match &a.model {
                Some(path) => {
                    let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
                    Tree::from_json_for(&text, data.n_features())?
                }
                None => maximize_margin(&fit_greedy(&data, &attack, a.depth), &data, &attack),
            };
            let model = build_milp(&data, &attack, a.depth, mode)?;
            write_warm_start(&model, &tree, &data, &attack, &mut buf)?;
        }
    }
    write_output(a.out.as_deref(), &String::from_utf8_lossy(&buf), out)
}

fn cmd_experiment(a: ExperimentArgs, out: &mut dyn Write) -> Result<()> {
    let (data, _) = load(&a.data)?;
    let p = data.n_features();
    let attacks = match (&a.epsilon, &a.delta_left, &a.delta_right) {
        (Some(eps), _, _) => eps.iter().map(|&e| AttackSetting::epsilon(p, e)).collect::<Result<Vec<_>>>()?,
        (None, Some(l), Some(r)) => vec![AttackSetting {
            label: "delta".into(),
            model: AttackModel::new(l.clone(), r.clone())?,
        }],
        _ => return Err(Error::Usage("give --epsilon or both --delta-left and --delta-right".into())),
    };
    let limit = timeout(a.timeout)?;
    let mut plan = ExperimentPlan::new(attacks, a.depth.clone(), a.method.clone(), a.seed);
    plan.train_fraction = a.train_fraction;
    plan.folds = a.folds;
    plan.warm = a.warm;
    plan.time_limit = Some(limit);
    plan.workers = a.workers;
    for spec in &a.solver_cmd {
        let (target, template) = match spec.split_once('=') {
            Some((m, rest)) if m.parse::<Method>().is_ok() => (m.parse::<Method>().ok(), rest),
            _ => (None, spec.as_str()),
        };
        for &m in a.method.iter().filter(|m| m.is_external()) {
            if target.is_none_or(|t| t == m) {
                plan.solvers.insert(m, solver_config(template, m, limit, a.warm_format, WcnfArg::Classic)?);
            }
        }
    }
    let rows = run_experiment(&data, &plan)?;
    let mut buf = Vec::new();
    write_results_csv(&rows, &mut buf)?;
    write_output(a.out.as_deref(), &String::from_utf8_lossy(&buf), out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("robtree").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    fn xor_csv(dir: &Path) -> PathBuf {
        let path = dir.join("xor.csv");
        fs::write(&path, "x,y,label\n0.2,0.2,0\n0.8,0.8,0\n0.2,0.8,1\n0.8,0.2,1\n").unwrap();
        path
    }

    #[test]
    fn fit_and_eval_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let data = xor_csv(dir.path());
        let model = dir.path().join("m.json");
        let (code, out, err) = run_args(&[
            "fit", "--data", data.to_str().unwrap(), "--epsilon", "0.1", "--depth", "2", "--method", "exact",
            "--out", model.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{err}");
        assert!(out.contains("train_adv_accuracy: 1.000000"));
        assert!(out.contains("status: optimal"));
        assert!(dir.path().join("m.scaling.json").is_file());
        let (code, out, _) = run_args(&[
            "eval", "--model", model.to_str().unwrap(), "--data", data.to_str().unwrap(), "--epsilon", "0.1",
        ]);
        assert_eq!(code, 0);
        assert!(out.contains("adv_accuracy: 1.000000"));
    }

    #[test]
    fn usage_errors_exit_one() {
        let dir = tempfile::tempdir().unwrap();
        let data = xor_csv(dir.path());
        let d = data.to_str().unwrap();
        assert_eq!(run_args(&["fit", "--data", d, "--epsilon", "0.1", "--depth", "1", "--method", "maxsat"]).0, 1);
        assert_eq!(run_args(&["fit", "--data", d, "--depth", "1"]).0, 1);
        assert_eq!(run_args(&["bogus"]).0, 1);
        assert_eq!(run_args(&["bound", "--data", d, "--epsilon", "0.1", "--delta-left", "0.1"]).0, 1);
        assert_eq!(run_args(&["--help"]).0, 0);
    }

    #[test]
    fn runtime_errors_exit_two() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope.csv");
        let (code, _, err) = run_args(&["bound", "--data", missing.to_str().unwrap(), "--epsilon", "0.1"]);
        assert_eq!(code, 2);
        assert!(err.contains("nope.csv"));
    }

    #[test]
    fn bound_and_sweep() {
        let dir = tempfile::tempdir().unwrap();
        let data = xor_csv(dir.path());
        let d = data.to_str().unwrap();
        let (code, out, _) = run_args(&["bound", "--data", d, "--prescaled", "--epsilon", "0.1"]);
        assert_eq!(code, 0);
        assert!(out.contains("adv_accuracy_bound: 1.000000"));
        let (code, out, _) = run_args(&["sweep", "--data", d, "--max-epsilon", "1", "--steps", "4"]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().count(), 6);
        assert!(out.ends_with("1,0.5\n"));
    }
}
