//! Train/test protocol: seeded stratified split, stratified k-fold
//! cross-validation over tree depths, refit on the full training set.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::adversary::{adversarial_accuracy, adversarial_errors};
use crate::attack::AttackModel;
use crate::bridge::{fit, FitOptions, Method, SolverConfig};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::exact::SolveStatus;
use crate::tree::Tree;

/// One attack model to evaluate, with the label it gets in the table.
#[derive(Clone, Debug, PartialEq)]
pub struct AttackSetting {
    pub label: String,
    pub model: AttackModel,
}

impl AttackSetting {
    pub fn epsilon(n_features: usize, epsilon: f64) -> Result<Self> {
        Ok(AttackSetting {
            label: format!("{epsilon}"),
            model: AttackModel::epsilon(n_features, epsilon)?,
        })
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentPlan {
    pub attacks: Vec<AttackSetting>,
    pub depths: Vec<usize>,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub train_fraction: f64,
    pub folds: usize,
    /// Start external solvers and the exact search from the greedy tree.
    pub warm: bool,
    /// Solver per external method.
    pub solvers: BTreeMap<Method, SolverConfig>,
    /// Limit for each exact search.
    pub time_limit: Option<Duration>,
    /// Upper bound on concurrent fits; `0` uses all cores.
    pub workers: usize,
}

impl ExperimentPlan {
    pub fn new(attacks: Vec<AttackSetting>, depths: Vec<usize>, methods: Vec<Method>, seed: u64) -> Self {
        ExperimentPlan {
            attacks,
            depths,
            methods,
            seed,
            train_fraction: 0.8,
            folds: 3,
            warm: false,
            solvers: BTreeMap::new(),
            time_limit: None,
            workers: 0,
        }
    }

    pub fn validate(&self, data: &Dataset) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "train fraction {} is outside (0, 1)",
                self.train_fraction
            )));
        }
        if self.folds < 2 {
            return Err(Error::InvalidArgument("at least 2 folds are needed".into()));
        }
        if self.attacks.is_empty() || self.depths.is_empty() || self.methods.is_empty() {
            return Err(Error::InvalidArgument("plan needs attacks, depths and methods".into()));
        }
        for a in &self.attacks {
            if a.model.n_features() != data.n_features() {
                return Err(Error::InvalidAttack(format!(
                    "attack {} has {} features, data has {}",
                    a.label,
                    a.model.n_features(),
                    data.n_features()
                )));
            }
        }
        for m in &self.methods {
            if m.is_external() && !self.solvers.contains_key(m) {
                return Err(Error::Usage(format!("method {m} needs a solver command")));
            }
        }
        Ok(())
    }
}

/// Indices of a seeded stratified split into (train, test).
///
/// Each class is shuffled on its own and the first `round(fraction * n_c)`
/// of it go to training.
pub fn stratified_split(data: &Dataset, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [0u8, 1] {
        let mut idx: Vec<usize> = (0..data.n_samples()).filter(|&i| data.label(i) == class).collect();
        idx.shuffle(&mut rng);
        let k = (fraction * idx.len() as f64).round() as usize;
        train.extend_from_slice(&idx[..k]);
        test.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Fold number of each position in `labels`: every class is shuffled and
/// dealt round-robin, continuing the deal across classes so fold sizes
/// stay balanced too.
pub fn stratified_folds(labels: &[u8], folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold = vec![0; labels.len()];
    let mut next = 0;
    for class in [0u8, 1] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            fold[i] = next % folds;
            next += 1;
        }
    }
    fold
}

/// One line of the results table.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub attack: String,
    pub method: Method,
    pub depth: usize,
    /// Best cross-validation depth for this attack and method.
    pub selected: bool,
    pub cv_adv_accuracy: Option<f64>,
    pub train_adv_accuracy: Option<f64>,
    pub test_adv_accuracy: Option<f64>,
    pub train_errors: Option<usize>,
    /// Solver status, `fallback` for the constant classifier, or the error.
    pub status: String,
}

struct Outcome {
    tree: Tree,
    errors: usize,
    status: String,
}

fn fit_cell(data: &Dataset, attack: &AttackModel, depth: usize, method: Method, plan: &ExperimentPlan) -> Result<Outcome> {
    let options = FitOptions {
        method,
        warm: plan.warm,
        solver: plan.solvers.get(&method).cloned(),
        time_limit: plan.time_limit,
        matching_pruning: true,
    };
    match fit(data, attack, depth, &options) {
        Ok(r) => Ok(Outcome {
            tree: r.tree,
            errors: r.objective,
            status: r.status.as_str().to_string(),
        }),
        Err(Error::NoIncumbent) => {
            let tree = Tree::constant(depth, data.majority_label(), 0);
            let errors = adversarial_errors(&tree, data, attack);
            Ok(Outcome {
                tree,
                errors,
                status: "fallback".into(),
            })
        }
        Err(e) => Err(e),
    }
}

#[derive(Clone, Copy)]
struct Job {
    attack: usize,
    method: usize,
    depth: usize,
    /// `None` for the refit on all training data.
    fold: Option<usize>,
}

/// Runs the plan and returns one row per attack, method and depth, in
/// plan order.
pub fn run_experiment(data: &Dataset, plan: &ExperimentPlan) -> Result<Vec<ResultRow>> {
    plan.validate(data)?;
    let (train_idx, test_idx) = stratified_split(data, plan.train_fraction, plan.seed);
    let train = data.subset(&train_idx);
    let test = data.subset(&test_idx);
    let fold_of = stratified_folds(train.labels(), plan.folds, plan.seed.wrapping_add(1));
    let fold_sets: Vec<(Dataset, Dataset)> = (0..plan.folds)
        .map(|f| {
            let (fit_idx, val_idx): (Vec<usize>, Vec<usize>) =
                (0..train.n_samples()).partition(|&i| fold_of[i] != f);
            (train.subset(&fit_idx), train.subset(&val_idx))
        })
        .collect();

    let mut jobs = Vec::new();
    for attack in 0..plan.attacks.len() {
        for method in 0..plan.methods.len() {
            for depth in 0..plan.depths.len() {
                for fold in (0..plan.folds).map(Some).chain([None]) {
                    jobs.push(Job {
                        attack,
                        method,
                        depth,
                        fold,
                    });
                }
            }
        }
    }
    let run = |job: &Job| -> (Result<Outcome>, Option<f64>) {
        let model = &plan.attacks[job.attack].model;
        let depth = plan.depths[job.depth];
        let method = plan.methods[job.method];
        match job.fold {
            Some(f) => {
                let (fit_set, val_set) = &fold_sets[f];
                let out = fit_cell(fit_set, model, depth, method, plan);
                let score = out.as_ref().ok().map(|o| adversarial_accuracy(&o.tree, val_set, model));
                (out, score)
            }
            None => {
                let out = fit_cell(&train, model, depth, method, plan);
                let score = out.as_ref().ok().map(|o| adversarial_accuracy(&o.tree, &test, model));
                (out, score)
            }
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    let results: Vec<(Result<Outcome>, Option<f64>)> = pool.install(|| jobs.par_iter().map(run).collect());

    let mut rows = Vec::new();
    let per_depth = plan.folds + 1;
    for (g, chunk) in results.chunks(per_depth * plan.depths.len()).enumerate() {
        let attack = &plan.attacks[g / plan.methods.len()];
        let method = plan.methods[g % plan.methods.len()];
        let start = rows.len();
        for (d, cell) in chunk.chunks(per_depth).enumerate() {
            let (folds, refit) = cell.split_at(plan.folds);
            let cv = folds
                .iter()
                .map(|(_, s)| *s)
                .collect::<Option<Vec<f64>>>()
                .map(|s| s.iter().sum::<f64>() / s.len() as f64);
            let fold_error = folds.iter().find_map(|(r, _)| r.as_ref().err());
            let (out, test_score) = &refit[0];
            let mut row = ResultRow {
                attack: attack.label.clone(),
                method,
                depth: plan.depths[d],
                selected: false,
                cv_adv_accuracy: cv,
                train_adv_accuracy: None,
                test_adv_accuracy: *test_score,
                train_errors: None,
                status: String::new(),
            };
            match out {
                Ok(o) => {
                    row.train_adv_accuracy = Some(adversarial_accuracy(&o.tree, &train, &attack.model));
                    row.train_errors = Some(o.errors);
                    row.status = match fold_error {
                        Some(e) => format!("{} (cv error: {e})", o.status),
                        None => o.status.clone(),
                    };
                }
                Err(e) => {
                    log::warn!("{method} at depth {} failed: {e}", plan.depths[d]);
                    row.status = format!("error: {e}");
                }
            }
            rows.push(row);
        }
        // Best mean CV score; ties go to the shallower tree.
        let mut best: Option<usize> = None;
        for k in start..rows.len() {
            if let Some(s) = rows[k].cv_adv_accuracy {
                if best.is_none_or(|b| s > rows[b].cv_adv_accuracy.unwrap_or(f64::MIN)) {
                    best = Some(k);
                }
            }
        }
        if let Some(b) = best {
            rows[b].selected = true;
        }
    }
    Ok(rows)
}

fn fmt_opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes rows as CSV with a header. Accuracies get six decimals.
pub fn write_results_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record([
        "attack",
        "method",
        "depth",
        "selected",
        "cv_adv_accuracy",
        "train_adv_accuracy",
        "test_adv_accuracy",
        "train_errors",
        "status",
    ])
    .map_err(io)?;
    for r in rows {
        let acc = |v: Option<f64>| fmt_opt(v.map(|x| format!("{x:.6}")));
        w.write_record([
            r.attack.clone(),
            r.method.to_string(),
            r.depth.to_string(),
            r.selected.to_string(),
            acc(r.cv_adv_accuracy),
            acc(r.train_adv_accuracy),
            acc(r.test_adv_accuracy),
            fmt_opt(r.train_errors),
            r.status.clone(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Whether the refit reported proven optimality.
pub fn is_optimal(row: &ResultRow) -> bool {
    row.status == SolveStatus::Optimal.as_str()
}
