//! Mixed-integer linear models of robust tree training.
//!
//! Two threshold formulations are supported. The continuous one keeps one
//! real threshold `b_m` per node and links it to the reach indicators with
//! big-M rows. The binary one reuses the MaxSAT clauses, each written as a
//! 0-1 inequality. Both minimize the number of error indicators.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write;

use crate::adversary::adversarial_errors;
use crate::attack::AttackModel;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::maxsat::{self, assignment_for_tree, check_encodable, node_code, Assignment, Decoded, Encoding};
use crate::thresholds::{CandidateMode, ThresholdCandidates};
use crate::tree::{leaf_ancestors, n_decision_nodes, n_leaves, Split, Tree, ALL_LEFT};

/// Big-M constant: features and thresholds live in `[0, 1]`.
pub const BIG_M: f64 = 2.0;
/// Default slack making `value > threshold` a non-strict row.
pub const DEFAULT_STRICT_SLACK: f64 = 1e-5;
/// Distance within which a binary value is accepted as 0 or 1.
pub const INTEGRALITY_TOLERANCE: f64 = 1e-4;
const FEASIBILITY_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MilpMode {
    /// One real threshold per node.
    Continuous,
    /// Ordered binary chains over candidate thresholds.
    Binary,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VarKind {
    Binary,
    Continuous { lower: f64, upper: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

/// A linear row `Σ coef * var  sense  rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * values[v]).sum()
    }

    pub fn is_satisfied(&self, values: &[f64], tol: f64) -> bool {
        let lhs = self.activity(values);
        match self.sense {
            Sense::Le => lhs <= self.rhs + tol,
            Sense::Ge => lhs >= self.rhs - tol,
            Sense::Eq => (lhs - self.rhs).abs() <= tol,
        }
    }
}

/// A complete model with named variables, in a fixed order:
/// `a`, thresholds, `s`, `c`, `e`.
#[derive(Clone, Debug, PartialEq)]
pub struct MilpModel {
    pub mode: MilpMode,
    pub depth: usize,
    pub names: Vec<String>,
    pub kinds: Vec<VarKind>,
    pub constraints: Vec<Constraint>,
    /// Variables summed by the objective.
    pub objective: Vec<usize>,
    pub big_m: f64,
    pub strict_slack: f64,
    n_samples: usize,
    n_features: usize,
    candidates: ThresholdCandidates,
    encoding: Option<Encoding>,
    index: HashMap<String, usize>,
}

impl MilpModel {
    pub fn n_vars(&self) -> usize {
        self.names.len()
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn candidates(&self) -> &ThresholdCandidates {
        &self.candidates
    }

    /// The clause encoding a binary model was derived from.
    pub fn encoding(&self) -> Option<&Encoding> {
        self.encoding.as_ref()
    }

    pub fn var(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    fn n_nodes(&self) -> usize {
        n_decision_nodes(self.depth)
    }

    pub fn a(&self, feature: usize, node: usize) -> usize {
        node * self.n_features + feature
    }

    /// Continuous threshold of `node`.
    pub fn b(&self, node: usize) -> usize {
        assert_eq!(self.mode, MilpMode::Continuous);
        self.n_nodes() * self.n_features + node
    }

    fn base_s(&self) -> usize {
        let chain = match &self.encoding {
            Some(enc) => enc.vars.chain_len(),
            None => 1,
        };
        self.n_nodes() * (self.n_features + chain)
    }

    pub fn s(&self, sample: usize, node: usize, right: bool) -> usize {
        self.base_s() + 2 * (sample * self.n_nodes() + node) + right as usize
    }

    pub fn c(&self, leaf: usize) -> usize {
        self.base_s() + 2 * self.n_samples * self.n_nodes() + leaf
    }

    pub fn e(&self, sample: usize) -> usize {
        self.c(0) + n_leaves(self.depth) + sample
    }

    /// Objective value of `values`.
    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().map(|&v| values[v]).sum()
    }

    /// Checks bounds, integrality and every row by substitution; returns the
    /// name of the first violated item.
    pub fn check_feasible(&self, values: &[f64]) -> std::result::Result<(), String> {
        if values.len() != self.n_vars() {
            return Err(format!("{} values for {} variables", values.len(), self.n_vars()));
        }
        for (k, kind) in self.kinds.iter().enumerate() {
            let x = values[k];
            let ok = match *kind {
                VarKind::Binary => x == 0.0 || x == 1.0,
                VarKind::Continuous { lower, upper } => lower <= x && x <= upper,
            };
            if !ok {
                return Err(format!("bound of {} (value {x})", self.names[k]));
            }
        }
        match self.constraints.iter().find(|c| !c.is_satisfied(values, FEASIBILITY_TOLERANCE)) {
            Some(c) => Err(c.name.clone()),
            None => Ok(()),
        }
    }

    /// Orders a name-value map by variable; unknown names are ignored and
    /// missing ones reported.
    pub fn values_from_map(&self, map: &HashMap<String, f64>) -> Result<Vec<f64>> {
        self.names
            .iter()
            .map(|name| map.get(name).copied().ok_or_else(|| Error::IncompleteAssignment(name.clone())))
            .collect()
    }

    /// Writes CPLEX LP text.
    pub fn write_lp<W: Write>(&self, mut out: W) -> Result<()> {
        let mut text = String::new();
        text.push_str("Minimize\n obj:");
        let obj: Vec<(usize, f64)> = self.objective.iter().map(|&v| (v, 1.0)).collect();
        self.push_terms(&mut text, &obj);
        text.push_str("\nSubject To\n");
        for c in &self.constraints {
            let _ = write!(text, " {}:", c.name);
            self.push_terms(&mut text, &c.terms);
            let _ = writeln!(text, " {} {}", c.sense.symbol(), c.rhs);
        }
        let continuous: Vec<(usize, f64, f64)> = self
            .kinds
            .iter()
            .enumerate()
            .filter_map(|(k, kind)| match *kind {
                VarKind::Continuous { lower, upper } => Some((k, lower, upper)),
                VarKind::Binary => None,
            })
            .collect();
        if !continuous.is_empty() {
            text.push_str("Bounds\n");
            for (k, lower, upper) in continuous {
                let _ = writeln!(text, " {lower} <= {} <= {upper}", self.names[k]);
            }
        }
        text.push_str("Binaries\n");
        let binaries: Vec<&str> = self
            .kinds
            .iter()
            .enumerate()
            .filter(|(_, kind)| **kind == VarKind::Binary)
            .map(|(k, _)| self.names[k].as_str())
            .collect();
        for chunk in binaries.chunks(10) {
            let _ = writeln!(text, " {}", chunk.join(" "));
        }
        text.push_str("End\n");
        out.write_all(text.as_bytes())?;
        out.flush()?;
        Ok(())
    }

    pub fn to_lp_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_lp(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    fn push_terms(&self, text: &mut String, terms: &[(usize, f64)]) {
        if terms.is_empty() {
            text.push_str(" 0 ");
            text.push_str(&self.names[0]);
            return;
        }
        for (k, &(v, coef)) in terms.iter().enumerate() {
            if k > 0 && k % 8 == 0 {
                text.push_str("\n  ");
            }
            let sign = if coef < 0.0 { "-" } else { "+" };
            let magnitude = coef.abs();
            if k == 0 && sign == "+" {
                text.push(' ');
            } else {
                let _ = write!(text, " {sign} ");
            }
            if magnitude != 1.0 {
                let _ = write!(text, "{magnitude} ");
            }
            text.push_str(&self.names[v]);
        }
    }
}

struct Builder {
    names: Vec<String>,
    kinds: Vec<VarKind>,
    constraints: Vec<Constraint>,
}

impl Builder {
    fn var(&mut self, name: String, kind: VarKind) -> usize {
        self.names.push(name);
        self.kinds.push(kind);
        self.names.len() - 1
    }

    fn row(&mut self, name: String, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        let terms = terms.into_iter().filter(|&(_, c)| c != 0.0).collect();
        self.constraints.push(Constraint { name, terms, sense, rhs });
    }
}

/// Slack for strict comparisons: the default, halved below the smallest
/// candidate gap when needed.
pub fn strict_slack(candidates: &ThresholdCandidates) -> f64 {
    match candidates.min_gap() {
        Some(gap) => DEFAULT_STRICT_SLACK.min(gap / 2.0),
        None => DEFAULT_STRICT_SLACK,
    }
}

pub fn build_milp(data: &Dataset, attack: &AttackModel, depth: usize, mode: MilpMode) -> Result<MilpModel> {
    check_encodable(data, attack, depth)?;
    let n = data.n_samples();
    let p = data.n_features();
    let n_nodes = n_decision_nodes(depth);
    let mut builder = Builder {
        names: Vec::new(),
        kinds: Vec::new(),
        constraints: Vec::new(),
    };
    let (candidates, encoding) = match mode {
        MilpMode::Binary => {
            let enc = maxsat::build_encoding(data, attack, depth)?;
            (enc.vars.candidates().clone(), Some(enc))
        }
        MilpMode::Continuous => {
            let cands = ThresholdCandidates::build(data, attack, CandidateMode::Endpoints);
            (cands, None)
        }
    };
    let slack = strict_slack(&candidates);

    for m in 0..n_nodes {
        for j in 0..p {
            builder.var(format!("a_{j}_{m}"), VarKind::Binary);
        }
    }
    match &encoding {
        Some(enc) => {
            for m in 0..n_nodes {
                for v in 0..enc.vars.chain_len() {
                    builder.var(format!("b_{v}_{m}"), VarKind::Binary);
                }
            }
        }
        None => {
            for m in 0..n_nodes {
                builder.var(format!("b_{m}"), VarKind::Continuous { lower: 0.0, upper: 1.0 });
            }
        }
    }
    for i in 0..n {
        for m in 0..n_nodes {
            builder.var(format!("s_{i}_{m}_0"), VarKind::Binary);
            builder.var(format!("s_{i}_{m}_1"), VarKind::Binary);
        }
    }
    for t in 0..n_leaves(depth) {
        builder.var(format!("c_{t}"), VarKind::Binary);
    }
    for i in 0..n {
        builder.var(format!("e_{i}"), VarKind::Binary);
    }

    let index: HashMap<String, usize> = builder.names.iter().enumerate().map(|(k, s)| (s.clone(), k)).collect();
    let mut model = MilpModel {
        mode,
        depth,
        names: Vec::new(),
        kinds: Vec::new(),
        constraints: Vec::new(),
        objective: Vec::new(),
        big_m: BIG_M,
        strict_slack: slack,
        n_samples: n,
        n_features: p,
        candidates,
        encoding,
        index,
    };

    match &model.encoding {
        Some(enc) => {
            // maxsat ids are model indices + 1
            let c = enc.counts;
            for (k, clause) in enc.wcnf.hard.iter().enumerate() {
                let (name, sense) = if k < c.selection {
                    (format!("sel_{k}"), Sense::Eq)
                } else if k < c.selection + c.ordering {
                    (format!("ord_{}", k - c.selection), Sense::Ge)
                } else if k < c.selection + c.ordering + c.reachability {
                    (format!("reach_{}", k - c.selection - c.ordering), Sense::Ge)
                } else {
                    (format!("err_{}", k - c.selection - c.ordering - c.reachability), Sense::Ge)
                };
                let negatives = clause.iter().filter(|&&l| l < 0).count();
                let terms = clause
                    .iter()
                    .map(|&l| ((l.unsigned_abs() - 1) as usize, if l > 0 { 1.0 } else { -1.0 }))
                    .collect();
                builder.row(name, terms, sense, 1.0 - negatives as f64);
            }
        }
        None => {
            for m in 0..n_nodes {
                let terms = (0..p).map(|j| (model.a(j, m), 1.0)).collect();
                builder.row(format!("sel_{m}"), terms, Sense::Eq, 1.0);
            }
            for i in 0..n {
                for m in 0..n_nodes {
                    let mut left: Vec<(usize, f64)> =
                        (0..p).map(|j| (model.a(j, m), attack.low(j, data.value(i, j)))).collect();
                    left.push((model.b(m), -1.0));
                    left.push((model.s(i, m, false), BIG_M));
                    builder.row(format!("left_{i}_{m}"), left, Sense::Ge, slack);
                    let mut right: Vec<(usize, f64)> =
                        (0..p).map(|j| (model.a(j, m), attack.high(j, data.value(i, j)))).collect();
                    right.push((model.b(m), -1.0));
                    right.push((model.s(i, m, true), -BIG_M));
                    builder.row(format!("right_{i}_{m}"), right, Sense::Le, 0.0);
                }
            }
            for t in 0..n_leaves(depth) {
                let (anc_left, anc_right) = leaf_ancestors(depth, t);
                let d = depth as f64;
                for i in 0..n {
                    let mut terms = vec![(model.e(i), 1.0)];
                    terms.extend(anc_left.iter().map(|&m| (model.s(i, m, false), -1.0)));
                    terms.extend(anc_right.iter().map(|&m| (model.s(i, m, true), -1.0)));
                    // g = c_t for label 0, 1 - c_t for label 1
                    let rhs = if data.label(i) == 0 {
                        terms.push((model.c(t), -1.0));
                        -d
                    } else {
                        terms.push((model.c(t), 1.0));
                        1.0 - d
                    };
                    builder.row(format!("err_{t}_{i}"), terms, Sense::Ge, rhs);
                }
            }
        }
    }

    model.objective = (0..n).map(|i| model.e(i)).collect();
    model.names = builder.names;
    model.kinds = builder.kinds;
    model.constraints = builder.constraints;
    Ok(model)
}

/// Variable values encoding `tree`, with reach and error indicators at
/// their smallest feasible values. The objective equals the tree's
/// adversarial error count.
pub fn warm_start_values(model: &MilpModel, tree: &Tree, data: &Dataset, attack: &AttackModel) -> Result<Vec<f64>> {
    if tree.depth() != model.depth {
        return Err(Error::WarmStart(format!(
            "tree depth {} differs from model depth {}",
            tree.depth(),
            model.depth
        )));
    }
    tree.check_features(model.n_features)?;
    let expected = adversarial_errors(tree, data, attack);
    let values = match &model.encoding {
        Some(enc) => {
            let asg = assignment_for_tree(enc, tree, data, attack)?;
            asg.bits().iter().map(|&b| b as u8 as f64).collect()
        }
        None => continuous_warm_start(model, tree, data, attack)?,
    };
    let cost = model.objective_value(&values).round() as usize;
    if cost != expected {
        return Err(Error::WarmStart(format!(
            "start objective {cost} differs from the tree's {expected} adversarial errors"
        )));
    }
    Ok(values)
}

fn continuous_warm_start(model: &MilpModel, tree: &Tree, data: &Dataset, attack: &AttackModel) -> Result<Vec<f64>> {
    let cands = &model.candidates;
    let mut tree = tree.normalize_redundant_splits();
    let n = model.n_samples;
    let n_nodes = model.n_nodes();
    let mut values = vec![0.0; model.n_vars()];
    let mut reach = vec![[false; 2]; n * n_nodes];
    for m in 0..n_nodes {
        let mut code = node_code(cands, tree.node(m), data, attack);
        let chain = cands.feature(code.feature);
        if code.extra_feature.is_none() && code.gap == 0 && chain.first().is_some_and(|&c| c <= 0.0) {
            // a threshold in [0, 1] cannot send a box touching 0 right; mirror instead
            tree.swap_children(m);
            tree.set_node(
                m,
                Split {
                    feature: code.feature,
                    threshold: ALL_LEFT,
                },
            );
            code.gap = cands.len(code.feature);
        }
        let (j, threshold) = match code.extra_feature {
            Some(extra) => (extra, tree.node(m).threshold),
            None => {
                let c = cands.feature(code.feature);
                let t = match (code.gap, c.first()) {
                    (0, Some(&first)) => first / 2.0,
                    (0, None) => ALL_LEFT,
                    (g, _) => c[g - 1],
                };
                (code.feature, t)
            }
        };
        values[model.a(j, m)] = 1.0;
        values[model.b(m)] = threshold;
        for i in 0..n {
            let x = data.value(i, j);
            let left = attack.low(j, x) <= threshold;
            let right = attack.high(j, x) > threshold;
            reach[i * n_nodes + m] = [left, right];
            values[model.s(i, m, false)] = left as u8 as f64;
            values[model.s(i, m, true)] = right as u8 as f64;
        }
    }
    for t in 0..tree.n_leaves() {
        values[model.c(t)] = tree.leaf_class(t) as f64;
    }
    for i in 0..n {
        let wrong = (0..tree.n_leaves()).any(|t| {
            let (l, r) = leaf_ancestors(tree.depth(), t);
            tree.leaf_class(t) != data.label(i)
                && l.iter().all(|&m| reach[i * n_nodes + m][0])
                && r.iter().all(|&m| reach[i * n_nodes + m][1])
        });
        values[model.e(i)] = wrong as u8 as f64;
    }
    Ok(values)
}

/// Writes a start as `name value` lines in variable order.
pub fn write_warm_start<W: Write>(
    model: &MilpModel,
    tree: &Tree,
    data: &Dataset,
    attack: &AttackModel,
    mut out: W,
) -> Result<Vec<f64>> {
    let values = warm_start_values(model, tree, data, attack)?;
    let mut text = String::new();
    for (name, v) in model.names.iter().zip(&values) {
        let _ = writeln!(text, "{name} {v}");
    }
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(values)
}

fn round_binary(model: &MilpModel, values: &[f64]) -> Result<Vec<f64>> {
    values
        .iter()
        .zip(&model.kinds)
        .zip(&model.names)
        .map(|((&v, kind), name)| match kind {
            VarKind::Binary => {
                let r = v.round();
                if (v - r).abs() > INTEGRALITY_TOLERANCE || !(r == 0.0 || r == 1.0) {
                    Err(Error::FractionalBinary {
                        name: name.clone(),
                        value: v,
                    })
                } else {
                    Ok(r)
                }
            }
            VarKind::Continuous { .. } => Ok(v),
        })
        .collect()
}

/// Candidates a solver may have missed by less than this are treated as hit.
const SNAP_TOLERANCE: f64 = 1e-7;

/// Turns solver values into a tree and checks it is no worse than claimed.
pub fn decode_tree(model: &MilpModel, values: &[f64], data: &Dataset, attack: &AttackModel) -> Result<Decoded> {
    if values.len() != model.n_vars() {
        return Err(Error::IncompleteAssignment(format!(
            "{} values for {} variables",
            values.len(),
            model.n_vars()
        )));
    }
    let rounded = round_binary(model, values)?;
    if let Some(enc) = &model.encoding {
        let asg = Assignment::from_bits(rounded.iter().map(|&v| v == 1.0).collect());
        return maxsat::decode_tree(enc, &asg, data, attack);
    }
    let depth = model.depth;
    let mut nodes = Vec::with_capacity(model.n_nodes());
    for m in 0..model.n_nodes() {
        let chosen: Vec<usize> = (0..model.n_features).filter(|&j| rounded[model.a(j, m)] == 1.0).collect();
        let &[j] = chosen.as_slice() else {
            return Err(Error::SolverParse(format!("node {m} selects {} features", chosen.len())));
        };
        let raw = rounded[model.b(m)].clamp(0.0, 1.0);
        let cands = model.candidates.feature(j);
        let k = cands.partition_point(|&c| c <= raw);
        // only snap when no candidate already sits at (or just under) raw
        let on_candidate = k > 0 && raw - cands[k - 1] <= SNAP_TOLERANCE;
        let threshold = match cands.get(k) {
            Some(&c) if c - raw <= SNAP_TOLERANCE && !on_candidate => c,
            _ => raw,
        };
        nodes.push(Split { feature: j, threshold });
    }
    let leaves = (0..n_leaves(depth)).map(|t| rounded[model.c(t)] as u8).collect();
    let tree = Tree::new(depth, nodes, leaves)?;
    let cost = model.objective.iter().filter(|&&v| rounded[v] == 1.0).count();
    let errors = adversarial_errors(&tree, data, attack);
    if errors > cost {
        return Err(Error::VerificationMismatch { verified: errors, claimed: cost });
    }
    Ok(Decoded { tree, errors, cost })
}
