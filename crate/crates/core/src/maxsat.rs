//! Weighted MaxSAT encoding of robust tree training with binary threshold
//! chains, and decoding of solver models back into trees.
//!
//! Variables, numbered densely from 1 in this order:
//!
//! * `a(j, m)`: node `m` splits on feature `j`;
//! * `b(m, j, v)`: the threshold of node `m` on feature `j` lies below
//!   candidate `v` (true values form a suffix of each chain);
//! * `s(i, m, side)`: the attacker can push sample `i` to that side of `m`;
//! * `c(t)`: leaf `t` predicts class 1;
//! * `e(i)`: sample `i` is counted as an error.
//!
//! Hard clauses come in four groups: feature selection, chain ordering,
//! reachability, and error detection. Every `¬e(i)` is a unit soft clause
//! of weight 1, so the optimum cost is the minimum number of errors.

use std::io::Write;

use crate::adversary::adversarial_errors;
use crate::attack::AttackModel;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::thresholds::{CandidateMode, ThresholdCandidates};
use crate::tree::{leaf_ancestors, n_decision_nodes, n_leaves, Split, Tree, ALL_LEFT, MAX_DEPTH};

/// What a variable stands for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarRole {
    Feature { node: usize, feature: usize },
    /// `index` is the position in the node's concatenated chain over all
    /// features; `candidate` the position within `feature`'s candidates.
    Threshold { node: usize, feature: usize, candidate: usize, index: usize },
    Reach { sample: usize, node: usize, right: bool },
    Class { leaf: usize },
    Error { sample: usize },
}

/// Dense variable numbering and its inverse.
#[derive(Clone, Debug, PartialEq)]
pub struct VarMap {
    depth: usize,
    n_samples: usize,
    n_features: usize,
    candidates: ThresholdCandidates,
    offsets: Vec<usize>,
    chain_len: usize,
    base_b: i32,
    base_s: i32,
    base_c: i32,
    base_e: i32,
    n_vars: i32,
}

impl VarMap {
    fn new(depth: usize, n_samples: usize, candidates: ThresholdCandidates) -> Self {
        let n_features = candidates.n_features();
        let n_nodes = n_decision_nodes(depth);
        let mut offsets = Vec::with_capacity(n_features);
        let mut chain_len = 0;
        for j in 0..n_features {
            offsets.push(chain_len);
            chain_len += candidates.len(j);
        }
        let base_b = 1 + (n_nodes * n_features) as i32;
        let base_s = base_b + (n_nodes * chain_len) as i32;
        let base_c = base_s + (2 * n_samples * n_nodes) as i32;
        let base_e = base_c + n_leaves(depth) as i32;
        let n_vars = base_e - 1 + n_samples as i32;
        VarMap {
            depth,
            n_samples,
            n_features,
            candidates,
            offsets,
            chain_len,
            base_b,
            base_s,
            base_c,
            base_e,
            n_vars,
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars as usize
    }

    pub fn candidates(&self) -> &ThresholdCandidates {
        &self.candidates
    }

    /// Length of a node's threshold chain summed over features.
    pub fn chain_len(&self) -> usize {
        self.chain_len
    }

    /// Position of feature `j`'s first candidate within a node's chain.
    pub fn chain_offset(&self, j: usize) -> usize {
        self.offsets[j]
    }

    pub fn a(&self, feature: usize, node: usize) -> i32 {
        1 + (node * self.n_features + feature) as i32
    }

    pub fn b(&self, node: usize, feature: usize, candidate: usize) -> i32 {
        debug_assert!(candidate < self.candidates.len(feature));
        self.base_b + (node * self.chain_len + self.offsets[feature] + candidate) as i32
    }

    pub fn s(&self, sample: usize, node: usize, right: bool) -> i32 {
        self.base_s + (2 * (sample * n_decision_nodes(self.depth) + node) + right as usize) as i32
    }

    pub fn c(&self, leaf: usize) -> i32 {
        self.base_c + leaf as i32
    }

    pub fn e(&self, sample: usize) -> i32 {
        self.base_e + sample as i32
    }

    /// Role of variable `id`, `None` if out of range.
    pub fn role(&self, id: i32) -> Option<VarRole> {
        if id < 1 || id > self.n_vars {
            return None;
        }
        let role = if id < self.base_b {
            let k = (id - 1) as usize;
            VarRole::Feature {
                node: k / self.n_features,
                feature: k % self.n_features,
            }
        } else if id < self.base_s {
            let k = (id - self.base_b) as usize;
            let node = k / self.chain_len;
            let index = k % self.chain_len;
            let feature = self.offsets.partition_point(|&o| o <= index) - 1;
            // skip features with empty chains sharing the same offset
            let feature = (feature..self.n_features)
                .find(|&j| index < self.offsets[j] + self.candidates.len(j))
                .expect("index lies in some chain");
            VarRole::Threshold {
                node,
                feature,
                candidate: index - self.offsets[feature],
                index,
            }
        } else if id < self.base_c {
            let k = (id - self.base_s) as usize;
            let n_nodes = n_decision_nodes(self.depth);
            VarRole::Reach {
                sample: k / 2 / n_nodes,
                node: k / 2 % n_nodes,
                right: k % 2 == 1,
            }
        } else if id < self.base_e {
            VarRole::Class {
                leaf: (id - self.base_c) as usize,
            }
        } else {
            VarRole::Error {
                sample: (id - self.base_e) as usize,
            }
        };
        Some(role)
    }
}

/// Hard clauses, unit-weight soft clauses and the hard weight.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WcnfInstance {
    pub n_vars: usize,
    pub hard: Vec<Vec<i32>>,
    pub soft: Vec<(u64, Vec<i32>)>,
    /// Weight marking hard clauses, larger than the total soft weight.
    pub top: u64,
}

/// Output dialect for [`WcnfInstance::write`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum WcnfFormat {
    /// `p wcnf` header; hard clauses carry the top weight.
    #[default]
    Classic,
    /// No header; hard clauses start with `h`.
    Modern,
}

impl WcnfInstance {
    pub fn n_clauses(&self) -> usize {
        self.hard.len() + self.soft.len()
    }

    pub fn write<W: Write>(&self, mut out: W, format: WcnfFormat) -> Result<()> {
        let mut line = String::new();
        let mut emit = |prefix: &str, lits: &[i32], out: &mut W| -> Result<()> {
            line.clear();
            line.push_str(prefix);
            for l in lits {
                line.push(' ');
                line.push_str(&l.to_string());
            }
            line.push_str(" 0\n");
            out.write_all(line.as_bytes())?;
            Ok(())
        };
        let hard_prefix = match format {
            WcnfFormat::Classic => {
                writeln!(out, "p wcnf {} {} {}", self.n_vars, self.n_clauses(), self.top)?;
                self.top.to_string()
            }
            WcnfFormat::Modern => "h".to_string(),
        };
        for clause in &self.hard {
            emit(&hard_prefix, clause, &mut out)?;
        }
        for (w, clause) in &self.soft {
            emit(&w.to_string(), clause, &mut out)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Serialized text, for hashing and tests.
    pub fn to_string(&self, format: WcnfFormat) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf, format).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    /// Index of the first hard clause `assignment` falsifies.
    pub fn first_violated(&self, assignment: &Assignment) -> Option<usize> {
        self.hard.iter().position(|c| !c.iter().any(|&l| assignment.lit(l)))
    }

    /// Total weight of falsified soft clauses.
    pub fn cost(&self, assignment: &Assignment) -> u64 {
        self.soft
            .iter()
            .filter(|(_, c)| !c.iter().any(|&l| assignment.lit(l)))
            .map(|(w, _)| w)
            .sum()
    }
}

/// Sizes of the four hard clause groups, in emission order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ClauseCounts {
    pub selection: usize,
    pub ordering: usize,
    pub reachability: usize,
    pub error: usize,
}

/// A compiled instance: variable map plus clauses.
#[derive(Clone, Debug, PartialEq)]
pub struct Encoding {
    pub vars: VarMap,
    pub wcnf: WcnfInstance,
    pub counts: ClauseCounts,
}

/// Truth values for variables `1..=n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    values: Vec<bool>,
}

impl Assignment {
    pub fn all_false(n_vars: usize) -> Self {
        Assignment {
            values: vec![false; n_vars],
        }
    }

    /// From a bit per variable, variable 1 first.
    pub fn from_bits(values: Vec<bool>) -> Self {
        Assignment { values }
    }

    /// From signed literals; every variable in `1..=n_vars` must appear.
    /// Literals beyond `n_vars` (solver auxiliaries) are ignored.
    pub fn from_literals(n_vars: usize, literals: &[i32]) -> Result<Self> {
        let mut seen = vec![None; n_vars];
        for &l in literals {
            let v = l.unsigned_abs() as usize;
            if l != 0 && v <= n_vars {
                seen[v - 1] = Some(l > 0);
            }
        }
        let values = seen
            .iter()
            .enumerate()
            .map(|(k, v)| v.ok_or_else(|| Error::IncompleteAssignment(format!("{}", k + 1))))
            .collect::<Result<Vec<bool>>>()?;
        Ok(Assignment { values })
    }

    pub fn n_vars(&self) -> usize {
        self.values.len()
    }

    pub fn value(&self, id: i32) -> bool {
        self.values[(id - 1) as usize]
    }

    pub fn set(&mut self, id: i32, value: bool) {
        self.values[(id - 1) as usize] = value;
    }

    /// Whether literal `l` is satisfied.
    pub fn lit(&self, l: i32) -> bool {
        self.value(l.abs()) == (l > 0)
    }

    pub fn bits(&self) -> &[bool] {
        &self.values
    }
}

pub(crate) fn check_encodable(data: &Dataset, attack: &AttackModel, depth: usize) -> Result<()> {
    attack.check_features(data.n_features())?;
    if depth < 1 {
        return Err(Error::InvalidArgument("encodings need depth >= 1".into()));
    }
    if depth > MAX_DEPTH {
        return Err(Error::InvalidArgument(format!("depth {depth} exceeds {MAX_DEPTH}")));
    }
    if data.n_samples() == 0 {
        return Err(Error::InvalidData("encodings need at least one sample".into()));
    }
    Ok(())
}

/// Encodes with perturbed-endpoint candidates.
pub fn build_encoding(data: &Dataset, attack: &AttackModel, depth: usize) -> Result<Encoding> {
    build_encoding_with(data, attack, depth, CandidateMode::Endpoints)
}

pub fn build_encoding_with(
    data: &Dataset,
    attack: &AttackModel,
    depth: usize,
    mode: CandidateMode,
) -> Result<Encoding> {
    check_encodable(data, attack, depth)?;
    let candidates = ThresholdCandidates::build(data, attack, mode);
    // With no splittable feature every box is the same, so nothing beats
    // sending all samples left; feature 0 then stands for that split.
    let degenerate = candidates.splittable_features().next().is_none();
    let selectable: Vec<usize> = if degenerate { vec![0] } else { candidates.splittable_features().collect() };
    let n = data.n_samples();
    let p = data.n_features();
    let n_nodes = n_decision_nodes(depth);
    let vars = VarMap::new(depth, n, candidates);
    let cands = vars.candidates();
    let mut hard: Vec<Vec<i32>> = Vec::new();
    let mut counts = ClauseCounts::default();

    for m in 0..n_nodes {
        hard.push(selectable.iter().map(|&j| vars.a(j, m)).collect());
    }
    counts.selection = hard.len();

    for m in 0..n_nodes {
        for j in 0..p {
            for v in 1..cands.len(j) {
                hard.push(vec![-vars.b(m, j, v - 1), vars.b(m, j, v)]);
            }
        }
    }
    counts.ordering = hard.len() - counts.selection;

    for i in 0..n {
        for m in 0..n_nodes {
            for j in 0..p {
                let x = data.value(i, j);
                let a = vars.a(j, m);
                let (low, high) = (attack.low(j, x), attack.high(j, x));
                let v_left = if cands.is_empty(j) { None } else { cands.left_index(j, low) };
                let v_right = if cands.is_empty(j) { None } else { cands.right_index(j, high) };
                hard.push(match v_left {
                    Some(v) => vec![-a, vars.b(m, j, v), vars.s(i, m, false)],
                    None => vec![-a, vars.s(i, m, false)],
                });
                if degenerate {
                    continue;
                }
                hard.push(match v_right {
                    Some(v) => vec![-a, -vars.b(m, j, v), vars.s(i, m, true)],
                    None => vec![-a, vars.s(i, m, true)],
                });
            }
        }
    }
    counts.reachability = hard.len() - counts.selection - counts.ordering;

    for t in 0..n_leaves(depth) {
        let (left, right) = leaf_ancestors(depth, t);
        for i in 0..n {
            let mut clause: Vec<i32> = left.iter().map(|&m| -vars.s(i, m, false)).collect();
            clause.extend(right.iter().map(|&m| -vars.s(i, m, true)));
            clause.push(if data.label(i) == 0 { -vars.c(t) } else { vars.c(t) });
            clause.push(vars.e(i));
            hard.push(clause);
        }
    }
    counts.error = hard.len() - counts.selection - counts.ordering - counts.reachability;

    let soft = (0..n).map(|i| (1, vec![-vars.e(i)])).collect();
    let wcnf = WcnfInstance {
        n_vars: vars.n_vars(),
        hard,
        soft,
        top: n as u64 + 1,
    };
    Ok(Encoding { vars, wcnf, counts })
}

/// A tree recovered from a model, with its checked error count.
#[derive(Clone, Debug, PartialEq)]
pub struct Decoded {
    pub tree: Tree,
    /// Adversarial errors of `tree`, re-evaluated on the data.
    pub errors: usize,
    /// Number of error variables set in the model.
    pub cost: usize,
}

/// Split chosen at one node: the first true `a` among splittable features
/// and the gap given by the first true `b` of that feature's chain.
pub(crate) fn decode_split(
    vars: &VarMap,
    node: usize,
    feature_on: impl Fn(usize) -> bool,
    b_on: impl Fn(usize) -> bool,
) -> Option<Split> {
    let cands = vars.candidates();
    if cands.splittable_features().next().is_none() {
        return feature_on(0).then_some(Split {
            feature: 0,
            threshold: ALL_LEFT,
        });
    }
    let j = cands.splittable_features().find(|&j| feature_on(j))?;
    let gap = (0..cands.len(j)).find(|&v| b_on(vars.b(node, j, v) as usize)).unwrap_or(cands.len(j));
    Some(Split {
        feature: j,
        threshold: cands.gap_threshold(j, gap),
    })
}

/// Turns a model into a tree and checks it is no worse than claimed.
pub fn decode_tree(encoding: &Encoding, assignment: &Assignment, data: &Dataset, attack: &AttackModel) -> Result<Decoded> {
    let vars = &encoding.vars;
    if assignment.n_vars() < vars.n_vars() {
        return Err(Error::IncompleteAssignment(format!(
            "model covers {} variables, encoding has {}",
            assignment.n_vars(),
            vars.n_vars()
        )));
    }
    if let Some(index) = encoding.wcnf.first_violated(assignment) {
        return Err(Error::HardClauseViolated {
            index,
            clause: encoding.wcnf.hard[index].clone(),
        });
    }
    let depth = vars.depth();
    let nodes = (0..n_decision_nodes(depth))
        .map(|m| {
            decode_split(
                vars,
                m,
                |j| assignment.value(vars.a(j, m)),
                |id| assignment.value(id as i32),
            )
            .expect("selection clause guarantees a splittable feature")
        })
        .collect();
    let leaves = (0..n_leaves(depth)).map(|t| assignment.value(vars.c(t)) as u8).collect();
    let tree = Tree::new(depth, nodes, leaves)?;
    let cost = (0..vars.n_samples()).filter(|&i| assignment.value(vars.e(i))).count();
    let errors = adversarial_errors(&tree, data, attack);
    if errors > cost {
        return Err(Error::VerificationMismatch { verified: errors, claimed: cost });
    }
    Ok(Decoded { tree, errors, cost })
}

/// How a node is written into the chain variables.
pub(crate) struct NodeCode {
    /// Constant feature to select as well, when its split lets every box
    /// straddle the threshold.
    pub extra_feature: Option<usize>,
    pub feature: usize,
    pub gap: usize,
}

/// Feature and chain gap that reproduce a node's routing on the data.
///
/// A split on a constant feature becomes the first splittable feature with
/// every chain variable false (all left) or true (all right). If boxes
/// straddle it, the constant feature is selected too, forcing both sides.
pub(crate) fn node_code(cands: &ThresholdCandidates, split: Split, data: &Dataset, attack: &AttackModel) -> NodeCode {
    let j = split.feature;
    if !cands.is_empty(j) {
        return NodeCode {
            extra_feature: None,
            feature: j,
            gap: cands.gap_of(j, split.threshold),
        };
    }
    let Some(fallback) = cands.splittable_features().next() else {
        // all-left is the only split a featureless encoding knows
        return NodeCode {
            extra_feature: None,
            feature: 0,
            gap: 0,
        };
    };
    let x = data.value(0, j);
    let (low, high) = (attack.low(j, x), attack.high(j, x));
    let (extra_feature, gap) = if high <= split.threshold {
        (None, cands.len(fallback))
    } else if low > split.threshold {
        (None, 0)
    } else {
        (Some(j), cands.len(fallback))
    };
    NodeCode {
        extra_feature,
        feature: fallback,
        gap,
    }
}

/// Hard-feasible model that encodes `tree`, with `s` and `e` at their
/// smallest consistent values. With endpoint candidates its cost equals
/// the tree's adversarial error count.
pub fn assignment_for_tree(encoding: &Encoding, tree: &Tree, data: &Dataset, attack: &AttackModel) -> Result<Assignment> {
    let vars = &encoding.vars;
    if tree.depth() != vars.depth() {
        return Err(Error::InvalidTree(format!(
            "tree depth {} differs from encoding depth {}",
            tree.depth(),
            vars.depth()
        )));
    }
    tree.check_features(vars.n_features())?;
    let tree = tree.normalize_redundant_splits();
    let cands = vars.candidates();
    let mut asg = Assignment::all_false(vars.n_vars());
    let n = data.n_samples();
    let n_nodes = n_decision_nodes(tree.depth());
    let mut left_reach = vec![vec![false; n_nodes]; n];
    let mut right_reach = vec![vec![false; n_nodes]; n];
    for m in 0..n_nodes {
        let code = node_code(cands, tree.node(m), data, attack);
        let (j, gap) = (code.feature, code.gap);
        asg.set(vars.a(j, m), true);
        if let Some(extra) = code.extra_feature {
            asg.set(vars.a(extra, m), true);
        }
        for v in gap..cands.len(j) {
            asg.set(vars.b(m, j, v), true);
        }
        for i in 0..n {
            let x = data.value(i, j);
            let (low, high) = (attack.low(j, x), attack.high(j, x));
            let straddle = code.extra_feature.is_some();
            let left = straddle || cands.left_index(j, low).is_none_or(|v| v < gap);
            let right = straddle || cands.right_index(j, high).is_none_or(|v| v >= gap);
            left_reach[i][m] = left;
            right_reach[i][m] = right;
            asg.set(vars.s(i, m, false), left);
            asg.set(vars.s(i, m, true), right);
        }
    }
    for t in 0..tree.n_leaves() {
        asg.set(vars.c(t), tree.leaf_class(t) == 1);
    }
    for i in 0..n {
        let wrong = (0..tree.n_leaves()).any(|t| {
            let (l, r) = leaf_ancestors(tree.depth(), t);
            tree.leaf_class(t) != data.label(i)
                && l.iter().all(|&m| left_reach[i][m])
                && r.iter().all(|&m| right_reach[i][m])
        });
        asg.set(vars.e(i), wrong);
    }
    Ok(asg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_samples() -> (Dataset, AttackModel) {
        let data = Dataset::new(&[vec![0.3], vec![0.4], vec![0.55]], &[0, 1, 1], 1).unwrap();
        (data, AttackModel::epsilon(1, 0.1).unwrap())
    }

    #[test]
    fn three_sample_counts() {
        let (data, attack) = three_samples();
        let enc = build_encoding(&data, &attack, 1).unwrap();
        assert_eq!(enc.vars.n_vars(), 18);
        assert_eq!(enc.wcnf.hard.len(), 18);
        assert_eq!(enc.wcnf.soft.len(), 3);
        assert_eq!(
            enc.counts,
            ClauseCounts {
                selection: 1,
                ordering: 5,
                reachability: 6,
                error: 6
            }
        );
        assert_eq!(enc.wcnf.top, 4);
    }

    #[test]
    fn roles_round_trip() {
        let data = Dataset::new(
            &[vec![0.1, 0.5, 0.2], vec![0.9, 0.5, 0.4], vec![0.3, 0.5, 0.8]],
            &[0, 1, 0],
            3,
        )
        .unwrap();
        let enc = build_encoding(&data, &AttackModel::epsilon(3, 0.05).unwrap(), 2).unwrap();
        let v = &enc.vars;
        let mut seen = 0;
        for id in 1..=v.n_vars() as i32 {
            let back = match v.role(id).unwrap() {
                VarRole::Feature { node, feature } => v.a(feature, node),
                VarRole::Threshold { node, feature, candidate, .. } => v.b(node, feature, candidate),
                VarRole::Reach { sample, node, right } => v.s(sample, node, right),
                VarRole::Class { leaf } => v.c(leaf),
                VarRole::Error { sample } => v.e(sample),
            };
            assert_eq!(back, id);
            seen += 1;
        }
        let chain = v.candidates().total();
        assert_eq!(seen, 3 * 3 + 3 * chain + 2 * 3 * 3 + 4 + 3);
        assert!(v.role(0).is_none());
        assert!(v.role(v.n_vars() as i32 + 1).is_none());
    }

    #[test]
    fn wcnf_format() {
        let inst = WcnfInstance {
            n_vars: 3,
            hard: vec![vec![1, -2]],
            soft: vec![(1, vec![-3])],
            top: 2,
        };
        assert_eq!(inst.to_string(WcnfFormat::Classic), "p wcnf 3 2 2\n2 1 -2 0\n1 -3 0\n");
        assert_eq!(inst.to_string(WcnfFormat::Modern), "h 1 -2 0\n1 -3 0\n");
        let empty = WcnfInstance {
            n_vars: 1,
            hard: vec![vec![1]],
            soft: vec![],
            top: 1,
        };
        assert_eq!(empty.to_string(WcnfFormat::Classic), "p wcnf 1 1 1\n1 1 0\n");
    }

    #[test]
    fn stated_assignment_decodes() {
        let (data, attack) = three_samples();
        let enc = build_encoding(&data, &attack, 1).unwrap();
        let tree = Tree::new(1, vec![Split { feature: 0, threshold: 0.425 }], vec![0, 1]).unwrap();
        let asg = assignment_for_tree(&enc, &tree, &data, &attack).unwrap();
        let v = &enc.vars;
        assert!(asg.value(v.a(0, 0)));
        let chain: Vec<bool> = (0..6).map(|k| asg.value(v.b(0, 0, k))).collect();
        assert_eq!(chain, [false, false, false, true, true, true]);
        let e: Vec<bool> = (0..3).map(|i| asg.value(v.e(i))).collect();
        assert_eq!(e, [false, true, false]);
        let d = decode_tree(&enc, &asg, &data, &attack).unwrap();
        assert!((d.tree.node(0).threshold - 0.425).abs() < 1e-12);
        assert_eq!((d.errors, d.cost), (1, 1));
    }

    #[test]
    fn all_true_chain_sends_everything_right() {
        let (data, attack) = three_samples();
        let enc = build_encoding(&data, &attack, 1).unwrap();
        let tree = Tree::new(1, vec![Split { feature: 0, threshold: 0.1 }], vec![0, 1]).unwrap();
        let asg = assignment_for_tree(&enc, &tree, &data, &attack).unwrap();
        let d = decode_tree(&enc, &asg, &data, &attack).unwrap();
        assert!(d.tree.node(0).threshold < 0.2);
        assert!(data.rows().all(|x| d.tree.predict(x) == 1));
    }

    #[test]
    fn constant_data_encodes_all_left() {
        let data = Dataset::new(&[vec![0.5, 0.2], vec![0.5, 0.2], vec![0.5, 0.2]], &[0, 1, 1], 2).unwrap();
        let attack = AttackModel::epsilon(2, 0.1).unwrap();
        let enc = build_encoding(&data, &attack, 2).unwrap();
        let tree = Tree::constant(2, 1, 1);
        let asg = assignment_for_tree(&enc, &tree, &data, &attack).unwrap();
        assert_eq!(enc.wcnf.cost(&asg), 1);
        let d = decode_tree(&enc, &asg, &data, &attack).unwrap();
        assert_eq!((d.errors, d.cost), (1, 1));
        assert!(d.tree.nodes().iter().all(|s| s.threshold == ALL_LEFT));
    }

    #[test]
    fn violated_clause_is_reported() {
        let (data, attack) = three_samples();
        let enc = build_encoding(&data, &attack, 1).unwrap();
        let asg = Assignment::all_false(enc.vars.n_vars());
        match decode_tree(&enc, &asg, &data, &attack) {
            Err(Error::HardClauseViolated { index: 0, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn clearing_a_forced_error_breaks_a_clause() {
        let (data, attack) = three_samples();
        let enc = build_encoding(&data, &attack, 1).unwrap();
        let tree = Tree::new(1, vec![Split { feature: 0, threshold: 0.425 }], vec![0, 1]).unwrap();
        let mut asg = assignment_for_tree(&enc, &tree, &data, &attack).unwrap();
        asg.set(enc.vars.e(1), false);
        assert!(enc.wcnf.first_violated(&asg).is_some());
    }

    #[test]
    fn rejects_depth_zero() {
        let (data, attack) = three_samples();
        assert!(build_encoding(&data, &attack, 0).is_err());
    }

    #[test]
    fn literal_parsing() {
        let a = Assignment::from_literals(3, &[-1, 2, 3, 7]).unwrap();
        assert_eq!(a.bits(), &[false, true, true]);
        assert!(Assignment::from_literals(3, &[-1, 2]).is_err());
    }
}
