//! Exact search over trees with candidate-gap thresholds.
//!
//! Decision nodes are fixed in heap order. At each node the search tries
//! every (feature, gap) choice that splits the node's live samples in a
//! distinct way, and once all splits are fixed the leaf labels are chosen
//! optimally for the resulting reachable-leaf sets. Partial trees are
//! pruned with the best label cost over the leaves already fixed, and
//! the search stops early when the incumbent meets the matching bound.

use std::collections::{HashMap, HashSet};
use std::time::{Duration, Instant};

use crate::adversary::{adversarial_errors, child_reach};
use crate::attack::AttackModel;
use crate::bound::{max_matching, min_errors, ConflictGraph};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::thresholds::{candidate_thresholds, ThresholdCandidates};
use crate::tree::{left_child, n_decision_nodes, n_leaves, right_child, Split, Tree, ALL_LEFT, MAX_DEPTH};

/// Limits for [`solve_exact`]. `None` means unlimited.
#[derive(Clone, Debug, Default)]
pub struct SearchBudget {
    pub time_limit: Option<Duration>,
    pub node_limit: Option<u64>,
    /// Starting incumbent, e.g. a greedy tree of the same depth.
    pub incumbent: Option<Tree>,
    /// Also prune with a matching over box conflicts and shared fixed leaves.
    pub matching_pruning: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    /// The search space was exhausted or the bound was met.
    Optimal,
    /// Stopped at the node limit.
    Feasible,
    /// Stopped at the time limit.
    TimeoutWithIncumbent,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Feasible => "feasible",
            SolveStatus::TimeoutWithIncumbent => "timeout-with-incumbent",
        }
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    pub tree: Tree,
    /// Adversarial training errors of `tree`.
    pub objective: usize,
    pub status: SolveStatus,
    pub nodes_expanded: u64,
    pub elapsed: Duration,
}

/// Fixed-width set of sample indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct SampleSet(Vec<u64>);

impl SampleSet {
    fn empty(n: usize) -> Self {
        SampleSet(vec![0; n.div_ceil(64)])
    }

    fn full(n: usize) -> Self {
        let mut s = Self::empty(n);
        for i in 0..n {
            s.insert(i);
        }
        s
    }

    fn insert(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }

    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(k, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(k * 64 + b)
            })
        })
    }
}

/// Samples sharing a reachable-leaf mask and label.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Group {
    mask: u64,
    label: u8,
    count: usize,
}

fn group_masks(masks: &[u64], labels: &[u8]) -> Vec<Group> {
    let mut counts: HashMap<(u64, u8), usize> = HashMap::new();
    for (&mask, &label) in masks.iter().zip(labels) {
        if mask != 0 {
            *counts.entry((mask, label)).or_default() += 1;
        }
    }
    let mut groups: Vec<Group> = counts
        .into_iter()
        .map(|((mask, label), count)| Group { mask, label, count })
        .collect();
    groups.sort_by_key(|g| (g.mask, g.label));
    groups
}

/// Leaf labels minimizing the number of samples with a wrong reachable
/// leaf. Leaves no group reaches get `default`.
fn optimal_labels(groups: &[Group], n_leaves: usize, default: u8) -> (usize, Vec<u8>) {
    let mut single = vec![[0usize; 2]; n_leaves];
    for g in groups.iter().filter(|g| g.mask.count_ones() == 1) {
        single[g.mask.trailing_zeros() as usize][g.label as usize] += g.count;
    }
    let majority = |t: usize| -> u8 {
        let [c0, c1] = single[t];
        match c0.cmp(&c1) {
            std::cmp::Ordering::Greater => 0,
            std::cmp::Ordering::Less => 1,
            std::cmp::Ordering::Equal => default,
        }
    };
    let mut labels: Vec<u8> = (0..n_leaves).map(majority).collect();
    let cost_of = |labels: &[u8]| -> usize {
        groups
            .iter()
            .filter(|g| (0..n_leaves).any(|t| g.mask >> t & 1 == 1 && labels[t] != g.label))
            .map(|g| g.count)
            .sum()
    };
    let mut best = cost_of(&labels);
    if groups.iter().all(|g| g.mask.count_ones() == 1) || best == 0 {
        return (best, labels);
    }

    struct Search<'a> {
        groups: &'a [Group],
        single: &'a [[usize; 2]],
        n_leaves: usize,
        reached: u64,
        default: u8,
        current: Vec<u8>,
        best: usize,
        best_labels: Vec<u8>,
    }
    impl Search<'_> {
        fn run(&mut self, t: usize, assigned: u64) {
            // groups already contradicted by an assigned leaf
            let dead: usize = self
                .groups
                .iter()
                .filter(|g| {
                    let fixed = g.mask & assigned;
                    (0..self.n_leaves).any(|l| fixed >> l & 1 == 1 && self.current[l] != g.label)
                })
                .map(|g| g.count)
                .sum();
            let rest: usize = (t..self.n_leaves).map(|l| self.single[l][0].min(self.single[l][1])).sum();
            if dead + rest >= self.best {
                return;
            }
            if t == self.n_leaves {
                self.best = dead;
                self.best_labels = self.current.clone();
                return;
            }
            if self.reached >> t & 1 == 0 {
                self.current[t] = self.default;
                self.run(t + 1, assigned);
                return;
            }
            let [c0, c1] = self.single[t];
            let first: u8 = if c1 > c0 { 1 } else { 0 };
            for label in [first, 1 - first] {
                self.current[t] = label;
                self.run(t + 1, assigned | 1 << t);
            }
        }
    }
    let reached = groups.iter().fold(0u64, |m, g| m | g.mask);
    let mut search = Search {
        groups,
        single: &single,
        n_leaves,
        reached,
        default,
        current: vec![default; n_leaves],
        best,
        best_labels: labels.clone(),
    };
    search.run(0, 0);
    if search.best < best {
        best = search.best;
        labels = search.best_labels;
    }
    for (t, l) in labels.iter_mut().enumerate() {
        if reached >> t & 1 == 0 {
            *l = default;
        }
    }
    (best, labels)
}

struct Problem<'a> {
    data: &'a Dataset,
    depth: usize,
    n_nodes: usize,
    cands: ThresholdCandidates,
    splittable: Vec<usize>,
    low: Vec<Vec<f64>>,
    high: Vec<Vec<f64>>,
    default_label: u8,
    lower_bound: usize,
    conflicts: Vec<(usize, usize)>,
    matching_pruning: bool,
}

struct State {
    splits: Vec<Split>,
    /// Live samples per heap position, decision nodes and leaves.
    live: Vec<SampleSet>,
    best: usize,
    best_tree: Tree,
    nodes_expanded: u64,
    stop: Option<SolveStatus>,
    start: Instant,
    time_limit: Option<Duration>,
    node_limit: Option<u64>,
}

struct Choice {
    split: Split,
    left: SampleSet,
    right: SampleSet,
    score: usize,
}

impl Problem<'_> {
    fn region(&self, splits: &[Split], k: usize, j: usize) -> (f64, f64) {
        let mut lower = f64::NEG_INFINITY;
        let mut upper = f64::INFINITY;
        for (a, branch) in crate::tree::node_ancestors(k) {
            let s = splits[a];
            if s.feature == j {
                match branch {
                    crate::tree::Branch::Left => upper = upper.min(s.threshold),
                    crate::tree::Branch::Right => lower = lower.max(s.threshold),
                }
            }
        }
        (lower, upper)
    }

    fn impurity(&self, set: &SampleSet) -> usize {
        let mut counts = [0usize; 2];
        for i in set.iter() {
            counts[self.data.label(i) as usize] += 1;
        }
        counts[0].min(counts[1])
    }

    fn choices(&self, state: &State, k: usize) -> Vec<Choice> {
        let live = &state.live[k];
        let n = self.data.n_samples();
        let mut seen: HashSet<(SampleSet, SampleSet)> = HashSet::new();
        let mut out = Vec::new();
        for &j in &self.splittable {
            let (lower, upper) = self.region(&state.splits, k, j);
            for g in 0..self.cands.n_gaps(j) {
                let threshold = self.cands.gap_threshold(j, g);
                let mut left = SampleSet::empty(n);
                let mut right = SampleSet::empty(n);
                for i in live.iter() {
                    let (l, r) = child_reach(lower, upper, self.low[i][j], self.high[i][j], threshold);
                    if l {
                        left.insert(i);
                    }
                    if r {
                        right.insert(i);
                    }
                }
                let key = (left, right);
                if seen.contains(&key) {
                    continue;
                }
                let score = self.impurity(&key.0) + self.impurity(&key.1);
                out.push(Choice {
                    split: Split { feature: j, threshold },
                    left: key.0.clone(),
                    right: key.1.clone(),
                    score,
                });
                seen.insert(key);
            }
        }
        out.sort_by_key(|c| c.score);
        out
    }

    fn masks(&self, state: &State, decided_leaves: usize) -> Vec<u64> {
        let n = self.data.n_samples();
        let mut masks = vec![0u64; n];
        for t in 0..decided_leaves {
            for i in state.live[self.n_nodes + t].iter() {
                masks[i] |= 1 << t;
            }
        }
        masks
    }

    /// Lower bound on the final cost given the leaves fixed so far.
    fn partial_bound(&self, state: &State, decided_leaves: usize) -> usize {
        let masks = self.masks(state, decided_leaves);
        let groups = group_masks(&masks, self.data.labels());
        let (cost, _) = optimal_labels(&groups, decided_leaves, self.default_label);
        if !self.matching_pruning {
            return cost;
        }
        let (zeros, ones): (Vec<usize>, Vec<usize>) =
            (0..self.data.n_samples()).partition(|&i| self.data.label(i) == 0);
        let mut pos = vec![0; self.data.n_samples()];
        for (v, &i) in zeros.iter().enumerate() {
            pos[i] = v;
        }
        for (v, &i) in ones.iter().enumerate() {
            pos[i] = v;
        }
        let mut edges: Vec<(usize, usize)> = self.conflicts.iter().map(|&(a, b)| (pos[a], pos[b])).collect();
        for &a in &zeros {
            for &b in &ones {
                if masks[a] & masks[b] != 0 {
                    edges.push((pos[a], pos[b]));
                }
            }
        }
        let graph = ConflictGraph::from_edges(zeros.len(), ones.len(), &edges);
        cost.max(max_matching(&graph).size())
    }

    fn out_of_budget(&self, state: &mut State) -> bool {
        if state.stop.is_some() {
            return true;
        }
        if state.node_limit.is_some_and(|l| state.nodes_expanded >= l) {
            state.stop = Some(SolveStatus::Feasible);
        } else if state.time_limit.is_some_and(|l| state.start.elapsed() >= l) {
            state.stop = Some(SolveStatus::TimeoutWithIncumbent);
        }
        state.stop.is_some()
    }

    fn finish(&self, state: &mut State) {
        let n_leaves = n_leaves(self.depth);
        let masks = self.masks(state, n_leaves);
        let groups = group_masks(&masks, self.data.labels());
        let (cost, labels) = optimal_labels(&groups, n_leaves, self.default_label);
        if cost < state.best {
            state.best = cost;
            state.best_tree = Tree::new(self.depth, state.splits.clone(), labels).expect("valid shape");
            if cost <= self.lower_bound {
                state.stop = Some(SolveStatus::Optimal);
            }
        }
    }

    fn search(&self, state: &mut State, k: usize) {
        if k == self.n_nodes {
            self.finish(state);
            return;
        }
        if self.out_of_budget(state) {
            return;
        }
        state.nodes_expanded += 1;
        let n = self.data.n_samples();
        let choices = if state.live[k].is_empty() {
            vec![Choice {
                split: Split {
                    feature: self.splittable[0],
                    threshold: ALL_LEFT,
                },
                left: SampleSet::empty(n),
                right: SampleSet::empty(n),
                score: 0,
            }]
        } else {
            self.choices(state, k)
        };
        let last_level = left_child(k) >= self.n_nodes;
        for choice in choices {
            state.splits[k] = choice.split;
            state.live[left_child(k)] = choice.left;
            state.live[right_child(k)] = choice.right;
            if last_level {
                let decided = right_child(k) + 1 - self.n_nodes;
                if self.partial_bound(state, decided) >= state.best {
                    continue;
                }
            }
            self.search(state, k + 1);
            if state.stop.is_some() {
                return;
            }
        }
    }
}

/// Finds a tree of depth `depth` with the fewest adversarial errors.
pub fn solve_exact(data: &Dataset, attack: &AttackModel, depth: usize, budget: SearchBudget) -> Result<SolveResult> {
    attack.check_features(data.n_features())?;
    if depth > MAX_DEPTH {
        return Err(Error::InvalidArgument(format!("depth {depth} exceeds {MAX_DEPTH}")));
    }
    let start = Instant::now();
    let n = data.n_samples();
    let p = data.n_features();
    let cands = candidate_thresholds(data, attack);
    let splittable: Vec<usize> = cands.splittable_features().collect();
    let default_label = data.majority_label();
    let constant = Tree::constant(depth, default_label, splittable.first().copied().unwrap_or(0));

    let mut best_tree = constant;
    let mut best = adversarial_errors(&best_tree, data, attack);
    if let Some(warm) = &budget.incumbent {
        if warm.depth() != depth {
            return Err(Error::InvalidTree(format!(
                "incumbent depth {} differs from {depth}",
                warm.depth()
            )));
        }
        warm.check_features(p)?;
        let errors = adversarial_errors(warm, data, attack);
        if errors < best {
            best = errors;
            best_tree = warm.clone();
        }
    }
    let lower_bound = if n == 0 { 0 } else { min_errors(data, attack) };

    let mut state = State {
        splits: best_tree.nodes().to_vec(),
        live: vec![SampleSet::empty(n); n_decision_nodes(depth) + n_leaves(depth)],
        best,
        best_tree,
        nodes_expanded: 0,
        stop: None,
        start,
        time_limit: budget.time_limit,
        node_limit: budget.node_limit,
    };
    if best <= lower_bound {
        state.stop = Some(SolveStatus::Optimal);
    }

    if depth > 0 && !splittable.is_empty() && state.stop.is_none() {
        let low: Vec<Vec<f64>> = (0..n).map(|i| (0..p).map(|j| attack.low(j, data.value(i, j))).collect()).collect();
        let high: Vec<Vec<f64>> =
            (0..n).map(|i| (0..p).map(|j| attack.high(j, data.value(i, j))).collect()).collect();
        let conflicts = if budget.matching_pruning {
            let graph = crate::bound::build_conflict_graph(data, attack);
            graph.edges.iter().map(|&(u, v)| (graph.left[u], graph.right[v])).collect()
        } else {
            Vec::new()
        };
        let problem = Problem {
            data,
            depth,
            n_nodes: n_decision_nodes(depth),
            cands,
            splittable,
            low,
            high,
            default_label,
            lower_bound,
            conflicts,
            matching_pruning: budget.matching_pruning,
        };
        state.live[0] = SampleSet::full(n);
        problem.search(&mut state, 0);
    }

    let status = state.stop.unwrap_or(SolveStatus::Optimal);
    let objective = adversarial_errors(&state.best_tree, data, attack);
    debug_assert_eq!(objective, state.best);
    Ok(SolveResult {
        tree: state.best_tree,
        objective,
        status,
        nodes_expanded: state.nodes_expanded,
        elapsed: start.elapsed(),
    })
}

/// Default cap on the number of (splits, labels) combinations
/// [`brute_force_reference`] will enumerate.
pub const BRUTE_FORCE_CAP: f64 = 1e7;

/// Number of trees [`brute_force_reference`] would enumerate.
pub fn brute_force_size(data: &Dataset, attack: &AttackModel, depth: usize) -> f64 {
    let cands = candidate_thresholds(data, attack);
    let per_node: usize = cands.splittable_features().map(|j| cands.n_gaps(j)).sum();
    let split_trees = if per_node == 0 { 1.0 } else { (per_node as f64).powi(n_decision_nodes(depth) as i32) };
    split_trees * 2f64.powi(n_leaves(depth) as i32)
}

/// Minimum adversarial error count by enumerating every tree over the
/// candidate gaps and every labelling, without pruning.
pub fn brute_force_reference(data: &Dataset, attack: &AttackModel, depth: usize) -> Result<usize> {
    brute_force_reference_capped(data, attack, depth, BRUTE_FORCE_CAP)
}

pub fn brute_force_reference_capped(data: &Dataset, attack: &AttackModel, depth: usize, cap: f64) -> Result<usize> {
    attack.check_features(data.n_features())?;
    if depth > MAX_DEPTH {
        return Err(Error::InvalidArgument(format!("depth {depth} exceeds {MAX_DEPTH}")));
    }
    let size = brute_force_size(data, attack, depth);
    if size > cap {
        return Err(Error::CapExceeded { size, cap });
    }
    let cands = candidate_thresholds(data, attack);
    let options: Vec<Split> = cands
        .splittable_features()
        .flat_map(|j| (0..cands.n_gaps(j)).map(move |g| (j, g)))
        .map(|(j, g)| Split {
            feature: j,
            threshold: cands.gap_threshold(j, g),
        })
        .collect();
    let n_nodes = n_decision_nodes(depth);
    let n_leaves = n_leaves(depth);
    let boxes: Vec<_> = data.rows().map(|x| crate::adversary::PerturbationBox::around(x, attack)).collect();
    let labels = data.labels();
    let best_labelling = |masks: &[u64]| -> usize {
        (0..1u64 << n_leaves)
            .map(|class_one| {
                masks
                    .iter()
                    .zip(labels)
                    .filter(|&(&m, &y)| {
                        let wrong = if y == 0 { class_one } else { !class_one };
                        m & wrong != 0
                    })
                    .count()
            })
            .min()
            .unwrap_or(0)
    };
    if options.is_empty() || n_nodes == 0 {
        return Ok(best_labelling(&vec![1; data.n_samples()]));
    }
    let mut best = usize::MAX;
    let mut index = vec![0usize; n_nodes];
    loop {
        let splits: Vec<Split> = index.iter().map(|&k| options[k]).collect();
        let tree = Tree::new(depth, splits, vec![0; n_leaves])?;
        let masks: Vec<u64> = boxes
            .iter()
            .map(|b| crate::adversary::reachable_mask(&tree, &b.low, &b.high))
            .collect();
        best = best.min(best_labelling(&masks));
        // odometer over node choices
        let mut k = 0;
        while k < n_nodes {
            index[k] += 1;
            if index[k] < options.len() {
                break;
            }
            index[k] = 0;
            k += 1;
        }
        if k == n_nodes {
            break;
        }
    }
    Ok(best)
}
