//! Exact worst-case evaluation of a tree under a box attack.
//!
//! Under 0-1 loss a sample is robustly correct iff every leaf whose region
//! intersects its perturbation box predicts its label. The reachable leaves
//! are found by descending the tree while narrowing, per feature, the
//! interval of values that still lead to the current node.

use crate::attack::AttackModel;
use crate::data::Dataset;
use crate::error::Result;
use crate::tree::{left_child, right_child, Tree};

/// Per-feature interval `[low, high]` an attacker can move a sample within,
/// clipped to `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationBox {
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

impl PerturbationBox {
    pub fn around(x: &[f64], attack: &AttackModel) -> Self {
        let low = x.iter().enumerate().map(|(j, &v)| attack.low(j, v)).collect();
        let high = x.iter().enumerate().map(|(j, &v)| attack.high(j, v)).collect();
        PerturbationBox { low, high }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.low.iter().zip(&self.high))
            .all(|(&v, (&lo, &hi))| lo <= v && v <= hi)
    }

    pub fn intersects(&self, other: &PerturbationBox) -> bool {
        (0..self.low.len()).all(|j| self.low[j].max(other.low[j]) <= self.high[j].min(other.high[j]))
    }
}

/// Which children of a node a box can reach, given the node's region
/// `(lower, upper]` on the split feature and the box's `[low, high]`.
/// The box must already reach the node.
#[inline]
pub(crate) fn child_reach(lower: f64, upper: f64, low: f64, high: f64, threshold: f64) -> (bool, bool) {
    let left_top = upper.min(threshold);
    let right_bottom = lower.max(threshold);
    let left = lower < left_top && low <= left_top;
    let right = right_bottom < upper && high > right_bottom;
    (left, right)
}

struct Walker<'a> {
    tree: &'a Tree,
    low: &'a [f64],
    high: &'a [f64],
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Walker<'_> {
    fn visit(&mut self, k: usize, found: &mut dyn FnMut(usize, &[f64], &[f64]) -> bool) -> bool {
        let n_nodes = self.tree.n_decision_nodes();
        if k >= n_nodes {
            return found(k - n_nodes, &self.lower, &self.upper);
        }
        let s = self.tree.node(k);
        let j = s.feature;
        let (lo, up) = (self.lower[j], self.upper[j]);
        let (left, right) = child_reach(lo, up, self.low[j], self.high[j], s.threshold);
        if left {
            self.upper[j] = up.min(s.threshold);
            let stop = self.visit(left_child(k), found);
            self.upper[j] = up;
            if stop {
                return true;
            }
        }
        if right {
            self.lower[j] = lo.max(s.threshold);
            let stop = self.visit(right_child(k), found);
            self.lower[j] = lo;
            if stop {
                return true;
            }
        }
        false
    }
}

/// Calls `found(leaf, lower, upper)` for every reachable leaf in index
/// order, with the leaf's region `(lower_j, upper_j]` per feature, until it
/// returns `true`.
fn walk(tree: &Tree, low: &[f64], high: &[f64], found: &mut dyn FnMut(usize, &[f64], &[f64]) -> bool) {
    let p = low.len();
    let mut walker = Walker {
        tree,
        low,
        high,
        lower: vec![f64::NEG_INFINITY; p],
        upper: vec![f64::INFINITY; p],
    };
    walker.visit(0, found);
}

/// Leaves reachable from a box, as a bit mask over leaf indices.
pub fn reachable_mask(tree: &Tree, low: &[f64], high: &[f64]) -> u64 {
    let mut mask = 0u64;
    walk(tree, low, high, &mut |t, _, _| {
        mask |= 1 << t;
        false
    });
    mask
}

/// Sorted indices of the leaves reachable by moving `sample` within its box.
pub fn reachable_leaves(tree: &Tree, sample: &[f64], attack: &AttackModel) -> Vec<usize> {
    let b = PerturbationBox::around(sample, attack);
    let mask = reachable_mask(tree, &b.low, &b.high);
    (0..tree.n_leaves()).filter(|t| mask >> t & 1 == 1).collect()
}

/// Whether every reachable leaf predicts `label`.
pub fn is_robust(tree: &Tree, sample: &[f64], label: u8, attack: &AttackModel) -> bool {
    let b = PerturbationBox::around(sample, attack);
    let mut wrong = false;
    walk(tree, &b.low, &b.high, &mut |t, _, _| {
        wrong = tree.leaf_class(t) != label;
        wrong
    });
    !wrong
}

/// Per-sample flags: `true` where the sample can be pushed into a wrong leaf.
pub fn sample_errors(tree: &Tree, data: &Dataset, attack: &AttackModel) -> Vec<bool> {
    (0..data.n_samples())
        .map(|i| !is_robust(tree, data.row(i), data.label(i), attack))
        .collect()
}

/// Number of samples the attacker can get misclassified.
pub fn adversarial_errors(tree: &Tree, data: &Dataset, attack: &AttackModel) -> usize {
    sample_errors(tree, data, attack).into_iter().filter(|&e| e).count()
}

/// Fraction of samples whose whole perturbation box is classified correctly.
/// An empty dataset scores 1.
pub fn adversarial_accuracy(tree: &Tree, data: &Dataset, attack: &AttackModel) -> f64 {
    let n = data.n_samples();
    if n == 0 {
        return 1.0;
    }
    (n - adversarial_errors(tree, data, attack)) as f64 / n as f64
}

/// Plain accuracy on unperturbed samples.
pub fn accuracy(tree: &Tree, data: &Dataset) -> f64 {
    let n = data.n_samples();
    if n == 0 {
        return 1.0;
    }
    let correct = (0..n).filter(|&i| tree.predict(data.row(i)) == data.label(i)).count();
    correct as f64 / n as f64
}

/// Checks tree and attack dimensions against the data.
pub fn check_dimensions(tree: &Tree, data: &Dataset, attack: &AttackModel) -> Result<()> {
    tree.check_features(data.n_features())?;
    attack.check_features(data.n_features())
}

/// A concrete point in the sample's box that the tree misclassifies, if any.
///
/// The point lies in the region of the first wrong reachable leaf and is
/// the closest such point to `sample` feature by feature.
pub fn attack_witness(tree: &Tree, sample: &[f64], label: u8, attack: &AttackModel) -> Option<Vec<f64>> {
    let b = PerturbationBox::around(sample, attack);
    let mut witness = None;
    walk(tree, &b.low, &b.high, &mut |t, lower, upper| {
        if tree.leaf_class(t) == label {
            return false;
        }
        let point = (0..sample.len())
            .map(|j| {
                let lo = if b.low[j] > lower[j] { b.low[j] } else { lower[j].next_up() };
                let hi = b.high[j].min(upper[j]);
                sample[j].clamp(lo, hi)
            })
            .collect();
        witness = Some(point);
        true
    });
    witness
}
