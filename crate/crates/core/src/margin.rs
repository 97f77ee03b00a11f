//! Margin post-processing.
//!
//! Solvers return thresholds somewhere inside a gap between candidate
//! endpoints. Moving each threshold to the middle of the widest interval
//! that keeps every comparison with the live samples' box edges unchanged
//! leaves all reachable-leaf sets intact while maximizing the distance to
//! the nearest box.

use crate::adversary::{child_reach, PerturbationBox};
use crate::attack::AttackModel;
use crate::data::Dataset;
use crate::tree::{left_child, right_child, Tree};

/// Recenters every threshold between its nearest constraining endpoints.
///
/// The tree is first normalized (see [`Tree::normalize_redundant_splits`]).
/// Nodes that no training box reaches and sentinel splits are left alone.
pub fn maximize_margin(tree: &Tree, data: &Dataset, attack: &AttackModel) -> Tree {
    let mut out = tree.normalize_redundant_splits();
    let boxes: Vec<PerturbationBox> = data.rows().map(|x| PerturbationBox::around(x, attack)).collect();
    for k in 0..out.n_decision_nodes() {
        let split = out.node(k);
        let j = split.feature;
        let (lower, upper) = out.region(k, j);
        let theta = split.threshold;
        if !(lower < theta && theta < upper) || theta < 0.0 {
            continue;
        }
        let live: Vec<&PerturbationBox> = boxes.iter().filter(|b| reaches(&out, k, b)).collect();
        if live.is_empty() {
            continue;
        }
        let mut below: Option<f64> = None;
        let mut above: Option<f64> = None;
        let mut consider = |v: f64| {
            if v <= theta {
                below = Some(below.map_or(v, |b| b.max(v)));
            } else {
                above = Some(above.map_or(v, |a| a.min(v)));
            }
        };
        for b in &live {
            consider(b.low[j]);
            consider(b.high[j]);
        }
        for d in descendants(k, out.n_decision_nodes()) {
            let s = out.node(d);
            if s.feature == j {
                consider(s.threshold);
            }
        }
        let lo = below.unwrap_or(0.0).max(lower);
        let hi = above.unwrap_or(1.0).min(upper);
        let mid = lo + (hi - lo) / 2.0;
        if lo <= mid && mid < hi {
            out.set_threshold(k, mid);
        }
    }
    out
}

/// Whether a box can reach decision node `k`.
fn reaches(tree: &Tree, k: usize, b: &PerturbationBox) -> bool {
    let p = b.low.len();
    let mut lower = vec![f64::NEG_INFINITY; p];
    let mut upper = vec![f64::INFINITY; p];
    let mut node = 0;
    for (a, branch) in crate::tree::node_ancestors(k) {
        let s = tree.node(a);
        let j = s.feature;
        let (left, right) = child_reach(lower[j], upper[j], b.low[j], b.high[j], s.threshold);
        match branch {
            crate::tree::Branch::Left if left => {
                upper[j] = upper[j].min(s.threshold);
                node = left_child(a);
            }
            crate::tree::Branch::Right if right => {
                lower[j] = lower[j].max(s.threshold);
                node = right_child(a);
            }
            _ => return false,
        }
    }
    node == k
}

fn descendants(k: usize, n_nodes: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut stack = vec![left_child(k), right_child(k)];
    while let Some(d) = stack.pop() {
        if d < n_nodes {
            out.push(d);
            stack.push(left_child(d));
            stack.push(right_child(d));
        }
    }
    out
}
