//! Complete binary decision trees in heap layout.
//!
//! Decision node `k` has children `2k + 1` and `2k + 2`. A tree of depth `d`
//! has `2^d - 1` decision nodes followed by `2^d` leaves; heap position
//! `2^d - 1 + t` is leaf `t`. A sample goes left at a node iff its value on
//! the node's feature is `<=` the threshold.

use std::fmt::Write as _;

use serde_json::Value;

use crate::error::{Error, Result};

/// Largest depth the crate accepts. Leaf sets are tracked as `u64` masks.
pub const MAX_DEPTH: usize = 6;

/// Threshold used for splits that send every sample left.
pub const ALL_LEFT: f64 = 1.0;
/// Threshold used for splits that send every sample right.
pub const ALL_RIGHT: f64 = -0.5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
}

/// Direction taken at a decision node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Branch {
    Left,
    Right,
}

pub fn n_decision_nodes(depth: usize) -> usize {
    (1 << depth) - 1
}

pub fn n_leaves(depth: usize) -> usize {
    1 << depth
}

pub fn left_child(node: usize) -> usize {
    2 * node + 1
}

pub fn right_child(node: usize) -> usize {
    2 * node + 2
}

/// Decision nodes from the root down to `leaf`, with the branch taken at each.
pub fn leaf_path(depth: usize, leaf: usize) -> Vec<(usize, Branch)> {
    let mut path = Vec::with_capacity(depth);
    let mut node = 0;
    for level in (0..depth).rev() {
        let branch = if (leaf >> level) & 1 == 0 { Branch::Left } else { Branch::Right };
        path.push((node, branch));
        node = match branch {
            Branch::Left => left_child(node),
            Branch::Right => right_child(node),
        };
    }
    path
}

/// Ancestors of `leaf` on whose left branch it lies (`A_l`) and on whose
/// right branch it lies (`A_r`).
pub fn leaf_ancestors(depth: usize, leaf: usize) -> (Vec<usize>, Vec<usize>) {
    let mut left = Vec::new();
    let mut right = Vec::new();
    for (node, branch) in leaf_path(depth, leaf) {
        match branch {
            Branch::Left => left.push(node),
            Branch::Right => right.push(node),
        }
    }
    (left, right)
}

/// Ancestors of decision node `node` (root first) with the branch taken.
pub fn node_ancestors(node: usize) -> Vec<(usize, Branch)> {
    let mut path = Vec::new();
    let mut k = node;
    while k > 0 {
        let parent = (k - 1) / 2;
        let branch = if k == left_child(parent) { Branch::Left } else { Branch::Right };
        path.push((parent, branch));
        k = parent;
    }
    path.reverse();
    path
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tree {
    depth: usize,
    nodes: Vec<Split>,
    leaves: Vec<u8>,
}

impl Tree {
    pub fn new(depth: usize, nodes: Vec<Split>, leaves: Vec<u8>) -> Result<Self> {
        if depth > MAX_DEPTH {
            return Err(Error::InvalidTree(format!("depth {depth} exceeds {MAX_DEPTH}")));
        }
        if nodes.len() != n_decision_nodes(depth) {
            return Err(Error::InvalidTree(format!(
                "depth {depth} needs {} decision nodes, got {}",
                n_decision_nodes(depth),
                nodes.len()
            )));
        }
        if leaves.len() != n_leaves(depth) {
            return Err(Error::InvalidTree(format!(
                "depth {depth} needs {} leaves, got {}",
                n_leaves(depth),
                leaves.len()
            )));
        }
        if let Some(s) = nodes.iter().find(|s| !s.threshold.is_finite()) {
            return Err(Error::InvalidTree(format!("threshold {} is not finite", s.threshold)));
        }
        if let Some(c) = leaves.iter().find(|&&c| c > 1) {
            return Err(Error::InvalidTree(format!("leaf class {c} is not 0 or 1")));
        }
        Ok(Tree { depth, nodes, leaves })
    }

    /// A tree predicting `label` everywhere; every split sends samples left.
    pub fn constant(depth: usize, label: u8, feature: usize) -> Self {
        Tree {
            depth,
            nodes: vec![
                Split {
                    feature,
                    threshold: ALL_LEFT
                };
                n_decision_nodes(depth)
            ],
            leaves: vec![label; n_leaves(depth)],
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn nodes(&self) -> &[Split] {
        &self.nodes
    }

    pub fn leaves(&self) -> &[u8] {
        &self.leaves
    }

    pub fn node(&self, k: usize) -> Split {
        self.nodes[k]
    }

    pub fn leaf_class(&self, t: usize) -> u8 {
        self.leaves[t]
    }

    pub fn set_threshold(&mut self, k: usize, threshold: f64) {
        self.nodes[k].threshold = threshold;
    }

    pub fn set_node(&mut self, k: usize, split: Split) {
        self.nodes[k] = split;
    }

    /// Exchanges the subtrees below the two children of node `k`.
    pub fn swap_children(&mut self, k: usize) {
        let n_nodes = self.nodes.len();
        let mut pairs = vec![(left_child(k), right_child(k))];
        while let Some((a, b)) = pairs.pop() {
            if a < n_nodes {
                self.nodes.swap(a, b);
                pairs.push((left_child(a), left_child(b)));
                pairs.push((right_child(a), right_child(b)));
            } else {
                self.leaves.swap(a - n_nodes, b - n_nodes);
            }
        }
    }

    pub fn set_leaf_class(&mut self, t: usize, class: u8) {
        self.leaves[t] = class;
    }

    pub fn n_decision_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_leaves(&self) -> usize {
        self.leaves.len()
    }

    /// Leaf reached by the unperturbed point `x`.
    pub fn leaf_of(&self, x: &[f64]) -> usize {
        let mut k = 0;
        while k < self.nodes.len() {
            let s = self.nodes[k];
            k = if x[s.feature] <= s.threshold { left_child(k) } else { right_child(k) };
        }
        k - self.nodes.len()
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        self.leaves[self.leaf_of(x)]
    }

    pub fn check_features(&self, p: usize) -> Result<()> {
        match self.nodes.iter().position(|s| s.feature >= p) {
            Some(k) => Err(Error::InvalidTree(format!(
                "node {k} splits on feature {} but data has {p} features",
                self.nodes[k].feature
            ))),
            None => Ok(()),
        }
    }

    /// Region of decision node `k` on feature `j`: values in `(lower, upper]`
    /// are routed to `k` by the ancestors that split on `j`.
    pub fn region(&self, k: usize, j: usize) -> (f64, f64) {
        let mut lower = f64::NEG_INFINITY;
        let mut upper = f64::INFINITY;
        for (a, branch) in node_ancestors(k) {
            let s = self.nodes[a];
            if s.feature != j {
                continue;
            }
            match branch {
                Branch::Left => upper = upper.min(s.threshold),
                Branch::Right => lower = lower.max(s.threshold),
            }
        }
        (lower, upper)
    }

    /// Rewrites splits made redundant by an ancestor on the same feature.
    ///
    /// A threshold at or above the node's region sends everything left and
    /// becomes [`ALL_LEFT`]; one at or below it sends everything right and
    /// becomes [`ALL_RIGHT`]. Predictions on `[0, 1]^p` are unchanged, and
    /// afterwards the per-node left/right tests agree with path geometry.
    pub fn normalize_redundant_splits(&self) -> Tree {
        let mut out = self.clone();
        for k in 0..out.nodes.len() {
            let s = out.nodes[k];
            let (lower, upper) = out.region(k, s.feature);
            if s.threshold >= upper && s.threshold < ALL_LEFT {
                out.nodes[k].threshold = ALL_LEFT;
            } else if s.threshold <= lower && s.threshold > ALL_RIGHT {
                out.nodes[k].threshold = ALL_RIGHT;
            }
        }
        out
    }

    /// Serializes to `{depth, nodes: [{feature, threshold}], leaves}` with
    /// thresholds written to 17 significant digits.
    pub fn to_json(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{{");
        let _ = writeln!(out, "  \"depth\": {},", self.depth);
        if self.nodes.is_empty() {
            let _ = writeln!(out, "  \"nodes\": [],");
        } else {
            let _ = writeln!(out, "  \"nodes\": [");
            for (k, s) in self.nodes.iter().enumerate() {
                let sep = if k + 1 == self.nodes.len() { "" } else { "," };
                let _ = writeln!(
                    out,
                    "    {{\"feature\": {}, \"threshold\": {:.16e}}}{sep}",
                    s.feature, s.threshold
                );
            }
            let _ = writeln!(out, "  ],");
        }
        let leaves: Vec<String> = self.leaves.iter().map(u8::to_string).collect();
        let _ = writeln!(out, "  \"leaves\": [{}]", leaves.join(", "));
        out.push_str("}\n");
        out
    }

    pub fn from_json(text: &str) -> Result<Tree> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| Error::schema("$", format!("not valid JSON: {e}")))?;
        let obj = value.as_object().ok_or_else(|| Error::schema("$", "expected an object"))?;

        let depth = obj
            .get("depth")
            .ok_or_else(|| Error::schema("$.depth", "missing"))?
            .as_u64()
            .ok_or_else(|| Error::schema("$.depth", "expected a non-negative integer"))?
            as usize;
        if depth > MAX_DEPTH {
            return Err(Error::schema("$.depth", format!("depth {depth} exceeds {MAX_DEPTH}")));
        }

        let nodes_json = obj
            .get("nodes")
            .ok_or_else(|| Error::schema("$.nodes", "missing"))?
            .as_array()
            .ok_or_else(|| Error::schema("$.nodes", "expected an array"))?;
        if nodes_json.len() != n_decision_nodes(depth) {
            return Err(Error::schema(
                "$.nodes",
                format!("expected {} entries for depth {depth}, got {}", n_decision_nodes(depth), nodes_json.len()),
            ));
        }
        let mut nodes = Vec::with_capacity(nodes_json.len());
        for (k, node) in nodes_json.iter().enumerate() {
            let path = format!("$.nodes[{k}]");
            let feature = node
                .get("feature")
                .and_then(Value::as_u64)
                .ok_or_else(|| Error::schema(format!("{path}.feature"), "expected a non-negative integer"))?
                as usize;
            let threshold = node
                .get("threshold")
                .and_then(Value::as_f64)
                .ok_or_else(|| Error::schema(format!("{path}.threshold"), "expected a number"))?;
            nodes.push(Split { feature, threshold });
        }

        let leaves_json = obj
            .get("leaves")
            .ok_or_else(|| Error::schema("$.leaves", "missing"))?
            .as_array()
            .ok_or_else(|| Error::schema("$.leaves", "expected an array"))?;
        if leaves_json.len() != n_leaves(depth) {
            return Err(Error::schema(
                "$.leaves",
                format!("expected {} entries for depth {depth}, got {}", n_leaves(depth), leaves_json.len()),
            ));
        }
        let mut leaves = Vec::with_capacity(leaves_json.len());
        for (t, leaf) in leaves_json.iter().enumerate() {
            match leaf.as_u64() {
                Some(c @ (0 | 1)) => leaves.push(c as u8),
                _ => return Err(Error::schema(format!("$.leaves[{t}]"), "expected 0 or 1")),
            }
        }
        Tree::new(depth, nodes, leaves)
    }

    /// Parses and checks feature indices against `n_features`.
    pub fn from_json_for(text: &str, n_features: usize) -> Result<Tree> {
        let tree = Self::from_json(text)?;
        if let Some(k) = tree.nodes.iter().position(|s| s.feature >= n_features) {
            return Err(Error::schema(
                format!("$.nodes[{k}].feature"),
                format!("feature {} out of range for {n_features} features", tree.nodes[k].feature),
            ));
        }
        Ok(tree)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn stump(threshold: f64) -> Tree {
        Tree::new(1, vec![Split { feature: 0, threshold }], vec![0, 1]).unwrap()
    }

    #[test]
    fn heap_arithmetic() {
        assert_eq!(leaf_ancestors(2, 0), (vec![0, 1], vec![]));
        assert_eq!(leaf_ancestors(2, 1), (vec![0], vec![1]));
        assert_eq!(leaf_ancestors(2, 2), (vec![2], vec![0]));
        assert_eq!(leaf_ancestors(2, 3), (vec![], vec![0, 2]));
        assert_eq!(node_ancestors(4), vec![(0, Branch::Left), (1, Branch::Right)]);
        assert!(leaf_path(0, 0).is_empty());
    }

    #[test]
    fn prediction_uses_le_for_left() {
        let t = stump(0.5);
        assert_eq!(t.predict(&[0.5]), 0);
        assert_eq!(t.predict(&[0.5000001]), 1);
    }

    #[test]
    fn depth_one_round_trip() {
        let t = stump(0.425);
        assert_eq!(Tree::from_json(&t.to_json()).unwrap(), t);
    }

    #[test]
    fn depth_zero_json() {
        let t = Tree::constant(0, 1, 0);
        let json = t.to_json();
        let v: Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["depth"], 0);
        assert_eq!(v["nodes"].as_array().unwrap().len(), 0);
        assert_eq!(v["leaves"], serde_json::json!([1]));
        assert_eq!(Tree::from_json(&json).unwrap(), t);
    }

    #[test]
    fn schema_errors_carry_paths() {
        let json = stump(0.3).to_json().replace("\"feature\": 0", "\"feature\": 3");
        match Tree::from_json_for(&json, 3) {
            Err(Error::Schema { path, .. }) => assert_eq!(path, "$.nodes[0].feature"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(Tree::from_json_for(&json, 4).is_ok());
        let bad_leaf = r#"{"depth": 0, "nodes": [], "leaves": [2]}"#;
        match Tree::from_json(bad_leaf) {
            Err(Error::Schema { path, .. }) => assert_eq!(path, "$.leaves[0]"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn normalizes_redundant_child() {
        // root x0 <= 0.5, left child x0 <= 0.7 can never send anything right
        let t = Tree::new(
            2,
            vec![
                Split { feature: 0, threshold: 0.5 },
                Split { feature: 0, threshold: 0.7 },
                Split { feature: 0, threshold: 0.2 },
            ],
            vec![0, 1, 1, 0],
        )
        .unwrap();
        let n = t.normalize_redundant_splits();
        assert_eq!(n.node(1).threshold, ALL_LEFT);
        assert_eq!(n.node(2).threshold, ALL_RIGHT);
        for i in 0..=100 {
            let x = [i as f64 / 100.0];
            assert_eq!(t.predict(&x), n.predict(&x));
        }
    }

    #[test]
    fn swapping_children_mirrors_subtrees() {
        let mut t = Tree::new(
            2,
            vec![
                Split { feature: 0, threshold: 0.5 },
                Split { feature: 1, threshold: 0.2 },
                Split { feature: 1, threshold: 0.8 },
            ],
            vec![0, 1, 1, 0],
        )
        .unwrap();
        t.swap_children(0);
        assert_eq!(t.node(1).threshold, 0.8);
        assert_eq!(t.node(2).threshold, 0.2);
        assert_eq!(t.leaves(), &[1, 0, 0, 1]);
    }

    proptest! {
        #[test]
        fn json_round_trip_is_bit_exact(bits in proptest::collection::vec(any::<u64>(), 3), leaves in proptest::collection::vec(0u8..2, 4)) {
            let nodes = bits.iter().enumerate().map(|(k, b)| {
                let v = f64::from_bits(*b);
                let threshold = if v.is_finite() { v } else { (k as f64) * 0.1 };
                Split { feature: k % 2, threshold }
            }).collect();
            let t = Tree::new(2, nodes, leaves).unwrap();
            let back = Tree::from_json(&t.to_json()).unwrap();
            for (a, b) in t.nodes().iter().zip(back.nodes()) {
                prop_assert_eq!(a.threshold.to_bits(), b.threshold.to_bits());
            }
            prop_assert_eq!(back, t);
        }
    }
}
