//! Greedy robust tree induction.
//!
//! Top-down splitting that scores each candidate split by its worst-case
//! Gini impurity: samples whose box crosses the threshold are placed on
//! whichever side hurts most. A sample that straddles a split continues
//! into both children with its box cut at the threshold.

use crate::attack::AttackModel;
use crate::data::Dataset;
use crate::tree::{left_child, n_decision_nodes, n_leaves, right_child, Split, Tree, ALL_LEFT, MAX_DEPTH};

/// A scored split of the samples at one node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitScore {
    pub feature: usize,
    pub threshold: f64,
    /// Worst-case weighted Gini impurity, in `[0, 0.5]`.
    pub impurity: f64,
    /// Per-class counts of samples that can only go left.
    pub left: [usize; 2],
    pub right: [usize; 2],
    /// Per-class counts of samples whose box crosses the threshold.
    pub straddling: [usize; 2],
}

fn gini_mass(c0: usize, c1: usize) -> f64 {
    let total = c0 + c1;
    if total == 0 {
        0.0
    } else {
        2.0 * c0 as f64 * c1 as f64 / total as f64
    }
}

/// Weighted Gini when `x` class-0 and `y` class-1 straddlers go left.
fn weighted(left: [usize; 2], right: [usize; 2], straddle: [usize; 2], x: usize, y: usize) -> f64 {
    let total = left[0] + left[1] + right[0] + right[1] + straddle[0] + straddle[1];
    if total == 0 {
        return 0.0;
    }
    let l = gini_mass(left[0] + x, left[1] + y);
    let r = gini_mass(right[0] + straddle[0] - x, right[1] + straddle[1] - y);
    (l + r) / total as f64
}

/// Largest weighted Gini the adversary can produce by sending any number
/// of each class's straddlers left and the rest right.
///
/// Side impurity mass `2ab/(a+b)` is concave, so for fixed `x` the score is
/// concave in `y` and the best `y` is found by bisection on the slope.
pub fn worst_case_gini(left: [usize; 2], right: [usize; 2], straddling: [usize; 2]) -> f64 {
    let [b0, b1] = straddling;
    if (b0 + 1) * (b1 + 1) <= 1024 {
        let mut best = 0.0f64;
        for x in 0..=b0 {
            for y in 0..=b1 {
                best = best.max(weighted(left, right, straddling, x, y));
            }
        }
        return best;
    }
    let f = |x: usize, y: usize| weighted(left, right, straddling, x, y);
    (0..=b0)
        .map(|x| {
            let (mut lo, mut hi) = (0usize, b1);
            while lo < hi {
                let mid = lo + (hi - lo) / 2;
                if f(x, mid) < f(x, mid + 1) {
                    lo = mid + 1;
                } else {
                    hi = mid;
                }
            }
            f(x, lo)
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug)]
struct Sample {
    index: usize,
    low: Vec<f64>,
    high: Vec<f64>,
    /// The box has not been cut by any split so far.
    whole: bool,
}

struct Builder<'a> {
    data: &'a Dataset,
    depth: usize,
    splittable: Vec<usize>,
    nodes: Vec<Split>,
    leaves: Vec<u8>,
}

impl Builder<'_> {
    fn counts(&self, samples: &[Sample]) -> [usize; 2] {
        let mut c = [0; 2];
        for s in samples {
            c[self.data.label(s.index) as usize] += 1;
        }
        c
    }

    fn label(&self, samples: &[Sample], parent: u8) -> u8 {
        let pick = |c: [usize; 2]| match c[0].cmp(&c[1]) {
            std::cmp::Ordering::Greater => Some(0),
            std::cmp::Ordering::Less => Some(1),
            std::cmp::Ordering::Equal => None,
        };
        let whole: Vec<Sample> = samples.iter().filter(|s| s.whole).cloned().collect();
        pick(self.counts(&whole)).or_else(|| pick(self.counts(samples))).unwrap_or(parent)
    }

    fn best_split(&self, samples: &[Sample]) -> Option<SplitScore> {
        let mut best: Option<SplitScore> = None;
        for &j in &self.splittable {
            let mut points: Vec<f64> = samples.iter().flat_map(|s| [s.low[j], s.high[j]]).collect();
            points.sort_by(f64::total_cmp);
            points.dedup();
            let mut lows: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
            let mut highs: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
            for s in samples {
                let y = self.data.label(s.index) as usize;
                lows[y].push(s.low[j]);
                highs[y].push(s.high[j]);
            }
            for v in lows.iter_mut().chain(highs.iter_mut()) {
                v.sort_by(f64::total_cmp);
            }
            for w in points.windows(2) {
                let threshold = w[0] + (w[1] - w[0]) / 2.0;
                let mut left = [0; 2];
                let mut right = [0; 2];
                let mut straddling = [0; 2];
                for y in 0..2 {
                    let n = lows[y].len();
                    left[y] = highs[y].partition_point(|&h| h <= threshold);
                    right[y] = n - lows[y].partition_point(|&l| l <= threshold);
                    straddling[y] = n - left[y] - right[y];
                }
                let impurity = worst_case_gini(left, right, straddling);
                if best.is_none_or(|b| impurity < b.impurity) {
                    best = Some(SplitScore {
                        feature: j,
                        threshold,
                        impurity,
                        left,
                        right,
                        straddling,
                    });
                }
            }
        }
        best
    }

    fn fill(&mut self, k: usize, label: u8) {
        let n_nodes = self.nodes.len();
        if k >= n_nodes {
            self.leaves[k - n_nodes] = label;
            return;
        }
        self.nodes[k] = Split {
            feature: self.splittable.first().copied().unwrap_or(0),
            threshold: ALL_LEFT,
        };
        self.fill(left_child(k), label);
        self.fill(right_child(k), label);
    }

    fn grow(&mut self, k: usize, level: usize, samples: Vec<Sample>, parent: u8) {
        let label = self.label(&samples, parent);
        let counts = self.counts(&samples);
        let is_leaf = k >= self.nodes.len();
        if is_leaf || level == self.depth || counts[0] == 0 || counts[1] == 0 {
            self.fill(k, label);
            return;
        }
        let node_gini = gini_mass(counts[0], counts[1]) / samples.len() as f64;
        let split = match self.best_split(&samples) {
            Some(s) if s.impurity < node_gini - 1e-12 => s,
            _ => {
                self.fill(k, label);
                return;
            }
        };
        let (j, theta) = (split.feature, split.threshold);
        self.nodes[k] = Split {
            feature: j,
            threshold: theta,
        };
        let mut left = Vec::new();
        let mut right = Vec::new();
        for s in samples {
            let goes_left = s.low[j] <= theta;
            let goes_right = s.high[j] > theta;
            if goes_left && goes_right {
                let mut l = s.clone();
                l.high[j] = l.high[j].min(theta);
                l.whole = false;
                let mut r = s;
                r.low[j] = r.low[j].max(theta.next_up());
                r.whole = false;
                left.push(l);
                right.push(r);
            } else if goes_left {
                left.push(s);
            } else {
                right.push(s);
            }
        }
        self.grow(left_child(k), level + 1, left, label);
        self.grow(right_child(k), level + 1, right, label);
    }
}

/// Greedy tree of exactly `depth` levels; branches that stop early are
/// padded with all-left splits and copies of their leaf label.
pub fn fit_greedy(data: &Dataset, attack: &AttackModel, depth: usize) -> Tree {
    let depth = depth.min(MAX_DEPTH);
    let p = data.n_features();
    let splittable: Vec<usize> = (0..p)
        .filter(|&j| {
            let first = data.rows().next().map(|x| x[j]);
            data.rows().any(|x| Some(x[j]) != first)
        })
        .collect();
    let samples: Vec<Sample> = (0..data.n_samples())
        .map(|i| {
            let x = data.row(i);
            Sample {
                index: i,
                low: (0..p).map(|j| attack.low(j, x[j])).collect(),
                high: (0..p).map(|j| attack.high(j, x[j])).collect(),
                whole: true,
            }
        })
        .collect();
    let mut builder = Builder {
        data,
        depth,
        splittable,
        nodes: vec![
            Split {
                feature: 0,
                threshold: ALL_LEFT
            };
            n_decision_nodes(depth)
        ],
        leaves: vec![0; n_leaves(depth)],
    };
    builder.grow(0, 0, samples, data.majority_label());
    Tree::new(depth, builder.nodes, builder.leaves).expect("complete tree")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::adversarial_accuracy;

    /// Tries every subset of straddlers on the left, sample by sample.
    fn per_sample_oracle(left: [usize; 2], right: [usize; 2], straddle: [usize; 2]) -> f64 {
        let labels: Vec<usize> = (0..straddle[0]).map(|_| 0).chain((0..straddle[1]).map(|_| 1)).collect();
        let mut best = 0.0f64;
        for subset in 0u32..1 << labels.len() {
            let mut l = left;
            let mut r = right;
            for (k, &y) in labels.iter().enumerate() {
                if subset >> k & 1 == 1 {
                    l[y] += 1;
                } else {
                    r[y] += 1;
                }
            }
            let total = (l[0] + l[1] + r[0] + r[1]) as f64;
            if total > 0.0 {
                best = best.max((gini_mass(l[0], l[1]) + gini_mass(r[0], r[1])) / total);
            }
        }
        best
    }

    #[test]
    fn pure_split_scores_zero() {
        assert_eq!(worst_case_gini([5, 0], [0, 5], [0, 0]), 0.0);
        assert_eq!(worst_case_gini([0, 0], [0, 0], [0, 0]), 0.0);
    }

    #[test]
    fn all_straddling_recovers_node_impurity() {
        let g = worst_case_gini([0, 0], [0, 0], [3, 5]);
        let node = gini_mass(3, 5) / 8.0;
        assert!((g - node).abs() < 1e-12);
    }

    #[test]
    fn interior_assignment_can_beat_block_moves() {
        let exact = worst_case_gini([3, 0], [0, 3], [4, 4]);
        let blocks = [(0, 0), (4, 0), (0, 4), (4, 4)]
            .iter()
            .map(|&(x, y)| weighted([3, 0], [0, 3], [4, 4], x, y))
            .fold(0.0, f64::max);
        assert!(exact > blocks + 1e-3, "{exact} vs {blocks}");
    }

    #[test]
    fn matches_per_sample_oracle() {
        for l0 in 0..3 {
            for r1 in 0..3 {
                for b0 in 0..4 {
                    for b1 in 0..4 {
                        let (l, r, b) = ([l0, 1], [2, r1], [b0, b1]);
                        let g = worst_case_gini(l, r, b);
                        assert!((g - per_sample_oracle(l, r, b)).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn bisection_agrees_with_scan() {
        let (l, r, b) = ([7, 2], [1, 9], [40, 55]);
        let scan = (0..=40)
            .flat_map(|x| (0..=55).map(move |y| (x, y)))
            .map(|(x, y)| weighted(l, r, b, x, y))
            .fold(0.0, f64::max);
        assert!((worst_case_gini(l, r, b) - scan).abs() < 1e-12);
    }

    #[test]
    fn xor_gets_no_split() {
        let data = Dataset::new(
            &[vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]],
            &[0, 0, 1, 1],
            2,
        )
        .unwrap();
        let attack = AttackModel::epsilon(2, 0.1).unwrap();
        let t = fit_greedy(&data, &attack, 2);
        assert!(adversarial_accuracy(&t, &data, &attack) <= 0.75);
        assert!(t.nodes().iter().all(|s| s.threshold == ALL_LEFT));
    }

    #[test]
    fn pure_data_gives_constant_tree() {
        let data = Dataset::new(&[vec![0.1], vec![0.9]], &[1, 1], 1).unwrap();
        let t = fit_greedy(&data, &AttackModel::none(1), 2);
        assert_eq!(t.leaves(), &[1, 1, 1, 1]);
        assert_eq!(t.depth(), 2);
    }

    #[test]
    fn separable_data_is_split_robustly() {
        let data = Dataset::new(
            &[vec![0.1], vec![0.2], vec![0.3], vec![0.7], vec![0.8], vec![0.9]],
            &[0, 0, 0, 1, 1, 1],
            1,
        )
        .unwrap();
        let attack = AttackModel::epsilon(1, 0.15).unwrap();
        let t = fit_greedy(&data, &attack, 1);
        assert_eq!(adversarial_accuracy(&t, &data, &attack), 1.0);
        assert!((t.node(0).threshold - 0.5).abs() < 1e-12);
    }
}
