//! Upper bound on adversarial accuracy from a maximum matching.
//!
//! Two opposite-label samples whose boxes intersect share a point, and no
//! classifier can get both right on that point. A set of disjoint such
//! pairs therefore forces one error per pair, so any tree makes at least
//! as many errors as the maximum matching in the conflict graph.

use std::collections::{HashMap, VecDeque};
use std::io::Write;

use rayon::prelude::*;

use crate::adversary::PerturbationBox;
use crate::attack::AttackModel;
use crate::data::Dataset;
use crate::error::{Error, Result};

/// Bipartite graph between class-0 samples (left) and class-1 samples
/// (right) whose perturbation boxes intersect.
#[derive(Clone, Debug, PartialEq)]
pub struct ConflictGraph {
    /// Sample index of each left vertex.
    pub left: Vec<usize>,
    /// Sample index of each right vertex.
    pub right: Vec<usize>,
    /// Edges as `(left vertex, right vertex)`, sorted.
    pub edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl ConflictGraph {
    /// A graph over `n_left + n_right` abstract vertices. Vertex `u` on the
    /// left maps to sample `u`, vertex `v` on the right to `n_left + v`.
    pub fn from_edges(n_left: usize, n_right: usize, edges: &[(usize, usize)]) -> Self {
        let mut adjacency = vec![Vec::new(); n_left];
        for &(u, v) in edges {
            assert!(u < n_left && v < n_right, "edge ({u}, {v}) out of range");
            adjacency[u].push(v);
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        Self::from_adjacency((0..n_left).collect(), (n_left..n_left + n_right).collect(), adjacency)
    }

    fn from_adjacency(left: Vec<usize>, right: Vec<usize>, adjacency: Vec<Vec<usize>>) -> Self {
        let edges = adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, vs)| vs.iter().map(move |&v| (u, v)))
            .collect();
        ConflictGraph {
            left,
            right,
            edges,
            adjacency,
        }
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adjacency[u]
    }
}

/// Joins every class-0/class-1 pair whose boxes overlap in all features.
pub fn build_conflict_graph(data: &Dataset, attack: &AttackModel) -> ConflictGraph {
    let boxes: Vec<PerturbationBox> = data.rows().map(|x| PerturbationBox::around(x, attack)).collect();
    let (left, right): (Vec<usize>, Vec<usize>) = (0..data.n_samples()).partition(|&i| data.label(i) == 0);
    let adjacency = left
        .par_iter()
        .map(|&i| {
            right
                .iter()
                .enumerate()
                .filter(|&(_, &k)| boxes[i].intersects(&boxes[k]))
                .map(|(v, _)| v)
                .collect()
        })
        .collect();
    ConflictGraph::from_adjacency(left, right, adjacency)
}

/// A maximum matching as `(left vertex, right vertex)` pairs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matching {
    pub pairs: Vec<(usize, usize)>,
}

impl Matching {
    pub fn size(&self) -> usize {
        self.pairs.len()
    }
}

const FREE: usize = usize::MAX;

/// Maximum-cardinality matching by Hopcroft-Karp. Vertices and neighbors
/// are scanned in ascending order, so the result is deterministic.
pub fn max_matching(graph: &ConflictGraph) -> Matching {
    let n_left = graph.left.len();
    let n_right = graph.right.len();
    let mut match_left = vec![FREE; n_left];
    let mut match_right = vec![FREE; n_right];
    let mut dist = vec![0usize; n_left];

    loop {
        // BFS layers from free left vertices
        let mut queue = VecDeque::new();
        for u in 0..n_left {
            if match_left[u] == FREE {
                dist[u] = 0;
                queue.push_back(u);
            } else {
                dist[u] = usize::MAX;
            }
        }
        let mut found = false;
        while let Some(u) = queue.pop_front() {
            for &v in graph.neighbors(u) {
                let w = match_right[v];
                if w == FREE {
                    found = true;
                } else if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        if !found {
            break;
        }
        let mut next = vec![0usize; n_left];
        for u in 0..n_left {
            if match_left[u] == FREE {
                augment(graph, u, &mut match_left, &mut match_right, &mut dist, &mut next);
            }
        }
    }

    let pairs = match_left
        .iter()
        .enumerate()
        .filter(|&(_, &v)| v != FREE)
        .map(|(u, &v)| (u, v))
        .collect();
    Matching { pairs }
}

fn augment(
    graph: &ConflictGraph,
    u: usize,
    match_left: &mut [usize],
    match_right: &mut [usize],
    dist: &mut [usize],
    next: &mut [usize],
) -> bool {
    let neighbors = graph.neighbors(u);
    while next[u] < neighbors.len() {
        let v = neighbors[next[u]];
        next[u] += 1;
        let w = match_right[v];
        let ok = w == FREE
            || (dist[w] == dist[u] + 1 && augment(graph, w, match_left, match_right, dist, next));
        if ok {
            match_left[u] = v;
            match_right[v] = u;
            return true;
        }
    }
    dist[u] = usize::MAX;
    false
}

/// `(n - M) / n` for maximum matching size `M`: no classifier can beat it.
pub fn adversarial_accuracy_bound(data: &Dataset, attack: &AttackModel) -> Result<f64> {
    let n = data.n_samples();
    if n == 0 {
        return Err(Error::InvalidData("the bound needs at least one sample".into()));
    }
    let m = max_matching(&build_conflict_graph(data, attack)).size();
    Ok((n - m) as f64 / n as f64)
}

/// Minimum number of errors any classifier makes under `attack`.
pub fn min_errors(data: &Dataset, attack: &AttackModel) -> usize {
    max_matching(&build_conflict_graph(data, attack)).size()
}

/// Bound at each L-infinity radius in `grid`.
pub fn epsilon_sweep(data: &Dataset, grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    grid.iter()
        .map(|&eps| {
            if !(0.0..=1.0).contains(&eps) {
                return Err(Error::InvalidArgument(format!("epsilon {eps} is outside [0, 1]")));
            }
            let attack = AttackModel::epsilon(data.n_features(), eps)?;
            Ok((eps, adversarial_accuracy_bound(data, &attack)?))
        })
        .collect()
}

/// `steps + 1` evenly spaced radii from 0 to `max`, rounded to 12 decimals.
pub fn linear_grid(max: f64, steps: usize) -> Vec<f64> {
    (0..=steps)
        .map(|k| (max * k as f64 / steps.max(1) as f64 * 1e12).round() / 1e12)
        .collect()
}

/// Writes a sweep as CSV with header `epsilon,bound`.
pub fn write_sweep_csv<W: Write>(sweep: &[(f64, f64)], mut out: W) -> Result<()> {
    writeln!(out, "epsilon,bound")?;
    for (eps, bound) in sweep {
        writeln!(out, "{eps},{bound}")?;
    }
    Ok(())
}

/// One radius picked by [`select_epsilons`].
#[derive(Clone, Debug, PartialEq)]
pub struct SelectedEpsilon {
    pub fraction: f64,
    /// Bound value aimed for.
    pub target: f64,
    pub epsilon: f64,
    /// Bound achieved at `epsilon`.
    pub bound: f64,
}

/// Resolution of the radius grid searched by [`select_epsilons`].
pub const SELECT_GRID_STEP: f64 = 1e-3;
const SELECT_GRID_POINTS: usize = 1000;

/// Picks radii whose bound sits at the given fractions of the way from the
/// bound at radius 0 down to the majority fraction.
///
/// For each fraction `f` the target is `b_max - f * (b_max - b_min)`. The
/// first grid radius whose bound reaches the target is compared with the
/// start of the plateau just before it; the one whose bound is closer to the
/// target wins, the smaller radius on ties.
pub fn select_epsilons(data: &Dataset, fractions: &[f64]) -> Result<Vec<SelectedEpsilon>> {
    let counts = data.class_counts();
    if counts[0] == 0 || counts[1] == 0 {
        return Err(Error::InvalidData("selecting radii needs both classes present".into()));
    }
    if let Some(f) = fractions.iter().find(|f| !(0.0..=1.0).contains(*f)) {
        return Err(Error::InvalidArgument(format!("fraction {f} is outside [0, 1]")));
    }
    let p = data.n_features();
    let mut cache: HashMap<usize, f64> = HashMap::new();
    let mut bound_at = |k: usize| -> Result<f64> {
        if let Some(&b) = cache.get(&k) {
            return Ok(b);
        }
        let attack = AttackModel::epsilon(p, k as f64 * SELECT_GRID_STEP)?;
        let b = adversarial_accuracy_bound(data, &attack)?;
        cache.insert(k, b);
        Ok(b)
    };

    let b_max = bound_at(0)?;
    let b_min = data.majority_fraction();
    if b_max <= b_min {
        return Err(Error::InvalidData(format!(
            "the bound is already {b_max} at radius 0, equal to the majority fraction"
        )));
    }

    // smallest k in [lo, hi] with pred(bound(k)), assuming pred(bound(hi))
    fn first_where(
        bound_at: &mut dyn FnMut(usize) -> Result<f64>,
        mut lo: usize,
        mut hi: usize,
        pred: &dyn Fn(f64) -> bool,
    ) -> Result<usize> {
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if pred(bound_at(mid)?) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Ok(lo)
    }

    let mut out = Vec::with_capacity(fractions.len());
    for &f in fractions {
        let target = b_max - f * (b_max - b_min);
        let k_reach = first_where(&mut bound_at, 0, SELECT_GRID_POINTS, &|b| b <= target)?;
        let mut best = (k_reach, bound_at(k_reach)?);
        if k_reach > 0 {
            let before = bound_at(k_reach - 1)?;
            if before < b_max {
                let start = first_where(&mut bound_at, 0, k_reach - 1, &|b| b <= before)?;
                if (before - target).abs() <= (best.1 - target).abs() {
                    best = (start, before);
                }
            }
        }
        out.push(SelectedEpsilon {
            fraction: f,
            target,
            epsilon: best.0 as f64 * SELECT_GRID_STEP,
            bound: best.1,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor() -> Dataset {
        Dataset::new(
            &[vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]],
            &[0, 0, 1, 1],
            2,
        )
        .unwrap()
    }

    #[test]
    fn coincident_opposite_points_conflict() {
        let data = Dataset::new(&[vec![0.5], vec![0.5], vec![0.5]], &[0, 1, 0], 1).unwrap();
        let g = build_conflict_graph(&data, &AttackModel::none(1));
        assert_eq!(g.left, vec![0, 2]);
        assert_eq!(g.right, vec![1]);
        assert_eq!(g.n_edges(), 2);
        assert_eq!(max_matching(&g).size(), 1);
    }

    #[test]
    fn xor_has_no_conflicts_at_point_one() {
        let g = build_conflict_graph(&xor(), &AttackModel::epsilon(2, 0.1).unwrap());
        assert_eq!(g.n_edges(), 0);
        assert_eq!(adversarial_accuracy_bound(&xor(), &AttackModel::epsilon(2, 0.1).unwrap()).unwrap(), 1.0);
    }

    #[test]
    fn complete_two_by_three() {
        let edges: Vec<(usize, usize)> = (0..2).flat_map(|u| (0..3).map(move |v| (u, v))).collect();
        let g = ConflictGraph::from_edges(2, 3, &edges);
        assert_eq!(max_matching(&g).size(), 2);
        assert_eq!(max_matching(&ConflictGraph::from_edges(3, 3, &[])).size(), 0);
    }

    #[test]
    fn needs_augmenting_path() {
        // greedy would match 0-0 and leave 1 unmatched
        let g = ConflictGraph::from_edges(2, 2, &[(0, 0), (0, 1), (1, 0)]);
        let m = max_matching(&g);
        assert_eq!(m.size(), 2);
        assert_eq!(m.pairs, vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn full_radius_gives_majority_fraction() {
        let data = Dataset::new(&[vec![0.0], vec![0.2], vec![0.9], vec![1.0], vec![0.5]], &[0, 0, 1, 1, 0], 1)
            .unwrap();
        let b = adversarial_accuracy_bound(&data, &AttackModel::epsilon(1, 1.0).unwrap()).unwrap();
        assert_eq!(b, 0.6);
        assert!(adversarial_accuracy_bound(&Dataset::new(&[], &[], 1).unwrap(), &AttackModel::none(1)).is_err());
    }

    #[test]
    fn sweep_is_non_increasing_and_csv() {
        let data = xor();
        let sweep = epsilon_sweep(&data, &linear_grid(1.0, 20)).unwrap();
        assert_eq!(sweep[0], (0.0, 1.0));
        assert!(sweep.windows(2).all(|w| w[1].1 <= w[0].1));
        assert_eq!(sweep.last().unwrap().1, 0.5);
        let mut buf = Vec::new();
        write_sweep_csv(&sweep[..2], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "epsilon,bound\n0,1\n0.05,1\n");
    }

    #[test]
    fn selection_respects_flat_prefix() {
        // opposite labels 0.4 apart: the bound stays 1 below radius 0.2
        let data = Dataset::new(&[vec![0.1], vec![0.6], vec![0.2], vec![0.7]], &[0, 1, 0, 1], 1).unwrap();
        let picks = select_epsilons(&data, &[0.25, 0.5, 0.75]).unwrap();
        assert!(picks.iter().all(|s| s.epsilon >= 0.2 - 1e-12), "{picks:?}");
        assert!(picks.windows(2).all(|w| w[0].epsilon <= w[1].epsilon));
    }

    #[test]
    fn selection_rejects_trivial_data() {
        let same = Dataset::new(&[vec![0.1], vec![0.5]], &[1, 1], 1).unwrap();
        assert!(select_epsilons(&same, &[0.5]).is_err());
        let clash = Dataset::new(&[vec![0.5], vec![0.5]], &[0, 1], 1).unwrap();
        assert!(select_epsilons(&clash, &[0.5]).is_err());
    }
}
