//! Candidate split positions.
//!
//! The robust 0-1 loss of a split on feature `j` only changes when the
//! threshold crosses a perturbed endpoint `X_ij - Δl_j` or `X_ij + Δr_j`.
//! The `K` sorted candidates of a feature cut the line into `K + 1` gaps;
//! gap `g` holds thresholds `θ` with exactly `g` candidates `<= θ`.

use crate::attack::AttackModel;
use crate::data::Dataset;

/// Which values become candidate thresholds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CandidateMode {
    /// Clipped perturbed endpoints of every sample.
    #[default]
    Endpoints,
    /// The unperturbed feature values.
    RawValues,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdCandidates {
    per_feature: Vec<Vec<f64>>,
    mode: CandidateMode,
}

/// Candidate thresholds from perturbed endpoints.
pub fn candidate_thresholds(data: &Dataset, attack: &AttackModel) -> ThresholdCandidates {
    ThresholdCandidates::build(data, attack, CandidateMode::Endpoints)
}

impl ThresholdCandidates {
    pub fn build(data: &Dataset, attack: &AttackModel, mode: CandidateMode) -> Self {
        let n = data.n_samples();
        let per_feature = (0..data.n_features())
            .map(|j| {
                let first = (n > 0).then(|| data.value(0, j));
                let constant = (0..n).all(|i| Some(data.value(i, j)) == first);
                if constant {
                    return Vec::new();
                }
                let mut values: Vec<f64> = match mode {
                    CandidateMode::Endpoints => (0..n)
                        .flat_map(|i| {
                            let x = data.value(i, j);
                            [attack.low(j, x), attack.high(j, x)]
                        })
                        .collect(),
                    CandidateMode::RawValues => (0..n).map(|i| data.value(i, j)).collect(),
                };
                values.sort_by(f64::total_cmp);
                values.dedup();
                values
            })
            .collect();
        ThresholdCandidates { per_feature, mode }
    }

    pub fn mode(&self) -> CandidateMode {
        self.mode
    }

    pub fn n_features(&self) -> usize {
        self.per_feature.len()
    }

    pub fn feature(&self, j: usize) -> &[f64] {
        &self.per_feature[j]
    }

    pub fn len(&self, j: usize) -> usize {
        self.per_feature[j].len()
    }

    pub fn is_empty(&self, j: usize) -> bool {
        self.per_feature[j].is_empty()
    }

    /// Features with at least one candidate, in index order.
    pub fn splittable_features(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.per_feature.len()).filter(|&j| !self.per_feature[j].is_empty())
    }

    pub fn total(&self) -> usize {
        self.per_feature.iter().map(Vec::len).sum()
    }

    /// Index of the largest candidate `<= value`, `None` if all are above.
    pub fn left_index(&self, j: usize, value: f64) -> Option<usize> {
        self.per_feature[j].partition_point(|&c| c <= value).checked_sub(1)
    }

    /// Index of the smallest candidate `>= value`, `None` if all are below.
    pub fn right_index(&self, j: usize, value: f64) -> Option<usize> {
        let cands = &self.per_feature[j];
        let k = cands.partition_point(|&c| c < value);
        (k < cands.len()).then_some(k)
    }

    /// Number of gaps of feature `j` (`K + 1`).
    pub fn n_gaps(&self, j: usize) -> usize {
        self.per_feature[j].len() + 1
    }

    /// Gap containing `threshold`.
    pub fn gap_of(&self, j: usize, threshold: f64) -> usize {
        self.per_feature[j].partition_point(|&c| c <= threshold)
    }

    /// A threshold inside gap `g`: the midpoint between the bounding
    /// candidates. Below the first candidate it is the midpoint with 0 (or
    /// [`crate::tree::ALL_RIGHT`] when the first candidate is 0); above the
    /// last it is the midpoint with 1.
    pub fn gap_threshold(&self, j: usize, gap: usize) -> f64 {
        let cands = &self.per_feature[j];
        let k = cands.len();
        assert!(gap <= k, "gap {gap} out of range for {k} candidates");
        if k == 0 {
            return crate::tree::ALL_LEFT;
        }
        if gap == 0 {
            let first = cands[0];
            return if first > 0.0 { first / 2.0 } else { crate::tree::ALL_RIGHT };
        }
        let below = cands[gap - 1];
        let above = if gap == k { below.max(1.0) } else { cands[gap] };
        let mid = below + (above - below) / 2.0;
        // adjacent floats have no midpoint; the lower bound is in the gap
        if mid < above || gap == k {
            mid
        } else {
            below
        }
    }

    /// Smallest positive distance between consecutive candidates of any
    /// feature, including the distance from 0 to a positive first candidate.
    pub fn min_gap(&self) -> Option<f64> {
        self.per_feature
            .iter()
            .flat_map(|c| {
                let lead = c.first().filter(|&&f| f > 0.0).copied();
                lead.into_iter().chain(c.windows(2).map(|w| w[1] - w[0]))
            })
            .filter(|&g| g > 0.0)
            .min_by(f64::total_cmp)
    }
}
