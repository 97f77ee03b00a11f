use crate::error::{Error, Result};

/// Box-shaped attacker: each feature can be decreased by `delta_left[j]` and
/// increased by `delta_right[j]`, in units of the scaled feature range.
#[derive(Clone, Debug, PartialEq)]
pub struct AttackModel {
    delta_left: Vec<f64>,
    delta_right: Vec<f64>,
}

impl AttackModel {
    pub fn new(delta_left: Vec<f64>, delta_right: Vec<f64>) -> Result<Self> {
        if delta_left.len() != delta_right.len() {
            return Err(Error::InvalidAttack(format!(
                "{} left deltas but {} right deltas",
                delta_left.len(),
                delta_right.len()
            )));
        }
        for (side, deltas) in [("left", &delta_left), ("right", &delta_right)] {
            if let Some(d) = deltas.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
                return Err(Error::InvalidAttack(format!("{side} delta {d} is not a finite value >= 0")));
            }
        }
        Ok(AttackModel {
            delta_left,
            delta_right,
        })
    }

    /// L-infinity ball of radius `epsilon` over `n_features` features.
    pub fn epsilon(n_features: usize, epsilon: f64) -> Result<Self> {
        Self::new(vec![epsilon; n_features], vec![epsilon; n_features])
    }

    /// No perturbation at all.
    pub fn none(n_features: usize) -> Self {
        AttackModel {
            delta_left: vec![0.0; n_features],
            delta_right: vec![0.0; n_features],
        }
    }

    pub fn n_features(&self) -> usize {
        self.delta_left.len()
    }

    pub fn delta_left(&self) -> &[f64] {
        &self.delta_left
    }

    pub fn delta_right(&self) -> &[f64] {
        &self.delta_right
    }

    /// The common radius if every delta is equal.
    pub fn uniform_epsilon(&self) -> Option<f64> {
        let first = *self.delta_left.first()?;
        self.delta_left
            .iter()
            .chain(&self.delta_right)
            .all(|&d| d == first)
            .then_some(first)
    }

    pub fn max_delta(&self) -> f64 {
        self.delta_left.iter().chain(&self.delta_right).fold(0.0, |a, &b| a.max(b))
    }

    /// Lowest value the attacker can reach from `x` on feature `j`.
    pub fn low(&self, j: usize, x: f64) -> f64 {
        endpoint(x, -self.delta_left[j])
    }

    /// Highest value the attacker can reach from `x` on feature `j`.
    pub fn high(&self, j: usize, x: f64) -> f64 {
        endpoint(x, self.delta_right[j])
    }

    pub(crate) fn check_features(&self, p: usize) -> Result<()> {
        if self.n_features() != p {
            return Err(Error::InvalidAttack(format!(
                "attack covers {} features, data has {p}",
                self.n_features()
            )));
        }
        Ok(())
    }
}

/// Perturbed endpoints are rounded to 12 decimals so that boxes which
/// touch in exact arithmetic (0.6 + 0.1 and 0.8 - 0.1) also touch here.
const ENDPOINT_SCALE: f64 = 1e12;

fn endpoint(x: f64, delta: f64) -> f64 {
    if delta == 0.0 {
        return x.clamp(0.0, 1.0);
    }
    (((x + delta) * ENDPOINT_SCALE).round() / ENDPOINT_SCALE).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn touching_boxes_share_an_endpoint() {
        let a = AttackModel::epsilon(1, 0.1).unwrap();
        assert_eq!(a.high(0, 0.6), a.low(0, 0.8));
        assert_eq!(a.low(0, 0.3), a.high(0, 0.1));
        assert_eq!(a.low(0, 0.05), 0.0);
        assert_eq!(AttackModel::none(1).low(0, 0.123456789012345), 0.123456789012345);
    }

    #[test]
    fn rejects_negative_and_mismatched() {
        assert!(AttackModel::new(vec![-0.1], vec![0.1]).is_err());
        assert!(AttackModel::new(vec![0.1], vec![]).is_err());
        assert!(AttackModel::new(vec![f64::NAN], vec![0.0]).is_err());
    }

    #[test]
    fn endpoints_are_clipped() {
        let attack = AttackModel::epsilon(1, 0.1).unwrap();
        assert_eq!(attack.low(0, 0.05), 0.0);
        assert_eq!(attack.high(0, 0.95), 1.0);
        assert_eq!(attack.uniform_epsilon(), Some(0.1));
        let skew = AttackModel::new(vec![0.1], vec![0.2]).unwrap();
        assert_eq!(skew.uniform_epsilon(), None);
    }
}
