use rand::Rng;
use serde::Serialize;

use super::{PathSample, ReplicateId};
use crate::error::{Error, Result};

/// `X_t = 1{t < U <= t + eps}` with `U ~ Un[0, 1]`.
///
/// Satisfies `E(X_t - X_s)^2 <= 2 min(eps, |t - s|)` yet `sup_t X_t = 1`
/// for every realization: the increment bound is linear in `|t - s|`
/// rather than of order `|t - s|^(1 + alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IndicatorModel {
    eps: f64,
}

impl IndicatorModel {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Model(format!("indicator width must lie in (0, 1), got {eps}")));
        }
        Ok(IndicatorModel { eps })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Path values for a fixed `U`.
    pub fn values_for(&self, u: f64, points: &[f64]) -> Vec<f64> {
        points
            .iter()
            .map(|&t| if t < u && u <= t + self.eps { 1.0 } else { 0.0 })
            .collect()
    }

    /// Draws `U` from `(0, 1]` and evaluates the path.
    pub fn sample<R: Rng + ?Sized>(&self, points: &[f64], rng: &mut R) -> Vec<f64> {
        let u = 1.0 - rng.random::<f64>();
        self.values_for(u, points)
    }

    /// `E(X_t)^2 = min(eps, 1 - t)`.
    pub fn second_moment(&self, t: f64) -> f64 {
        self.eps.min(1.0 - t)
    }

    /// `E X_s X_t`.
    pub fn cross_moment(&self, s: f64, t: f64) -> f64 {
        let gap = (t - s).abs();
        if gap > self.eps {
            0.0
        } else if s.min(t) <= 1.0 - self.eps {
            self.eps - gap
        } else {
            1.0 - s.max(t)
        }
    }

    /// The bound `2 min(eps, |t - s|)` on `E(X_t - X_s)^2`.
    pub fn increment_bound(&self, s: f64, t: f64) -> f64 {
        2.0 * self.eps.min((t - s).abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IndicatorMoments {
    pub second_moment_t: f64,
    pub cross_moment: f64,
    pub increment_bound: f64,
}

pub fn indicator_moments(model: &IndicatorModel, s: f64, t: f64) -> Result<IndicatorMoments> {
    for x in [s, t] {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!("{x} lies outside [0, 1]")));
        }
    }
    Ok(IndicatorMoments {
        second_moment_t: model.second_moment(t),
        cross_moment: model.cross_moment(s, t),
        increment_bound: model.increment_bound(s, t),
    })
}

pub fn indicator_path<'g>(model: &IndicatorModel, grid: &'g [f64], id: ReplicateId) -> Result<PathSample<'g>> {
    super::check_grid(grid)?;
    let values = model.sample(grid, &mut id.rng());
    Ok(PathSample::new(grid, values, id))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_convention() {
        let m = IndicatorModel::new(0.1).unwrap();
        assert_eq!(m.values_for(0.35, &[0.3, 0.35, 0.25, 0.2499]), vec![1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn width_must_be_inside_unit_interval() {
        assert!(IndicatorModel::new(0.0).is_err());
        assert!(IndicatorModel::new(1.0).is_err());
        assert!(IndicatorModel::new(f64::NAN).is_err());
    }

    #[test]
    fn moment_examples() {
        let m = IndicatorModel::new(0.1).unwrap();
        let at = |s, t| indicator_moments(&m, s, t).unwrap();
        let same = at(0.5, 0.5);
        assert_eq!(same.cross_moment, 0.1);
        assert_eq!(same.second_moment_t, 0.1);
        assert!((at(0.25, 0.2).cross_moment - 0.05).abs() < 1e-15);
        assert!((at(0.97, 0.95).cross_moment - 0.03).abs() < 1e-15);
        assert_eq!(at(0.1, 0.5).cross_moment, 0.0);
        assert!((at(0.2, 0.25).increment_bound - 0.1).abs() < 1e-15);
        assert!(indicator_moments(&m, -0.1, 0.5).is_err());
    }

    /// `E X_s X_t = |(max(s,t), min(s,t) + eps] ∩ (0, 1]|` by direct interval intersection.
    fn overlap(eps: f64, s: f64, t: f64) -> f64 {
        let lo = s.max(t);
        let hi = (s.min(t) + eps).min(1.0);
        (hi - lo).max(0.0)
    }

    #[test]
    fn three_case_formula_agrees_with_interval_overlap() {
        for &eps in &[0.05, 0.1, 0.3, 0.9] {
            let m = IndicatorModel::new(eps).unwrap();
            for i in 0..=50 {
                for j in 0..=50 {
                    let (s, t) = (i as f64 / 50.0, j as f64 / 50.0);
                    let exact = overlap(eps, s, t);
                    assert!((m.cross_moment(s, t) - exact).abs() < 1e-12, "eps {eps} s {s} t {t}");
                    let inc = m.second_moment(s) + m.second_moment(t) - 2.0 * exact;
                    assert!(inc <= m.increment_bound(s, t) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn fine_grid_always_sees_the_jump() {
        let m = IndicatorModel::new(0.05).unwrap();
        let grid: Vec<f64> = (0..=40).map(|i| i as f64 / 40.0).collect();
        for k in 0..2000 {
            let path = indicator_path(&m, &grid, ReplicateId { seed: 3, index: k }).unwrap();
            assert_eq!(path.values.iter().cloned().fold(0.0, f64::max), 1.0);
        }
        assert!(indicator_path(&m, &[], ReplicateId { seed: 3, index: 0 }).is_err());
    }
}
