//! Temperature scaling: fit `T` by NLL minimization on a calibration
//! split, apply as `sigma(z/T)`.

use serde::{Deserialize, Serialize};

use crate::domain::{softmax, LabeledDataset, Logits, SelfAssessmentOutput};
use crate::error::{Error, Result};

/// Search range and schedule for the 1-D NLL minimization: a geometric
/// grid bracket followed by golden-section refinement.
pub const T_MIN: f64 = 0.05;
pub const T_MAX: f64 = 20.0;
const GRID_POINTS: usize = 400;
const GOLDEN_STEPS: usize = 40;

/// Probability floor used inside log-likelihoods so NLL stays finite.
pub const PROB_FLOOR: f64 = 1e-12;

/// Minimum calibration examples required to fit a temperature.
pub const MIN_FIT_EXAMPLES: usize = 10;

/// Fitted softmax temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperatureModel {
    pub t: f64,
}

impl TemperatureModel {
    pub fn new(t: f64) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Parameter(format!(
                "temperature must be positive and finite, got {t}"
            )));
        }
        Ok(Self { t })
    }

    /// Temperature-scaled label distribution for `z`.
    pub fn apply(&self, z: &Logits) -> Result<SelfAssessmentOutput> {
        Ok(SelfAssessmentOutput::Distribution(softmax(z, self.t)?))
    }

    /// Max probability of the scaled distribution, as a scalar confidence.
    pub fn apply_confidence(&self, z: &Logits) -> Result<SelfAssessmentOutput> {
        Ok(SelfAssessmentOutput::ScalarConfidence(
            softmax(z, self.t)?.max_prob(),
        ))
    }
}

/// Mean negative log-likelihood of `sigma(z/T)` at the true labels.
pub fn mean_nll(pairs: &[(&Logits, usize)], temperature: f64) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Data("cannot compute NLL on an empty set".into()));
    }
    let mut total = 0.0;
    for (z, y) in pairs {
        let p = softmax(z, temperature)?;
        total -= p.probs()[*y].max(PROB_FLOOR).ln();
    }
    Ok(total / pairs.len() as f64)
}

/// Fit `T` minimizing mean NLL over the calibration split.
///
/// Search: 400-point geometric grid on [0.05, 20], then 40 golden-section
/// steps on the interval bracketing the grid minimum. `T = 1` is always a
/// candidate, so the returned objective never exceeds the unscaled one.
pub fn fit_temperature_nll(cal: &LabeledDataset) -> Result<TemperatureModel> {
    let labeled = cal.calibration_labeled()?;
    if labeled.len() < MIN_FIT_EXAMPLES {
        return Err(Error::Data(format!(
            "temperature fit needs at least {MIN_FIT_EXAMPLES} labeled calibration examples, got {}",
            labeled.len()
        )));
    }
    let pairs: Vec<(&Logits, usize)> = labeled.iter().map(|(ex, y)| (&ex.logits, *y)).collect();
    let objective = |t: f64| mean_nll(&pairs, t);

    let ratio = (T_MAX / T_MIN).powf(1.0 / (GRID_POINTS as f64 - 1.0));
    let grid: Vec<f64> = (0..GRID_POINTS).map(|i| T_MIN * ratio.powi(i as i32)).collect();

    let mut best_t = grid[0];
    let mut best_obj = f64::INFINITY;
    let mut best_idx = 0;
    for (i, &t) in grid.iter().enumerate() {
        let obj = objective(t)?;
        if obj < best_obj {
            best_obj = obj;
            best_t = t;
            best_idx = i;
        }
    }

    // Golden-section refinement on the bracketing interval.
    let mut lo = grid[best_idx.saturating_sub(1)];
    let mut hi = grid[(best_idx + 1).min(GRID_POINTS - 1)];
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = objective(x1)?;
    let mut f2 = objective(x2)?;
    for _ in 0..GOLDEN_STEPS {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = objective(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = objective(x2)?;
        }
        let (x, f) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
        if f < best_obj {
            best_obj = f;
            best_t = x;
        }
    }

    // T = 1 is the no-op baseline; never return anything worse.
    if objective(1.0)? < best_obj {
        best_t = 1.0;
    }
    TemperatureModel::new(best_t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{LabelSpace, LabeledExample, Split};

    fn tiny_dataset(n: usize) -> LabeledDataset {
        let ls = LabelSpace::synthetic(2).unwrap();
        let examples = (0..n)
            .map(|i| LabeledExample {
                id: format!("e{i}"),
                logits: Logits::new(vec![1.0, -1.0]).unwrap(),
                label: Some(0),
                split: Split::Calibration,
            })
            .collect();
        LabeledDataset::new(ls, examples).unwrap()
    }

    #[test]
    fn fit_rejects_too_few_examples() {
        let err = fit_temperature_nll(&tiny_dataset(3)).unwrap_err();
        assert!(matches!(err, Error::Data(_)));
    }

    #[test]
    fn apply_identity_temperature_matches_softmax() {
        let m = TemperatureModel::new(1.0).unwrap();
        let z = Logits::new(vec![0.3, -0.7, 1.1]).unwrap();
        let out = m.apply(&z).unwrap();
        let expect = softmax(&z, 1.0).unwrap();
        match out {
            SelfAssessmentOutput::Distribution(p) => assert_eq!(p, expect),
            other => panic!("expected distribution, got {other:?}"),
        }
    }

    #[test]
    fn apply_large_temperature_approaches_uniform() {
        let m = TemperatureModel::new(1000.0).unwrap();
        let z = Logits::new(vec![3.0, 0.0, 0.0]).unwrap();
        match m.apply(&z).unwrap() {
            SelfAssessmentOutput::Distribution(p) => {
                for &v in p.probs() {
                    assert!((v - 1.0 / 3.0).abs() < 1e-3);
                }
            }
            other => panic!("expected distribution, got {other:?}"),
        }
    }

    #[test]
    fn apply_halved_logits() {
        // sigma((2,0)/2) = sigma((1,0)) = (e/(e+1), 1/(e+1))
        let m = TemperatureModel::new(2.0).unwrap();
        let z = Logits::new(vec![2.0, 0.0]).unwrap();
        match m.apply(&z).unwrap() {
            SelfAssessmentOutput::Distribution(p) => {
                let e = std::f64::consts::E;
                assert!((p.probs()[0] - e / (e + 1.0)).abs() < 1e-12);
                assert!((p.probs()[1] - 1.0 / (e + 1.0)).abs() < 1e-12);
            }
            other => panic!("expected distribution, got {other:?}"),
        }
    }

    #[test]
    fn model_rejects_non_positive_temperature() {
        assert!(TemperatureModel::new(0.0).is_err());
        assert!(TemperatureModel::new(-1.0).is_err());
        assert!(TemperatureModel::new(f64::NAN).is_err());
    }
}
