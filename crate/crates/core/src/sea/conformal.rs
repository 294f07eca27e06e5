//! Split conformal prediction sets with the standard quantile rule.
//!
//! Nonconformity score: `1 - sigma(z)[y]`. The fitted threshold is the
//! `ceil((n+1)(1-alpha))`-th smallest calibration score; when that rank
//! exceeds `n` the threshold is infinite and every set is the full label
//! set.

use serde::{Deserialize, Serialize};

use crate::domain::{softmax, LabeledDataset, Logits, SelfAssessmentOutput};
use crate::error::{Error, Result};

/// Fitted conformal threshold. `tau` may be `+inf` (full-set sentinel),
/// which serializes as `null`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConformalModel {
    pub alpha: f64,
    #[serde(with = "infinite_as_null")]
    pub tau: f64,
    pub n_cal: usize,
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Nonconformity score of label `y` for logits `z`.
pub fn nonconformity(z: &Logits, y: usize) -> Result<f64> {
    Ok(1.0 - softmax(z, 1.0)?.probs()[y])
}

/// Conformal quantile rank `ceil((n+1)(1-alpha))`, guarded against float
/// representation error in the product (e.g. `10 * 0.9` landing a hair
/// above 9).
fn quantile_rank(n: usize, alpha: f64) -> usize {
    let raw = (n as f64 + 1.0) * (1.0 - alpha);
    let nearest = raw.round();
    if (raw - nearest).abs() < 1e-9 {
        nearest as usize
    } else {
        raw.ceil() as usize
    }
}

/// Fit the conformal threshold on the calibration split at error rate
/// `alpha`.
pub fn fit_conformal(cal: &LabeledDataset, alpha: f64) -> Result<ConformalModel> {
    let labeled = cal.calibration_labeled()?;
    let scores: Vec<f64> = labeled
        .iter()
        .map(|(ex, y)| nonconformity(&ex.logits, *y))
        .collect::<Result<_>>()?;
    fit_conformal_from_scores(&scores, alpha)
}

/// Fit the threshold directly from precomputed nonconformity scores.
pub fn fit_conformal_from_scores(scores: &[f64], alpha: f64) -> Result<ConformalModel> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Parameter(format!(
            "conformal alpha must lie in (0,1), got {alpha}"
        )));
    }
    if scores.is_empty() {
        return Err(Error::Data("conformal fit needs at least one score".into()));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));

    let n = sorted.len();
    let rank = quantile_rank(n, alpha);
    let tau = if rank > n {
        f64::INFINITY
    } else {
        sorted[rank - 1]
    };
    Ok(ConformalModel {
        alpha,
        tau,
        n_cal: n,
    })
}

impl ConformalModel {
    /// Prediction set `{ y : 1 - sigma(z)[y] <= tau }`, sorted ascending.
    pub fn prediction_set(&self, z: &Logits) -> Result<Vec<usize>> {
        if self.tau.is_infinite() {
            return Ok((0..z.dim()).collect());
        }
        let p = softmax(z, 1.0)?;
        Ok(p.probs()
            .iter()
            .enumerate()
            .filter(|(_, &prob)| 1.0 - prob <= self.tau)
            .map(|(i, _)| i)
            .collect())
    }

    pub fn apply(&self, z: &Logits) -> Result<SelfAssessmentOutput> {
        Ok(SelfAssessmentOutput::PredictionSet(self.prediction_set(z)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{LabelSpace, LabeledExample, Split};

    /// Calibration set over k=2 whose nonconformity scores are exactly
    /// `scores` (all labels 0, sigma(z)[0] = 1 - score).
    fn dataset_with_scores(scores: &[f64]) -> LabeledDataset {
        let examples = scores
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let p = 1.0 - s;
                LabeledExample {
                    id: format!("e{i}"),
                    logits: Logits::new(vec![(p / (1.0 - p)).ln(), 0.0]).unwrap(),
                    label: Some(0),
                    split: Split::Calibration,
                }
            })
            .collect();
        LabeledDataset::new(LabelSpace::synthetic(2).unwrap(), examples).unwrap()
    }

    #[test]
    fn quantile_rule_nine_scores() {
        let scores: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
        let m = fit_conformal(&dataset_with_scores(&scores), 0.1).unwrap();
        // rank = ceil(10 * 0.9) = 9 -> ninth smallest = 0.9
        assert!((m.tau - 0.9).abs() < 1e-12);
        assert_eq!(m.n_cal, 9);
    }

    #[test]
    fn rank_overflow_gives_full_sets() {
        let scores: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
        let m = fit_conformal(&dataset_with_scores(&scores), 0.05).unwrap();
        assert!(m.tau.is_infinite());
        let z = Logits::new(vec![0.0, 0.0, 0.0]).unwrap();
        assert_eq!(m.prediction_set(&z).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn single_score_calibration() {
        let m = fit_conformal(&dataset_with_scores(&[0.3]), 0.5).unwrap();
        // rank = ceil(2 * 0.5) = 1 -> smallest = 0.3
        assert!((m.tau - 0.3).abs() < 1e-12);
    }

    #[test]
    fn alpha_domain_enforced() {
        let ds = dataset_with_scores(&[0.3]);
        assert!(matches!(fit_conformal(&ds, 0.0), Err(Error::Parameter(_))));
        assert!(matches!(fit_conformal(&ds, 1.0), Err(Error::Parameter(_))));
        assert!(matches!(fit_conformal(&ds, -0.2), Err(Error::Parameter(_))));
    }

    #[test]
    fn memberwise_set_construction() {
        let m = ConformalModel {
            alpha: 0.1,
            tau: 0.35,
            n_cal: 100,
        };
        // sigma(z) = (0.7, 0.2, 0.1): only 1 - 0.7 = 0.3 <= 0.35
        let z = Logits::new(vec![
            (0.7_f64).ln(),
            (0.2_f64).ln(),
            (0.1_f64).ln(),
        ])
        .unwrap();
        assert_eq!(m.prediction_set(&z).unwrap(), vec![0]);
    }

    #[test]
    fn zero_tau_can_yield_empty_set() {
        let m = ConformalModel {
            alpha: 0.5,
            tau: 0.0,
            n_cal: 10,
        };
        let z = Logits::new(vec![1.0, 0.0]).unwrap();
        assert!(m.prediction_set(&z).unwrap().is_empty());
    }

    #[test]
    fn tau_serializes_infinity_as_null() {
        let m = ConformalModel {
            alpha: 0.05,
            tau: f64::INFINITY,
            n_cal: 9,
        };
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"tau\":null"));
        let back: ConformalModel = serde_json::from_str(&s).unwrap();
        assert!(back.tau.is_infinite());
    }
}
