//! Maximum-softmax-probability OOD flagging: an input counts as
//! in-distribution when `max sigma(z)` clears the fitted threshold.

use serde::{Deserialize, Serialize};

use crate::domain::{softmax, Logits, SelfAssessmentOutput};
use crate::error::{Error, Result};

/// MSP threshold in [0,1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OodThresholdModel {
    pub tau_ood: f64,
}

impl OodThresholdModel {
    pub fn new(tau_ood: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&tau_ood) || tau_ood.is_nan() {
            return Err(Error::Parameter(format!(
                "OOD threshold must lie in [0,1], got {tau_ood}"
            )));
        }
        Ok(Self { tau_ood })
    }
}

/// Score `z` and compare against the threshold; the comparison is
/// non-strict, so a score exactly at the threshold is in-distribution.
pub fn msp_ood(z: &Logits, model: &OodThresholdModel) -> Result<SelfAssessmentOutput> {
    let score = softmax(z, 1.0)?.max_prob();
    Ok(SelfAssessmentOutput::OodVerdict {
        score,
        is_ood: score < model.tau_ood,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn verdict(out: SelfAssessmentOutput) -> (f64, bool) {
        match out {
            SelfAssessmentOutput::OodVerdict { score, is_ood } => (score, is_ood),
            other => panic!("expected verdict, got {other:?}"),
        }
    }

    #[test]
    fn uniform_four_class_is_ood_at_half() {
        let m = OodThresholdModel::new(0.5).unwrap();
        let z = Logits::new(vec![0.0; 4]).unwrap();
        let (score, is_ood) = verdict(msp_ood(&z, &m).unwrap());
        assert!((score - 0.25).abs() < 1e-12);
        assert!(is_ood);
    }

    #[test]
    fn confident_input_is_in_distribution() {
        let m = OodThresholdModel::new(0.5).unwrap();
        // sigma(z) = (0.9, 0.1)
        let z = Logits::new(vec![(9.0_f64).ln(), 0.0]).unwrap();
        let (score, is_ood) = verdict(msp_ood(&z, &m).unwrap());
        assert!((score - 0.9).abs() < 1e-12);
        assert!(!is_ood);
    }

    #[test]
    fn score_exactly_at_threshold_is_in_distribution() {
        let m = OodThresholdModel::new(0.5).unwrap();
        let z = Logits::new(vec![0.0, 0.0]).unwrap();
        let (score, is_ood) = verdict(msp_ood(&z, &m).unwrap());
        assert_eq!(score, 0.5);
        assert!(!is_ood);
    }

    #[test]
    fn threshold_domain_enforced() {
        assert!(OodThresholdModel::new(-0.1).is_err());
        assert!(OodThresholdModel::new(1.1).is_err());
    }
}
