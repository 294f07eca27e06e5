//! Sign-preserving sigmoid recalibration of a scalar advice score for
//! binary tasks: `g(A) = 1 / (1 + exp(-sign(A)(a|A| + b)))`.

use serde::{Deserialize, Serialize};

use crate::domain::SelfAssessmentOutput;
use crate::error::{Error, Result};

/// Non-negative scale and shift applied to the advice magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmoidScalingModel {
    pub a: f64,
    pub b: f64,
}

impl SigmoidScalingModel {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a >= 0.0) || !(b >= 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(Error::Parameter(format!(
                "sigmoid scaling needs a >= 0 and b >= 0, got a={a}, b={b}"
            )));
        }
        Ok(Self { a, b })
    }
}

/// Recalibrated confidence for advice score `advice`. `sign(0) = 0`, so a
/// zero advice score always maps to 0.5.
pub fn sigmoid_scale(advice: f64, model: &SigmoidScalingModel) -> Result<SelfAssessmentOutput> {
    if !advice.is_finite() {
        return Err(Error::Input(format!("advice score must be finite, got {advice}")));
    }
    let sign = if advice > 0.0 {
        1.0
    } else if advice < 0.0 {
        -1.0
    } else {
        0.0
    };
    let value = 1.0 / (1.0 + (-sign * (model.a * advice.abs() + model.b)).exp());
    Ok(SelfAssessmentOutput::ScalarConfidence(value))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conf(out: SelfAssessmentOutput) -> f64 {
        match out {
            SelfAssessmentOutput::ScalarConfidence(c) => c,
            other => panic!("expected scalar, got {other:?}"),
        }
    }

    #[test]
    fn zero_advice_is_half() {
        let m = SigmoidScalingModel::new(3.0, 7.0).unwrap();
        assert_eq!(conf(sigmoid_scale(0.0, &m).unwrap()), 0.5);
    }

    #[test]
    fn large_advice_saturates_to_one() {
        let m = SigmoidScalingModel::new(1.0, 0.0).unwrap();
        assert!(conf(sigmoid_scale(1e6, &m).unwrap()) > 1.0 - 1e-12);
    }

    #[test]
    fn unit_advice_matches_logistic() {
        let m = SigmoidScalingModel::new(1.0, 0.0).unwrap();
        let expect = 1.0 / (1.0 + (-1.0_f64).exp());
        assert!((conf(sigmoid_scale(1.0, &m).unwrap()) - expect).abs() < 1e-12);
        assert!((expect - 0.7311).abs() < 1e-4);
    }

    #[test]
    fn monotone_in_advice_for_positive_scale() {
        let m = SigmoidScalingModel::new(2.0, 0.5).unwrap();
        let mut last = 0.0;
        for i in -50..=50 {
            let c = conf(sigmoid_scale(i as f64 / 10.0, &m).unwrap());
            assert!(c >= last - 1e-15, "non-monotone at {i}");
            last = c;
        }
    }

    #[test]
    fn negative_parameters_rejected() {
        assert!(SigmoidScalingModel::new(-1.0, 0.0).is_err());
        assert!(SigmoidScalingModel::new(0.0, -1.0).is_err());
        let m = SigmoidScalingModel::new(1.0, 1.0).unwrap();
        assert!(sigmoid_scale(f64::NAN, &m).is_err());
    }
}
