//! Self-assessment methods: fitting parameters on a calibration split and
//! applying them to logits to produce confidences, distributions,
//! prediction sets, or OOD verdicts.

mod alpha_search;
mod binning;
mod conformal;
mod decision_cal;
mod ood;
mod sigmoid;
mod temperature;

pub use alpha_search::{search_conformal_alpha, AlphaSearchResult};
pub(crate) use alpha_search::validate_row_stochastic;
pub use binning::{fit_histogram_binning, BinningModel};
pub use conformal::{fit_conformal, fit_conformal_from_scores, nonconformity, ConformalModel};
pub use decision_cal::{fit_decision_calibration, CorrectionRound, DecisionCalibrationModel};
pub use ood::{msp_ood, OodThresholdModel};
pub use sigmoid::{sigmoid_scale, SigmoidScalingModel};
pub use temperature::{fit_temperature_nll, mean_nll, TemperatureModel, PROB_FLOOR, T_MAX, T_MIN};

use serde::{Deserialize, Serialize};

use crate::domain::{Logits, SeaKind, SelfAssessmentOutput};
use crate::error::{Error, Result};

/// Any fitted self-assessment, ready to score logits.
///
/// Immutable once fitted; the same input always yields the same output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", content = "params", rename_all = "snake_case")]
pub enum SeaModel {
    /// Unscaled `sigma(z)` label distribution.
    Raw,
    /// Temperature-scaled label distribution.
    Temperature(TemperatureModel),
    /// Max probability of the temperature-scaled distribution.
    TemperatureConfidence(TemperatureModel),
    /// Histogram-binned confidence.
    HistogramBinning(BinningModel),
    /// Conformal prediction set.
    Conformal(ConformalModel),
    /// Decision-calibrated label distribution.
    DecisionCalibration(DecisionCalibrationModel),
    /// MSP out-of-distribution verdict.
    MspOod(OodThresholdModel),
    /// Sigmoid-recalibrated advice confidence for binary tasks; the advice
    /// score is the logit margin in favor of `positive_label`.
    Sigmoid {
        model: SigmoidScalingModel,
        positive_label: usize,
    },
}

impl SeaModel {
    /// Which output representation this model emits.
    pub fn output_kind(&self) -> SeaKind {
        match self {
            SeaModel::Raw | SeaModel::Temperature(_) | SeaModel::DecisionCalibration(_) => {
                SeaKind::Distribution
            }
            SeaModel::TemperatureConfidence(_)
            | SeaModel::HistogramBinning(_)
            | SeaModel::Sigmoid { .. } => SeaKind::ScalarConfidence,
            SeaModel::Conformal(_) => SeaKind::PredictionSet,
            SeaModel::MspOod(_) => SeaKind::OodVerdict,
        }
    }

    /// Stable method name, matching the config-file spelling.
    pub fn method_name(&self) -> &'static str {
        match self {
            SeaModel::Raw => "raw",
            SeaModel::Temperature(_) => "temperature",
            SeaModel::TemperatureConfidence(_) => "temperature_confidence",
            SeaModel::HistogramBinning(_) => "histogram_binning",
            SeaModel::Conformal(_) => "conformal",
            SeaModel::DecisionCalibration(_) => "decision_calibration",
            SeaModel::MspOod(_) => "msp_ood",
            SeaModel::Sigmoid { .. } => "sigmoid",
        }
    }

    /// Score one logit vector.
    pub fn apply(&self, z: &Logits) -> Result<SelfAssessmentOutput> {
        match self {
            SeaModel::Raw => Ok(SelfAssessmentOutput::Distribution(crate::domain::softmax(
                z, 1.0,
            )?)),
            SeaModel::Temperature(m) => m.apply(z),
            SeaModel::TemperatureConfidence(m) => m.apply_confidence(z),
            SeaModel::HistogramBinning(m) => m.apply(z),
            SeaModel::Conformal(m) => m.apply(z),
            SeaModel::DecisionCalibration(m) => m.apply(z),
            SeaModel::MspOod(m) => msp_ood(z, m),
            SeaModel::Sigmoid {
                model,
                positive_label,
            } => {
                if z.dim() != 2 {
                    return Err(Error::Config(format!(
                        "sigmoid advice scaling is binary-only, got {} classes",
                        z.dim()
                    )));
                }
                if *positive_label > 1 {
                    return Err(Error::Config(format!(
                        "positive_label {positive_label} outside binary label space"
                    )));
                }
                let advice = z.values()[*positive_label] - z.values()[1 - *positive_label];
                sigmoid_scale(advice, model)
            }
        }
    }
}
