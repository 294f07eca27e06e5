//! Downstream decision policies: Bayes-optimal, confidence-threshold,
//! softmax-rational modeled humans, and confusion-matrix humans, plus the
//! expected-decision-cost evaluator that scores a (policy, self-assessment)
//! pair on a labeled test split.

use serde::{Deserialize, Serialize};

use crate::domain::{
    argmax_predict, softmax, CostMatrix, LabeledDataset, Prediction, ProbVector, SeaKind,
    SelfAssessmentOutput, Split,
};
use crate::error::{Error, Result};
use crate::sea::SeaModel;

/// Probability distribution over the action space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionDistribution(ProbVector);

impl ActionDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        Ok(Self(ProbVector::new(probs)?))
    }

    pub fn point_mass(action: usize, m: usize) -> Result<Self> {
        Ok(Self(ProbVector::point_mass(action, m)?))
    }

    pub fn probs(&self) -> &[f64] {
        self.0.probs()
    }

    pub fn m(&self) -> usize {
        self.0.dim()
    }
}

/// A decision-making policy mapping (prediction, self-assessment) to a
/// distribution over actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecisionPolicy {
    /// Takes the action minimizing expected cost under the assessed label
    /// distribution.
    BayesOptimal { cost: CostMatrix },
    /// Two-action rule on a scalar confidence; the comparison is
    /// non-strict, so confidence exactly at the cutoff selects
    /// `action_if_above`.
    Threshold {
        confidence_cutoff: f64,
        action_if_above: usize,
        action_if_below: usize,
        n_actions: usize,
    },
    /// Softmax-rational human blending the assessed distribution with the
    /// AI's point prediction under a subjective cost matrix.
    ModeledHuman {
        rationality: f64,
        trust: f64,
        subjective_cost: CostMatrix,
    },
    /// Human who picks a label from a prediction set according to a
    /// confusion row anchored on the AI prediction; only meaningful when
    /// actions coincide with labels.
    ConfusionHuman { confusion: Vec<Vec<f64>> },
}

impl DecisionPolicy {
    /// Validate internal invariants (index bounds, row-stochastic rows,
    /// parameter domains).
    pub fn validate(&self) -> Result<()> {
        match self {
            DecisionPolicy::BayesOptimal { .. } => Ok(()),
            DecisionPolicy::Threshold {
                confidence_cutoff,
                action_if_above,
                action_if_below,
                n_actions,
            } => {
                if !confidence_cutoff.is_finite() {
                    return Err(Error::Config("threshold cutoff must be finite".into()));
                }
                if *n_actions == 0 {
                    return Err(Error::Config("threshold policy needs at least one action".into()));
                }
                if *action_if_above >= *n_actions || *action_if_below >= *n_actions {
                    return Err(Error::Config(format!(
                        "threshold actions ({action_if_above}, {action_if_below}) outside action space of size {n_actions}"
                    )));
                }
                Ok(())
            }
            DecisionPolicy::ModeledHuman {
                rationality, trust, ..
            } => {
                if !(*rationality > 0.0) || !rationality.is_finite() {
                    return Err(Error::Config(format!(
                        "rationality must be positive and finite, got {rationality}"
                    )));
                }
                if !(0.0..=1.0).contains(trust) || trust.is_nan() {
                    return Err(Error::Config(format!("trust must lie in [0,1], got {trust}")));
                }
                Ok(())
            }
            DecisionPolicy::ConfusionHuman { confusion } => {
                let k = confusion.len();
                crate::sea::validate_row_stochastic(confusion, k)
            }
        }
    }

    /// Action space size this policy decides over.
    pub fn n_actions(&self) -> usize {
        match self {
            DecisionPolicy::BayesOptimal { cost } => cost.m(),
            DecisionPolicy::Threshold { n_actions, .. } => *n_actions,
            DecisionPolicy::ModeledHuman { subjective_cost, .. } => subjective_cost.m(),
            DecisionPolicy::ConfusionHuman { confusion } => confusion.len(),
        }
    }

    /// Which self-assessment representation this policy consumes.
    pub fn required_input(&self) -> SeaKind {
        match self {
            DecisionPolicy::BayesOptimal { .. } | DecisionPolicy::ModeledHuman { .. } => {
                SeaKind::Distribution
            }
            DecisionPolicy::Threshold { .. } => SeaKind::ScalarConfidence,
            DecisionPolicy::ConfusionHuman { .. } => SeaKind::PredictionSet,
        }
    }
}

/// Action minimizing expected cost under `g`; ties break toward the lowest
/// action index.
pub fn bayes_action(g: &ProbVector, cost: &CostMatrix) -> Result<usize> {
    if g.dim() != cost.k() {
        return Err(Error::Config(format!(
            "distribution over {} labels used with a {}-label cost matrix",
            g.dim(),
            cost.k()
        )));
    }
    let mut best = 0;
    let mut best_cost = cost.expected_cost_of_action(g, 0)?;
    for a in 1..cost.m() {
        let c = cost.expected_cost_of_action(g, a)?;
        if c < best_cost {
            best = a;
            best_cost = c;
        }
    }
    Ok(best)
}

/// Evaluate a policy on one (prediction, self-assessment) pair.
///
/// The self-assessment variant must match what the policy consumes;
/// mismatches are configuration errors, never coerced.
pub fn decide(
    policy: &DecisionPolicy,
    prediction: Prediction,
    sea: &SelfAssessmentOutput,
) -> Result<ActionDistribution> {
    let expected = policy.required_input();
    if sea.kind() != expected {
        return Err(Error::Config(format!(
            "policy expects a {expected} self-assessment, got {}",
            sea.kind()
        )));
    }
    match (policy, sea) {
        (DecisionPolicy::BayesOptimal { cost }, SelfAssessmentOutput::Distribution(g)) => {
            ActionDistribution::point_mass(bayes_action(g, cost)?, cost.m())
        }
        (
            DecisionPolicy::Threshold {
                confidence_cutoff,
                action_if_above,
                action_if_below,
                n_actions,
            },
            SelfAssessmentOutput::ScalarConfidence(c),
        ) => {
            let action = if c >= confidence_cutoff {
                *action_if_above
            } else {
                *action_if_below
            };
            ActionDistribution::point_mass(action, *n_actions)
        }
        (
            DecisionPolicy::ModeledHuman {
                rationality,
                trust,
                subjective_cost,
            },
            SelfAssessmentOutput::Distribution(g),
        ) => {
            let label = match prediction {
                Prediction::ConcreteLabel(y) => y,
                Prediction::Abstain => {
                    return Err(Error::Config(
                        "modeled human policy needs a concrete AI prediction".into(),
                    ))
                }
            };
            if label >= subjective_cost.k() {
                return Err(Error::Config(format!(
                    "prediction {label} outside {}-label cost matrix",
                    subjective_cost.k()
                )));
            }
            let m = subjective_cost.m();
            let mut blended = Vec::with_capacity(m);
            for a in 0..m {
                let under_g = subjective_cost.expected_cost_of_action(g, a)?;
                let under_point = subjective_cost.cost(label, a);
                blended.push(trust * under_g + (1.0 - trust) * under_point);
            }
            // softmax over negated costs; shift for numerical stability
            let min = blended.iter().copied().fold(f64::INFINITY, f64::min);
            let weights: Vec<f64> = blended
                .iter()
                .map(|c| (-rationality * (c - min)).exp())
                .collect();
            let sum: f64 = weights.iter().sum();
            ActionDistribution::new(weights.into_iter().map(|w| w / sum).collect())
        }
        (DecisionPolicy::ConfusionHuman { confusion }, SelfAssessmentOutput::PredictionSet(set)) => {
            let k = confusion.len();
            if let Some(&bad) = set.iter().find(|&&j| j >= k) {
                return Err(Error::Config(format!(
                    "prediction set member {bad} outside {k}-label confusion matrix"
                )));
            }
            let anchor = match prediction {
                Prediction::ConcreteLabel(y) if y < k => Some(y),
                Prediction::ConcreteLabel(y) => {
                    return Err(Error::Config(format!(
                        "prediction {y} outside {k}-label confusion matrix"
                    )))
                }
                Prediction::Abstain => None,
            };
            ActionDistribution::new(confusion_choice(confusion, anchor, set, k))
        }
        _ => unreachable!("variant compatibility checked above"),
    }
}

/// Label-choice distribution of the confusion-matrix human.
///
/// If the anchor label (the AI prediction) is in the set, the human picks
/// among the set proportionally to the anchor's confusion row; otherwise
/// uniformly over the set. An empty set leaves the human guessing uniformly
/// over all labels.
fn confusion_choice(
    confusion: &[Vec<f64>],
    anchor: Option<usize>,
    set: &[usize],
    k: usize,
) -> Vec<f64> {
    let mut out = vec![0.0; k];
    if set.is_empty() {
        out.fill(1.0 / k as f64);
        return out;
    }
    let row_mass = anchor
        .filter(|a| set.contains(a))
        .map(|a| (a, set.iter().map(|&j| confusion[a][j]).sum::<f64>()));
    match row_mass {
        Some((a, mass)) if mass > 0.0 => {
            for &j in set {
                out[j] = confusion[a][j] / mass;
            }
        }
        _ => {
            for &j in set {
                out[j] = 1.0 / set.len() as f64;
            }
        }
    }
    out
}

/// Bayes-rule fusion of a human label with the AI distribution:
/// `posterior(y) ∝ ai(y) * confusion[y][human_label]`. When every term is
/// zero the AI distribution is returned unchanged.
pub fn combine_human_ai(
    human_label: usize,
    ai_dist: &ProbVector,
    confusion: &[Vec<f64>],
) -> Result<ProbVector> {
    let k = ai_dist.dim();
    crate::sea::validate_row_stochastic(confusion, k)?;
    if human_label >= k {
        return Err(Error::Input(format!(
            "human label {human_label} outside {k}-label space"
        )));
    }
    let weighted: Vec<f64> = ai_dist
        .probs()
        .iter()
        .enumerate()
        .map(|(y, &p)| p * confusion[y][human_label])
        .collect();
    let total: f64 = weighted.iter().sum();
    if total <= 0.0 {
        return Ok(ai_dist.clone());
    }
    Ok(ProbVector::from_normalized(
        weighted.into_iter().map(|w| w / total).collect(),
    ))
}

/// Mean expected decision cost of `(policy, sea)` over the labeled test
/// split.
///
/// The average runs over examples; the inner expectation over the policy's
/// action distribution is computed exactly, so deterministic pipelines are
/// seed-invariant. The seed is accepted for forward compatibility with
/// stochastic self-assessments and recorded nowhere else.
pub fn expected_cost(
    policy: &DecisionPolicy,
    sea: &SeaModel,
    dataset: &LabeledDataset,
    cost: &CostMatrix,
    _seed: u64,
) -> Result<f64> {
    expected_cost_on_split(policy, sea, dataset, cost, Split::Test)
}

/// Same evaluation over a chosen split; used internally when tuning against
/// the calibration half.
pub(crate) fn expected_cost_on_split(
    policy: &DecisionPolicy,
    sea: &SeaModel,
    dataset: &LabeledDataset,
    cost: &CostMatrix,
    split: Split,
) -> Result<f64> {
    policy.validate()?;
    if policy.n_actions() != cost.m() {
        return Err(Error::Config(format!(
            "policy decides over {} actions but cost matrix has {}",
            policy.n_actions(),
            cost.m()
        )));
    }
    if dataset.k() != cost.k() {
        return Err(Error::Config(format!(
            "dataset has {} classes but cost matrix has {}",
            dataset.k(),
            cost.k()
        )));
    }
    let mut total = 0.0;
    let mut n = 0usize;
    for ex in dataset.split_examples(split) {
        let y = ex
            .label
            .ok_or_else(|| Error::Data(format!("example {:?} has no label", ex.id)))?;
        let assessment = sea.apply(&ex.logits)?;
        let prediction = argmax_predict(&softmax(&ex.logits, 1.0)?);
        let actions = decide(policy, prediction, &assessment)?;
        let example_cost: f64 = actions
            .probs()
            .iter()
            .enumerate()
            .map(|(a, &p)| p * cost.cost(y, a))
            .sum();
        total += example_cost;
        n += 1;
    }
    if n == 0 {
        return Err(Error::Data("evaluation split is empty".into()));
    }
    Ok(total / n as f64)
}
