//! Domain types and the elementary prediction operations every other
//! module builds on: label/action spaces, logits, simplex vectors, cost
//! matrices, labeled datasets, and the softmax/argmax/reject primitives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for accepting a near-simplex vector before renormalizing.
/// Anything further from the simplex than this is rejected as an input
/// error rather than silently fixed up.
pub const SIMPLEX_TOL: f64 = 1e-6;

// ---------------------------------------------------------------------------
// Label and action spaces
// ---------------------------------------------------------------------------

/// Ordered set of class identifiers; `k >= 2`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct LabelSpace {
    names: Vec<String>,
}

impl LabelSpace {
    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.len() < 2 {
            return Err(Error::Input(format!(
                "label space needs at least 2 classes, got {}",
                names.len()
            )));
        }
        check_unique(&names, "label")?;
        Ok(Self { names })
    }

    /// Synthetic space `class_0 .. class_{k-1}`.
    pub fn synthetic(k: usize) -> Result<Self> {
        Self::new((0..k).map(|i| format!("class_{i}")).collect())
    }

    pub fn k(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

impl TryFrom<Vec<String>> for LabelSpace {
    type Error = Error;
    fn try_from(names: Vec<String>) -> Result<Self> {
        Self::new(names)
    }
}

impl From<LabelSpace> for Vec<String> {
    fn from(s: LabelSpace) -> Vec<String> {
        s.names
    }
}

/// Ordered set of action identifiers; `m >= 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct ActionSpace {
    names: Vec<String>,
}

impl ActionSpace {
    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::Input("action space needs at least 1 action".into()));
        }
        check_unique(&names, "action")?;
        Ok(Self { names })
    }

    pub fn m(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

impl TryFrom<Vec<String>> for ActionSpace {
    type Error = Error;
    fn try_from(names: Vec<String>) -> Result<Self> {
        Self::new(names)
    }
}

impl From<ActionSpace> for Vec<String> {
    fn from(s: ActionSpace) -> Vec<String> {
        s.names
    }
}

fn check_unique(names: &[String], what: &str) -> Result<()> {
    for (i, a) in names.iter().enumerate() {
        if names[..i].contains(a) {
            return Err(Error::Input(format!("duplicate {what} name {a:?}")));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Logits and probability vectors
// ---------------------------------------------------------------------------

/// Unscaled log-score vector produced by a forward model. All entries finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Logits {
    values: Vec<f64>,
}

impl Logits {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Input("logit vector must be non-empty".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Input(format!("non-finite logit entry {v}")));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

impl TryFrom<Vec<f64>> for Logits {
    type Error = Error;
    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<Logits> for Vec<f64> {
    fn from(l: Logits) -> Vec<f64> {
        l.values
    }
}

/// Point on the probability simplex over `k` outcomes.
///
/// Construction renormalizes inputs that are within [`SIMPLEX_TOL`] of the
/// simplex (tiny negatives clipped, sum rescaled to 1) and rejects anything
/// worse, so accumulated float error is tolerated without masking bugs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbVector {
    probs: Vec<f64>,
}

impl ProbVector {
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Input("probability vector must be non-empty".into()));
        }
        let mut sum = 0.0;
        for p in &mut probs {
            if !p.is_finite() {
                return Err(Error::Input(format!("non-finite probability entry {p}")));
            }
            if *p < 0.0 {
                if *p < -SIMPLEX_TOL {
                    return Err(Error::Input(format!("negative probability entry {p}")));
                }
                *p = 0.0;
            }
            sum += *p;
        }
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::Input(format!(
                "probabilities sum to {sum}, too far from 1"
            )));
        }
        for p in &mut probs {
            *p /= sum;
        }
        Ok(Self { probs })
    }

    /// Uniform distribution over `k` outcomes.
    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Input("probability vector must be non-empty".into()));
        }
        Ok(Self {
            probs: vec![1.0 / k as f64; k],
        })
    }

    /// Point mass on `index`.
    pub fn point_mass(index: usize, k: usize) -> Result<Self> {
        if index >= k {
            return Err(Error::Input(format!("point mass index {index} >= {k}")));
        }
        let mut probs = vec![0.0; k];
        probs[index] = 1.0;
        Ok(Self { probs })
    }

    /// Internal fast path for vectors known to already lie on the simplex.
    pub(crate) fn from_normalized(probs: Vec<f64>) -> Self {
        debug_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn dim(&self) -> usize {
        self.probs.len()
    }

    /// Index of the largest entry; ties break toward the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, p) in self.probs.iter().enumerate().skip(1) {
            if *p > self.probs[best] {
                best = i;
            }
        }
        best
    }

    pub fn max_prob(&self) -> f64 {
        self.probs[self.argmax()]
    }
}

impl TryFrom<Vec<f64>> for ProbVector {
    type Error = Error;
    fn try_from(probs: Vec<f64>) -> Result<Self> {
        Self::new(probs)
    }
}

impl From<ProbVector> for Vec<f64> {
    fn from(p: ProbVector) -> Vec<f64> {
        p.probs
    }
}

// ---------------------------------------------------------------------------
// Predictions and self-assessment outputs
// ---------------------------------------------------------------------------

/// A committed label prediction or an explicit abstention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prediction {
    ConcreteLabel(usize),
    Abstain,
}

/// The value a fitted self-assessment hands to the downstream decision-maker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelfAssessmentOutput {
    /// Confidence in the model's prediction, in [0,1].
    ScalarConfidence(f64),
    /// Full recalibrated label distribution.
    Distribution(ProbVector),
    /// Discrete prediction set (sorted label indices).
    PredictionSet(Vec<usize>),
    /// OOD score plus the thresholded in/out verdict.
    OodVerdict { score: f64, is_ood: bool },
}

impl SelfAssessmentOutput {
    pub fn kind(&self) -> SeaKind {
        match self {
            SelfAssessmentOutput::ScalarConfidence(_) => SeaKind::ScalarConfidence,
            SelfAssessmentOutput::Distribution(_) => SeaKind::Distribution,
            SelfAssessmentOutput::PredictionSet(_) => SeaKind::PredictionSet,
            SelfAssessmentOutput::OodVerdict { .. } => SeaKind::OodVerdict,
        }
    }
}

/// Variant tag for [`SelfAssessmentOutput`], used to validate that a policy
/// is fed the representation it expects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeaKind {
    ScalarConfidence,
    Distribution,
    PredictionSet,
    OodVerdict,
}

impl std::fmt::Display for SeaKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SeaKind::ScalarConfidence => "scalar_confidence",
            SeaKind::Distribution => "distribution",
            SeaKind::PredictionSet => "prediction_set",
            SeaKind::OodVerdict => "ood_verdict",
        };
        f.write_str(s)
    }
}

// ---------------------------------------------------------------------------
// Cost matrix
// ---------------------------------------------------------------------------

/// Per (true state, action) decision cost. Entries are unitless relative
/// costs; only their ordering and gaps carry meaning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CostMatrixRepr", into = "CostMatrixRepr")]
pub struct CostMatrix {
    labels: LabelSpace,
    actions: ActionSpace,
    costs: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct CostMatrixRepr {
    labels: LabelSpace,
    actions: ActionSpace,
    costs: Vec<Vec<f64>>,
}

impl CostMatrix {
    pub fn new(labels: LabelSpace, actions: ActionSpace, costs: Vec<Vec<f64>>) -> Result<Self> {
        if costs.len() != labels.k() {
            return Err(Error::Config(format!(
                "cost matrix has {} rows for {} labels",
                costs.len(),
                labels.k()
            )));
        }
        for (y, row) in costs.iter().enumerate() {
            if row.len() != actions.m() {
                return Err(Error::Config(format!(
                    "cost row {} has {} entries for {} actions",
                    y,
                    row.len(),
                    actions.m()
                )));
            }
            if let Some(c) = row.iter().find(|c| !c.is_finite()) {
                return Err(Error::Input(format!("non-finite cost entry {c} in row {y}")));
            }
        }
        Ok(Self {
            labels,
            actions,
            costs,
        })
    }

    pub fn labels(&self) -> &LabelSpace {
        &self.labels
    }

    pub fn actions(&self) -> &ActionSpace {
        &self.actions
    }

    pub fn k(&self) -> usize {
        self.labels.k()
    }

    pub fn m(&self) -> usize {
        self.actions.m()
    }

    /// Cost of taking `action` when the true state is `label`.
    pub fn cost(&self, label: usize, action: usize) -> f64 {
        self.costs[label][action]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.costs
    }

    pub fn min_entry(&self) -> f64 {
        self.costs
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_entry(&self) -> f64 {
        self.costs
            .iter()
            .flatten()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Expected cost of `action` under label distribution `g`.
    pub fn expected_cost_of_action(&self, g: &ProbVector, action: usize) -> Result<f64> {
        if g.dim() != self.k() {
            return Err(Error::Config(format!(
                "distribution over {} labels used with a {}-label cost matrix",
                g.dim(),
                self.k()
            )));
        }
        Ok(g.probs()
            .iter()
            .zip(self.costs.iter())
            .map(|(p, row)| p * row[action])
            .sum())
    }
}

impl TryFrom<CostMatrixRepr> for CostMatrix {
    type Error = Error;
    fn try_from(r: CostMatrixRepr) -> Result<Self> {
        Self::new(r.labels, r.actions, r.costs)
    }
}

impl From<CostMatrix> for CostMatrixRepr {
    fn from(c: CostMatrix) -> CostMatrixRepr {
        CostMatrixRepr {
            labels: c.labels,
            actions: c.actions,
            costs: c.costs,
        }
    }
}

// ---------------------------------------------------------------------------
// Labeled datasets
// ---------------------------------------------------------------------------

/// Which half of the workflow an example belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Calibration,
    Test,
}

/// One example: an opaque id, the forward model's logits, and an optional
/// ground-truth label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub id: String,
    pub logits: Logits,
    pub label: Option<usize>,
    pub split: Split,
}

/// Collection of examples sharing a label space and logit dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    label_space: LabelSpace,
    examples: Vec<LabeledExample>,
}

impl LabeledDataset {
    pub fn new(label_space: LabelSpace, examples: Vec<LabeledExample>) -> Result<Self> {
        let k = label_space.k();
        for ex in &examples {
            if ex.logits.dim() != k {
                return Err(Error::Data(format!(
                    "example {:?} has {} logits for {} classes",
                    ex.id,
                    ex.logits.dim(),
                    k
                )));
            }
            if let Some(y) = ex.label {
                if y >= k {
                    return Err(Error::Data(format!(
                        "example {:?} has label {} >= {}",
                        ex.id, y, k
                    )));
                }
            }
        }
        Ok(Self {
            label_space,
            examples,
        })
    }

    pub fn label_space(&self) -> &LabelSpace {
        &self.label_space
    }

    pub fn k(&self) -> usize {
        self.label_space.k()
    }

    pub fn examples(&self) -> &[LabeledExample] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn split_examples(&self, split: Split) -> impl Iterator<Item = &LabeledExample> {
        self.examples.iter().filter(move |ex| ex.split == split)
    }

    /// Calibration-split examples paired with their labels; errors if the
    /// split is empty or contains an unlabeled example.
    pub fn calibration_labeled(&self) -> Result<Vec<(&LabeledExample, usize)>> {
        let mut out = Vec::new();
        for ex in self.split_examples(Split::Calibration) {
            match ex.label {
                Some(y) => out.push((ex, y)),
                None => {
                    return Err(Error::Data(format!(
                        "calibration example {:?} has no label",
                        ex.id
                    )))
                }
            }
        }
        if out.is_empty() {
            return Err(Error::Data("calibration split is empty".into()));
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// Elementary operations
// ---------------------------------------------------------------------------

/// Temperature-scaled softmax `sigma(z/T)`.
///
/// Numerically stable (max-shifted); preserves the argmax for every `T > 0`
/// and returns strictly positive entries for finite logits.
pub fn softmax(z: &Logits, temperature: f64) -> Result<ProbVector> {
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(Error::Parameter(format!(
            "temperature must be positive and finite, got {temperature}"
        )));
    }
    let scaled: Vec<f64> = z.values().iter().map(|v| v / temperature).collect();
    let max = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scaled.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(ProbVector::from_normalized(
        exps.into_iter().map(|e| e / sum).collect(),
    ))
}

/// Predicted label = index of the largest probability; ties break toward
/// the lowest index.
pub fn argmax_predict(p: &ProbVector) -> Prediction {
    Prediction::ConcreteLabel(p.argmax())
}

/// Abstains when the top probability falls below `threshold`, otherwise
/// predicts the argmax. The comparison is non-strict: a top probability
/// exactly at the threshold still yields a concrete prediction.
pub fn reject_predict(p: &ProbVector, threshold: f64) -> Result<Prediction> {
    if !(0.0..=1.0).contains(&threshold) || threshold.is_nan() {
        return Err(Error::Parameter(format!(
            "reject threshold must lie in [0,1], got {threshold}"
        )));
    }
    if p.max_prob() >= threshold {
        Ok(argmax_predict(p))
    } else {
        Ok(Prediction::Abstain)
    }
}

/// Family of scalar confidence read-outs of a label distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfidenceKind {
    /// Largest probability.
    MaxProb,
    /// Largest minus second-largest probability.
    Top2Margin,
    /// `1 - H(p)/ln k`, so a point mass scores 1 and uniform scores 0.
    NegEntropy,
}

/// Scalar confidence in [0,1] extracted from a label distribution.
pub fn scalar_confidence(p: &ProbVector, kind: ConfidenceKind) -> Result<f64> {
    match kind {
        ConfidenceKind::MaxProb => Ok(p.max_prob()),
        ConfidenceKind::Top2Margin => {
            if p.dim() < 2 {
                return Err(Error::Input(
                    "top2_margin needs at least 2 classes".into(),
                ));
            }
            let mut top = f64::NEG_INFINITY;
            let mut second = f64::NEG_INFINITY;
            for &v in p.probs() {
                if v > top {
                    second = top;
                    top = v;
                } else if v > second {
                    second = v;
                }
            }
            Ok(top - second)
        }
        ConfidenceKind::NegEntropy => {
            let k = p.dim();
            if k < 2 {
                return Err(Error::Input(
                    "neg_entropy needs at least 2 classes".into(),
                ));
            }
            let h: f64 = p
                .probs()
                .iter()
                .map(|&v| if v > 0.0 { -v * v.ln() } else { 0.0 })
                .sum();
            Ok((1.0 - h / (k as f64).ln()).clamp(0.0, 1.0))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(v: &[f64]) -> ProbVector {
        ProbVector::new(v.to_vec()).unwrap()
    }

    fn lg(v: &[f64]) -> Logits {
        Logits::new(v.to_vec()).unwrap()
    }

    #[test]
    fn softmax_symmetry_is_uniform() {
        let p = softmax(&lg(&[0.0, 0.0, 0.0]), 7.0).unwrap();
        for &v in p.probs() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_large_temperature_approaches_uniform() {
        let p = softmax(&lg(&[3.0, -1.0]), 1e9).unwrap();
        assert!((p.probs()[0] - 0.5).abs() < 1e-6);
        assert!((p.probs()[1] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn softmax_ln2_case() {
        // sigma((ln 2, 0)) = (2/3, 1/3)
        let p = softmax(&lg(&[2.0_f64.ln(), 0.0]), 1.0).unwrap();
        assert!((p.probs()[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((p.probs()[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn softmax_rejects_bad_temperature() {
        assert!(matches!(softmax(&lg(&[0.0, 1.0]), 0.0), Err(Error::Parameter(_))));
        assert!(matches!(softmax(&lg(&[0.0, 1.0]), -2.0), Err(Error::Parameter(_))));
        assert!(matches!(
            softmax(&lg(&[0.0, 1.0]), f64::NAN),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn logits_reject_non_finite() {
        assert!(matches!(
            Logits::new(vec![0.0, f64::INFINITY]),
            Err(Error::Input(_))
        ));
        assert!(matches!(Logits::new(vec![f64::NAN]), Err(Error::Input(_))));
    }

    #[test]
    fn argmax_prefers_lowest_index_on_ties() {
        assert_eq!(
            argmax_predict(&pv(&[0.2, 0.7, 0.1])),
            Prediction::ConcreteLabel(1)
        );
        assert_eq!(
            argmax_predict(&pv(&[0.5, 0.5])),
            Prediction::ConcreteLabel(0)
        );
        let third = 1.0 / 3.0;
        assert_eq!(
            argmax_predict(&pv(&[third, third, third])),
            Prediction::ConcreteLabel(0)
        );
    }

    #[test]
    fn reject_predict_examples() {
        assert_eq!(
            reject_predict(&pv(&[0.9, 0.1]), 0.5).unwrap(),
            Prediction::ConcreteLabel(0)
        );
        assert_eq!(
            reject_predict(&pv(&[0.4, 0.6]), 0.7).unwrap(),
            Prediction::Abstain
        );
        // boundary is non-strict: 0.25 >= 0.25 commits
        assert_eq!(
            reject_predict(&pv(&[0.25, 0.25, 0.25, 0.25]), 0.25).unwrap(),
            Prediction::ConcreteLabel(0)
        );
    }

    #[test]
    fn reject_predict_threshold_domain() {
        let p = pv(&[0.5, 0.5]);
        assert!(matches!(reject_predict(&p, -0.1), Err(Error::Parameter(_))));
        assert!(matches!(reject_predict(&p, 1.5), Err(Error::Parameter(_))));
        assert!(matches!(
            reject_predict(&p, f64::NAN),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn scalar_confidence_examples() {
        let point = pv(&[1.0, 0.0, 0.0]);
        for kind in [
            ConfidenceKind::MaxProb,
            ConfidenceKind::Top2Margin,
            ConfidenceKind::NegEntropy,
        ] {
            assert!((scalar_confidence(&point, kind).unwrap() - 1.0).abs() < 1e-12);
        }
        let uniform4 = ProbVector::uniform(4).unwrap();
        assert!(
            scalar_confidence(&uniform4, ConfidenceKind::Top2Margin)
                .unwrap()
                .abs()
                < 1e-15
        );
        assert!(
            scalar_confidence(&uniform4, ConfidenceKind::NegEntropy)
                .unwrap()
                .abs()
                < 1e-12
        );
        assert!(
            (scalar_confidence(&pv(&[0.6, 0.3, 0.1]), ConfidenceKind::MaxProb).unwrap() - 0.6)
                .abs()
                < 1e-15
        );
    }

    #[test]
    fn prob_vector_renormalizes_small_drift() {
        let p = ProbVector::new(vec![0.5, 0.5 + 5e-7]).unwrap();
        assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(matches!(
            ProbVector::new(vec![0.5, 0.6]),
            Err(Error::Input(_))
        ));
        assert!(matches!(
            ProbVector::new(vec![-0.1, 1.1]),
            Err(Error::Input(_))
        ));
        // tiny negative is clipped
        let p = ProbVector::new(vec![-5e-7, 1.0]).unwrap();
        assert_eq!(p.probs()[0], 0.0);
    }

    #[test]
    fn cost_matrix_validates_dimensions() {
        let labels = LabelSpace::synthetic(2).unwrap();
        let actions = ActionSpace::new(vec!["a".into(), "b".into()]).unwrap();
        assert!(CostMatrix::new(labels.clone(), actions.clone(), vec![vec![0.0, 1.0]]).is_err());
        assert!(CostMatrix::new(
            labels.clone(),
            actions.clone(),
            vec![vec![0.0], vec![1.0]]
        )
        .is_err());
        let m = CostMatrix::new(labels, actions, vec![vec![0.0, 1.0], vec![2.0, 3.0]]).unwrap();
        assert_eq!(m.cost(1, 0), 2.0);
        assert_eq!(m.min_entry(), 0.0);
        assert_eq!(m.max_entry(), 3.0);
    }

    #[test]
    fn dataset_checks_logit_dims_and_labels() {
        let ls = LabelSpace::synthetic(3).unwrap();
        let bad = LabeledExample {
            id: "x".into(),
            logits: lg(&[0.0, 1.0]),
            label: Some(0),
            split: Split::Test,
        };
        assert!(LabeledDataset::new(ls.clone(), vec![bad]).is_err());
        let bad_label = LabeledExample {
            id: "x".into(),
            logits: lg(&[0.0, 1.0, 2.0]),
            label: Some(3),
            split: Split::Test,
        };
        assert!(LabeledDataset::new(ls, vec![bad_label]).is_err());
    }

    #[test]
    fn label_space_rejects_duplicates_and_singletons() {
        assert!(LabelSpace::new(vec!["a".into()]).is_err());
        assert!(LabelSpace::new(vec!["a".into(), "a".into()]).is_err());
        assert!(ActionSpace::new(vec![]).is_err());
    }
}
