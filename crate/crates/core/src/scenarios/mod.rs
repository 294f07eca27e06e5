//! Notional decision scenarios (box game, disaster triage, UAV ISR), the
//! synthetic logit generator standing in for a trained forward model, and
//! decision-driven tuning of the softmax temperature.

mod experiment;
mod generator;

pub use experiment::{
    cell_seed, run_experiment, run_optimization, ExperimentConfig, MethodConfig,
    OptimizationReport, OptimizeConfig, PolicyConfig, ScenarioName, ValidatedExperiment,
    DEFAULT_BASELINE_ALPHA,
};
pub use generator::{generate_dataset, SyntheticGeneratorSpec};

use serde::{Deserialize, Serialize};

use crate::decision::DecisionPolicy;
use crate::domain::{
    ActionSpace, CostMatrix, LabelSpace, LabeledDataset, ProbVector, SeaKind, Split,
};
use crate::error::{Error, Result};
use crate::metrics::{calibration_metrics, CalibrationReport, SetReport, DEFAULT_N_BINS};
use crate::sea::{SeaModel, TemperatureModel};

/// Box-game stakes: the sure payoff for walking away and the net payoff
/// for opening a full box.
pub const BOX_WALK_PAYOFF: f64 = 20.0;
pub const BOX_OPEN_PAYOFF: f64 = 80.0;

/// A complete scenario: spaces, costs, priors, and a default generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub label_space: LabelSpace,
    pub action_space: ActionSpace,
    pub cost: CostMatrix,
    pub class_priors: ProbVector,
    pub generator: SyntheticGeneratorSpec,
}

impl ScenarioSpec {
    /// Generate the scenario's synthetic dataset from its own generator.
    pub fn generate(&self) -> Result<LabeledDataset> {
        generate_dataset(&self.generator, &self.label_space, &self.class_priors)
    }

    /// Same, with the generator's seed (and optionally size) overridden.
    pub fn generate_with(&self, seed: u64, n: Option<usize>) -> Result<LabeledDataset> {
        let mut spec = self.generator.clone();
        spec.seed = seed;
        if let Some(n) = n {
            spec.n = n;
        }
        generate_dataset(&spec, &self.label_space, &self.class_priors)
    }
}

fn scenario(
    name: &str,
    labels: &[&str],
    actions: &[&str],
    costs: Vec<Vec<f64>>,
    generator: SyntheticGeneratorSpec,
) -> ScenarioSpec {
    let label_space = LabelSpace::new(labels.iter().map(|s| s.to_string()).collect())
        .expect("scenario label space");
    let action_space = ActionSpace::new(actions.iter().map(|s| s.to_string()).collect())
        .expect("scenario action space");
    let cost = CostMatrix::new(label_space.clone(), action_space.clone(), costs)
        .expect("scenario cost matrix");
    let class_priors = ProbVector::uniform(label_space.k()).expect("scenario priors");
    ScenarioSpec {
        name: name.to_string(),
        label_space,
        action_space,
        cost,
        class_priors,
        generator,
    }
}

/// Disaster triage: four injury states, three responses.
pub fn triage_scenario() -> ScenarioSpec {
    scenario(
        "triage",
        &["healthy", "delayed", "immediate", "expectant"],
        &["no_action", "deploy_medical_personnel", "evacuate"],
        vec![
            vec![0.0, 30.0, 100.0],
            vec![50.0, 0.0, 30.0],
            vec![100.0, 5.0, 0.0],
            vec![50.0, 10.0, 20.0],
        ],
        SyntheticGeneratorSpec {
            k: 4,
            separation: 2.0,
            noise_sd: 1.0,
            true_temperature: 1.0,
            n: 10_000,
            seed: 7,
            calibration_fraction: 0.5,
        },
    )
}

/// Autonomous UAV ISR: three vehicle classes, follow or scan.
pub fn uav_scenario() -> ScenarioSpec {
    scenario(
        "uav",
        &["friendly_military", "adversary_military", "civilian"],
        &["follow", "scan_area"],
        vec![
            vec![50.0, 0.0],
            vec![0.0, 100.0],
            vec![75.0, 0.0],
        ],
        SyntheticGeneratorSpec {
            k: 3,
            separation: 2.0,
            noise_sd: 1.0,
            true_temperature: 1.0,
            n: 10_000,
            seed: 7,
            calibration_fraction: 0.5,
        },
    )
}

/// Box game: the box either holds the prize or is empty; open or walk.
/// Costs are negated payoffs, so the Bayes policy maximizes profit.
pub fn box_game_scenario() -> ScenarioSpec {
    scenario(
        "box_game",
        &["contains_prize", "empty"],
        &["open_box", "walk_away"],
        vec![
            vec![-BOX_OPEN_PAYOFF, -BOX_WALK_PAYOFF],
            vec![0.0, -BOX_WALK_PAYOFF],
        ],
        SyntheticGeneratorSpec {
            k: 2,
            separation: 1.5,
            noise_sd: 1.0,
            true_temperature: 1.0,
            n: 10_000,
            seed: 7,
            calibration_fraction: 0.5,
        },
    )
}

/// Confidence cutoff above which opening the box beats walking away, for
/// arbitrary stakes: opening pays `open_payoff` with probability `c`,
/// walking pays `walk_payoff` for sure.
pub fn box_game_threshold(walk_payoff: f64, open_payoff: f64) -> Result<f64> {
    if !(open_payoff > 0.0) || !open_payoff.is_finite() {
        return Err(Error::Parameter(format!(
            "open payoff must be positive and finite, got {open_payoff}"
        )));
    }
    if !(walk_payoff >= 0.0) || !walk_payoff.is_finite() {
        return Err(Error::Parameter(format!(
            "walk payoff must be non-negative and finite, got {walk_payoff}"
        )));
    }
    Ok(walk_payoff / open_payoff)
}

/// The default box-game cutoff for the standard stakes.
pub fn box_game_policy_threshold() -> f64 {
    box_game_threshold(BOX_WALK_PAYOFF, BOX_OPEN_PAYOFF).expect("default payoffs are valid")
}

/// Tuned parameters recorded in an experiment result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TunedParams {
    None,
    Temperature {
        t: f64,
    },
    Binning {
        n_bins: usize,
    },
    Conformal {
        alpha: f64,
        /// `None` encodes the infinite full-set threshold.
        tau: Option<f64>,
        n_cal: usize,
    },
    DecisionCalibration {
        iterations: usize,
        converged: bool,
        final_dce: f64,
    },
    Ood {
        tau_ood: f64,
    },
    Sigmoid {
        a: f64,
        b: f64,
    },
}

/// One (method, policy, seed) evaluation cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub method: String,
    pub policy: String,
    pub seed: u64,
    pub tuned: TunedParams,
    pub expected_cost: f64,
    pub calibration: Option<CalibrationReport>,
    pub sets: Option<SetReport>,
    pub dce_before: Option<f64>,
    pub dce_after: Option<f64>,
    /// Objective trace (parameter, objective) when the cell came from a
    /// tuning run.
    pub trace: Option<Vec<(f64, f64)>>,
}

/// Geometric temperature grid shared by NLL fitting and decision tuning.
pub fn default_temperature_grid() -> Vec<f64> {
    const POINTS: usize = 400;
    let ratio = (crate::sea::T_MAX / crate::sea::T_MIN).powf(1.0 / (POINTS as f64 - 1.0));
    (0..POINTS)
        .map(|i| crate::sea::T_MIN * ratio.powi(i as i32))
        .collect()
}

/// Pick the temperature minimizing calibration-split expected cost under
/// `policy`, then report held-out performance at that temperature.
///
/// `T = 1` is always injected into the candidate set, so the tuned
/// calibration objective never exceeds the unscaled baseline. Ties break
/// toward the smallest temperature.
pub fn tune_temperature_for_decisions(
    scenario: &ScenarioSpec,
    policy: &DecisionPolicy,
    dataset: &LabeledDataset,
    grid: &[f64],
) -> Result<ExperimentResult> {
    if grid.is_empty() {
        return Err(Error::Parameter("temperature grid must be non-empty".into()));
    }
    for &t in grid {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Parameter(format!(
                "temperature grid entry {t} must be positive and finite"
            )));
        }
    }
    policy.validate()?;
    let sea_for = |t: f64| -> Result<SeaModel> {
        let model = TemperatureModel::new(t)?;
        match policy.required_input() {
            SeaKind::Distribution => Ok(SeaModel::Temperature(model)),
            SeaKind::ScalarConfidence => Ok(SeaModel::TemperatureConfidence(model)),
            other => Err(Error::Config(format!(
                "temperature tuning cannot feed a policy that consumes {other}"
            ))),
        }
    };

    let mut candidates: Vec<f64> = grid.to_vec();
    candidates.push(1.0);
    candidates.sort_by(|a, b| a.total_cmp(b));
    candidates.dedup();

    let mut trace = Vec::with_capacity(candidates.len());
    let mut best_t = candidates[0];
    let mut best_obj = f64::INFINITY;
    for &t in &candidates {
        let objective = crate::decision::expected_cost_on_split(
            policy,
            &sea_for(t)?,
            dataset,
            &scenario.cost,
            Split::Calibration,
        )?;
        trace.push((t, objective));
        if objective < best_obj {
            best_obj = objective;
            best_t = t;
        }
    }

    let tuned_sea = sea_for(best_t)?;
    let expected_cost = crate::decision::expected_cost(
        policy,
        &tuned_sea,
        dataset,
        &scenario.cost,
        scenario.generator.seed,
    )?;

    let tuned_model = TemperatureModel::new(best_t)?;
    let calibration = test_split_calibration(&tuned_model, dataset)?;

    Ok(ExperimentResult {
        method: "temperature_decision".into(),
        policy: policy_label(policy),
        seed: scenario.generator.seed,
        tuned: TunedParams::Temperature { t: best_t },
        expected_cost,
        calibration: Some(calibration),
        sets: None,
        dce_before: None,
        dce_after: None,
        trace: Some(trace),
    })
}

fn policy_label(policy: &DecisionPolicy) -> String {
    match policy {
        DecisionPolicy::BayesOptimal { .. } => "bayes_optimal".into(),
        DecisionPolicy::Threshold { .. } => "threshold".into(),
        DecisionPolicy::ModeledHuman { .. } => "modeled_human".into(),
        DecisionPolicy::ConfusionHuman { .. } => "confusion_human".into(),
    }
}

fn test_split_calibration(
    model: &TemperatureModel,
    dataset: &LabeledDataset,
) -> Result<CalibrationReport> {
    let mut outputs = Vec::new();
    for ex in dataset.split_examples(Split::Test) {
        if let Some(y) = ex.label {
            outputs.push((crate::domain::softmax(&ex.logits, model.t)?, y));
        }
    }
    calibration_metrics(&outputs, DEFAULT_N_BINS)
}
