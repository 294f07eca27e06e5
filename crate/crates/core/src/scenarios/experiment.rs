//! Experiment configuration and the (method, policy, seed) grid runner.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::decision::{expected_cost, DecisionPolicy};
use crate::domain::{
    argmax_predict, softmax, LabeledDataset, Prediction, SeaKind, SelfAssessmentOutput, Split,
};
use crate::error::{Error, Result};
use crate::metrics::{
    calibration_metrics, scalar_calibration_metrics, set_metrics, CalibrationReport, SetReport,
    DEFAULT_N_BINS,
};
use crate::sea::{
    fit_conformal, fit_decision_calibration, fit_histogram_binning, fit_temperature_nll,
    search_conformal_alpha, OodThresholdModel, SeaModel, SigmoidScalingModel,
};
use crate::scenarios::{
    box_game_scenario, triage_scenario, tune_temperature_for_decisions, uav_scenario,
    ExperimentResult, ScenarioSpec, SyntheticGeneratorSpec, TunedParams,
};

/// Built-in scenario selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioName {
    Triage,
    Uav,
    BoxGame,
}

impl ScenarioName {
    pub fn build(self) -> ScenarioSpec {
        match self {
            ScenarioName::Triage => triage_scenario(),
            ScenarioName::Uav => uav_scenario(),
            ScenarioName::BoxGame => box_game_scenario(),
        }
    }
}

/// Self-assessment method named in a config, with its fit parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum MethodConfig {
    Raw,
    Temperature,
    TemperatureConfidence,
    HistogramBinning {
        n_bins: usize,
    },
    Conformal {
        alpha: f64,
    },
    DecisionCalibration {
        epsilon: f64,
        max_iter: usize,
    },
    MspOod {
        tau_ood: f64,
    },
    Sigmoid {
        a: f64,
        b: f64,
        #[serde(default)]
        positive_label: usize,
    },
}

impl MethodConfig {
    pub fn name(&self) -> &'static str {
        match self {
            MethodConfig::Raw => "raw",
            MethodConfig::Temperature => "temperature",
            MethodConfig::TemperatureConfidence => "temperature_confidence",
            MethodConfig::HistogramBinning { .. } => "histogram_binning",
            MethodConfig::Conformal { .. } => "conformal",
            MethodConfig::DecisionCalibration { .. } => "decision_calibration",
            MethodConfig::MspOod { .. } => "msp_ood",
            MethodConfig::Sigmoid { .. } => "sigmoid",
        }
    }

    pub fn output_kind(&self) -> SeaKind {
        match self {
            MethodConfig::Raw
            | MethodConfig::Temperature
            | MethodConfig::DecisionCalibration { .. } => SeaKind::Distribution,
            MethodConfig::TemperatureConfidence
            | MethodConfig::HistogramBinning { .. }
            | MethodConfig::Sigmoid { .. } => SeaKind::ScalarConfidence,
            MethodConfig::Conformal { .. } => SeaKind::PredictionSet,
            MethodConfig::MspOod { .. } => SeaKind::OodVerdict,
        }
    }

    fn validate(&self, scenario: &ScenarioSpec) -> Result<()> {
        match self {
            MethodConfig::Raw | MethodConfig::Temperature | MethodConfig::TemperatureConfidence => {
                Ok(())
            }
            MethodConfig::HistogramBinning { n_bins } => {
                if *n_bins < 1 {
                    return Err(Error::Config("histogram_binning needs n_bins >= 1".into()));
                }
                Ok(())
            }
            MethodConfig::Conformal { alpha } => {
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return Err(Error::Config(format!(
                        "conformal alpha must lie in (0,1), got {alpha}"
                    )));
                }
                Ok(())
            }
            MethodConfig::DecisionCalibration { epsilon, max_iter } => {
                if !(*epsilon > 0.0) || !epsilon.is_finite() {
                    return Err(Error::Config(format!(
                        "decision_calibration epsilon must be positive, got {epsilon}"
                    )));
                }
                if *max_iter < 1 {
                    return Err(Error::Config("decision_calibration needs max_iter >= 1".into()));
                }
                Ok(())
            }
            MethodConfig::MspOod { tau_ood } => {
                OodThresholdModel::new(*tau_ood).map(|_| ()).map_err(|e| {
                    Error::Config(format!("msp_ood: {e}"))
                })
            }
            MethodConfig::Sigmoid {
                a,
                b,
                positive_label,
            } => {
                SigmoidScalingModel::new(*a, *b)
                    .map_err(|e| Error::Config(format!("sigmoid: {e}")))?;
                if scenario.label_space.k() != 2 {
                    return Err(Error::Config(
                        "sigmoid advice scaling applies only to binary scenarios".into(),
                    ));
                }
                if *positive_label > 1 {
                    return Err(Error::Config(format!(
                        "sigmoid positive_label {positive_label} outside binary label space"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Fit this method on the dataset's calibration split.
    pub fn fit(
        &self,
        dataset: &LabeledDataset,
        scenario: &ScenarioSpec,
    ) -> Result<(SeaModel, TunedParams)> {
        match self {
            MethodConfig::Raw => Ok((SeaModel::Raw, TunedParams::None)),
            MethodConfig::Temperature => {
                let m = fit_temperature_nll(dataset)?;
                Ok((
                    SeaModel::Temperature(m),
                    TunedParams::Temperature { t: m.t },
                ))
            }
            MethodConfig::TemperatureConfidence => {
                let m = fit_temperature_nll(dataset)?;
                Ok((
                    SeaModel::TemperatureConfidence(m),
                    TunedParams::Temperature { t: m.t },
                ))
            }
            MethodConfig::HistogramBinning { n_bins } => {
                let m = fit_histogram_binning(dataset, *n_bins)?;
                Ok((
                    SeaModel::HistogramBinning(m),
                    TunedParams::Binning { n_bins: *n_bins },
                ))
            }
            MethodConfig::Conformal { alpha } => {
                let m = fit_conformal(dataset, *alpha)?;
                Ok((
                    SeaModel::Conformal(m),
                    TunedParams::Conformal {
                        alpha: m.alpha,
                        tau: m.tau.is_finite().then_some(m.tau),
                        n_cal: m.n_cal,
                    },
                ))
            }
            MethodConfig::DecisionCalibration { epsilon, max_iter } => {
                let m = fit_decision_calibration(dataset, &scenario.cost, *epsilon, *max_iter)?;
                let tuned = TunedParams::DecisionCalibration {
                    iterations: m.iterations_used(),
                    converged: m.converged(),
                    final_dce: *m.dce_trace().last().expect("trace is never empty"),
                };
                Ok((SeaModel::DecisionCalibration(m), tuned))
            }
            MethodConfig::MspOod { tau_ood } => Ok((
                SeaModel::MspOod(OodThresholdModel::new(*tau_ood)?),
                TunedParams::Ood { tau_ood: *tau_ood },
            )),
            MethodConfig::Sigmoid {
                a,
                b,
                positive_label,
            } => Ok((
                SeaModel::Sigmoid {
                    model: SigmoidScalingModel::new(*a, *b)?,
                    positive_label: *positive_label,
                },
                TunedParams::Sigmoid { a: *a, b: *b },
            )),
        }
    }
}

fn default_rationality() -> f64 {
    5.0
}

fn default_trust() -> f64 {
    0.8
}

/// Decision policy named in a config; resolved against the scenario's
/// spaces and cost matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicyConfig {
    BayesOptimal,
    Threshold {
        cutoff: f64,
        action_if_above: String,
        action_if_below: String,
    },
    ModeledHuman {
        #[serde(default = "default_rationality")]
        rationality: f64,
        #[serde(default = "default_trust")]
        trust: f64,
    },
    ConfusionHuman {
        confusion: Vec<Vec<f64>>,
    },
}

impl PolicyConfig {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyConfig::BayesOptimal => "bayes_optimal",
            PolicyConfig::Threshold { .. } => "threshold",
            PolicyConfig::ModeledHuman { .. } => "modeled_human",
            PolicyConfig::ConfusionHuman { .. } => "confusion_human",
        }
    }

    pub fn resolve(&self, scenario: &ScenarioSpec) -> Result<DecisionPolicy> {
        let policy = match self {
            PolicyConfig::BayesOptimal => DecisionPolicy::BayesOptimal {
                cost: scenario.cost.clone(),
            },
            PolicyConfig::Threshold {
                cutoff,
                action_if_above,
                action_if_below,
            } => {
                let resolve_action = |name: &str| {
                    scenario.action_space.index_of(name).ok_or_else(|| {
                        Error::Config(format!(
                            "unknown action {name:?}; valid actions: {}",
                            scenario.action_space.names().join(", ")
                        ))
                    })
                };
                DecisionPolicy::Threshold {
                    confidence_cutoff: *cutoff,
                    action_if_above: resolve_action(action_if_above)?,
                    action_if_below: resolve_action(action_if_below)?,
                    n_actions: scenario.action_space.m(),
                }
            }
            PolicyConfig::ModeledHuman { rationality, trust } => DecisionPolicy::ModeledHuman {
                rationality: *rationality,
                trust: *trust,
                subjective_cost: scenario.cost.clone(),
            },
            PolicyConfig::ConfusionHuman { confusion } => {
                if scenario.action_space.m() != scenario.label_space.k() {
                    return Err(Error::Config(
                        "confusion_human applies only when actions coincide with labels".into(),
                    ));
                }
                if confusion.len() != scenario.label_space.k() {
                    return Err(Error::Config(format!(
                        "confusion matrix over {} labels for a {}-class scenario",
                        confusion.len(),
                        scenario.label_space.k()
                    )));
                }
                DecisionPolicy::ConfusionHuman {
                    confusion: confusion.clone(),
                }
            }
        };
        policy.validate()?;
        Ok(policy)
    }
}

/// Parameter-tuning request attached to a config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OptimizeConfig {
    /// Decision-driven temperature selection against a policy.
    TemperatureDecision {
        policy: PolicyConfig,
        #[serde(default)]
        grid: Option<Vec<f64>>,
    },
    /// Decision-aware conformal error-rate selection against a modeled
    /// decision-maker.
    ConformalAlpha {
        confusion: Vec<Vec<f64>>,
        alpha_grid: Vec<f64>,
    },
}

/// Full experiment description as persisted in a config document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioName,
    pub generator: SyntheticGeneratorSpec,
    pub methods: Vec<MethodConfig>,
    pub policies: Vec<PolicyConfig>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub optimize: Option<OptimizeConfig>,
}

/// A config whose names and pairings have all been resolved.
#[derive(Debug, Clone)]
pub struct ValidatedExperiment {
    pub scenario: ScenarioSpec,
    pub methods: Vec<MethodConfig>,
    pub policies: Vec<(String, DecisionPolicy)>,
    pub seeds: Vec<u64>,
    pub master_seed: u64,
}

impl ExperimentConfig {
    /// Resolve every name and check every pairing before any compute.
    pub fn validate(&self) -> Result<ValidatedExperiment> {
        let mut scenario = self.scenario.build();
        self.generator.validate().map_err(|e| match e {
            Error::Parameter(msg) => Error::Config(format!("generator: {msg}")),
            other => other,
        })?;
        if self.generator.k != scenario.label_space.k() {
            return Err(Error::Config(format!(
                "generator k={} does not match the {}-class {} scenario",
                self.generator.k,
                scenario.label_space.k(),
                scenario.name
            )));
        }
        scenario.generator = self.generator.clone();

        let mut policies = Vec::with_capacity(self.policies.len());
        for p in &self.policies {
            policies.push((p.name().to_string(), p.resolve(&scenario)?));
        }
        for m in &self.methods {
            m.validate(&scenario)?;
            for (pname, policy) in &policies {
                let produced = m.output_kind();
                let consumed = policy.required_input();
                if produced != consumed {
                    return Err(Error::Config(format!(
                        "method {:?} produces a {produced} self-assessment but policy {pname:?} consumes {consumed}",
                        m.name()
                    )));
                }
            }
        }
        Ok(ValidatedExperiment {
            scenario,
            methods: self.methods.clone(),
            policies,
            seeds: self.seeds.clone(),
            master_seed: self.generator.seed,
        })
    }
}

/// splitmix64 over the (master, cell) pair: every cell gets its own
/// deterministic stream, and changing the master seed changes all of them.
pub fn cell_seed(master: u64, cell: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(cell.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl ValidatedExperiment {
    /// Deterministic dataset for one seed entry.
    pub fn dataset_for_seed(&self, seed: u64) -> Result<LabeledDataset> {
        self.scenario
            .generate_with(cell_seed(self.master_seed, seed), None)
    }
}

/// Representation-appropriate test-split metrics for a fitted model.
fn test_metrics(
    sea: &SeaModel,
    dataset: &LabeledDataset,
) -> Result<(Option<CalibrationReport>, Option<SetReport>)> {
    let mut dist_outputs = Vec::new();
    let mut scalar_outputs = Vec::new();
    let mut set_outputs = Vec::new();
    for ex in dataset.split_examples(Split::Test) {
        let y = match ex.label {
            Some(y) => y,
            None => continue,
        };
        match sea.apply(&ex.logits)? {
            SelfAssessmentOutput::Distribution(p) => dist_outputs.push((p, y)),
            SelfAssessmentOutput::ScalarConfidence(c) => {
                let correct = match argmax_predict(&softmax(&ex.logits, 1.0)?) {
                    Prediction::ConcreteLabel(l) => l == y,
                    Prediction::Abstain => false,
                };
                scalar_outputs.push((c, correct));
            }
            SelfAssessmentOutput::PredictionSet(s) => set_outputs.push((s, y)),
            SelfAssessmentOutput::OodVerdict { .. } => {}
        }
    }
    let calibration = if !dist_outputs.is_empty() {
        Some(calibration_metrics(&dist_outputs, DEFAULT_N_BINS)?)
    } else if !scalar_outputs.is_empty() {
        Some(scalar_calibration_metrics(&scalar_outputs, DEFAULT_N_BINS)?)
    } else {
        None
    };
    let sets = if set_outputs.is_empty() {
        None
    } else {
        Some(set_metrics(&set_outputs)?)
    };
    Ok((calibration, sets))
}

/// Run the full (method, policy, seed) grid.
///
/// Datasets are generated once per seed and fits happen once per
/// (method, seed); results arrive in declaration order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ExperimentResult>> {
    let exp = config.validate()?;
    let mut datasets: BTreeMap<u64, LabeledDataset> = BTreeMap::new();
    for &seed in &exp.seeds {
        if !datasets.contains_key(&seed) {
            datasets.insert(seed, exp.dataset_for_seed(seed)?);
        }
    }
    let mut fits: BTreeMap<(usize, u64), (SeaModel, TunedParams)> = BTreeMap::new();

    let mut results = Vec::new();
    for (mi, method) in exp.methods.iter().enumerate() {
        for (pname, policy) in &exp.policies {
            for &seed in &exp.seeds {
                let dataset = &datasets[&seed];
                if !fits.contains_key(&(mi, seed)) {
                    fits.insert((mi, seed), method.fit(dataset, &exp.scenario)?);
                }
                let (sea, tuned) = &fits[&(mi, seed)];

                let cost_value =
                    expected_cost(policy, sea, dataset, &exp.scenario.cost, seed)?;
                let (lo, hi) = (exp.scenario.cost.min_entry(), exp.scenario.cost.max_entry());
                if cost_value < lo - 1e-9 || cost_value > hi + 1e-9 {
                    return Err(Error::Internal(format!(
                        "expected cost {cost_value} escaped the cost-matrix range [{lo}, {hi}]"
                    )));
                }

                let (calibration, sets) = test_metrics(sea, dataset)?;
                let (dce_before, dce_after) = match sea {
                    SeaModel::DecisionCalibration(m) => (
                        m.dce_trace().first().copied(),
                        m.dce_trace().last().copied(),
                    ),
                    _ => (None, None),
                };
                results.push(ExperimentResult {
                    method: method.name().to_string(),
                    policy: pname.clone(),
                    seed,
                    tuned: tuned.clone(),
                    expected_cost: cost_value,
                    calibration,
                    sets,
                    dce_before,
                    dce_after,
                    trace: None,
                });
            }
        }
    }
    Ok(results)
}

/// Result of an `optimize` run: the tuned parameter, its objective, and
/// the fixed baseline for comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationReport {
    pub kind: String,
    pub tuned_parameter: f64,
    pub objective: f64,
    pub baseline_parameter: f64,
    pub baseline_objective: f64,
    pub trace: Vec<(f64, f64)>,
    pub master_seed: u64,
}

/// Default baseline error rate reported alongside conformal alpha search.
pub const DEFAULT_BASELINE_ALPHA: f64 = 0.1;

/// Execute the config's `optimize` block against a dataset.
pub fn run_optimization(
    config: &ExperimentConfig,
    dataset: &LabeledDataset,
) -> Result<OptimizationReport> {
    let exp = config.validate()?;
    let optimize = config.optimize.as_ref().ok_or_else(|| {
        Error::Config("config has no optimize block".into())
    })?;
    match optimize {
        OptimizeConfig::TemperatureDecision { policy, grid } => {
            let policy = policy.resolve(&exp.scenario)?;
            let grid = match grid {
                Some(g) => g.clone(),
                None => crate::scenarios::default_temperature_grid(),
            };
            let result =
                tune_temperature_for_decisions(&exp.scenario, &policy, dataset, &grid)?;
            let trace = result.trace.clone().expect("tuner always records a trace");
            let tuned_parameter = match result.tuned {
                TunedParams::Temperature { t } => t,
                ref other => {
                    return Err(Error::Internal(format!(
                        "temperature tuner returned {other:?}"
                    )))
                }
            };
            let objective = trace
                .iter()
                .find(|(t, _)| *t == tuned_parameter)
                .map(|(_, o)| *o)
                .ok_or_else(|| Error::Internal("tuned temperature missing from trace".into()))?;
            let baseline_objective = trace
                .iter()
                .find(|(t, _)| *t == 1.0)
                .map(|(_, o)| *o)
                .ok_or_else(|| Error::Internal("baseline temperature missing from trace".into()))?;
            Ok(OptimizationReport {
                kind: "temperature_decision".into(),
                tuned_parameter,
                objective,
                baseline_parameter: 1.0,
                baseline_objective,
                trace,
                master_seed: exp.master_seed,
            })
        }
        OptimizeConfig::ConformalAlpha {
            confusion,
            alpha_grid,
        } => {
            let result = search_conformal_alpha(dataset, confusion, alpha_grid)?;
            let baseline = search_conformal_alpha(dataset, confusion, &[DEFAULT_BASELINE_ALPHA])?;
            Ok(OptimizationReport {
                kind: "conformal_alpha".into(),
                tuned_parameter: result.alpha,
                objective: result.predicted_error,
                baseline_parameter: DEFAULT_BASELINE_ALPHA,
                baseline_objective: baseline.predicted_error,
                trace: result.trace,
                master_seed: exp.master_seed,
            })
        }
    }
}
