//! Synthetic logit generator with controllable miscalibration.
//!
//! Base logits are noisy one-vs-rest scores centered on a drawn class; the
//! recorded label is resampled from `sigma(base)`, which makes the base
//! logits perfectly calibrated by construction. Stored logits are
//! `base * T*`, so recovering calibration requires dividing by the known
//! true temperature.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::domain::{softmax, LabelSpace, LabeledDataset, LabeledExample, Logits, ProbVector, Split};
use crate::error::{Error, Result};

/// Parameters of the synthetic forward-model stand-in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticGeneratorSpec {
    /// Number of classes.
    pub k: usize,
    /// Mean logit gap between the drawn class and the rest.
    pub separation: f64,
    /// Gaussian noise on every logit entry.
    pub noise_sd: f64,
    /// Miscalibration factor applied to the stored logits.
    pub true_temperature: f64,
    /// Total example count.
    pub n: usize,
    /// RNG seed; identical specs generate identical datasets.
    pub seed: u64,
    /// Leading fraction of examples assigned to the calibration split.
    #[serde(default = "default_calibration_fraction")]
    pub calibration_fraction: f64,
}

fn default_calibration_fraction() -> f64 {
    0.5
}

impl SyntheticGeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::Parameter(format!(
                "generator needs k >= 2 classes, got {}",
                self.k
            )));
        }
        if !(self.separation > 0.0) || !self.separation.is_finite() {
            return Err(Error::Parameter(format!(
                "separation must be positive and finite, got {}",
                self.separation
            )));
        }
        if !(self.noise_sd > 0.0) || !self.noise_sd.is_finite() {
            return Err(Error::Parameter(format!(
                "noise_sd must be positive and finite, got {}",
                self.noise_sd
            )));
        }
        if !(self.true_temperature > 0.0) || !self.true_temperature.is_finite() {
            return Err(Error::Parameter(format!(
                "true_temperature must be positive and finite, got {}",
                self.true_temperature
            )));
        }
        if self.n == 0 {
            return Err(Error::Parameter("generator needs n >= 1 examples".into()));
        }
        if !(0.0..=1.0).contains(&self.calibration_fraction) || self.calibration_fraction.is_nan() {
            return Err(Error::Parameter(format!(
                "calibration_fraction must lie in [0,1], got {}",
                self.calibration_fraction
            )));
        }
        Ok(())
    }
}

fn sample_categorical(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Generate a deterministic synthetic dataset for the given spaces.
pub fn generate_dataset(
    spec: &SyntheticGeneratorSpec,
    label_space: &LabelSpace,
    priors: &ProbVector,
) -> Result<LabeledDataset> {
    spec.validate()?;
    if label_space.k() != spec.k {
        return Err(Error::Config(format!(
            "generator k={} does not match label space k={}",
            spec.k,
            label_space.k()
        )));
    }
    if priors.dim() != spec.k {
        return Err(Error::Config(format!(
            "class priors over {} classes for k={}",
            priors.dim(),
            spec.k
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sd)
        .map_err(|e| Error::Parameter(format!("invalid noise distribution: {e}")))?;
    let n_cal = (spec.n as f64 * spec.calibration_fraction).floor() as usize;

    let mut examples = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let center = sample_categorical(&mut rng, priors.probs());
        let base: Vec<f64> = (0..spec.k)
            .map(|j| {
                let mean = if j == center { spec.separation } else { 0.0 };
                mean + noise.sample(&mut rng)
            })
            .collect();
        let base_logits = Logits::new(base.clone())?;
        let calibrated = softmax(&base_logits, 1.0)?;
        let label = sample_categorical(&mut rng, calibrated.probs());
        let stored: Vec<f64> = base.iter().map(|v| v * spec.true_temperature).collect();
        examples.push(LabeledExample {
            id: format!("ex-{i:06}"),
            logits: Logits::new(stored)?,
            label: Some(label),
            split: if i < n_cal {
                Split::Calibration
            } else {
                Split::Test
            },
        });
    }
    LabeledDataset::new(label_space.clone(), examples)
}
