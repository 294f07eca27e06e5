//! Histogram binning: recalibrate max-prob confidences to the empirical
//! accuracy observed in each confidence bin.

use serde::{Deserialize, Serialize};

use crate::domain::{softmax, LabeledDataset, Logits, SelfAssessmentOutput};
use crate::error::{Error, Result};

/// Fitted binning scheme: edges over [0,1] plus one empirical value per bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BinningRepr", into = "BinningRepr")]
pub struct BinningModel {
    bin_edges: Vec<f64>,
    bin_values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct BinningRepr {
    bin_edges: Vec<f64>,
    bin_values: Vec<f64>,
}

impl BinningModel {
    pub fn new(bin_edges: Vec<f64>, bin_values: Vec<f64>) -> Result<Self> {
        if bin_edges.len() < 2 || bin_edges[0] != 0.0 || *bin_edges.last().unwrap() != 1.0 {
            return Err(Error::Input(
                "bin edges must start at 0, end at 1, and contain at least one bin".into(),
            ));
        }
        if bin_edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Input("bin edges must be strictly increasing".into()));
        }
        if bin_values.len() != bin_edges.len() - 1 {
            return Err(Error::Input(format!(
                "{} bin values for {} bins",
                bin_values.len(),
                bin_edges.len() - 1
            )));
        }
        if bin_values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Input("bin values must lie in [0,1]".into()));
        }
        Ok(Self {
            bin_edges,
            bin_values,
        })
    }

    pub fn bin_edges(&self) -> &[f64] {
        &self.bin_edges
    }

    pub fn bin_values(&self) -> &[f64] {
        &self.bin_values
    }

    pub fn n_bins(&self) -> usize {
        self.bin_values.len()
    }

    /// Index of the bin containing `c`. A value exactly on an interior edge
    /// belongs to the higher bin; 1.0 belongs to the last bin.
    pub fn bin_index(&self, c: f64) -> usize {
        let n = self.n_bins();
        let interior = &self.bin_edges[1..n];
        interior.iter().filter(|&&e| e <= c).count().min(n - 1)
    }

    /// Recalibrated confidence for `z`: the value of the bin holding
    /// `max sigma(z)`.
    pub fn apply(&self, z: &Logits) -> Result<SelfAssessmentOutput> {
        let c = softmax(z, 1.0)?.max_prob();
        Ok(SelfAssessmentOutput::ScalarConfidence(
            self.bin_values[self.bin_index(c)],
        ))
    }
}

impl TryFrom<BinningRepr> for BinningModel {
    type Error = Error;
    fn try_from(r: BinningRepr) -> Result<Self> {
        Self::new(r.bin_edges, r.bin_values)
    }
}

impl From<BinningModel> for BinningRepr {
    fn from(m: BinningModel) -> BinningRepr {
        BinningRepr {
            bin_edges: m.bin_edges,
            bin_values: m.bin_values,
        }
    }
}

/// Fit equal-width histogram binning on the calibration split.
///
/// Confidence is `max sigma(z)`; each bin's value is the fraction of its
/// examples whose argmax prediction matches the true label. Empty bins take
/// the bin midpoint.
pub fn fit_histogram_binning(cal: &LabeledDataset, n_bins: usize) -> Result<BinningModel> {
    if n_bins < 1 {
        return Err(Error::Parameter("n_bins must be at least 1".into()));
    }
    let labeled = cal.calibration_labeled()?;

    let edges: Vec<f64> = (0..=n_bins).map(|i| i as f64 / n_bins as f64).collect();
    let probe = BinningModel::new(edges.clone(), vec![0.0; n_bins])?;

    let mut hits = vec![0usize; n_bins];
    let mut counts = vec![0usize; n_bins];
    for (ex, y) in &labeled {
        let p = softmax(&ex.logits, 1.0)?;
        let b = probe.bin_index(p.max_prob());
        counts[b] += 1;
        if p.argmax() == *y {
            hits[b] += 1;
        }
    }

    let values: Vec<f64> = (0..n_bins)
        .map(|b| {
            if counts[b] == 0 {
                (edges[b] + edges[b + 1]) / 2.0
            } else {
                hits[b] as f64 / counts[b] as f64
            }
        })
        .collect();
    BinningModel::new(edges, values)
}
