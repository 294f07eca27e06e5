//! Evaluation metrics over self-assessment outputs: binned calibration
//! errors, proper scores, prediction-set coverage and width, ranking
//! quality, and decision calibration error.

use serde::{Deserialize, Serialize};

use crate::decision::bayes_action;
use crate::domain::{CostMatrix, ProbVector};
use crate::error::{Error, Result};
use crate::sea::PROB_FLOOR;

/// Default number of equal-width confidence bins.
pub const DEFAULT_N_BINS: usize = 15;

/// Binned and proper-score calibration metrics for label distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub ece: f64,
    pub mce: f64,
    pub nll: f64,
    pub brier: f64,
    pub classwise_ece: Vec<f64>,
    pub n_bins: usize,
}

/// Coverage and mean cardinality of prediction sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetReport {
    pub picp: f64,
    pub mpiw: f64,
}

/// Bin index for confidence `c` under `n` equal-width bins on [0,1];
/// values on an interior edge go to the higher bin, 1.0 to the last.
fn bin_index(c: f64, n: usize) -> usize {
    ((c * n as f64).floor() as usize).min(n - 1)
}

/// Calibration metrics of full label distributions against true labels.
///
/// ECE/MCE bin the max-prob confidence; NLL floors probabilities at 1e-12;
/// the Brier score is the squared distance between the distribution and the
/// one-hot label, averaged over examples. Classwise ECE applies the same
/// binning to each class probability against the class indicator.
pub fn calibration_metrics(
    outputs: &[(ProbVector, usize)],
    n_bins: usize,
) -> Result<CalibrationReport> {
    if n_bins < 1 {
        return Err(Error::Parameter("n_bins must be at least 1".into()));
    }
    if outputs.is_empty() {
        return Err(Error::Data("calibration metrics need at least one output".into()));
    }
    let k = outputs[0].0.dim();
    for (p, y) in outputs {
        if p.dim() != k {
            return Err(Error::Data("outputs mix distribution dimensions".into()));
        }
        if *y >= k {
            return Err(Error::Data(format!("label {y} outside {k}-class outputs")));
        }
    }
    let n = outputs.len() as f64;

    let mut conf_sum = vec![0.0; n_bins];
    let mut hit_sum = vec![0.0; n_bins];
    let mut count = vec![0usize; n_bins];
    let mut nll = 0.0;
    let mut brier = 0.0;
    for (p, y) in outputs {
        let conf = p.max_prob();
        let b = bin_index(conf, n_bins);
        conf_sum[b] += conf;
        hit_sum[b] += if p.argmax() == *y { 1.0 } else { 0.0 };
        count[b] += 1;

        nll -= p.probs()[*y].max(PROB_FLOOR).ln();
        brier += p
            .probs()
            .iter()
            .enumerate()
            .map(|(j, &pj)| {
                let target = if j == *y { 1.0 } else { 0.0 };
                (pj - target) * (pj - target)
            })
            .sum::<f64>();
    }
    let mut ece = 0.0;
    let mut mce: f64 = 0.0;
    for b in 0..n_bins {
        if count[b] == 0 {
            continue;
        }
        let gap = (hit_sum[b] - conf_sum[b]).abs() / count[b] as f64;
        ece += count[b] as f64 / n * gap;
        mce = mce.max(gap);
    }

    let mut classwise_ece = Vec::with_capacity(k);
    for c in 0..k {
        let mut conf_sum = vec![0.0; n_bins];
        let mut hit_sum = vec![0.0; n_bins];
        let mut count = vec![0usize; n_bins];
        for (p, y) in outputs {
            let pc = p.probs()[c];
            let b = bin_index(pc, n_bins);
            conf_sum[b] += pc;
            hit_sum[b] += if *y == c { 1.0 } else { 0.0 };
            count[b] += 1;
        }
        let mut cw = 0.0;
        for b in 0..n_bins {
            if count[b] > 0 {
                cw += (hit_sum[b] - conf_sum[b]).abs() / n;
            }
        }
        classwise_ece.push(cw);
    }

    Ok(CalibrationReport {
        ece,
        mce,
        nll: nll / n,
        brier: brier / n,
        classwise_ece,
        n_bins,
    })
}

/// Calibration metrics for scalar confidences paired with correctness,
/// using the binary reductions of NLL and Brier.
pub fn scalar_calibration_metrics(
    outputs: &[(f64, bool)],
    n_bins: usize,
) -> Result<CalibrationReport> {
    if n_bins < 1 {
        return Err(Error::Parameter("n_bins must be at least 1".into()));
    }
    if outputs.is_empty() {
        return Err(Error::Data("calibration metrics need at least one output".into()));
    }
    if outputs.iter().any(|(c, _)| !(0.0..=1.0).contains(c)) {
        return Err(Error::Input("scalar confidence outside [0,1]".into()));
    }
    let n = outputs.len() as f64;
    let mut conf_sum = vec![0.0; n_bins];
    let mut hit_sum = vec![0.0; n_bins];
    let mut count = vec![0usize; n_bins];
    let mut nll = 0.0;
    let mut brier = 0.0;
    for &(c, correct) in outputs {
        let b = bin_index(c, n_bins);
        conf_sum[b] += c;
        hit_sum[b] += if correct { 1.0 } else { 0.0 };
        count[b] += 1;
        let p_outcome = if correct { c } else { 1.0 - c };
        nll -= p_outcome.max(PROB_FLOOR).ln();
        let target = if correct { 1.0 } else { 0.0 };
        brier += (c - target) * (c - target);
    }
    let mut ece = 0.0;
    let mut mce: f64 = 0.0;
    for b in 0..n_bins {
        if count[b] == 0 {
            continue;
        }
        let gap = (hit_sum[b] - conf_sum[b]).abs() / count[b] as f64;
        ece += count[b] as f64 / n * gap;
        mce = mce.max(gap);
    }
    Ok(CalibrationReport {
        ece,
        mce,
        nll: nll / n,
        brier: brier / n,
        classwise_ece: Vec::new(),
        n_bins,
    })
}

/// Coverage probability and mean cardinality of prediction sets.
pub fn set_metrics(sets: &[(Vec<usize>, usize)]) -> Result<SetReport> {
    if sets.is_empty() {
        return Err(Error::Data("set metrics need at least one set".into()));
    }
    let n = sets.len() as f64;
    let covered = sets.iter().filter(|(s, y)| s.contains(y)).count() as f64;
    let width: f64 = sets.iter().map(|(s, _)| s.len() as f64).sum();
    Ok(SetReport {
        picp: covered / n,
        mpiw: width / n,
    })
}

/// Probability that a random positive outranks a random negative, counting
/// ties as one half (the Mann-Whitney statistic), via mid-ranks.
pub fn auroc(scores: &[(f64, bool)]) -> Result<f64> {
    let n_pos = scores.iter().filter(|(_, y)| *y).count();
    let n_neg = scores.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Data(
            "AUROC needs both a positive and a negative example".into(),
        ));
    }
    if scores.iter().any(|(s, _)| s.is_nan()) {
        return Err(Error::Input("AUROC scores must not be NaN".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].0.total_cmp(&scores[b].0));

    // mid-rank sum over positives
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]].0 == scores[order[i]].0 {
            j += 1;
        }
        // ranks are 1-based; the tied block i..j shares the average rank
        let mid_rank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            if scores[idx].1 {
                rank_sum += mid_rank;
            }
        }
        i = j;
    }
    let np = n_pos as f64;
    let nn = n_neg as f64;
    Ok((rank_sum - np * (np + 1.0) / 2.0) / (np * nn))
}

/// Decision calibration error: partition examples by induced Bayes action,
/// take the absolute gap between mean predicted cost and mean realized
/// cost per partition, and aggregate the gaps weighted by partition size.
pub fn decision_calibration_error(
    outputs: &[(ProbVector, usize)],
    cost: &CostMatrix,
) -> Result<f64> {
    if outputs.is_empty() {
        return Err(Error::Data(
            "decision calibration error needs at least one output".into(),
        ));
    }
    let n = outputs.len() as f64;
    let m = cost.m();
    let mut predicted = vec![0.0; m];
    let mut realized = vec![0.0; m];
    let mut count = vec![0usize; m];
    for (g, y) in outputs {
        if *y >= cost.k() {
            return Err(Error::Data(format!(
                "label {y} outside {}-class cost matrix",
                cost.k()
            )));
        }
        let a = bayes_action(g, cost)?;
        predicted[a] += cost.expected_cost_of_action(g, a)?;
        realized[a] += cost.cost(*y, a);
        count[a] += 1;
    }
    let mut dce = 0.0;
    for a in 0..m {
        if count[a] > 0 {
            let gap = (predicted[a] - realized[a]).abs() / count[a] as f64;
            dce += count[a] as f64 / n * gap;
        }
    }
    Ok(dce)
}
