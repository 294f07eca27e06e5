//! Decision-aware conformal error rate selection: pick the grid alpha that
//! minimizes the modeled decision-maker's probability of choosing a wrong
//! label from the prediction set.
//!
//! Decision-maker model: shown a set containing the true label, the
//! decision-maker picks label `j` with probability proportional to
//! `confusion[y][j]` over the set (uniformly over the set if the row puts
//! no mass there); shown a set missing the truth, every pick is wrong.

use crate::domain::LabeledDataset;
use crate::error::{Error, Result};
use crate::sea::conformal::{fit_conformal_from_scores, nonconformity, ConformalModel};

/// Outcome of a grid search over conformal error rates.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSearchResult {
    pub alpha: f64,
    pub predicted_error: f64,
    /// (alpha, predicted decision error) per grid point, in grid order.
    pub trace: Vec<(f64, f64)>,
}

pub(crate) fn validate_row_stochastic(confusion: &[Vec<f64>], k: usize) -> Result<()> {
    if confusion.len() != k {
        return Err(Error::Input(format!(
            "confusion matrix has {} rows for {k} classes",
            confusion.len()
        )));
    }
    for (i, row) in confusion.iter().enumerate() {
        if row.len() != k {
            return Err(Error::Input(format!(
                "confusion row {i} has {} entries for {k} classes",
                row.len()
            )));
        }
        if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Input(format!("confusion row {i} has a negative or non-finite entry")));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::Input(format!(
                "confusion row {i} sums to {sum}, not 1"
            )));
        }
    }
    Ok(())
}

/// Probability that the modeled decision-maker picks the true label `y`
/// from `set`, given the confusion row for `y`.
pub(crate) fn pick_truth_probability(row: &[f64], set: &[usize], y: usize) -> f64 {
    if !set.contains(&y) {
        return 0.0;
    }
    let mass: f64 = set.iter().map(|&j| row[j]).sum();
    if mass > 0.0 {
        row[y] / mass
    } else {
        1.0 / set.len() as f64
    }
}

/// Grid-search the conformal error rate against the modeled decision-maker.
///
/// The calibration split is divided in half by position: the first half
/// fits the conformal threshold, the second estimates the decision error.
/// Ties break toward the earliest grid entry.
pub fn search_conformal_alpha(
    cal: &LabeledDataset,
    dm_confusion: &[Vec<f64>],
    alpha_grid: &[f64],
) -> Result<AlphaSearchResult> {
    validate_row_stochastic(dm_confusion, cal.k())?;
    if alpha_grid.is_empty() {
        return Err(Error::Parameter("alpha grid must be non-empty".into()));
    }
    for &a in alpha_grid {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::Parameter(format!(
                "alpha grid entry {a} outside (0,1)"
            )));
        }
    }

    let labeled = cal.calibration_labeled()?;
    if labeled.len() < 2 {
        return Err(Error::Data(
            "alpha search needs at least 2 labeled calibration examples".into(),
        ));
    }
    let mid = labeled.len().div_ceil(2);
    let (fit_half, held_half) = labeled.split_at(mid);

    let fit_scores: Vec<f64> = fit_half
        .iter()
        .map(|(ex, y)| nonconformity(&ex.logits, *y))
        .collect::<Result<_>>()?;

    let mut trace = Vec::with_capacity(alpha_grid.len());
    let mut best: Option<(f64, f64)> = None;
    for &alpha in alpha_grid {
        let model = fit_conformal_from_scores(&fit_scores, alpha)?;
        let error = held_out_decision_error(&model, held_half, dm_confusion)?;
        trace.push((alpha, error));
        if best.is_none_or(|(_, e)| error < e) {
            best = Some((alpha, error));
        }
    }
    let (alpha, predicted_error) = best.expect("non-empty grid");
    Ok(AlphaSearchResult {
        alpha,
        predicted_error,
        trace,
    })
}

fn held_out_decision_error(
    model: &ConformalModel,
    held: &[(&crate::domain::LabeledExample, usize)],
    confusion: &[Vec<f64>],
) -> Result<f64> {
    let mut total = 0.0;
    for (ex, y) in held {
        let set = model.prediction_set(&ex.logits)?;
        total += 1.0 - pick_truth_probability(&confusion[*y], &set, *y);
    }
    Ok(total / held.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{LabelSpace, LabeledExample, Logits, Split};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn identity(k: usize) -> Vec<Vec<f64>> {
        (0..k)
            .map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect()
    }

    fn uniform_rows(k: usize) -> Vec<Vec<f64>> {
        vec![vec![1.0 / k as f64; k]; k]
    }

    /// Random 3-class calibration data with labels drawn from the softmax,
    /// so coverage behaves like the exchangeable case.
    fn synthetic(n: usize, seed: u64) -> LabeledDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ls = LabelSpace::synthetic(3).unwrap();
        let examples = (0..n)
            .map(|i| {
                let z: Vec<f64> = (0..3).map(|_| 2.0 * rng.random::<f64>()).collect();
                let logits = Logits::new(z).unwrap();
                let p = crate::domain::softmax(&logits, 1.0).unwrap();
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut label = 2;
                for (j, &pj) in p.probs().iter().enumerate() {
                    acc += pj;
                    if u < acc {
                        label = j;
                        break;
                    }
                }
                LabeledExample {
                    id: format!("e{i}"),
                    logits,
                    label: Some(label),
                    split: Split::Calibration,
                }
            })
            .collect();
        LabeledDataset::new(ls, examples).unwrap()
    }

    #[test]
    fn identity_confusion_error_is_miscoverage_and_smallest_alpha_wins() {
        let ds = synthetic(800, 11);
        let grid = [0.05, 0.1, 0.2, 0.4];
        let res = search_conformal_alpha(&ds, &identity(3), &grid).unwrap();
        assert_eq!(res.alpha, 0.05);

        // with a perfect decision-maker the error is exactly the held-half
        // miscoverage; recompute it independently
        let labeled = ds.calibration_labeled().unwrap();
        let mid = labeled.len().div_ceil(2);
        let (fit_half, held_half) = labeled.split_at(mid);
        let scores: Vec<f64> = fit_half
            .iter()
            .map(|(ex, y)| nonconformity(&ex.logits, *y).unwrap())
            .collect();
        for &(alpha, err) in &res.trace {
            let model = fit_conformal_from_scores(&scores, alpha).unwrap();
            let miss = held_half
                .iter()
                .filter(|(ex, y)| !model.prediction_set(&ex.logits).unwrap().contains(y))
                .count() as f64
                / held_half.len() as f64;
            assert!((err - miss).abs() < 1e-12, "alpha={alpha}");
        }
    }

    #[test]
    fn monte_carlo_simulation_matches_predicted_error() {
        // simulate the modeled decision-maker with a non-trivial confusion
        let ds = synthetic(600, 23);
        let confusion = vec![
            vec![0.80, 0.15, 0.05],
            vec![0.10, 0.80, 0.10],
            vec![0.10, 0.20, 0.70],
        ];
        let grid = [0.15];
        let res = search_conformal_alpha(&ds, &confusion, &grid).unwrap();

        let labeled = ds.calibration_labeled().unwrap();
        let mid = labeled.len().div_ceil(2);
        let (fit_half, held_half) = labeled.split_at(mid);
        let scores: Vec<f64> = fit_half
            .iter()
            .map(|(ex, y)| nonconformity(&ex.logits, *y).unwrap())
            .collect();
        let model = fit_conformal_from_scores(&scores, 0.15).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let trials = 2000;
        let mut wrong = 0usize;
        let mut total = 0usize;
        for (ex, y) in held_half {
            let set = model.prediction_set(&ex.logits).unwrap();
            for _ in 0..trials {
                total += 1;
                if set.is_empty() || !set.contains(y) {
                    wrong += 1;
                    continue;
                }
                // sample a pick from the renormalized confusion row
                let mass: f64 = set.iter().map(|&j| confusion[*y][j]).sum();
                let pick = if mass > 0.0 {
                    let u: f64 = rng.random::<f64>() * mass;
                    let mut acc = 0.0;
                    let mut chosen = set[set.len() - 1];
                    for &j in &set {
                        acc += confusion[*y][j];
                        if u < acc {
                            chosen = j;
                            break;
                        }
                    }
                    chosen
                } else {
                    set[rng.random_range(0..set.len())]
                };
                if pick != *y {
                    wrong += 1;
                }
            }
        }
        let simulated = wrong as f64 / total as f64;
        assert!(
            (simulated - res.predicted_error).abs() < 0.01,
            "simulated {simulated} vs predicted {}",
            res.predicted_error
        );
    }

    #[test]
    fn uniform_confusion_still_returns_grid_order_winner() {
        let ds = synthetic(400, 5);
        let grid = [0.1, 0.2, 0.3];
        let res = search_conformal_alpha(&ds, &uniform_rows(3), &grid).unwrap();
        assert!(grid.contains(&res.alpha));
        // the winner's error must be the trace minimum, earliest on ties
        let min = res
            .trace
            .iter()
            .map(|&(_, e)| e)
            .fold(f64::INFINITY, f64::min);
        let first_min = res.trace.iter().find(|&&(_, e)| e == min).unwrap().0;
        assert_eq!(res.alpha, first_min);
    }

    #[test]
    fn singleton_grid_returns_its_entry() {
        let ds = synthetic(100, 3);
        let res = search_conformal_alpha(&ds, &identity(3), &[0.1]).unwrap();
        assert_eq!(res.alpha, 0.1);
    }

    #[test]
    fn non_stochastic_confusion_rejected() {
        let ds = synthetic(100, 3);
        let bad = vec![vec![0.5, 0.2, 0.1]; 3];
        assert!(matches!(
            search_conformal_alpha(&ds, &bad, &[0.1]),
            Err(Error::Input(_))
        ));
        let negative = vec![
            vec![1.2, -0.2, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        assert!(matches!(
            search_conformal_alpha(&ds, &negative, &[0.1]),
            Err(Error::Input(_))
        ));
    }
}
