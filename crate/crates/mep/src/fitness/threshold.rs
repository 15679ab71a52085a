//! Binary classification by thresholding a gene's output.
//!
//! Rows whose value is below or equal to the threshold belong to class 0,
//! the rest to class 1. The threshold is either the chromosome's own evolved
//! value (BET) or computed per gene by an exact sweep (BAT).

use alloc::vec::Vec;

use crate::dataset::LabelVector;
use crate::eval::EvalMatrix;

use super::{FitnessError, FitnessReport, ModelDecision};

fn require_binary(labels: &LabelVector) -> Result<(), FitnessError> {
    if labels.num_classes() != 2 {
        return Err(FitnessError::RequiresBinary(labels.num_classes()));
    }
    Ok(())
}

pub(crate) fn threshold_errors(values: &[f64], labels: &[usize], threshold: f64) -> usize {
    values
        .iter()
        .zip(labels)
        .filter(|(&v, &l)| usize::from(v > threshold) != l)
        .count()
}

/// Finds the error-minimizing threshold for one gene's outputs.
///
/// Candidates are `min - 1` (everything classified as class 1) and every
/// distinct output value; this covers every achievable split of the real
/// line. The sweep walks the sorted values once, moving each row from class
/// 1 to class 0 as the threshold passes it. Ties break toward the smallest
/// threshold. Returns `(threshold, errors)`.
pub fn bat_optimal_threshold(values: &[f64], labels: &[usize]) -> (f64, usize) {
    assert_eq!(values.len(), labels.len());
    assert!(!values.is_empty(), "cannot sweep an empty value list");
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| values[a].total_cmp(&values[b]));

    // threshold below MIN: everything is class 1, class-0 rows are wrong
    let mut errors = labels.iter().filter(|&&l| l == 0).count();
    let mut best_threshold = values[order[0]] - 1.0;
    let mut best_errors = errors;

    let mut i = 0;
    while i < n {
        let v = values[order[i]];
        // rows sharing a value cross the threshold together
        while i < n && values[order[i]] == v {
            if labels[order[i]] == 0 {
                errors -= 1;
            } else {
                errors += 1;
            }
            i += 1;
        }
        if errors < best_errors {
            best_errors = errors;
            best_threshold = v;
        }
    }
    (best_threshold, best_errors)
}

/// Binary classification with the chromosome's evolved threshold.
pub fn fit_bet(
    ev: &EvalMatrix,
    labels: &LabelVector,
    threshold: f64,
) -> Result<FitnessReport, FitnessError> {
    require_binary(labels)?;
    let mut best: Option<(usize, usize)> = None;
    for g in ev.valid_genes() {
        let errors = threshold_errors(ev.values(g), labels.labels(), threshold);
        if best.is_none_or(|(b, _)| errors < b) {
            best = Some((errors, g));
        }
    }
    Ok(match best {
        Some((errors, gene)) => FitnessReport {
            fitness: errors as f64,
            misclassified: errors,
            decision: Some(ModelDecision::Threshold {
                output_gene: gene,
                threshold,
            }),
        },
        None => FitnessReport::worst_count(ev.num_rows()),
    })
}

/// Binary classification with a per-gene optimal threshold.
pub fn fit_bat(ev: &EvalMatrix, labels: &LabelVector) -> Result<FitnessReport, FitnessError> {
    require_binary(labels)?;
    let mut best: Option<(usize, usize, f64)> = None;
    for g in ev.valid_genes() {
        let (threshold, errors) = bat_optimal_threshold(ev.values(g), labels.labels());
        if best.is_none_or(|(b, _, _)| errors < b) {
            best = Some((errors, g, threshold));
        }
    }
    Ok(match best {
        Some((errors, gene, threshold)) => FitnessReport {
            fitness: errors as f64,
            misclassified: errors,
            decision: Some(ModelDecision::Threshold {
                output_gene: gene,
                threshold,
            }),
        },
        None => FitnessReport::worst_count(ev.num_rows()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::EvalMatrix;
    use alloc::vec;
    use proptest::prelude::*;

    fn single_gene(values: &[f64]) -> EvalMatrix {
        EvalMatrix::from_raw(1, values.len(), values.to_vec(), vec![true]).unwrap()
    }

    fn binary(labels: &[usize]) -> LabelVector {
        LabelVector::new(labels.to_vec(), 2).unwrap()
    }

    #[test]
    fn bet_separates_cleanly_at_half() {
        let ev = single_gene(&[0.1, 0.9]);
        let report = fit_bet(&ev, &binary(&[0, 1]), 0.5).unwrap();
        assert_eq!(report.fitness, 0.0);
    }

    #[test]
    fn bet_threshold_below_min_classifies_everything_as_one() {
        let ev = single_gene(&[0.3, 0.5, 0.7]);
        let labels = binary(&[0, 0, 1]);
        let report = fit_bet(&ev, &labels, 0.0).unwrap();
        assert_eq!(report.misclassified, 2); // both class-0 rows
    }

    #[test]
    fn bet_value_equal_to_threshold_goes_to_class_zero() {
        let ev = single_gene(&[0.5]);
        let report = fit_bet(&ev, &binary(&[0]), 0.5).unwrap();
        assert_eq!(report.misclassified, 0);
    }

    #[test]
    fn bet_rejects_multiclass() {
        let ev = single_gene(&[0.5]);
        let labels = LabelVector::new(vec![2], 3).unwrap();
        assert_eq!(
            fit_bet(&ev, &labels, 0.5),
            Err(FitnessError::RequiresBinary(3))
        );
    }

    #[test]
    fn bat_finds_the_separating_value() {
        let (thr, errors) = bat_optimal_threshold(&[1.0, 2.0, 3.0, 4.0], &[0, 0, 1, 1]);
        assert_eq!(thr, 2.0);
        assert_eq!(errors, 0);
    }

    #[test]
    fn bat_all_class_one_uses_min_minus_one() {
        let (thr, errors) = bat_optimal_threshold(&[3.0, 1.0, 2.0], &[1, 1, 1]);
        assert_eq!(thr, 0.0);
        assert_eq!(errors, 0);
    }

    #[test]
    fn bat_all_class_zero_uses_max() {
        let (thr, errors) = bat_optimal_threshold(&[3.0, 1.0, 2.0], &[0, 0, 0]);
        assert_eq!(thr, 3.0);
        assert_eq!(errors, 0);
    }

    #[test]
    fn bat_handles_duplicate_values_as_a_group() {
        // value 1.0 carries one row of each class, so crossing it leaves the
        // error count at 1; the tie breaks toward the smaller candidate MIN-1
        let (thr, errors) = bat_optimal_threshold(&[1.0, 1.0, 2.0], &[0, 1, 1]);
        assert_eq!((thr, errors), (0.0, 1));
        // the unsorted-input path must agree
        let (thr2, errors2) = bat_optimal_threshold(&[2.0, 1.0, 1.0], &[1, 0, 1]);
        assert_eq!((thr2, errors2), (thr, errors));
    }

    #[test]
    fn bat_picks_the_best_gene() {
        let mut values = vec![0.0; 8];
        values[0..4].copy_from_slice(&[1.0, 4.0, 2.0, 3.0]); // 1 error at best
        values[4..8].copy_from_slice(&[1.0, 2.0, 3.0, 4.0]); // separable
        let ev = EvalMatrix::from_raw(2, 4, values, vec![true, true]).unwrap();
        let report = fit_bat(&ev, &binary(&[0, 0, 1, 1])).unwrap();
        assert_eq!(report.fitness, 0.0);
        assert!(matches!(
            report.decision,
            Some(ModelDecision::Threshold { output_gene: 1, .. })
        ));
    }

    #[test]
    fn bat_with_no_valid_gene_is_worst() {
        let ev = EvalMatrix::from_raw(1, 2, vec![0.0, 0.0], vec![false]).unwrap();
        let report = fit_bat(&ev, &binary(&[0, 1])).unwrap();
        assert_eq!(report.fitness, 3.0);
        assert_eq!(report.decision, None);
    }

    /// Exhaustive reference: try every midpoint and boundary candidate.
    fn exhaustive_best_errors(values: &[f64], labels: &[usize]) -> usize {
        let mut sorted = values.to_vec();
        sorted.sort_unstable_by(f64::total_cmp);
        let mut candidates = vec![sorted[0] - 1.0, sorted[sorted.len() - 1] + 1.0];
        candidates.extend_from_slice(&sorted);
        for w in sorted.windows(2) {
            candidates.push((w[0] + w[1]) / 2.0);
        }
        candidates
            .iter()
            .map(|&t| threshold_errors(values, labels, t))
            .min()
            .unwrap()
    }

    proptest! {
        // No threshold in R beats the swept one.
        #[test]
        fn sweep_is_optimal(
            rows in proptest::collection::vec((0.0f64..1.0, 0usize..2), 1..60)
        ) {
            // quantize values so duplicates actually occur
            let values: Vec<f64> = rows.iter().map(|(v, _)| (v * 8.0).floor() / 8.0).collect();
            let labels: Vec<usize> = rows.iter().map(|(_, l)| *l).collect();
            let (thr, errors) = bat_optimal_threshold(&values, &labels);
            prop_assert_eq!(errors, exhaustive_best_errors(&values, &labels));
            prop_assert_eq!(threshold_errors(&values, &labels, thr), errors);
        }
    }
}
