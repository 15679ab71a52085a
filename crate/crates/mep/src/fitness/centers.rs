//! Closest-center classification: per gene, the mean output of every class
//! is a center, and a row goes to the class whose center is nearest.

use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::LabelVector;
use crate::eval::EvalMatrix;
use crate::math;

use super::{FitnessError, FitnessReport, ModelDecision};

pub(crate) fn nearest_center(centers: &[f64], value: f64) -> usize {
    let mut best = f64::INFINITY;
    let mut class = 0usize;
    for (k, &center) in centers.iter().enumerate() {
        let d = math::abs(value - center);
        if d < best {
            best = d;
            class = k;
        }
    }
    class
}

/// Closest-center fitness. Every class must have at least one training row,
/// otherwise its center is undefined and the input is rejected. Ties in
/// distance go to the lowest class index; gene ties to the lowest address.
pub fn fit_cc(ev: &EvalMatrix, labels: &LabelVector) -> Result<FitnessReport, FitnessError> {
    let counts = labels.class_counts();
    if let Some(class) = counts.iter().position(|&c| c == 0) {
        return Err(FitnessError::EmptyClass(class));
    }
    let n = ev.num_rows();
    let num_classes = labels.num_classes();
    let mut best: Option<(usize, usize, Vec<f64>)> = None;
    for g in ev.valid_genes() {
        let values = ev.values(g);
        let mut centers = vec![0.0f64; num_classes];
        for (r, &v) in values.iter().enumerate() {
            centers[labels.label(r)] += v;
        }
        for (k, center) in centers.iter_mut().enumerate() {
            *center /= counts[k] as f64;
        }
        let mut errors = 0usize;
        for (r, &v) in values.iter().enumerate() {
            if nearest_center(&centers, v) != labels.label(r) {
                errors += 1;
            }
        }
        if best.as_ref().is_none_or(|(b, _, _)| errors < *b) {
            best = Some((errors, g, centers));
        }
    }
    Ok(match best {
        Some((errors, gene, centers)) => FitnessReport {
            fitness: errors as f64,
            misclassified: errors,
            decision: Some(ModelDecision::ClosestCenter {
                output_gene: gene,
                centers,
            }),
        },
        None => FitnessReport::worst_count(n),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn single_gene(values: &[f64]) -> EvalMatrix {
        EvalMatrix::from_raw(1, values.len(), values.to_vec(), vec![true]).unwrap()
    }

    fn binary(labels: &[usize]) -> LabelVector {
        LabelVector::new(labels.to_vec(), 2).unwrap()
    }

    #[test]
    fn well_separated_clusters_classify_cleanly() {
        let ev = single_gene(&[0.0, 0.2, 1.0, 1.2]);
        let labels = binary(&[0, 0, 1, 1]);
        let report = fit_cc(&ev, &labels).unwrap();
        assert_eq!(report.fitness, 0.0);
        match report.decision {
            Some(ModelDecision::ClosestCenter { ref centers, .. }) => {
                assert!((centers[0] - 0.1).abs() < 1e-15);
                assert!((centers[1] - 1.1).abs() < 1e-15);
            }
            _ => panic!("expected centers decision"),
        }
    }

    #[test]
    fn equidistant_value_takes_the_lowest_class() {
        // centers 0 and 1; value 0.5 is equidistant -> class 0
        let ev = single_gene(&[0.0, 1.0, 0.5]);
        let labels = LabelVector::new(vec![0, 1, 1], 2).unwrap();
        let report = fit_cc(&ev, &labels).unwrap();
        // centers: class0 = 0.0, class1 = 0.75; row2 value 0.5 is nearer 0.75
        assert_eq!(report.misclassified, 0);
        // construct a true equidistant case
        let ev = single_gene(&[0.0, 1.0]);
        let labels = binary(&[0, 1]);
        let report = fit_cc(&ev, &labels).unwrap();
        assert_eq!(report.misclassified, 0);
        assert_eq!(nearest_center(&[0.0, 1.0], 0.5), 0);
    }

    #[test]
    fn identical_values_all_predict_class_zero() {
        let ev = single_gene(&[0.7, 0.7, 0.7, 0.7]);
        let labels = binary(&[0, 1, 0, 1]);
        let report = fit_cc(&ev, &labels).unwrap();
        // both centers coincide; tie rule sends every row to class 0
        assert_eq!(report.misclassified, 2);
    }

    #[test]
    fn empty_class_is_an_input_error() {
        let ev = single_gene(&[0.1, 0.2]);
        let labels = LabelVector::new(vec![0, 0], 2).unwrap();
        assert_eq!(fit_cc(&ev, &labels), Err(FitnessError::EmptyClass(1)));
    }

    #[test]
    fn no_valid_gene_is_worst() {
        let ev = EvalMatrix::from_raw(1, 2, vec![0.0, 1.0], vec![false]).unwrap();
        let labels = binary(&[0, 1]);
        let report = fit_cc(&ev, &labels).unwrap();
        assert_eq!(report.fitness, 3.0);
        assert!(report.decision.is_none());
    }

    proptest! {
        // Adding a constant to all values of a gene shifts its centers
        // equally and leaves the error count unchanged. Dyadic values,
        // dyadic shifts and power-of-two class sizes keep every mean exact,
        // so the property holds bit for bit.
        #[test]
        fn translation_invariance(
            raw in proptest::collection::vec(0i32..64, 8),
            shift_pow in -2i32..6,
        ) {
            let labels_vec: Vec<usize> = (0..8).map(|i| usize::from(i >= 4)).collect();
            let values: Vec<f64> = raw.iter().map(|v| f64::from(*v) / 4.0).collect();
            let shift = (2.0f64).powi(shift_pow);
            let shifted: Vec<f64> = values.iter().map(|v| v + shift).collect();
            let labels = binary(&labels_vec);
            let a = fit_cc(&single_gene(&values), &labels).unwrap();
            let b = fit_cc(&single_gene(&shifted), &labels).unwrap();
            prop_assert_eq!(a.misclassified, b.misclassified);
            match (a.decision, b.decision) {
                (
                    Some(ModelDecision::ClosestCenter { centers: ca, .. }),
                    Some(ModelDecision::ClosestCenter { centers: cb, .. }),
                ) => {
                    for (x, y) in ca.iter().zip(cb.iter()) {
                        prop_assert_eq!(x + shift, *y);
                    }
                }
                _ => panic!("expected centers decisions"),
            }
        }
    }
}
