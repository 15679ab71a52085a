//! Winner-takes-all strategies: a row is classified by the gene producing
//! the largest output. The variants differ in how genes map to classes and
//! how near-misses are scored.

use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::LabelVector;
use crate::eval::EvalMatrix;

use super::{AssignmentMode, FitnessReport, ModelDecision};

/// Fixed mapping: gene at address `g` serves class `g mod num_classes`.
///
/// Per row, the maximal value over all valid genes designates the class
/// (first occurrence in address order on ties). Fitness is the number of
/// misclassified rows.
pub fn fit_wta_f(ev: &EvalMatrix, labels: &LabelVector) -> FitnessReport {
    let n = ev.num_rows();
    let valid: Vec<usize> = ev.valid_genes().collect();
    if valid.is_empty() {
        return FitnessReport::worst_count(n);
    }
    let num_classes = labels.num_classes();
    let mut errors = 0usize;
    for r in 0..n {
        let mut best = f64::NEG_INFINITY;
        let mut predicted = 0usize;
        for &g in &valid {
            let v = ev.value(g, r);
            if v > best {
                best = v;
                predicted = g % num_classes;
            }
        }
        if predicted != labels.label(r) {
            errors += 1;
        }
    }
    FitnessReport {
        fitness: errors as f64,
        misclassified: errors,
        decision: Some(ModelDecision::WtaFixed { valid_genes: valid }),
    }
}

/// Per-class (min, max) of the raw outputs of the valid genes serving each
/// class. Classes with no valid gene keep the placeholder (0, 0).
fn class_scaling(
    ev: &EvalMatrix,
    valid: &[usize],
    num_classes: usize,
) -> Vec<(f64, f64)> {
    let mut scaling = vec![(0.0, 0.0); num_classes];
    let mut seen = vec![false; num_classes];
    for &g in valid {
        let class = g % num_classes;
        for &v in ev.values(g) {
            if !seen[class] {
                scaling[class] = (v, v);
                seen[class] = true;
            } else {
                let (lo, hi) = scaling[class];
                scaling[class] = (lo.min(v), hi.max(v));
            }
        }
    }
    scaling
}

pub(crate) fn scale_value(scaling: &[(f64, f64)], class: usize, v: f64) -> f64 {
    let (lo, hi) = scaling[class];
    if hi > lo {
        (v - lo) / (hi - lo)
    } else {
        0.0
    }
}

/// Smoothed winner-takes-all.
///
/// Gene outputs are scaled to [0, 1] per class so no class can dominate by
/// sheer magnitude. On top of the misclassification count, every class
/// whose scaled maximum reaches or exceeds the true class's maximum adds
/// one unit plus the margin by which it does so. The true class of a row
/// with no valid genes counts as sitting at the scale floor 0.
pub fn fit_wta_s(ev: &EvalMatrix, labels: &LabelVector) -> FitnessReport {
    let n = ev.num_rows();
    let valid: Vec<usize> = ev.valid_genes().collect();
    if valid.is_empty() {
        return FitnessReport::worst_real(n);
    }
    let num_classes = labels.num_classes();
    let scaling = class_scaling(ev, &valid, num_classes);

    let mut fitness = 0.0f64;
    let mut errors = 0usize;
    let mut class_max = vec![f64::NEG_INFINITY; num_classes];
    for r in 0..n {
        class_max.fill(f64::NEG_INFINITY);
        let mut best = f64::NEG_INFINITY;
        let mut predicted = 0usize;
        for &g in &valid {
            let class = g % num_classes;
            let s = scale_value(&scaling, class, ev.value(g, r));
            if s > class_max[class] {
                class_max[class] = s;
            }
            if s > best {
                best = s;
                predicted = class;
            }
        }
        let truth = labels.label(r);
        if predicted != truth {
            errors += 1;
            fitness += 1.0;
        }
        let own = if class_max[truth] == f64::NEG_INFINITY {
            0.0
        } else {
            class_max[truth]
        };
        for (class, &m) in class_max.iter().enumerate() {
            if class != truth && m != f64::NEG_INFINITY && m >= own {
                fitness += 1.0 + (m - own);
            }
        }
    }
    FitnessReport {
        fitness,
        misclassified: errors,
        decision: Some(ModelDecision::WtaScaled {
            valid_genes: valid,
            scaling,
        }),
    }
}

/// Miss matrix for the dynamic strategy: entry `(g, k)` counts the rows of
/// class `k` on which gene `g` does not attain the row maximum over all
/// valid genes (attaining it jointly still counts as attainment).
///
/// Returned flat, gene-major, with `num_classes` columns. Rows of invalid
/// genes hold the sentinel `num_rows + 1` so they can never be picked by an
/// assignment heuristic.
pub fn wta_d_matrix(ev: &EvalMatrix, labels: &LabelVector) -> Vec<usize> {
    let n = ev.num_rows();
    let num_classes = labels.num_classes();
    let mut matrix = vec![n + 1; ev.num_genes() * num_classes];
    let valid: Vec<usize> = ev.valid_genes().collect();
    if valid.is_empty() {
        return matrix;
    }
    for &g in &valid {
        matrix[g * num_classes..(g + 1) * num_classes].fill(0);
    }
    for r in 0..n {
        let mut row_max = f64::NEG_INFINITY;
        for &g in &valid {
            row_max = row_max.max(ev.value(g, r));
        }
        let class = labels.label(r);
        for &g in &valid {
            if ev.value(g, r) != row_max {
                matrix[g * num_classes + class] += 1;
            }
        }
    }
    matrix
}

/// Dynamic winner-takes-all: one distinct output gene is assigned to every
/// class by a heuristic over the miss matrix, and the fitness is the sum of
/// the assigned cells. Needs at least as many valid genes as classes;
/// otherwise the report carries the worst fitness and no decision.
///
/// Prediction classifies a row to the assigned gene with the maximal value,
/// breaking ties toward the lowest class; `misclassified` is computed with
/// that rule, so it can differ from the fitness.
pub fn fit_wta_d(
    ev: &EvalMatrix,
    labels: &LabelVector,
    assignment: AssignmentMode,
) -> FitnessReport {
    let n = ev.num_rows();
    let num_classes = labels.num_classes();
    let valid: Vec<usize> = ev.valid_genes().collect();
    if valid.len() < num_classes {
        return FitnessReport::worst_count(n);
    }
    let matrix = wta_d_matrix(ev, labels);
    let mut used = vec![false; ev.num_genes()];
    let mut assigned = vec![usize::MAX; num_classes];

    match assignment {
        AssignmentMode::GreedyPerClass => {
            for class in 0..num_classes {
                let mut best: Option<(usize, usize)> = None;
                for &g in &valid {
                    if used[g] {
                        continue;
                    }
                    let misses = matrix[g * num_classes + class];
                    if best.is_none_or(|(b, _)| misses < b) {
                        best = Some((misses, g));
                    }
                }
                let (_, gene) = best.expect("enough valid genes");
                assigned[class] = gene;
                used[gene] = true;
            }
        }
        AssignmentMode::GlobalMin => {
            let mut remaining = num_classes;
            while remaining > 0 {
                let mut best: Option<(usize, usize, usize)> = None;
                for class in 0..num_classes {
                    if assigned[class] != usize::MAX {
                        continue;
                    }
                    for &g in &valid {
                        if used[g] {
                            continue;
                        }
                        let misses = matrix[g * num_classes + class];
                        if best.is_none_or(|(b, _, _)| misses < b) {
                            best = Some((misses, class, g));
                        }
                    }
                }
                let (_, class, gene) = best.expect("enough valid genes");
                assigned[class] = gene;
                used[gene] = true;
                remaining -= 1;
            }
        }
    }

    let fitness: usize = assigned
        .iter()
        .enumerate()
        .map(|(class, &g)| matrix[g * num_classes + class])
        .sum();

    let mut errors = 0usize;
    for r in 0..n {
        let mut best = f64::NEG_INFINITY;
        let mut predicted = 0usize;
        for (class, &g) in assigned.iter().enumerate() {
            let v = ev.value(g, r);
            if v > best {
                best = v;
                predicted = class;
            }
        }
        if predicted != labels.label(r) {
            errors += 1;
        }
    }

    FitnessReport {
        fitness: fitness as f64,
        misclassified: errors,
        decision: Some(ModelDecision::WtaDynamic {
            assigned_genes: assigned,
        }),
    }
}
