//! Fitness assignment and decoding strategies.
//!
//! Every strategy scores a whole evaluation cache at once: each gene is a
//! candidate expression, the strategy measures each candidate (or, for the
//! winner-takes-all family, the gene ensemble) against the training labels,
//! and the chromosome's fitness is the best achievable value. All fitness
//! values are minimized. Invalid genes receive the worst possible fitness
//! and are never selected as outputs.
//!
//! Deterministic tie rules throughout: gene ties break toward the lowest
//! address, class ties toward the lowest class index, threshold ties toward
//! the smallest threshold.

mod centers;
mod model;
mod threshold;
mod wta;

pub use centers::fit_cc;
pub use model::{ClassifierModel, Prediction, SplitEval};
pub use threshold::{bat_optimal_threshold, fit_bat, fit_bet};
pub use wta::{fit_wta_d, fit_wta_f, fit_wta_s, wta_d_matrix};

use alloc::string::String;
use alloc::vec::Vec;

use core::fmt;
use core::str::FromStr;

use crate::dataset::LabelVector;
use crate::eval::EvalMatrix;
use crate::math;

/// Fitness-assignment / classification procedure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Sum of absolute errors against real-valued targets.
    Regression,
    /// Binary classification with the chromosome's evolved threshold.
    Bet,
    /// Binary classification with an automatically computed optimal threshold.
    Bat,
    /// Winner-takes-all with the fixed gene-to-class map `address mod classes`.
    WtaF,
    /// Winner-takes-all with per-class scaling and a smooth penalty term.
    WtaS,
    /// Winner-takes-all with dynamically assigned output genes.
    WtaD,
    /// Closest class center (per-class mean of the gene's outputs).
    Cc,
}

impl Strategy {
    pub const ALL: [Strategy; 7] = [
        Strategy::Regression,
        Strategy::Bet,
        Strategy::Bat,
        Strategy::WtaF,
        Strategy::WtaS,
        Strategy::WtaD,
        Strategy::Cc,
    ];

    /// True for strategies that only apply to two-class problems.
    pub fn requires_binary(self) -> bool {
        matches!(self, Strategy::Bet | Strategy::Bat)
    }

    pub fn token(self) -> &'static str {
        match self {
            Strategy::Regression => "regression",
            Strategy::Bet => "bet",
            Strategy::Bat => "bat",
            Strategy::WtaF => "wta-f",
            Strategy::WtaS => "wta-s",
            Strategy::WtaD => "wta-d",
            Strategy::Cc => "cc",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Strategy {
    type Err = FitnessError;

    fn from_str(s: &str) -> Result<Strategy, FitnessError> {
        match s {
            "regression" => Ok(Strategy::Regression),
            "bet" => Ok(Strategy::Bet),
            "bat" => Ok(Strategy::Bat),
            "wta-f" => Ok(Strategy::WtaF),
            "wta-s" => Ok(Strategy::WtaS),
            "wta-d" => Ok(Strategy::WtaD),
            "cc" => Ok(Strategy::Cc),
            _ => Err(FitnessError::UnknownStrategy(String::from(s))),
        }
    }
}

/// How the dynamic winner-takes-all strategy picks its output genes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AssignmentMode {
    /// For each class in index order, take the unused gene with the fewest
    /// misses for that class.
    #[default]
    GreedyPerClass,
    /// Repeatedly take the globally smallest unassigned (gene, class) cell.
    GlobalMin,
}

impl FromStr for AssignmentMode {
    type Err = FitnessError;

    fn from_str(s: &str) -> Result<AssignmentMode, FitnessError> {
        match s {
            "greedy_per_class" => Ok(AssignmentMode::GreedyPerClass),
            "global_min" => Ok(AssignmentMode::GlobalMin),
            _ => Err(FitnessError::UnknownStrategy(String::from(s))),
        }
    }
}

impl fmt::Display for AssignmentMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AssignmentMode::GreedyPerClass => "greedy_per_class",
            AssignmentMode::GlobalMin => "global_min",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FitnessError {
    #[error("strategy requires 2 classes, dataset has {0}")]
    RequiresBinary(usize),
    #[error("class {0} has no training rows")]
    EmptyClass(usize),
    #[error("row has {got} features, model expects {expected}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),
    #[error("invalid input row: {0}")]
    BadRow(String),
}

/// The decoded phenotype a strategy needs to classify unseen rows.
///
/// Winner-takes-all variants keep the set of genes that were valid during
/// training so prediction applies exactly the rule the fitness was computed
/// with.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelDecision {
    Regression {
        output_gene: usize,
    },
    Threshold {
        output_gene: usize,
        threshold: f64,
    },
    WtaFixed {
        valid_genes: Vec<usize>,
    },
    WtaScaled {
        valid_genes: Vec<usize>,
        /// Per-class (min, max) of the raw training outputs; classes with no
        /// valid gene hold the unused placeholder (0, 0).
        scaling: Vec<(f64, f64)>,
    },
    WtaDynamic {
        /// One gene address per class, pairwise distinct.
        assigned_genes: Vec<usize>,
    },
    ClosestCenter {
        output_gene: usize,
        centers: Vec<f64>,
    },
}

/// Outcome of fitting one chromosome's evaluation cache.
///
/// `fitness` is the strategy objective (minimized). For the count-based
/// strategies it equals `misclassified`; the scaled winner-takes-all
/// objective adds real-valued penalties on top. `decision` is `None` when
/// the chromosome has no usable output (every gene invalid, or fewer valid
/// genes than classes for the dynamic strategy); such reports carry the
/// worst possible fitness.
#[derive(Debug, Clone, PartialEq)]
pub struct FitnessReport {
    pub fitness: f64,
    pub misclassified: usize,
    pub decision: Option<ModelDecision>,
}

impl FitnessReport {
    /// Worst report for count objectives: one more than any realizable error
    /// count, so any chromosome with a usable output wins.
    pub(crate) fn worst_count(num_rows: usize) -> FitnessReport {
        FitnessReport {
            fitness: (num_rows + 1) as f64,
            misclassified: num_rows,
            decision: None,
        }
    }

    pub(crate) fn worst_real(num_rows: usize) -> FitnessReport {
        FitnessReport {
            fitness: f64::INFINITY,
            misclassified: num_rows,
            decision: None,
        }
    }
}

pub(crate) fn round_to_class(value: f64, num_classes: usize) -> usize {
    let k = math::round(value);
    if k.is_nan() || k < 0.0 {
        0
    } else if k >= num_classes as f64 {
        num_classes - 1
    } else {
        k as usize
    }
}

/// Regression fitness: per gene the sum of absolute errors against the
/// targets, minimized over all valid genes (tie toward the lowest address).
///
/// `misclassified` counts rows whose value differs from the target at all;
/// classification drivers recompute it with their own decision rule.
pub fn fit_regression(ev: &EvalMatrix, targets: &[f64]) -> FitnessReport {
    let n = ev.num_rows();
    debug_assert_eq!(targets.len(), n);
    let mut best: Option<(f64, usize)> = None;
    for g in ev.valid_genes() {
        let values = ev.values(g);
        let mut err = 0.0;
        for (v, t) in values.iter().zip(targets) {
            err += math::abs(v - t);
        }
        if best.is_none_or(|(b, _)| err < b) {
            best = Some((err, g));
        }
    }
    match best {
        Some((fitness, gene)) => {
            let misclassified = ev
                .values(gene)
                .iter()
                .zip(targets)
                .filter(|(v, t)| v != t)
                .count();
            FitnessReport {
                fitness,
                misclassified,
                decision: Some(ModelDecision::Regression { output_gene: gene }),
            }
        }
        None => FitnessReport::worst_real(n),
    }
}

/// Dispatches to the strategy's fitting procedure.
///
/// `bet_threshold` is the chromosome's own evolved threshold, used only by
/// [`Strategy::Bet`]. With [`Strategy::Regression`] the class indices become
/// real targets and misclassification counts rows where the chosen gene's
/// value does not round to the label.
pub fn fit_strategy(
    strategy: Strategy,
    assignment: AssignmentMode,
    ev: &EvalMatrix,
    labels: &LabelVector,
    bet_threshold: f64,
) -> Result<FitnessReport, FitnessError> {
    match strategy {
        Strategy::Regression => {
            let targets: Vec<f64> = labels.labels().iter().map(|&l| l as f64).collect();
            let mut report = fit_regression(ev, &targets);
            if let Some(ModelDecision::Regression { output_gene }) = report.decision {
                report.misclassified = ev
                    .values(output_gene)
                    .iter()
                    .zip(labels.labels())
                    .filter(|(&v, &l)| round_to_class(v, labels.num_classes()) != l)
                    .count();
            }
            Ok(report)
        }
        Strategy::Bet => fit_bet(ev, labels, bet_threshold),
        Strategy::Bat => fit_bat(ev, labels),
        Strategy::WtaF => Ok(fit_wta_f(ev, labels)),
        Strategy::WtaS => Ok(fit_wta_s(ev, labels)),
        Strategy::WtaD => Ok(fit_wta_d(ev, labels, assignment)),
        Strategy::Cc => fit_cc(ev, labels),
    }
}
