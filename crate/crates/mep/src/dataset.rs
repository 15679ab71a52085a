//! Dataset containers and train/validation/test splitting.

use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::eval::DataMatrix;
use crate::math;

/// Per-row class indices in `[0, num_classes)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    labels: Vec<usize>,
    num_classes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DatasetError {
    #[error("need at least 2 classes, got {0}")]
    TooFewClasses(usize),
    #[error("label {label} at row {row} is outside [0, {num_classes})")]
    LabelOutOfRange {
        row: usize,
        label: usize,
        num_classes: usize,
    },
    #[error("feature matrix has {rows} rows but there are {labels} labels")]
    RowCountMismatch { rows: usize, labels: usize },
    #[error("{names} feature names supplied for {cols} columns")]
    NameCountMismatch { names: usize, cols: usize },
    #[error("split fractions must be non-negative and sum to 1")]
    BadFractions,
}

impl LabelVector {
    pub fn new(labels: Vec<usize>, num_classes: usize) -> Result<LabelVector, DatasetError> {
        if num_classes < 2 {
            return Err(DatasetError::TooFewClasses(num_classes));
        }
        for (row, &label) in labels.iter().enumerate() {
            if label >= num_classes {
                return Err(DatasetError::LabelOutOfRange {
                    row,
                    label,
                    num_classes,
                });
            }
        }
        Ok(LabelVector {
            labels,
            num_classes,
        })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, row: usize) -> usize {
        self.labels[row]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = alloc::vec![0usize; self.num_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }
}

/// A feature matrix with class labels, shareable and immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: DataMatrix,
    pub labels: LabelVector,
    pub feature_names: Option<Vec<String>>,
    pub label_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(features: DataMatrix, labels: LabelVector) -> Result<Dataset, DatasetError> {
        if features.rows() != labels.len() {
            return Err(DatasetError::RowCountMismatch {
                rows: features.rows(),
                labels: labels.len(),
            });
        }
        Ok(Dataset {
            features,
            labels,
            feature_names: None,
            label_names: None,
        })
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Dataset, DatasetError> {
        if names.len() != self.features.cols() {
            return Err(DatasetError::NameCountMismatch {
                names: names.len(),
                cols: self.features.cols(),
            });
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    pub fn with_label_names(mut self, names: Vec<String>) -> Dataset {
        self.label_names = Some(names);
        self
    }

    pub fn num_rows(&self) -> usize {
        self.features.rows()
    }

    pub fn num_features(&self) -> usize {
        self.features.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.labels.num_classes()
    }

    /// Classes with no rows in this dataset (possible after splitting).
    pub fn missing_classes(&self) -> Vec<usize> {
        self.labels
            .class_counts()
            .iter()
            .enumerate()
            .filter(|(_, &n)| n == 0)
            .map(|(c, _)| c)
            .collect()
    }

    fn select(&self, indices: &[usize]) -> Dataset {
        let features = self.features.select_rows(indices);
        let labels = indices.iter().map(|&r| self.labels.label(r)).collect();
        Dataset {
            features,
            labels: LabelVector {
                labels,
                num_classes: self.labels.num_classes(),
            },
            feature_names: self.feature_names.clone(),
            label_names: self.label_names.clone(),
        }
    }
}

/// How to carve a dataset into train/validation/test parts.
///
/// Without a permutation seed the file order is preserved, so datasets that
/// ship pre-permuted reproduce their canonical splits exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub validation_fraction: f64,
    pub test_fraction: f64,
    pub permutation_seed: Option<u64>,
}

impl Default for SplitSpec {
    fn default() -> SplitSpec {
        SplitSpec {
            train_fraction: 0.5,
            validation_fraction: 0.25,
            test_fraction: 0.25,
            permutation_seed: None,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<(), DatasetError> {
        let fs = [
            self.train_fraction,
            self.validation_fraction,
            self.test_fraction,
        ];
        if fs.iter().any(|f| !f.is_finite() || *f < 0.0) {
            return Err(DatasetError::BadFractions);
        }
        if math::abs(fs.iter().sum::<f64>() - 1.0) > 1e-9 {
            return Err(DatasetError::BadFractions);
        }
        Ok(())
    }
}

/// Sequential allocation: each part takes the ceiling of its share of the
/// rows that remain, so earlier parts absorb the rounding remainder. For the
/// standard 50/25/25 split this yields e.g. 350+175+174 of 699 rows and
/// 1588+794+793 of 3175.
fn split_sizes(n: usize, fractions: [f64; 3]) -> [usize; 3] {
    let mut sizes = [0usize; 3];
    let mut rows_left = n;
    let mut mass_left: f64 = fractions.iter().sum();
    for (i, f) in fractions.iter().enumerate() {
        if mass_left <= 0.0 {
            break;
        }
        // the epsilon keeps exact multiples from being bumped up a row
        let take = (rows_left as f64 * f / mass_left - 1e-9).max(0.0);
        sizes[i] = (math::ceil(take) as usize).min(rows_left);
        rows_left -= sizes[i];
        mass_left -= f;
    }
    sizes[2] += rows_left;
    sizes
}

/// Splits a dataset into (train, validation, test).
///
/// Rows are optionally permuted by a seeded shuffle, then partitioned
/// sequentially. The three parts are disjoint, cover every row, and keep the
/// (possibly permuted) row order.
pub fn split(d: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset, Dataset), DatasetError> {
    spec.validate()?;
    let n = d.num_rows();
    let mut order: Vec<usize> = (0..n).collect();
    if let Some(seed) = spec.permutation_seed {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let sizes = split_sizes(
        n,
        [
            spec.train_fraction,
            spec.validation_fraction,
            spec.test_fraction,
        ],
    );
    let train = d.select(&order[..sizes[0]]);
    let validation = d.select(&order[sizes[0]..sizes[0] + sizes[1]]);
    let test = d.select(&order[sizes[0] + sizes[1]..]);
    Ok((train, validation, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn toy_dataset(n: usize) -> Dataset {
        let values: Vec<f64> = (0..n * 2).map(|v| v as f64).collect();
        let features = DataMatrix::new(n, 2, values).unwrap();
        let labels = LabelVector::new((0..n).map(|r| r % 2).collect(), 2).unwrap();
        Dataset::new(features, labels).unwrap()
    }

    #[test]
    fn split_sizes_match_the_canonical_tables() {
        assert_eq!(split_sizes(699, [0.5, 0.25, 0.25]), [350, 175, 174]);
        assert_eq!(split_sizes(3175, [0.5, 0.25, 0.25]), [1588, 794, 793]);
        assert_eq!(split_sizes(690, [0.5, 0.25, 0.25]), [345, 173, 172]);
        assert_eq!(split_sizes(768, [0.5, 0.25, 0.25]), [384, 192, 192]);
        assert_eq!(split_sizes(214, [0.5, 0.25, 0.25]), [107, 54, 53]);
        assert_eq!(split_sizes(303, [0.5, 0.25, 0.25]), [152, 76, 75]);
        assert_eq!(split_sizes(683, [0.5, 0.25, 0.25]), [342, 171, 170]);
        assert_eq!(split_sizes(7200, [0.5, 0.25, 0.25]), [3600, 1800, 1800]);
    }

    #[test]
    fn file_order_is_preserved_without_permutation() {
        let d = toy_dataset(8);
        let spec = SplitSpec::default();
        let (train, validation, test) = split(&d, &spec).unwrap();
        assert_eq!(train.num_rows(), 4);
        assert_eq!(validation.num_rows(), 2);
        assert_eq!(test.num_rows(), 2);
        assert_eq!(train.features.row(0), d.features.row(0));
        assert_eq!(test.features.row(1), d.features.row(7));
    }

    #[test]
    fn permutation_seeds_change_membership_not_sizes() {
        let d = toy_dataset(20);
        let mut spec = SplitSpec {
            permutation_seed: Some(1),
            ..SplitSpec::default()
        };
        let (a_train, ..) = split(&d, &spec).unwrap();
        spec.permutation_seed = Some(2);
        let (b_train, ..) = split(&d, &spec).unwrap();
        assert_eq!(a_train.num_rows(), b_train.num_rows());
        assert_ne!(a_train.features, b_train.features);
    }

    #[test]
    fn splits_partition_the_dataset() {
        let d = toy_dataset(23);
        let spec = SplitSpec {
            permutation_seed: Some(7),
            ..SplitSpec::default()
        };
        let (train, validation, test) = split(&d, &spec).unwrap();
        assert_eq!(
            train.num_rows() + validation.num_rows() + test.num_rows(),
            23
        );
        // every original row appears exactly once (match on the unique
        // feature values)
        let mut seen = [false; 23];
        for part in [&train, &validation, &test] {
            for r in 0..part.num_rows() {
                let original = (part.features.get(r, 0) / 2.0) as usize;
                assert!(!seen[original]);
                seen[original] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn bad_fractions_are_rejected() {
        let d = toy_dataset(10);
        let spec = SplitSpec {
            train_fraction: 0.6,
            validation_fraction: 0.25,
            test_fraction: 0.25,
            permutation_seed: None,
        };
        assert_eq!(split(&d, &spec), Err(DatasetError::BadFractions));
    }

    #[test]
    fn label_vector_rejects_out_of_range() {
        assert!(matches!(
            LabelVector::new(vec![0, 2], 2),
            Err(DatasetError::LabelOutOfRange { row: 1, .. })
        ));
    }
}
