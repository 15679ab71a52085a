//! Fitted classifier models: prediction on unseen rows and the text format.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::dataset::Dataset;
use crate::eval::{evaluate, DataMatrix};
use crate::genome::{format_f64, Chromosome, TextError};

use super::centers::nearest_center;
use super::wta::scale_value;
use super::{round_to_class, FitnessError, ModelDecision, Strategy};

/// A trained classifier: the chromosome plus the strategy's decoded decision
/// data, sufficient to classify unseen rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    pub strategy: Strategy,
    pub chromosome: Chromosome,
    pub num_classes: usize,
    pub num_features: usize,
    /// Class display names, when the training data carried any.
    pub label_names: Option<Vec<String>>,
    pub decision: ModelDecision,
}

/// One classified row. `invalid` is set when a gene the model needs did not
/// evaluate to a finite value on this row; the class then defaults to 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Prediction {
    pub class: usize,
    pub invalid: bool,
}

/// Aggregate outcome of predicting a labeled split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitEval {
    pub rows: usize,
    pub errors: usize,
    pub invalid_rows: usize,
}

impl SplitEval {
    pub fn error_percent(&self) -> f64 {
        if self.rows == 0 {
            0.0
        } else {
            self.errors as f64 / self.rows as f64 * 100.0
        }
    }
}

impl ClassifierModel {
    fn needed_genes(&self) -> &[usize] {
        match &self.decision {
            ModelDecision::Regression { output_gene }
            | ModelDecision::Threshold { output_gene, .. }
            | ModelDecision::ClosestCenter { output_gene, .. } => {
                core::slice::from_ref(output_gene)
            }
            ModelDecision::WtaFixed { valid_genes }
            | ModelDecision::WtaScaled { valid_genes, .. } => valid_genes,
            ModelDecision::WtaDynamic { assigned_genes } => assigned_genes,
        }
    }

    /// Classifies a single feature row by evaluating the chromosome on it
    /// and applying the strategy's decision rule, tie rules included.
    pub fn predict_row(&self, row: &[f64]) -> Result<Prediction, FitnessError> {
        if row.len() != self.num_features {
            return Err(FitnessError::WidthMismatch {
                expected: self.num_features,
                got: row.len(),
            });
        }
        let data = DataMatrix::new(1, row.len(), row.to_vec())
            .map_err(|e| FitnessError::BadRow(e.to_string()))?;
        let ev = evaluate(&self.chromosome, &data)
            .map_err(|e| FitnessError::BadRow(e.to_string()))?;

        if self.needed_genes().iter().any(|&g| !ev.gene_valid(g)) {
            return Ok(Prediction {
                class: 0,
                invalid: true,
            });
        }

        let class = match &self.decision {
            ModelDecision::Regression { output_gene } => {
                round_to_class(ev.value(*output_gene, 0), self.num_classes)
            }
            ModelDecision::Threshold {
                output_gene,
                threshold,
            } => usize::from(ev.value(*output_gene, 0) > *threshold),
            ModelDecision::WtaFixed { valid_genes } => {
                let mut best = f64::NEG_INFINITY;
                let mut class = 0usize;
                for &g in valid_genes {
                    let v = ev.value(g, 0);
                    if v > best {
                        best = v;
                        class = g % self.num_classes;
                    }
                }
                class
            }
            ModelDecision::WtaScaled {
                valid_genes,
                scaling,
            } => {
                let mut best = f64::NEG_INFINITY;
                let mut class = 0usize;
                for &g in valid_genes {
                    let c = g % self.num_classes;
                    let s = scale_value(scaling, c, ev.value(g, 0));
                    if s > best {
                        best = s;
                        class = c;
                    }
                }
                class
            }
            ModelDecision::WtaDynamic { assigned_genes } => {
                let mut best = f64::NEG_INFINITY;
                let mut class = 0usize;
                for (k, &g) in assigned_genes.iter().enumerate() {
                    let v = ev.value(g, 0);
                    if v > best {
                        best = v;
                        class = k;
                    }
                }
                class
            }
            ModelDecision::ClosestCenter { output_gene, centers } => {
                nearest_center(centers, ev.value(*output_gene, 0))
            }
        };
        Ok(Prediction {
            class,
            invalid: false,
        })
    }

    pub fn predict_matrix(&self, data: &DataMatrix) -> Result<Vec<Prediction>, FitnessError> {
        (0..data.rows())
            .map(|r| self.predict_row(data.row(r)))
            .collect()
    }

    /// Predicts every row of a labeled dataset and tallies the errors.
    pub fn errors_on(&self, dataset: &Dataset) -> Result<SplitEval, FitnessError> {
        let predictions = self.predict_matrix(&dataset.features)?;
        let mut errors = 0;
        let mut invalid_rows = 0;
        for (r, p) in predictions.iter().enumerate() {
            if p.invalid {
                invalid_rows += 1;
            }
            if p.class != dataset.labels.label(r) {
                errors += 1;
            }
        }
        Ok(SplitEval {
            rows: dataset.num_rows(),
            errors,
            invalid_rows,
        })
    }

    // --- text format -----------------------------------------------------
    //
    // The chromosome block followed by a strategy block:
    //
    //     <gene lines>
    //     constants: ...
    //     threshold: ...
    //     strategy: bat
    //     num_classes: 2
    //     num_features: 9
    //     labels: benign malignant        (optional)
    //     output_gene: 3
    //     threshold: 1.25e-1              (strategy-dependent lines)

    pub fn to_text(&self) -> String {
        let mut out = self.chromosome.to_text();
        out.push_str(&format!("strategy: {}\n", self.strategy));
        out.push_str(&format!("num_classes: {}\n", self.num_classes));
        out.push_str(&format!("num_features: {}\n", self.num_features));
        if let Some(names) = &self.label_names {
            if !names.is_empty() && names.iter().all(|n| !n.chars().any(char::is_whitespace)) {
                out.push_str(&format!("labels: {}\n", names.join(" ")));
            }
        }
        match &self.decision {
            ModelDecision::Regression { output_gene } => {
                out.push_str(&format!("output_gene: {output_gene}\n"));
            }
            ModelDecision::Threshold {
                output_gene,
                threshold,
            } => {
                out.push_str(&format!("output_gene: {output_gene}\n"));
                out.push_str(&format!("threshold: {}\n", format_f64(*threshold)));
            }
            ModelDecision::WtaFixed { valid_genes } => {
                out.push_str(&format!("valid_genes: {}\n", join_usizes(valid_genes)));
            }
            ModelDecision::WtaScaled {
                valid_genes,
                scaling,
            } => {
                out.push_str(&format!("valid_genes: {}\n", join_usizes(valid_genes)));
                let mut flat = String::new();
                for (lo, hi) in scaling {
                    flat.push_str(&format!(" {} {}", format_f64(*lo), format_f64(*hi)));
                }
                out.push_str(&format!("scaling:{flat}\n"));
            }
            ModelDecision::WtaDynamic { assigned_genes } => {
                out.push_str(&format!("assigned_genes: {}\n", join_usizes(assigned_genes)));
            }
            ModelDecision::ClosestCenter {
                output_gene,
                centers,
            } => {
                out.push_str(&format!("output_gene: {output_gene}\n"));
                let flat: Vec<String> = centers.iter().map(|c| format_f64(*c)).collect();
                out.push_str(&format!("centers: {}\n", flat.join(" ")));
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<ClassifierModel, TextError> {
        // the chromosome block ends at its threshold line
        let mut boundary = None;
        let mut offset = 0usize;
        let mut lineno = 0usize;
        for line in text.lines() {
            lineno += 1;
            offset += line.len() + 1;
            if line.trim().starts_with("threshold:") {
                boundary = Some((offset.min(text.len()), lineno));
                break;
            }
        }
        let (boundary, chromo_lines) = boundary.ok_or_else(|| TextError {
            line: 0,
            message: "missing chromosome threshold line".to_string(),
        })?;
        let chromosome = Chromosome::from_text(&text[..boundary])?;

        let mut strategy = None;
        let mut num_classes = None;
        let mut num_features = None;
        let mut label_names = None;
        let mut output_gene = None;
        let mut threshold = None;
        let mut valid_genes = None;
        let mut scaling_flat: Option<Vec<f64>> = None;
        let mut assigned_genes = None;
        let mut centers = None;

        for (i, raw) in text[boundary..].lines().enumerate() {
            let lineno = chromo_lines + i + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once(':').ok_or_else(|| TextError {
                line: lineno,
                message: format!("expected `key: value`, got `{line}`"),
            })?;
            let value = value.trim();
            let bad = |message: String| TextError {
                line: lineno,
                message,
            };
            match key.trim() {
                "strategy" => {
                    strategy = Some(
                        value
                            .parse::<Strategy>()
                            .map_err(|e| bad(e.to_string()))?,
                    )
                }
                "num_classes" => {
                    num_classes =
                        Some(value.parse::<usize>().map_err(|e| bad(e.to_string()))?)
                }
                "num_features" => {
                    num_features =
                        Some(value.parse::<usize>().map_err(|e| bad(e.to_string()))?)
                }
                "labels" => {
                    label_names =
                        Some(value.split_whitespace().map(String::from).collect::<Vec<_>>())
                }
                "output_gene" => {
                    output_gene =
                        Some(value.parse::<usize>().map_err(|e| bad(e.to_string()))?)
                }
                "threshold" => {
                    threshold = Some(value.parse::<f64>().map_err(|e| bad(e.to_string()))?)
                }
                "valid_genes" => valid_genes = Some(parse_usizes(value, lineno)?),
                "assigned_genes" => assigned_genes = Some(parse_usizes(value, lineno)?),
                "scaling" => scaling_flat = Some(parse_f64s(value, lineno)?),
                "centers" => centers = Some(parse_f64s(value, lineno)?),
                other => {
                    return Err(bad(format!("unknown model field `{other}`")));
                }
            }
        }

        let missing = |what: &str| TextError {
            line: 0,
            message: format!("model is missing `{what}`"),
        };
        let strategy = strategy.ok_or_else(|| missing("strategy"))?;
        let num_classes = num_classes.ok_or_else(|| missing("num_classes"))?;
        let num_features = num_features.ok_or_else(|| missing("num_features"))?;

        let decision = match strategy {
            Strategy::Regression => ModelDecision::Regression {
                output_gene: output_gene.ok_or_else(|| missing("output_gene"))?,
            },
            Strategy::Bet | Strategy::Bat => ModelDecision::Threshold {
                output_gene: output_gene.ok_or_else(|| missing("output_gene"))?,
                threshold: threshold.ok_or_else(|| missing("threshold"))?,
            },
            Strategy::WtaF => ModelDecision::WtaFixed {
                valid_genes: valid_genes.ok_or_else(|| missing("valid_genes"))?,
            },
            Strategy::WtaS => {
                let flat = scaling_flat.ok_or_else(|| missing("scaling"))?;
                if flat.len() != 2 * num_classes {
                    return Err(TextError {
                        line: 0,
                        message: format!(
                            "scaling needs {} values, got {}",
                            2 * num_classes,
                            flat.len()
                        ),
                    });
                }
                ModelDecision::WtaScaled {
                    valid_genes: valid_genes.ok_or_else(|| missing("valid_genes"))?,
                    scaling: flat.chunks(2).map(|c| (c[0], c[1])).collect(),
                }
            }
            Strategy::WtaD => {
                let genes = assigned_genes.ok_or_else(|| missing("assigned_genes"))?;
                if genes.len() != num_classes {
                    return Err(TextError {
                        line: 0,
                        message: format!(
                            "assigned_genes needs {} entries, got {}",
                            num_classes,
                            genes.len()
                        ),
                    });
                }
                ModelDecision::WtaDynamic {
                    assigned_genes: genes,
                }
            }
            Strategy::Cc => {
                let centers = centers.ok_or_else(|| missing("centers"))?;
                if centers.len() != num_classes {
                    return Err(TextError {
                        line: 0,
                        message: format!(
                            "centers needs {} entries, got {}",
                            num_classes,
                            centers.len()
                        ),
                    });
                }
                ModelDecision::ClosestCenter {
                    output_gene: output_gene.ok_or_else(|| missing("output_gene"))?,
                    centers,
                }
            }
        };

        let model = ClassifierModel {
            strategy,
            chromosome,
            num_classes,
            num_features,
            label_names,
            decision,
        };
        for &g in model.needed_genes() {
            if g >= model.chromosome.len() {
                return Err(TextError {
                    line: 0,
                    message: format!("model references gene {g} beyond the chromosome"),
                });
            }
        }
        Ok(model)
    }

    /// Display name for a class index.
    pub fn class_name(&self, class: usize) -> String {
        match self.label_names.as_ref().and_then(|n| n.get(class)) {
            Some(name) => name.clone(),
            None => class.to_string(),
        }
    }

    /// Reverse of [`ClassifierModel::class_name`]; errors on labels the
    /// model has never seen.
    pub fn class_index(&self, name: &str) -> Result<usize, FitnessError> {
        if let Some(names) = &self.label_names {
            if let Some(i) = names.iter().position(|n| n == name) {
                return Ok(i);
            }
        }
        if let Ok(i) = name.parse::<usize>() {
            if i < self.num_classes {
                return Ok(i);
            }
        }
        Err(FitnessError::BadRow(format!("unknown label `{name}`")))
    }
}

fn join_usizes(values: &[usize]) -> String {
    let parts: Vec<String> = values.iter().map(|v| v.to_string()).collect();
    parts.join(" ")
}

fn parse_usizes(value: &str, line: usize) -> Result<Vec<usize>, TextError> {
    value
        .split_whitespace()
        .map(|tok| {
            tok.parse::<usize>().map_err(|_| TextError {
                line,
                message: format!("bad integer `{tok}`"),
            })
        })
        .collect()
}

fn parse_f64s(value: &str, line: usize) -> Result<Vec<f64>, TextError> {
    value
        .split_whitespace()
        .map(|tok| {
            tok.parse::<f64>().map_err(|_| TextError {
                line,
                message: format!("bad real `{tok}`"),
            })
        })
        .collect()
}
