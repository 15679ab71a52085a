//! Single-pass evaluation of every expression encoded in a chromosome.
//!
//! Genes are computed in address order, so by the time a function gene is
//! reached all of its argument rows are already in the cache. Each gene is
//! evaluated over all data rows in one batched inner loop.
//!
//! Domain violations (division by zero, `ln` of a non-positive value) and
//! non-finite intermediates do not substitute a protected value; they mark
//! the whole gene invalid. Invalidation is sticky: every gene that depends
//! on an invalid gene is invalid too, and invalid genes are never selectable
//! as outputs by any fitness strategy.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::genome::{Chromosome, Gene, Op};
use crate::math;

/// Row-major matrix of finite feature values; rows are fitness cases.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("expected {expected} values for a {rows}x{cols} matrix, got {got}")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        expected: usize,
        got: usize,
    },
    #[error("matrix contains a non-finite value at row {row}, column {col}")]
    NonFiniteValue { row: usize, col: usize },
    #[error("gene {gene} reads variable x{index} but the data has {cols} columns")]
    VariableOutOfRange {
        gene: usize,
        index: usize,
        cols: usize,
    },
    #[error("gene {gene} reads constant c{index} but the pool has {len} entries")]
    ConstantOutOfRange {
        gene: usize,
        index: usize,
        len: usize,
    },
    #[error("chromosome is structurally invalid: {0}")]
    MalformedChromosome(String),
}

impl DataMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<DataMatrix, EvalError> {
        if values.len() != rows * cols {
            return Err(EvalError::ShapeMismatch {
                rows,
                cols,
                expected: rows * cols,
                got: values.len(),
            });
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(EvalError::NonFiniteValue {
                    row: i.checked_div(cols).unwrap_or(0),
                    col: i.checked_rem(cols).unwrap_or(0),
                });
            }
        }
        Ok(DataMatrix { rows, cols, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<DataMatrix, EvalError> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(EvalError::ShapeMismatch {
                    rows: rows.len(),
                    cols,
                    expected: cols,
                    got: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        DataMatrix::new(rows.len(), cols, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.cols..(row + 1) * self.cols]
    }

    /// Selects a subset of rows, preserving the given order.
    pub fn select_rows(&self, indices: &[usize]) -> DataMatrix {
        let mut values = Vec::with_capacity(indices.len() * self.cols);
        for &r in indices {
            values.extend_from_slice(self.row(r));
        }
        DataMatrix {
            rows: indices.len(),
            cols: self.cols,
            values,
        }
    }
}

/// The per-gene, per-row value cache produced by [`evaluate`].
///
/// Values are stored gene-major: `values(g)` is the full row vector of gene
/// `g`. A gene's values are only meaningful while `gene_valid(g)` holds.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalMatrix {
    num_genes: usize,
    num_rows: usize,
    values: Vec<f64>,
    valid: Vec<bool>,
    ops: usize,
}

impl EvalMatrix {
    /// Builds an evaluation matrix from raw values, for tests and tooling
    /// that need a cache without going through a chromosome.
    pub fn from_raw(
        num_genes: usize,
        num_rows: usize,
        values: Vec<f64>,
        valid: Vec<bool>,
    ) -> Result<EvalMatrix, EvalError> {
        if values.len() != num_genes * num_rows || valid.len() != num_genes {
            return Err(EvalError::ShapeMismatch {
                rows: num_genes,
                cols: num_rows,
                expected: num_genes * num_rows,
                got: values.len(),
            });
        }
        Ok(EvalMatrix {
            num_genes,
            num_rows,
            values,
            valid,
            ops: 0,
        })
    }

    pub fn num_genes(&self) -> usize {
        self.num_genes
    }

    pub fn num_rows(&self) -> usize {
        self.num_rows
    }

    pub fn values(&self, gene: usize) -> &[f64] {
        &self.values[gene * self.num_rows..(gene + 1) * self.num_rows]
    }

    pub fn value(&self, gene: usize, row: usize) -> f64 {
        self.values[gene * self.num_rows + row]
    }

    pub fn gene_valid(&self, gene: usize) -> bool {
        self.valid[gene]
    }

    pub fn valid_genes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_genes).filter(move |&g| self.valid[g])
    }

    pub fn num_valid(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    /// Number of (gene, row) computations performed; always
    /// `num_genes * num_rows` for a matrix produced by [`evaluate`].
    pub fn ops_performed(&self) -> usize {
        self.ops
    }
}

fn structural_check(c: &Chromosome, data: &DataMatrix) -> Result<(), EvalError> {
    for (i, gene) in c.genes.iter().enumerate() {
        match gene {
            Gene::Variable(v) => {
                if *v >= data.cols() {
                    return Err(EvalError::VariableOutOfRange {
                        gene: i,
                        index: *v,
                        cols: data.cols(),
                    });
                }
            }
            Gene::Constant(k) => {
                if *k >= c.constants.len() {
                    return Err(EvalError::ConstantOutOfRange {
                        gene: i,
                        index: *k,
                        len: c.constants.len(),
                    });
                }
            }
            Gene::Function { op, args } => {
                if args.len() != op.arity() || args.iter().any(|&a| a >= i) {
                    return Err(EvalError::MalformedChromosome(format!(
                        "gene {i} has bad arguments"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Computes the value of every gene on every data row in one bottom-up pass.
///
/// Every (gene, row) pair is touched exactly once. A gene is invalid when
/// its own operation fails on at least one row (zero divisor, `ln` of a
/// non-positive argument, or any non-finite result) or when any argument
/// gene is invalid.
pub fn evaluate(c: &Chromosome, data: &DataMatrix) -> Result<EvalMatrix, EvalError> {
    structural_check(c, data)?;
    let num_genes = c.genes.len();
    let num_rows = data.rows();
    let mut values = vec![0.0f64; num_genes * num_rows];
    let mut valid = vec![false; num_genes];
    let mut ops = 0usize;

    for (g, gene) in c.genes.iter().enumerate() {
        let (done, rest) = values.split_at_mut(g * num_rows);
        let out = &mut rest[..num_rows];
        ops += num_rows;
        let ok = match gene {
            Gene::Variable(v) => {
                for (r, slot) in out.iter_mut().enumerate() {
                    *slot = data.get(r, *v);
                }
                true
            }
            Gene::Constant(k) => {
                out.fill(c.constants[*k]);
                true
            }
            Gene::Function { op, args } => {
                let arg = |k: usize| &done[args[k] * num_rows..args[k] * num_rows + num_rows];
                let mut ok = args.iter().all(|&a| valid[a]);
                match op {
                    Op::Add => {
                        let (a, b) = (arg(0), arg(1));
                        for r in 0..num_rows {
                            out[r] = a[r] + b[r];
                            ok &= out[r].is_finite();
                        }
                    }
                    Op::Sub => {
                        let (a, b) = (arg(0), arg(1));
                        for r in 0..num_rows {
                            out[r] = a[r] - b[r];
                            ok &= out[r].is_finite();
                        }
                    }
                    Op::Mul => {
                        let (a, b) = (arg(0), arg(1));
                        for r in 0..num_rows {
                            out[r] = a[r] * b[r];
                            ok &= out[r].is_finite();
                        }
                    }
                    Op::Div => {
                        let (a, b) = (arg(0), arg(1));
                        for r in 0..num_rows {
                            ok &= b[r] != 0.0;
                            out[r] = a[r] / b[r];
                            ok &= out[r].is_finite();
                        }
                    }
                    Op::Sin => {
                        let a = arg(0);
                        for r in 0..num_rows {
                            out[r] = math::sin(a[r]);
                            ok &= out[r].is_finite();
                        }
                    }
                    Op::Exp => {
                        let a = arg(0);
                        for r in 0..num_rows {
                            out[r] = math::exp(a[r]);
                            ok &= out[r].is_finite();
                        }
                    }
                    Op::Ln => {
                        let a = arg(0);
                        for r in 0..num_rows {
                            ok &= a[r] > 0.0;
                            out[r] = math::ln(a[r]);
                            ok &= out[r].is_finite();
                        }
                    }
                    Op::IfLess => {
                        let (a, b, c1, d) = (arg(0), arg(1), arg(2), arg(3));
                        for r in 0..num_rows {
                            out[r] = if a[r] < b[r] { c1[r] } else { d[r] };
                            ok &= out[r].is_finite();
                        }
                    }
                }
                ok
            }
        };
        valid[g] = ok;
    }

    Ok(EvalMatrix {
        num_genes,
        num_rows,
        values,
        valid,
        ops,
    })
}

/// Renders the expression encoded by one gene as fully parenthesized infix.
///
/// Variables print as `x0..x{n-1}` unless `names` supplies dataset column
/// names; constants print with full (round-trip) precision; the conditional
/// renders as `(a<b ? c : d)`.
pub fn gene_to_expression(c: &Chromosome, gene: usize, names: Option<&[String]>) -> String {
    assert!(gene < c.genes.len(), "gene address out of range");
    let mut needed = vec![false; gene + 1];
    needed[gene] = true;
    for i in (0..=gene).rev() {
        if needed[i] {
            if let Gene::Function { args, .. } = &c.genes[i] {
                for &a in args {
                    needed[a] = true;
                }
            }
        }
    }
    let mut memo: Vec<String> = vec![String::new(); gene + 1];
    for i in 0..=gene {
        if !needed[i] {
            continue;
        }
        memo[i] = match &c.genes[i] {
            Gene::Variable(v) => match names.and_then(|n| n.get(*v)) {
                Some(name) => name.clone(),
                None => format!("x{v}"),
            },
            Gene::Constant(k) => format!("{:?}", c.constants[*k]),
            Gene::Function { op, args } => match op {
                Op::Add | Op::Sub | Op::Mul | Op::Div => {
                    format!("({} {} {})", memo[args[0]], op, memo[args[1]])
                }
                Op::Sin | Op::Exp | Op::Ln => format!("{}({})", op, memo[args[0]]),
                Op::IfLess => format!(
                    "({}<{} ? {} : {})",
                    memo[args[0]], memo[args[1]], memo[args[2]], memo[args[3]]
                ),
            },
        };
    }
    memo.swap_remove(gene)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::{Chromosome, Gene, Op, PrimitiveSet};
    use alloc::string::ToString;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn example_chromosome() -> Chromosome {
        Chromosome {
            genes: vec![
                Gene::Variable(0),
                Gene::Variable(1),
                Gene::Function {
                    op: Op::Add,
                    args: vec![0, 1],
                },
                Gene::Variable(2),
                Gene::Variable(3),
                Gene::Function {
                    op: Op::Add,
                    args: vec![3, 4],
                },
                Gene::Function {
                    op: Op::Mul,
                    args: vec![2, 4],
                },
            ],
            constants: vec![],
            threshold: 0.5,
        }
    }

    #[test]
    fn example_row_evaluates_like_the_worked_example() {
        let c = example_chromosome();
        let data = DataMatrix::new(1, 4, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let ev = evaluate(&c, &data).unwrap();
        // (a + b) * d with a=1, b=2, d=4
        assert_eq!(ev.value(6, 0), 12.0);
        assert_eq!(ev.value(2, 0), 3.0);
        assert_eq!(ev.value(5, 0), 7.0);
        assert!(ev.valid_genes().count() == 7);
    }

    #[test]
    fn single_gene_copies_the_feature_column() {
        let c = Chromosome {
            genes: vec![Gene::Variable(0)],
            constants: vec![],
            threshold: 0.0,
        };
        let data = DataMatrix::new(3, 2, vec![1.0, 9.0, 2.0, 9.0, 3.0, 9.0]).unwrap();
        let ev = evaluate(&c, &data).unwrap();
        assert_eq!(ev.values(0), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn division_by_zero_invalidates_gene_and_dependents() {
        let c = Chromosome {
            genes: vec![
                Gene::Variable(0),
                Gene::Variable(1),
                Gene::Function {
                    op: Op::Div,
                    args: vec![0, 1],
                },
                Gene::Function {
                    op: Op::Add,
                    args: vec![2, 0],
                },
                Gene::Function {
                    op: Op::Add,
                    args: vec![0, 1],
                },
            ],
            constants: vec![],
            threshold: 0.0,
        };
        // second row has a zero divisor
        let data = DataMatrix::new(2, 2, vec![1.0, 2.0, 1.0, 0.0]).unwrap();
        let ev = evaluate(&c, &data).unwrap();
        assert!(!ev.gene_valid(2));
        assert!(!ev.gene_valid(3)); // depends on the invalid division
        assert!(ev.gene_valid(4));
        assert_eq!(ev.values(4), &[3.0, 1.0]);
    }

    #[test]
    fn ln_of_non_positive_invalidates() {
        let c = Chromosome {
            genes: vec![
                Gene::Variable(0),
                Gene::Function {
                    op: Op::Ln,
                    args: vec![0],
                },
            ],
            constants: vec![],
            threshold: 0.0,
        };
        let data = DataMatrix::new(2, 1, vec![1.0, 0.0]).unwrap();
        let ev = evaluate(&c, &data).unwrap();
        assert!(!ev.gene_valid(1));
    }

    #[test]
    fn exp_overflow_invalidates() {
        let c = Chromosome {
            genes: vec![
                Gene::Variable(0),
                Gene::Function {
                    op: Op::Exp,
                    args: vec![0],
                },
            ],
            constants: vec![],
            threshold: 0.0,
        };
        let data = DataMatrix::new(1, 1, vec![1000.0]).unwrap();
        let ev = evaluate(&c, &data).unwrap();
        assert!(!ev.gene_valid(1));
    }

    #[test]
    fn variable_out_of_range_is_an_input_error() {
        let c = Chromosome {
            genes: vec![Gene::Variable(5)],
            constants: vec![],
            threshold: 0.0,
        };
        let data = DataMatrix::new(1, 2, vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            evaluate(&c, &data),
            Err(EvalError::VariableOutOfRange { index: 5, .. })
        ));
    }

    #[test]
    fn every_gene_row_pair_is_touched_once() {
        let prims = PrimitiveSet {
            functions: Op::ALL.to_vec(),
            num_variables: 3,
            num_constants: 2,
            p_function: 0.5,
            p_variable: 0.4,
            p_constant: 0.1,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let c = Chromosome::random(&prims, 20, (0.0, 1.0), &mut rng).unwrap();
        let rows: Vec<Vec<f64>> = (0..13)
            .map(|r| (0..3).map(|k| (r * 3 + k) as f64 / 7.0).collect())
            .collect();
        let data = DataMatrix::from_rows(&rows).unwrap();
        let ev = evaluate(&c, &data).unwrap();
        assert_eq!(ev.ops_performed(), 20 * 13);
    }

    #[test]
    fn expressions_render_like_the_worked_example() {
        let c = example_chromosome();
        let names: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        assert_eq!(gene_to_expression(&c, 2, Some(&names)), "(a + b)");
        assert_eq!(gene_to_expression(&c, 6, Some(&names)), "((a + b) * d)");
        assert_eq!(gene_to_expression(&c, 6, None), "((x0 + x1) * x3)");
    }

    #[test]
    fn constant_renders_with_full_precision() {
        let c = Chromosome {
            genes: vec![Gene::Constant(0)],
            constants: vec![0.25],
            threshold: 0.0,
        };
        assert_eq!(gene_to_expression(&c, 0, None), "0.25");
    }

    #[test]
    fn conditional_renders_in_ternary_form() {
        let c = Chromosome {
            genes: vec![
                Gene::Variable(0),
                Gene::Variable(1),
                Gene::Function {
                    op: Op::IfLess,
                    args: vec![0, 1, 0, 1],
                },
            ],
            constants: vec![],
            threshold: 0.0,
        };
        assert_eq!(gene_to_expression(&c, 2, None), "(x0<x1 ? x0 : x1)");
    }
}
