//! Training drivers, the repeated-run benchmark harness and its reports.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;

use mep::engine::EngineError;
use mep::{
    gene_to_expression, mix_seed, run_with_observer, ClassifierModel, Dataset, EvolutionConfig,
    ModelDecision, RunResult, SequentialExecutor, Strategy,
};

use crate::config::{ExperimentConfig, StdDevKind};
use crate::exec::RayonExecutor;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("N/A: strategy requires 2 classes")]
    NotApplicable,
    #[error("delta comparison needs positive error rates")]
    NonPositiveDelta,
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Truncates (never rounds) to two decimals, toward zero.
pub fn truncate2(value: f64) -> f64 {
    (value * 100.0).trunc() / 100.0
}

/// Signed percent difference between two error rates. Positive means `a` is
/// better (smaller), the usual orientation of published comparison tables;
/// the result always lies in [-100, 100].
pub fn format_delta(a: f64, b: f64) -> Result<f64, BenchError> {
    if a.is_nan() || b.is_nan() || a <= 0.0 || b <= 0.0 {
        return Err(BenchError::NonPositiveDelta);
    }
    Ok((b - a) / a.max(b) * 100.0)
}

/// One completed run in a benchmark cell.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub problem: String,
    pub strategy: Strategy,
    pub run: usize,
    pub seed: u64,
    pub train_error: f64,
    pub validation_error: f64,
    pub test_error: f64,
    pub seconds: f64,
}

/// Best/average/deviation of the test error over a cell's runs, or the
/// reason the cell does not apply.
#[derive(Debug, Clone)]
pub struct StatsCell {
    pub strategy: Strategy,
    pub outcome: Result<CellStats, String>,
}

#[derive(Debug, Clone, Copy)]
pub struct CellStats {
    pub best: f64,
    pub average: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone)]
pub struct StatsTable {
    pub problem: String,
    pub runs: usize,
    pub cells: Vec<StatsCell>,
}

fn cell_stats(test_errors: &[f64], std_dev: StdDevKind) -> CellStats {
    let n = test_errors.len() as f64;
    let best = test_errors.iter().cloned().fold(f64::INFINITY, f64::min);
    let average = test_errors.iter().sum::<f64>() / n;
    let denominator = match std_dev {
        StdDevKind::Population => n,
        StdDevKind::Sample => (n - 1.0).max(1.0),
    };
    let variance = test_errors
        .iter()
        .map(|e| (e - average) * (e - average))
        .sum::<f64>()
        / denominator;
    CellStats {
        best,
        average,
        deviation: variance.sqrt(),
    }
}

/// Runs one evolution with the configured seed and returns the result with
/// its wall time. Subpopulations evolve in parallel.
pub fn train_once(
    config: &ExperimentConfig,
    train: &Dataset,
    validation: &Dataset,
    test: &Dataset,
    verbose: bool,
) -> Result<(RunResult, f64), BenchError> {
    let evolution = specialized(config, config.evolution.strategy, train)?;
    let started = Instant::now();
    let result = run_with_observer(
        &evolution,
        train,
        validation,
        test,
        &RayonExecutor,
        |log| {
            if verbose {
                let bests: Vec<String> =
                    log.subpop_best.iter().map(|f| format!("{f:.4}")).collect();
                let validation = log
                    .validation_error_percent
                    .map(|v| format!("{v:.4}"))
                    .unwrap_or_else(|| "-".to_string());
                println!("{}\t{}\t{}", log.generation, bests.join("\t"), validation);
            }
        },
    )?;
    Ok((result, started.elapsed().as_secs_f64()))
}

fn specialized(
    config: &ExperimentConfig,
    strategy: Strategy,
    train: &Dataset,
) -> Result<EvolutionConfig, BenchError> {
    if strategy.requires_binary() && train.num_classes() != 2 {
        return Err(BenchError::NotApplicable);
    }
    let mut evolution = config.evolution.clone();
    evolution.strategy = strategy;
    evolution.primitives.num_variables = train.num_features();
    Ok(evolution)
}

/// Executes `runs` independent seeded runs of every configured strategy.
/// Run `i` uses the seed `mix_seed(master_seed, i)`; runs execute in
/// parallel and are aggregated in run order, so the output is independent
/// of the thread count.
pub fn benchmark(
    config: &ExperimentConfig,
    train: &Dataset,
    validation: &Dataset,
    test: &Dataset,
) -> Result<(StatsTable, Vec<RunRecord>), BenchError> {
    let problem = config.problem_name();
    let mut cells = Vec::new();
    let mut records = Vec::new();

    for &strategy in &config.strategies {
        let evolution = match specialized(config, strategy, train) {
            Ok(evolution) => evolution,
            Err(BenchError::NotApplicable) => {
                cells.push(StatsCell {
                    strategy,
                    outcome: Err("N/A".to_string()),
                });
                continue;
            }
            Err(other) => return Err(other),
        };

        let outcomes: Vec<Result<RunRecord, EngineError>> = (0..config.num_runs)
            .into_par_iter()
            .map(|run_index| {
                let mut evolution = evolution.clone();
                evolution.master_seed = mix_seed(config.evolution.master_seed, run_index as u64);
                let started = Instant::now();
                let result = mep::run(&evolution, train, validation, test, &SequentialExecutor)?;
                Ok(RunRecord {
                    problem: problem.clone(),
                    strategy,
                    run: run_index,
                    seed: evolution.master_seed,
                    train_error: result.train_error_percent,
                    validation_error: result.validation_error_percent,
                    test_error: result.test_error_percent,
                    seconds: started.elapsed().as_secs_f64(),
                })
            })
            .collect();

        let mut test_errors = Vec::with_capacity(config.num_runs);
        let mut failure = None;
        for outcome in outcomes {
            match outcome {
                Ok(record) => {
                    test_errors.push(record.test_error);
                    records.push(record);
                }
                Err(e) => failure = Some(e.to_string()),
            }
        }
        cells.push(StatsCell {
            strategy,
            outcome: match failure {
                Some(reason) => Err(format!("N/A ({reason})")),
                None => Ok(cell_stats(&test_errors, config.std_dev)),
            },
        });
    }

    Ok((
        StatsTable {
            problem,
            runs: config.num_runs,
            cells,
        },
        records,
    ))
}

impl StatsTable {
    /// Plain-text rendering: one row per problem, Best/Avg/Dev columns per
    /// strategy, every value truncated after the second decimal.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{:<12}", "problem");
        for cell in &self.cells {
            let _ = write!(out, " | {:^23}", format!("{} (best/avg/dev)", cell.strategy));
        }
        let _ = writeln!(out);
        let width = out.len();
        let _ = writeln!(out, "{}", "-".repeat(width.saturating_sub(1)));
        let _ = write!(out, "{:<12}", self.problem);
        for cell in &self.cells {
            match &cell.outcome {
                Ok(stats) => {
                    let _ = write!(
                        out,
                        " | {:>7.2} {:>7.2} {:>7.2}",
                        truncate2(stats.best),
                        truncate2(stats.average),
                        truncate2(stats.deviation)
                    );
                }
                Err(reason) => {
                    let short = if reason.starts_with("N/A") { "N/A" } else { reason };
                    let _ = write!(out, " | {:^23}", short);
                }
            }
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "({} runs per cell)", self.runs);
        out
    }

    /// Best average test error over the applicable strategies.
    pub fn best_average(&self) -> Option<(Strategy, f64)> {
        self.cells
            .iter()
            .filter_map(|c| c.outcome.as_ref().ok().map(|s| (c.strategy, s.average)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}

/// Raw per-run results as CSV.
pub fn records_to_csv(records: &[RunRecord]) -> String {
    let mut out = String::from("problem,strategy,run,seed,train_err,valid_err,test_err,seconds\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.problem,
            r.strategy,
            r.run,
            r.seed,
            r.train_error,
            r.validation_error,
            r.test_error,
            r.seconds
        );
    }
    out
}

/// Published average test errors (percent) of two reference methods on the
/// standard benchmark problems, used for the optional delta report.
pub mod reference {
    /// Linear genetic programming averages.
    pub const LGP_AVERAGE: &[(&str, f64)] = &[
        ("cancer1", 2.18),
        ("cancer2", 5.72),
        ("cancer3", 4.93),
        ("diabetes1", 23.96),
        ("diabetes2", 27.85),
        ("diabetes3", 23.09),
        ("gene1", 12.97),
        ("gene2", 11.95),
        ("gene3", 13.84),
        ("heartc1", 21.12),
        ("heartc2", 7.31),
        ("heartc3", 13.98),
        ("horse1", 30.55),
        ("horse2", 36.12),
        ("horse3", 35.44),
        ("thyroid1", 1.91),
        ("thyroid2", 2.31),
        ("thyroid3", 1.88),
    ];

    /// Feed-forward neural network averages.
    pub const ANN_AVERAGE: &[(&str, f64)] = &[
        ("cancer1", 1.38),
        ("cancer2", 4.77),
        ("cancer3", 3.70),
        ("card1", 14.05),
        ("card2", 18.91),
        ("card3", 18.84),
        ("diabetes1", 24.10),
        ("diabetes2", 26.42),
        ("diabetes3", 22.59),
        ("gene1", 16.67),
        ("gene2", 18.41),
        ("gene3", 21.82),
        ("glass1", 32.70),
        ("glass2", 55.57),
        ("glass3", 58.40),
        ("heart1", 19.72),
        ("heart2", 17.52),
        ("heart3", 24.08),
        ("heartc1", 20.82),
        ("heartc2", 5.13),
        ("heartc3", 15.40),
        ("horse1", 29.19),
        ("horse2", 35.86),
        ("horse3", 34.16),
        ("soybean1", 29.40),
        ("soybean2", 5.14),
        ("soybean3", 11.54),
        ("thyroid1", 2.38),
        ("thyroid2", 1.91),
        ("thyroid3", 2.27),
    ];

    fn lookup(table: &[(&str, f64)], problem: &str) -> Option<f64> {
        table
            .iter()
            .find(|(name, _)| *name == problem)
            .map(|(_, v)| *v)
    }

    pub fn lgp_average(problem: &str) -> Option<f64> {
        lookup(LGP_AVERAGE, problem)
    }

    pub fn ann_average(problem: &str) -> Option<f64> {
        lookup(ANN_AVERAGE, problem)
    }
}

/// Delta lines comparing the table's best strategy average against the
/// published reference averages, when the problem name matches one.
pub fn delta_report(table: &StatsTable) -> String {
    let mut out = String::new();
    let Some((strategy, average)) = table.best_average() else {
        return out;
    };
    if average <= 0.0 {
        return out;
    }
    for (method, value) in [
        ("LGP", reference::lgp_average(&table.problem)),
        ("ANN", reference::ann_average(&table.problem)),
    ] {
        if let Some(reference_average) = value {
            if let Ok(delta) = format_delta(average, reference_average) {
                let _ = writeln!(
                    out,
                    "delta vs {method}: {:+.2}% (mep {} avg {:.2} vs {method} {:.2})",
                    truncate2(delta),
                    strategy,
                    truncate2(average),
                    reference_average,
                );
            }
        }
    }
    out
}

/// Human-readable training report with the decisive expression(s).
pub fn train_report(
    problem: &str,
    config: &EvolutionConfig,
    result: &RunResult,
    train: &Dataset,
) -> String {
    let model = &result.best_model;
    let mut out = String::new();
    let _ = writeln!(out, "problem: {problem}");
    let _ = writeln!(out, "strategy: {}", model.strategy);
    let _ = writeln!(out, "seed: {}", result.seed);
    let _ = writeln!(out, "generations: {}", config.num_generations);
    let _ = writeln!(out, "train_error_percent: {:.4}", result.train_error_percent);
    let _ = writeln!(
        out,
        "validation_error_percent: {:.4}",
        result.validation_error_percent
    );
    let _ = writeln!(out, "test_error_percent: {:.4}", result.test_error_percent);
    let names = train.feature_names.as_deref();
    match &model.decision {
        ModelDecision::Regression { output_gene }
        | ModelDecision::Threshold { output_gene, .. }
        | ModelDecision::ClosestCenter { output_gene, .. } => {
            let _ = writeln!(
                out,
                "expression[{output_gene}]: {}",
                gene_to_expression(&model.chromosome, *output_gene, names)
            );
        }
        ModelDecision::WtaDynamic { assigned_genes } => {
            for (class, gene) in assigned_genes.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "class {class} expression[{gene}]: {}",
                    gene_to_expression(&model.chromosome, *gene, names)
                );
            }
        }
        ModelDecision::WtaFixed { valid_genes }
        | ModelDecision::WtaScaled { valid_genes, .. } => {
            // show the gene that wins the most training rows
            let gene = dominant_gene(model, valid_genes, train);
            let _ = writeln!(
                out,
                "representative expression[{gene}] (class {}): {}",
                gene % model.num_classes,
                gene_to_expression(&model.chromosome, gene, names)
            );
        }
    }
    if let ModelDecision::Threshold { threshold, .. } = &model.decision {
        let _ = writeln!(out, "threshold: {threshold}");
    }
    if let ModelDecision::ClosestCenter { centers, .. } = &model.decision {
        let rendered: Vec<String> = centers.iter().map(|c| format!("{c:.6}")).collect();
        let _ = writeln!(out, "centers: {}", rendered.join(" "));
    }
    out
}

fn dominant_gene(model: &ClassifierModel, valid_genes: &[usize], train: &Dataset) -> usize {
    let Ok(ev) = mep::evaluate(&model.chromosome, &train.features) else {
        return valid_genes.first().copied().unwrap_or(0);
    };
    let mut wins = vec![0usize; model.chromosome.len()];
    for r in 0..ev.num_rows() {
        let mut best = f64::NEG_INFINITY;
        let mut winner = None;
        for &g in valid_genes {
            if !ev.gene_valid(g) {
                continue;
            }
            let v = ev.value(g, r);
            if v > best {
                best = v;
                winner = Some(g);
            }
        }
        if let Some(g) = winner {
            wins[g] += 1;
        }
    }
    (0..wins.len())
        .max_by_key(|&g| wins[g])
        .unwrap_or_else(|| valid_genes.first().copied().unwrap_or(0))
}
