//! Flat `key = value` experiment configuration.
//!
//! Keys mirror the usual MEP parameter-table names verbatim
//! (`sub_population_size = 500`, `mutation_probability = 0.005`, ...) plus a
//! handful of artifact keys for dataset, splits, strategies and outputs.
//! Blank lines and `#` comments are ignored; unknown keys are errors.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use mep::genome::GenomeError;
use mep::{
    AssignmentMode, CrossoverMode, EvolutionConfig, Op, PrimitiveSet, Strategy, SplitSpec,
    VariationParams,
};

use crate::data::{CsvOptions, DataFormat, LabelColumn};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Genome(#[from] GenomeError),
}

fn bad_line(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError::Parse {
        line,
        message: message.into(),
    }
}

/// How the benchmark's standard deviation is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StdDevKind {
    /// Divide by n.
    #[default]
    Population,
    /// Divide by n - 1.
    Sample,
}

impl fmt::Display for StdDevKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StdDevKind::Population => "population",
            StdDevKind::Sample => "sample",
        })
    }
}

/// Everything a training or benchmark invocation needs.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// Display name; defaults to the dataset file stem.
    pub problem: Option<String>,
    pub dataset: Option<PathBuf>,
    pub format: DataFormat,
    pub csv: CsvOptions,
    pub normalize: bool,
    pub split: SplitSpec,
    pub evolution: EvolutionConfig,
    pub num_runs: usize,
    pub strategies: Vec<Strategy>,
    pub std_dev: StdDevKind,
    pub output_csv: Option<PathBuf>,
    pub output_model: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    /// The standard full-scale parameter set: 10 subpopulations of 500 in a
    /// ring, chromosomes of 256 genes, 250 generations, 30 runs.
    fn default() -> ExperimentConfig {
        ExperimentConfig {
            problem: None,
            dataset: None,
            format: DataFormat::Auto,
            csv: CsvOptions::default(),
            normalize: false,
            split: SplitSpec::default(),
            evolution: EvolutionConfig {
                subpop_size: 500,
                num_subpops: 10,
                migration_rate: 1,
                chromosome_length: 256,
                num_generations: 250,
                tournament_size: 2,
                strategy: Strategy::Bat,
                wta_d_assignment: AssignmentMode::GreedyPerClass,
                variation: VariationParams {
                    crossover_mode: CrossoverMode::OnePoint,
                    p_crossover: 0.9,
                    p_mutation: 0.005,
                    constant_delta: 0.1,
                    constants_interval: (0.0, 1.0),
                    constants_may_leave_interval: true,
                    threshold_delta: 0.1,
                },
                primitives: PrimitiveSet {
                    functions: Op::ALL.to_vec(),
                    num_variables: 0, // filled in from the dataset
                    num_constants: 10,
                    p_function: 0.5,
                    p_variable: 0.4,
                    p_constant: 0.01,
                },
                master_seed: 1,
            },
            num_runs: 30,
            strategies: vec![
                Strategy::WtaF,
                Strategy::WtaS,
                Strategy::WtaD,
                Strategy::Cc,
                Strategy::Bat,
            ],
            std_dev: StdDevKind::Population,
            output_csv: None,
            output_model: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<ExperimentConfig, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut config = ExperimentConfig::default();
        config.apply_text(&text)?;
        Ok(config)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (index, raw) in text.lines().enumerate() {
            let lineno = index + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad_line(lineno, format!("expected `key = value`, got `{line}`")))?;
            self.apply_key(key.trim(), value.trim(), lineno)?;
        }
        Ok(())
    }

    fn apply_key(&mut self, key: &str, value: &str, line: usize) -> Result<(), ConfigError> {
        let evo = &mut self.evolution;
        match key {
            // evolutionary parameters, spelled like the usual tables
            "sub_population_size" => evo.subpop_size = parse(value, line)?,
            "number_of_sub_populations" => evo.num_subpops = parse(value, line)?,
            "sub_populations_architecture" => {
                if value != "ring" {
                    return Err(bad_line(
                        line,
                        format!("only the ring architecture is supported, got `{value}`"),
                    ));
                }
            }
            "migration_rate" => evo.migration_rate = parse(value, line)?,
            "chromosome_length" => evo.chromosome_length = parse(value, line)?,
            "crossover_probability" => evo.variation.p_crossover = parse(value, line)?,
            "mutation_probability" => evo.variation.p_mutation = parse(value, line)?,
            "tournament_size" => evo.tournament_size = parse(value, line)?,
            "functions_probability" => evo.primitives.p_function = parse(value, line)?,
            "variables_probability" => evo.primitives.p_variable = parse(value, line)?,
            "constants_probability" => evo.primitives.p_constant = parse(value, line)?,
            "number_of_generations" => evo.num_generations = parse(value, line)?,
            "mathematical_functions" => {
                let mut functions = Vec::new();
                for token in value.split(',') {
                    let token = token.trim();
                    if token.is_empty() {
                        continue;
                    }
                    functions.push(Op::from_token(token).ok_or_else(|| {
                        bad_line(line, format!("unknown function `{token}`"))
                    })?);
                }
                evo.primitives.functions = functions;
            }
            "number_of_constants" => evo.primitives.num_constants = parse(value, line)?,
            "constants_initial_interval" => {
                let cleaned = value.trim_start_matches('[').trim_end_matches(']');
                let parts: Vec<&str> = cleaned.split(',').map(str::trim).collect();
                if parts.len() != 2 {
                    return Err(bad_line(line, "interval needs two comma-separated bounds"));
                }
                evo.variation.constants_interval =
                    (parse(parts[0], line)?, parse(parts[1], line)?);
            }
            "constants_can_evolve" => {
                // expressed by freezing the mutation delta
                if !parse_bool(value, line)? {
                    evo.variation.constant_delta = 0.0;
                }
            }
            "constants_can_evolve_outside_initial_interval" => {
                evo.variation.constants_may_leave_interval = parse_bool(value, line)?;
            }
            "constants_delta" => evo.variation.constant_delta = parse(value, line)?,
            "threshold_delta" => evo.variation.threshold_delta = parse(value, line)?,
            "crossover_mode" => {
                evo.variation.crossover_mode = value
                    .parse::<CrossoverMode>()
                    .map_err(|e| bad_line(line, e.to_string()))?;
            }
            "wta_d_assignment" => {
                evo.wta_d_assignment = value
                    .parse::<AssignmentMode>()
                    .map_err(|e| bad_line(line, e.to_string()))?;
            }
            "strategy" => {
                evo.strategy = parse_strategy(value, line)?;
                self.strategies = vec![evo.strategy];
            }
            "strategies" => {
                let mut strategies = Vec::new();
                for token in value.split(',') {
                    let token = token.trim();
                    if token.is_empty() {
                        continue;
                    }
                    strategies.push(parse_strategy(token, line)?);
                }
                if strategies.is_empty() {
                    return Err(bad_line(line, "strategies list is empty"));
                }
                self.strategies = strategies;
            }
            "master_seed" => evo.master_seed = parse(value, line)?,
            "runs" => self.num_runs = parse(value, line)?,

            // dataset and splits
            "dataset" => self.dataset = Some(PathBuf::from(value)),
            "dataset_format" => {
                self.format = value
                    .parse::<DataFormat>()
                    .map_err(|e| bad_line(line, e))?;
            }
            "problem_name" => self.problem = Some(value.to_string()),
            "label_column" => {
                self.csv.label_column = value
                    .parse::<LabelColumn>()
                    .map_err(|e| bad_line(line, e))?;
            }
            "csv_header" => self.csv.has_header = parse_bool(value, line)?,
            "csv_delimiter" => {
                let mut chars = value.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) if c.is_ascii() => self.csv.delimiter = c as u8,
                    _ => return Err(bad_line(line, "delimiter must be one ascii character")),
                }
            }
            "normalize" => self.normalize = parse_bool(value, line)?,
            "train_fraction" => self.split.train_fraction = parse(value, line)?,
            "validation_fraction" => self.split.validation_fraction = parse(value, line)?,
            "test_fraction" => self.split.test_fraction = parse(value, line)?,
            "permutation_seed" => self.split.permutation_seed = Some(parse(value, line)?),

            // outputs
            "standard_deviation" => {
                self.std_dev = match value {
                    "population" => StdDevKind::Population,
                    "sample" => StdDevKind::Sample,
                    other => {
                        return Err(bad_line(
                            line,
                            format!("standard_deviation must be population or sample, got `{other}`"),
                        ))
                    }
                };
            }
            "output_csv" => self.output_csv = Some(PathBuf::from(value)),
            "output_model" => self.output_model = Some(PathBuf::from(value)),

            other => {
                return Err(bad_line(line, format!("unknown configuration key `{other}`")));
            }
        }
        Ok(())
    }

    /// Checks everything that does not need the dataset.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.num_runs == 0 {
            return Err(ConfigError::Invalid("runs must be at least 1".into()));
        }
        self.evolution.primitives.validate()?;
        self.evolution.variation.validate()?;
        self.split
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(())
    }

    pub fn problem_name(&self) -> String {
        if let Some(name) = &self.problem {
            return name.clone();
        }
        self.dataset
            .as_ref()
            .and_then(|p| p.file_stem())
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".to_string())
    }
}

fn parse<T: std::str::FromStr>(value: &str, line: usize) -> Result<T, ConfigError> {
    value
        .parse::<T>()
        .map_err(|_| bad_line(line, format!("cannot parse `{value}`")))
}

fn parse_bool(value: &str, line: usize) -> Result<bool, ConfigError> {
    match value.to_ascii_lowercase().as_str() {
        "yes" | "true" | "1" => Ok(true),
        "no" | "false" | "0" => Ok(false),
        other => Err(bad_line(line, format!("expected yes/no, got `{other}`"))),
    }
}

fn parse_strategy(value: &str, line: usize) -> Result<Strategy, ConfigError> {
    value
        .parse::<Strategy>()
        .map_err(|e| bad_line(line, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_the_full_scale_table() {
        let config = ExperimentConfig::default();
        assert_eq!(config.evolution.subpop_size, 500);
        assert_eq!(config.evolution.num_subpops, 10);
        assert_eq!(config.evolution.chromosome_length, 256);
        assert_eq!(config.evolution.variation.p_crossover, 0.9);
        assert_eq!(config.evolution.variation.p_mutation, 0.005);
        assert_eq!(config.evolution.primitives.num_constants, 10);
        assert_eq!(config.num_runs, 30);
    }

    #[test]
    fn parses_table_style_keys() {
        let mut config = ExperimentConfig::default();
        config
            .apply_text(
                "# scaled-down run\n\
                 sub_population_size = 100\n\
                 number_of_sub_populations = 2\n\
                 sub_populations_architecture = ring\n\
                 migration_rate = 1\n\
                 chromosome_length = 64\n\
                 crossover_probability = 0.9\n\
                 mutation_probability = 0.005\n\
                 tournament_size = 2\n\
                 mathematical_functions = +,-,*,/,sin,exp,ln,a<b?c:d\n\
                 constants_initial_interval = [0, 1]\n\
                 constants_can_evolve = YES\n\
                 constants_can_evolve_outside_initial_interval = YES\n\
                 number_of_generations = 100\n\
                 strategy = bat\n\
                 runs = 10\n",
            )
            .unwrap();
        assert_eq!(config.evolution.subpop_size, 100);
        assert_eq!(config.evolution.num_subpops, 2);
        assert_eq!(config.evolution.chromosome_length, 64);
        assert_eq!(config.evolution.primitives.functions.len(), 8);
        assert_eq!(config.strategies, vec![Strategy::Bat]);
        assert_eq!(config.num_runs, 10);
    }

    #[test]
    fn conditional_alias_is_accepted() {
        let mut config = ExperimentConfig::default();
        config
            .apply_text("mathematical_functions = a<b?c:d\n")
            .unwrap();
        assert_eq!(config.evolution.primitives.functions, vec![Op::IfLess]);
    }

    #[test]
    fn frozen_constants_zero_the_delta() {
        let mut config = ExperimentConfig::default();
        config.apply_text("constants_can_evolve = no\n").unwrap();
        assert_eq!(config.evolution.variation.constant_delta, 0.0);
        config.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected_with_line_numbers() {
        let mut config = ExperimentConfig::default();
        let err = config.apply_text("runs = 3\nbogus_key = 1\n").unwrap_err();
        match err {
            ConfigError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn non_ring_architecture_is_rejected() {
        let mut config = ExperimentConfig::default();
        assert!(config
            .apply_text("sub_populations_architecture = torus\n")
            .is_err());
    }
}
