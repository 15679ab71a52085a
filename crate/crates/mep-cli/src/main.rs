//! `mep` command line: train, predict, benchmark, summary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mep::engine::EngineError;
use mep::{ClassifierModel, Dataset, Strategy};

use mep_cli::bench::{
    benchmark, delta_report, records_to_csv, train_once, train_report, BenchError,
};
use mep_cli::config::ExperimentConfig;
use mep_cli::data::{self, load, CsvOptions, DataFormat, LabelColumn, LoadedData};

#[derive(Parser)]
#[command(
    name = "mep",
    version,
    about = "Multi Expression Programming classifiers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (default: one per core)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Per-generation progress on stdout
    #[arg(long, global = true)]
    verbose: bool,
}

#[derive(Args, Clone)]
struct DataArgs {
    /// Dataset file
    #[arg(long)]
    data: Option<PathBuf>,
    /// Dataset format: auto, csv or proben1
    #[arg(long, default_value_t = DataFormat::Auto)]
    format: DataFormat,
    /// CSV label column: last, none or a 0-based index
    #[arg(long)]
    label_column: Option<LabelColumn>,
    /// CSV files start with a header row
    #[arg(long)]
    csv_header: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model and write it to a file
    Train {
        /// Experiment configuration file
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        data: DataArgs,
        /// Fitness strategy: regression, bet, bat, wta-f, wta-s, wta-d or cc
        #[arg(long)]
        strategy: Option<Strategy>,
        /// Master seed
        #[arg(long)]
        seed: Option<u64>,
        /// Min-max scale features to [0,1], fitted on the training split
        #[arg(long)]
        normalize: bool,
        /// Model output path (default model.txt)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify rows of a data file with a trained model
    Predict {
        /// Model file written by `mep train`
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        /// Write predictions here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeated seeded runs per strategy with Best/Avg/Dev statistics
    Benchmark {
        /// Experiment configuration file
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        data: DataArgs,
        /// Restrict to one strategy
        #[arg(long)]
        strategy: Option<Strategy>,
        /// Master seed (run i uses a seed mixed from it)
        #[arg(long)]
        seed: Option<u64>,
        /// Number of runs per strategy
        #[arg(long)]
        runs: Option<usize>,
        /// Raw per-run CSV output path
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dataset statistics and split sizes
    Summary {
        #[command(flatten)]
        data: DataArgs,
    },
}

enum CliError {
    /// Exit code 1: bad input (files, data, model/data mismatches).
    Input(String),
    /// Exit code 2: bad configuration (parameters, strategy applicability).
    Config(String),
}

impl From<data::DataError> for CliError {
    fn from(e: data::DataError) -> CliError {
        CliError::Input(e.to_string())
    }
}

impl From<mep_cli::config::ConfigError> for CliError {
    fn from(e: mep_cli::config::ConfigError) -> CliError {
        CliError::Config(e.to_string())
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> CliError {
        match e {
            EngineError::EmptySplit(_)
            | EngineError::SplitMismatch
            | EngineError::EmptyTrainClass(_)
            | EngineError::VariableCountMismatch { .. }
            | EngineError::Fitness(_) => CliError::Input(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> CliError {
        match e {
            BenchError::NotApplicable => CliError::Config(e.to_string()),
            BenchError::NonPositiveDelta => CliError::Input(e.to_string()),
            BenchError::Engine(inner) => inner.into(),
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn main() -> ExitCode {
    // die quietly when stdout closes early (e.g. piping into `head`)
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
    {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
        Err(CliError::Config(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Train {
            config,
            data,
            strategy,
            seed,
            normalize,
            out,
        } => cmd_train(
            config.as_deref(),
            data,
            *strategy,
            *seed,
            *normalize,
            out.as_deref(),
            cli.verbose,
        ),
        Command::Predict { model, data, out } => cmd_predict(model, data, out.as_deref()),
        Command::Benchmark {
            config,
            data,
            strategy,
            seed,
            runs,
            out,
        } => cmd_benchmark(
            config.as_deref(),
            data,
            *strategy,
            *seed,
            *runs,
            out.as_deref(),
        ),
        Command::Summary { data } => cmd_summary(data),
    }
}

fn build_config(
    config_path: Option<&Path>,
    data: &DataArgs,
    strategy: Option<Strategy>,
    seed: Option<u64>,
    runs: Option<usize>,
) -> Result<ExperimentConfig, CliError> {
    let mut config = match config_path {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(path) = &data.data {
        config.dataset = Some(path.clone());
    }
    if data.format != DataFormat::Auto {
        config.format = data.format;
    }
    if let Some(label_column) = data.label_column {
        config.csv.label_column = label_column;
    }
    if data.csv_header {
        config.csv.has_header = true;
    }
    if let Some(strategy) = strategy {
        config.evolution.strategy = strategy;
        config.strategies = vec![strategy];
    }
    if let Some(seed) = seed {
        config.evolution.master_seed = seed;
    }
    if let Some(runs) = runs {
        config.num_runs = runs;
    }
    config.validate()?;
    Ok(config)
}

/// Loads the configured dataset and produces the three splits, optionally
/// min-max scaled with bounds fitted on the training split.
fn load_splits(config: &ExperimentConfig) -> Result<(Dataset, Dataset, Dataset), CliError> {
    let path = config
        .dataset
        .as_ref()
        .ok_or_else(|| CliError::Config("no dataset given (use --data or the config)".into()))?;
    let dataset = load(path, config.format, &config.csv)?.into_dataset()?;
    let (train, validation, test) =
        mep::split(&dataset, &config.split).map_err(|e| CliError::Input(e.to_string()))?;
    for (name, part) in [
        ("training", &train),
        ("validation", &validation),
        ("test", &test),
    ] {
        for class in part.missing_classes() {
            eprintln!("warning: the {name} split has no rows of class {class}");
        }
    }
    if config.normalize {
        let scaler = data::MinMaxScaler::fit(&train.features);
        Ok((
            scaler.transform(&train),
            scaler.transform(&validation),
            scaler.transform(&test),
        ))
    } else {
        Ok((train, validation, test))
    }
}

fn cmd_train(
    config_path: Option<&Path>,
    data: &DataArgs,
    strategy: Option<Strategy>,
    seed: Option<u64>,
    normalize: bool,
    out: Option<&Path>,
    verbose: bool,
) -> Result<(), CliError> {
    let mut config = build_config(config_path, data, strategy, seed, None)?;
    if normalize {
        config.normalize = true;
    }
    let (train, validation, test) = load_splits(&config)?;
    if config.evolution.strategy.requires_binary() && train.num_classes() != 2 {
        return Err(CliError::Config("N/A: strategy requires 2 classes".into()));
    }
    let (result, seconds) = train_once(&config, &train, &validation, &test, verbose)?;
    let model_path = out
        .map(Path::to_path_buf)
        .or_else(|| config.output_model.clone())
        .unwrap_or_else(|| PathBuf::from("model.txt"));
    write_file(&model_path, &result.best_model.to_text())?;
    print!(
        "{}",
        train_report(&config.problem_name(), &config.evolution, &result, &train)
    );
    println!("seconds: {seconds:.2}");
    println!("model: {}", model_path.display());
    Ok(())
}

fn cmd_predict(
    model_path: &Path,
    data_args: &DataArgs,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let text = fs::read_to_string(model_path)
        .map_err(|e| CliError::Input(format!("{}: {e}", model_path.display())))?;
    let model = ClassifierModel::from_text(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", model_path.display())))?;

    let data_path = data_args
        .data
        .as_ref()
        .ok_or_else(|| CliError::Config("predict needs --data".into()))?;
    let mut options = CsvOptions::default();
    if let Some(label_column) = data_args.label_column {
        options.label_column = label_column;
    }
    options.has_header = data_args.csv_header;
    let loaded: LoadedData = load(data_path, data_args.format, &options)?;

    let mut lines = String::new();
    let mut errors = 0usize;
    let mut invalid_rows = 0usize;
    let rows = loaded.features.rows();
    for r in 0..rows {
        let prediction = model
            .predict_row(loaded.features.row(r))
            .map_err(|e| CliError::Input(e.to_string()))?;
        if prediction.invalid {
            invalid_rows += 1;
        }
        lines.push_str(&model.class_name(prediction.class));
        if prediction.invalid {
            lines.push_str("\tinvalid");
        }
        lines.push('\n');
        if let Some(labels) = &loaded.labels {
            // map the file's label through the model's dictionary
            let file_class = labels.label(r);
            let name = match loaded.label_names.as_ref().and_then(|n| n.get(file_class)) {
                Some(name) => name.clone(),
                None => file_class.to_string(),
            };
            let truth = model
                .class_index(&name)
                .map_err(|e| CliError::Input(e.to_string()))?;
            if truth != prediction.class {
                errors += 1;
            }
        }
    }

    match out {
        Some(path) => write_file(path, &lines)?,
        None => print!("{lines}"),
    }
    if loaded.labels.is_some() && rows > 0 {
        println!(
            "error_percent: {:.4}",
            errors as f64 / rows as f64 * 100.0
        );
    }
    println!("invalid_rows: {invalid_rows}");
    Ok(())
}

fn cmd_benchmark(
    config_path: Option<&Path>,
    data: &DataArgs,
    strategy: Option<Strategy>,
    seed: Option<u64>,
    runs: Option<usize>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let config = build_config(config_path, data, strategy, seed, runs)?;
    let (train, validation, test) = load_splits(&config)?;
    let (table, records) = benchmark(&config, &train, &validation, &test)?;
    print!("{}", table.render());
    print!("{}", delta_report(&table));
    let csv_path = out
        .map(Path::to_path_buf)
        .or_else(|| config.output_csv.clone())
        .unwrap_or_else(|| PathBuf::from("benchmark_results.csv"));
    write_file(&csv_path, &records_to_csv(&records))?;
    println!("raw results: {}", csv_path.display());
    Ok(())
}

fn cmd_summary(data_args: &DataArgs) -> Result<(), CliError> {
    let path = data_args
        .data
        .as_ref()
        .ok_or_else(|| CliError::Config("summary needs --data".into()))?;
    let mut options = CsvOptions::default();
    if let Some(label_column) = data_args.label_column {
        options.label_column = label_column;
    }
    options.has_header = data_args.csv_header;
    let dataset = load(path, data_args.format, &options)?.into_dataset()?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    println!("problem\tattributes\tclasses\texamples\ttrain+validation+test");
    println!(
        "{}",
        data::summary_line(&name, &dataset, &mep::SplitSpec::default())
    );
    Ok(())
}
