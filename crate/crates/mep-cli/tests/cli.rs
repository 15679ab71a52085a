//! End-to-end tests of the `mep` binary and of benchmark/report consistency.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mep::{ClassifierModel, ModelDecision, Strategy};
use mep_cli::bench::{benchmark, records_to_csv, truncate2};
use mep_cli::config::ExperimentConfig;
use mep_cli::data::{load_csv, write_csv, CsvOptions};

fn mep_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mep"))
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

/// Tiny separable two-class CSV dataset.
fn write_binary_csv(path: &Path) {
    let mut text = String::new();
    for i in 0..32 {
        let a = (i % 8) as f64 / 8.0;
        let b = ((i * 5 + 2) % 8) as f64 / 8.0;
        text.push_str(&format!("{a},{b},{}\n", usize::from(a > b)));
    }
    fs::write(path, text).unwrap();
}

fn write_tiny_config(path: &Path, data: &Path, strategy: &str) -> PathBuf {
    let text = format!(
        "dataset = {}\n\
         sub_population_size = 10\n\
         number_of_sub_populations = 2\n\
         chromosome_length = 12\n\
         number_of_generations = 4\n\
         mutation_probability = 0.05\n\
         strategy = {strategy}\n\
         runs = 2\n",
        data.display()
    );
    fs::write(path, text).unwrap();
    path.to_path_buf()
}

#[test]
fn train_writes_byte_identical_models_for_a_fixed_seed() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("toy.csv");
    write_binary_csv(&data);
    let config = write_tiny_config(&dir.path().join("toy.conf"), &data, "bat");

    let mut models = Vec::new();
    for name in ["a.txt", "b.txt"] {
        let out = dir.path().join(name);
        let result = mep_bin()
            .current_dir(dir.path())
            .args(["train", "--config"])
            .arg(&config)
            .args(["--seed", "9", "--out"])
            .arg(&out)
            .output()
            .unwrap();
        assert!(
            result.status.success(),
            "train failed: {}",
            stderr_of(&result)
        );
        let stdout = stdout_of(&result);
        assert!(stdout.contains("expression["), "report misses the expression: {stdout}");
        models.push(fs::read(&out).unwrap());
    }
    assert_eq!(models[0], models[1], "model files differ between invocations");
}

#[test]
fn predicting_the_training_split_reproduces_the_reported_training_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("toy.csv");
    write_binary_csv(&data);
    let config_path = write_tiny_config(&dir.path().join("toy.conf"), &data, "cc");

    let model_path = dir.path().join("model.txt");
    let result = mep_bin()
        .current_dir(dir.path())
        .args(["train", "--config"])
        .arg(&config_path)
        .args(["--seed", "3", "--out"])
        .arg(&model_path)
        .output()
        .unwrap();
    assert!(result.status.success(), "{}", stderr_of(&result));
    let report = stdout_of(&result);
    let reported: f64 = report
        .lines()
        .find_map(|l| l.strip_prefix("train_error_percent: "))
        .expect("report contains the training error")
        .parse()
        .unwrap();

    // rebuild the same training split and write it as CSV
    let config = ExperimentConfig::from_file(&config_path).unwrap();
    let dataset = load_csv(&data, &CsvOptions::default())
        .unwrap()
        .into_dataset()
        .unwrap();
    let (train, _, _) = mep::split(&dataset, &config.split).unwrap();
    let train_csv = dir.path().join("train.csv");
    write_csv(&train, &train_csv).unwrap();

    let result = mep_bin()
        .current_dir(dir.path())
        .args(["predict", "--model"])
        .arg(&model_path)
        .arg("--data")
        .arg(&train_csv)
        .output()
        .unwrap();
    assert!(result.status.success(), "{}", stderr_of(&result));
    let stdout = stdout_of(&result);
    let predicted: f64 = stdout
        .lines()
        .find_map(|l| l.strip_prefix("error_percent: "))
        .expect("prediction summary present")
        .parse()
        .unwrap();
    assert!(
        (predicted - reported).abs() < 5e-5,
        "predict reported {predicted}%, train reported {reported}%"
    );
}

#[test]
fn unlabeled_data_yields_predictions_without_an_accuracy_line() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("toy.csv");
    write_binary_csv(&data);
    let config = write_tiny_config(&dir.path().join("toy.conf"), &data, "bat");
    let model_path = dir.path().join("model.txt");
    let result = mep_bin()
        .current_dir(dir.path())
        .args(["train", "--config"])
        .arg(&config)
        .args(["--seed", "4", "--out"])
        .arg(&model_path)
        .output()
        .unwrap();
    assert!(result.status.success(), "{}", stderr_of(&result));

    // strip the label column
    let unlabeled = dir.path().join("unlabeled.csv");
    let rows: String = fs::read_to_string(&data)
        .unwrap()
        .lines()
        .map(|l| {
            let mut parts: Vec<&str> = l.split(',').collect();
            parts.pop();
            parts.join(",") + "\n"
        })
        .collect();
    fs::write(&unlabeled, rows).unwrap();

    let result = mep_bin()
        .current_dir(dir.path())
        .args(["predict", "--model"])
        .arg(&model_path)
        .arg("--data")
        .arg(&unlabeled)
        .args(["--label-column", "none"])
        .output()
        .unwrap();
    assert!(result.status.success(), "{}", stderr_of(&result));
    let stdout = stdout_of(&result);
    assert!(!stdout.contains("error_percent"));
    assert!(stdout.contains("invalid_rows: 0"));
    assert_eq!(
        stdout.lines().filter(|l| *l == "0" || *l == "1").count(),
        32
    );
}

#[test]
fn rows_hitting_invalid_genes_are_flagged_and_tallied() {
    let dir = tempfile::tempdir().unwrap();
    // hand-built model whose output gene is ln(x0)
    let model = ClassifierModel {
        strategy: Strategy::Bat,
        chromosome: mep::Chromosome::from_text("0: x0\n1: ln 0\nconstants:\nthreshold: 0.5\n")
            .unwrap(),
        num_classes: 2,
        num_features: 1,
        label_names: None,
        decision: ModelDecision::Threshold {
            output_gene: 1,
            threshold: 0.0,
        },
    };
    let model_path = dir.path().join("model.txt");
    fs::write(&model_path, model.to_text()).unwrap();
    let data = dir.path().join("rows.csv");
    fs::write(&data, "2.0\n-1.0\n0.5\n").unwrap();

    let result = mep_bin()
        .current_dir(dir.path())
        .args(["predict", "--model"])
        .arg(&model_path)
        .arg("--data")
        .arg(&data)
        .args(["--label-column", "none"])
        .output()
        .unwrap();
    assert!(result.status.success(), "{}", stderr_of(&result));
    let stdout = stdout_of(&result);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "1"); // ln(2) > 0
    assert_eq!(lines[1], "0\tinvalid");
    assert_eq!(lines[2], "0"); // ln(0.5) < 0
    assert!(stdout.contains("invalid_rows: 1"));
}

#[test]
fn binary_strategy_on_three_classes_is_rejected_as_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("three.csv");
    let mut text = String::new();
    for i in 0..30 {
        text.push_str(&format!("{}.0,{}\n", i, i % 3));
    }
    fs::write(&data, text).unwrap();
    let config = write_tiny_config(&dir.path().join("three.conf"), &data, "bat");

    let result = mep_bin()
        .current_dir(dir.path())
        .args(["train", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(result.status.code(), Some(2));
    assert!(
        stderr_of(&result).contains("N/A: strategy requires 2 classes"),
        "stderr: {}",
        stderr_of(&result)
    );
}

#[test]
fn missing_input_file_exits_with_code_one() {
    let result = mep_bin()
        .args(["summary", "--data", "/nonexistent/nowhere.csv"])
        .output()
        .unwrap();
    assert_eq!(result.status.code(), Some(1));
}

#[test]
fn unknown_config_key_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.conf");
    fs::write(&config, "no_such_key = 1\n").unwrap();
    let result = mep_bin()
        .args(["train", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn benchmark_output_is_deterministic_and_table_matches_the_csv() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("toy.csv");
    write_binary_csv(&data);
    let mut config = ExperimentConfig::default();
    config
        .apply_text(
            "sub_population_size = 8\n\
             number_of_sub_populations = 2\n\
             chromosome_length = 10\n\
             number_of_generations = 3\n\
             mutation_probability = 0.05\n\
             strategies = bat, cc\n\
             runs = 3\n\
             master_seed = 11\n",
        )
        .unwrap();
    config.dataset = Some(data.clone());
    let dataset = load_csv(&data, &CsvOptions::default())
        .unwrap()
        .into_dataset()
        .unwrap();
    let (train, validation, test) = mep::split(&dataset, &config.split).unwrap();

    let (table_a, records_a) = benchmark(&config, &train, &validation, &test).unwrap();
    let (table_b, records_b) = benchmark(&config, &train, &validation, &test).unwrap();
    // identical up to the wall-time column
    let strip_seconds = |csv: String| -> String {
        csv.lines()
            .map(|l| l.rsplit_once(',').map(|(front, _)| front).unwrap_or(l))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(
        strip_seconds(records_to_csv(&records_a)),
        strip_seconds(records_to_csv(&records_b))
    );
    assert_eq!(table_a.render(), table_b.render());

    // the rendered cells equal the raw CSV values truncated at two decimals
    let rendered = table_a.render();
    for cell in &table_a.cells {
        let errors: Vec<f64> = records_a
            .iter()
            .filter(|r| r.strategy == cell.strategy)
            .map(|r| r.test_error)
            .collect();
        assert_eq!(errors.len(), 3);
        let best = errors.iter().cloned().fold(f64::INFINITY, f64::min);
        let average = errors.iter().sum::<f64>() / errors.len() as f64;
        let stats = cell.outcome.as_ref().unwrap();
        assert_eq!(stats.best, best);
        assert!((stats.average - average).abs() < 1e-12);
        let best_rendered = format!("{:.2}", truncate2(best));
        assert!(
            rendered.contains(&best_rendered),
            "rendered table misses truncated best {best_rendered}: {rendered}"
        );
    }
}

#[test]
fn verbose_training_logs_one_tsv_line_per_generation() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("toy.csv");
    write_binary_csv(&data);
    let config = write_tiny_config(&dir.path().join("toy.conf"), &data, "bat");
    let result = mep_bin()
        .current_dir(dir.path())
        .args(["train", "--verbose", "--config"])
        .arg(&config)
        .args(["--seed", "2"])
        .output()
        .unwrap();
    assert!(result.status.success(), "{}", stderr_of(&result));
    let stdout = stdout_of(&result);
    // generation index, one best fitness per subpopulation, validation error
    let log_lines: Vec<&str> = stdout
        .lines()
        .filter(|l| l.split('\t').count() == 4 && l.split('\t').next().unwrap().parse::<usize>().is_ok())
        .collect();
    assert_eq!(log_lines.len(), 5, "expected generations 0..=4: {stdout}");
    assert!(log_lines[0].starts_with("0\t"));
    assert!(log_lines[4].starts_with("4\t"));
}

#[test]
fn summary_prints_table_style_split_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("toy.csv");
    write_binary_csv(&data);
    let result = mep_bin()
        .args(["summary", "--data"])
        .arg(&data)
        .output()
        .unwrap();
    assert!(result.status.success());
    let stdout = stdout_of(&result);
    assert!(stdout.contains("toy\t2\t2\t32\t16+8+8"), "stdout: {stdout}");
}
