//! Dataset loaders and writers: generic CSV and PROBEN1-style `.dt` files.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use mep::dataset::DatasetError;
use mep::{DataMatrix, Dataset, LabelVector, SplitSpec};

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("header mismatch: {0}")]
    Header(String),
    #[error("dataset has no rows")]
    Empty,
    #[error("dataset has no label column")]
    Unlabeled,
    #[error("class {0} has no examples")]
    UnusedClass(usize),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

fn parse_err(line: usize, message: impl Into<String>) -> DataError {
    DataError::Parse {
        line,
        message: message.into(),
    }
}

/// On-disk dataset format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DataFormat {
    /// Decide by extension: `.dt` loads as PROBEN1, everything else as CSV.
    #[default]
    Auto,
    Csv,
    Proben1,
}

impl FromStr for DataFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<DataFormat, String> {
        match s {
            "auto" => Ok(DataFormat::Auto),
            "csv" => Ok(DataFormat::Csv),
            "proben1" => Ok(DataFormat::Proben1),
            other => Err(format!("unknown format `{other}`")),
        }
    }
}

impl fmt::Display for DataFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DataFormat::Auto => "auto",
            DataFormat::Csv => "csv",
            DataFormat::Proben1 => "proben1",
        })
    }
}

/// Which CSV column carries the class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelColumn {
    #[default]
    Last,
    Index(usize),
    /// No labels; the data can be predicted on but not trained on.
    None,
}

impl FromStr for LabelColumn {
    type Err = String;

    fn from_str(s: &str) -> Result<LabelColumn, String> {
        match s {
            "last" => Ok(LabelColumn::Last),
            "none" => Ok(LabelColumn::None),
            other => other
                .parse::<usize>()
                .map(LabelColumn::Index)
                .map_err(|_| format!("label column must be `last`, `none` or an index, got `{other}`")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub delimiter: u8,
    pub has_header: bool,
    pub label_column: LabelColumn,
}

impl Default for CsvOptions {
    fn default() -> CsvOptions {
        CsvOptions {
            delimiter: b',',
            has_header: false,
            label_column: LabelColumn::Last,
        }
    }
}

/// A loaded file; labels are optional so prediction inputs can omit them.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub features: DataMatrix,
    pub labels: Option<LabelVector>,
    pub feature_names: Option<Vec<String>>,
    pub label_names: Option<Vec<String>>,
}

impl LoadedData {
    /// Requires labels and every declared class to be present.
    pub fn into_dataset(self) -> Result<Dataset, DataError> {
        let labels = self.labels.ok_or(DataError::Unlabeled)?;
        let mut dataset = Dataset::new(self.features, labels)?;
        if let Some(names) = self.feature_names {
            dataset = dataset.with_feature_names(names)?;
        }
        if let Some(names) = self.label_names {
            dataset = dataset.with_label_names(names);
        }
        if let Some(&class) = dataset.missing_classes().first() {
            return Err(DataError::UnusedClass(class));
        }
        Ok(dataset)
    }
}

pub fn load(path: &Path, format: DataFormat, options: &CsvOptions) -> Result<LoadedData, DataError> {
    let format = match format {
        DataFormat::Auto => {
            if path.extension().and_then(|e| e.to_str()) == Some("dt") {
                DataFormat::Proben1
            } else {
                DataFormat::Csv
            }
        }
        other => other,
    };
    match format {
        DataFormat::Csv => load_csv(path, options),
        DataFormat::Proben1 => load_proben1(path),
        DataFormat::Auto => unreachable!(),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DataError + '_ {
    move |source| DataError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Loads a delimited text file. Labels (integers or strings) are mapped to
/// class indices in order of first appearance and the original spellings are
/// kept as class names.
pub fn load_csv(path: &Path, options: &CsvOptions) -> Result<LoadedData, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(false)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => DataError::Io {
                path: path.display().to_string(),
                source: std::io::Error::other(e.to_string()),
            },
            _ => parse_err(0, e.to_string()),
        })?;

    let mut header: Option<Vec<String>> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    let mut label_names: Vec<String> = Vec::new();

    for (index, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e
                .position()
                .map(|p| p.line() as usize)
                .unwrap_or(index + 1);
            parse_err(line, e.to_string())
        })?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(index + 1);
        if index == 0 && options.has_header {
            header = Some(record.iter().map(String::from).collect());
            continue;
        }
        let label_index = match options.label_column {
            LabelColumn::Last => Some(record.len().saturating_sub(1)),
            LabelColumn::Index(i) => {
                if i >= record.len() {
                    return Err(parse_err(
                        line,
                        format!("label column {i} out of range for {} fields", record.len()),
                    ));
                }
                Some(i)
            }
            LabelColumn::None => None,
        };
        let mut features = Vec::with_capacity(record.len());
        for (col, field) in record.iter().enumerate() {
            if Some(col) == label_index {
                let name = field.to_string();
                let class = match label_names.iter().position(|n| *n == name) {
                    Some(class) => class,
                    None => {
                        label_names.push(name);
                        label_names.len() - 1
                    }
                };
                labels.push(class);
            } else {
                let value: f64 = field.parse().map_err(|_| {
                    parse_err(line, format!("non-numeric feature value `{field}`"))
                })?;
                if !value.is_finite() {
                    return Err(parse_err(line, format!("non-finite feature value `{field}`")));
                }
                features.push(value);
            }
        }
        rows.push(features);
    }

    if rows.is_empty() {
        return Err(DataError::Empty);
    }
    let features = DataMatrix::from_rows(&rows).map_err(|e| parse_err(0, e.to_string()))?;
    let feature_names = header.map(|mut names| {
        if let LabelColumn::Last = options.label_column {
            names.pop();
        } else if let LabelColumn::Index(i) = options.label_column {
            if i < names.len() {
                names.remove(i);
            }
        }
        names
    });
    let (labels, label_names) = if matches!(options.label_column, LabelColumn::None) {
        (None, None)
    } else {
        let num_classes = label_names.len().max(2);
        (
            Some(LabelVector::new(labels, num_classes).map_err(|e| parse_err(0, e.to_string()))?),
            Some(label_names),
        )
    };
    Ok(LoadedData {
        features,
        labels,
        feature_names,
        label_names,
    })
}

/// Decodes a 1-of-m output vector: entries must be exactly 0 or 1 with a
/// single 1, whose index is the class.
pub fn one_of_m_decode(outputs: &[f64]) -> Result<usize, String> {
    let mut class = None;
    for (i, &v) in outputs.iter().enumerate() {
        if v == 1.0 {
            if class.is_some() {
                return Err("ambiguous class encoding: multiple 1 entries".into());
            }
            class = Some(i);
        } else if v != 0.0 {
            return Err(format!("output entry {v} is not exactly 0 or 1"));
        }
    }
    class.ok_or_else(|| "ambiguous class encoding: no 1 entry".into())
}

/// Loads a PROBEN1-style file: `key=value` header lines declaring input,
/// output and example counts, then whitespace-separated rows of inputs
/// followed by a 1-of-m output vector.
///
/// Header keys are not pinned: inputs are the sum of `*_in` values, outputs
/// the sum of `*_out` values, and the declared example count (when any
/// `*_examples` keys are present) must match the parsed rows.
pub fn load_proben1(path: &Path) -> Result<LoadedData, DataError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut num_inputs = 0usize;
    let mut num_outputs = 0usize;
    let mut declared_examples = 0usize;
    let mut saw_example_counts = false;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    let mut in_header = true;

    for (index, raw) in text.lines().enumerate() {
        let lineno = index + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if in_header {
            if let Some((key, value)) = line.split_once('=') {
                let key = key.trim();
                let value: usize = value.trim().parse().map_err(|_| {
                    parse_err(lineno, format!("header value for `{key}` is not an integer"))
                })?;
                if key.ends_with("_in") {
                    num_inputs += value;
                } else if key.ends_with("_out") {
                    num_outputs += value;
                } else if key.ends_with("_examples") {
                    declared_examples += value;
                    saw_example_counts = true;
                }
                // other keys are tolerated and ignored
                continue;
            }
            in_header = false;
            if num_outputs < 2 {
                return Err(DataError::Header(format!(
                    "need at least 2 output columns for 1-of-m classification, header declares {num_outputs}"
                )));
            }
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != num_inputs + num_outputs {
            return Err(parse_err(
                lineno,
                format!(
                    "expected {} fields ({} inputs + {} outputs), got {}",
                    num_inputs + num_outputs,
                    num_inputs,
                    num_outputs,
                    fields.len()
                ),
            ));
        }
        let mut values = Vec::with_capacity(fields.len());
        for field in &fields {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad value `{field}`")))?;
            if !v.is_finite() {
                return Err(parse_err(lineno, format!("non-finite value `{field}`")));
            }
            values.push(v);
        }
        let class =
            one_of_m_decode(&values[num_inputs..]).map_err(|m| parse_err(lineno, m))?;
        values.truncate(num_inputs);
        rows.push(values);
        labels.push(class);
    }

    if rows.is_empty() {
        return Err(DataError::Empty);
    }
    if saw_example_counts && declared_examples != rows.len() {
        return Err(DataError::Header(format!(
            "header declares {declared_examples} examples, file has {}",
            rows.len()
        )));
    }
    let features = DataMatrix::from_rows(&rows).map_err(|e| parse_err(0, e.to_string()))?;
    let labels = LabelVector::new(labels, num_outputs).map_err(|e| parse_err(0, e.to_string()))?;
    Ok(LoadedData {
        features,
        labels: Some(labels),
        feature_names: None,
        label_names: None,
    })
}

/// Writes a dataset as CSV (features then the label column), losslessly
/// enough that reloading reproduces identical values.
pub fn write_csv(dataset: &Dataset, path: &Path) -> Result<(), DataError> {
    let mut out = String::new();
    if let Some(names) = &dataset.feature_names {
        out.push_str(&names.join(","));
        out.push_str(",class\n");
    }
    for r in 0..dataset.num_rows() {
        for v in dataset.features.row(r) {
            out.push_str(&format!("{v:?},"));
        }
        let class = dataset.labels.label(r);
        match dataset.label_names.as_ref().and_then(|n| n.get(class)) {
            Some(name) => out.push_str(name),
            None => out.push_str(&class.to_string()),
        }
        out.push('\n');
    }
    let mut file = fs::File::create(path).map_err(io_err(path))?;
    file.write_all(out.as_bytes()).map_err(io_err(path))?;
    Ok(())
}

/// Feature scaler to [0, 1], fitted on the training split only. Columns
/// with a single value map to 0.
#[derive(Debug, Clone)]
pub struct MinMaxScaler {
    bounds: Vec<(f64, f64)>,
}

impl MinMaxScaler {
    pub fn fit(train: &DataMatrix) -> MinMaxScaler {
        let mut bounds = vec![(f64::INFINITY, f64::NEG_INFINITY); train.cols()];
        for r in 0..train.rows() {
            for (c, &v) in train.row(r).iter().enumerate() {
                bounds[c].0 = bounds[c].0.min(v);
                bounds[c].1 = bounds[c].1.max(v);
            }
        }
        MinMaxScaler { bounds }
    }

    pub fn transform(&self, dataset: &Dataset) -> Dataset {
        let mut values = Vec::with_capacity(dataset.num_rows() * dataset.num_features());
        for r in 0..dataset.num_rows() {
            for (c, &v) in dataset.features.row(r).iter().enumerate() {
                let (lo, hi) = self.bounds[c];
                values.push(if hi > lo { (v - lo) / (hi - lo) } else { 0.0 });
            }
        }
        let features = DataMatrix::new(dataset.num_rows(), dataset.num_features(), values)
            .expect("scaling preserves shape and finiteness");
        Dataset {
            features,
            labels: dataset.labels.clone(),
            feature_names: dataset.feature_names.clone(),
            label_names: dataset.label_names.clone(),
        }
    }
}

/// One summary line per dataset: attributes, classes, examples and the
/// split sizes under the given fractions.
pub fn summary_line(name: &str, dataset: &Dataset, spec: &SplitSpec) -> String {
    let (train, validation, test) =
        mep::split(dataset, spec).expect("summary uses validated fractions");
    format!(
        "{}\t{}\t{}\t{}\t{}+{}+{}",
        name,
        dataset.num_features(),
        dataset.num_classes(),
        dataset.num_rows(),
        train.num_rows(),
        validation.num_rows(),
        test.num_rows()
    )
}
