//! Dataset ingestion, stratified splitting and feature scaling.
//!
//! Each supported dataset has a [`DatasetSchema`] describing the column
//! layout of its standard UCI distribution file. Files are read from a data
//! directory; the Iris table also ships embedded in the crate.
//!
//! | name          | file                               | columns | label col | rows |
//! |---------------|------------------------------------|---------|-----------|------|
//! | abalone       | `abalone.data`                     | 9       | 0 (M/F/I) | 4177 |
//! | banknote      | `data_banknote_authentication.txt` | 5       | 4         | 1372 |
//! | glass         | `glass.data`                       | 11      | 10        | 214  |
//! | heart         | `processed.cleveland.data`         | 14      | 13        | 303  |
//! | diabetes      | `pima-indians-diabetes.csv`        | 9       | 8         | 768  |
//! | iris          | `iris.data`                        | 5       | 4         | 150  |
//! | iris-2class   | `iris.data` (first two classes)    | 5       | 4         | 150  |
//! | seeds         | `seeds_dataset.txt` (whitespace)   | 8       | 7         | 210  |
//! | wine          | `wine.data`                        | 14      | 0         | 178  |

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::{rng_for, RngStream};

const MODULE: &str = "data";

/// Embedded copy of the corrected Iris table in UCI `iris.data` format.
pub const IRIS_FIXTURE: &str = include_str!("../fixtures/iris.data");

/// Environment variable holding the default data directory.
pub const DATA_DIR_ENV: &str = "QWMAP_DATA_DIR";

pub const TRAIN_FRACTION: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Delimiter {
    Comma,
    Whitespace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelRule {
    /// Label cell matched (textually or numerically) against a class list.
    Classes(&'static [&'static str]),
    /// Numeric label, 0 -> class 0, anything else -> class 1.
    NonzeroIsPositive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSchema {
    pub name: &'static str,
    pub file_name: &'static str,
    pub delimiter: Delimiter,
    pub n_columns: usize,
    pub feature_columns: &'static [usize],
    pub label_column: usize,
    /// Feature columns whose distinct values are replaced by integer codes
    /// (in sorted order).
    pub categorical_columns: &'static [usize],
    pub label_rule: LabelRule,
    pub n_classes: usize,
    /// Rows in the file, before missing-value rows are dropped.
    pub expected_rows: usize,
    /// Keep only samples whose class index is below this bound.
    pub keep_classes_below: Option<usize>,
}

impl DatasetSchema {
    pub fn n_features(&self) -> usize {
        self.feature_columns.len()
    }
}

const IRIS_CLASSES: &[&str] = &["Iris-setosa", "Iris-versicolor", "Iris-virginica"];

pub const SCHEMAS: &[DatasetSchema] = &[
    DatasetSchema {
        name: "abalone",
        file_name: "abalone.data",
        delimiter: Delimiter::Comma,
        n_columns: 9,
        feature_columns: &[1, 2, 3, 4, 5, 6, 7, 8],
        label_column: 0,
        categorical_columns: &[],
        label_rule: LabelRule::Classes(&["M", "F", "I"]),
        n_classes: 3,
        expected_rows: 4177,
        keep_classes_below: None,
    },
    DatasetSchema {
        name: "banknote",
        file_name: "data_banknote_authentication.txt",
        delimiter: Delimiter::Comma,
        n_columns: 5,
        feature_columns: &[0, 1, 2, 3],
        label_column: 4,
        categorical_columns: &[],
        label_rule: LabelRule::Classes(&["0", "1"]),
        n_classes: 2,
        expected_rows: 1372,
        keep_classes_below: None,
    },
    DatasetSchema {
        name: "glass",
        file_name: "glass.data",
        delimiter: Delimiter::Comma,
        n_columns: 11,
        feature_columns: &[1, 2, 3, 4, 5, 6, 7, 8, 9],
        label_column: 10,
        categorical_columns: &[],
        label_rule: LabelRule::Classes(&["1", "2", "3", "4", "5", "6", "7"]),
        n_classes: 7,
        expected_rows: 214,
        keep_classes_below: None,
    },
    DatasetSchema {
        name: "heart",
        file_name: "processed.cleveland.data",
        delimiter: Delimiter::Comma,
        n_columns: 14,
        feature_columns: &[0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12],
        label_column: 13,
        // chest pain type, resting ECG, ST slope, thalassemia
        categorical_columns: &[2, 6, 10, 12],
        label_rule: LabelRule::NonzeroIsPositive,
        n_classes: 2,
        expected_rows: 303,
        keep_classes_below: None,
    },
    DatasetSchema {
        name: "diabetes",
        file_name: "pima-indians-diabetes.csv",
        delimiter: Delimiter::Comma,
        n_columns: 9,
        feature_columns: &[0, 1, 2, 3, 4, 5, 6, 7],
        label_column: 8,
        categorical_columns: &[],
        label_rule: LabelRule::Classes(&["0", "1"]),
        n_classes: 2,
        expected_rows: 768,
        keep_classes_below: None,
    },
    DatasetSchema {
        name: "iris",
        file_name: "iris.data",
        delimiter: Delimiter::Comma,
        n_columns: 5,
        feature_columns: &[0, 1, 2, 3],
        label_column: 4,
        categorical_columns: &[],
        label_rule: LabelRule::Classes(IRIS_CLASSES),
        n_classes: 3,
        expected_rows: 150,
        keep_classes_below: None,
    },
    DatasetSchema {
        name: "iris-2class",
        file_name: "iris.data",
        delimiter: Delimiter::Comma,
        n_columns: 5,
        feature_columns: &[0, 1, 2, 3],
        label_column: 4,
        categorical_columns: &[],
        label_rule: LabelRule::Classes(IRIS_CLASSES),
        n_classes: 2,
        expected_rows: 150,
        keep_classes_below: Some(2),
    },
    DatasetSchema {
        name: "seeds",
        file_name: "seeds_dataset.txt",
        delimiter: Delimiter::Whitespace,
        n_columns: 8,
        feature_columns: &[0, 1, 2, 3, 4, 5, 6],
        label_column: 7,
        categorical_columns: &[],
        label_rule: LabelRule::Classes(&["1", "2", "3"]),
        n_classes: 3,
        expected_rows: 210,
        keep_classes_below: None,
    },
    DatasetSchema {
        name: "wine",
        file_name: "wine.data",
        delimiter: Delimiter::Comma,
        n_columns: 14,
        feature_columns: &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13],
        label_column: 0,
        categorical_columns: &[],
        label_rule: LabelRule::Classes(&["1", "2", "3"]),
        n_classes: 3,
        expected_rows: 178,
        keep_classes_below: None,
    },
];

pub fn schema(name: &str) -> Result<&'static DatasetSchema> {
    SCHEMAS.iter().find(|s| s.name == name).ok_or_else(|| {
        let known: Vec<_> = SCHEMAS.iter().map(|s| s.name).collect();
        Error::config(MODULE, format!("unknown dataset '{name}' (known: {})", known.join(", ")))
    })
}

/// A loaded dataset: raw (unscaled) features and class indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }
}

/// Reads `path` according to `schema`.
pub fn load_csv(path: &Path, schema: &DatasetSchema) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Ingestion {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    parse_table(&text, schema, &path.display().to_string())
}

/// Loads a dataset by name from `data_dir` (falling back to
/// `$QWMAP_DATA_DIR`). Iris variants use the embedded table when no file is
/// present.
pub fn load_named(name: &str, data_dir: Option<&Path>) -> Result<Dataset> {
    let schema = schema(name)?;
    let dir: Option<PathBuf> = data_dir
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from));
    let file = dir.map(|d| d.join(schema.file_name));
    match file {
        Some(f) if f.exists() => load_csv(&f, schema),
        _ if schema.file_name == "iris.data" => parse_table(IRIS_FIXTURE, schema, "<embedded iris>"),
        Some(f) => Err(Error::Ingestion {
            path: f.display().to_string(),
            msg: "dataset file not found".into(),
        }),
        None => Err(Error::config(
            MODULE,
            format!(
                "dataset '{name}' needs {} in a data directory (--data-dir or ${DATA_DIR_ENV})",
                schema.file_name
            ),
        )),
    }
}

fn read_rows(text: &str, schema: &DatasetSchema, source: &str) -> Result<Vec<Vec<String>>> {
    let ingestion = |msg: String| Error::Ingestion { path: source.to_string(), msg };
    match schema.delimiter {
        Delimiter::Comma => {
            let mut reader = csv::ReaderBuilder::new()
                .has_headers(false)
                .flexible(true)
                .trim(csv::Trim::All)
                .from_reader(text.as_bytes());
            let mut rows = Vec::new();
            for (i, record) in reader.records().enumerate() {
                let record = record.map_err(|e| ingestion(format!("row {}: {e}", i + 1)))?;
                if record.iter().all(str::is_empty) {
                    continue;
                }
                rows.push(record.iter().map(str::to_string).collect());
            }
            Ok(rows)
        }
        Delimiter::Whitespace => Ok(text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.split_whitespace().map(str::to_string).collect())
            .collect()),
    }
}

fn parse_label(cell: &str, rule: LabelRule) -> Option<usize> {
    match rule {
        LabelRule::Classes(classes) => classes.iter().position(|c| {
            *c == cell
                || matches!((c.parse::<f64>(), cell.parse::<f64>()), (Ok(a), Ok(b)) if a == b)
        }),
        LabelRule::NonzeroIsPositive => {
            cell.parse::<f64>().ok().map(|v| if v == 0.0 { 0 } else { 1 })
        }
    }
}

/// Parses table text according to `schema`; `source` names it in errors.
pub fn parse_table(text: &str, schema: &DatasetSchema, source: &str) -> Result<Dataset> {
    let ingestion = |msg: String| Error::Ingestion { path: source.to_string(), msg };
    let rows = read_rows(text, schema, source)?;
    if rows.len() != schema.expected_rows {
        return Err(ingestion(format!(
            "{} expects {} rows, found {}",
            schema.name,
            schema.expected_rows,
            rows.len()
        )));
    }

    // categorical codes from the full column, sorted for order stability
    let mut codes: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for &col in schema.categorical_columns {
        let mut values: Vec<String> = rows
            .iter()
            .filter_map(|r| r.get(col))
            .filter(|v| v.as_str() != "?")
            .cloned()
            .collect();
        values.sort_by(|a, b| match (a.parse::<f64>(), b.parse::<f64>()) {
            (Ok(x), Ok(y)) => x.total_cmp(&y),
            _ => a.cmp(b),
        });
        values.dedup();
        codes.insert(col, values);
    }

    let mut features = Vec::with_capacity(rows.len());
    let mut labels = Vec::with_capacity(rows.len());
    let mut dropped = 0usize;
    'rows: for (i, row) in rows.iter().enumerate() {
        if row.len() != schema.n_columns {
            return Err(ingestion(format!(
                "row {}: expected {} columns, found {}",
                i + 1,
                schema.n_columns,
                row.len()
            )));
        }
        if row.iter().any(|c| c == "?") {
            dropped += 1;
            continue 'rows;
        }
        let label_cell = &row[schema.label_column];
        let label = parse_label(label_cell, schema.label_rule).ok_or_else(|| {
            ingestion(format!(
                "row {}, column {}: unknown class '{label_cell}'",
                i + 1,
                schema.label_column + 1
            ))
        })?;
        if schema.keep_classes_below.is_some_and(|k| label >= k) {
            continue;
        }
        let mut x = Vec::with_capacity(schema.n_features());
        for &col in schema.feature_columns {
            let cell = &row[col];
            let value = match codes.get(&col) {
                Some(values) => values.iter().position(|v| v == cell).unwrap() as f64,
                None => cell.parse::<f64>().map_err(|_| {
                    ingestion(format!("row {}, column {}: cannot parse '{cell}'", i + 1, col + 1))
                })?,
            };
            if !value.is_finite() {
                return Err(ingestion(format!("row {}, column {}: non-finite value", i + 1, col + 1)));
            }
            x.push(value);
        }
        features.push(x);
        labels.push(label);
    }
    if dropped > 0 {
        log::info!("{}: dropped {dropped} rows with missing values", schema.name);
    }
    Ok(Dataset { name: schema.name.to_string(), features, labels, n_classes: schema.n_classes })
}

/// Row indices of the three splits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
}

/// Largest-remainder apportionment of `total` units over `quotas`, never
/// giving a class more than `caps[c]`. Ties go to the lower class index.
fn apportion(quotas: &[f64], caps: &[usize], total: usize) -> Vec<usize> {
    let mut counts: Vec<usize> =
        quotas.iter().zip(caps).map(|(q, &cap)| (q.floor() as usize).min(cap)).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut remaining = total.saturating_sub(assigned);
    for c in order.into_iter().cycle().take(quotas.len() * 2) {
        if remaining == 0 {
            break;
        }
        if counts[c] < caps[c] {
            counts[c] += 1;
            remaining -= 1;
        }
    }
    counts
}

/// Stratified 75 / 12.5 / 12.5 split, shuffled by the split stream of `seed`.
///
/// Classes with fewer than 3 samples go entirely to the training split.
pub fn split_indices(labels: &[usize], n_classes: usize, seed: u64) -> SplitIndices {
    let mut rng = rng_for(seed, RngStream::Split);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    for members in &mut by_class {
        members.shuffle(&mut rng);
    }

    let eligible: Vec<bool> = by_class.iter().map(|m| m.len() >= 3).collect();
    for (c, members) in by_class.iter().enumerate() {
        if !members.is_empty() && !eligible[c] {
            log::warn!("class {c} has only {} samples; all go to the training split", members.len());
        }
    }
    let sizes: Vec<usize> = by_class
        .iter()
        .zip(&eligible)
        .map(|(m, &e)| if e { m.len() } else { 0 })
        .collect();
    let n: usize = sizes.iter().sum();

    let train_quota: Vec<f64> = sizes.iter().map(|&s| TRAIN_FRACTION * s as f64).collect();
    let train_counts =
        apportion(&train_quota, &sizes, (TRAIN_FRACTION * n as f64).round() as usize);
    let rest: Vec<usize> = sizes.iter().zip(&train_counts).map(|(s, t)| s - t).collect();
    let valid_quota: Vec<f64> = rest.iter().map(|&r| r as f64 / 2.0).collect();
    let rest_total: usize = rest.iter().sum();
    let valid_counts = apportion(&valid_quota, &rest, (rest_total as f64 / 2.0).round() as usize);

    let mut split = SplitIndices { train: Vec::new(), valid: Vec::new(), test: Vec::new() };
    for (c, members) in by_class.iter().enumerate() {
        if !eligible[c] {
            split.train.extend(members);
            continue;
        }
        let (t, v) = (train_counts[c], valid_counts[c]);
        split.train.extend(&members[..t]);
        split.valid.extend(&members[t..t + v]);
        split.test.extend(&members[t + v..]);
    }
    split.train.sort_unstable();
    split.valid.sort_unstable();
    split.test.sort_unstable();
    split
}

/// Per-feature min-max scaler fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
    pub lo: f64,
    pub hi: f64,
}

impl MinMaxScaler {
    pub fn fit(rows: &[Vec<f64>], lo: f64, hi: f64) -> Result<Self> {
        let first = rows.first().ok_or_else(|| Error::config(MODULE, "cannot fit a scaler on zero rows"))?;
        let mut mins = first.clone();
        let mut maxs = first.clone();
        for row in &rows[1..] {
            for (j, &v) in row.iter().enumerate() {
                mins[j] = mins[j].min(v);
                maxs[j] = maxs[j].max(v);
            }
        }
        for (j, (a, b)) in mins.iter().zip(&maxs).enumerate() {
            if a == b {
                log::warn!("feature {j} is constant in the training split; scaled to the midpoint");
            }
        }
        Ok(MinMaxScaler { mins, maxs, lo, hi })
    }

    /// Scales one row, clipping values outside the fitted range.
    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, &v)| {
                let (min, max) = (self.mins[j], self.maxs[j]);
                if max == min {
                    (self.lo + self.hi) / 2.0
                } else {
                    let unit = ((v - min) / (max - min)).clamp(0.0, 1.0);
                    self.lo + unit * (self.hi - self.lo)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl Split {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Preprocessed train / validation / test splits.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitData {
    pub train: Split,
    pub valid: Split,
    pub test: Split,
    pub indices: SplitIndices,
    pub scaler: MinMaxScaler,
}

impl SplitData {
    /// Splits `dataset` with `seed` and min-max scales every split into
    /// `[lo, hi]` with statistics from the training split only.
    pub fn prepare(dataset: &Dataset, seed: u64, (lo, hi): (f64, f64)) -> Result<Self> {
        if dataset.is_empty() {
            return Err(Error::config(MODULE, format!("dataset {} is empty", dataset.name)));
        }
        let indices = split_indices(&dataset.labels, dataset.n_classes, seed);
        let raw_train: Vec<Vec<f64>> = indices.train.iter().map(|&i| dataset.features[i].clone()).collect();
        let scaler = MinMaxScaler::fit(&raw_train, lo, hi)?;
        let take = |idx: &[usize]| Split {
            features: idx.iter().map(|&i| scaler.transform(&dataset.features[i])).collect(),
            labels: idx.iter().map(|&i| dataset.labels[i]).collect(),
        };
        Ok(SplitData {
            train: take(&indices.train),
            valid: take(&indices.valid),
            test: take(&indices.test),
            indices,
            scaler,
        })
    }
}
