//! Single runs, sweeps and the on-disk result layout.
//!
//! ```text
//! <out>/runs/<stem>.jsonl       one {epoch, train_loss, train_acc, valid_loss, valid_acc} per line
//! <out>/runs/<stem>.model.json  final parameters
//! <out>/runs/<stem>.test.json   key, test accuracy, per-sample correctness, max |theta|
//! <out>/summary.csv             one row per run
//! ```
//!
//! The `.test.json` sidecar is written last and marks a run as complete;
//! a sweep skips every cell whose sidecar already parses.

use std::fs::{self, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{load_named, Dataset, SplitData};
use crate::embedding::{EmbeddingKind, EmbeddingSpec};
use crate::error::{Error, Result};
use crate::metrics::{point_of_convergence, PocAnchor};
use crate::mlp::{MlpModel, INPUTS};
use crate::model::VqcModel;
use crate::remap::RemapFunction;
use crate::report;
use crate::seeding::{rng_for, RngStream};
use crate::training::{train, ModelKind, RunKey, TrainRecord, TrainingConfig};

const MODULE: &str = "runner";

/// The only dataset the MLP baseline is defined for.
pub const MLP_DATASET: &str = "iris-2class";
pub const DEFAULT_LAYERS: usize = 6;
pub const SUMMARY_FILE: &str = "summary.csv";
pub const SUMMARY_HEADER: &str =
    "dataset,embedding,approach,seed,epochs,final_train_acc,final_valid_acc,poc_epoch,valid_acc_at_poc,test_acc,max_abs_weight";

/// Model choice within a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Approach {
    pub model: ModelKind,
    pub remap: RemapFunction,
    pub reupload: bool,
}

impl Approach {
    pub fn vqc(remap: RemapFunction, reupload: bool) -> Self {
        Approach { model: ModelKind::Vqc, remap, reupload }
    }

    pub fn mlp() -> Self {
        Approach { model: ModelKind::Mlp, remap: RemapFunction::Identity, reupload: false }
    }

    /// The seven re-mapping approaches, without re-uploading.
    pub fn all_remaps(reupload: bool) -> Vec<Approach> {
        RemapFunction::ALL.iter().map(|&r| Approach::vqc(r, reupload)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset: String,
    pub data_dir: Option<PathBuf>,
    pub embedding: EmbeddingKind,
    pub approach: Approach,
    pub n_layers: usize,
    pub training: TrainingConfig,
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn key(&self) -> RunKey {
        RunKey {
            dataset: self.dataset.clone(),
            embedding: self.embedding,
            remap: self.approach.remap,
            reupload: self.approach.reupload,
            model: self.approach.model,
            seed: self.training.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.training.validate()?;
        crate::data::schema(&self.dataset)?;
        if self.approach.model == ModelKind::Mlp && self.dataset != MLP_DATASET {
            return Err(Error::config(
                MODULE,
                format!("the mlp model is only defined for {MLP_DATASET}, not {}", self.dataset),
            ));
        }
        if self.n_layers == 0 {
            return Err(Error::config(MODULE, "need at least one layer"));
        }
        Ok(())
    }

    /// Min-max target range for the features.
    pub fn feature_range(&self) -> (f64, f64) {
        match (self.approach.model, self.embedding) {
            (ModelKind::Vqc, EmbeddingKind::Angle) => (0.0, std::f64::consts::PI),
            _ => (0.0, 1.0),
        }
    }

    pub fn runs_dir(&self) -> PathBuf {
        self.out_dir.join("runs")
    }
}

/// Final model of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum Checkpoint {
    Vqc(VqcModel),
    Mlp(MlpModel),
}

/// Trains one configuration in memory without touching the disk.
pub fn execute(config: &RunConfig, dataset: &Dataset) -> Result<(TrainRecord, Checkpoint)> {
    config.validate()?;
    let seed = config.training.seed;
    let splits = SplitData::prepare(dataset, seed, config.feature_range())?;
    let mut init = rng_for(seed, RngStream::Init);
    match config.approach.model {
        ModelKind::Vqc => {
            let spec = EmbeddingSpec::new(config.embedding, dataset.n_features())?;
            let mut model = VqcModel::initialized(
                spec,
                dataset.n_classes,
                config.n_layers,
                config.approach.remap,
                config.approach.reupload,
                &mut init,
            )?;
            let record = train(&mut model, &splits, &config.training, config.key())?;
            Ok((record, Checkpoint::Vqc(model)))
        }
        ModelKind::Mlp => {
            if dataset.n_features() != INPUTS || dataset.n_classes != 2 {
                return Err(Error::config(MODULE, "the mlp needs 4 features and 2 classes"));
            }
            let mut model = MlpModel::initialized(&mut init);
            let record = train(&mut model, &splits, &config.training, config.key())?;
            Ok((record, Checkpoint::Mlp(model)))
        }
    }
}

#[derive(Serialize)]
struct EpochRow {
    epoch: usize,
    train_loss: f64,
    train_acc: f64,
    valid_loss: f64,
    valid_acc: f64,
}

#[derive(Deserialize)]
struct EpochRowIn {
    epoch: usize,
    train_loss: f64,
    train_acc: f64,
    valid_loss: f64,
    valid_acc: f64,
}

/// Contents of the `.test.json` sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub key: RunKey,
    pub test_acc: f64,
    pub test_correct: Vec<bool>,
    pub max_abs_weight: f64,
}

pub fn jsonl_path(runs_dir: &Path, key: &RunKey) -> PathBuf {
    runs_dir.join(format!("{}.jsonl", key.stem()))
}

pub fn outcome_path(runs_dir: &Path, key: &RunKey) -> PathBuf {
    runs_dir.join(format!("{}.test.json", key.stem()))
}

pub fn checkpoint_path(runs_dir: &Path, key: &RunKey) -> PathBuf {
    runs_dir.join(format!("{}.model.json", key.stem()))
}

/// The per-epoch JSON-lines text of a record.
pub fn epoch_lines(record: &TrainRecord) -> String {
    let mut out = String::new();
    for t in 0..record.n_epochs() {
        let row = EpochRow {
            epoch: t + 1,
            train_loss: record.train_loss[t],
            train_acc: record.train_acc[t],
            valid_loss: record.valid_loss[t],
            valid_acc: record.valid_acc[t],
        };
        out.push_str(&serde_json::to_string(&row).expect("plain numeric row serializes"));
        out.push('\n');
    }
    out
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::format(path, e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Writes the run files of `record`; the sidecar goes last.
pub fn persist(runs_dir: &Path, record: &TrainRecord, checkpoint: &Checkpoint) -> Result<()> {
    fs::create_dir_all(runs_dir).map_err(|e| Error::io(runs_dir, e))?;
    let key = &record.key;
    let jsonl = jsonl_path(runs_dir, key);
    fs::write(&jsonl, epoch_lines(record)).map_err(|e| Error::io(&jsonl, e))?;
    write_json(&checkpoint_path(runs_dir, key), checkpoint)?;
    let outcome = RunOutcome {
        key: key.clone(),
        test_acc: record.test_acc,
        test_correct: record.test_correct.clone(),
        max_abs_weight: record.max_abs_weight,
    };
    write_json(&outcome_path(runs_dir, key), &outcome)
}

/// Reads back a completed run from its sidecar path.
pub fn load_record(outcome_file: &Path) -> Result<TrainRecord> {
    let text = fs::read_to_string(outcome_file).map_err(|e| Error::io(outcome_file, e))?;
    let outcome: RunOutcome =
        serde_json::from_str(&text).map_err(|e| Error::format(outcome_file, e.to_string()))?;
    let runs_dir = outcome_file.parent().unwrap_or(Path::new("."));
    let jsonl = jsonl_path(runs_dir, &outcome.key);
    let text = fs::read_to_string(&jsonl).map_err(|e| Error::io(&jsonl, e))?;
    let mut record = TrainRecord {
        key: outcome.key,
        train_loss: vec![],
        train_acc: vec![],
        valid_loss: vec![],
        valid_acc: vec![],
        test_acc: outcome.test_acc,
        test_correct: outcome.test_correct,
        max_abs_weight: outcome.max_abs_weight,
    };
    for (i, line) in text.lines().enumerate() {
        let row: EpochRowIn = serde_json::from_str(line)
            .map_err(|e| Error::format(&jsonl, format!("line {}: {e}", i + 1)))?;
        if row.epoch != i + 1 {
            return Err(Error::format(&jsonl, format!("line {} holds epoch {}", i + 1, row.epoch)));
        }
        record.train_loss.push(row.train_loss);
        record.train_acc.push(row.train_acc);
        record.valid_loss.push(row.valid_loss);
        record.valid_acc.push(row.valid_acc);
    }
    if record.n_epochs() == 0 {
        return Err(Error::format(&jsonl, "no epoch rows"));
    }
    Ok(record)
}

/// Every completed run under `<out>/runs`, sorted by key.
pub fn load_records(out_dir: &Path) -> Result<Vec<TrainRecord>> {
    let runs_dir = out_dir.join("runs");
    let entries = match fs::read_dir(&runs_dir) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(vec![]),
        Err(e) => return Err(Error::io(&runs_dir, e)),
    };
    let mut records = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(&runs_dir, e))?.path();
        if path.to_str().is_some_and(|p| p.ends_with(".test.json")) {
            records.push(load_record(&path)?);
        }
    }
    records.sort_by(|a, b| a.key.cmp(&b.key));
    Ok(records)
}

/// One `summary.csv` row (no trailing newline).
pub fn summary_row(record: &TrainRecord) -> Result<String> {
    let last = record.n_epochs() - 1;
    let poc = point_of_convergence(&record.valid_loss, 1.0)?.epoch;
    let k = &record.key;
    Ok(format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        k.dataset,
        k.embedding,
        k.approach(),
        k.seed,
        record.n_epochs(),
        record.train_acc[last],
        record.valid_acc[last],
        poc,
        record.valid_acc[poc],
        record.test_acc,
        record.max_abs_weight
    ))
}

/// Rewrites `summary.csv` from `records` in the given order.
pub fn write_summary(out_dir: &Path, records: &[TrainRecord]) -> Result<()> {
    let mut text = String::from(SUMMARY_HEADER);
    text.push('\n');
    for r in records {
        text.push_str(&summary_row(r)?);
        text.push('\n');
    }
    let path = out_dir.join(SUMMARY_FILE);
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

fn append_summary(out_dir: &Path, record: &TrainRecord) -> Result<()> {
    let path = out_dir.join(SUMMARY_FILE);
    let fresh = !path.exists();
    let mut file = OpenOptions::new().create(true).append(true).open(&path).map_err(|e| Error::io(&path, e))?;
    let mut text = String::new();
    if fresh {
        text.push_str(SUMMARY_HEADER);
        text.push('\n');
    }
    text.push_str(&summary_row(record)?);
    text.push('\n');
    file.write_all(text.as_bytes()).map_err(|e| Error::io(&path, e))
}

/// Trains, persists the run files and appends a summary row.
pub fn run(config: &RunConfig) -> Result<TrainRecord> {
    config.validate()?;
    let dataset = load_named(&config.dataset, config.data_dir.as_deref())?;
    let (record, checkpoint) = execute(config, &dataset)?;
    persist(&config.runs_dir(), &record, &checkpoint)?;
    append_summary(&config.out_dir, &record)?;
    Ok(record)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub datasets: Vec<String>,
    pub embeddings: Vec<EmbeddingKind>,
    pub approaches: Vec<Approach>,
    pub seeds: Vec<u64>,
    pub n_layers: usize,
    /// Seed field is ignored; each cell uses its own.
    pub training: TrainingConfig,
    pub data_dir: Option<PathBuf>,
    pub out_dir: PathBuf,
    /// Concurrent cells; 0 uses the rayon default.
    pub workers: usize,
    pub anchor: PocAnchor,
}

impl SweepConfig {
    /// The distinct cells of the grid, in a fixed order. MLP cells are
    /// only generated for their dataset and once per seed.
    pub fn cells(&self) -> Vec<RunConfig> {
        let mut cells: Vec<RunConfig> = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        for dataset in &self.datasets {
            for &embedding in &self.embeddings {
                for &approach in &self.approaches {
                    if approach.model == ModelKind::Mlp && dataset != MLP_DATASET {
                        continue;
                    }
                    for &seed in &self.seeds {
                        let cell = RunConfig {
                            dataset: dataset.clone(),
                            data_dir: self.data_dir.clone(),
                            embedding,
                            approach,
                            n_layers: self.n_layers,
                            training: TrainingConfig { seed, ..self.training },
                            out_dir: self.out_dir.clone(),
                        };
                        if seen.insert(cell.key().stem()) {
                            cells.push(cell);
                        }
                    }
                }
            }
        }
        cells
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellStatus {
    Trained,
    Skipped,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub cells: Vec<(RunKey, CellStatus)>,
    pub records: Vec<TrainRecord>,
    pub written: Vec<PathBuf>,
}

impl SweepOutcome {
    pub fn failures(&self) -> impl Iterator<Item = (&RunKey, &str)> {
        self.cells.iter().filter_map(|(k, s)| match s {
            CellStatus::Failed(msg) => Some((k, msg.as_str())),
            _ => None,
        })
    }
}

fn run_cell(cell: &RunConfig, datasets: &[(String, Result<Dataset>)]) -> CellStatus {
    let key = cell.key();
    let runs_dir = cell.runs_dir();
    if load_record(&outcome_path(&runs_dir, &key)).is_ok() {
        return CellStatus::Skipped;
    }
    let dataset = match datasets.iter().find(|(n, _)| *n == cell.dataset) {
        Some((_, Ok(d))) => d,
        Some((_, Err(e))) => return CellStatus::Failed(e.to_string()),
        None => return CellStatus::Failed(format!("dataset {} not loaded", cell.dataset)),
    };
    let result = execute(cell, dataset).and_then(|(record, ckpt)| persist(&runs_dir, &record, &ckpt));
    match result {
        Ok(()) => {
            log::info!("finished {}", key.stem());
            CellStatus::Trained
        }
        Err(e) => {
            log::error!("{}: {e}", key.stem());
            CellStatus::Failed(e.to_string())
        }
    }
}

/// Runs every missing cell, then regenerates the summary and report tables
/// from everything present in the output directory.
pub fn sweep(config: &SweepConfig) -> Result<SweepOutcome> {
    if config.seeds.is_empty() || config.approaches.is_empty() || config.datasets.is_empty() {
        return Err(Error::config(MODULE, "sweep grid is empty"));
    }
    if config.embeddings.is_empty() {
        return Err(Error::config(MODULE, "sweep grid is empty"));
    }
    let cells = config.cells();
    for cell in &cells {
        cell.validate()?;
    }
    fs::create_dir_all(config.out_dir.join("runs")).map_err(|e| Error::io(&config.out_dir, e))?;
    let datasets: Vec<(String, Result<Dataset>)> = config
        .datasets
        .iter()
        .map(|d| (d.clone(), load_named(d, config.data_dir.as_deref())))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::config(MODULE, format!("thread pool: {e}")))?;
    let statuses: Vec<CellStatus> = pool.install(|| cells.par_iter().map(|c| run_cell(c, &datasets)).collect());
    let cell_status: Vec<(RunKey, CellStatus)> = cells.iter().map(|c| c.key()).zip(statuses).collect();

    let failures: Vec<String> = cell_status
        .iter()
        .filter_map(|(k, s)| match s {
            CellStatus::Failed(msg) => Some(format!("{},{}", k.stem(), msg.replace(['\n', ','], " "))),
            _ => None,
        })
        .collect();
    let failure_path = config.out_dir.join("failures.csv");
    if failures.is_empty() {
        let _ = fs::remove_file(&failure_path);
    } else {
        let text = format!("run,error\n{}\n", failures.join("\n"));
        fs::write(&failure_path, text).map_err(|e| Error::io(&failure_path, e))?;
    }

    let records = load_records(&config.out_dir)?;
    write_summary(&config.out_dir, &records)?;
    let written = report::write_reports(&config.out_dir, &records, config.anchor)?;
    Ok(SweepOutcome { cells: cell_status, records, written })
}
