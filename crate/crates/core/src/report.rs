//! Summary tables over completed runs.
//!
//! Every table is a CSV with the columns `dataset,approach,metric,value,ci_halfwidth`
//! and is written once per embedding:
//!
//! | file | metric rows |
//! |------|-------------|
//! | `convergence_<embedding>.csv` | `convergence_diff`, `poc_epoch`: means over seeds, CI `1.96 s / sqrt(n)` |
//! | `test_accuracy_<embedding>.csv` | `test_accuracy`: pooled over seeds, Wald CI |
//! | `anova_<embedding>.csv` | `f_stat`, `df_between`, `df_within`, `p_value` across approaches |
//!
//! `convergence_diff` pairs each run with the plain VQC run of the same
//! dataset, embedding, re-uploading flag and seed. An empty `ci_halfwidth`
//! means the interval is undefined (fewer than two seeds, or a test
//! statistic).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::embedding::EmbeddingKind;
use crate::error::{Error, Result};
use crate::metrics::{anova_oneway, confidence_interval_95, convergence_diff, mean, point_of_convergence, sample_std, PocAnchor};
use crate::remap::RemapFunction;
use crate::runner::Approach;
use crate::training::{ModelKind, TrainRecord};

const MODULE: &str = "report";

pub const TABLE_HEADER: &str = "dataset,approach,metric,value,ci_halfwidth";

/// POC threshold multiplier.
pub const POC_K: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub dataset: String,
    pub approach: String,
    pub metric: &'static str,
    pub value: f64,
    pub ci_halfwidth: Option<f64>,
}

impl TableRow {
    fn csv(&self) -> String {
        let ci = self.ci_halfwidth.map(|c| c.to_string()).unwrap_or_default();
        format!("{},{},{},{},{}", self.dataset, self.approach, self.metric, self.value, ci)
    }
}

pub fn table_csv(rows: &[TableRow]) -> String {
    let mut text = String::from(TABLE_HEADER);
    text.push('\n');
    for r in rows {
        text.push_str(&r.csv());
        text.push('\n');
    }
    text
}

fn approach_of(r: &TrainRecord) -> Approach {
    Approach { model: r.key.model, remap: r.key.remap, reupload: r.key.reupload }
}

type Cell<'a> = BTreeMap<(String, Approach), Vec<&'a TrainRecord>>;

/// Records of one embedding grouped by (dataset, approach), seeds ascending.
fn group(records: &[TrainRecord], embedding: EmbeddingKind) -> Cell<'_> {
    let mut groups: Cell = BTreeMap::new();
    for r in records.iter().filter(|r| r.key.embedding == embedding) {
        groups.entry((r.key.dataset.clone(), approach_of(r))).or_default().push(r);
    }
    for runs in groups.values_mut() {
        runs.sort_by_key(|r| r.key.seed);
    }
    groups
}

fn seed_ci(values: &[f64]) -> Option<f64> {
    (values.len() >= 2).then(|| 1.96 * sample_std(values) / (values.len() as f64).sqrt())
}

/// Convergence difference against the plain VQC, and mean POC epoch.
pub fn convergence_table(records: &[TrainRecord], embedding: EmbeddingKind, anchor: PocAnchor) -> Result<Vec<TableRow>> {
    let groups = group(records, embedding);
    let mut rows = Vec::new();
    for ((dataset, approach), runs) in &groups {
        let label = runs[0].key.approach();
        let baseline_approach = Approach::vqc(RemapFunction::Identity, approach.reupload && approach.model == ModelKind::Vqc);
        if let Some(baseline) = groups.get(&(dataset.clone(), baseline_approach)) {
            let mut diffs = Vec::new();
            for r in runs {
                if let Some(b) = baseline.iter().find(|b| b.key.seed == r.key.seed) {
                    diffs.push(convergence_diff(b, r, POC_K, anchor)?);
                }
            }
            if !diffs.is_empty() {
                rows.push(TableRow {
                    dataset: dataset.clone(),
                    approach: label.clone(),
                    metric: "convergence_diff",
                    value: mean(&diffs),
                    ci_halfwidth: seed_ci(&diffs),
                });
            }
        }
        let pocs = runs
            .iter()
            .map(|r| point_of_convergence(&r.valid_loss, POC_K).map(|p| p.epoch as f64))
            .collect::<Result<Vec<_>>>()?;
        rows.push(TableRow {
            dataset: dataset.clone(),
            approach: label,
            metric: "poc_epoch",
            value: mean(&pocs),
            ci_halfwidth: seed_ci(&pocs),
        });
    }
    Ok(rows)
}

/// Pooled test accuracy with a Wald 95% interval.
pub fn accuracy_table(records: &[TrainRecord], embedding: EmbeddingKind) -> Result<Vec<TableRow>> {
    let mut rows = Vec::new();
    for ((dataset, _), runs) in &group(records, embedding) {
        let pooled: Vec<bool> = runs.iter().flat_map(|r| r.test_correct.iter().copied()).collect();
        let (p, ci) = confidence_interval_95(&pooled)?;
        rows.push(TableRow {
            dataset: dataset.clone(),
            approach: runs[0].key.approach(),
            metric: "test_accuracy",
            value: p,
            ci_halfwidth: Some(ci),
        });
    }
    Ok(rows)
}

/// One-way ANOVA of per-seed test accuracy across the VQC approaches of
/// each dataset, separately with and without re-uploading. Groups with
/// fewer than two seeds are left out.
pub fn anova_table(records: &[TrainRecord], embedding: EmbeddingKind) -> Result<Vec<TableRow>> {
    let mut per_family: BTreeMap<(String, bool), Vec<Vec<f64>>> = BTreeMap::new();
    for ((dataset, approach), runs) in &group(records, embedding) {
        if approach.model != ModelKind::Vqc || runs.len() < 2 {
            continue;
        }
        per_family
            .entry((dataset.clone(), approach.reupload))
            .or_default()
            .push(runs.iter().map(|r| r.test_acc).collect());
    }
    let mut rows = Vec::new();
    for ((dataset, reupload), groups) in per_family {
        if groups.len() < 2 {
            continue;
        }
        let a = anova_oneway(&groups)?;
        let approach = if reupload { "all-reupload" } else { "all" };
        for (metric, value) in [
            ("f_stat", a.f_stat),
            ("df_between", a.df_between as f64),
            ("df_within", a.df_within as f64),
            ("p_value", a.p_value),
        ] {
            rows.push(TableRow { dataset: dataset.clone(), approach: approach.into(), metric, value, ci_halfwidth: None });
        }
    }
    Ok(rows)
}

fn embeddings_present(records: &[TrainRecord]) -> Vec<EmbeddingKind> {
    EmbeddingKind::ALL.into_iter().filter(|e| records.iter().any(|r| r.key.embedding == *e)).collect()
}

fn write(path: PathBuf, rows: &[TableRow]) -> Result<PathBuf> {
    fs::write(&path, table_csv(rows)).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes the ANOVA tables only.
pub fn write_anova(out_dir: &Path, records: &[TrainRecord]) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        return Err(Error::config(MODULE, format!("no completed runs under {}", out_dir.display())));
    }
    embeddings_present(records)
        .into_iter()
        .map(|e| write(out_dir.join(format!("anova_{e}.csv")), &anova_table(records, e)?))
        .collect()
}

/// Writes all three tables for every embedding present.
pub fn write_reports(out_dir: &Path, records: &[TrainRecord], anchor: PocAnchor) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        return Err(Error::config(MODULE, format!("no completed runs under {}", out_dir.display())));
    }
    let mut written = Vec::new();
    for e in embeddings_present(records) {
        written.push(write(out_dir.join(format!("convergence_{e}.csv")), &convergence_table(records, e, anchor)?)?);
        written.push(write(out_dir.join(format!("test_accuracy_{e}.csv")), &accuracy_table(records, e)?)?);
        written.push(write(out_dir.join(format!("anova_{e}.csv")), &anova_table(records, e)?)?);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::training::RunKey;

    fn rec(remap: RemapFunction, seed: u64, valid_acc: [f64; 4], test_correct: Vec<bool>) -> TrainRecord {
        let valid_loss = vec![1.0, 0.4, 0.39, 0.385];
        let test_acc = test_correct.iter().filter(|&&c| c).count() as f64 / test_correct.len() as f64;
        TrainRecord {
            key: RunKey {
                dataset: "iris".into(),
                embedding: EmbeddingKind::Angle,
                remap,
                reupload: false,
                model: ModelKind::Vqc,
                seed,
            },
            train_loss: valid_loss.clone(),
            train_acc: valid_acc.to_vec(),
            valid_loss,
            valid_acc: valid_acc.to_vec(),
            test_acc,
            test_correct,
            max_abs_weight: 1.0,
        }
    }

    fn sample() -> Vec<TrainRecord> {
        vec![
            rec(RemapFunction::Identity, 0, [0.1, 0.2, 0.5, 0.6], vec![true, false, true, true]),
            rec(RemapFunction::Identity, 1, [0.1, 0.2, 0.4, 0.6], vec![true, false, false, true]),
            rec(RemapFunction::Tanh, 0, [0.1, 0.2, 0.8, 0.9], vec![true, true, true, true]),
            rec(RemapFunction::Tanh, 1, [0.1, 0.2, 0.9, 0.9], vec![true, true, true, false]),
        ]
    }

    fn find<'a>(rows: &'a [TableRow], approach: &str, metric: &str) -> &'a TableRow {
        rows.iter().find(|r| r.approach == approach && r.metric == metric).unwrap()
    }

    #[test]
    fn convergence_rows() {
        let rows = convergence_table(&sample(), EmbeddingKind::Angle, PocAnchor::Baseline).unwrap();
        assert_eq!(find(&rows, "VQC", "convergence_diff").value, 0.0);
        // POC index 2 in every run: seed 0 -> 0.5 - 0.8, seed 1 -> 0.4 - 0.9
        let tanh = find(&rows, "VQC-tanh", "convergence_diff");
        assert!((tanh.value + 0.4).abs() < 1e-12);
        let s = (2.0f64 * 0.1 * 0.1).sqrt();
        assert!((tanh.ci_halfwidth.unwrap() - 1.96 * s / 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(find(&rows, "VQC-tanh", "poc_epoch").value, 2.0);
        assert_eq!(find(&rows, "VQC-tanh", "poc_epoch").ci_halfwidth, Some(0.0));
        assert!(convergence_table(&sample(), EmbeddingKind::Amplitude, PocAnchor::Baseline).unwrap().is_empty());
    }

    #[test]
    fn accuracy_rows() {
        let rows = accuracy_table(&sample(), EmbeddingKind::Angle).unwrap();
        let base = find(&rows, "VQC", "test_accuracy");
        assert_eq!(base.value, 5.0 / 8.0);
        assert!((base.ci_halfwidth.unwrap() - 1.96 * (5.0 / 8.0 * 3.0 / 8.0 / 8.0f64).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn anova_rows() {
        let rows = anova_table(&sample(), EmbeddingKind::Angle).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(find(&rows, "all", "df_between").value, 1.0);
        assert_eq!(find(&rows, "all", "df_within").value, 2.0);
        let direct = anova_oneway(&[vec![0.75, 0.5], vec![1.0, 0.75]]).unwrap();
        assert_eq!(find(&rows, "all", "f_stat").value, direct.f_stat);
        assert!(table_csv(&rows).starts_with("dataset,approach,metric,value,ci_halfwidth\niris,all,f_stat,"));
    }

    #[test]
    fn empty_directory_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(write_reports(dir.path(), &[], PocAnchor::Baseline).is_err());
    }
}
