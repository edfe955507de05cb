//! Learning-curve charts as standalone SVG.
//!
//! One file per (dataset, embedding) with a loss panel and an accuracy
//! panel. Each approach gets one solid (validation) and one dashed (train)
//! polyline of the mean over seeds, and a translucent mean ± std band when
//! more than one seed is present.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::embedding::EmbeddingKind;
use crate::error::{Error, Result};
use crate::metrics::{mean, population_std};
use crate::training::TrainRecord;

const MODULE: &str = "plot";

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];
const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 300.0;
const MARGIN: f64 = 50.0;
const LEGEND_W: f64 = 190.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Metric {
    Loss,
    Accuracy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SplitKind {
    Train,
    Valid,
}

/// Mean and population std per epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

fn curve(r: &TrainRecord, metric: Metric, split: SplitKind) -> &[f64] {
    match (metric, split) {
        (Metric::Loss, SplitKind::Train) => &r.train_loss,
        (Metric::Loss, SplitKind::Valid) => &r.valid_loss,
        (Metric::Accuracy, SplitKind::Train) => &r.train_acc,
        (Metric::Accuracy, SplitKind::Valid) => &r.valid_acc,
    }
}

/// Epoch-wise statistics over runs, truncated to the shortest run.
pub fn band(curves: &[&[f64]]) -> Band {
    let len = curves.iter().map(|c| c.len()).min().unwrap_or(0);
    let column = |t: usize| curves.iter().map(|c| c[t]).collect::<Vec<f64>>();
    Band {
        mean: (0..len).map(|t| mean(&column(t))).collect(),
        std: (0..len).map(|t| population_std(&column(t))).collect(),
    }
}

struct Frame {
    x0: f64,
    y0: f64,
    n_epochs: usize,
    lo: f64,
    hi: f64,
}

impl Frame {
    fn x(&self, t: usize) -> f64 {
        let span = (self.n_epochs.max(2) - 1) as f64;
        self.x0 + MARGIN + (PANEL_W - 2.0 * MARGIN) * t as f64 / span
    }

    fn y(&self, v: f64) -> f64 {
        let frac = if self.hi > self.lo { (v - self.lo) / (self.hi - self.lo) } else { 0.5 };
        self.y0 + PANEL_H - MARGIN - (PANEL_H - 2.0 * MARGIN) * frac
    }
}

fn points(frame: &Frame, values: &[f64]) -> String {
    values
        .iter()
        .enumerate()
        .map(|(t, v)| format!("{:.2},{:.2}", frame.x(t), frame.y(*v)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

type Groups<'a> = BTreeMap<String, Vec<&'a TrainRecord>>;

fn panel(svg: &mut String, groups: &Groups, metric: Metric, x0: f64) {
    let all: Vec<&TrainRecord> = groups.values().flatten().copied().collect();
    let n_epochs = all.iter().map(|r| r.n_epochs()).max().unwrap_or(1);
    let (mut lo, mut hi) = match metric {
        Metric::Accuracy => (0.0, 1.0),
        Metric::Loss => (f64::INFINITY, f64::NEG_INFINITY),
    };
    if metric == Metric::Loss {
        for r in &all {
            for v in r.train_loss.iter().chain(&r.valid_loss) {
                lo = lo.min(*v);
                hi = hi.max(*v);
            }
        }
        lo = lo.min(0.0);
    }
    let frame = Frame { x0, y0: 0.0, n_epochs, lo, hi };
    let title = match metric {
        Metric::Loss => "loss",
        Metric::Accuracy => "accuracy",
    };
    let (left, right) = (frame.x(0), frame.x(n_epochs - 1));
    let (top, bottom) = (frame.y(hi), frame.y(lo));
    let _ = writeln!(
        svg,
        r##"<g class="panel-{title}"><rect x="{left:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#444"/>"##,
        right - left,
        bottom - top
    );
    let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">{title}</text>"#, (left + right) / 2.0, top - 12.0);
    let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="11">epoch</text>"#, (left + right) / 2.0, bottom + 32.0);
    for (v, anchor_y) in [(lo, bottom), (hi, top)] {
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="10">{v:.3}</text>"#, left - 4.0, anchor_y + 3.0);
    }
    for (t, anchor_x) in [(1, left), (n_epochs, right)] {
        let _ = writeln!(svg, r#"<text x="{anchor_x:.2}" y="{:.2}" text-anchor="middle" font-size="10">{t}</text>"#, bottom + 14.0);
    }
    for (i, (approach, runs)) in groups.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        for split in [SplitKind::Train, SplitKind::Valid] {
            let curves: Vec<&[f64]> = runs.iter().map(|r| curve(r, metric, split)).collect();
            let b = band(&curves);
            if runs.len() > 1 {
                let upper: Vec<f64> = b.mean.iter().zip(&b.std).map(|(m, s)| m + s).collect();
                let lower: Vec<f64> = b.mean.iter().zip(&b.std).map(|(m, s)| m - s).rev().collect();
                let mut outline = points(&frame, &upper);
                let lower_pts: Vec<String> = lower
                    .iter()
                    .enumerate()
                    .map(|(j, v)| format!("{:.2},{:.2}", frame.x(b.mean.len() - 1 - j), frame.y(*v)))
                    .collect();
                outline.push(' ');
                outline.push_str(&lower_pts.join(" "));
                let _ = writeln!(svg, r#"<polygon points="{outline}" fill="{color}" fill-opacity="0.12" stroke="none"/>"#);
            }
            let dash = if split == SplitKind::Train { r#" stroke-dasharray="5,3""# } else { "" };
            let split_name = if split == SplitKind::Train { "train" } else { "valid" };
            let _ = writeln!(
                svg,
                r#"<polyline data-approach="{}" data-split="{split_name}" points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
                escape(approach),
                points(&frame, &b.mean)
            );
        }
    }
    svg.push_str("</g>\n");
}

/// SVG text for one chart.
pub fn render(title: &str, records: &[&TrainRecord]) -> String {
    let mut groups: Groups = BTreeMap::new();
    for r in records {
        groups.entry(r.key.approach()).or_default().push(r);
    }
    let width = 2.0 * PANEL_W + LEGEND_W;
    let height = PANEL_H.max(40.0 + 18.0 * groups.len() as f64 + 60.0);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{:.2}" y="16" text-anchor="middle" font-size="15">{}</text>"#, PANEL_W, escape(title));
    panel(&mut svg, &groups, Metric::Loss, 0.0);
    panel(&mut svg, &groups, Metric::Accuracy, PANEL_W);
    let lx = 2.0 * PANEL_W + 10.0;
    for (i, (approach, runs)) in groups.iter().enumerate() {
        let y = 50.0 + 18.0 * i as f64;
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(svg, r#"<line x1="{lx:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"/>"#, lx + 22.0);
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="11">{} (n={})</text>"#,
            lx + 28.0,
            y + 4.0,
            escape(approach),
            runs.len()
        );
    }
    let y = 50.0 + 18.0 * groups.len() as f64 + 10.0;
    let _ = writeln!(svg, r#"<text x="{lx:.2}" y="{y:.2}" font-size="10">solid: validation, dashed: train</text>"#);
    svg.push_str("</svg>\n");
    svg
}

/// Writes `<out>/plots/<dataset>__<embedding>.svg` for every group present.
pub fn write_plots(out_dir: &Path, records: &[TrainRecord]) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        return Err(Error::config(MODULE, format!("no completed runs under {}", out_dir.display())));
    }
    let mut charts: BTreeMap<(String, EmbeddingKind), Vec<&TrainRecord>> = BTreeMap::new();
    for r in records {
        charts.entry((r.key.dataset.clone(), r.key.embedding)).or_default().push(r);
    }
    let dir = out_dir.join("plots");
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut written = Vec::new();
    for ((dataset, embedding), runs) in charts {
        let path = dir.join(format!("{dataset}__{embedding}.svg"));
        fs::write(&path, render(&format!("{dataset} ({embedding} embedding)"), &runs)).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
