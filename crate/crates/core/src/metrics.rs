//! Accuracy, point of convergence, convergence differences, one-way ANOVA
//! and Wald confidence intervals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::training::TrainRecord;

const MODULE: &str = "metrics";

/// `(1/N) sum delta(y_i, yhat_i)`
pub fn accuracy(truth: &[usize], predicted: &[usize]) -> Result<f64> {
    if truth.is_empty() {
        return Err(Error::config(MODULE, "accuracy of zero samples"));
    }
    if truth.len() != predicted.len() {
        return Err(Error::config(
            MODULE,
            format!("{} labels vs {} predictions", truth.len(), predicted.len()),
        ));
    }
    let hits = truth.iter().zip(predicted).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / truth.len() as f64)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population standard deviation.
pub fn population_std(values: &[f64]) -> f64 {
    let m = mean(values);
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64).sqrt()
}

/// Sample (n - 1) standard deviation; zero for fewer than two values.
pub fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PocResult {
    /// Index `t >= 1` into the per-epoch arrays.
    pub epoch: usize,
    pub threshold: f64,
    pub sigma: f64,
    pub k: f64,
}

/// First `t >= 1` with `|loss[t] - loss[t-1]| < k * sigma`, where sigma is
/// the population standard deviation of the whole trajectory. Falls back to
/// the last index when no step qualifies.
pub fn point_of_convergence(valid_losses: &[f64], k: f64) -> Result<PocResult> {
    if valid_losses.len() < 2 {
        return Err(Error::config(MODULE, "point of convergence needs at least two epochs"));
    }
    let sigma = population_std(valid_losses);
    let threshold = k * sigma;
    let epoch = (1..valid_losses.len())
        .find(|&t| (valid_losses[t] - valid_losses[t - 1]).abs() < threshold)
        .unwrap_or(valid_losses.len() - 1);
    Ok(PocResult { epoch, threshold, sigma, k })
}

/// Where both curves are read off in [`convergence_diff`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PocAnchor {
    /// Both curves at the baseline's point of convergence.
    #[default]
    Baseline,
    /// Each curve at its own point of convergence.
    Own,
}

/// `baseline.valid_acc[t*] - approach.valid_acc[t*]`; negative means the
/// approach is ahead.
pub fn convergence_diff(
    baseline: &TrainRecord,
    approach: &TrainRecord,
    k: f64,
    anchor: PocAnchor,
) -> Result<f64> {
    let (b, a) = (&baseline.key, &approach.key);
    if b.dataset != a.dataset || b.seed != a.seed || b.embedding != a.embedding {
        return Err(Error::config(
            MODULE,
            format!("cannot compare runs {} and {}", b.stem(), a.stem()),
        ));
    }
    if baseline.n_epochs() != approach.n_epochs() {
        return Err(Error::config(
            MODULE,
            format!("epoch counts differ: {} vs {}", baseline.n_epochs(), approach.n_epochs()),
        ));
    }
    let t_base = point_of_convergence(&baseline.valid_loss, k)?.epoch;
    let t_approach = match anchor {
        PocAnchor::Baseline => t_base,
        PocAnchor::Own => point_of_convergence(&approach.valid_loss, k)?.epoch,
    };
    Ok(baseline.valid_acc[t_base] - approach.valid_acc[t_approach])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult {
    /// `+inf` when within-group variance vanishes but group means differ.
    pub f_stat: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub p_value: f64,
}

/// Classical one-way ANOVA.
pub fn anova_oneway(groups: &[Vec<f64>]) -> Result<AnovaResult> {
    if groups.len() < 2 {
        return Err(Error::config(MODULE, "ANOVA needs at least two groups"));
    }
    if let Some(g) = groups.iter().position(|g| g.len() < 2) {
        return Err(Error::config(MODULE, format!("ANOVA group {g} has fewer than two observations")));
    }
    let n_total: usize = groups.iter().map(Vec::len).sum();
    let grand = groups.iter().flatten().sum::<f64>() / n_total as f64;
    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    for g in groups {
        let m = mean(g);
        ss_between += g.len() as f64 * (m - grand) * (m - grand);
        ss_within += g.iter().map(|x| (x - m) * (x - m)).sum::<f64>();
    }
    let df_between = groups.len() - 1;
    let df_within = n_total - groups.len();
    let scale = ss_between + ss_within;
    if ss_within <= 1e-14 * scale || scale == 0.0 {
        let (f_stat, p_value) = if ss_between > 0.0 { (f64::INFINITY, 0.0) } else { (0.0, 1.0) };
        return Ok(AnovaResult { f_stat, df_between, df_within, p_value });
    }
    let f_stat = (ss_between / df_between as f64) / (ss_within / df_within as f64);
    let p_value = f_survival(f_stat, df_between as f64, df_within as f64);
    Ok(AnovaResult { f_stat, df_between, df_within, p_value })
}

/// `P(F > f)` for an F distribution with `(d1, d2)` degrees of freedom.
pub fn f_survival(f: f64, d1: f64, d2: f64) -> f64 {
    if f <= 0.0 {
        return 1.0;
    }
    if f.is_infinite() {
        return 0.0;
    }
    regularized_incomplete_beta(d2 / (d2 + d1 * f), d2 / 2.0, d1 / 2.0).clamp(0.0, 1.0)
}

/// `P(F <= f)`
pub fn f_cdf(f: f64, d1: f64, d2: f64) -> f64 {
    1.0 - f_survival(f, d1, d2)
}

/// `ln Gamma(x)` for `x > 0`, Lanczos approximation (g = 7, n = 9).
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEFFS[0];
    let t = x + 7.5;
    for (i, c) in COEFFS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(x, a, b) / a
    } else {
        1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b
    }
}

/// Modified Lentz evaluation of the incomplete beta continued fraction.
fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-15;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=1000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Wald 95% interval over pooled per-sample correctness:
/// `(p, 1.96 sqrt(p (1 - p) / N))`.
pub fn confidence_interval_95(correct: &[bool]) -> Result<(f64, f64)> {
    if correct.len() < 2 {
        return Err(Error::config(MODULE, "confidence interval needs at least two samples"));
    }
    let n = correct.len() as f64;
    let p = correct.iter().filter(|&&c| c).count() as f64 / n;
    Ok((p, 1.96 * (p * (1.0 - p) / n).sqrt()))
}
