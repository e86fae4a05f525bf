//! Summary statistics, Kolmogorov–Smirnov tests and trend decisions.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_lr;

use crate::error::{Error, Result};

/// Asymptotic KS critical value at level 0.01.
pub const KS_CRITICAL_01: f64 = 1.628;
/// Fewest samples accepted by [`ks_statistic`].
pub const KS_MIN_SAMPLES: usize = 30;

/// Type-7 sample quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile_sorted(&sorted, 0.5)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (`n − 1` denominator; 0 for one value).
pub fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    (values.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

/// Distance between the two centres of the best two-cluster split of the
/// values after rescaling them to unit variance.
pub fn two_cluster_separation(values: &[f64]) -> f64 {
    let sd = std_dev(values);
    if values.len() < 2 || sd == 0.0 {
        return 0.0;
    }
    let mut sorted: Vec<f64> = values.iter().map(|x| x / sd).collect();
    sorted.sort_by(f64::total_cmp);
    let total: f64 = sorted.iter().sum();
    let total_sq: f64 = sorted.iter().map(|x| x * x).sum();
    let m = sorted.len();
    let (mut best_cost, mut best_gap) = (f64::INFINITY, 0.0);
    let (mut left, mut left_sq) = (0.0, 0.0);
    for split in 1..m {
        left += sorted[split - 1];
        left_sq += sorted[split - 1].powi(2);
        let (nl, nr) = (split as f64, (m - split) as f64);
        let right = total - left;
        let cost = (left_sq - left * left / nl) + (total_sq - left_sq - right * right / nr);
        if cost < best_cost {
            best_cost = cost;
            best_gap = right / nr - left / nl;
        }
    }
    best_gap
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KsReference {
    /// `χ²_dof / n`.
    ChiSqOverN { dof: usize, n: usize },
    Empirical { values: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub critical: f64,
    pub rejected: bool,
}

fn chisq_over_n_cdf(x: f64, dof: usize, n: usize) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        gamma_lr(dof as f64 / 2.0, x * n as f64 / 2.0)
    }
}

/// One-sample KS against `χ²_dof/n`, or two-sample KS against a reference sample.
pub fn ks_statistic(samples: &[f64], reference: &KsReference) -> Result<KsResult> {
    if samples.len() < KS_MIN_SAMPLES {
        return Err(Error::InsufficientData {
            got: samples.len(),
            need: KS_MIN_SAMPLES,
        });
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let m = xs.len() as f64;
    let (statistic, critical) = match reference {
        KsReference::ChiSqOverN { dof, n } => {
            let mut d: f64 = 0.0;
            for (idx, &x) in xs.iter().enumerate() {
                let f = chisq_over_n_cdf(x, *dof, *n);
                d = d.max(f - idx as f64 / m).max((idx + 1) as f64 / m - f);
            }
            (d, KS_CRITICAL_01 / m.sqrt())
        }
        KsReference::Empirical { values } => {
            if values.is_empty() {
                return Err(Error::InsufficientData { got: 0, need: 1 });
            }
            let mut ys = values.clone();
            ys.sort_by(f64::total_cmp);
            let mr = ys.len() as f64;
            let (mut i, mut j, mut d) = (0usize, 0usize, 0.0_f64);
            while i < xs.len() && j < ys.len() {
                let t = xs[i].min(ys[j]);
                while i < xs.len() && xs[i] <= t {
                    i += 1;
                }
                while j < ys.len() && ys[j] <= t {
                    j += 1;
                }
                d = d.max((i as f64 / m - j as f64 / mr).abs());
            }
            (d, KS_CRITICAL_01 * ((m + mr) / (m * mr)).sqrt())
        }
    };
    Ok(KsResult {
        statistic,
        critical,
        rejected: statistic > critical,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendTarget {
    Zero,
    RightAngle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendDirection {
    ToZero,
    ToRightAngle,
    Flat,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendThresholds {
    /// Final value must fall below this for `ToZero`.
    pub ceiling: f64,
    /// Final value must exceed this for `ToRightAngle`.
    pub floor: f64,
    /// `|last − first|` below this counts as flat.
    pub flat_band: f64,
}

impl Default for TrendThresholds {
    fn default() -> Self {
        Self {
            ceiling: 10.0,
            floor: 80.0,
            flat_band: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendDecision {
    pub metric: String,
    pub direction: TrendDirection,
    pub evidence: Vec<f64>,
}

/// Classifies a median series along the grid (length ≥ 3 expected).
pub fn trend_verdict(
    metric: &str,
    series: &[f64],
    target: TrendTarget,
    thresholds: &TrendThresholds,
) -> TrendDecision {
    let decreasing = series.windows(2).all(|w| w[1] < w[0]);
    let increasing = series.windows(2).all(|w| w[1] > w[0]);
    let (first, last) = (series[0], series[series.len() - 1]);
    let direction = match target {
        TrendTarget::Zero if decreasing && last < thresholds.ceiling => TrendDirection::ToZero,
        TrendTarget::RightAngle if increasing && last > thresholds.floor => {
            TrendDirection::ToRightAngle
        }
        _ if (last - first).abs() < thresholds.flat_band => TrendDirection::Flat,
        _ => TrendDirection::Inconclusive,
    };
    TrendDecision {
        metric: metric.to_string(),
        direction,
        evidence: series.to_vec(),
    }
}
