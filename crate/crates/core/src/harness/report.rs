use std::io::Write;

use serde::{Deserialize, Serialize};

use super::stats::{mean, median, quantile_sorted, std_dev};
use crate::error::Result;

/// Column order of the CSV form.
pub const CSV_HEADER: [&str; 11] = [
    "d", "metric", "q05", "q25", "q50", "q75", "q95", "mean", "sd", "n_rep", "failures",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub n: usize,
    pub d: usize,
    pub metric: String,
    pub q05: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q95: f64,
    pub mean: f64,
    pub sd: f64,
    /// Replicates that contributed.
    pub n_rep: usize,
    /// Replicates excluded for numeric failure.
    pub failures: usize,
}

impl CellSummary {
    pub(crate) fn from_values(
        n: usize,
        d: usize,
        metric: String,
        values: &[f64],
        n_rep: usize,
        failures: usize,
    ) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let q = |p| if sorted.is_empty() { f64::NAN } else { quantile_sorted(&sorted, p) };
        Self {
            n,
            d,
            metric,
            q05: q(0.05),
            q25: q(0.25),
            q50: q(0.5),
            q75: q(0.75),
            q95: q(0.95),
            mean: if values.is_empty() { f64::NAN } else { mean(values) },
            sd: std_dev(values),
            n_rep,
            failures,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub n_grid: Vec<usize>,
    pub d_grid: Vec<usize>,
    pub replicates: usize,
    pub cells: Vec<CellSummary>,
    /// Raw pooled values behind each cell, in cell order.
    #[serde(skip)]
    pub samples: Vec<Vec<f64>>,
}

impl AggregateReport {
    fn index(&self, n: usize, d: usize, metric: &str) -> Option<usize> {
        self.cells
            .iter()
            .position(|c| c.n == n && c.d == d && c.metric == metric)
    }

    pub fn cell(&self, n: usize, d: usize, metric: &str) -> Option<&CellSummary> {
        self.index(n, d, metric).map(|i| &self.cells[i])
    }

    pub fn samples(&self, n: usize, d: usize, metric: &str) -> Option<&[f64]> {
        self.index(n, d, metric)
            .and_then(|i| self.samples.get(i))
            .map(Vec::as_slice)
    }

    /// Medians over `d_grid` at sample size `n`.
    pub fn median_series(&self, n: usize, metric: &str) -> Option<Vec<f64>> {
        self.d_grid
            .iter()
            .map(|&d| self.cell(n, d, metric).map(|c| c.q50))
            .collect()
    }

    /// Medians over `n_grid` at dimension `d`.
    pub fn median_series_over_n(&self, d: usize, metric: &str) -> Option<Vec<f64>> {
        self.n_grid
            .iter()
            .map(|&n| self.cell(n, d, metric).map(|c| c.q50))
            .collect()
    }

    /// Median recomputed from the raw values (same as `q50`).
    pub fn sample_median(&self, n: usize, d: usize, metric: &str) -> Option<f64> {
        self.samples(n, d, metric).filter(|s| !s.is_empty()).map(median)
    }

    /// CSV with [`CSV_HEADER`]. With several sample sizes the metric name
    /// carries an `@n<size>` suffix.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(CSV_HEADER)?;
        let tag_n = self.n_grid.len() > 1;
        for c in &self.cells {
            let metric = if tag_n {
                format!("{}@n{}", c.metric, c.n)
            } else {
                c.metric.clone()
            };
            out.write_record([
                c.d.to_string(),
                metric,
                c.q05.to_string(),
                c.q25.to_string(),
                c.q50.to_string(),
                c.q75.to_string(),
                c.q95.to_string(),
                c.mean.to_string(),
                c.sd.to_string(),
                c.n_rep.to_string(),
                c.failures.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}
