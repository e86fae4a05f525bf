//! Monte Carlo experiments over a dimension grid, their aggregate reports,
//! and checks of the asymptotic predictions against them.

mod report;
mod stats;
mod verify;

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use report::{AggregateReport, CellSummary, CSV_HEADER};
pub use stats::{
    ks_statistic, mean, median, quantile_sorted, std_dev, trend_verdict, two_cluster_separation,
    KsReference, KsResult, TrendDecision, TrendDirection, TrendTarget, TrendThresholds,
    KS_CRITICAL_01, KS_MIN_SAMPLES,
};
pub use verify::{verify_prediction, verify_report, Check, VerificationReport};

use crate::dualpca::{angle, decompose, inner_products, recover_directions, scaled_dual_deviation, subspace_angle};
use crate::error::{Error, Result};
use crate::sampler::{distance_stats, sample_z, synthesize_with_spectrum, NoiseSpec, SeedSpec};
use crate::spectra::{eigenvalues, CovarianceModel, EigenSpectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    DualDeviation,
    Angles,
    SubspaceAngles,
    EigenvalueRatios,
    DistanceStats,
}

pub fn angle_metric(i: usize) -> String {
    format!("angle_{i}")
}

/// Angle of `û_i` to `span{u_j : j ∈ J_l}` for the `l`-th tracked group.
pub fn subspace_metric(i: usize, l: usize) -> String {
    format!("subspace_angle_{i}_J{l}")
}

/// `λ̂_i / λ_i`.
pub fn eig_ratio_metric(i: usize) -> String {
    format!("eig_ratio_{i}")
}

/// `λ̂_i / d`.
pub fn eig_over_d_metric(i: usize) -> String {
    format!("eig_over_d_{i}")
}

pub const DUAL_DEVIATION: &str = "dual_deviation";
pub const SCALED_NORM: &str = "scaled_norm";
pub const SCALED_DISTANCE: &str = "scaled_distance";

/// Finite-grid stand-ins for the limits `→ 0` and `→ π/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub angle_ceiling_deg: f64,
    pub angle_floor_deg: f64,
    pub flat_band_deg: f64,
    pub deviation_ceiling: f64,
    /// Allowed factor between medians of `λ̂_i / d^α` at the top two grid points.
    pub eigen_ratio_band: f64,
    /// Allowed relative error of the tail medians `λ̂_i / d` against `K`.
    pub tail_tolerance: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            angle_ceiling_deg: 10.0,
            angle_floor_deg: 80.0,
            flat_band_deg: 2.0,
            deviation_ceiling: 0.1,
            eigen_ratio_band: 2.0,
            tail_tolerance: 0.2,
        }
    }
}

impl Thresholds {
    pub fn angles(&self) -> TrendThresholds {
        TrendThresholds {
            ceiling: self.angle_ceiling_deg,
            floor: self.angle_floor_deg,
            flat_band: self.flat_band_deg,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub model: CovarianceModel,
    pub noise: NoiseSpec,
    /// One entry for a fixed sample size.
    pub n_grid: Vec<usize>,
    pub d_grid: Vec<usize>,
    pub replicates: usize,
    pub seed: SeedSpec,
    pub metrics: Vec<Metric>,
    /// Population index sets for subspace angles.
    #[serde(default)]
    pub tracked_groups: Vec<Vec<usize>>,
    /// Sample directions for per-vector angles and eigenvalue ratios;
    /// empty means `1..=min(n, 5)`.
    #[serde(default)]
    pub directions: Vec<usize>,
    #[serde(default)]
    pub thresholds: Thresholds,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        self.noise.validate()?;
        let bad = |msg: String| Err(Error::Configuration(msg));
        if self.n_grid.is_empty() || self.d_grid.is_empty() {
            return bad("n_grid and d_grid must be nonempty".into());
        }
        if self.n_grid.windows(2).any(|w| w[1] <= w[0]) || self.d_grid.windows(2).any(|w| w[1] <= w[0]) {
            return bad("grids must be strictly increasing".into());
        }
        if self.n_grid[0] < 2 {
            return bad("sample sizes must be at least 2".into());
        }
        let (n_max, n_min, d_min) = (*self.n_grid.last().unwrap(), self.n_grid[0], self.d_grid[0]);
        if n_max >= d_min {
            return bad(format!("need max(n) < min(d); got n = {n_max}, d = {d_min}"));
        }
        if let Some(&i) = self.directions.iter().find(|&&i| i == 0 || i > n_min) {
            return bad(format!("direction {i} outside 1..={n_min}"));
        }
        for g in &self.tracked_groups {
            if g.is_empty() || g.iter().any(|&j| j == 0 || j > n_min) {
                return bad(format!("tracked group {g:?} must be nonempty within 1..={n_min}"));
            }
        }
        if self.metrics.contains(&Metric::SubspaceAngles) && self.tracked_groups.is_empty() {
            return bad("subspace angles need at least one tracked group".into());
        }
        Ok(())
    }

    /// Directions in use for sample size `n` (sorted, deduplicated).
    pub fn tracked_directions(&self, n: usize) -> Vec<usize> {
        if self.directions.is_empty() {
            (1..=n.min(5)).collect()
        } else {
            let set: BTreeSet<usize> = self.directions.iter().copied().collect();
            set.into_iter().collect()
        }
    }

    fn has(&self, m: Metric) -> bool {
        self.metrics.contains(&m)
    }

    fn slots(&self, n: usize) -> Vec<Slot> {
        let dirs = self.tracked_directions(n);
        let mut out = Vec::new();
        if self.has(Metric::DualDeviation) {
            out.push(Slot::DualDeviation);
        }
        if self.has(Metric::Angles) {
            out.extend(dirs.iter().map(|&i| Slot::Angle(i)));
        }
        if self.has(Metric::SubspaceAngles) {
            for (l, g) in self.tracked_groups.iter().enumerate() {
                out.extend(g.iter().map(|&i| Slot::Subspace(i, l)));
            }
        }
        if self.has(Metric::EigenvalueRatios) {
            out.extend(dirs.iter().map(|&i| Slot::EigRatio(i)));
            out.extend(dirs.iter().map(|&i| Slot::EigOverD(i)));
        }
        if self.has(Metric::DistanceStats) {
            out.push(Slot::ScaledNorm);
            out.push(Slot::ScaledDistance);
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
enum Slot {
    DualDeviation,
    Angle(usize),
    Subspace(usize, usize),
    EigRatio(usize),
    EigOverD(usize),
    ScaledNorm,
    ScaledDistance,
}

impl Slot {
    fn name(&self) -> String {
        match *self {
            Slot::DualDeviation => DUAL_DEVIATION.into(),
            Slot::Angle(i) => angle_metric(i),
            Slot::Subspace(i, l) => subspace_metric(i, l + 1),
            Slot::EigRatio(i) => eig_ratio_metric(i),
            Slot::EigOverD(i) => eig_over_d_metric(i),
            Slot::ScaledNorm => SCALED_NORM.into(),
            Slot::ScaledDistance => SCALED_DISTANCE.into(),
        }
    }
}

/// Runs the plan; equivalent to [`run_experiment_with`] without progress.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<AggregateReport> {
    run_experiment_with(plan, |_, _| {})
}

/// Runs the plan, calling `progress(n, d)` after each grid point.
pub fn run_experiment_with<F: Fn(usize, usize)>(
    plan: &ExperimentPlan,
    progress: F,
) -> Result<AggregateReport> {
    plan.validate()?;
    let mut report = AggregateReport {
        n_grid: plan.n_grid.clone(),
        d_grid: plan.d_grid.clone(),
        replicates: plan.replicates,
        cells: Vec::new(),
        samples: Vec::new(),
    };
    if plan.replicates == 0 {
        return Ok(report);
    }
    for (ni, &n) in plan.n_grid.iter().enumerate() {
        let slots = plan.slots(n);
        for (di, &d) in plan.d_grid.iter().enumerate() {
            let spectrum = eigenvalues(&plan.model, d)?;
            let seed = plan.seed.substream(((ni as u64) << 32) | di as u64);
            let outcomes: Vec<Result<Option<Vec<Vec<f64>>>>> = (0..plan.replicates)
                .into_par_iter()
                .map(|rep| replicate(plan, &spectrum, &slots, n, &seed, rep as u64))
                .collect();
            let mut pooled = vec![Vec::new(); slots.len()];
            let mut failures = 0;
            for outcome in outcomes {
                match outcome? {
                    Some(values) => {
                        for (pool, v) in pooled.iter_mut().zip(values) {
                            pool.extend(v);
                        }
                    }
                    None => failures += 1,
                }
            }
            if failures * 20 > plan.replicates {
                return Err(Error::ExcessiveFailures {
                    d,
                    n,
                    failures,
                    replicates: plan.replicates,
                });
            }
            let n_rep = plan.replicates - failures;
            for (slot, values) in slots.iter().zip(pooled) {
                report
                    .cells
                    .push(CellSummary::from_values(n, d, slot.name(), &values, n_rep, failures));
                report.samples.push(values);
            }
            progress(n, d);
        }
    }
    Ok(report)
}

/// One replicate's values per slot, or `None` on a rank-deficient draw.
fn replicate(
    plan: &ExperimentPlan,
    spectrum: &EigenSpectrum,
    slots: &[Slot],
    n: usize,
    seed: &SeedSpec,
    rep: u64,
) -> Result<Option<Vec<Vec<f64>>>> {
    let d = spectrum.d();
    let z = sample_z(&plan.noise, d, n, seed, rep)?;
    let x = synthesize_with_spectrum(spectrum, &z)?;
    let dual = decompose(&x)?;
    let mut needed: BTreeSet<usize> = BTreeSet::new();
    for s in slots {
        match *s {
            Slot::Angle(i) => {
                needed.insert(i);
            }
            Slot::Subspace(i, l) => {
                needed.insert(i);
                needed.extend(plan.tracked_groups[l].iter().copied());
            }
            _ => {}
        }
    }
    let rows = match needed.last() {
        Some(&r) => {
            let dirs = match recover_directions(&x, &dual, r) {
                Ok(dirs) => dirs,
                Err(Error::RankDeficient { .. }) => return Ok(None),
                Err(e) => return Err(e),
            };
            let tracked: Vec<usize> = needed.iter().copied().collect();
            Some(inner_products(&dirs, &plan.model, d, &tracked)?)
        }
        None => None,
    };
    let stats = slots
        .iter()
        .any(|s| matches!(s, Slot::ScaledNorm | Slot::ScaledDistance))
        .then(|| distance_stats(&x));
    let mut out = Vec::with_capacity(slots.len());
    for s in slots {
        out.push(match *s {
            Slot::DualDeviation => vec![scaled_dual_deviation(&dual)],
            Slot::Angle(i) => {
                let p = rows.as_ref().and_then(|r| r.get(i, i)).unwrap_or(f64::NAN);
                vec![angle(p).to_degrees()]
            }
            Slot::Subspace(i, l) => {
                let r = rows.as_ref().expect("rows computed for subspace slots");
                vec![subspace_angle(r, i, &plan.tracked_groups[l])?.to_degrees()]
            }
            Slot::EigRatio(i) => {
                let lambda = spectrum.value(i).unwrap_or(f64::NAN);
                vec![dual.eigenvalues[i - 1] / lambda]
            }
            Slot::EigOverD(i) => vec![dual.eigenvalues[i - 1] / d as f64],
            Slot::ScaledNorm => stats.as_ref().map(|s| s.scaled_norms.clone()).unwrap_or_default(),
            Slot::ScaledDistance => stats
                .as_ref()
                .map(|s| s.scaled_distances.clone())
                .unwrap_or_default(),
        });
    }
    Ok(Some(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan(metrics: Vec<Metric>, replicates: usize) -> ExperimentPlan {
        ExperimentPlan {
            model: CovarianceModel::single_spike(1.5, 1.0, 1.0).unwrap(),
            noise: NoiseSpec::Gaussian,
            n_grid: vec![5],
            d_grid: vec![50, 200, 800],
            replicates,
            seed: SeedSpec::new(7),
            metrics,
            tracked_groups: vec![vec![1, 2]],
            directions: vec![],
            thresholds: Thresholds::default(),
        }
    }

    #[test]
    fn zero_replicates_give_empty_report() {
        let r = run_experiment(&plan(vec![Metric::Angles], 0)).unwrap();
        assert!(r.cells.is_empty());
    }

    #[test]
    fn deterministic_and_complete() {
        let p = plan(
            vec![
                Metric::Angles,
                Metric::SubspaceAngles,
                Metric::EigenvalueRatios,
                Metric::DualDeviation,
                Metric::DistanceStats,
            ],
            12,
        );
        let a = run_experiment(&p).unwrap();
        let b = run_experiment(&p).unwrap();
        assert_eq!(a, b);
        // 1 + 5 + 2 + 10 + 2 slots per grid point
        assert_eq!(a.cells.len(), 3 * 20);
        for c in &a.cells {
            assert_eq!(c.n_rep + c.failures, 12);
            assert!(c.q05 <= c.q25 && c.q25 <= c.q50 && c.q50 <= c.q75 && c.q75 <= c.q95);
        }
        assert_eq!(a.samples(5, 50, SCALED_NORM).unwrap().len(), 12 * 5);
        assert_eq!(a.samples(5, 50, SCALED_DISTANCE).unwrap().len(), 12 * 10);
    }

    #[test]
    fn rejects_n_not_below_d() {
        let mut p = plan(vec![Metric::Angles], 3);
        p.d_grid = vec![5, 10, 20];
        assert!(matches!(run_experiment(&p), Err(Error::Configuration(_))));
    }

    #[test]
    fn csv_shape() {
        let r = run_experiment(&plan(vec![Metric::DualDeviation], 4)).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        assert_eq!(lines.count(), 3);
    }
}
