use serde::{Deserialize, Serialize};

use super::stats::{ks_statistic, trend_verdict, KsReference, KsResult, TrendDecision, TrendDirection, TrendTarget, TrendThresholds};
use super::{
    angle_metric, eig_over_d_metric, eig_ratio_metric, run_experiment, subspace_metric,
    AggregateReport, ExperimentPlan, Metric, DUAL_DEVIATION, KS_MIN_SAMPLES,
};
use crate::asymptotics::{
    classify, EigenvalueLimit, LimitLaw, RegimeVerdict, SpikeStructure, Verdict, ZAssumption,
};
use crate::error::{Error, Result};
use crate::spectra::eigenvalues;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub kind: String,
    pub metric: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub direction: Option<usize>,
    pub passed: bool,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trend: Option<TrendDecision>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ks: Option<KsResult>,
}

impl Check {
    fn new(kind: &str, metric: String, direction: Option<usize>, passed: bool, detail: String) -> Self {
        Self {
            kind: kind.into(),
            metric,
            direction,
            passed,
            detail,
            trend: None,
            ks: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub passed: bool,
    pub checks: Vec<Check>,
}

/// Simulates the plan (adding whatever metrics the verdict needs) and checks
/// every prediction against the outcome.
pub fn verify_prediction(
    plan: &ExperimentPlan,
    verdict: &RegimeVerdict,
    limits: &[EigenvalueLimit],
) -> Result<(AggregateReport, VerificationReport)> {
    plan.validate()?;
    let n0 = plan.n_grid[0];
    if verdict.directions.len() != n0 {
        return Err(Error::Configuration(format!(
            "verdict covers {} directions but the plan's sample size is {n0}",
            verdict.directions.len()
        )));
    }
    let structure = SpikeStructure::from_model(&plan.model, n0, ZAssumption::RhoMixingBounded4th)?;
    let expected = classify(&structure)?;
    let strip = |v: &RegimeVerdict| -> Vec<(usize, Verdict, Option<Vec<usize>>)> {
        v.directions.iter().map(|d| (d.i, d.verdict, d.group.clone())).collect()
    };
    if strip(&expected) != strip(verdict) {
        return Err(Error::Configuration(
            "verdict does not match the spike structure of the plan's model".into(),
        ));
    }
    if limits.iter().any(|l| l.i == 0 || l.i > n0) {
        return Err(Error::Configuration("eigenvalue limit index outside 1..=n".into()));
    }
    if plan.n_grid.len() == 1 && plan.d_grid.len() < 3 {
        return Err(Error::Configuration("trend checks need at least three grid dimensions".into()));
    }
    let augmented = augment(plan, verdict);
    let report = run_experiment(&augmented)?;
    let checks = verify_report(&augmented, verdict, limits, &report)?;
    Ok((report, checks))
}

fn augment(plan: &ExperimentPlan, verdict: &RegimeVerdict) -> ExperimentPlan {
    let mut p = plan.clone();
    for m in [Metric::Angles, Metric::EigenvalueRatios] {
        if !p.metrics.contains(&m) {
            p.metrics.push(m);
        }
    }
    for d in &verdict.directions {
        if let (Verdict::SubspaceConsistent, Some(g)) = (d.verdict, &d.group) {
            if !p.tracked_groups.contains(g) {
                p.tracked_groups.push(g.clone());
            }
        }
    }
    if !p.tracked_groups.is_empty() && !p.metrics.contains(&Metric::SubspaceAngles) {
        p.metrics.push(Metric::SubspaceAngles);
    }
    p
}

/// Checks an existing report. The plan must already carry the metrics the
/// verdict needs (as arranged by [`verify_prediction`]).
pub fn verify_report(
    plan: &ExperimentPlan,
    verdict: &RegimeVerdict,
    limits: &[EigenvalueLimit],
    report: &AggregateReport,
) -> Result<VerificationReport> {
    let checks = if plan.n_grid.len() > 1 {
        growing_n_checks(plan, verdict, report)?
    } else {
        fixed_n_checks(plan, verdict, limits, report)?
    };
    Ok(VerificationReport {
        passed: !checks.is_empty() && checks.iter().all(|c| c.passed),
        checks,
    })
}

fn missing(metric: &str) -> Error {
    Error::Configuration(format!("report lacks metric {metric}"))
}

fn trend_check(
    report: &AggregateReport,
    n: usize,
    metric: String,
    direction: Option<usize>,
    target: TrendTarget,
    thresholds: &TrendThresholds,
) -> Result<Check> {
    let series = report.median_series(n, &metric).ok_or_else(|| missing(&metric))?;
    let decision = trend_verdict(&metric, &series, target, thresholds);
    let wanted = match target {
        TrendTarget::Zero => TrendDirection::ToZero,
        TrendTarget::RightAngle => TrendDirection::ToRightAngle,
    };
    let passed = decision.direction == wanted;
    let kind = match target {
        TrendTarget::Zero => "to_zero",
        TrendTarget::RightAngle => "to_right_angle",
    };
    let mut check = Check::new(
        kind,
        metric,
        direction,
        passed,
        format!("medians {:?} -> {:?}", series, decision.direction),
    );
    check.trend = Some(decision);
    Ok(check)
}

fn fixed_n_checks(
    plan: &ExperimentPlan,
    verdict: &RegimeVerdict,
    limits: &[EigenvalueLimit],
    report: &AggregateReport,
) -> Result<Vec<Check>> {
    let n = plan.n_grid[0];
    let angles = plan.thresholds.angles();
    let dirs = plan.tracked_directions(n);
    let mut checks = Vec::new();
    if plan.metrics.contains(&Metric::DualDeviation) {
        let th = TrendThresholds {
            ceiling: plan.thresholds.deviation_ceiling,
            floor: f64::INFINITY,
            flat_band: 0.0,
        };
        checks.push(trend_check(report, n, DUAL_DEVIATION.into(), None, TrendTarget::Zero, &th)?);
    }
    for &i in &dirs {
        let v = verdict.get(i).ok_or_else(|| missing(&angle_metric(i)))?;
        checks.push(match v.verdict {
            Verdict::Consistent => {
                trend_check(report, n, angle_metric(i), Some(i), TrendTarget::Zero, &angles)?
            }
            Verdict::StronglyInconsistent => {
                trend_check(report, n, angle_metric(i), Some(i), TrendTarget::RightAngle, &angles)?
            }
            Verdict::SubspaceConsistent => {
                let group = v.group.as_ref().expect("subspace verdicts carry their group");
                let l = plan
                    .tracked_groups
                    .iter()
                    .position(|g| g == group)
                    .ok_or_else(|| missing("subspace angle"))?;
                trend_check(report, n, subspace_metric(i, l + 1), Some(i), TrendTarget::Zero, &angles)?
            }
        });
    }
    let d_last = *plan.d_grid.last().unwrap();
    let d_prev = plan.d_grid[plan.d_grid.len() - 2];
    for limit in limits.iter().filter(|l| dirs.contains(&l.i)) {
        let i = limit.i;
        match &limit.law {
            LimitLaw::TailConstant { k } => {
                if *k <= 0.0 {
                    continue;
                }
                let metric = eig_over_d_metric(i);
                let m = report.cell(n, d_last, &metric).ok_or_else(|| missing(&metric))?.q50;
                let rel = (m / k - 1.0).abs();
                checks.push(Check::new(
                    "tail_constant",
                    metric,
                    Some(i),
                    rel <= plan.thresholds.tail_tolerance,
                    format!("median {m:.6} vs K = {k:.6} (relative error {rel:.3})"),
                ));
            }
            law => {
                let metric = eig_ratio_metric(i);
                let scaled = |d: usize| -> Result<f64> {
                    let lambda = eigenvalues(&plan.model, d)?.value(i).unwrap_or(f64::NAN);
                    let m = report.cell(n, d, &metric).ok_or_else(|| missing(&metric))?.q50;
                    Ok(m * lambda / (d as f64).powf(limit.exponent))
                };
                let (a, b) = (scaled(d_prev)?, scaled(d_last)?);
                let factor = b / a;
                let band = plan.thresholds.eigen_ratio_band;
                checks.push(Check::new(
                    "eigenvalue_scaling",
                    format!("eig_over_d^{}_{i}", limit.exponent),
                    Some(i),
                    factor >= 1.0 / band && factor <= band,
                    format!("medians {a:.6} (d={d_prev}) and {b:.6} (d={d_last}), factor {factor:.3}"),
                ));
                if let LimitLaw::ChiSqOverN { dof, n: divisor, .. } = law {
                    let samples = report.samples(n, d_last, &metric).ok_or_else(|| missing(&metric))?;
                    if samples.len() >= KS_MIN_SAMPLES {
                        let ks = ks_statistic(samples, &KsReference::ChiSqOverN { dof: *dof, n: *divisor })?;
                        let mut check = Check::new(
                            "ks_chi_square",
                            metric.clone(),
                            Some(i),
                            !ks.rejected,
                            format!(
                                "D = {:.4}, critical {:.4} against chi2_{dof}/{divisor} at d = {d_last}",
                                ks.statistic, ks.critical
                            ),
                        );
                        check.ks = Some(ks);
                        checks.push(check);
                    }
                }
            }
        }
    }
    Ok(checks)
}

fn growing_n_checks(
    plan: &ExperimentPlan,
    verdict: &RegimeVerdict,
    report: &AggregateReport,
) -> Result<Vec<Check>> {
    let d = *plan.d_grid.last().unwrap();
    let mut checks = Vec::new();
    for i in plan.tracked_directions(plan.n_grid[0]) {
        let Some(v) = verdict.get(i) else { continue };
        if v.growing_n != Some(Verdict::Consistent) {
            continue;
        }
        let metric = angle_metric(i);
        let series = report.median_series_over_n(d, &metric).ok_or_else(|| missing(&metric))?;
        let passed = series.windows(2).all(|w| w[1] < w[0]);
        checks.push(Check::new(
            "decreasing_in_n",
            metric,
            Some(i),
            passed,
            format!("medians over n = {:?} at d = {d}: {:?}", plan.n_grid, series),
        ));
    }
    Ok(checks)
}
