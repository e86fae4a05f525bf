use hdlss_core::asymptotics::{reference_sample, LimitLaw};
use hdlss_core::harness::{
    eig_ratio_metric, ks_statistic, mean, run_experiment, ExperimentPlan, KsReference, Metric,
    Thresholds,
};
use hdlss_core::sampler::{NoiseSpec, SeedSpec};
use hdlss_core::spectra::CovarianceModel;

#[test]
fn ks_accepts_its_own_reference_law() {
    let law = LimitLaw::ChiSqOverN { scale: 1.0, dof: 5, n: 5 };
    let reference = KsReference::ChiSqOverN { dof: 5, n: 5 };
    let seeds = 500;
    let accepted = (0..seeds)
        .filter(|&s| {
            let sample = reference_sample(&law, 10_000, &SeedSpec::new(s)).unwrap();
            !ks_statistic(&sample, &reference).unwrap().rejected
        })
        .count();
    assert!(accepted * 100 >= seeds as usize * 98, "{accepted} of {seeds} accepted");
}

#[test]
fn ks_rejects_a_shifted_law() {
    let law = LimitLaw::ChiSqOverN { scale: 1.1, dof: 5, n: 5 };
    let sample = reference_sample(&law, 10_000, &SeedSpec::new(1)).unwrap();
    assert!(ks_statistic(&sample, &KsReference::ChiSqOverN { dof: 5, n: 5 }).unwrap().rejected);
}

#[test]
fn singleton_wishart_law_agrees_with_chi_square() {
    let wishart = LimitLaw::ScaledWishartEigen {
        group: 1,
        order: 1,
        scales: vec![2.0],
        dof: 10,
        n: 10,
        gaussian: true,
    };
    let chi = LimitLaw::ChiSqOverN { scale: 2.0, dof: 10, n: 10 };
    let a = reference_sample(&wishart, 100_000, &SeedSpec::new(11)).unwrap();
    let b = reference_sample(&chi, 100_000, &SeedSpec::new(12)).unwrap();
    let ks = ks_statistic(&a, &KsReference::Empirical { values: b }).unwrap();
    assert!(!ks.rejected, "{ks:?}");
}

#[test]
fn wishart_eigenvalues_share_the_expected_trace() {
    let draw = |order| {
        let law = LimitLaw::ScaledWishartEigen {
            group: 1,
            order,
            scales: vec![2.0, 1.0],
            dof: 10,
            n: 10,
            gaussian: true,
        };
        reference_sample(&law, 100_000, &SeedSpec::new(order as u64)).unwrap()
    };
    let (top, second) = (draw(1), draw(2));
    // E tr(n⁻¹ C^{1/2} G G' C^{1/2}) = (c_1 + c_2) · dof / n = 3.
    let total = mean(&top) + mean(&second);
    assert!((total - 3.0).abs() < 0.02, "{total}");
    assert!(mean(&top) > 2.0 && mean(&second) < 1.0);
}

fn ratio_samples(direction: usize) -> Vec<f64> {
    let plan = ExperimentPlan {
        model: CovarianceModel::multi_spike(vec![(3.0, vec![1.0]), (2.0, vec![1.0])], 1.0).unwrap(),
        noise: NoiseSpec::Gaussian,
        n_grid: vec![10],
        d_grid: vec![1000],
        replicates: 1000,
        seed: SeedSpec::new(77),
        metrics: vec![Metric::EigenvalueRatios],
        tracked_groups: vec![],
        directions: vec![1, 2],
        thresholds: Thresholds::default(),
    };
    let report = run_experiment(&plan).unwrap();
    report.samples(10, 1000, &eig_ratio_metric(direction)).unwrap().to_vec()
}

#[test]
fn second_singleton_group_loses_one_degree_of_freedom() {
    let second = ratio_samples(2);
    let reduced = ks_statistic(&second, &KsReference::ChiSqOverN { dof: 9, n: 10 }).unwrap();
    let full = ks_statistic(&second, &KsReference::ChiSqOverN { dof: 10, n: 10 }).unwrap();
    assert!(!reduced.rejected, "{reduced:?}");
    assert!(full.rejected, "{full:?}");

    let first = ratio_samples(1);
    let ks = ks_statistic(&first, &KsReference::ChiSqOverN { dof: 10, n: 10 }).unwrap();
    assert!(!ks.rejected, "{ks:?}");
}
