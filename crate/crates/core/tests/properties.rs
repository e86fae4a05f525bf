use hdlss_core::asymptotics::{classify, SpikeStructure, Verdict, ZAssumption};
use hdlss_core::dualpca::decompose;
use hdlss_core::harness::{quantile_sorted, trend_verdict, TrendDirection, TrendTarget, TrendThresholds};
use hdlss_core::sampler::{sample_z, synthesize_x, NoiseSpec, SeedSpec};
use hdlss_core::spectra::{sphericity, CovarianceModel, EigenSpectrum};
use hdlss_core::Error;
use proptest::prelude::*;

fn spike_groups() -> impl Strategy<Value = Vec<(f64, Vec<f64>)>> {
    prop::collection::vec((0.3f64..4.0, prop::collection::vec(0.1f64..10.0, 1..3)), 1..4)
        .prop_map(|mut groups| {
            for (_, scales) in groups.iter_mut() {
                scales.sort_by(|a, b| b.total_cmp(a));
            }
            groups.sort_by(|a, b| b.0.total_cmp(&a.0));
            groups.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-3);
            groups
        })
}

fn structure(groups: &[(f64, Vec<f64>)], n: usize, z: ZAssumption) -> Result<SpikeStructure, Error> {
    let model = CovarianceModel::multi_spike(groups.to_vec(), 1.0)?;
    SpikeStructure::from_model(&model, n, z)
}

proptest! {
    #[test]
    fn sphericity_is_bounded_and_scale_free(
        values in prop::collection::vec(0.0f64..100.0, 2..60),
        scale in 1e-3f64..1e3,
        k_frac in 0.0f64..1.0,
    ) {
        prop_assume!(values.iter().any(|&v| v > 1e-6));
        let d = values.len();
        let spectrum = EigenSpectrum::from_values(&values).unwrap();
        let sorted: Vec<f64> = spectrum.iter().collect();
        let last_positive = sorted.iter().rposition(|&v| v > 0.0).unwrap() + 1;
        let k = 1 + ((last_positive - 1) as f64 * k_frac) as usize;
        let s = sphericity(&spectrum, k).unwrap();
        let df = d as f64;
        prop_assert!(s.epsilon_k >= 1.0 / df - 1e-12);
        prop_assert!(s.epsilon_k <= (df - k as f64 + 1.0) / df + 1e-12);

        let scaled: Vec<f64> = values.iter().map(|v| v * scale).collect();
        let t = sphericity(&EigenSpectrum::from_values(&scaled).unwrap(), k).unwrap();
        prop_assert!((s.epsilon_k - t.epsilon_k).abs() <= 1e-12 * s.epsilon_k.max(1.0));
    }

    #[test]
    fn classifier_is_total(groups in spike_groups(), n in 2usize..12, independent in any::<bool>()) {
        let z = if independent { ZAssumption::IndependentBounded8th } else { ZAssumption::RhoMixingBounded4th };
        match structure(&groups, n, z).and_then(|s| classify(&s)) {
            Ok(v) => {
                prop_assert_eq!(v.directions.len(), n);
                for (idx, dir) in v.directions.iter().enumerate() {
                    prop_assert_eq!(dir.i, idx + 1);
                    prop_assert_eq!(dir.group.is_some(), dir.verdict != Verdict::StronglyInconsistent);
                }
            }
            Err(Error::UnsupportedStructure(_) | Error::BoundaryUnsupported(_)) => {}
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }

    #[test]
    fn verdicts_ignore_a_common_scale(groups in spike_groups(), n in 2usize..12, c in 0.01f64..100.0) {
        let scaled: Vec<(f64, Vec<f64>)> = groups
            .iter()
            .map(|(a, s)| (*a, s.iter().map(|x| x * c).collect()))
            .collect();
        let z = ZAssumption::IndependentBounded8th;
        let a = structure(&groups, n, z).and_then(|s| classify(&s));
        let b = structure(&scaled, n, z).and_then(|s| classify(&s));
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{a:?} vs {b:?}"),
        }
    }

    #[test]
    fn quantiles_are_monotone(
        mut values in prop::collection::vec(-1e6f64..1e6, 1..80),
        p in 0.0f64..1.0,
        q in 0.0f64..1.0,
    ) {
        values.sort_by(f64::total_cmp);
        let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
        let (a, b) = (quantile_sorted(&values, lo), quantile_sorted(&values, hi));
        prop_assert!(a <= b);
        prop_assert!(values[0] <= a && b <= values[values.len() - 1]);
    }

    #[test]
    fn to_zero_requires_a_falling_series(series in prop::collection::vec(0.0f64..90.0, 3..6)) {
        let th = TrendThresholds::default();
        let v = trend_verdict("angle_1", &series, TrendTarget::Zero, &th);
        if v.direction == TrendDirection::ToZero {
            prop_assert!(series.windows(2).all(|w| w[1] < w[0]));
            prop_assert!(*series.last().unwrap() < th.ceiling);
        }
        let v = trend_verdict("angle_1", &series, TrendTarget::RightAngle, &th);
        if v.direction == TrendDirection::ToRightAngle {
            prop_assert!(series.windows(2).all(|w| w[1] > w[0]));
            prop_assert!(*series.last().unwrap() > th.floor);
        }
    }

    #[test]
    fn dual_trace_is_conserved(d in 2usize..200, n in 2usize..10, seed in any::<u64>(), alpha in 0.0f64..2.0) {
        let model = CovarianceModel::single_spike(alpha, 2.0, 1.0).unwrap();
        let z = sample_z(&NoiseSpec::Rademacher, d, n, &SeedSpec::new(seed), 0).unwrap();
        let x = synthesize_x(&model, &z).unwrap();
        let dual = decompose(&x).unwrap();
        let lhs: f64 = dual.eigenvalues.iter().sum();
        let rhs = x.values().column_iter().map(|c| c.norm_squared()).sum::<f64>() / n as f64;
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs);
    }
}
