use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::structure::SpikeStructure;
use crate::dualpca::eigendecompose;
use crate::error::{Error, Result};
use crate::sampler::SeedSpec;

/// Limit in distribution of `λ̂_i / d^{exponent}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum LimitLaw {
    /// `order`-th largest eigenvalue of `n⁻¹ C^{1/2} Z Z' C^{1/2}`, `C = diag(scales)`,
    /// `Z` of size `k_l × dof`.
    ScaledWishartEigen {
        group: usize,
        order: usize,
        scales: Vec<f64>,
        dof: usize,
        n: usize,
        gaussian: bool,
    },
    /// `scale · χ²_dof / n`; equivalently `λ̂_i / λ_i ⟹ χ²_dof / n`.
    ChiSqOverN { scale: f64, dof: usize, n: usize },
    /// Degenerate at `K`.
    TailConstant { k: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueLimit {
    pub i: usize,
    pub exponent: f64,
    #[serde(flatten)]
    pub law: LimitLaw,
}

/// Limit laws for `λ̂_1, …, λ̂_n`.
///
/// Group `l` sees only the `n − Σ_{j<l} k_j` dimensions of the dual space left
/// after the earlier, larger groups are projected out, so its Wishart has that
/// many degrees of freedom. For the first group this is `n`.
pub fn predict_eigenvalue_limits(structure: &SpikeStructure, gaussian: bool) -> Vec<EigenvalueLimit> {
    let n = structure.n();
    let mut out = Vec::with_capacity(n);
    let mut used = 0;
    for (l, group) in structure.groups().iter().enumerate() {
        let dof = n - used;
        for order in 1..=group.size() {
            let law = if group.size() == 1 && gaussian {
                LimitLaw::ChiSqOverN {
                    scale: group.scales[0],
                    dof,
                    n,
                }
            } else {
                LimitLaw::ScaledWishartEigen {
                    group: l + 1,
                    order,
                    scales: group.scales.clone(),
                    dof,
                    n,
                    gaussian,
                }
            };
            out.push(EigenvalueLimit {
                i: used + order,
                exponent: group.alpha,
                law,
            });
        }
        used += group.size();
    }
    for i in used + 1..=n {
        out.push(EigenvalueLimit {
            i,
            exponent: 1.0,
            law: LimitLaw::TailConstant {
                k: structure.tail().limit_constant,
            },
        });
    }
    out
}

/// One draw from a limit law. Only Gaussian laws can be sampled.
pub fn sample_limit<R: Rng>(law: &LimitLaw, rng: &mut R) -> Result<f64> {
    match law {
        LimitLaw::TailConstant { k } => Ok(*k),
        LimitLaw::ChiSqOverN { scale, dof, n } => {
            let chi = ChiSquared::new(*dof as f64)
                .map_err(|e| Error::InvalidModel(format!("chi-square law: {e}")))?;
            Ok(scale * chi.sample(rng) / *n as f64)
        }
        LimitLaw::ScaledWishartEigen {
            order,
            scales,
            dof,
            n,
            gaussian,
            ..
        } => {
            if !gaussian {
                return Err(Error::UnsupportedStructure(
                    "the eigenvalue law for non-Gaussian noise has no sampler".into(),
                ));
            }
            let k = scales.len();
            let g = DMatrix::<f64>::from_fn(k, *dof, |_, _| rng.sample(StandardNormal));
            let roots = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                k,
                scales.iter().map(|c| c.sqrt()),
            ));
            let half = &roots * g;
            let w = &half * half.transpose() / *n as f64;
            let eig = eigendecompose(&w)?;
            Ok(eig.values[order - 1])
        }
    }
}

/// `m` i.i.d. draws from `law`, reproducible from `seed`.
pub fn reference_sample(law: &LimitLaw, m: usize, seed: &SeedSpec) -> Result<Vec<f64>> {
    let mut rng = seed.rng(0, 0);
    (0..m).map(|_| sample_limit(law, &mut rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotics::ZAssumption;
    use crate::spectra::CovarianceModel;

    fn structure(model: CovarianceModel, n: usize) -> SpikeStructure {
        SpikeStructure::from_model(&model, n, ZAssumption::RhoMixingBounded4th).unwrap()
    }

    #[test]
    fn singleton_gaussian_is_chi_square() {
        let s = structure(CovarianceModel::single_spike(1.5, 2.0, 1.0).unwrap(), 10);
        let limits = predict_eigenvalue_limits(&s, true);
        assert_eq!(limits.len(), 10);
        assert_eq!(
            limits[0].law,
            LimitLaw::ChiSqOverN { scale: 2.0, dof: 10, n: 10 }
        );
        assert_eq!(limits[0].exponent, 1.5);
        for l in &limits[1..] {
            assert_eq!(l.law, LimitLaw::TailConstant { k: 0.1 });
            assert_eq!(l.exponent, 1.0);
        }
    }

    #[test]
    fn later_groups_lose_degrees_of_freedom() {
        let m = CovarianceModel::multi_spike(vec![(3.0, vec![1.0]), (2.0, vec![1.0])], 1.0).unwrap();
        let limits = predict_eigenvalue_limits(&structure(m, 8), true);
        assert!(matches!(limits[1].law, LimitLaw::ChiSqOverN { dof: 7, .. }));
    }

    #[test]
    fn shared_group_uses_wishart() {
        let m = CovarianceModel::multi_spike(vec![(1.5, vec![2.0, 1.0])], 1.0).unwrap();
        let limits = predict_eigenvalue_limits(&structure(m, 6), true);
        match &limits[1].law {
            LimitLaw::ScaledWishartEigen { order, scales, dof, .. } => {
                assert_eq!((*order, scales.as_slice(), *dof), (2, &[2.0, 1.0][..], 6));
            }
            other => panic!("{other:?}"),
        }
        let draws = reference_sample(&limits[0].law, 200, &SeedSpec::new(1)).unwrap();
        let second = reference_sample(&limits[1].law, 200, &SeedSpec::new(1)).unwrap();
        assert!(draws.iter().zip(&second).all(|(a, b)| a >= b && *b > 0.0));
    }

    #[test]
    fn non_gaussian_wishart_has_no_sampler() {
        let m = CovarianceModel::single_spike(1.5, 1.0, 1.0).unwrap();
        let limits = predict_eigenvalue_limits(&structure(m, 4), false);
        assert!(matches!(
            sample_limit(&limits[0].law, &mut SeedSpec::new(0).rng(0, 0)),
            Err(Error::UnsupportedStructure(_))
        ));
    }
}
