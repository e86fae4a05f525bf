//! ε-, ε_k- and strong ε_k-conditions.
//!
//! For closed-form families the verdict is read off the family's asymptotic
//! exponents; otherwise `d·ε_k` and `√d·ε_l` are evaluated along a dimension
//! grid and the trend decides.

use serde::{Deserialize, Serialize};

use super::model::{CovarianceModel, Family};
use super::spectrum::{eigenvalues, EigenSpectrum};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Holds,
    Fails,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Analytic,
    NumericTrend,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionVerdict {
    pub k: usize,
    pub epsilon_condition: Condition,
    pub strong_epsilon_condition: Condition,
    /// Smallest `l ≥ k` with `√d·ε_l → ∞`, when the strong condition holds.
    pub strong_index: Option<usize>,
    pub basis: Basis,
}

/// Consecutive-grid growth factor that counts as divergence.
pub const GROWTH_FACTOR: f64 = 2.0;
/// Consecutive-grid growth factor at or below which a quantity counts as bounded.
pub const BOUNDED_FACTOR: f64 = 1.25;
/// How far past `k` the numeric strong-condition search looks for `l`.
const STRONG_SEARCH_SPAN: usize = 32;

fn validate_grid(k: usize, d_grid: &[usize]) -> Result<()> {
    if d_grid.len() < 3 {
        return Err(Error::InvalidGrid("need at least three grid points".into()));
    }
    if d_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("grid must be strictly increasing".into()));
    }
    if k == 0 || k > d_grid[0] {
        return Err(Error::InvalidIndex {
            index: k,
            reason: format!("k must lie in 1..={}", d_grid[0]),
        });
    }
    Ok(())
}

/// Analytic verdict for closed-form families, numeric trend otherwise.
pub fn condition_check(
    model: &CovarianceModel,
    k: usize,
    d_grid: &[usize],
) -> Result<ConditionVerdict> {
    validate_grid(k, d_grid)?;
    match analytic_condition(model, k) {
        Some(v) => Ok(v),
        None => numeric_condition_check(model, k, d_grid),
    }
}

/// Catalog verdict, or `None` for families without a closed form in `d`.
pub fn analytic_condition(model: &CovarianceModel, k: usize) -> Option<ConditionVerdict> {
    use Condition::*;
    let verdict = |eps, strong, strong_index| ConditionVerdict {
        k,
        epsilon_condition: eps,
        strong_epsilon_condition: strong,
        strong_index,
        basis: Basis::Analytic,
    };
    let by_rates = |rates: Vec<f64>, tail_positive: bool| {
        let v = spike_rule(&rates, k, tail_positive);
        verdict(v.0, v.1, v.2)
    };
    Some(match model.family() {
        Family::Identity => verdict(Holds, Holds, Some(k)),
        Family::SingleSpike(p) => by_rates(vec![p.alpha], p.base > 0.0),
        Family::MultiSpikeGroups(p) => by_rates(
            p.groups
                .iter()
                .flat_map(|g| std::iter::repeat_n(g.alpha, g.scales.len()))
                .collect(),
            p.base > 0.0,
        ),
        Family::Equicorrelation(p) => by_rates(vec![equi_rate(p.rho.gamma)], true),
        Family::BlockEquicorrelation(p) => by_rates(
            vec![equi_rate(p.rho1.gamma), equi_rate(p.rho2.gamma)],
            true,
        ),
        Family::PolynomialDecay(p) => {
            if p.beta < 0.75 {
                verdict(Holds, Holds, Some(k))
            } else if p.beta <= 1.0 {
                verdict(Holds, Fails, None)
            } else {
                verdict(Fails, Fails, None)
            }
        }
        Family::ExponentialDecay(_) => verdict(Fails, Fails, None),
        Family::GrowingSpikes(p) => {
            // Catalog thresholds on 2α + β. They presume the spike mass
            // m·C1·d^α stays O(d), i.e. α + β ≤ 1; beyond that d·ε grows like d^β.
            let t = 2.0 * p.alpha + p.beta;
            if t < 1.5 {
                verdict(Holds, Holds, Some(k))
            } else if t < 2.0 {
                verdict(Holds, Fails, None)
            } else {
                verdict(Fails, Fails, None)
            }
        }
        Family::ExplicitDiagonal(_) => return None,
    })
}

/// Growth exponent of `λ_1 = (dρ_d + 1 − ρ_d)²` for `ρ_d = r·d^{-γ}`.
pub(crate) fn equi_rate(gamma: f64) -> f64 {
    (2.0 * (1.0 - gamma)).max(0.0)
}

/// Finitely many spikes `~ d^{α_i}` (listed in index order, rates
/// nonincreasing) over a flat tail.
fn spike_rule(rates: &[f64], k: usize, tail_positive: bool) -> (Condition, Condition, Option<usize>) {
    use Condition::*;
    if !tail_positive {
        // singular: only the spikes are nonzero
        return (Fails, Fails, None);
    }
    let remaining = rates.get(k - 1..).unwrap_or(&[]);
    let eps = if remaining.iter().all(|&a| a < 1.0) { Holds } else { Fails };
    // √d·ε_l → ∞ iff every spike at or after l grows slower than d^{3/4}
    let steep = rates.iter().take_while(|&&a| a >= 0.75).count();
    (eps, Holds, Some(k.max(steep + 1)))
}

/// Trend of a positive series along the grid.
fn trend(series: &[f64]) -> Condition {
    let ratios: Vec<f64> = series.windows(2).map(|w| w[1] / w[0]).collect();
    if ratios.iter().all(|&r| r >= GROWTH_FACTOR) {
        Condition::Holds
    } else if ratios.iter().all(|&r| r <= BOUNDED_FACTOR) {
        Condition::Fails
    } else {
        Condition::Unknown
    }
}

/// Evaluates `d·ε_k` and `√d·ε_l` along `d_grid`.
pub fn numeric_condition_check(
    model: &CovarianceModel,
    k: usize,
    d_grid: &[usize],
) -> Result<ConditionVerdict> {
    validate_grid(k, d_grid)?;
    let last_l = (k + STRONG_SEARCH_SPAN).min(d_grid[0]);
    // per grid point: d·ε_l for l = k..=last_l (None when the tail vanishes)
    let mut d_eps: Vec<Vec<Option<f64>>> = Vec::with_capacity(d_grid.len());
    for &d in d_grid {
        let spectrum = eigenvalues(model, d)?;
        d_eps.push(head_sphericities(&spectrum, k, last_l));
    }
    let series = |l_off: usize, sqrt: bool| -> Option<Vec<f64>> {
        d_grid
            .iter()
            .zip(&d_eps)
            .map(|(&d, row)| row[l_off].map(|v| if sqrt { v / (d as f64).sqrt() } else { v }))
            .collect()
    };
    let epsilon_condition = match series(0, false) {
        Some(s) => trend(&s),
        None => Condition::Fails,
    };
    let mut strong = Condition::Fails;
    let mut strong_index = None;
    for off in 0..=(last_l - k) {
        match series(off, true).map(|s| trend(&s)).unwrap_or(Condition::Fails) {
            Condition::Holds => {
                strong = Condition::Holds;
                strong_index = Some(k + off);
                break;
            }
            Condition::Unknown => strong = Condition::Unknown,
            Condition::Fails => {}
        }
    }
    Ok(ConditionVerdict {
        k,
        epsilon_condition,
        strong_epsilon_condition: strong,
        strong_index,
        basis: Basis::NumericTrend,
    })
}

/// `d·ε_l` for `l = k..=last_l`. The sums are accumulated from `last_l`
/// backwards so no large head eigenvalue is ever subtracted.
fn head_sphericities(spectrum: &EigenSpectrum, k: usize, last_l: usize) -> Vec<Option<f64>> {
    let d = spectrum.d() as f64;
    let (mut s1, mut s2) = spectrum.tail_sums(last_l);
    let mut out = vec![None; last_l - k + 1];
    for l in (k..=last_l).rev() {
        if l < last_l {
            let v = spectrum.value(l).unwrap_or(0.0);
            s1 += v;
            s2 += v * v;
        }
        out[l - k] = (s2 > 0.0 && s1 > 0.0).then(|| (s1 * s1 / s2).min(d));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use Condition::*;

    const GRID: [usize; 3] = [100, 1000, 10000];

    fn check(model: CovarianceModel, k: usize) -> ConditionVerdict {
        condition_check(&model, k, &GRID).unwrap()
    }

    #[test]
    fn catalog_examples() {
        let v = check(CovarianceModel::polynomial_decay(0.5).unwrap(), 1);
        assert_eq!((v.epsilon_condition, v.strong_epsilon_condition), (Holds, Holds));
        let v = check(CovarianceModel::polynomial_decay(0.9).unwrap(), 1);
        assert_eq!((v.epsilon_condition, v.strong_epsilon_condition), (Holds, Fails));
        let v = check(CovarianceModel::exponential_decay(2.0).unwrap(), 1);
        assert_eq!(v.epsilon_condition, Fails);
        let v = check(CovarianceModel::growing_spikes(0.5, 0.4, 1.0, 1.0).unwrap(), 1);
        assert_eq!((v.epsilon_condition, v.strong_epsilon_condition), (Holds, Holds));
        assert_eq!(v.basis, Basis::Analytic);
    }

    #[test]
    fn sharp_spike_strong_index_skips_spike() {
        let v = check(CovarianceModel::single_spike(1.5, 1.0, 1.0).unwrap(), 1);
        assert_eq!(v.epsilon_condition, Fails);
        assert_eq!(v.strong_epsilon_condition, Holds);
        assert_eq!(v.strong_index, Some(2));
        let v = check(CovarianceModel::single_spike(1.5, 1.0, 1.0).unwrap(), 2);
        assert_eq!((v.epsilon_condition, v.strong_index), (Holds, Some(2)));
        // mild spike with α ∈ [3/4, 1): ε holds at k = 1, strong needs l = 2
        let v = check(CovarianceModel::single_spike(0.9, 1.0, 1.0).unwrap(), 1);
        assert_eq!((v.epsilon_condition, v.strong_index), (Holds, Some(2)));
        let v = check(CovarianceModel::single_spike(0.5, 1.0, 1.0).unwrap(), 1);
        assert_eq!(v.strong_index, Some(1));
    }

    #[test]
    fn singular_case_fails() {
        let v = check(CovarianceModel::single_spike(0.5, 1.0, 0.0).unwrap(), 1);
        assert_eq!((v.epsilon_condition, v.strong_epsilon_condition), (Fails, Fails));
    }

    #[test]
    fn grid_and_index_errors() {
        let m = CovarianceModel::identity();
        assert!(matches!(condition_check(&m, 1, &[10, 100]), Err(Error::InvalidGrid(_))));
        assert!(matches!(condition_check(&m, 1, &[10, 10, 100]), Err(Error::InvalidGrid(_))));
        assert!(matches!(
            condition_check(&m, 11, &[10, 100, 1000]),
            Err(Error::InvalidIndex { .. })
        ));
    }

    #[test]
    fn numeric_trend_basic_cases() {
        let v = numeric_condition_check(&CovarianceModel::identity(), 1, &GRID).unwrap();
        assert_eq!((v.epsilon_condition, v.strong_epsilon_condition), (Holds, Holds));
        assert_eq!(v.basis, Basis::NumericTrend);
        let v = numeric_condition_check(&CovarianceModel::exponential_decay(2.0).unwrap(), 1, &GRID)
            .unwrap();
        assert_eq!((v.epsilon_condition, v.strong_epsilon_condition), (Fails, Fails));
        let v = numeric_condition_check(&CovarianceModel::single_spike(1.5, 1.0, 1.0).unwrap(), 1, &GRID)
            .unwrap();
        assert_eq!(v.epsilon_condition, Fails);
        assert_eq!((v.strong_epsilon_condition, v.strong_index), (Holds, Some(2)));
    }

    #[test]
    fn explicit_diagonal_falls_back_to_numeric() {
        let m = CovarianceModel::explicit_diagonal(vec![1.0; 4]).unwrap();
        assert!(analytic_condition(&m, 1).is_none());
        // fixed length cannot follow a grid
        assert!(condition_check(&m, 1, &GRID).is_err());
    }
}
