use serde::{Deserialize, Serialize};

use super::model::{CovarianceModel, Family};
use crate::error::{Error, Result};

/// Population spectrum at a fixed dimension, stored as runs of equal values
/// so a flat tail of length `10^6` costs one entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSpectrum {
    d: usize,
    runs: Vec<(f64, usize)>,
}

impl EigenSpectrum {
    /// Builds a spectrum from `(value, multiplicity)` runs. Runs must already be
    /// sorted nonincreasing; zero-length runs are dropped and equal neighbours merged.
    pub fn from_runs(runs: Vec<(f64, usize)>) -> Result<Self> {
        let mut merged: Vec<(f64, usize)> = Vec::with_capacity(runs.len());
        for (value, count) in runs {
            if count == 0 {
                continue;
            }
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::InvalidModel(format!(
                    "eigenvalue {value} is negative or not finite"
                )));
            }
            match merged.last_mut() {
                Some(last) if last.0 == value => last.1 += count,
                Some(last) if last.0 < value => {
                    return Err(Error::InvalidModel("eigenvalues are not sorted".into()))
                }
                _ => merged.push((value, count)),
            }
        }
        let d = merged.iter().map(|r| r.1).sum();
        if merged.first().is_none_or(|r| r.0 <= 0.0) {
            return Err(Error::InvalidModel("spectrum has no positive eigenvalue".into()));
        }
        Ok(Self { d, runs: merged })
    }

    /// Sorts arbitrary values into a spectrum.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| b.total_cmp(a));
        Self::from_runs(sorted.into_iter().map(|v| (v, 1)).collect())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn runs(&self) -> &[(f64, usize)] {
        &self.runs
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.runs
            .iter()
            .flat_map(|&(v, c)| std::iter::repeat_n(v, c))
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.iter().collect()
    }

    /// `λ_i` with 1-based `i`.
    pub fn value(&self, i: usize) -> Option<f64> {
        if i == 0 {
            return None;
        }
        let mut seen = 0;
        for &(v, c) in &self.runs {
            seen += c;
            if i <= seen {
                return Some(v);
            }
        }
        None
    }

    /// `(Σ_{i≥k} λ_i, Σ_{i≥k} λ_i²)` with 1-based `k`.
    pub fn tail_sums(&self, k: usize) -> (f64, f64) {
        let skip = k.saturating_sub(1);
        let mut seen = 0usize;
        let (mut s1, mut s2) = (0.0, 0.0);
        for &(v, c) in &self.runs {
            let start = seen;
            seen += c;
            if seen <= skip {
                continue;
            }
            let used = (seen - start.max(skip)) as f64;
            s1 += v * used;
            s2 += v * v * used;
        }
        (s1, s2)
    }

    pub fn trace(&self) -> f64 {
        self.tail_sums(1).0
    }
}

/// Population spectrum of `model` at dimension `d`, sorted nonincreasing.
pub fn eigenvalues(model: &CovarianceModel, d: usize) -> Result<EigenSpectrum> {
    if d < 2 {
        return Err(Error::InvalidDimension {
            d,
            reason: "dimension must be at least 2".into(),
        });
    }
    let df = d as f64;
    let runs = match model.family() {
        Family::Identity => vec![(1.0, d)],
        Family::SingleSpike(p) => sorted_runs(vec![(p.c1 * df.powf(p.alpha), 1), (p.base, d - 1)]),
        Family::MultiSpikeGroups(p) => {
            let kappa: usize = p.groups.iter().map(|g| g.scales.len()).sum();
            if kappa >= d {
                return Err(Error::InvalidDimension {
                    d,
                    reason: format!("{kappa} spikes need d > {kappa}"),
                });
            }
            let mut runs: Vec<(f64, usize)> = p
                .groups
                .iter()
                .flat_map(|g| g.scales.iter().map(move |c| (c * df.powf(g.alpha), 1)))
                .collect();
            runs.push((p.base, d - kappa));
            sorted_runs(runs)
        }
        Family::PolynomialDecay(p) => (1..=d).map(|i| ((i as f64).powf(-p.beta), 1)).collect(),
        Family::ExponentialDecay(p) => (1..=d).map(|i| (p.c.powf(-(i as f64)), 1)).collect(),
        Family::GrowingSpikes(p) => {
            let m = growing_spike_count(d, p.beta);
            sorted_runs(vec![(p.c1 * df.powf(p.alpha), m), (p.c2, d - m)])
        }
        Family::Equicorrelation(p) => {
            let rho = rho_at(&p.rho, d, d)?;
            vec![(equi_spike(rho, d), 1), ((1.0 - rho).powi(2), d - 1)]
        }
        Family::BlockEquicorrelation(p) => {
            let h = block_size(d)?;
            let (rho1, rho2) = (rho_at(&p.rho1, h, d)?, rho_at(&p.rho2, h, d)?);
            if rho1 < rho2 {
                return Err(Error::InvalidDimension {
                    d,
                    reason: format!("rho1 = {rho1} < rho2 = {rho2}"),
                });
            }
            vec![
                (equi_spike(rho1, h), 1),
                (equi_spike(rho2, h), 1),
                ((1.0 - rho2).powi(2), h - 1),
                ((1.0 - rho1).powi(2), h - 1),
            ]
        }
        Family::ExplicitDiagonal(p) => {
            if p.values.len() != d {
                return Err(Error::InvalidDimension {
                    d,
                    reason: format!("explicit diagonal has {} entries", p.values.len()),
                });
            }
            return EigenSpectrum::from_values(&p.values);
        }
    };
    EigenSpectrum::from_runs(runs)
}

pub(crate) fn growing_spike_count(d: usize, beta: f64) -> usize {
    ((d as f64).powf(beta).floor() as usize).clamp(1, d - 1)
}

pub(crate) fn block_size(d: usize) -> Result<usize> {
    if d < 4 || !d.is_multiple_of(2) {
        return Err(Error::InvalidDimension {
            d,
            reason: "block equicorrelation needs an even ambient dimension >= 4".into(),
        });
    }
    Ok(d / 2)
}

pub(crate) fn rho_at(rule: &super::model::PowerLaw, at: usize, d: usize) -> Result<f64> {
    let rho = rule.at(at);
    if rho > 0.0 && rho < 1.0 {
        Ok(rho)
    } else {
        Err(Error::InvalidDimension {
            d,
            reason: format!("correlation {rho} outside (0, 1)"),
        })
    }
}

fn equi_spike(rho: f64, d: usize) -> f64 {
    (d as f64 * rho + 1.0 - rho).powi(2)
}

fn sorted_runs(mut runs: Vec<(f64, usize)>) -> Vec<(f64, usize)> {
    runs.sort_by(|a, b| b.0.total_cmp(&a.0));
    runs
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericityReport {
    pub k: usize,
    pub epsilon_k: f64,
    pub d_epsilon_k: f64,
    pub sqrtd_epsilon_k: f64,
}

/// `ε_k = (Σ_{i≥k} λ_i)² / (d Σ_{i≥k} λ_i²)`, always with the full ambient `d`.
pub fn sphericity(spectrum: &EigenSpectrum, k: usize) -> Result<SphericityReport> {
    let d = spectrum.d();
    if k == 0 || k > d {
        return Err(Error::InvalidIndex {
            index: k,
            reason: format!("k must lie in 1..={d}"),
        });
    }
    let (s1, s2) = spectrum.tail_sums(k);
    if s2 <= 0.0 {
        return Err(Error::UndefinedSphericity { k });
    }
    let df = d as f64;
    let epsilon_k = s1 * s1 / (df * s2);
    Ok(SphericityReport {
        k,
        epsilon_k,
        d_epsilon_k: df * epsilon_k,
        sqrtd_epsilon_k: df.sqrt() * epsilon_k,
    })
}
