use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::{
    analytic_condition, equi_rate, Condition, ConditionVerdict, CovarianceModel, Family,
};

/// Moment/dependence hypothesis on the sphered components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZAssumption {
    /// ρ-mixing under some permutation, uniformly bounded fourth moments.
    RhoMixingBounded4th,
    /// Independent components, uniformly bounded eighth moments.
    IndependentBounded8th,
}

/// Spikes `λ_i ≈ c_i d^α` sharing one rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeGroupSpec {
    pub alpha: f64,
    pub scales: Vec<f64>,
}

impl SpikeGroupSpec {
    pub fn new(alpha: f64, scales: Vec<f64>) -> Self {
        Self { alpha, scales }
    }

    pub fn size(&self) -> usize {
        self.scales.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailSpec {
    /// ε_{κ+1}-condition (and its strong form) for the non-spike eigenvalues.
    pub condition: ConditionVerdict,
    /// `Σ_{i>κ} λ_i = O(d)`.
    pub trace_linear: bool,
    /// `K = lim (dn)⁻¹ Σ_{i>κ} λ_i`.
    pub limit_constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeStructure {
    groups: Vec<SpikeGroupSpec>,
    tail: TailSpec,
    n: usize,
    z_assumption: ZAssumption,
}

impl SpikeStructure {
    /// Checks the bookkeeping invariants (nonempty groups, positive scales,
    /// strictly decreasing rates, `κ < n`). Rates at or below one are left for
    /// [`classify`](super::classify) to reject.
    pub fn new(
        groups: Vec<SpikeGroupSpec>,
        tail: TailSpec,
        n: usize,
        z_assumption: ZAssumption,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::UnsupportedStructure("sample size must be at least 2".into()));
        }
        for (l, g) in groups.iter().enumerate() {
            if g.scales.is_empty() || g.scales.iter().any(|c| !(*c > 0.0)) {
                return Err(Error::UnsupportedStructure(format!(
                    "group {} needs positive limit constants",
                    l + 1
                )));
            }
        }
        if groups.windows(2).any(|w| w[1].alpha >= w[0].alpha) {
            return Err(Error::UnsupportedStructure(
                "group rates must be strictly decreasing; coinciding rates belong in one group"
                    .into(),
            ));
        }
        let kappa: usize = groups.iter().map(SpikeGroupSpec::size).sum();
        if kappa >= n {
            return Err(Error::UnsupportedStructure(format!(
                "{kappa} spikes need n > {kappa}, got n = {n}"
            )));
        }
        Ok(Self {
            groups,
            tail,
            n,
            z_assumption,
        })
    }

    /// Spike structure implied by a model family at sample size `n`.
    ///
    /// Spikes growing slower than `d` are placed in the tail and the
    /// ε_{κ+1}-condition is re-established for the enlarged tail.
    pub fn from_model(model: &CovarianceModel, n: usize, z_assumption: ZAssumption) -> Result<Self> {
        let nf = n as f64;
        let (candidates, limit_constant): (Vec<SpikeGroupSpec>, f64) = match model.family() {
            Family::Identity => (vec![], 1.0 / nf),
            Family::SingleSpike(p) => (vec![SpikeGroupSpec::new(p.alpha, vec![p.c1])], p.base / nf),
            Family::MultiSpikeGroups(p) => (
                p.groups
                    .iter()
                    .map(|g| SpikeGroupSpec::new(g.alpha, g.scales.clone()))
                    .collect(),
                p.base / nf,
            ),
            Family::PolynomialDecay(p) => (vec![], if p.beta == 0.0 { 1.0 / nf } else { 0.0 }),
            Family::ExponentialDecay(_) => (vec![], 0.0),
            Family::Equicorrelation(p) => {
                let alpha = equi_rate(p.rho.gamma);
                (
                    vec![SpikeGroupSpec::new(alpha, vec![p.rho.r * p.rho.r])],
                    (1.0 - p.rho.limit()).powi(2) / nf,
                )
            }
            Family::BlockEquicorrelation(p) => {
                // rules run on the block size d/2, so c = r² 2^{-α} against the ambient d
                let a1 = equi_rate(p.rho1.gamma);
                let a2 = equi_rate(p.rho2.gamma);
                let c1 = p.rho1.r * p.rho1.r * 2f64.powf(-a1);
                let c2 = p.rho2.r * p.rho2.r * 2f64.powf(-a2);
                let groups = if a1 == a2 {
                    vec![SpikeGroupSpec::new(a1, vec![c1, c2])]
                } else {
                    vec![SpikeGroupSpec::new(a1, vec![c1]), SpikeGroupSpec::new(a2, vec![c2])]
                };
                let k = ((1.0 - p.rho1.limit()).powi(2) + (1.0 - p.rho2.limit()).powi(2)) / (2.0 * nf);
                (groups, k)
            }
            Family::GrowingSpikes(_) => {
                return Err(Error::UnsupportedStructure(
                    "the number of spikes grows with d; no finite spike structure".into(),
                ))
            }
            Family::ExplicitDiagonal(_) => {
                return Err(Error::UnsupportedStructure(
                    "an explicit diagonal fixes d and has no asymptotic spike structure".into(),
                ))
            }
        };
        if let Some(g) = candidates.iter().find(|g| g.alpha == 1.0) {
            return Err(boundary_error(g.alpha));
        }
        let groups: Vec<SpikeGroupSpec> = candidates.into_iter().filter(|g| g.alpha > 1.0).collect();
        let kappa: usize = groups.iter().map(SpikeGroupSpec::size).sum();
        let condition = analytic_condition(model, kappa + 1).ok_or_else(|| {
            Error::UnsupportedStructure("no closed-form tail condition".into())
        })?;
        let tail = TailSpec {
            condition,
            trace_linear: true,
            limit_constant,
        };
        Self::new(groups, tail, n, z_assumption)
    }

    pub fn groups(&self) -> &[SpikeGroupSpec] {
        &self.groups
    }

    pub fn tail(&self) -> &TailSpec {
        &self.tail
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn z_assumption(&self) -> ZAssumption {
        self.z_assumption
    }

    pub fn kappa(&self) -> usize {
        self.groups.iter().map(SpikeGroupSpec::size).sum()
    }

    /// Index set `J_l` (1-based) of every group, in order.
    pub fn index_sets(&self) -> Vec<Vec<usize>> {
        let mut start = 1;
        self.groups
            .iter()
            .map(|g| {
                let set: Vec<usize> = (start..start + g.size()).collect();
                start += g.size();
                set
            })
            .collect()
    }

    /// `(l, i*)`, both 1-based, for a spike index `i`.
    pub fn locate(&self, i: usize) -> Option<(usize, usize)> {
        let mut start = 1;
        for (l, g) in self.groups.iter().enumerate() {
            if i >= start && i < start + g.size() {
                return Some((l + 1, i - start + 1));
            }
            start += g.size();
        }
        None
    }

    pub(crate) fn check_classifiable(&self) -> Result<()> {
        for g in &self.groups {
            if g.alpha == 1.0 {
                return Err(boundary_error(g.alpha));
            }
            if g.alpha < 1.0 {
                return Err(Error::UnsupportedStructure(format!(
                    "spike rate alpha = {} <= 1: move these eigenvalues into the tail and \
                     re-check the tail epsilon-condition",
                    g.alpha
                )));
            }
        }
        if self.tail.condition.epsilon_condition != Condition::Holds {
            return Err(Error::UnsupportedStructure(format!(
                "the tail epsilon_{}-condition does not hold",
                self.kappa() + 1
            )));
        }
        if !self.tail.trace_linear {
            return Err(Error::UnsupportedStructure("tail trace is not O(d)".into()));
        }
        Ok(())
    }
}

fn boundary_error(alpha: f64) -> Error {
    Error::BoundaryUnsupported(format!(
        "spike rate alpha = {alpha} sits on the consistency boundary alpha = 1, \
         where no verdict is available"
    ))
}
