//! Asymptotic predictions for spiked models: per-direction verdicts,
//! convergence modes, growing-`n` refinements and limiting eigenvalue laws.

mod limits;
mod structure;
mod weyl;

use serde::{Deserialize, Serialize};

pub use limits::{predict_eigenvalue_limits, reference_sample, sample_limit, EigenvalueLimit, LimitLaw};
pub use structure::{SpikeGroupSpec, SpikeStructure, TailSpec, ZAssumption};
pub use weyl::{weyl_check, WeylReport};

use crate::error::{Error, Result};
use crate::spectra::{equi_rate, Basis, Condition, PowerLaw};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    SubspaceConsistent,
    StronglyInconsistent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceMode {
    InProbability,
    AlmostSure,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectionVerdict {
    pub i: usize,
    pub verdict: Verdict,
    /// Index set `J_l` for spike directions.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub group: Option<Vec<usize>>,
    /// Verdict once `n → ∞` after `d → ∞`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub growing_n: Option<Verdict>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegimeVerdict {
    pub directions: Vec<DirectionVerdict>,
    pub mode: ConvergenceMode,
}

impl RegimeVerdict {
    /// Verdict for sample direction `i` (1-based).
    pub fn get(&self, i: usize) -> Option<&DirectionVerdict> {
        self.directions.get(i.checked_sub(1)?)
    }
}

/// Per-direction verdicts for all `n` sample directions.
pub fn classify(structure: &SpikeStructure) -> Result<RegimeVerdict> {
    structure.check_classifiable()?;
    let sets = structure.index_sets();
    let mut directions = Vec::with_capacity(structure.n());
    for (group, set) in structure.groups().iter().zip(&sets) {
        let distinct = group.scales.windows(2).all(|w| w[0] > w[1]);
        let verdict = if set.len() == 1 {
            Verdict::Consistent
        } else {
            Verdict::SubspaceConsistent
        };
        for &i in set {
            directions.push(DirectionVerdict {
                i,
                verdict,
                group: Some(set.clone()),
                growing_n: distinct.then_some(Verdict::Consistent),
            });
        }
    }
    for i in structure.kappa() + 1..=structure.n() {
        directions.push(DirectionVerdict {
            i,
            verdict: Verdict::StronglyInconsistent,
            group: None,
            growing_n: None,
        });
    }
    let tail = &structure.tail().condition;
    let mode = if structure.z_assumption() == ZAssumption::IndependentBounded8th
        && tail.strong_epsilon_condition == Condition::Holds
        && tail.basis == Basis::Analytic
    {
        ConvergenceMode::AlmostSure
    } else {
        ConvergenceMode::InProbability
    };
    Ok(RegimeVerdict { directions, mode })
}

/// The four regimes of the two-block equicorrelation model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockRegime {
    /// `û₁`, `û₂` both consistent.
    BothConsistent,
    /// `û₁`, `û₂` subspace-consistent with `span{u₁, u₂}`.
    BothSubspaceConsistent,
    /// `û₁` consistent, `û₂` strongly inconsistent.
    FirstConsistentOnly,
    /// `û₁`, `û₂` both strongly inconsistent.
    BothStronglyInconsistent,
}

impl BlockRegime {
    pub fn number(self) -> u8 {
        match self {
            BlockRegime::BothConsistent => 1,
            BlockRegime::BothSubspaceConsistent => 2,
            BlockRegime::FirstConsistentOnly => 3,
            BlockRegime::BothStronglyInconsistent => 4,
        }
    }

    /// Reads the case off the first two directions of a verdict.
    pub fn from_verdict(v: &RegimeVerdict) -> Option<Self> {
        use Verdict::*;
        match (v.get(1)?.verdict, v.get(2)?.verdict) {
            (Consistent, Consistent) => Some(BlockRegime::BothConsistent),
            (SubspaceConsistent, SubspaceConsistent) => Some(BlockRegime::BothSubspaceConsistent),
            (Consistent, StronglyInconsistent) => Some(BlockRegime::FirstConsistentOnly),
            (StronglyInconsistent, StronglyInconsistent) => {
                Some(BlockRegime::BothStronglyInconsistent)
            }
            _ => None,
        }
    }
}

/// Regime of the block model from the decay exponents of `ρ1`, `ρ2`
/// against the `d^{-1/2}` threshold.
pub fn block_regime(rho1: &PowerLaw, rho2: &PowerLaw) -> Result<BlockRegime> {
    rho1.validate("rho1")?;
    rho2.validate("rho2")?;
    if rho1.gamma > rho2.gamma || (rho1.gamma == rho2.gamma && rho1.r < rho2.r) {
        return Err(Error::InvalidModel("need rho2_d <= rho1_d for large d".into()));
    }
    if rho1.gamma == 0.5 || rho2.gamma == 0.5 {
        return Err(Error::BoundaryUnsupported(
            "a correlation decaying exactly like d^(-1/2) sits on the consistency boundary".into(),
        ));
    }
    let (a1, a2) = (equi_rate(rho1.gamma), equi_rate(rho2.gamma));
    Ok(match (a1 > 1.0, a2 > 1.0) {
        (true, true) if a1 == a2 => BlockRegime::BothSubspaceConsistent,
        (true, true) => BlockRegime::BothConsistent,
        (true, false) => BlockRegime::FirstConsistentOnly,
        _ => BlockRegime::BothStronglyInconsistent,
    })
}
