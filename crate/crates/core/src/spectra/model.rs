//! Covariance-model families and their JSON/TOML document form.
//!
//! A model document looks like
//!
//! ```json
//! {"family": "single_spike", "params": {"alpha": 1.5, "c1": 1.0, "base": 1.0}, "mixing": "independent_components"}
//! ```
//!
//! Family names and parameter keys:
//!
//! | family                  | params                                              |
//! |-------------------------|-----------------------------------------------------|
//! | `identity`              | none                                                |
//! | `single_spike`          | `alpha`, `c1`, `base`                               |
//! | `multi_spike_groups`    | `groups = [{alpha, scales = [..]}]`, `base`         |
//! | `polynomial_decay`      | `beta`                                              |
//! | `exponential_decay`     | `c`                                                 |
//! | `growing_spikes`        | `alpha`, `beta`, `c1`, `c2`                         |
//! | `equicorrelation`       | `rho = {r, gamma}`                                  |
//! | `block_equicorrelation` | `rho1 = {r, gamma}`, `rho2 = {r, gamma}`            |
//! | `explicit_diagonal`     | `values = [..]`                                     |
//!
//! `mixing` is one of `independent_components` (default),
//! `rho_mixing_under_permutation`, `not_rho_mixing`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Correlation rule `rho_d = r * d^(-gamma)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerLaw {
    pub r: f64,
    pub gamma: f64,
}

impl PowerLaw {
    pub fn new(r: f64, gamma: f64) -> Self {
        Self { r, gamma }
    }

    pub fn constant(r: f64) -> Self {
        Self { r, gamma: 0.0 }
    }

    pub fn at(&self, d: usize) -> f64 {
        self.r * (d as f64).powf(-self.gamma)
    }

    /// `lim rho_d` as `d → ∞`.
    pub fn limit(&self) -> f64 {
        if self.gamma == 0.0 {
            self.r
        } else {
            0.0
        }
    }

    pub(crate) fn validate(&self, name: &str) -> Result<()> {
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::InvalidModel(format!("{name}.r must be positive")));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "{name}.gamma must be nonnegative"
            )));
        }
        if self.gamma == 0.0 && self.r >= 1.0 {
            return Err(Error::InvalidModel(format!(
                "{name}: constant correlation must lie in (0, 1)"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingleSpike {
    pub alpha: f64,
    pub c1: f64,
    pub base: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpikeGroup {
    pub alpha: f64,
    pub scales: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiSpikeGroups {
    pub groups: Vec<SpikeGroup>,
    pub base: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialDecay {
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentialDecay {
    pub c: f64,
}

/// `m = floor(d^beta)` spikes of size `c1 * d^alpha` over a flat tail `c2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowingSpikes {
    pub alpha: f64,
    pub beta: f64,
    pub c1: f64,
    pub c2: f64,
}

/// `Σ = F F'` with `F = (1 - rho_d) I + rho_d J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Equicorrelation {
    pub rho: PowerLaw,
}

/// Two equicorrelated blocks of size `d / 2` on the diagonal; `d` is the
/// ambient dimension and the rules are evaluated at the block size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockEquicorrelation {
    pub rho1: PowerLaw,
    pub rho2: PowerLaw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitDiagonal {
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum Family {
    Identity,
    SingleSpike(SingleSpike),
    MultiSpikeGroups(MultiSpikeGroups),
    PolynomialDecay(PolynomialDecay),
    ExponentialDecay(ExponentialDecay),
    GrowingSpikes(GrowingSpikes),
    Equicorrelation(Equicorrelation),
    BlockEquicorrelation(BlockEquicorrelation),
    ExplicitDiagonal(ExplicitDiagonal),
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Identity => "identity",
            Family::SingleSpike(_) => "single_spike",
            Family::MultiSpikeGroups(_) => "multi_spike_groups",
            Family::PolynomialDecay(_) => "polynomial_decay",
            Family::ExponentialDecay(_) => "exponential_decay",
            Family::GrowingSpikes(_) => "growing_spikes",
            Family::Equicorrelation(_) => "equicorrelation",
            Family::BlockEquicorrelation(_) => "block_equicorrelation",
            Family::ExplicitDiagonal(_) => "explicit_diagonal",
        }
    }
}

/// Dependence structure of the sphered components. Metadata only: it is never
/// estimated from data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixingAttribute {
    #[default]
    IndependentComponents,
    RhoMixingUnderPermutation,
    NotRhoMixing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelDoc", into = "ModelDoc")]
pub struct CovarianceModel {
    family: Family,
    mixing: MixingAttribute,
}

fn positive(value: f64, what: &str) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidModel(format!("{what} must be positive")))
    }
}

fn nonnegative(value: f64, what: &str) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidModel(format!("{what} must be nonnegative")))
    }
}

impl CovarianceModel {
    pub fn new(family: Family, mixing: MixingAttribute) -> Result<Self> {
        match &family {
            Family::Identity => {}
            Family::SingleSpike(p) => {
                positive(p.alpha, "alpha")?;
                positive(p.c1, "c1")?;
                // base = 0 gives the singular case
                nonnegative(p.base, "base")?;
            }
            Family::MultiSpikeGroups(p) => {
                nonnegative(p.base, "base")?;
                if p.groups.is_empty() {
                    return Err(Error::InvalidModel("at least one spike group required".into()));
                }
                for (l, g) in p.groups.iter().enumerate() {
                    positive(g.alpha, &format!("groups[{l}].alpha"))?;
                    if g.scales.is_empty() {
                        return Err(Error::InvalidModel(format!("groups[{l}].scales is empty")));
                    }
                    for c in &g.scales {
                        positive(*c, &format!("groups[{l}].scales"))?;
                    }
                    if g.scales.windows(2).any(|w| w[1] > w[0]) {
                        return Err(Error::InvalidModel(format!(
                            "groups[{l}].scales must be nonincreasing"
                        )));
                    }
                }
                if p.groups.windows(2).any(|w| w[1].alpha >= w[0].alpha) {
                    return Err(Error::InvalidModel(
                        "group rates alpha must be strictly decreasing".into(),
                    ));
                }
            }
            Family::PolynomialDecay(p) => nonnegative(p.beta, "beta")?,
            Family::ExponentialDecay(p) => {
                if !(p.c > 1.0 && p.c.is_finite()) {
                    return Err(Error::InvalidModel("c must exceed 1".into()));
                }
            }
            Family::GrowingSpikes(p) => {
                nonnegative(p.alpha, "alpha")?;
                if !(p.beta > 0.0 && p.beta < 1.0) {
                    return Err(Error::InvalidModel("beta must lie in (0, 1)".into()));
                }
                positive(p.c1, "c1")?;
                positive(p.c2, "c2")?;
            }
            Family::Equicorrelation(p) => p.rho.validate("rho")?,
            Family::BlockEquicorrelation(p) => {
                p.rho1.validate("rho1")?;
                p.rho2.validate("rho2")?;
                // rho1 >= rho2 for all large d
                if p.rho1.gamma > p.rho2.gamma
                    || (p.rho1.gamma == p.rho2.gamma && p.rho1.r < p.rho2.r)
                {
                    return Err(Error::InvalidModel(
                        "rho1 must dominate rho2 (gamma1 <= gamma2, and r1 >= r2 when equal)"
                            .into(),
                    ));
                }
            }
            Family::ExplicitDiagonal(p) => {
                if p.values.len() < 2 {
                    return Err(Error::InvalidModel("need at least two eigenvalues".into()));
                }
                for v in &p.values {
                    nonnegative(*v, "values")?;
                }
                if p.values.iter().all(|v| *v == 0.0) {
                    return Err(Error::InvalidModel("all eigenvalues are zero".into()));
                }
            }
        }
        Ok(Self { family, mixing })
    }

    pub fn with_default_mixing(family: Family) -> Result<Self> {
        Self::new(family, MixingAttribute::default())
    }

    pub fn identity() -> Self {
        Self {
            family: Family::Identity,
            mixing: MixingAttribute::IndependentComponents,
        }
    }

    pub fn single_spike(alpha: f64, c1: f64, base: f64) -> Result<Self> {
        Self::with_default_mixing(Family::SingleSpike(SingleSpike { alpha, c1, base }))
    }

    pub fn multi_spike(groups: Vec<(f64, Vec<f64>)>, base: f64) -> Result<Self> {
        let groups = groups
            .into_iter()
            .map(|(alpha, scales)| SpikeGroup { alpha, scales })
            .collect();
        Self::with_default_mixing(Family::MultiSpikeGroups(MultiSpikeGroups { groups, base }))
    }

    pub fn polynomial_decay(beta: f64) -> Result<Self> {
        Self::with_default_mixing(Family::PolynomialDecay(PolynomialDecay { beta }))
    }

    pub fn exponential_decay(c: f64) -> Result<Self> {
        Self::with_default_mixing(Family::ExponentialDecay(ExponentialDecay { c }))
    }

    pub fn growing_spikes(alpha: f64, beta: f64, c1: f64, c2: f64) -> Result<Self> {
        Self::with_default_mixing(Family::GrowingSpikes(GrowingSpikes { alpha, beta, c1, c2 }))
    }

    pub fn equicorrelation(rho: PowerLaw) -> Result<Self> {
        Self::with_default_mixing(Family::Equicorrelation(Equicorrelation { rho }))
    }

    pub fn block_equicorrelation(rho1: PowerLaw, rho2: PowerLaw) -> Result<Self> {
        Self::with_default_mixing(Family::BlockEquicorrelation(BlockEquicorrelation {
            rho1,
            rho2,
        }))
    }

    pub fn explicit_diagonal(values: Vec<f64>) -> Result<Self> {
        Self::with_default_mixing(Family::ExplicitDiagonal(ExplicitDiagonal { values }))
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn mixing(&self) -> MixingAttribute {
        self.mixing
    }

    /// Whether the population eigenvectors are coordinate axes in the ambient space.
    pub fn is_diagonal(&self) -> bool {
        !matches!(
            self.family,
            Family::Equicorrelation(_) | Family::BlockEquicorrelation(_)
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    params: Option<serde_json::Value>,
    #[serde(default)]
    mixing: Option<MixingAttribute>,
}

impl TryFrom<ModelDoc> for CovarianceModel {
    type Error = String;

    fn try_from(doc: ModelDoc) -> Result<Self, String> {
        let mut tagged = serde_json::Map::new();
        tagged.insert("family".into(), serde_json::Value::String(doc.family));
        match doc.params {
            Some(serde_json::Value::Object(m)) if m.is_empty() => {}
            Some(p) => {
                tagged.insert("params".into(), p);
            }
            None => {}
        }
        let family: Family =
            serde_json::from_value(serde_json::Value::Object(tagged)).map_err(|e| e.to_string())?;
        CovarianceModel::new(family, doc.mixing.unwrap_or_default()).map_err(|e| e.to_string())
    }
}

impl From<CovarianceModel> for ModelDoc {
    fn from(model: CovarianceModel) -> Self {
        let value = serde_json::to_value(&model.family).expect("family serializes");
        let family = value["family"]
            .as_str()
            .expect("family tag is a string")
            .to_owned();
        ModelDoc {
            family,
            params: value.get("params").cloned(),
            mixing: Some(model.mixing),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_document_shape() {
        let m = CovarianceModel::single_spike(1.5, 1.0, 1.0).unwrap();
        let v = serde_json::to_value(&m).unwrap();
        assert_eq!(v["family"], "single_spike");
        assert_eq!(v["params"]["alpha"], 1.5);
        assert_eq!(v["mixing"], "independent_components");

        let id: CovarianceModel = serde_json::from_str(r#"{"family":"identity"}"#).unwrap();
        assert_eq!(id, CovarianceModel::identity());
        let id: CovarianceModel =
            serde_json::from_str(r#"{"family":"identity","params":{}}"#).unwrap();
        assert_eq!(id, CovarianceModel::identity());
    }

    #[test]
    fn rejects_unknown_keys_and_bad_params() {
        let bad = r#"{"family":"single_spike","params":{"alpha":1.5,"c1":1,"base":1,"extra":2}}"#;
        assert!(serde_json::from_str::<CovarianceModel>(bad).is_err());
        let bad = r#"{"family":"identity","colour":"red"}"#;
        assert!(serde_json::from_str::<CovarianceModel>(bad).is_err());
        let bad = r#"{"family":"exponential_decay","params":{"c":0.5}}"#;
        assert!(serde_json::from_str::<CovarianceModel>(bad).is_err());
    }

    #[test]
    fn multi_spike_requires_strict_rate_order() {
        assert!(CovarianceModel::multi_spike(vec![(2.0, vec![1.0]), (2.0, vec![1.0])], 1.0).is_err());
        assert!(CovarianceModel::multi_spike(vec![(3.0, vec![1.0]), (2.0, vec![1.0])], 1.0).is_ok());
        assert!(CovarianceModel::multi_spike(vec![(1.5, vec![1.0, 2.0])], 1.0).is_err());
    }

    #[test]
    fn block_rules_must_be_ordered() {
        let err = CovarianceModel::block_equicorrelation(
            PowerLaw::new(1.0, 0.75),
            PowerLaw::constant(0.3),
        );
        assert!(err.is_err());
    }
}
