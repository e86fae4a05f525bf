//! Covariance-model families, their population spectra, sphericity measures
//! and the ε-condition classifier.

mod condition;
mod eigvec;
mod model;
mod spectrum;

pub use condition::{
    analytic_condition, condition_check, numeric_condition_check, Basis, Condition,
    ConditionVerdict, BOUNDED_FACTOR, GROWTH_FACTOR,
};
pub(crate) use condition::equi_rate;
pub use eigvec::{population_eigenvector, population_eigvec_inner, to_ambient};
pub use model::{
    BlockEquicorrelation, CovarianceModel, Equicorrelation, ExplicitDiagonal, ExponentialDecay,
    Family, GrowingSpikes, MixingAttribute, MultiSpikeGroups, PolynomialDecay, PowerLaw,
    SingleSpike, SpikeGroup,
};
pub use spectrum::{eigenvalues, sphericity, EigenSpectrum, SphericityReport};
