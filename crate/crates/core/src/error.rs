use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("cannot normalize the zero vector")]
    ZeroVector,

    #[error("no amplitude exceeds the support tolerance")]
    EmptySupport,

    #[error("dimension must be at least 2, got {0}")]
    InvalidDimension(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state is not normalized (squared norm {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },

    #[error("invalid probability distribution: {reason}")]
    InvalidDistribution { reason: &'static str },

    #[error("operator is not Hermitian positive semidefinite")]
    NotPositive,

    #[error("POVM elements do not sum to the identity (max deviation {deviation})")]
    IncompletePovm { deviation: f64 },

    #[error("POVM outcome has zero probability")]
    ImpossibleOutcome,

    #[error("phase chain broken: partial sum S_{index} vanishes before site {site}")]
    ChainBroken { index: usize, site: usize },

    #[error("distributions are inconsistent with any pure state (cosine {cosine})")]
    InconsistentDistributions { cosine: f64 },

    #[error("support {{{}, {}}} is a failing set in dimension {dim}", .sites.0, .sites.1)]
    FailingSet { sites: (usize, usize), dim: usize },

    #[error("ordering is not valid for this construction")]
    InvalidOrdering,

    #[error("two-projection system is singular (sin = {sine})")]
    SingularSystem { sine: f64 },

    #[error("Fourier probabilities are inconsistent (|(cos, sin)| = {norm})")]
    InconsistentProbabilities { norm: f64 },

    #[error("dimension {dim} exceeds the enumeration cap of {cap}")]
    DimensionTooLarge { dim: usize, cap: usize },

    #[error("grid needs at least 8 steps per phase, got {steps}")]
    InvalidGrid { steps: usize },

    #[error("search space of {points} grid points exceeds the cap")]
    SearchSpaceTooLarge { points: u128 },
}

impl Error {
    /// Stable machine-readable name of the error variant.
    pub fn name(&self) -> &'static str {
        match self {
            Error::ZeroVector => "ZeroVector",
            Error::EmptySupport => "EmptySupport",
            Error::InvalidDimension(_) => "InvalidDimension",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NotNormalized { .. } => "NotNormalized",
            Error::InvalidDistribution { .. } => "InvalidDistribution",
            Error::NotPositive => "NotPositive",
            Error::IncompletePovm { .. } => "IncompletePovm",
            Error::ImpossibleOutcome => "ImpossibleOutcome",
            Error::ChainBroken { .. } => "ChainBroken",
            Error::InconsistentDistributions { .. } => "InconsistentDistributions",
            Error::FailingSet { .. } => "FailingSetError",
            Error::InvalidOrdering => "InvalidOrdering",
            Error::SingularSystem { .. } => "SingularSystem",
            Error::InconsistentProbabilities { .. } => "InconsistentProbabilities",
            Error::DimensionTooLarge { .. } => "DimensionTooLarge",
            Error::InvalidGrid { .. } => "InvalidGrid",
            Error::SearchSpaceTooLarge { .. } => "SearchSpaceTooLarge",
        }
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
