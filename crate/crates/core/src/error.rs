use thiserror::Error;

/// Errors produced by the simulators, the protocol driver and the estimator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("model construction failed: {0}")]
    ModelConstruction(String),

    /// Denominator of the molecular tracking field fell below its floor.
    #[error("tracking singularity: dipole-gradient expectation {value:e} below floor {floor:e}")]
    Singularity { value: f64, floor: f64 },

    /// |X| > 1 in the lattice tracking relation; no real phase reproduces the target.
    #[error("untrackable target: |X| = {0} exceeds 1")]
    Untrackable(f64),

    /// Nearest-neighbour expectation too small for its phase to be defined.
    #[error("degenerate state: neighbour magnitude {0:e} below floor")]
    DegenerateState(f64),

    #[error("rank-deficient system: all singular values below cutoff {0:e}")]
    RankDeficient(f64),

    #[error("numeric failure: {0}")]
    Numeric(String),

    /// A tracking or propagation failure inside the protocol loop.
    #[error("species `{species}` at step {step}: {source}")]
    Step {
        species: String,
        step: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn at_step(self, species: &str, step: usize) -> Self {
        Error::Step {
            species: species.to_owned(),
            step,
            source: Box::new(self),
        }
    }

    /// The innermost error, looking through step context.
    pub fn root(&self) -> &Error {
        match self {
            Error::Step { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
