use thiserror::Error;

use crate::dyadic::Dyadic;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("horizon must be a positive number of unit intervals")]
    EmptyHorizon,

    #[error("grid at level {level} over horizon {horizon} is too large to store")]
    GridTooLarge { horizon: u64, level: u32 },

    #[error("noise source seed {source_seed} does not match path seed {path_seed}")]
    SeedMismatch { path_seed: u64, source_seed: u64 },

    #[error("target level {target} is below the current level {current}")]
    TargetBelowLevel { current: u32, target: u32 },

    #[error("time {t} lies outside [0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: u64 },

    #[error("{point} is not on the level-{level} grid of horizon {horizon}")]
    OffGrid {
        point: Dyadic,
        level: u32,
        horizon: u64,
    },

    #[error("points are not ordered as required: {0}")]
    Ordering(String),

    #[error("modulus at level {n} needs horizon >= {required}, got {horizon}")]
    InsufficientHorizon { n: u32, required: u64, horizon: u64 },

    #[error("modulus at level {n} needs a path of level >= {n}, got {level}")]
    InsufficientLevel { n: u32, level: u32 },

    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error("{0}")]
    InvalidArgument(String),

    #[error("enumeration of {support}^{steps} outcomes exceeds the limit of {limit}")]
    EnumerationTooLarge {
        support: usize,
        steps: u32,
        limit: u64,
    },

    #[error("invalid step distribution: {0}")]
    InvalidDistribution(String),

    #[error("at least {min} {what} required, got {got}")]
    TooFew {
        what: &'static str,
        min: u64,
        got: u64,
    },

    #[error("seed range {base}..{base}+{count} overflows u64")]
    SeedOverflow { base: u64, count: u64 },

    #[error("cannot parse dyadic from {0:?}")]
    ParseDyadic(String),

    #[error("cannot merge ensembles with different configurations")]
    IncompatibleMerge,

    #[error("ensemble has no retained samples for {0}")]
    NotRetained(Dyadic),

    #[error("defaults file: {0}")]
    Defaults(String),
}

pub type Result<T> = std::result::Result<T, Error>;
