use thiserror::Error;

use crate::bounds::Region;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid composite: {0}")]
    InvalidSpec(String),

    #[error("invalid loading: r = {0} is outside [0, 1]")]
    InvalidLoading(f64),

    #[error("curve {curve} does not exist for this composite: {detail}")]
    Domain { curve: &'static str, detail: String },

    #[error("t = {t} is outside the {regime} interval")]
    RegimeMismatch { regime: &'static str, t: f64 },

    #[error("regions {first} and {second} both satisfy their validity conditions at r = {r}")]
    AmbiguousRegion {
        first: Region,
        second: Region,
        r: f64,
    },

    #[error("{region} construction is not applicable: {inequality}")]
    OutOfApplicability { region: Region, inequality: String },

    #[error("loading excites an infinite eigenvalue of the laminate along x{axis}")]
    IncompatibleLoading { axis: usize },

    #[error("superconducting phase carries a nonzero field")]
    InfiniteEnergy,

    #[error("topology cannot meet the volume fractions: {0}")]
    InfeasibleTopology(String),

    #[error("region E is empty for this composite")]
    EmptyRegion,

    #[error("cannot parse laminate: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
