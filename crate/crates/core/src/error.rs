use crate::prelude::*;

/// Everything that can go wrong in the core crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid model specification: {0}")]
    InvalidSpec(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("energy {energy} is outside edge {edge} (range {floor} .. {ceiling})")]
    EnergyDomain {
        edge: usize,
        energy: f64,
        floor: f64,
        ceiling: f64,
    },

    #[error("energy {energy} lies within {eta:e} of the vertex energy {vertex}")]
    NearVertex { energy: f64, vertex: f64, eta: f64 },

    #[error("time {t} lies beyond the edge exit time {exit}")]
    BeyondExit { t: f64, exit: f64 },

    #[error("collision budget of {0} events exhausted before the stop rule fired")]
    CollisionBudget(u64),

    #[error("wall event detection failed: {0}")]
    EventDetection(String),

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("quadrature did not reach tolerance (estimate {value}, error {error:e})")]
    Quadrature { value: f64, error: f64 },

    #[error("root isolation failed: {0}")]
    RootFinding(String),

    #[error("section point is tangential (theta = {0})")]
    Tangential(f64),

    #[error("strip structure not resolved: {0}")]
    StripResolution(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParam {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn spec(reason: impl Into<String>) -> Error {
    Error::InvalidSpec(reason.into())
}
