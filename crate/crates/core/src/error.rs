use thiserror::Error;

use crate::geom::Vec2;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("tangent infeasible: point lies inside or on the circle (distance {distance}, radius {radius})")]
    TangentInfeasible { distance: f64, radius: f64 },

    #[error("{which} point ({x}, {y}) lies inside the safety zone of obstacle {obstacle}", x = point.x, y = point.y)]
    EndpointInZone { which: &'static str, point: Vec2, obstacle: u32 },

    #[error("planning failed: {reason} (nodes so far: {nodes:?})")]
    PlanFailed { reason: String, nodes: Vec<Vec2> },

    #[error("arena generation failed: {0}")]
    GenerationFailed(String),

    #[error("invalid command: {0}")]
    InvalidCommand(String),

    #[error("model format error: {0}")]
    ModelFormat(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("training aborted at step {step}: {reason}")]
    TrainingAborted { step: u64, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn ensure_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be finite, got {v}")))
    }
}
