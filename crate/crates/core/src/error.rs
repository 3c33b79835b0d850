use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite angle: {0}")]
    NonFiniteAngle(f64),

    #[error("the two agents occupy the same position")]
    ZeroSeparation,

    #[error("agents {i} and {j} occupy the same position")]
    CoincidentAgents { i: usize, j: usize },

    #[error("distance must be positive, got {0}")]
    NonPositiveDistance(f64),

    #[error("agent length must be positive, got {0}")]
    NonPositiveLength(f64),

    #[error("speed {v} is below the floor {floor}")]
    SpeedBelowFloor { v: f64, floor: f64 },

    #[error("collision at step {step} (t = {t}): agents {i} and {j} coincide")]
    Collision {
        step: usize,
        t: f64,
        i: usize,
        j: usize,
    },

    #[error("agent index {index} out of range for a swarm of {len}")]
    AgentIndex { index: usize, len: usize },

    #[error("unknown sweep axis `{0}`")]
    UnknownAxis(String),

    #[error("invalid value for `{field}`: {constraint}")]
    Invalid {
        field: &'static str,
        constraint: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure(ok: bool, field: &'static str, constraint: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Invalid {
            field,
            constraint: constraint.to_string(),
        })
    }
}
