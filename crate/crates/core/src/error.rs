use thiserror::Error;

use crate::lattice::Site;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("insufficient entanglement: {available} pairs cannot host a distance-{min_distance} code")]
    InsufficientEntanglement { available: usize, min_distance: usize },
    #[error("surface-code cell of distance {distance} at {origin} does not fit a {grid_size}x{grid_size} grid")]
    CellOutOfBounds {
        distance: usize,
        origin: Site,
        grid_size: usize,
    },
    #[error("entanglement pattern is empty")]
    EmptyPattern,
    #[error("need {required} entangled qubits but only {available} are available")]
    InsufficientQubits { required: usize, available: usize },
    #[error("routing blocked: rearrangement did not converge within {limit} re-routes")]
    RoutingBlocked { limit: usize },
    #[error("correction syndrome does not match the error syndrome")]
    SyndromeMismatch,
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("unattainable target: {0}")]
    Unattainable(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("{value} is not a probability in [0, 1]"),
        })
    }
}
