use thiserror::Error;

use crate::kind::Space;

/// Errors raised by the game solvers.
///
/// Numeric payloads are widened to `f64` so the error type does not depend on
/// the scalar the game is solved over.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GameError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate state: player separation {separation:e} is below the capture threshold")]
    DegenerateState { separation: f64 },

    #[error("state is in the {actual} space but the operation requires the {required} space (barrier value {barrier_value:e})")]
    WrongSubspace {
        required: Space,
        actual: Space,
        barrier_value: f64,
    },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("no sign change of the barrier function on ray {ray} (angle {angle:.6} rad) within radius {search_radius}")]
    BracketingFailure {
        ray: usize,
        angle: f64,
        search_radius: f64,
    },

    #[error("escape problem is infeasible: the evader dominant region misses the target (barrier value {barrier_value:e})")]
    Infeasible { barrier_value: f64 },

    #[error("optimal escape point coincides with the evader; heading angle is indeterminate")]
    DegeneratePoint,

    #[error("solver failure at t = {time}: {source}")]
    SolverFailure {
        time: f64,
        step: usize,
        #[source]
        source: Box<GameError>,
    },
}

pub type Result<T, E = GameError> = std::result::Result<T, E>;
