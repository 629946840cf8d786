use std::fmt;

use tdg_core::GameError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Code {
    Io = 1,
    Schema = 2,
    Degenerate = 3,
    Tracing = 4,
    Solver = 5,
    Verification = 6,
}

/// An error that knows which exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: Code,
    pub message: String,
}

impl Failure {
    pub fn new(code: Code, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }

    pub fn schema(message: impl Into<String>) -> Self {
        Self::new(Code::Schema, message)
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self::new(Code::Io, message)
    }

    pub fn context(self, what: impl fmt::Display) -> Self {
        Failure {
            code: self.code,
            message: format!("{what}: {}", self.message),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

pub fn game_error_code(e: &GameError) -> Code {
    match e {
        GameError::InvalidInput(_) => Code::Schema,
        GameError::DegenerateState { .. } | GameError::DegeneratePoint => Code::Degenerate,
        GameError::BracketingFailure { .. } => Code::Tracing,
        GameError::SolverFailure { source, .. } => game_error_code(source).max_solver(),
        GameError::NonConvergence { .. }
        | GameError::WrongSubspace { .. }
        | GameError::Infeasible { .. } => Code::Solver,
    }
}

impl Code {
    // Anything that goes wrong inside a simulation step is a solver failure
    // unless the state itself degenerated.
    fn max_solver(self) -> Code {
        match self {
            Code::Degenerate => Code::Degenerate,
            _ => Code::Solver,
        }
    }
}

impl From<GameError> for Failure {
    fn from(e: GameError) -> Self {
        Failure::new(game_error_code(&e), e.to_string())
    }
}

/// Exit code for an error chain: the first [`Failure`] or [`GameError`] found
/// decides, anything else is an I/O style failure.
pub fn code_of(err: &anyhow::Error) -> Code {
    for cause in err.chain() {
        if let Some(f) = cause.downcast_ref::<Failure>() {
            return f.code;
        }
        if let Some(g) = cause.downcast_ref::<GameError>() {
            return game_error_code(g);
        }
    }
    Code::Io
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn game_errors_map_to_exit_codes() {
        let cases = [
            (GameError::InvalidInput("x".into()), Code::Schema),
            (
                GameError::DegenerateState { separation: 0.0 },
                Code::Degenerate,
            ),
            (
                GameError::BracketingFailure {
                    ray: 3,
                    angle: 0.1,
                    search_radius: 9.0,
                },
                Code::Tracing,
            ),
            (
                GameError::NonConvergence {
                    what: "ccp",
                    iterations: 1,
                    residual: 1.0,
                },
                Code::Solver,
            ),
            (GameError::Infeasible { barrier_value: 0.5 }, Code::Solver),
        ];
        for (e, want) in cases {
            assert_eq!(code_of(&anyhow::Error::new(e.clone())), want, "{e}");
        }
    }

    #[test]
    fn simulation_failures_keep_degeneracy() {
        let wrap = |source| GameError::SolverFailure {
            time: 1.0,
            step: 3,
            source: Box::new(source),
        };
        let e = wrap(GameError::NonConvergence {
            what: "ccp",
            iterations: 1,
            residual: 1.0,
        });
        assert_eq!(game_error_code(&e), Code::Solver);
        assert_eq!(
            game_error_code(&wrap(GameError::DegenerateState { separation: 0.0 })),
            Code::Degenerate
        );
    }

    #[test]
    fn context_keeps_the_code() {
        let e = anyhow::Error::new(Failure::new(Code::Verification, "bad")).context("writing");
        assert_eq!(code_of(&e), Code::Verification);
        assert_eq!(code_of(&anyhow::anyhow!("disk full")), Code::Io);
    }
}
