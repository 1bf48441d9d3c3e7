//! Error taxonomy.
//!
//! Two layers: [`EvalError`] covers numeric failures while a program runs
//! (division by zero, elementary-function domain violations), annotated with
//! the output coordinate or loop sample where they occurred. [`Error`] is the
//! crate-wide type and additionally covers shape mistakes (dimension/order),
//! budget refusals, integration breakdown and configuration problems.

use thiserror::Error;

/// Numeric failure during program evaluation. Domain checks are eager: the
/// first offending operation aborts the evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,

    #[error("{func}: argument {value} outside domain")]
    Domain { func: &'static str, value: f64 },

    #[error("{source} (output coordinate {coord})")]
    AtCoord {
        coord: usize,
        #[source]
        source: Box<EvalError>,
    },

    #[error("{source} (loop sample {sample})")]
    AtSample {
        sample: usize,
        #[source]
        source: Box<EvalError>,
    },
}

impl EvalError {
    /// Tag this error with the output coordinate being evaluated.
    pub fn at_coord(self, coord: usize) -> EvalError {
        EvalError::AtCoord {
            coord,
            source: Box::new(self),
        }
    }

    /// Tag this error with a loop sample index.
    pub fn at_sample(self, sample: usize) -> EvalError {
        EvalError::AtSample {
            sample,
            source: Box::new(self),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{context}: expected {expected} coordinates, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("{context}: requires order >= {min}, got {got}")]
    OrderTooLow {
        context: &'static str,
        min: usize,
        got: usize,
    },

    #[error(
        "order {order} needs {blocks} blocks per point, over the budget of {budget} \
         (set TTOWER_BLOCK_BUDGET to raise it)"
    )]
    BudgetExceeded {
        order: usize,
        blocks: usize,
        budget: usize,
    },

    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),

    #[error("integration stopped at t = {last_time} after {steps_done} steps: {source}")]
    PartialTrajectory {
        last_time: f64,
        steps_done: usize,
        #[source]
        source: EvalError,
    },

    #[error("structural check '{check}' failed at level {level}: max deviation {deviation:e}")]
    Structural {
        check: &'static str,
        level: usize,
        deviation: f64,
    },

    #[error("invalid flow window: {0}")]
    FlowSpec(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
