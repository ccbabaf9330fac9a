use thiserror::Error;

pub type Result<T> = std::result::Result<T, AderError>;

#[derive(Debug, Error)]
pub enum AderError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("system `{system}` has no exact or reference solution")]
    NoExactSolution { system: String },

    #[error("root finding did not converge after {iterations} iterations ({context})")]
    RootFinding { iterations: usize, context: String },

    #[error("non-physical state {detail}")]
    NonPhysical { detail: String },

    #[error("inadmissible state at {location}: {state:?}")]
    Inadmissible { location: String, state: Vec<f64> },

    #[error("singular predictor Jacobian in cell {cell} at node (space {space}, time {time})")]
    SingularJacobian {
        cell: isize,
        space: usize,
        time: usize,
    },

    #[error("predictor diverged in cell {cell} at node (space {space}, time {time}): non-finite Newton update")]
    PredictorDiverged {
        cell: isize,
        space: usize,
        time: usize,
    },

    #[error("stencil for cell {cell} is out of range and the boundary rule cannot supply ghosts")]
    StencilOutOfRange { cell: isize },

    #[error("step {step} (t = {time:e}) failed")]
    StepFailed {
        step: usize,
        time: f64,
        #[source]
        source: Box<AderError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
