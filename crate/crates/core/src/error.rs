use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("step size underflow at t = {t:.6e} (h = {h:.3e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("integration exceeded {0} steps")]
    TooManySteps(usize),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("emission not contained in the simulation window: {0}")]
    Window(String),

    #[error("calibration failed: {message}")]
    Calibration {
        message: String,
        /// Sampled (peak Rabi, figure) pairs used for the decision.
        curve: Vec<(f64, f64)>,
    },

    #[error("photon number {0} exceeds the supported capacity")]
    Capacity(usize),

    #[error("fidelity undefined: zero postselection probability")]
    UndefinedFidelity,

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<SimError>,
    },
}

impl SimError {
    pub fn param(msg: impl Into<String>) -> Self {
        SimError::Parameter(msg.into())
    }

    /// Wraps the error with a description of where it happened.
    pub fn context(self, context: impl Into<String>) -> Self {
        SimError::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// True when the error reflects bad user input rather than a numerical failure.
    pub fn is_parameter_error(&self) -> bool {
        match self {
            SimError::Parameter(_) => true,
            SimError::Context { source, .. } => source.is_parameter_error(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, SimError>;

pub(crate) fn check_rate(name: &str, value: f64) -> Result<()> {
    if !value.is_finite() || value < 0.0 {
        return Err(SimError::param(format!("{name} must be finite and >= 0, got {value}")));
    }
    Ok(())
}
