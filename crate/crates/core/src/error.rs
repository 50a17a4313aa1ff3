use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("distribution {what} sums to {sum} (expected 1)")]
    NotStochastic { what: String, sum: f64 },
    #[error("invalid distribution {what}: {reason}")]
    InvalidDistribution { what: String, reason: String },
    #[error("index {index} out of range for {what} (size {size})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        size: usize,
    },
    #[error("step {step} out of range for horizon {horizon}")]
    StepOutOfRange { step: usize, horizon: usize },
    #[error("memory budget exceeded: {required} entries required, budget is {budget}")]
    BudgetExceeded { required: usize, budget: usize },
    #[error("action {action} is not legal at step {step} in controllable state {controllable}")]
    IllegalAction {
        step: usize,
        controllable: usize,
        action: usize,
    },
    #[error("reward {value} at step {step} lies outside bounds [{min}, {max}]")]
    RewardOutOfBounds {
        step: usize,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("negative regret increment {0}: optimal value below evaluated policy value")]
    NegativeRegret(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
