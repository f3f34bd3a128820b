use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("resolution too coarse: {0}")]
    ResolutionTooCoarse(String),

    #[error("domain mask is disconnected ({components} components)")]
    DisconnectedDomain { components: usize },

    #[error("condition (G) violated: measure ratio {ratio} at node {node}")]
    ConditionGViolated { node: usize, ratio: f64 },

    #[error("nonlinear solve did not converge after {iters} iterations (residual {residual:e}) at t = {time}")]
    NonConvergence { iters: usize, residual: f64, time: f64 },

    #[error("rank-deficient linearization: {0}")]
    RankDeficient(String),

    #[error("inadmissible level: {0}")]
    InadmissibleLevel(String),

    #[error("energy estimate requires p = 2, got p = {0}")]
    WrongP(f64),

    #[error("empty cylinder at radius {radius}")]
    EmptyCylinder { radius: f64 },

    #[error("fit rejected: {0}")]
    Fit(String),

    #[error("nesting violated at step {step}: {detail}")]
    NestingViolation { step: usize, detail: String },

    #[error("trace exhausted: radius {ln_radius:e} (log) lies below the last generated radius")]
    TraceExhausted { ln_radius: f64 },

    #[error("solver failed for eps = {eps}: {source}")]
    SweepFailure {
        eps: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    ConfigInvalid(Vec<String>),

    #[error("checkpoint format: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag used in failure records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::ResolutionTooCoarse(_) => "resolution-too-coarse",
            Error::DisconnectedDomain { .. } => "disconnected-domain",
            Error::ConditionGViolated { .. } => "condition-G-violated",
            Error::NonConvergence { .. } => "nonconvergence",
            Error::RankDeficient(_) => "rank-deficient",
            Error::InadmissibleLevel(_) => "inadmissible-level",
            Error::WrongP(_) => "wrong-p",
            Error::EmptyCylinder { .. } => "empty-cylinder",
            Error::Fit(_) => "fit",
            Error::NestingViolation { .. } => "nesting-violation",
            Error::TraceExhausted { .. } => "trace-exhausted",
            Error::SweepFailure { .. } => "sweep-failure",
            Error::ConfigInvalid(_) => "config-invalid",
            Error::Checkpoint(_) => "checkpoint",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
