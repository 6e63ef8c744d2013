use thiserror::Error;

/// Errors raised while reading or validating a scenario document.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("syntax error at line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown key `{key}` at line {line}")]
    UnknownKey { key: String, line: usize },
    #[error("invalid value for `{key}`{}: {message}", line_suffix(*.line))]
    Invariant {
        key: String,
        line: Option<usize>,
        message: String,
    },
    #[error("unknown built-in scenario `{0}`")]
    UnknownBuiltin(String),
}

fn line_suffix(line: Option<usize>) -> String {
    match line {
        Some(l) => format!(" (line {l})"),
        None => String::new(),
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("network has no voltage source: {0}")]
    Islanding(String),
    #[error("network solver did not converge after {iterations} iterations (mismatch {mismatch:.3e} pu)")]
    Solver { iterations: usize, mismatch: f64 },
    #[error("no equilibrium found: {message} (largest residual {residual:.3e} in `{name}`)")]
    Initialization {
        message: String,
        name: String,
        residual: f64,
    },
    #[error("linearization error: {0}")]
    Linearization(String),
    #[error("metrics error: {0}")]
    Metrics(String),
    #[error("render error: {0}")]
    Render(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command-line front end: 1 for invalid
    /// input, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Domain(_)
            | Error::Scenario(_)
            | Error::Render(_)
            | Error::Io(_) => 1,
            Error::Numeric(_)
            | Error::Islanding(_)
            | Error::Solver { .. }
            | Error::Initialization { .. }
            | Error::Linearization(_)
            | Error::Metrics(_) => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
