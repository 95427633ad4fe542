use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("unknown scenario preset `{name}` (valid presets: {valid})")]
    UnknownPreset { name: String, valid: String },

    #[error("argument {x} outside the series range [0, {max_arg}]")]
    Range { x: f64, max_arg: f64 },

    #[error("no finite threshold: homogeneous state stable for all s")]
    NoThreshold,

    #[error("positivity/CFL condition violated at t = {time}: dt = {dt}, suggested dt <= {suggested}")]
    Cfl { time: f64, dt: f64, suggested: f64 },

    #[error("link-event rate guard violated: max(rate * dt) = {max_rate_dt} > 0.1")]
    TauLeap { max_rate_dt: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("wrong phase regime: {0}")]
    WrongRegime(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error in {path}: {msg}")]
    Parse { path: PathBuf, msg: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of a numerical guard (CFL, tau-leap), as opposed to
    /// bad input.
    pub fn is_numerical_guard(&self) -> bool {
        matches!(self, Error::Cfl { .. } | Error::TauLeap { .. } | Error::Range { .. })
    }
}
