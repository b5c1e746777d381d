use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },

    #[error("DIMENSION is {expected} but the edge weight section holds {found} {what}")]
    DimensionMismatch {
        expected: usize,
        found: usize,
        what: &'static str,
    },

    #[error("unknown zone or group `{0}`")]
    UnknownZone(String),

    #[error("stop {0} has no zone assignment")]
    MissingZone(usize),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("malformed zone id `{0}`")]
    ZoneId(String),

    #[error("malformed route {route}: {msg}")]
    MalformedRoute { route: String, msg: String },

    #[error("no reference route available for {0}")]
    NoReference(String),

    #[error("instance too large for exhaustive search: n = {n}, limit {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn syntax(line: usize, msg: impl Into<String>) -> Self {
        Error::Syntax {
            line,
            msg: msg.into(),
        }
    }
}
