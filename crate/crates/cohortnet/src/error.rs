use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed row at line {line}: {message}")]
    MalformedRow {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("missing input file: {0}")]
    MissingFile(PathBuf),

    #[error("node {node} referenced by an edge has no attribute record")]
    MissingAttributes { node: String },

    #[error("no cohort record for school {school}, entry year {year}")]
    MissingCohort { school: String, year: i32 },

    #[error("unknown cohort: {0}")]
    UnknownCohort(String),

    #[error("unknown school: {0}")]
    UnknownSchool(String),

    #[error("time index {idx} outside grid range [{lo}, {hi}]")]
    IndexOutOfRange { idx: i32, lo: i32, hi: i32 },

    #[error("cohort has no members")]
    EmptyCohort,

    #[error("member count must be positive")]
    ZeroMembers,

    #[error("design matrix is rank deficient; collinear columns: {}", columns.join(", "))]
    RankDeficient { columns: Vec<String> },

    #[error("need more observations than columns: n={n_obs}, k={n_cols}")]
    TooFewObservations { n_obs: usize, n_cols: usize },

    #[error("cluster-robust errors need at least two clusters")]
    SingleCluster,

    #[error("unknown metric {name:?}; valid metrics: {}", valid.join(", "))]
    UnknownMetric { name: String, valid: Vec<String> },

    #[error("metric output {missing} not found under {dir}; run `{command}` first")]
    MissingUpstream {
        missing: String,
        dir: PathBuf,
        command: String,
    },

    #[error("infeasible generator config: {0}")]
    InfeasibleConfig(String),

    #[error("bad config {path}: {message}")]
    BadConfig { path: PathBuf, message: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
