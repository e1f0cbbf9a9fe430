use std::path::PathBuf;

use chrono::NaiveDate;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("duplicate {source_name} entry for ({country}, {date})")]
    DuplicateKey {
        source_name: &'static str,
        country: String,
        date: NaiveDate,
    },

    #[error("cumulative cases decrease for {country} on {date}")]
    DecreasingCumulative { country: String, date: NaiveDate },

    #[error("new cases for {country} on {date} disagree with the cumulative series")]
    InconsistentNewCases { country: String, date: NaiveDate },

    #[error("country {0} has case data but no covariates")]
    MissingCovariates(String),

    #[error("invalid covariates for {country}: {reason}")]
    InvalidCovariates { country: String, reason: String },

    #[error("intensity {level} for {country} outside 0..=6")]
    IntensityOutOfRange { country: String, level: i64 },

    #[error("mobility deviation {value} for {country} on {date} outside [-100, 500]")]
    MobilityOutOfBand {
        country: String,
        date: NaiveDate,
        value: f64,
    },

    #[error("unknown country code {0:?} (expected ISO 3166-1 alpha-3)")]
    UnknownCountry(String),

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("invalid estimation spec: {0}")]
    InvalidSpec(String),

    #[error("empty estimation sample after filtering ({0})")]
    EmptySample(String),

    #[error("no observation has an event time inside the window [{lo}, {hi}] for {policy}")]
    EmptyWindow { policy: String, lo: i64, hi: i64 },

    #[error("design has {rows} rows but {cols} retained columns")]
    Underdetermined { rows: usize, cols: usize },

    #[error("non-finite entry in the design at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("Gram matrix is singular")]
    Singular,

    #[error("cluster-robust covariance needs at least 2 clusters, got {0}")]
    TooFewClusters(usize),

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
