use crate::mutgen::{HomId, MutantId};
use crate::simkit::stats::StatsError;
use crate::simkit::Strategy;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Lang(#[from] cam_minilang::Error),
    #[error("malformed diff at line {line}: {message}")]
    MalformedDiff { line: usize, message: String },
    #[error("stale mutant {0}: target node not present in program")]
    StaleMutant(MutantId),
    #[error("mutants {0} and {1} target the same node")]
    ConflictingTargets(MutantId, MutantId),
    #[error("test suite is red on the unmutated program; failing tests: {}", .0.join(", "))]
    RedSuite(Vec<String>),
    #[error("unknown mutant `{0}`")]
    UnknownMutant(String),
    #[error("unknown assertion `{0}`")]
    UnknownAssertion(String),
    #[error("matrix has no row for higher-order mutant {0}")]
    MissingHomRow(HomId),
    #[error("score denominator is empty")]
    EmptyDenominator,
    #[error("strategy {0} has an empty mutant pool")]
    EmptyPool(Strategy),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("invalid artifact: {0}")]
    Format(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
