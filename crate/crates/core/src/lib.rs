//! Commit-aware mutation analysis over MiniLang programs.
//!
//! The pipeline is: parse a commit diff ([`diffmap`]), generate first-order
//! mutants and pair them into second-order mutants ([`mutgen`]), execute
//! everything against the test suite ([`matrix`]), then derive the
//! commit-relevant set ([`relevance`]), subsumption ([`subsume`]) and
//! selection-strategy simulations ([`simkit`]).
//!
//! Score and correlation code is generic over [`num_traits::Float`]; the
//! aliases below fix the concrete precision used by reports.

pub mod diffmap;
pub mod matrix;
pub mod mutgen;
pub mod pipeline;
pub mod relevance;
pub mod simkit;
pub mod subsume;

mod error;

pub use error::{Error, Result};

pub use diffmap::{classify_mutant, hunk_count, parse_unified_diff, CommitDiff, Hunk, LocationClass};
pub use matrix::{
    build_matrices, covering_tests, CapturedOutcome, Fault, KillMatrix, MatrixBundle, MutantAssertionMatrix,
    RowId,
};
pub use mutgen::{
    apply_hom, apply_mutant, generate_foms, pair_homs, HomId, HomPair, Mutant, MutantId, Operator,
    OperatorSet, Replacement,
};
pub use pipeline::{analyze, analyze_bundle, analyze_mutants, Analysis, PipelineConfig, Summary};
pub use relevance::{check_witness, detect_relevant, RelevanceOptions, RelevanceReport, Witness};
pub use simkit::stats::{kendall_tau_a, spearman, Correlation};
pub use simkit::{
    count_executions, rms, rms_star, simulate, SimulationConfig, SimulationInputs, SimulationResult, Strategy,
};
pub use subsume::{subsume_report, subsuming_commit_relevant, subsumption, SubsumeReport, SubsumptionResult};

/// Scalar used for mutation scores and correlation statistics in reports.
pub type Real = f64;
/// A mutation score in percent, `0..=100`.
pub type Percent = Real;
/// Rank correlation at report precision.
pub type RankCorrelation = Correlation<Real>;
