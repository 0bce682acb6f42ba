//! End-to-end analysis of one commit: mutate, execute, classify.

use crate::diffmap::CommitDiff;
use crate::matrix::{build_matrices, MatrixBundle};
use crate::mutgen::{generate_foms, pair_homs, Mutant, OperatorSet};
use crate::relevance::{detect_relevant, RelevanceOptions, RelevanceReport};
use crate::subsume::{subsume_report, SubsumeReport};
use crate::Result;
use cam_minilang::{ProgramUnit, TestSuite, DEFAULT_STEP_BUDGET};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub operators: OperatorSet,
    pub hom_cap: Option<usize>,
    pub seed: u64,
    pub step_budget: u64,
    pub relevance: RelevanceOptions,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            operators: OperatorSet::all(),
            hom_cap: None,
            seed: 0,
            step_budget: DEFAULT_STEP_BUDGET,
            relevance: RelevanceOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub bundle: MatrixBundle,
    pub relevance: RelevanceReport,
    pub subsume: SubsumeReport,
}

/// Generates mutants from `program` and analyses them.
pub fn analyze(program: &ProgramUnit, suite: &TestSuite, diff: &CommitDiff, config: &PipelineConfig) -> Result<Analysis> {
    let foms = generate_foms(program, &config.operators, diff);
    analyze_mutants(program, suite, diff, foms, config)
}

/// Analyses a given mutant catalog, e.g. a hand-picked subset.
pub fn analyze_mutants(
    program: &ProgramUnit,
    suite: &TestSuite,
    diff: &CommitDiff,
    foms: Vec<Mutant>,
    config: &PipelineConfig,
) -> Result<Analysis> {
    let pairs = pair_homs(&foms, config.hom_cap, config.seed);
    let (matrix, kills) = build_matrices(program, &foms, &pairs, suite, config.step_budget)?;
    let bundle = MatrixBundle {
        step_budget: config.step_budget,
        hunk_count: diff.hunk_count(),
        mutants: foms,
        matrix,
        kills,
    };
    analyze_bundle(bundle, config.relevance)
}

/// Relevance and subsumption from an already built matrix.
pub fn analyze_bundle(bundle: MatrixBundle, options: RelevanceOptions) -> Result<Analysis> {
    let relevance = detect_relevant(&bundle.matrix, &bundle.kills, &bundle.mutants, &bundle.matrix.pairs, options)?;
    let all = bundle.mutants.iter().map(|m| m.id).collect();
    let subsume = subsume_report(&bundle.kills, &all, &relevance)?;
    Ok(Analysis {
        bundle,
        relevance,
        subsume,
    })
}

/// Flat per-commit counts and ratios; ratios are `None` for an empty
/// denominator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub hunks: usize,
    pub mutants: usize,
    pub on_change: usize,
    pub outside_change: usize,
    pub hom_pairs: usize,
    pub killable: usize,
    pub equivalent: usize,
    pub relevant: usize,
    pub relevant_on_change: usize,
    pub relevant_outside: usize,
    pub not_relevant: usize,
    pub subsuming: usize,
    pub subsuming_relevant: usize,
    pub relevant_ratio: Option<f64>,
    pub outside_share_of_relevant: Option<f64>,
    pub on_change_share_of_mutants: Option<f64>,
    pub subsuming_relevant_per_relevant: Option<f64>,
    pub relevant_outside_ids: Vec<String>,
    pub relevant_on_change_ids: Vec<String>,
    pub not_relevant_ids: Vec<String>,
}

fn ratio(a: usize, b: usize) -> Option<f64> {
    (b > 0).then(|| a as f64 / b as f64)
}

impl Summary {
    pub fn of(a: &Analysis) -> Summary {
        let m = &a.bundle.mutants;
        let on_change = m.iter().filter(|m| m.is_on_change()).count();
        let killable = m.iter().filter(|x| a.bundle.kills.is_killable(x.id)).count();
        let r = &a.relevance;
        let relevant = r.relevant_on_change.len() + r.relevant_outside.len();
        let ids = |it: &mut dyn Iterator<Item = &crate::MutantId>| it.map(ToString::to_string).collect();
        Summary {
            hunks: a.bundle.hunk_count,
            mutants: m.len(),
            on_change,
            outside_change: m.len() - on_change,
            hom_pairs: a.bundle.matrix.pairs.len(),
            killable,
            equivalent: m.len() - killable,
            relevant,
            relevant_on_change: r.relevant_on_change.len(),
            relevant_outside: r.relevant_outside.len(),
            not_relevant: r.not_relevant.len(),
            subsuming: a.subsume.counts.subsuming,
            subsuming_relevant: a.subsume.counts.subsuming_relevant,
            relevant_ratio: ratio(relevant, m.len()),
            outside_share_of_relevant: ratio(r.relevant_outside.len(), relevant),
            on_change_share_of_mutants: ratio(on_change, m.len()),
            subsuming_relevant_per_relevant: a.subsume.counts.subsuming_relevant_per_relevant,
            relevant_outside_ids: ids(&mut r.relevant_outside.keys()),
            relevant_on_change_ids: ids(&mut r.relevant_on_change.iter()),
            not_relevant_ids: ids(&mut r.not_relevant.iter()),
        }
    }
}
