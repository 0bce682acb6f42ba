//! Dynamic mutant subsumption on killing-test sets.
//!
//! Mutant `a` subsumes `b` when every test killing `a` also kills `b`
//! (kill(a) ⊆ kill(b)), both sets being non-empty. Mutants with equal kill
//! sets form one class; minimal classes hold the subsuming mutants.

use crate::matrix::KillMatrix;
use crate::mutgen::MutantId;
use crate::relevance::RelevanceReport;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutantClass {
    pub members: Vec<MutantId>,
    pub kill_set: BTreeSet<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsumptionResult {
    /// Ordered by smallest member id.
    pub classes: Vec<MutantClass>,
    /// Universe members with no killing test.
    pub equivalent: Vec<MutantId>,
    /// Covering pairs `(a, b)` of class indices: class `a` strictly subsumes
    /// class `b` with no class strictly between them.
    pub hasse_edges: Vec<(usize, usize)>,
    pub minimal_classes: Vec<usize>,
    pub subsuming: BTreeSet<MutantId>,
}

impl SubsumptionResult {
    pub fn class_of(&self, m: MutantId) -> Option<usize> {
        self.classes.iter().position(|c| c.members.contains(&m))
    }

    /// Class-level relation, reflexive.
    pub fn class_subsumes(&self, a: usize, b: usize) -> bool {
        self.classes[a].kill_set.is_subset(&self.classes[b].kill_set)
    }

    /// `None` if either mutant is outside the killable universe.
    pub fn subsumes(&self, a: MutantId, b: MutantId) -> Option<bool> {
        Some(self.class_subsumes(self.class_of(a)?, self.class_of(b)?))
    }

    pub fn killable(&self) -> BTreeSet<MutantId> {
        self.classes.iter().flat_map(|c| c.members.iter().copied()).collect()
    }
}

fn strictly(a: &BTreeSet<String>, b: &BTreeSet<String>) -> bool {
    a.len() < b.len() && a.is_subset(b)
}

pub fn subsumption(kills: &KillMatrix, universe: &BTreeSet<MutantId>) -> Result<SubsumptionResult> {
    let mut groups: BTreeMap<&BTreeSet<String>, Vec<MutantId>> = BTreeMap::new();
    let mut equivalent = Vec::new();
    for &m in universe {
        let k = kills
            .killing_tests(m)
            .ok_or_else(|| Error::UnknownMutant(m.to_string()))?;
        if k.is_empty() {
            equivalent.push(m);
        } else {
            groups.entry(k).or_default().push(m);
        }
    }
    let mut classes: Vec<MutantClass> = groups
        .into_iter()
        .map(|(k, members)| MutantClass {
            members,
            kill_set: k.clone(),
        })
        .collect();
    classes.sort_by_key(|c| c.members[0]);

    let n = classes.len();
    let below = |a: usize, b: usize| strictly(&classes[a].kill_set, &classes[b].kill_set);
    let mut hasse_edges = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if below(a, b) && !(0..n).any(|c| below(a, c) && below(c, b)) {
                hasse_edges.push((a, b));
            }
        }
    }
    let minimal_classes: Vec<usize> = (0..n).filter(|&b| !(0..n).any(|a| below(a, b))).collect();
    let subsuming = minimal_classes
        .iter()
        .flat_map(|&c| classes[c].members.iter().copied())
        .collect();
    Ok(SubsumptionResult {
        classes,
        equivalent,
        hasse_edges,
        minimal_classes,
        subsuming,
    })
}

/// Subsumption restricted to killable commit-relevant mutants.
pub fn commit_relevant_subsumption(kills: &KillMatrix, relevance: &RelevanceReport) -> Result<SubsumptionResult> {
    let universe = relevance
        .relevant()
        .into_iter()
        .filter(|m| kills.is_killable(*m))
        .collect();
    subsumption(kills, &universe)
}

pub fn subsuming_commit_relevant(kills: &KillMatrix, relevance: &RelevanceReport) -> BTreeSet<MutantId> {
    commit_relevant_subsumption(kills, relevance)
        .map(|r| r.subsuming)
        .unwrap_or_default()
}

/// Subsumption over all killable mutants and over commit-relevant ones,
/// with the count ratios reported alongside.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsumeReport {
    pub all: SubsumptionResult,
    pub commit_relevant: SubsumptionResult,
    pub subsuming_commit_relevant: BTreeSet<MutantId>,
    pub counts: SubsumeCounts,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsumeCounts {
    pub mutants: usize,
    pub relevant: usize,
    pub subsuming: usize,
    pub subsuming_relevant: usize,
    /// `None` when the denominator is zero.
    pub subsuming_relevant_per_relevant: Option<f64>,
    pub subsuming_relevant_per_mutant: Option<f64>,
    pub relevant_per_mutant: Option<f64>,
}

fn ratio(a: usize, b: usize) -> Option<f64> {
    (b > 0).then(|| a as f64 / b as f64)
}

pub fn subsume_report(kills: &KillMatrix, all_mutants: &BTreeSet<MutantId>, relevance: &RelevanceReport) -> Result<SubsumeReport> {
    let all = subsumption(kills, all_mutants)?;
    let commit_relevant = commit_relevant_subsumption(kills, relevance)?;
    let relevant = relevance.relevant().len();
    let counts = SubsumeCounts {
        mutants: all_mutants.len(),
        relevant,
        subsuming: all.subsuming.len(),
        subsuming_relevant: commit_relevant.subsuming.len(),
        subsuming_relevant_per_relevant: ratio(commit_relevant.subsuming.len(), relevant),
        subsuming_relevant_per_mutant: ratio(commit_relevant.subsuming.len(), all_mutants.len()),
        relevant_per_mutant: ratio(relevant, all_mutants.len()),
    };
    Ok(SubsumeReport {
        subsuming_commit_relevant: commit_relevant.subsuming.clone(),
        all,
        commit_relevant,
        counts,
    })
}
