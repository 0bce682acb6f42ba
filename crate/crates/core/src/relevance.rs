//! Commit-relevance detection over a mutant-assertion matrix.

use crate::matrix::{CapturedOutcome, KillMatrix, MutantAssertionMatrix, RowId};
use crate::mutgen::{HomId, HomPair, Mutant, MutantId};
use crate::{Error, Result};
use cam_minilang::AssertionId;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelevanceOptions {
    /// Count every on-change mutant as relevant, killable or not.
    pub include_unkillable_on_change: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub y: MutantId,
    pub hom: HomId,
    pub assertion_id: AssertionId,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelevanceReport {
    pub relevant_outside: BTreeMap<MutantId, Witness>,
    pub relevant_on_change: BTreeSet<MutantId>,
    pub not_relevant: BTreeSet<MutantId>,
    /// Cells inspected during the witness search.
    pub comparisons: u64,
}

impl RelevanceReport {
    pub fn relevant(&self) -> BTreeSet<MutantId> {
        self.relevant_outside
            .keys()
            .chain(&self.relevant_on_change)
            .copied()
            .collect()
    }

    pub fn is_relevant(&self, id: MutantId) -> bool {
        self.relevant_on_change.contains(&id) || self.relevant_outside.contains_key(&id)
    }
}

fn witness_at(x: &CapturedOutcome, y: &CapturedOutcome, xy: &CapturedOutcome) -> bool {
    match (x.actual(), y.actual(), xy.actual()) {
        (Some(x), Some(y), Some(xy)) => y != xy && x != xy,
        _ => false,
    }
}

fn row(matrix: &MutantAssertionMatrix, id: RowId) -> Result<&[CapturedOutcome]> {
    match matrix.row(id) {
        Some(r) => Ok(&r.cells),
        None => match id {
            RowId::Hom(h) => Err(Error::MissingHomRow(h)),
            other => Err(Error::UnknownMutant(other.to_string())),
        },
    }
}

/// First witness for `x` among `pairs` (already filtered to `x`), plus the
/// number of cells inspected.
fn search(matrix: &MutantAssertionMatrix, x: MutantId, pairs: &[&HomPair]) -> Result<(Option<Witness>, u64)> {
    let xr = row(matrix, RowId::Fom(x))?;
    let mut inspected = 0;
    for p in pairs {
        let yr = row(matrix, RowId::Fom(p.y))?;
        let xyr = row(matrix, RowId::Hom(p.id))?;
        for (a, aid) in matrix.assertions.iter().enumerate() {
            inspected += 1;
            if witness_at(&xr[a], &yr[a], &xyr[a]) {
                let w = Witness {
                    y: p.y,
                    hom: p.id,
                    assertion_id: aid.clone(),
                };
                return Ok((Some(w), inspected));
            }
        }
    }
    Ok((None, inspected))
}

/// Classifies every first-order mutant. An outside-change mutant is
/// relevant when some pair `(x, y)` has an assertion whose actual value in
/// the `xy` row differs from both the `x` and the `y` rows, all three being
/// plain values. Search stops at the first witness per `x`.
pub fn detect_relevant(
    matrix: &MutantAssertionMatrix,
    kills: &KillMatrix,
    foms: &[Mutant],
    pairs: &[HomPair],
    options: RelevanceOptions,
) -> Result<RelevanceReport> {
    let mut by_x: BTreeMap<MutantId, Vec<&HomPair>> = BTreeMap::new();
    for p in pairs {
        by_x.entry(p.x).or_default().push(p);
    }

    let outside: Vec<MutantId> = foms.iter().filter(|m| !m.is_on_change()).map(|m| m.id).collect();
    let found = outside
        .par_iter()
        .map(|x| {
            let ps = by_x.get(x).map(Vec::as_slice).unwrap_or(&[]);
            search(matrix, *x, ps).map(|(w, n)| (*x, w, n))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut report = RelevanceReport::default();
    for (x, w, n) in found {
        report.comparisons += n;
        match w {
            Some(w) => {
                report.relevant_outside.insert(x, w);
            }
            None => {
                report.not_relevant.insert(x);
            }
        }
    }
    for m in foms.iter().filter(|m| m.is_on_change()) {
        if options.include_unkillable_on_change || kills.is_killable(m.id) {
            report.relevant_on_change.insert(m.id);
        } else {
            report.not_relevant.insert(m.id);
        }
    }
    Ok(report)
}

/// Re-checks the relevance condition for `x` against `y` at one assertion.
pub fn check_witness(
    matrix: &MutantAssertionMatrix,
    x: MutantId,
    y: MutantId,
    assertion_id: &str,
) -> Result<bool> {
    let a = matrix
        .column(assertion_id)
        .ok_or_else(|| Error::UnknownAssertion(assertion_id.to_string()))?;
    let hom = matrix
        .hom_for(x, y)
        .ok_or_else(|| Error::UnknownMutant(format!("pair ({x}, {y})")))?;
    let xr = row(matrix, RowId::Fom(x))?;
    let yr = row(matrix, RowId::Fom(y))?;
    let xyr = row(matrix, RowId::Hom(hom))?;
    Ok(witness_at(&xr[a], &yr[a], &xyr[a]))
}
