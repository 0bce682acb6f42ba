//! Execution of baseline, first-order and second-order rows against the
//! suite, and the resulting mutant-assertion and kill matrices.

use crate::mutgen::{apply_hom, apply_mutant, HomId, HomPair, Mutant, MutantId};
use crate::{Error, Result};
use cam_minilang::{
    run_test, AssertionId, ErrorKind, Outcome, ProgramUnit, TestExecutionRecord, TestSuite, Value,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RowId {
    Baseline,
    Fom(MutantId),
    Hom(HomId),
}

impl fmt::Display for RowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowId::Baseline => f.write_str("BASELINE"),
            RowId::Fom(m) => m.fmt(f),
            RowId::Hom(h) => h.fmt(f),
        }
    }
}

impl FromStr for RowId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s == "BASELINE" {
            Ok(RowId::Baseline)
        } else if s.starts_with('H') {
            s.parse().map(RowId::Hom)
        } else {
            s.parse().map(RowId::Fom)
        }
    }
}

macro_rules! string_serde {
    ($t:ty) => {
        impl Serialize for $t {
            fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $t {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

string_serde!(RowId);

/// Why an assertion's operands could not be evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Fault {
    Runtime(ErrorKind),
    Timeout,
}

impl fmt::Display for Fault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fault::Runtime(k) => k.fmt(f),
            Fault::Timeout => f.write_str("Timeout"),
        }
    }
}

impl FromStr for Fault {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s == "Timeout" {
            return Ok(Fault::Timeout);
        }
        ErrorKind::from_name(s)
            .map(Fault::Runtime)
            .ok_or_else(|| format!("unknown fault kind `{s}`"))
    }
}

/// One matrix cell. Serialized as `V:<expected>|<actual>`, `E:<kind>` or `N`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CapturedOutcome {
    Value { expected: Value, actual: Value },
    Exceptional(Fault),
    NotReached,
}

impl CapturedOutcome {
    pub fn actual(&self) -> Option<&Value> {
        match self {
            CapturedOutcome::Value { actual, .. } => Some(actual),
            _ => None,
        }
    }
}

impl fmt::Display for CapturedOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CapturedOutcome::Value { expected, actual } => write!(f, "V:{expected}|{actual}"),
            CapturedOutcome::Exceptional(k) => write!(f, "E:{k}"),
            CapturedOutcome::NotReached => f.write_str("N"),
        }
    }
}

impl FromStr for CapturedOutcome {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s == "N" {
            return Ok(CapturedOutcome::NotReached);
        }
        if let Some(k) = s.strip_prefix("E:") {
            return k.parse().map(CapturedOutcome::Exceptional);
        }
        let (e, a) = s
            .strip_prefix("V:")
            .and_then(|v| v.split_once('|'))
            .ok_or_else(|| format!("invalid matrix cell `{s}`"))?;
        Ok(CapturedOutcome::Value {
            expected: e.parse().map_err(|err| format!("{err}"))?,
            actual: a.parse().map_err(|err| format!("{err}"))?,
        })
    }
}

string_serde!(CapturedOutcome);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestColumns {
    pub name: String,
    pub assertions: Vec<AssertionId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixRow {
    /// One cell per entry of [`MutantAssertionMatrix::assertions`].
    pub cells: Vec<CapturedOutcome>,
    pub outcomes: Vec<Outcome>,
    pub covering_tests: BTreeSet<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutantAssertionMatrix {
    pub assertions: Vec<AssertionId>,
    pub tests: Vec<TestColumns>,
    pub rows: BTreeMap<RowId, MatrixRow>,
    pub pairs: Vec<HomPair>,
}

impl MutantAssertionMatrix {
    pub fn row(&self, id: RowId) -> Option<&MatrixRow> {
        self.rows.get(&id)
    }

    pub fn column(&self, assertion: &str) -> Option<usize> {
        self.assertions.iter().position(|a| a == assertion)
    }

    pub fn cell(&self, row: RowId, assertion: &str) -> Option<&CapturedOutcome> {
        Some(&self.row(row)?.cells[self.column(assertion)?])
    }

    pub fn hom_for(&self, x: MutantId, y: MutantId) -> Option<HomId> {
        self.pairs.iter().find(|p| p.x == x && p.y == y).map(|p| p.id)
    }

    /// Matrix as CSV: a `row` column, then one column per assertion id.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let fmt_err = |e: csv::Error| Error::Format(e.to_string());
        w.write_record(std::iter::once("row").chain(self.assertions.iter().map(String::as_str)))
            .map_err(fmt_err)?;
        for (id, row) in &self.rows {
            w.write_record(
                std::iter::once(id.to_string()).chain(row.cells.iter().map(ToString::to_string)),
            )
            .map_err(fmt_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
    }
}

/// Killing tests per row; an empty set marks an equivalent mutant.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KillMatrix(pub BTreeMap<RowId, BTreeSet<String>>);

impl KillMatrix {
    pub fn killing_tests(&self, id: MutantId) -> Option<&BTreeSet<String>> {
        self.0.get(&RowId::Fom(id))
    }

    pub fn is_killable(&self, id: MutantId) -> bool {
        self.killing_tests(id).is_some_and(|t| !t.is_empty())
    }

    pub fn is_equivalent(&self, id: MutantId) -> bool {
        !self.is_killable(id)
    }

    /// Killable first-order mutants in id order.
    pub fn killable(&self) -> BTreeSet<MutantId> {
        self.0
            .iter()
            .filter_map(|(r, t)| match r {
                RowId::Fom(m) if !t.is_empty() => Some(*m),
                _ => None,
            })
            .collect()
    }
}

/// Everything later stages need, in one self-contained artifact.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixBundle {
    pub step_budget: u64,
    pub hunk_count: usize,
    pub mutants: Vec<Mutant>,
    pub matrix: MutantAssertionMatrix,
    pub kills: KillMatrix,
}

fn cells_for(test: &TestColumns, rec: &TestExecutionRecord) -> Vec<CapturedOutcome> {
    test.assertions
        .iter()
        .map(|aid| {
            if let Some(r) = rec.assertion_records.iter().find(|r| &r.assertion_id == aid) {
                CapturedOutcome::Value {
                    expected: r.expected.clone(),
                    actual: r.actual.clone(),
                }
            } else if rec.interrupted_assertion.as_ref() == Some(aid) {
                match rec.outcome {
                    Outcome::RuntimeError(k) => CapturedOutcome::Exceptional(Fault::Runtime(k)),
                    _ => CapturedOutcome::Exceptional(Fault::Timeout),
                }
            } else {
                CapturedOutcome::NotReached
            }
        })
        .collect()
}

struct RowResult {
    id: RowId,
    row: MatrixRow,
    kills: BTreeSet<String>,
}

fn execute_row(
    id: RowId,
    program: &ProgramUnit,
    targets: &[cam_minilang::NodeId],
    suite: &TestSuite,
    columns: &[TestColumns],
    budget: u64,
) -> RowResult {
    let mut row = MatrixRow {
        cells: Vec::new(),
        outcomes: Vec::new(),
        covering_tests: BTreeSet::new(),
    };
    let mut kills = BTreeSet::new();
    for (test, col) in suite.tests.iter().zip(columns) {
        let rec = run_test(program, suite, test, budget);
        row.cells.extend(cells_for(col, &rec));
        if targets.iter().any(|t| rec.covers(*t)) {
            row.covering_tests.insert(test.name.clone());
        }
        if !rec.outcome.is_pass() {
            kills.insert(test.name.clone());
        }
        row.outcomes.push(rec.outcome);
    }
    RowResult { id, row, kills }
}

/// Runs every test on the baseline, each FOM and each HOM. Rows are
/// computed in parallel and assembled by id, so the result does not depend
/// on scheduling.
pub fn build_matrices(
    program: &ProgramUnit,
    foms: &[Mutant],
    pairs: &[HomPair],
    suite: &TestSuite,
    step_budget: u64,
) -> Result<(MutantAssertionMatrix, KillMatrix)> {
    suite.check_against(program)?;
    let columns: Vec<TestColumns> = suite
        .tests
        .iter()
        .map(|t| TestColumns {
            name: t.name.clone(),
            assertions: t.assertion_ids.clone(),
        })
        .collect();

    let baseline = execute_row(RowId::Baseline, program, &[], suite, &columns, step_budget);
    if !baseline.kills.is_empty() {
        return Err(Error::RedSuite(baseline.kills.into_iter().collect()));
    }

    let by_id: HashMap<MutantId, &Mutant> = foms.iter().map(|m| (m.id, m)).collect();
    let lookup = |id: MutantId| {
        by_id
            .get(&id)
            .copied()
            .ok_or_else(|| Error::UnknownMutant(id.to_string()))
    };

    let fom_rows = foms
        .par_iter()
        .map(|m| {
            let p = apply_mutant(program, m)?;
            Ok(execute_row(RowId::Fom(m.id), &p, &[m.target], suite, &columns, step_budget))
        })
        .collect::<Result<Vec<_>>>()?;
    let hom_rows = pairs
        .par_iter()
        .map(|h| {
            let (x, y) = (lookup(h.x)?, lookup(h.y)?);
            let p = apply_hom(program, x, y)?;
            Ok(execute_row(RowId::Hom(h.id), &p, &[x.target, y.target], suite, &columns, step_budget))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = BTreeMap::new();
    let mut kills = BTreeMap::new();
    for r in std::iter::once(baseline).chain(fom_rows).chain(hom_rows) {
        rows.insert(r.id, r.row);
        kills.insert(r.id, r.kills);
    }
    let matrix = MutantAssertionMatrix {
        assertions: columns.iter().flat_map(|c| c.assertions.iter().cloned()).collect(),
        tests: columns,
        rows,
        pairs: pairs.to_vec(),
    };
    Ok((matrix, KillMatrix(kills)))
}

pub fn covering_tests(matrix: &MutantAssertionMatrix, id: MutantId) -> Result<&BTreeSet<String>> {
    matrix
        .row(RowId::Fom(id))
        .map(|r| &r.covering_tests)
        .ok_or_else(|| Error::UnknownMutant(id.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_codes_round_trip() {
        for c in [
            CapturedOutcome::Value {
                expected: Value::Int(-1),
                actual: Value::IntArray(vec![1, -2]),
            },
            CapturedOutcome::Value {
                expected: Value::Bool(true),
                actual: Value::Bool(false),
            },
            CapturedOutcome::Exceptional(Fault::Runtime(ErrorKind::DivisionByZero)),
            CapturedOutcome::Exceptional(Fault::Timeout),
            CapturedOutcome::NotReached,
        ] {
            assert_eq!(c.to_string().parse::<CapturedOutcome>().unwrap(), c);
        }
        assert_eq!(
            CapturedOutcome::Value {
                expected: Value::Int(-1),
                actual: Value::Int(0)
            }
            .to_string(),
            "V:-1|0"
        );
        assert!("V:1".parse::<CapturedOutcome>().is_err());
        assert!("E:Oops".parse::<CapturedOutcome>().is_err());
    }

    #[test]
    fn row_ids() {
        for s in ["BASELINE", "M7", "H12"] {
            assert_eq!(s.parse::<RowId>().unwrap().to_string(), s);
        }
        assert!(RowId::Baseline < RowId::Fom(MutantId(1)));
        assert!(RowId::Fom(MutantId(99)) < RowId::Hom(HomId(1)));
    }
}
