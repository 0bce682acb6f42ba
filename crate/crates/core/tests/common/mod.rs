#![allow(dead_code)]

use cam_core::{
    apply_hom, apply_mutant, generate_foms, parse_unified_diff, CommitDiff, Mutant, MutantId, Operator,
    OperatorSet,
};
use cam_minilang::{
    parse_program, parse_tests, print_program, run_test, Outcome, ProgramUnit, TestExecutionRecord, TestSuite,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

pub fn fixture_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel)
}

pub fn read(rel: &str) -> String {
    std::fs::read_to_string(fixture_path(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: String,
    pub source: String,
    pub tests_source: String,
    pub diff_text: String,
    pub program: ProgramUnit,
    pub suite: TestSuite,
    pub diff: CommitDiff,
    pub foms: Vec<Mutant>,
}

impl Fixture {
    pub fn new(name: &str, file: &str, source: String, tests_source: String, diff_text: String) -> Fixture {
        let program = parse_program(&source, file).unwrap();
        let suite = parse_tests(&tests_source, "tests.mlt", program.next_id).unwrap();
        let diff = parse_unified_diff(&diff_text).unwrap();
        let foms = generate_foms(&program, &OperatorSet::all(), &diff);
        Fixture {
            name: name.to_string(),
            source,
            tests_source,
            diff_text,
            program,
            suite,
            diff,
            foms,
        }
    }
}

/// Gives `ms` consecutive ids starting at M1, keeping their order.
pub fn renumber(ms: Vec<Mutant>) -> Vec<Mutant> {
    ms.into_iter()
        .enumerate()
        .map(|(i, mut m)| {
            m.id = MutantId(i as u32 + 1);
            m
        })
        .collect()
}

/// The unique generated mutant matching the description.
pub fn pick(foms: &[Mutant], line: u32, op: Operator, original: &str, mutated: &str) -> Mutant {
    let found: Vec<_> = matching(foms, line, op, original, mutated).collect();
    assert_eq!(found.len(), 1, "line {line} {op} `{original}` => `{mutated}`: {found:?}");
    found[0].clone()
}

fn matching<'a>(
    foms: &'a [Mutant],
    line: u32,
    op: Operator,
    original: &'a str,
    mutated: &'a str,
) -> impl Iterator<Item = &'a Mutant> {
    foms.iter()
        .filter(move |m| m.line() == line && m.operator == op && m.original == original && m.mutated == mutated)
}

/// Leftmost matching mutant on the line, for lines with repeated operands.
pub fn pick_first(foms: &[Mutant], line: u32, op: Operator, original: &str, mutated: &str) -> Mutant {
    matching(foms, line, op, original, mutated)
        .min_by_key(|m| m.span.start_col)
        .unwrap_or_else(|| panic!("no mutant at line {line}"))
        .clone()
}

/// Rightmost matching mutant on the line.
pub fn pick_last(foms: &[Mutant], line: u32, op: Operator, original: &str, mutated: &str) -> Mutant {
    matching(foms, line, op, original, mutated)
        .max_by_key(|m| m.span.start_col)
        .unwrap_or_else(|| panic!("no mutant at line {line}"))
        .clone()
}

pub fn bounded_reader() -> Fixture {
    Fixture::new(
        "bounded_reader",
        "post.ml",
        read("bounded_reader/post.ml"),
        read("bounded_reader/tests.mlt"),
        read("bounded_reader/commit.diff"),
    )
}

/// The four mutants from the worked example, as M1..M4.
pub fn bounded_reader_mutants(fx: &Fixture) -> Vec<Mutant> {
    renumber(vec![
        pick(&fx.foms, 142, Operator::Ror, "i == 0", "i != 0"),
        pick(&fx.foms, 139, Operator::Crcr, "len", "0"),
        // the loop condition, not the step
        pick_first(&fx.foms, 139, Operator::Uoi, "i", "++i"),
        pick(&fx.foms, 140, Operator::Sdl, "c = stream_read(src, n);", ";"),
    ])
}

pub fn simple(variant: &str) -> Fixture {
    Fixture::new(
        variant,
        &format!("{variant}.ml"),
        read(&format!("simple/{variant}.ml")),
        read("simple/tests.mlt"),
        read(&format!("simple/{variant}.diff")),
    )
}

// ---------------------------------------------------------------------------
// Random fixtures

struct Gen {
    rng: ChaCha8Rng,
}

const ARITH: [&str; 5] = ["+", "-", "*", "/", "%"];
const BITS: [&str; 3] = ["&", "|", "^"];
const REL: [&str; 6] = ["<", "<=", ">", ">=", "==", "!="];

impl Gen {
    fn atom(&mut self, scope: &[&str]) -> String {
        if self.rng.gen_bool(0.6) {
            scope.choose(&mut self.rng).unwrap().to_string()
        } else {
            self.rng.gen_range(-3..=6).to_string()
        }
    }

    fn expr(&mut self, scope: &[&str], depth: u32) -> String {
        if depth == 0 || self.rng.gen_bool(0.35) {
            let a = self.atom(scope);
            return if !a.starts_with('-') && self.rng.gen_bool(0.1) {
                format!("-{a}")
            } else {
                a
            };
        }
        let op = if self.rng.gen_bool(0.8) {
            *ARITH.choose(&mut self.rng).unwrap()
        } else {
            *BITS.choose(&mut self.rng).unwrap()
        };
        format!("({} {op} {})", self.expr(scope, depth - 1), self.expr(scope, depth - 1))
    }

    fn cond(&mut self, scope: &[&str]) -> String {
        let rel = REL.choose(&mut self.rng).unwrap();
        let base = format!("{} {rel} {}", self.expr(scope, 1), self.expr(scope, 1));
        if self.rng.gen_bool(0.2) {
            let rel2 = REL.choose(&mut self.rng).unwrap();
            format!("{base} && {} {rel2} {}", self.atom(scope), self.atom(scope))
        } else {
            base
        }
    }

    fn statement(&mut self, scope: &[&str]) -> String {
        let target = ["x", "y"].choose(&mut self.rng).unwrap();
        match self.rng.gen_range(0..7) {
            0 | 1 => format!("{target} = {};", self.expr(scope, 2)),
            2 => format!(
                "if ({}) {{ x = {}; }} else {{ y = {}; }}",
                self.cond(scope),
                self.expr(scope, 1),
                self.expr(scope, 1)
            ),
            3 => format!(
                "for (let i = 0; i < {}; i = i + 1) {{ {target} = {target} + {}; }}",
                self.rng.gen_range(1..=3),
                self.expr(&[scope, &["i"]].concat(), 1)
            ),
            4 => format!("{target} = g({});", self.expr(scope, 1)),
            5 => format!("w[{}] = {};", self.rng.gen_range(0..3), self.expr(scope, 1)),
            _ => format!("{target} = {target} + sort(w)[{}];", self.rng.gen_range(0..3)),
        }
    }
}

fn probe(program: &ProgramUnit, call: &str, budget: u64) -> Option<String> {
    let text = format!("fn test_probe() {{ assert_eq(0, {call}); }}");
    let suite = parse_tests(&text, "probe.mlt", program.next_id).ok()?;
    let rec = run_test(program, &suite, &suite.tests[0], budget);
    match rec.outcome {
        Outcome::Pass | Outcome::AssertionFailure => rec.assertion_records.first().map(|r| r.actual.to_string()),
        _ => None,
    }
}

pub const RANDOM_BUDGET: u64 = 20_000;

/// A small random subject, a green suite built from baseline outputs, and a
/// diff marking one or two statements of `f` as changed. Catalogs above
/// `max_foms` are subsampled.
pub fn random_fixture(seed: u64, max_foms: usize, max_tests: usize) -> Fixture {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    let (source, tests, diff) = loop {
        if let Some(parts) = attempt(&mut g, max_tests) {
            break parts;
        }
    };

    let mut fx = Fixture::new(&format!("random-{seed}"), "gen.ml", source, tests, diff);
    if fx.foms.len() > max_foms {
        let (on, out): (Vec<_>, Vec<_>) = fx.foms.iter().cloned().partition(|m| m.is_on_change());
        let mut keep: Vec<Mutant> = on.into_iter().take(max_foms / 4).collect();
        let mut out = out;
        out.shuffle(&mut g.rng);
        out.truncate(max_foms - keep.len());
        keep.extend(out);
        keep.sort_by_key(|m| m.id);
        fx.foms = renumber(keep);
    }
    fx
}

fn attempt(g: &mut Gen, max_tests: usize) -> Option<(String, String, String)> {
    let mut lines = vec![
        "fn g(p) {".to_string(),
        format!("    let q = {};", g.expr(&["p"], 2)),
        format!("    return {};", g.expr(&["p", "q"], 1)),
        "}".to_string(),
        "fn f(a, b, c) {".to_string(),
    ];
    let scope = ["a", "b", "c", "x", "y"];
    lines.push(format!("    let x = {};", g.expr(&["a", "b", "c"], 2)));
    lines.push(format!("    let y = {};", g.expr(&["a", "b", "c", "x"], 2)));
    lines.push("    let w = [a, b, c];".to_string());
    let body_start = lines.len() + 1;
    for _ in 0..g.rng.gen_range(3..=5) {
        lines.push(format!("    {}", g.statement(&scope)));
    }
    let body_end = lines.len();
    lines.push(format!("    return {};", g.expr(&scope, 1)));
    lines.push("}".to_string());
    let source = lines.join("\n") + "\n";
    let program = parse_program(&source, "gen.ml").unwrap();

    let n_tests = g.rng.gen_range(2..=max_tests);
    let mut tests = String::new();
    let mut made = 0;
    let mut attempts = 0;
    while made < n_tests && attempts < 40 {
        attempts += 1;
        let mut asserts = Vec::new();
        for k in 0..g.rng.gen_range(1..=3) {
            let call = if k == 2 {
                format!("g({})", g.rng.gen_range(-5..=9))
            } else {
                let args: Vec<String> = (0..3).map(|_| g.rng.gen_range(-4..=9).to_string()).collect();
                format!("f({})", args.join(", "))
            };
            if let Some(v) = probe(&program, &call, RANDOM_BUDGET) {
                asserts.push(format!("    assert_eq({v}, {call});"));
            }
        }
        if asserts.is_empty() {
            continue;
        }
        made += 1;
        tests.push_str(&format!("fn test_{made}() {{\n{}\n}}\n", asserts.join("\n")));
    }

    let mut changed: Vec<usize> = (body_start..=body_end).collect();
    changed.shuffle(&mut g.rng);
    changed.truncate(g.rng.gen_range(1..=2));
    changed.sort();
    let mut diff = String::from("--- a/gen.ml\n+++ b/gen.ml\n");
    for l in &changed {
        diff.push_str(&format!("@@ -{l} +{l} @@\n-    // before\n+{}\n", lines[l - 1]));
    }

    (made >= 2).then_some((source, tests, diff))
}

pub fn random_fixtures(n: u64) -> Vec<Fixture> {
    (0..n).map(|s| random_fixture(1000 + s, 50, 10)).collect()
}

// ---------------------------------------------------------------------------
// Brute-force relevance oracle: re-executes from printed source, no matrix.

#[derive(Debug, PartialEq, Eq)]
pub struct OracleVerdict {
    pub relevant_outside: BTreeSet<MutantId>,
    pub relevant_on_change: BTreeSet<MutantId>,
    pub not_relevant: BTreeSet<MutantId>,
}

fn from_source(p: &ProgramUnit) -> ProgramUnit {
    parse_program(&print_program(p), &p.file).expect("mutant source re-parses")
}

fn run_all(p: &ProgramUnit, suite: &TestSuite, budget: u64) -> Vec<TestExecutionRecord> {
    suite.tests.iter().map(|t| run_test(p, suite, t, budget)).collect()
}

fn actuals(recs: &[TestExecutionRecord]) -> BTreeMap<String, String> {
    recs.iter()
        .flat_map(|r| r.assertion_records.iter())
        .map(|a| (a.assertion_id.clone(), a.actual.to_string()))
        .collect()
}

pub fn brute_force(fx: &Fixture, budget: u64) -> OracleVerdict {
    let runs: BTreeMap<MutantId, Vec<TestExecutionRecord>> = fx
        .foms
        .iter()
        .map(|m| (m.id, run_all(&from_source(&apply_mutant(&fx.program, m).unwrap()), &fx.suite, budget)))
        .collect();
    let mut v = OracleVerdict {
        relevant_outside: BTreeSet::new(),
        relevant_on_change: BTreeSet::new(),
        not_relevant: BTreeSet::new(),
    };
    for x in &fx.foms {
        if x.is_on_change() {
            if runs[&x.id].iter().any(|r| r.outcome != Outcome::Pass) {
                v.relevant_on_change.insert(x.id);
            } else {
                v.not_relevant.insert(x.id);
            }
            continue;
        }
        let xv = actuals(&runs[&x.id]);
        let mut relevant = false;
        for y in fx.foms.iter().filter(|y| y.is_on_change() && y.target != x.target) {
            let yv = actuals(&runs[&y.id]);
            let xy = from_source(&apply_hom(&fx.program, x, y).unwrap());
            let xyv = actuals(&run_all(&xy, &fx.suite, budget));
            for (aid, xyval) in &xyv {
                if let (Some(a), Some(b)) = (xv.get(aid), yv.get(aid)) {
                    if a != xyval && b != xyval {
                        relevant = true;
                    }
                }
            }
        }
        if relevant {
            v.relevant_outside.insert(x.id);
        } else {
            v.not_relevant.insert(x.id);
        }
    }
    v
}
