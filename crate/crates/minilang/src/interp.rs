use crate::ast::*;
use crate::value::Value;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};
use std::fmt;

/// Interpreter steps allowed per test run; one step is one node evaluation.
pub const DEFAULT_STEP_BUDGET: u64 = 100_000;

const MAX_CALL_DEPTH: usize = 200;

/// `<test name>#<ordinal>`, ordinals starting at 1 in source order.
pub type AssertionId = String;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TestCase {
    pub name: String,
    /// Node ids of the assertion statements, in source order.
    pub sites: Vec<NodeId>,
    pub assertion_ids: Vec<AssertionId>,
}

impl TestCase {
    pub(crate) fn new(name: String, sites: Vec<NodeId>) -> Self {
        let assertion_ids = (1..=sites.len()).map(|i| format!("{name}#{i}")).collect();
        TestCase {
            name,
            sites,
            assertion_ids,
        }
    }
}

/// A parsed test file together with its test cases, in file order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TestSuite {
    pub unit: ProgramUnit,
    pub tests: Vec<TestCase>,
}

impl TestSuite {
    /// Rejects helper or test functions whose names clash with the subject.
    pub fn check_against(&self, program: &ProgramUnit) -> Result<()> {
        for f in &self.unit.functions {
            if program.function(&f.name).is_some() {
                return Err(Error::DuplicateFunction {
                    name: f.name.clone(),
                    file: self.unit.file.clone(),
                    line: f.span.start_line,
                });
            }
        }
        Ok(())
    }

    pub fn test(&self, name: &str) -> Option<&TestCase> {
        self.tests.iter().find(|t| t.name == name)
    }

    pub fn assertion_ids(&self) -> impl Iterator<Item = &AssertionId> {
        self.tests.iter().flat_map(|t| t.assertion_ids.iter())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ErrorKind {
    DivisionByZero,
    IndexOutOfBounds,
    TypeError,
    UndefinedVariable,
    UndefinedFunction,
    ArityMismatch,
    StackOverflow,
}

impl ErrorKind {
    pub const ALL: [ErrorKind; 7] = [
        ErrorKind::DivisionByZero,
        ErrorKind::IndexOutOfBounds,
        ErrorKind::TypeError,
        ErrorKind::UndefinedVariable,
        ErrorKind::UndefinedFunction,
        ErrorKind::ArityMismatch,
        ErrorKind::StackOverflow,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ErrorKind::DivisionByZero => "DivisionByZero",
            ErrorKind::IndexOutOfBounds => "IndexOutOfBounds",
            ErrorKind::TypeError => "TypeError",
            ErrorKind::UndefinedVariable => "UndefinedVariable",
            ErrorKind::UndefinedFunction => "UndefinedFunction",
            ErrorKind::ArityMismatch => "ArityMismatch",
            ErrorKind::StackOverflow => "StackOverflow",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Pass,
    AssertionFailure,
    RuntimeError(ErrorKind),
    Timeout,
}

impl Outcome {
    pub fn is_pass(&self) -> bool {
        matches!(self, Outcome::Pass)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssertionRecord {
    pub assertion_id: AssertionId,
    pub expected: Value,
    pub actual: Value,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestExecutionRecord {
    pub test: String,
    pub outcome: Outcome,
    /// Assertions whose operands were fully evaluated, in execution order.
    pub assertion_records: Vec<AssertionRecord>,
    /// Assertion during whose operand evaluation a runtime error or timeout
    /// occurred.
    pub interrupted_assertion: Option<AssertionId>,
    pub covered_node_ids: BTreeSet<NodeId>,
}

impl TestExecutionRecord {
    pub fn covers(&self, id: NodeId) -> bool {
        self.covered_node_ids.contains(&id)
    }
}

/// Runs one test case against `program`, linking the suite's helper
/// functions. Deterministic for identical inputs.
///
/// Panics if `step_budget` is zero.
pub fn run_test(
    program: &ProgramUnit,
    suite: &TestSuite,
    test: &TestCase,
    step_budget: u64,
) -> TestExecutionRecord {
    assert!(step_budget > 0, "step budget must be positive");
    let mut fns: HashMap<&str, &FnDef> = HashMap::new();
    for f in suite.unit.functions.iter().chain(program.functions.iter()) {
        // subject functions win on a clash
        fns.insert(f.name.as_str(), f);
    }
    let id_space = program.next_id.max(suite.unit.next_id) as usize;
    let mut m = Machine {
        fns,
        steps: 0,
        budget: step_budget,
        covered: vec![false; id_space],
        depth: 0,
    };

    let mut records = Vec::new();
    let mut interrupted = None;
    let outcome = match suite.unit.function(&test.name) {
        None => Outcome::RuntimeError(ErrorKind::UndefinedFunction),
        Some(def) => m.run_test_body(def, test, &mut records, &mut interrupted),
    };

    let covered_node_ids = m
        .covered
        .iter()
        .enumerate()
        .filter(|(_, c)| **c)
        .map(|(i, _)| NodeId(i as u32))
        .collect();
    TestExecutionRecord {
        test: test.name.clone(),
        outcome,
        assertion_records: records,
        interrupted_assertion: interrupted,
        covered_node_ids,
    }
}

enum Fault {
    Error(ErrorKind),
    Timeout,
}

impl From<ErrorKind> for Fault {
    fn from(k: ErrorKind) -> Self {
        Fault::Error(k)
    }
}

impl Fault {
    fn outcome(&self) -> Outcome {
        match self {
            Fault::Error(k) => Outcome::RuntimeError(*k),
            Fault::Timeout => Outcome::Timeout,
        }
    }
}

enum Flow {
    Normal,
    Return(Value),
}

type Eval<T> = std::result::Result<T, Fault>;

#[derive(Default)]
struct Frame {
    scopes: Vec<Vec<(String, Value)>>,
}

impl Frame {
    fn with_root() -> Self {
        Frame {
            scopes: vec![Vec::new()],
        }
    }

    fn declare(&mut self, name: &str, v: Value) {
        self.scopes
            .last_mut()
            .expect("frame has a scope")
            .push((name.to_string(), v));
    }

    fn slot(&mut self, name: &str) -> Option<&mut Value> {
        self.scopes
            .iter_mut()
            .rev()
            .flat_map(|s| s.iter_mut().rev())
            .find(|(n, _)| n == name)
            .map(|(_, v)| v)
    }
}

struct Machine<'a> {
    fns: HashMap<&'a str, &'a FnDef>,
    steps: u64,
    budget: u64,
    covered: Vec<bool>,
    depth: usize,
}

fn int(v: Value) -> Eval<i64> {
    match v {
        Value::Int(i) => Ok(i),
        _ => Err(ErrorKind::TypeError.into()),
    }
}

fn boolean(v: Value) -> Eval<bool> {
    match v {
        Value::Bool(b) => Ok(b),
        _ => Err(ErrorKind::TypeError.into()),
    }
}

impl<'a> Machine<'a> {
    fn tick(&mut self, id: NodeId) -> Eval<()> {
        if let Some(c) = self.covered.get_mut(id.0 as usize) {
            *c = true;
        }
        self.steps += 1;
        if self.steps > self.budget {
            return Err(Fault::Timeout);
        }
        Ok(())
    }

    fn run_test_body(
        &mut self,
        def: &'a FnDef,
        test: &TestCase,
        records: &mut Vec<AssertionRecord>,
        interrupted: &mut Option<AssertionId>,
    ) -> Outcome {
        let mut frame = Frame::with_root();
        if let Err(f) = self.tick(def.id) {
            return f.outcome();
        }
        let mut site = 0usize;
        for stmt in &def.body {
            if let StmtKind::AssertEq { expected, actual } = &stmt.kind {
                let id = test.assertion_ids[site].clone();
                site += 1;
                let evaluated = self
                    .tick(stmt.id)
                    .and_then(|_| Ok((self.expr(expected, &mut frame)?, self.expr(actual, &mut frame)?)));
                match evaluated {
                    Err(f) => {
                        *interrupted = Some(id);
                        return f.outcome();
                    }
                    Ok((e, a)) => {
                        let holds = e == a;
                        records.push(AssertionRecord {
                            assertion_id: id,
                            expected: e,
                            actual: a,
                        });
                        if !holds {
                            return Outcome::AssertionFailure;
                        }
                    }
                }
            } else if let Err(f) = self.stmt(stmt, &mut frame) {
                return f.outcome();
            }
        }
        Outcome::Pass
    }

    fn call(&mut self, name: &str, args: Vec<Value>) -> Eval<Value> {
        if let Some(def) = self.fns.get(name).copied() {
            if def.params.len() != args.len() {
                return Err(ErrorKind::ArityMismatch.into());
            }
            if self.depth >= MAX_CALL_DEPTH {
                return Err(ErrorKind::StackOverflow.into());
            }
            self.tick(def.id)?;
            let mut frame = Frame::with_root();
            for (p, a) in def.params.iter().zip(args) {
                frame.declare(p, a);
            }
            self.depth += 1;
            let flow = self.stmts(&def.body, &mut frame);
            self.depth -= 1;
            return match flow? {
                Flow::Return(v) => Ok(v),
                Flow::Normal => Ok(Value::Int(0)),
            };
        }
        match (name, args.as_slice()) {
            ("sort", [Value::IntArray(items)]) => {
                let mut sorted = items.clone();
                sorted.sort_unstable();
                Ok(Value::IntArray(sorted))
            }
            ("len", [Value::IntArray(items)]) => Ok(Value::Int(items.len() as i64)),
            ("sort" | "len", [_]) => Err(ErrorKind::TypeError.into()),
            ("sort" | "len", _) => Err(ErrorKind::ArityMismatch.into()),
            _ => Err(ErrorKind::UndefinedFunction.into()),
        }
    }

    fn stmts(&mut self, body: &'a [Stmt], frame: &mut Frame) -> Eval<Flow> {
        frame.scopes.push(Vec::new());
        let mut result = Ok(Flow::Normal);
        for s in body {
            match self.stmt(s, frame) {
                Ok(Flow::Normal) => {}
                other => {
                    result = other;
                    break;
                }
            }
        }
        frame.scopes.pop();
        result
    }

    fn stmt(&mut self, s: &'a Stmt, frame: &mut Frame) -> Eval<Flow> {
        self.tick(s.id)?;
        match &s.kind {
            StmtKind::Let(name, e) => {
                let v = self.expr(e, frame)?;
                frame.declare(name, v);
            }
            StmtKind::Assign(name, e) => {
                let v = self.expr(e, frame)?;
                *frame.slot(name).ok_or(ErrorKind::UndefinedVariable)? = v;
            }
            StmtKind::IndexAssign(name, idx, e) => {
                let i = int(self.expr(idx, frame)?)?;
                let v = int(self.expr(e, frame)?)?;
                match frame.slot(name).ok_or(ErrorKind::UndefinedVariable)? {
                    Value::IntArray(items) => {
                        let slot = usize::try_from(i)
                            .ok()
                            .and_then(|i| items.get_mut(i))
                            .ok_or(ErrorKind::IndexOutOfBounds)?;
                        *slot = v;
                    }
                    _ => return Err(ErrorKind::TypeError.into()),
                }
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                if boolean(self.expr(cond, frame)?)? {
                    return self.stmts(then_branch, frame);
                } else if let Some(b) = else_branch {
                    return self.stmts(b, frame);
                }
            }
            StmtKind::While { cond, body } => {
                while boolean(self.expr(cond, frame)?)? {
                    if let Flow::Return(v) = self.stmts(body, frame)? {
                        return Ok(Flow::Return(v));
                    }
                }
            }
            StmtKind::For {
                init,
                cond,
                step,
                body,
            } => {
                frame.scopes.push(Vec::new());
                let r = self.for_loop(init.as_deref(), cond.as_ref(), step.as_deref(), body, frame);
                frame.scopes.pop();
                return r;
            }
            StmtKind::Return(e) => return Ok(Flow::Return(self.expr(e, frame)?)),
            StmtKind::AssertEq { .. } => {
                // rejected by the test loader outside test bodies
                return Err(ErrorKind::TypeError.into());
            }
            StmtKind::Expr(e) => {
                self.expr(e, frame)?;
            }
            StmtKind::Block(b) => return self.stmts(b, frame),
            StmtKind::Empty => {}
        }
        Ok(Flow::Normal)
    }

    fn for_loop(
        &mut self,
        init: Option<&'a Stmt>,
        cond: Option<&'a Expr>,
        step: Option<&'a Stmt>,
        body: &'a [Stmt],
        frame: &mut Frame,
    ) -> Eval<Flow> {
        if let Some(i) = init {
            self.stmt(i, frame)?;
        }
        loop {
            if let Some(c) = cond {
                if !boolean(self.expr(c, frame)?)? {
                    break;
                }
            }
            if let Flow::Return(v) = self.stmts(body, frame)? {
                return Ok(Flow::Return(v));
            }
            if let Some(st) = step {
                self.stmt(st, frame)?;
            }
        }
        Ok(Flow::Normal)
    }

    fn expr(&mut self, e: &'a Expr, frame: &mut Frame) -> Eval<Value> {
        self.tick(e.id)?;
        Ok(match &e.kind {
            ExprKind::Int(v) => Value::Int(*v),
            ExprKind::Bool(b) => Value::Bool(*b),
            ExprKind::Var(name) => frame.slot(name).ok_or(ErrorKind::UndefinedVariable)?.clone(),
            ExprKind::PreIncr(name) | ExprKind::PreDecr(name) => {
                let delta = if matches!(e.kind, ExprKind::PreIncr(_)) { 1 } else { -1 };
                match frame.slot(name).ok_or(ErrorKind::UndefinedVariable)? {
                    Value::Int(v) => {
                        *v = v.wrapping_add(delta);
                        Value::Int(*v)
                    }
                    _ => return Err(ErrorKind::TypeError.into()),
                }
            }
            ExprKind::Unary(UnOp::Neg, inner) => Value::Int(int(self.expr(inner, frame)?)?.wrapping_neg()),
            ExprKind::Unary(UnOp::Not, inner) => Value::Bool(!boolean(self.expr(inner, frame)?)?),
            ExprKind::Binary(BinOp::And, l, r) => {
                let lv = boolean(self.expr(l, frame)?)?;
                Value::Bool(lv && boolean(self.expr(r, frame)?)?)
            }
            ExprKind::Binary(BinOp::Or, l, r) => {
                let lv = boolean(self.expr(l, frame)?)?;
                Value::Bool(lv || boolean(self.expr(r, frame)?)?)
            }
            ExprKind::Binary(op, l, r) => {
                let lv = self.expr(l, frame)?;
                let rv = self.expr(r, frame)?;
                binary(*op, lv, rv)?
            }
            ExprKind::Call(name, args) => {
                let mut values = Vec::with_capacity(args.len());
                for a in args {
                    values.push(self.expr(a, frame)?);
                }
                self.call(name, values)?
            }
            ExprKind::Index(base, idx) => {
                let b = self.expr(base, frame)?;
                let i = int(self.expr(idx, frame)?)?;
                match b {
                    Value::IntArray(items) => usize::try_from(i)
                        .ok()
                        .and_then(|i| items.get(i).copied())
                        .map(Value::Int)
                        .ok_or(ErrorKind::IndexOutOfBounds)?,
                    _ => return Err(ErrorKind::TypeError.into()),
                }
            }
            ExprKind::Array(items) => {
                let mut out = Vec::with_capacity(items.len());
                for item in items {
                    out.push(int(self.expr(item, frame)?)?);
                }
                Value::IntArray(out)
            }
        })
    }
}

fn binary(op: BinOp, l: Value, r: Value) -> Eval<Value> {
    use BinOp::*;
    Ok(match op {
        Eq | Ne => {
            if std::mem::discriminant(&l) != std::mem::discriminant(&r) {
                return Err(ErrorKind::TypeError.into());
            }
            Value::Bool((l == r) == (op == Eq))
        }
        BitAnd | BitOr | BitXor => match (l, r) {
            (Value::Int(a), Value::Int(b)) => Value::Int(match op {
                BitAnd => a & b,
                BitOr => a | b,
                _ => a ^ b,
            }),
            (Value::Bool(a), Value::Bool(b)) => Value::Bool(match op {
                BitAnd => a & b,
                BitOr => a | b,
                _ => a ^ b,
            }),
            _ => return Err(ErrorKind::TypeError.into()),
        },
        _ => {
            let (a, b) = (int(l)?, int(r)?);
            match op {
                Add => Value::Int(a.wrapping_add(b)),
                Sub => Value::Int(a.wrapping_sub(b)),
                Mul => Value::Int(a.wrapping_mul(b)),
                Div | Rem if b == 0 => return Err(ErrorKind::DivisionByZero.into()),
                Div => Value::Int(a.wrapping_div(b)),
                Rem => Value::Int(a.wrapping_rem(b)),
                Lt => Value::Bool(a < b),
                Le => Value::Bool(a <= b),
                Gt => Value::Bool(a > b),
                Ge => Value::Bool(a >= b),
                Eq | Ne | And | Or | BitAnd | BitOr | BitXor => unreachable!(),
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{parse_program, parse_tests};

    fn run(src: &str, tests: &str, budget: u64) -> Vec<TestExecutionRecord> {
        let p = parse_program(src, "p.ml").unwrap();
        let s = parse_tests(tests, "t.mlt", p.next_id).unwrap();
        s.tests.iter().map(|t| run_test(&p, &s, t, budget)).collect()
    }

    #[test]
    fn trivial_pass() {
        let r = run("fn f(){return 0;}", "fn test_f() { assert_eq(0, f()); }", 1000);
        assert_eq!(r[0].outcome, Outcome::Pass);
        assert_eq!(r[0].assertion_records.len(), 1);
        assert_eq!(r[0].assertion_records[0].expected, Value::Int(0));
        assert_eq!(r[0].assertion_records[0].actual, Value::Int(0));
        assert_eq!(r[0].assertion_records[0].assertion_id, "test_f#1");
    }

    #[test]
    fn infinite_loop_times_out() {
        let r = run(
            "fn f(){ while (true) { } return 0; }",
            "fn test_f() { assert_eq(0, f()); }",
            DEFAULT_STEP_BUDGET,
        );
        assert_eq!(r[0].outcome, Outcome::Timeout);
        assert_eq!(r[0].interrupted_assertion.as_deref(), Some("test_f#1"));
        assert!(r[0].assertion_records.is_empty());
    }

    #[test]
    fn failure_stops_execution() {
        let r = run(
            "fn f(x){return x;}",
            "fn test_f() { assert_eq(1, f(2)); assert_eq(2, f(2)); }",
            1000,
        );
        assert_eq!(r[0].outcome, Outcome::AssertionFailure);
        assert_eq!(r[0].assertion_records.len(), 1);
    }

    #[test]
    fn runtime_errors() {
        let cases = [
            ("fn f(x){return 1 / x;}", ErrorKind::DivisionByZero),
            ("fn f(x){return 1 % x;}", ErrorKind::DivisionByZero),
            ("fn f(x){let a = [1]; return a[x + 1];}", ErrorKind::IndexOutOfBounds),
            ("fn f(x){return f(x);}", ErrorKind::StackOverflow),
            ("fn f(x){return y;}", ErrorKind::UndefinedVariable),
            ("fn f(x){return x + true;}", ErrorKind::TypeError),
        ];
        for (src, kind) in cases {
            let r = run(src, "fn test_f() { assert_eq(0, f(0)); }", DEFAULT_STEP_BUDGET);
            assert_eq!(r[0].outcome, Outcome::RuntimeError(kind), "{src}");
        }
    }

    #[test]
    fn error_between_assertions_is_not_attributed() {
        let r = run(
            "fn f(x){return 10 / x;}",
            "fn test_f() { assert_eq(5, f(2)); let y = f(0); assert_eq(1, 1); }",
            1000,
        );
        assert_eq!(r[0].outcome, Outcome::RuntimeError(ErrorKind::DivisionByZero));
        assert_eq!(r[0].interrupted_assertion, None);
        assert_eq!(r[0].assertion_records.len(), 1);
    }

    #[test]
    fn wrapping_and_semantics() {
        let src = "fn f() { let m = 9223372036854775807; return m + 1; }\n\
                   fn g() { let a = sort([3, 1, 2]); a[0] = 7; return a; }\n\
                   fn h() { let i = 0; let s = 0; for (let j = 0; j < 5; j = j + 1) { s = s + ++i; } return s; }\n\
                   fn k() { return (6 & 3) + (6 | 3) + (6 ^ 3) + -7 / 2 + -7 % 2; }";
        let tests = "fn test_a() { assert_eq(-9223372036854775808, f()); assert_eq([7, 2, 3], g()); \
                     assert_eq(15, h()); assert_eq(2 + 7 + 5 - 3 - 1, k()); assert_eq(3, len(g())); }";
        let r = run(src, tests, 10_000);
        assert_eq!(r[0].outcome, Outcome::Pass, "{:?}", r[0]);
    }

    #[test]
    fn coverage_and_determinism() {
        let src = "fn f(x){ if (x > 0) { return 1; } return 2; }";
        let p = parse_program(src, "p.ml").unwrap();
        let s = parse_tests("fn test_f() { assert_eq(2, f(0)); }", "t.mlt", p.next_id).unwrap();
        let a = run_test(&p, &s, &s.tests[0], 1000);
        let b = run_test(&p, &s, &s.tests[0], 1000);
        assert_eq!(a, b);
        let StmtKind::If { then_branch, .. } = &p.functions[0].body[0].kind else { panic!() };
        assert!(!a.covers(then_branch[0].id));
        assert!(a.covers(p.functions[0].body[1].id));
        assert!(a.covers(s.tests[0].sites[0]));
    }
}
