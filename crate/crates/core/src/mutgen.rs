//! First-order mutant generation and second-order pairing.

use crate::diffmap::{CommitDiff, LocationClass};
use crate::{Error, Result};
use cam_minilang::{
    print_expr, print_stmt_inline, BinOp, Expr, ExprKind, Node, NodeId, ProgramUnit, Span, Stmt,
    StmtKind, UnOp,
};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

/// Mutation operator families, in generation order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Operator {
    #[serde(rename = "ROR")]
    Ror,
    #[serde(rename = "AOR")]
    Aor,
    #[serde(rename = "UOI")]
    Uoi,
    #[serde(rename = "CRCR")]
    Crcr,
    #[serde(rename = "OBBN")]
    Obbn,
    #[serde(rename = "InvertNegs")]
    InvertNegs,
    #[serde(rename = "SDL")]
    Sdl,
}

impl Operator {
    pub const ALL: [Operator; 7] = [
        Operator::Ror,
        Operator::Aor,
        Operator::Uoi,
        Operator::Crcr,
        Operator::Obbn,
        Operator::InvertNegs,
        Operator::Sdl,
    ];

    pub fn cli_name(self) -> &'static str {
        match self {
            Operator::Ror => "ror",
            Operator::Aor => "aor",
            Operator::Uoi => "uoi",
            Operator::Crcr => "crcr",
            Operator::Obbn => "obbn",
            Operator::InvertNegs => "invneg",
            Operator::Sdl => "sdl",
        }
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Operator::Ror => "ROR",
            Operator::Aor => "AOR",
            Operator::Uoi => "UOI",
            Operator::Crcr => "CRCR",
            Operator::Obbn => "OBBN",
            Operator::InvertNegs => "InvertNegs",
            Operator::Sdl => "SDL",
        })
    }
}

impl FromStr for Operator {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        Operator::ALL
            .into_iter()
            .find(|o| o.cli_name() == s || o.to_string().to_ascii_lowercase() == s)
            .ok_or_else(|| format!("unknown mutation operator `{s}`"))
    }
}

/// Sorted, duplicate-free set of operators.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatorSet(Vec<Operator>);

impl OperatorSet {
    pub fn all() -> Self {
        OperatorSet(Operator::ALL.to_vec())
    }

    pub fn new(ops: impl IntoIterator<Item = Operator>) -> Self {
        let mut v: Vec<_> = ops.into_iter().collect();
        v.sort();
        v.dedup();
        OperatorSet(v)
    }

    pub fn contains(&self, op: Operator) -> bool {
        self.0.contains(&op)
    }

    pub fn iter(&self) -> impl Iterator<Item = Operator> + '_ {
        self.0.iter().copied()
    }
}

impl Default for OperatorSet {
    fn default() -> Self {
        Self::all()
    }
}

impl FromStr for OperatorSet {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        s.split(',')
            .filter(|p| !p.trim().is_empty())
            .map(str::parse)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(OperatorSet::new)
    }
}

macro_rules! prefixed_id {
    ($name:ident, $prefix:literal) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
                s.strip_prefix($prefix)
                    .and_then(|n| n.parse().ok())
                    .map($name)
                    .ok_or_else(|| format!(concat!("invalid id `{}`, expected ", $prefix, "<n>"), s))
            }
        }

        impl Serialize for $name {
            fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

prefixed_id!(MutantId, "M");
prefixed_id!(HomId, "H");

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Replacement {
    BinaryOp(BinOp),
    /// Replace an integer literal (or an integer variable operand) by a
    /// constant.
    Literal(i64),
    PreIncrement,
    PreDecrement,
    RemoveNegation,
    DeleteStatement,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mutant {
    pub id: MutantId,
    pub operator: Operator,
    pub target: NodeId,
    /// Innermost statement enclosing the target.
    pub statement: NodeId,
    pub replacement: Replacement,
    pub file: String,
    pub span: Span,
    pub location: LocationClass,
    pub original: String,
    pub mutated: String,
}

impl Mutant {
    pub fn line(&self) -> u32 {
        self.span.start_line
    }

    pub fn is_on_change(&self) -> bool {
        self.location == LocationClass::OnChange
    }
}

/// Second-order mutant: `x` outside the change, `y` on it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HomPair {
    pub id: HomId,
    pub x: MutantId,
    pub y: MutantId,
}

fn crcr_menu(c: i64) -> Vec<i64> {
    let mut out = Vec::new();
    for v in [0, 1, -1, c.wrapping_add(1), c.wrapping_sub(1), c.wrapping_neg()] {
        if v != c && !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

fn candidate_replacements(node: Node<'_>, parent: Option<Node<'_>>, op: Operator) -> Vec<Replacement> {
    match (op, node) {
        (Operator::Ror, Node::Expr(e)) => match e.kind {
            ExprKind::Binary(b, ..) if b.is_relational() => BinOp::RELATIONAL
                .into_iter()
                .filter(|o| *o != b)
                .map(Replacement::BinaryOp)
                .collect(),
            _ => vec![],
        },
        (Operator::Aor, Node::Expr(e)) => match e.kind {
            ExprKind::Binary(b, ..) if b.is_arithmetic() => BinOp::ARITHMETIC
                .into_iter()
                .filter(|o| *o != b)
                .map(Replacement::BinaryOp)
                .collect(),
            _ => vec![],
        },
        (Operator::Uoi, Node::Expr(e)) => match e.kind {
            ExprKind::Var(_) if !array_context(e, parent) => {
                vec![Replacement::PreIncrement, Replacement::PreDecrement]
            }
            _ => vec![],
        },
        (Operator::Crcr, Node::Expr(e)) => match e.kind {
            ExprKind::Int(c) => crcr_menu(c).into_iter().map(Replacement::Literal).collect(),
            ExprKind::Var(_) if ordering_operand(parent) => vec![Replacement::Literal(0)],
            _ => vec![],
        },
        (Operator::Obbn, Node::Expr(e)) => match e.kind {
            ExprKind::Binary(BinOp::BitAnd, ..) => vec![Replacement::BinaryOp(BinOp::BitOr)],
            ExprKind::Binary(BinOp::BitOr, ..) => vec![Replacement::BinaryOp(BinOp::BitAnd)],
            _ => vec![],
        },
        (Operator::InvertNegs, Node::Expr(e)) => match e.kind {
            ExprKind::Unary(UnOp::Neg, _) => vec![Replacement::RemoveNegation],
            _ => vec![],
        },
        (Operator::Sdl, Node::Stmt(s)) => match s.kind {
            StmtKind::Assign(..) | StmtKind::IndexAssign(..) | StmtKind::Expr(_) if !for_header(s, parent) => {
                vec![Replacement::DeleteStatement]
            }
            _ => vec![],
        },
        _ => vec![],
    }
}

/// Variable used as an array: indexed, or passed to an array builtin.
fn array_context(e: &Expr, parent: Option<Node<'_>>) -> bool {
    match parent {
        Some(Node::Expr(p)) => match &p.kind {
            ExprKind::Index(base, _) => base.id == e.id,
            ExprKind::Call(name, _) => name == "sort" || name == "len",
            _ => false,
        },
        _ => false,
    }
}

fn for_header(s: &Stmt, parent: Option<Node<'_>>) -> bool {
    let Some(Node::Stmt(p)) = parent else {
        return false;
    };
    let StmtKind::For { init, step, .. } = &p.kind else {
        return false;
    };
    [init, step].into_iter().flatten().any(|h| h.id == s.id)
}

fn ordering_operand(parent: Option<Node<'_>>) -> bool {
    matches!(parent, Some(Node::Expr(p)) if matches!(p.kind, ExprKind::Binary(b, ..) if b.is_ordering()))
}

fn describe(node: Node<'_>, replacement: &Replacement) -> (String, String) {
    match node {
        Node::Stmt(s) => (print_stmt_inline(s), ";".to_string()),
        Node::Expr(e) => {
            let mut m = e.clone();
            edit_expr(&mut m, replacement);
            (print_expr(e), print_expr(&m))
        }
        Node::Fn(f) => (f.name.clone(), f.name.clone()),
    }
}

/// Generates every first-order mutant of `program` for the chosen operator
/// families, ordered by node id, then operator, then replacement, and
/// classifies each against `diff`.
pub fn generate_foms(program: &ProgramUnit, operators: &OperatorSet, diff: &CommitDiff) -> Vec<Mutant> {
    let mut enclosing: HashMap<NodeId, NodeId> = HashMap::new();
    let mut found: Vec<(NodeId, Operator, Replacement, NodeId, Span, String, String)> = Vec::new();
    program.walk(|node, parent| {
        let stmt = match node {
            Node::Stmt(s) => s.id,
            _ => parent
                .and_then(|p| enclosing.get(&p.id()).copied())
                .unwrap_or(node.id()),
        };
        enclosing.insert(node.id(), stmt);
        for op in operators.iter() {
            for r in candidate_replacements(node, parent, op) {
                let (original, mutated) = describe(node, &r);
                found.push((node.id(), op, r, stmt, node.span(), original, mutated));
            }
        }
    });
    // walk order is pre-order, which is node-id order; keep it explicit
    found.sort_by_key(|(id, op, ..)| (*id, *op));
    found
        .into_iter()
        .enumerate()
        .map(|(i, (target, operator, replacement, statement, span, original, mutated))| Mutant {
            id: MutantId(i as u32 + 1),
            operator,
            target,
            statement,
            replacement,
            file: program.file.clone(),
            span,
            location: diff.classify_line(&program.file, span.start_line),
            original,
            mutated,
        })
        .collect()
}

fn edit_expr(e: &mut Expr, r: &Replacement) -> bool {
    let kind = match (r, &mut e.kind) {
        (Replacement::BinaryOp(new), ExprKind::Binary(op, ..)) => {
            *op = *new;
            return true;
        }
        (Replacement::Literal(v), ExprKind::Int(_) | ExprKind::Var(_)) => ExprKind::Int(*v),
        (Replacement::PreIncrement, ExprKind::Var(name)) => ExprKind::PreIncr(name.clone()),
        (Replacement::PreDecrement, ExprKind::Var(name)) => ExprKind::PreDecr(name.clone()),
        (Replacement::RemoveNegation, ExprKind::Unary(UnOp::Neg, inner)) => {
            let inner = std::mem::replace(inner.as_mut(), placeholder());
            e.span = inner.span;
            inner.kind
        }
        _ => return false,
    };
    e.kind = kind;
    true
}

fn placeholder() -> Expr {
    Expr {
        id: NodeId::default(),
        span: Span::default(),
        kind: ExprKind::Int(0),
    }
}

struct Rewriter<'a> {
    edits: &'a HashMap<NodeId, (MutantId, &'a Replacement)>,
    stale: Option<MutantId>,
}

impl Rewriter<'_> {
    fn expr(&mut self, e: &mut Expr) {
        for c in e.children_mut() {
            self.expr(c);
        }
        if let Some((id, r)) = self.edits.get(&e.id) {
            if !edit_expr(e, r) {
                self.stale.get_or_insert(*id);
            }
        }
    }

    fn stmts(&mut self, b: &mut [Stmt]) {
        for s in b {
            self.stmt(s);
        }
    }

    fn stmt(&mut self, s: &mut Stmt) {
        match &mut s.kind {
            StmtKind::Let(_, e) | StmtKind::Assign(_, e) | StmtKind::Return(e) | StmtKind::Expr(e) => {
                self.expr(e)
            }
            StmtKind::IndexAssign(_, i, v) => {
                self.expr(i);
                self.expr(v);
            }
            StmtKind::AssertEq { expected, actual } => {
                self.expr(expected);
                self.expr(actual);
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                self.expr(cond);
                self.stmts(then_branch);
                if let Some(b) = else_branch {
                    self.stmts(b);
                }
            }
            StmtKind::While { cond, body } => {
                self.expr(cond);
                self.stmts(body);
            }
            StmtKind::For {
                init,
                cond,
                step,
                body,
            } => {
                if let Some(i) = init {
                    self.stmt(i);
                }
                if let Some(c) = cond {
                    self.expr(c);
                }
                if let Some(st) = step {
                    self.stmt(st);
                }
                self.stmts(body);
            }
            StmtKind::Block(b) => self.stmts(b),
            StmtKind::Empty => {}
        }
        if let Some((id, r)) = self.edits.get(&s.id) {
            match r {
                Replacement::DeleteStatement
                    if matches!(s.kind, StmtKind::Assign(..) | StmtKind::IndexAssign(..) | StmtKind::Expr(_)) =>
                {
                    s.kind = StmtKind::Empty
                }
                _ => {
                    self.stale.get_or_insert(*id);
                }
            }
        }
    }
}

/// Applies all edits in one bottom-up pass, so the result does not depend
/// on the order of `mutants`. An edit inside a deleted statement vanishes
/// with it.
fn apply_edits(program: &ProgramUnit, mutants: &[&Mutant]) -> Result<ProgramUnit> {
    let mut edits = HashMap::new();
    for m in mutants {
        if program.find(m.target).is_none() {
            return Err(Error::StaleMutant(m.id));
        }
        if let Some((other, _)) = edits.insert(m.target, (m.id, &m.replacement)) {
            return Err(Error::ConflictingTargets(other, m.id));
        }
    }
    let mut out = program.clone();
    let mut rw = Rewriter {
        edits: &edits,
        stale: None,
    };
    for f in &mut out.functions {
        rw.stmts(&mut f.body);
    }
    match rw.stale {
        Some(id) => Err(Error::StaleMutant(id)),
        None => Ok(out),
    }
}

/// Applies one mutant. Unaffected nodes keep their ids; the mutated node
/// keeps the target id.
pub fn apply_mutant(program: &ProgramUnit, mutant: &Mutant) -> Result<ProgramUnit> {
    apply_edits(program, &[mutant])
}

/// Applies both halves of a second-order mutant.
pub fn apply_hom(program: &ProgramUnit, x: &Mutant, y: &Mutant) -> Result<ProgramUnit> {
    apply_edits(program, &[x, y])
}

/// Pairs every outside-change mutant with every on-change mutant on a
/// different node, x-major. With `cap_per_statement`, at most that many
/// outside-change mutants per statement are kept, sampled with a generator
/// seeded from `rng_seed`.
pub fn pair_homs(foms: &[Mutant], cap_per_statement: Option<usize>, rng_seed: u64) -> Vec<HomPair> {
    let on: Vec<&Mutant> = foms.iter().filter(|m| m.is_on_change()).collect();
    let mut outside: Vec<&Mutant> = foms.iter().filter(|m| !m.is_on_change()).collect();
    if on.is_empty() {
        return Vec::new();
    }

    if let Some(cap) = cap_per_statement {
        let mut groups: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
        for (i, m) in outside.iter().enumerate() {
            groups.entry(m.statement).or_default().push(i);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let mut keep = vec![false; outside.len()];
        for members in groups.values() {
            if members.len() <= cap {
                members.iter().for_each(|&i| keep[i] = true);
            } else {
                for j in sample(&mut rng, members.len(), cap).into_iter() {
                    keep[members[j]] = true;
                }
            }
        }
        let mut k = keep.into_iter();
        outside.retain(|_| k.next().unwrap_or(false));
    }

    let mut pairs = Vec::new();
    for x in &outside {
        for y in &on {
            if x.target != y.target {
                pairs.push(HomPair {
                    id: HomId(pairs.len() as u32 + 1),
                    x: x.id,
                    y: y.id,
                });
            }
        }
    }
    pairs
}
