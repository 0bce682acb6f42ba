use serde::{Deserialize, Serialize};
use std::fmt;

/// Stable identifier of an AST node, assigned in pre-order at parse time.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Source region of a node. Lines and columns are 1-based; `end_col` is
/// exclusive.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start_line: u32,
    pub start_col: u32,
    pub end_line: u32,
    pub end_col: u32,
}

impl Span {
    pub fn new(start_line: u32, start_col: u32, end_line: u32, end_col: u32) -> Self {
        Span {
            start_line,
            start_col,
            end_line,
            end_col,
        }
    }

    pub fn to(self, end: Span) -> Span {
        Span {
            start_line: self.start_line,
            start_col: self.start_col,
            end_line: end.end_line,
            end_col: end.end_col,
        }
    }

    /// True when `other` lies within `self`.
    pub fn contains(&self, other: &Span) -> bool {
        (self.start_line, self.start_col) <= (other.start_line, other.start_col)
            && (other.end_line, other.end_col) <= (self.end_line, self.end_col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
    BitAnd,
    BitOr,
    BitXor,
}

impl BinOp {
    pub const RELATIONAL: [BinOp; 6] = [
        BinOp::Lt,
        BinOp::Le,
        BinOp::Gt,
        BinOp::Ge,
        BinOp::Eq,
        BinOp::Ne,
    ];
    pub const ARITHMETIC: [BinOp; 5] = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Rem];

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
            BinOp::BitAnd => "&",
            BinOp::BitOr => "|",
            BinOp::BitXor => "^",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::BitOr => 3,
            BinOp::BitXor => 4,
            BinOp::BitAnd => 5,
            BinOp::Eq | BinOp::Ne => 6,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 7,
            BinOp::Add | BinOp::Sub => 8,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 9,
        }
    }

    pub fn is_relational(self) -> bool {
        Self::RELATIONAL.contains(&self)
    }

    pub fn is_ordering(self) -> bool {
        matches!(self, BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge)
    }

    pub fn is_arithmetic(self) -> bool {
        Self::ARITHMETIC.contains(&self)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Expr {
    pub id: NodeId,
    pub span: Span,
    pub kind: ExprKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ExprKind {
    Int(i64),
    Bool(bool),
    Var(String),
    /// `++x`: increments the variable and yields the new value.
    PreIncr(String),
    /// `--x`
    PreDecr(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
    Index(Box<Expr>, Box<Expr>),
    Array(Vec<Expr>),
}

impl Expr {
    pub fn children(&self) -> Vec<&Expr> {
        match &self.kind {
            ExprKind::Int(_)
            | ExprKind::Bool(_)
            | ExprKind::Var(_)
            | ExprKind::PreIncr(_)
            | ExprKind::PreDecr(_) => Vec::new(),
            ExprKind::Unary(_, e) => vec![e],
            ExprKind::Binary(_, l, r) => vec![l, r],
            ExprKind::Call(_, args) | ExprKind::Array(args) => args.iter().collect(),
            ExprKind::Index(base, idx) => vec![base, idx],
        }
    }

    pub fn children_mut(&mut self) -> Vec<&mut Expr> {
        match &mut self.kind {
            ExprKind::Int(_)
            | ExprKind::Bool(_)
            | ExprKind::Var(_)
            | ExprKind::PreIncr(_)
            | ExprKind::PreDecr(_) => Vec::new(),
            ExprKind::Unary(_, e) => vec![e],
            ExprKind::Binary(_, l, r) => vec![l, r],
            ExprKind::Call(_, args) | ExprKind::Array(args) => args.iter_mut().collect(),
            ExprKind::Index(base, idx) => vec![base, idx],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Stmt {
    pub id: NodeId,
    pub span: Span,
    pub kind: StmtKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum StmtKind {
    Let(String, Expr),
    Assign(String, Expr),
    IndexAssign(String, Expr, Expr),
    If {
        cond: Expr,
        then_branch: Vec<Stmt>,
        else_branch: Option<Vec<Stmt>>,
    },
    While {
        cond: Expr,
        body: Vec<Stmt>,
    },
    For {
        init: Option<Box<Stmt>>,
        cond: Option<Expr>,
        step: Option<Box<Stmt>>,
        body: Vec<Stmt>,
    },
    Return(Expr),
    /// `assert_eq(expected, actual)`; `assert_true(c)` parses to
    /// `assert_eq(true, c)`.
    AssertEq {
        expected: Expr,
        actual: Expr,
    },
    Expr(Expr),
    Block(Vec<Stmt>),
    Empty,
}

/// Borrowed view of any node, used by the tree walkers.
#[derive(Clone, Copy, Debug)]
pub enum Node<'a> {
    Fn(&'a FnDef),
    Stmt(&'a Stmt),
    Expr(&'a Expr),
}

impl<'a> Node<'a> {
    pub fn id(&self) -> NodeId {
        match self {
            Node::Fn(f) => f.id,
            Node::Stmt(s) => s.id,
            Node::Expr(e) => e.id,
        }
    }

    pub fn span(&self) -> Span {
        match self {
            Node::Fn(f) => f.span,
            Node::Stmt(s) => s.span,
            Node::Expr(e) => e.span,
        }
    }

    /// Direct children in source order.
    pub fn children(&self) -> Vec<Node<'a>> {
        match *self {
            Node::Fn(f) => f.body.iter().map(Node::Stmt).collect(),
            Node::Expr(e) => e.children().into_iter().map(Node::Expr).collect(),
            Node::Stmt(s) => {
                let mut out = Vec::new();
                match &s.kind {
                    StmtKind::Let(_, e)
                    | StmtKind::Assign(_, e)
                    | StmtKind::Return(e)
                    | StmtKind::Expr(e) => out.push(Node::Expr(e)),
                    StmtKind::IndexAssign(_, i, v) => {
                        out.push(Node::Expr(i));
                        out.push(Node::Expr(v));
                    }
                    StmtKind::AssertEq { expected, actual } => {
                        out.push(Node::Expr(expected));
                        out.push(Node::Expr(actual));
                    }
                    StmtKind::If {
                        cond,
                        then_branch,
                        else_branch,
                    } => {
                        out.push(Node::Expr(cond));
                        out.extend(then_branch.iter().map(Node::Stmt));
                        if let Some(b) = else_branch {
                            out.extend(b.iter().map(Node::Stmt));
                        }
                    }
                    StmtKind::While { cond, body } => {
                        out.push(Node::Expr(cond));
                        out.extend(body.iter().map(Node::Stmt));
                    }
                    StmtKind::For {
                        init,
                        cond,
                        step,
                        body,
                    } => {
                        if let Some(i) = init {
                            out.push(Node::Stmt(i));
                        }
                        if let Some(c) = cond {
                            out.push(Node::Expr(c));
                        }
                        if let Some(st) = step {
                            out.push(Node::Stmt(st));
                        }
                        out.extend(body.iter().map(Node::Stmt));
                    }
                    StmtKind::Block(b) => out.extend(b.iter().map(Node::Stmt)),
                    StmtKind::Empty => {}
                }
                out
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FnDef {
    pub id: NodeId,
    pub span: Span,
    pub name: String,
    pub params: Vec<String>,
    pub body: Vec<Stmt>,
}

/// A parsed source file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProgramUnit {
    pub file: String,
    pub functions: Vec<FnDef>,
    /// First node id after the ids used by this unit.
    pub next_id: u32,
}

impl ProgramUnit {
    pub fn function(&self, name: &str) -> Option<&FnDef> {
        self.functions.iter().find(|f| f.name == name)
    }

    /// Pre-order traversal; the callback receives each node and its parent.
    pub fn walk<'a>(&'a self, mut visit: impl FnMut(Node<'a>, Option<Node<'a>>)) {
        fn go<'a>(
            node: Node<'a>,
            parent: Option<Node<'a>>,
            visit: &mut impl FnMut(Node<'a>, Option<Node<'a>>),
        ) {
            visit(node, parent);
            for child in node.children() {
                go(child, Some(node), visit);
            }
        }
        for f in &self.functions {
            go(Node::Fn(f), None, &mut visit);
        }
    }

    pub fn find(&self, id: NodeId) -> Option<Node<'_>> {
        let mut found = None;
        self.walk(|n, _| {
            if found.is_none() && n.id() == id {
                found = Some(n);
            }
        });
        found
    }

    /// Copy with every node id and span zeroed, for structural comparison.
    pub fn shape(&self) -> ProgramUnit {
        fn expr(e: &mut Expr) {
            e.id = NodeId::default();
            e.span = Span::default();
            for c in e.children_mut() {
                expr(c);
            }
        }
        fn stmts(b: &mut [Stmt]) {
            for s in b {
                stmt(s);
            }
        }
        fn stmt(s: &mut Stmt) {
            s.id = NodeId::default();
            s.span = Span::default();
            match &mut s.kind {
                StmtKind::Let(_, e)
                | StmtKind::Assign(_, e)
                | StmtKind::Return(e)
                | StmtKind::Expr(e) => expr(e),
                StmtKind::IndexAssign(_, i, v) => {
                    expr(i);
                    expr(v);
                }
                StmtKind::AssertEq { expected, actual } => {
                    expr(expected);
                    expr(actual);
                }
                StmtKind::If {
                    cond,
                    then_branch,
                    else_branch,
                } => {
                    expr(cond);
                    stmts(then_branch);
                    if let Some(b) = else_branch {
                        stmts(b);
                    }
                }
                StmtKind::While { cond, body } => {
                    expr(cond);
                    stmts(body);
                }
                StmtKind::For {
                    init,
                    cond,
                    step,
                    body,
                } => {
                    if let Some(i) = init {
                        stmt(i);
                    }
                    if let Some(c) = cond {
                        expr(c);
                    }
                    if let Some(st) = step {
                        stmt(st);
                    }
                    stmts(body);
                }
                StmtKind::Block(b) => stmts(b),
                StmtKind::Empty => {}
            }
        }
        let mut out = self.clone();
        out.next_id = 0;
        for f in &mut out.functions {
            f.id = NodeId::default();
            f.span = Span::default();
            stmts(&mut f.body);
        }
        out
    }

    /// Structural equality ignoring node ids, spans and file name.
    pub fn same_structure(&self, other: &ProgramUnit) -> bool {
        self.shape().functions == other.shape().functions
    }
}
