use crate::ast::*;
use crate::interp::{TestCase, TestSuite};
use crate::lexer::{tokenize, Tok, Token};
use crate::{Error, Result};

/// Parses a MiniLang source file. Node ids are assigned in pre-order
/// starting at zero.
pub fn parse_program(text: &str, file: &str) -> Result<ProgramUnit> {
    parse_program_with_base(text, file, 0)
}

/// Like [`parse_program`], with node ids starting at `base`. Test files are
/// parsed above the subject's id range so coverage sets never collide.
pub fn parse_program_with_base(text: &str, file: &str, base: u32) -> Result<ProgramUnit> {
    let tokens = tokenize(text).map_err(|e| Error::Syntax {
        file: file.to_string(),
        line: e.line,
        column: e.column,
        message: e.message,
    })?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        file,
    };
    let mut functions: Vec<FnDef> = Vec::new();
    while parser.peek() != &Tok::Eof {
        let f = parser.fndef()?;
        if functions.iter().any(|g| g.name == f.name) {
            return Err(Error::DuplicateFunction {
                name: f.name,
                file: file.to_string(),
                line: f.span.start_line,
            });
        }
        functions.push(f);
    }
    if functions.is_empty() {
        return Err(parser.error_here("expected at least one function"));
    }
    let mut next = base;
    for f in &mut functions {
        renumber_fn(f, &mut next);
    }
    Ok(ProgramUnit {
        file: file.to_string(),
        functions,
        next_id: next,
    })
}

/// Parses a test file. Node ids start at `base` (normally the subject's
/// `next_id`). Every function named `test_*` becomes a test case: it takes
/// no parameters, contains no `return`, and holds at least one assertion,
/// all of them top-level statements of its body.
pub fn parse_tests(text: &str, file: &str, base: u32) -> Result<TestSuite> {
    let unit = parse_program_with_base(text, file, base)?;
    let mut tests = Vec::new();
    for f in &unit.functions {
        let is_test = f.name.starts_with("test_");
        let invalid = |message: &str| Error::InvalidTest {
            test: f.name.clone(),
            file: file.to_string(),
            line: f.span.start_line,
            message: message.to_string(),
        };
        let mut nested_assert = false;
        let mut has_return = false;
        for s in &f.body {
            scan(s, true, &mut nested_assert, &mut has_return);
        }
        if !is_test {
            if nested_assert || f.body.iter().any(|s| matches!(s.kind, StmtKind::AssertEq { .. })) {
                return Err(invalid("assertions are only allowed in test functions"));
            }
            continue;
        }
        if !f.params.is_empty() {
            return Err(invalid("test functions take no parameters"));
        }
        if nested_assert {
            return Err(invalid("assertions must be top-level statements of the test body"));
        }
        if has_return {
            return Err(invalid("test functions may not return"));
        }
        let sites: Vec<NodeId> = f
            .body
            .iter()
            .filter(|s| matches!(s.kind, StmtKind::AssertEq { .. }))
            .map(|s| s.id)
            .collect();
        if sites.is_empty() {
            return Err(invalid("test contains no assertion"));
        }
        tests.push(TestCase::new(f.name.clone(), sites));
    }
    Ok(TestSuite { unit, tests })
}

fn scan(s: &Stmt, top: bool, nested_assert: &mut bool, has_return: &mut bool) {
    match &s.kind {
        StmtKind::AssertEq { .. } if !top => *nested_assert = true,
        StmtKind::Return(_) => *has_return = true,
        _ => {}
    }
    for child in Node::Stmt(s).children() {
        if let Node::Stmt(c) = child {
            scan(c, false, nested_assert, has_return);
        }
    }
}

fn renumber_fn(f: &mut FnDef, next: &mut u32) {
    f.id = take(next);
    for s in &mut f.body {
        renumber_stmt(s, next);
    }
}

fn take(next: &mut u32) -> NodeId {
    let id = NodeId(*next);
    *next += 1;
    id
}

fn renumber_stmt(s: &mut Stmt, next: &mut u32) {
    s.id = take(next);
    match &mut s.kind {
        StmtKind::Let(_, e) | StmtKind::Assign(_, e) | StmtKind::Return(e) | StmtKind::Expr(e) => {
            renumber_expr(e, next)
        }
        StmtKind::IndexAssign(_, i, v) => {
            renumber_expr(i, next);
            renumber_expr(v, next);
        }
        StmtKind::AssertEq { expected, actual } => {
            renumber_expr(expected, next);
            renumber_expr(actual, next);
        }
        StmtKind::If {
            cond,
            then_branch,
            else_branch,
        } => {
            renumber_expr(cond, next);
            then_branch.iter_mut().for_each(|s| renumber_stmt(s, next));
            if let Some(b) = else_branch {
                b.iter_mut().for_each(|s| renumber_stmt(s, next));
            }
        }
        StmtKind::While { cond, body } => {
            renumber_expr(cond, next);
            body.iter_mut().for_each(|s| renumber_stmt(s, next));
        }
        StmtKind::For {
            init,
            cond,
            step,
            body,
        } => {
            if let Some(i) = init {
                renumber_stmt(i, next);
            }
            if let Some(c) = cond {
                renumber_expr(c, next);
            }
            if let Some(st) = step {
                renumber_stmt(st, next);
            }
            body.iter_mut().for_each(|s| renumber_stmt(s, next));
        }
        StmtKind::Block(b) => b.iter_mut().for_each(|s| renumber_stmt(s, next)),
        StmtKind::Empty => {}
    }
}

fn renumber_expr(e: &mut Expr, next: &mut u32) {
    e.id = take(next);
    for c in e.children_mut() {
        renumber_expr(c, next);
    }
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    file: &'a str,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn prev_span(&self) -> Span {
        self.tokens[self.pos.saturating_sub(1)].span
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, message: &str) -> Error {
        let span = self.span();
        Error::Syntax {
            file: self.file.to_string(),
            line: span.start_line,
            column: span.start_col,
            message: format!("{message}, found {}", self.peek().describe()),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<Span> {
        if *self.peek() == tok {
            Ok(self.bump().span)
        } else {
            Err(self.error_here(&format!("expected {}", tok.describe())))
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                Ok(name)
            }
            _ => Err(self.error_here("expected identifier")),
        }
    }

    fn fndef(&mut self) -> Result<FnDef> {
        let start = self.expect(Tok::Fn)?;
        let name = self.ident()?;
        self.expect(Tok::LParen)?;
        let mut params = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                params.push(self.ident()?);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        let (body, end) = self.block()?;
        Ok(FnDef {
            id: NodeId::default(),
            span: start.to(end),
            name,
            params,
            body,
        })
    }

    fn block(&mut self) -> Result<(Vec<Stmt>, Span)> {
        self.expect(Tok::LBrace)?;
        let mut stmts = Vec::new();
        while *self.peek() != Tok::RBrace {
            if *self.peek() == Tok::Eof {
                return Err(self.error_here("unbalanced brace: expected `}`"));
            }
            stmts.push(self.stmt()?);
        }
        let end = self.expect(Tok::RBrace)?;
        Ok((stmts, end))
    }

    fn stmt_node(kind: StmtKind, span: Span) -> Stmt {
        Stmt {
            id: NodeId::default(),
            span,
            kind,
        }
    }

    fn stmt(&mut self) -> Result<Stmt> {
        let start = self.span();
        match self.peek() {
            Tok::Semi => {
                self.bump();
                Ok(Self::stmt_node(StmtKind::Empty, start))
            }
            Tok::LBrace => {
                let (body, end) = self.block()?;
                Ok(Self::stmt_node(StmtKind::Block(body), start.to(end)))
            }
            Tok::If => self.if_stmt(),
            Tok::While => {
                self.bump();
                self.expect(Tok::LParen)?;
                let cond = self.expr()?;
                self.expect(Tok::RParen)?;
                let (body, end) = self.block()?;
                Ok(Self::stmt_node(StmtKind::While { cond, body }, start.to(end)))
            }
            Tok::For => {
                self.bump();
                self.expect(Tok::LParen)?;
                let init = if *self.peek() == Tok::Semi {
                    None
                } else {
                    Some(Box::new(self.simple()?))
                };
                self.expect(Tok::Semi)?;
                let cond = if *self.peek() == Tok::Semi {
                    None
                } else {
                    Some(self.expr()?)
                };
                self.expect(Tok::Semi)?;
                let step = if *self.peek() == Tok::RParen {
                    None
                } else {
                    Some(Box::new(self.simple()?))
                };
                self.expect(Tok::RParen)?;
                let (body, end) = self.block()?;
                Ok(Self::stmt_node(
                    StmtKind::For {
                        init,
                        cond,
                        step,
                        body,
                    },
                    start.to(end),
                ))
            }
            Tok::Return => {
                self.bump();
                let e = self.expr()?;
                let end = self.expect(Tok::Semi)?;
                Ok(Self::stmt_node(StmtKind::Return(e), start.to(end)))
            }
            Tok::AssertEq => {
                self.bump();
                self.expect(Tok::LParen)?;
                let expected = self.expr()?;
                self.expect(Tok::Comma)?;
                let actual = self.expr()?;
                self.expect(Tok::RParen)?;
                let end = self.expect(Tok::Semi)?;
                Ok(Self::stmt_node(
                    StmtKind::AssertEq { expected, actual },
                    start.to(end),
                ))
            }
            Tok::AssertTrue => {
                let kw = self.bump().span;
                self.expect(Tok::LParen)?;
                let actual = self.expr()?;
                self.expect(Tok::RParen)?;
                let end = self.expect(Tok::Semi)?;
                let expected = Expr {
                    id: NodeId::default(),
                    span: kw,
                    kind: ExprKind::Bool(true),
                };
                Ok(Self::stmt_node(
                    StmtKind::AssertEq { expected, actual },
                    start.to(end),
                ))
            }
            _ => {
                let mut s = self.simple()?;
                let end = self.expect(Tok::Semi)?;
                s.span = s.span.to(end);
                Ok(s)
            }
        }
    }

    fn if_stmt(&mut self) -> Result<Stmt> {
        let start = self.expect(Tok::If)?;
        self.expect(Tok::LParen)?;
        let cond = self.expr()?;
        self.expect(Tok::RParen)?;
        let (then_branch, mut end) = self.block()?;
        let else_branch = if *self.peek() == Tok::Else {
            self.bump();
            if *self.peek() == Tok::If {
                let nested = self.if_stmt()?;
                end = nested.span;
                Some(vec![nested])
            } else {
                let (b, e) = self.block()?;
                end = e;
                Some(b)
            }
        } else {
            None
        };
        Ok(Self::stmt_node(
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            },
            start.to(end),
        ))
    }

    /// `let x = e`, `x = e`, `a[i] = e` or a bare expression; no `;`.
    fn simple(&mut self) -> Result<Stmt> {
        let start = self.span();
        if *self.peek() == Tok::Let {
            self.bump();
            let name = self.ident()?;
            self.expect(Tok::Assign)?;
            let e = self.expr()?;
            let span = start.to(e.span);
            return Ok(Self::stmt_node(StmtKind::Let(name, e), span));
        }
        if let (Tok::Ident(name), Tok::Assign) = (self.peek().clone(), self.peek_at(1).clone()) {
            self.bump();
            self.bump();
            let e = self.expr()?;
            let span = start.to(e.span);
            return Ok(Self::stmt_node(StmtKind::Assign(name, e), span));
        }
        let e = self.expr()?;
        if *self.peek() == Tok::Assign {
            if let ExprKind::Index(base, idx) = e.kind {
                if let ExprKind::Var(name) = base.kind {
                    self.bump();
                    let v = self.expr()?;
                    let span = start.to(v.span);
                    return Ok(Self::stmt_node(StmtKind::IndexAssign(name, *idx, v), span));
                }
            }
            return Err(self.error_here("invalid assignment target"));
        }
        let span = e.span;
        Ok(Self::stmt_node(StmtKind::Expr(e), span))
    }

    fn expr(&mut self) -> Result<Expr> {
        self.binary(1)
    }

    fn binop(tok: &Tok) -> Option<BinOp> {
        Some(match tok {
            Tok::OrOr => BinOp::Or,
            Tok::AndAnd => BinOp::And,
            Tok::Pipe => BinOp::BitOr,
            Tok::Caret => BinOp::BitXor,
            Tok::Amp => BinOp::BitAnd,
            Tok::EqEq => BinOp::Eq,
            Tok::Ne => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            Tok::Plus => BinOp::Add,
            Tok::Minus => BinOp::Sub,
            Tok::Star => BinOp::Mul,
            Tok::Slash => BinOp::Div,
            Tok::Percent => BinOp::Rem,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr> {
        let mut left = self.unary()?;
        while let Some(op) = Self::binop(self.peek()) {
            if op.precedence() < min_prec {
                break;
            }
            self.bump();
            let right = self.binary(op.precedence() + 1)?;
            let span = left.span.to(right.span);
            left = Expr {
                id: NodeId::default(),
                span,
                kind: ExprKind::Binary(op, Box::new(left), Box::new(right)),
            };
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Expr> {
        let start = self.span();
        let node = |kind, span| Expr {
            id: NodeId::default(),
            span,
            kind,
        };
        match self.peek().clone() {
            Tok::Minus => {
                self.bump();
                if let Tok::Int(v) = *self.peek() {
                    let lit = self.bump().span;
                    if v > i64::MAX as u64 + 1 {
                        return Err(Error::Syntax {
                            file: self.file.to_string(),
                            line: lit.start_line,
                            column: lit.start_col,
                            message: format!("integer literal `{v}` out of range"),
                        });
                    }
                    let value = (v as i64).wrapping_neg();
                    return Ok(node(ExprKind::Int(value), start.to(lit)));
                }
                let e = self.unary()?;
                let span = start.to(e.span);
                Ok(node(ExprKind::Unary(UnOp::Neg, Box::new(e)), span))
            }
            Tok::Bang => {
                self.bump();
                let e = self.unary()?;
                let span = start.to(e.span);
                Ok(node(ExprKind::Unary(UnOp::Not, Box::new(e)), span))
            }
            Tok::PlusPlus | Tok::MinusMinus => {
                let incr = *self.peek() == Tok::PlusPlus;
                self.bump();
                let name = self.ident()?;
                let span = start.to(self.prev_span());
                let kind = if incr {
                    ExprKind::PreIncr(name)
                } else {
                    ExprKind::PreDecr(name)
                };
                Ok(node(kind, span))
            }
            _ => self.postfix(),
        }
    }

    fn postfix(&mut self) -> Result<Expr> {
        let mut e = self.primary()?;
        while *self.peek() == Tok::LBracket {
            self.bump();
            let idx = self.expr()?;
            let end = self.expect(Tok::RBracket)?;
            let span = e.span.to(end);
            e = Expr {
                id: NodeId::default(),
                span,
                kind: ExprKind::Index(Box::new(e), Box::new(idx)),
            };
        }
        Ok(e)
    }

    fn args(&mut self, close: Tok) -> Result<(Vec<Expr>, Span)> {
        let mut args = Vec::new();
        if *self.peek() != close {
            loop {
                args.push(self.expr()?);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        let end = self.expect(close)?;
        Ok((args, end))
    }

    fn primary(&mut self) -> Result<Expr> {
        let start = self.span();
        let node = |kind, span| Expr {
            id: NodeId::default(),
            span,
            kind,
        };
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                if v > i64::MAX as u64 {
                    return Err(Error::Syntax {
                        file: self.file.to_string(),
                        line: start.start_line,
                        column: start.start_col,
                        message: format!("integer literal `{v}` out of range"),
                    });
                }
                Ok(node(ExprKind::Int(v as i64), start))
            }
            Tok::True => {
                self.bump();
                Ok(node(ExprKind::Bool(true), start))
            }
            Tok::False => {
                self.bump();
                Ok(node(ExprKind::Bool(false), start))
            }
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() == Tok::LParen {
                    self.bump();
                    let (args, end) = self.args(Tok::RParen)?;
                    Ok(node(ExprKind::Call(name, args), start.to(end)))
                } else {
                    Ok(node(ExprKind::Var(name), start))
                }
            }
            Tok::LBracket => {
                self.bump();
                let (items, end) = self.args(Tok::RBracket)?;
                Ok(node(ExprKind::Array(items), start.to(end)))
            }
            Tok::LParen => {
                self.bump();
                let mut e = self.expr()?;
                let end = self.expect(Tok::RParen)?;
                e.span = start.to(end);
                Ok(e)
            }
            _ => Err(self.error_here("expected expression")),
        }
    }
}
