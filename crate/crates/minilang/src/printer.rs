use crate::ast::*;
use std::fmt::Write;

/// Renders a program as canonical MiniLang source. Parsing the output yields
/// a structurally identical AST.
pub fn print_program(unit: &ProgramUnit) -> String {
    let mut out = String::new();
    for (i, f) in unit.functions.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = write!(out, "fn {}({}) ", f.name, f.params.join(", "));
        block(&mut out, &f.body, 0);
        out.push('\n');
    }
    out
}

/// Single-line rendering of a statement, used for mutant snippets.
pub fn print_stmt_inline(stmt: &Stmt) -> String {
    let mut out = String::new();
    statement(&mut out, stmt, None);
    out
}

pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    expr(&mut out, e);
    out
}

fn indent(out: &mut String, level: Option<usize>) {
    if let Some(l) = level {
        for _ in 0..l {
            out.push_str("    ");
        }
    }
}

fn block(out: &mut String, stmts: &[Stmt], level: usize) {
    out.push_str("{\n");
    for s in stmts {
        indent(out, Some(level + 1));
        statement(out, s, Some(level + 1));
        out.push('\n');
    }
    indent(out, Some(level));
    out.push('}');
}

fn inline_block(out: &mut String, stmts: &[Stmt]) {
    out.push_str("{ ");
    for s in stmts {
        statement(out, s, None);
        out.push(' ');
    }
    out.push('}');
}

fn body(out: &mut String, stmts: &[Stmt], level: Option<usize>) {
    match level {
        Some(l) => block(out, stmts, l),
        None => inline_block(out, stmts),
    }
}

fn simple(out: &mut String, s: &Stmt) {
    match &s.kind {
        StmtKind::Let(name, e) => {
            let _ = write!(out, "let {name} = ");
            expr(out, e);
        }
        StmtKind::Assign(name, e) => {
            let _ = write!(out, "{name} = ");
            expr(out, e);
        }
        StmtKind::IndexAssign(name, i, v) => {
            let _ = write!(out, "{name}[");
            expr(out, i);
            out.push_str("] = ");
            expr(out, v);
        }
        StmtKind::Expr(e) => expr(out, e),
        _ => unreachable!("not a simple statement"),
    }
}

fn statement(out: &mut String, s: &Stmt, level: Option<usize>) {
    match &s.kind {
        StmtKind::Let(..) | StmtKind::Assign(..) | StmtKind::IndexAssign(..) | StmtKind::Expr(_) => {
            simple(out, s);
            out.push(';');
        }
        StmtKind::Return(e) => {
            out.push_str("return ");
            expr(out, e);
            out.push(';');
        }
        StmtKind::AssertEq { expected, actual } => {
            out.push_str("assert_eq(");
            expr(out, expected);
            out.push_str(", ");
            expr(out, actual);
            out.push_str(");");
        }
        StmtKind::If {
            cond,
            then_branch,
            else_branch,
        } => {
            out.push_str("if (");
            expr(out, cond);
            out.push_str(") ");
            body(out, then_branch, level);
            if let Some(b) = else_branch {
                out.push_str(" else ");
                body(out, b, level);
            }
        }
        StmtKind::While { cond, body: b } => {
            out.push_str("while (");
            expr(out, cond);
            out.push_str(") ");
            body(out, b, level);
        }
        StmtKind::For {
            init,
            cond,
            step,
            body: b,
        } => {
            out.push_str("for (");
            if let Some(i) = init {
                simple(out, i);
            }
            out.push_str("; ");
            if let Some(c) = cond {
                expr(out, c);
            }
            out.push_str("; ");
            if let Some(st) = step {
                simple(out, st);
            }
            out.push_str(") ");
            body(out, b, level);
        }
        StmtKind::Block(b) => body(out, b, level),
        StmtKind::Empty => out.push(';'),
    }
}

fn starts_with_minus(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Int(v) => *v < 0,
        ExprKind::Unary(UnOp::Neg, _) | ExprKind::PreDecr(_) => true,
        ExprKind::Binary(_, l, _) => starts_with_minus(l),
        ExprKind::Index(b, _) => starts_with_minus(b),
        _ => false,
    }
}

fn expr(out: &mut String, e: &Expr) {
    match &e.kind {
        ExprKind::Int(v) => {
            let _ = write!(out, "{v}");
        }
        ExprKind::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        ExprKind::Var(name) => out.push_str(name),
        ExprKind::PreIncr(name) => {
            let _ = write!(out, "++{name}");
        }
        ExprKind::PreDecr(name) => {
            let _ = write!(out, "--{name}");
        }
        ExprKind::Unary(op, inner) => {
            out.push(match op {
                UnOp::Neg => '-',
                UnOp::Not => '!',
            });
            let wrap = matches!(inner.kind, ExprKind::Binary(..))
                || (*op == UnOp::Neg && (starts_with_minus(inner) || matches!(inner.kind, ExprKind::Int(_))));
            paren(out, inner, wrap);
        }
        ExprKind::Binary(op, l, r) => {
            let lw = matches!(&l.kind, ExprKind::Binary(lop, ..) if lop.precedence() < op.precedence());
            let rw = matches!(&r.kind, ExprKind::Binary(rop, ..) if rop.precedence() <= op.precedence());
            paren(out, l, lw);
            let _ = write!(out, " {} ", op.symbol());
            paren(out, r, rw);
        }
        ExprKind::Call(name, args) => {
            let _ = write!(out, "{name}(");
            list(out, args);
            out.push(')');
        }
        ExprKind::Index(base, idx) => {
            let wrap = !matches!(
                base.kind,
                ExprKind::Var(_) | ExprKind::Call(..) | ExprKind::Index(..) | ExprKind::Array(_)
            );
            paren(out, base, wrap);
            out.push('[');
            expr(out, idx);
            out.push(']');
        }
        ExprKind::Array(items) => {
            out.push('[');
            list(out, items);
            out.push(']');
        }
    }
}

fn paren(out: &mut String, e: &Expr, wrap: bool) {
    if wrap {
        out.push('(');
        expr(out, e);
        out.push(')');
    } else {
        expr(out, e);
    }
}

fn list(out: &mut String, items: &[Expr]) {
    for (i, a) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        expr(out, a);
    }
}
