use std::fmt::Write;

use super::ast::*;

const INDENT: &str = "    ";

/// Renders a program in canonical layout; reparsing the output yields an equal tree.
pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    for i in &p.imports {
        let _ = writeln!(out, "import {i};");
    }
    if !p.imports.is_empty() {
        out.push('\n');
    }
    out.push_str("public class ");
    out.push_str(&p.name);
    if let Some(e) = &p.extends {
        let _ = write!(out, " extends {e}");
    }
    out.push_str(" {\n");
    for f in &p.fields {
        let _ = writeln!(out, "{INDENT}{};", var_decl(f));
    }
    for m in &p.methods {
        out.push('\n');
        method(&mut out, m);
    }
    out.push_str("}\n");
    out
}

fn method(out: &mut String, m: &Method) {
    out.push_str(INDENT);
    for md in &m.modifiers {
        out.push_str(md);
        out.push(' ');
    }
    if let Some(r) = &m.ret {
        out.push_str(&type_name(r));
        out.push(' ');
    }
    let params: Vec<String> = m.params.iter().map(|p| format!("{} {}", type_name(&p.ty), p.name)).collect();
    let _ = writeln!(out, "{}({}) {{", m.name, params.join(", "));
    for s in &m.body {
        stmt(out, s, 2);
    }
    let _ = writeln!(out, "{INDENT}}}");
}

fn type_name(t: &TypeName) -> String {
    if t.array {
        format!("{}[]", t.base)
    } else {
        t.base.clone()
    }
}

fn var_decl(d: &VarDecl) -> String {
    let mut s = String::new();
    for m in &d.modifiers {
        s.push_str(m);
        s.push(' ');
    }
    s.push_str(&type_name(&d.ty));
    s.push(' ');
    let items: Vec<String> = d
        .declarators
        .iter()
        .map(|dc| match &dc.init {
            Some(e) => format!("{} = {}", dc.name, expr(e)),
            None => dc.name.clone(),
        })
        .collect();
    s.push_str(&items.join(", "));
    s
}

fn pad(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str(INDENT);
    }
}

/// Statements that fit on one line without a trailing `;`.
fn simple(s: &Stmt) -> Option<String> {
    Some(match s {
        Stmt::Var(d) => var_decl(d),
        Stmt::Assign { target, op, value, .. } => format!("{} {} {}", expr(target), op.token(), expr(value)),
        Stmt::Step { target, increment, .. } => {
            format!("{}{}", expr(target), if *increment { "++" } else { "--" })
        }
        Stmt::Expr(e) => expr(e),
        _ => return None,
    })
}

fn stmt(out: &mut String, s: &Stmt, depth: usize) {
    if let Some(line) = simple(s) {
        pad(out, depth);
        out.push_str(&line);
        out.push_str(";\n");
        return;
    }
    match s {
        Stmt::If { cond, then, otherwise, .. } => {
            pad(out, depth);
            let _ = write!(out, "if ({}) ", expr(cond));
            body(out, then, depth);
            if let Some(o) = otherwise {
                pad(out, depth);
                out.push_str("else ");
                body(out, o, depth);
            }
        }
        Stmt::While { cond, body: b, .. } => {
            pad(out, depth);
            let _ = write!(out, "while ({}) ", expr(cond));
            body(out, b, depth);
        }
        Stmt::For { init, cond, update, body: b, .. } => {
            pad(out, depth);
            let part = |s: &Option<Box<Stmt>>| s.as_deref().and_then(simple).unwrap_or_default();
            let c = cond.as_ref().map(expr).unwrap_or_default();
            let _ = write!(out, "for ({}; {}; {}) ", part(init), c, part(update));
            body(out, b, depth);
        }
        Stmt::Return { value, .. } => {
            pad(out, depth);
            match value {
                Some(v) => {
                    let _ = writeln!(out, "return {};", expr(v));
                }
                None => out.push_str("return;\n"),
            }
        }
        Stmt::Block(items) => {
            pad(out, depth);
            block(out, items, depth);
        }
        Stmt::Rules(r) => rules(out, r, depth),
        _ => unreachable!("simple statements handled above"),
    }
}

/// Body of a compound statement, starting mid-line.
fn body(out: &mut String, s: &Stmt, depth: usize) {
    match s {
        Stmt::Block(items) => block(out, items, depth),
        other => {
            out.push('\n');
            stmt(out, other, depth + 1);
        }
    }
}

fn block(out: &mut String, items: &[Stmt], depth: usize) {
    out.push_str("{\n");
    for s in items {
        stmt(out, s, depth + 1);
    }
    pad(out, depth);
    out.push_str("}\n");
}

fn rules(out: &mut String, r: &RulesBlock, depth: usize) {
    pad(out, depth);
    out.push_str("rules ");
    if let Some(n) = &r.name {
        out.push_str(n);
        out.push(' ');
    }
    out.push_str("{\n");
    for rule in &r.rules {
        pad(out, depth + 1);
        out.push_str(&print_rule(rule));
        out.push('\n');
    }
    pad(out, depth);
    out.push_str("}\n");
}

/// One rule in `pred:cond:f(..) g(..){succ, ...};` form.
pub fn print_rule(rule: &Rule) -> String {
    let mut s = rule.predecessor.clone();
    match &rule.condition {
        Some(c) => {
            let _ = write!(s, ":{}:", expr(c));
        }
        None => s.push_str("::"),
    }
    let calls: Vec<String> = rule.functions.iter().map(call).collect();
    s.push_str(&calls.join(" "));
    let succ: Vec<String> = rule
        .successors
        .iter()
        .map(|x| match x {
            Successor::Terminal(_) => "terminal".to_string(),
            Successor::Symbol(n, _) => n.clone(),
            Successor::Method(c) => call(c),
        })
        .collect();
    let _ = write!(s, "{{{}}};", succ.join(", "));
    s
}

fn call(c: &Call) -> String {
    format!("{}({})", c.name, args(&c.args))
}

fn args(a: &[Expr]) -> String {
    a.iter().map(expr).collect::<Vec<_>>().join(", ")
}

const UNARY_PRECEDENCE: u8 = 7;
const POSTFIX_PRECEDENCE: u8 = 8;

fn precedence(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Binary(op, ..) => op.precedence(),
        ExprKind::InstanceOf(..) => INSTANCEOF_PRECEDENCE,
        ExprKind::Unary(..) => UNARY_PRECEDENCE,
        _ => POSTFIX_PRECEDENCE,
    }
}

fn operand(e: &Expr, min: u8) -> String {
    if precedence(e) < min {
        format!("({})", expr(e))
    } else {
        expr(e)
    }
}

pub fn expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Number(n) => format!("{n}"),
        ExprKind::Str(s) => quote(s),
        ExprKind::Bool(b) => b.to_string(),
        ExprKind::Ident(s) => s.clone(),
        ExprKind::Attr(s) => format!("@{s}"),
        ExprKind::Member(b, f) => format!("{}.{}", operand(b, POSTFIX_PRECEDENCE), f),
        ExprKind::Index(b, i) => format!("{}[{}]", operand(b, POSTFIX_PRECEDENCE), expr(i)),
        ExprKind::Call(b, a) => format!("{}({})", operand(b, POSTFIX_PRECEDENCE), args(a)),
        ExprKind::Array(items) => format!("{{{}}}", args(items)),
        ExprKind::Unary(op, inner) => {
            let tok = match op {
                UnaryOp::Neg => "-",
                UnaryOp::Plus => "+",
                UnaryOp::Not => "!",
            };
            let body = operand(inner, UNARY_PRECEDENCE);
            if body.starts_with(['-', '+']) {
                format!("{tok} {body}")
            } else {
                format!("{tok}{body}")
            }
        }
        ExprKind::Binary(op, l, r) => {
            let p = op.precedence();
            format!("{} {} {}", operand(l, p), op.token(), operand(r, p + 1))
        }
        ExprKind::InstanceOf(l, name) => {
            format!("{} instanceof {}", operand(l, INSTANCEOF_PRECEDENCE), name)
        }
    }
}

fn quote(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            '\0' => out.push_str("\\0"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}
