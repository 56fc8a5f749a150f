use crate::ast::{is_identifier, AskStep, Builtin, Expr, OnDeny, ProgramAst, Step, RESERVED};
use idc_core::Value;
use std::fmt::Write;

const OPEN_LEVEL: u8 = 0;
const UNARY_LEVEL: u8 = 6;
const POSTFIX_LEVEL: u8 = 7;
const ATOM_LEVEL: u8 = 8;

/// Renders a program as source text that parses back to an equal tree.
pub fn unparse(ast: &ProgramAst) -> String {
    let mut out = format!("program {}\n", ast.name);
    if !ast.capabilities.is_empty() {
        out.push_str("capabilities:\n");
        for cap in &ast.capabilities {
            let bare = !cap.is_empty() && !cap.chars().any(|c| c.is_whitespace() || c == '"' || c == '#');
            if bare {
                let _ = writeln!(out, "  {cap}");
            } else {
                let _ = writeln!(out, "  {}", quote(cap));
            }
        }
    }
    for step in &ast.steps {
        let header = if step.name() == step.binding() {
            format!("step {}", step.name())
        } else {
            format!("step {} as {}", step.name(), step.binding())
        };
        match step {
            Step::Compute(s) => {
                let _ = writeln!(out, "{header}: compute {}", unparse_expr(&s.expr));
            }
            Step::Ask(s) => write_ask(&mut out, &header, s),
        }
    }
    out
}

fn write_ask(out: &mut String, header: &str, s: &AskStep) {
    let _ = writeln!(out, "{header}: ask {{");
    let _ = writeln!(out, "  machine {}", quote(&s.machine));
    if s.input_fields.is_empty() {
        out.push_str("  input {}\n");
    } else {
        out.push_str("  input {\n");
        for (k, v) in &s.input_fields {
            let _ = writeln!(out, "    {}: {}", key(k), unparse_expr(v));
        }
        out.push_str("  }\n");
    }
    if s.on_deny == OnDeny::Continue {
        out.push_str("  on_deny: continue\n");
    }
    out.push_str("}\n");
}

pub fn unparse_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e, OPEN_LEVEL);
    out
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn key(k: &str) -> String {
    if is_identifier(k) && !RESERVED.contains(&k) {
        k.to_string()
    } else {
        quote(k)
    }
}

fn level(e: &Expr) -> u8 {
    match e {
        Expr::Let(..) | Expr::If(..) | Expr::Lambda(..) => OPEN_LEVEL,
        Expr::BinOp(op, ..) => op.precedence(),
        Expr::Lit(Value::Int(n)) if *n < 0 => UNARY_LEVEL,
        Expr::Field(..) | Expr::Apply(..) | Expr::Builtin(..) => POSTFIX_LEVEL,
        Expr::Lit(_) | Expr::Var(_) => ATOM_LEVEL,
    }
}

fn write_expr(out: &mut String, e: &Expr, min: u8) {
    if level(e) < min {
        out.push('(');
        write_expr(out, e, OPEN_LEVEL);
        out.push(')');
        return;
    }
    match e {
        Expr::Lit(v) => write_value(out, v),
        Expr::Var(x) => out.push_str(x),
        Expr::Field(base, k) => {
            write_expr(out, base, POSTFIX_LEVEL);
            out.push('.');
            if is_identifier(k) {
                out.push_str(k);
            } else {
                out.push_str(&quote(k));
            }
        }
        Expr::Let(x, v, b) => {
            let _ = write!(out, "let {x} = ");
            write_expr(out, v, OPEN_LEVEL);
            out.push_str(" in ");
            write_expr(out, b, OPEN_LEVEL);
        }
        Expr::If(c, t, f) => {
            out.push_str("if ");
            write_expr(out, c, OPEN_LEVEL);
            out.push_str(" then ");
            write_expr(out, t, OPEN_LEVEL);
            out.push_str(" else ");
            write_expr(out, f, OPEN_LEVEL);
        }
        Expr::BinOp(op, l, r) => {
            let p = op.precedence();
            write_expr(out, l, p);
            let _ = write!(out, " {op} ");
            write_expr(out, r, p + 1);
        }
        Expr::Lambda(..) => {
            out.push_str("fn");
            let mut body = e;
            while let Expr::Lambda(p, b) = body {
                out.push(' ');
                out.push_str(p);
                body = b;
            }
            out.push_str(" => ");
            write_expr(out, body, OPEN_LEVEL);
        }
        Expr::Apply(..) => {
            let mut args = Vec::new();
            let mut head = e;
            while let Expr::Apply(f, a) = head {
                args.push(a.as_ref());
                head = f;
            }
            args.reverse();
            write_expr(out, head, POSTFIX_LEVEL);
            write_args(out, &args);
        }
        Expr::Builtin(b, args) => {
            out.push_str(Builtin::name(*b));
            write_args(out, &args.iter().collect::<Vec<_>>());
        }
    }
}

fn write_args(out: &mut String, args: &[&Expr]) {
    out.push('(');
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_expr(out, a, OPEN_LEVEL);
    }
    out.push(')');
}

fn write_value(out: &mut String, v: &Value) {
    match v {
        Value::Unit => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Int(n) => {
            let _ = write!(out, "{n}");
        }
        Value::Str(s) => out.push_str(&quote(s)),
        Value::List(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_value(out, item);
            }
            out.push(']');
        }
        Value::Map(m) => {
            out.push('{');
            for (i, (k, item)) in m.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                let _ = write!(out, "{}: ", key(k));
                write_value(out, item);
            }
            out.push('}');
        }
    }
}
