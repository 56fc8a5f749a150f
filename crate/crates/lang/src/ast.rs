//! Program syntax trees.
//!
//! The only step form that can reach the outside world is [`Step::Ask`];
//! everything in [`Expr`] is pure.

use idc_core::Value;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramAst {
    pub name: String,
    /// Action-path prefixes this program may produce intents for.
    pub capabilities: Vec<String>,
    pub steps: Vec<Step>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    Compute(ComputeStep),
    Ask(AskStep),
}

impl Step {
    pub fn name(&self) -> &str {
        match self {
            Step::Compute(s) => &s.name,
            Step::Ask(s) => &s.name,
        }
    }

    pub fn binding(&self) -> &str {
        match self {
            Step::Compute(s) => &s.binding,
            Step::Ask(s) => &s.binding,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComputeStep {
    pub name: String,
    pub binding: String,
    pub expr: Expr,
}

/// What a run does after an ask is denied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OnDeny {
    #[default]
    Halt,
    /// Bind the denial value and keep going.
    Continue,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AskStep {
    pub name: String,
    pub binding: String,
    pub machine: String,
    pub input_fields: BTreeMap<String, Expr>,
    pub on_deny: OnDeny,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Lit(Value),
    Var(String),
    Field(Box<Expr>, String),
    Let(String, Box<Expr>, Box<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    BinOp(BinOp, Box<Expr>, Box<Expr>),
    Lambda(String, Box<Expr>),
    Apply(Box<Expr>, Box<Expr>),
    Builtin(Builtin, Vec<Expr>),
}

impl Expr {
    pub fn int(n: i64) -> Self {
        Expr::Lit(Value::Int(n))
    }

    pub fn string(s: impl Into<String>) -> Self {
        Expr::Lit(Value::Str(s.into()))
    }

    pub fn var(name: impl Into<String>) -> Self {
        Expr::Var(name.into())
    }

    pub fn field(base: Expr, key: impl Into<String>) -> Self {
        Expr::Field(Box::new(base), key.into())
    }

    pub fn binop(op: BinOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::BinOp(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn let_in(name: impl Into<String>, value: Expr, body: Expr) -> Self {
        Expr::Let(name.into(), Box::new(value), Box::new(body))
    }

    pub fn if_then_else(cond: Expr, then: Expr, otherwise: Expr) -> Self {
        Expr::If(Box::new(cond), Box::new(then), Box::new(otherwise))
    }

    pub fn lambda(param: impl Into<String>, body: Expr) -> Self {
        Expr::Lambda(param.into(), Box::new(body))
    }

    pub fn apply(f: Expr, arg: Expr) -> Self {
        Expr::Apply(Box::new(f), Box::new(arg))
    }

    /// Top-level variable names this expression reads, excluding names bound
    /// inside it.
    pub fn free_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut bound = Vec::new();
        self.collect_free(&mut bound, &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut Vec<String>) {
        match self {
            Expr::Lit(_) => {}
            Expr::Var(x) => {
                if !bound.contains(x) && !out.contains(x) {
                    out.push(x.clone());
                }
            }
            Expr::Field(e, _) => e.collect_free(bound, out),
            Expr::Let(x, v, b) => {
                bound.push(x.clone());
                v.collect_free(bound, out);
                b.collect_free(bound, out);
                bound.pop();
            }
            Expr::If(c, t, e) => {
                c.collect_free(bound, out);
                t.collect_free(bound, out);
                e.collect_free(bound, out);
            }
            Expr::BinOp(_, l, r) | Expr::Apply(l, r) => {
                l.collect_free(bound, out);
                r.collect_free(bound, out);
            }
            Expr::Lambda(x, b) => {
                bound.push(x.clone());
                b.collect_free(bound, out);
                bound.pop();
            }
            Expr::Builtin(_, args) => args.iter().for_each(|a| a.collect_free(bound, out)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Concat,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub const ALL: [BinOp; 13] = [
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
        BinOp::Div,
        BinOp::Concat,
        BinOp::Eq,
        BinOp::Ne,
        BinOp::Lt,
        BinOp::Le,
        BinOp::Gt,
        BinOp::Ge,
        BinOp::And,
        BinOp::Or,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Concat => "++",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "and",
            BinOp::Or => "or",
        }
    }

    /// Binding strength; larger binds tighter. All levels are left-associative.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 3,
            BinOp::Add | BinOp::Sub | BinOp::Concat => 4,
            BinOp::Mul | BinOp::Div => 5,
        }
    }
}

impl fmt::Display for BinOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Built-in pure functions, called as `name(arg, ...)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    Len,
    Str,
    Int,
    Head,
    Tail,
    Cons,
    Nth,
    SetNth,
    Append,
    Get,
    Has,
    Put,
    Keys,
    Not,
    Mod,
    /// List construction with non-literal elements.
    List,
    /// Record construction: alternating key, value arguments.
    Record,
}

impl Builtin {
    pub const ALL: [Builtin; 17] = [
        Builtin::Len,
        Builtin::Str,
        Builtin::Int,
        Builtin::Head,
        Builtin::Tail,
        Builtin::Cons,
        Builtin::Nth,
        Builtin::SetNth,
        Builtin::Append,
        Builtin::Get,
        Builtin::Has,
        Builtin::Put,
        Builtin::Keys,
        Builtin::Not,
        Builtin::Mod,
        Builtin::List,
        Builtin::Record,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Len => "len",
            Builtin::Str => "str",
            Builtin::Int => "int",
            Builtin::Head => "head",
            Builtin::Tail => "tail",
            Builtin::Cons => "cons",
            Builtin::Nth => "nth",
            Builtin::SetNth => "set_nth",
            Builtin::Append => "append",
            Builtin::Get => "get",
            Builtin::Has => "has",
            Builtin::Put => "put",
            Builtin::Keys => "keys",
            Builtin::Not => "not",
            Builtin::Mod => "mod",
            Builtin::List => "list",
            Builtin::Record => "record",
        }
    }

    pub fn from_name(name: &str) -> Option<Builtin> {
        Builtin::ALL.into_iter().find(|b| b.name() == name)
    }

    /// Whether `n` arguments is an acceptable call.
    pub fn accepts_arity(self, n: usize) -> bool {
        match self {
            Builtin::Len | Builtin::Str | Builtin::Int | Builtin::Head | Builtin::Tail | Builtin::Keys | Builtin::Not => {
                n == 1
            }
            Builtin::Cons | Builtin::Nth | Builtin::Append | Builtin::Get | Builtin::Has | Builtin::Mod => n == 2,
            Builtin::SetNth | Builtin::Put => n == 3,
            Builtin::List => true,
            Builtin::Record => n.is_multiple_of(2),
        }
    }
}

/// Words that cannot be used as binding names.
pub const RESERVED: [&str; 12] = ["let", "in", "if", "then", "else", "fn", "and", "or", "true", "false", "null", "context"];

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A name usable for a step binding, `let`, or lambda parameter.
pub fn is_bindable(s: &str) -> bool {
    is_identifier(s) && !RESERVED.contains(&s) && Builtin::from_name(s).is_none()
}
