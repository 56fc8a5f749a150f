//! Call-by-value evaluation of pure expressions.
//!
//! This module sees only expressions and values. It has no access to the
//! ledger, the policy or the effect registry, so nothing evaluated here can
//! cause an effect.

use idc_core::{canonical_serialize, Value, ValueMap};
use idc_lang::{BinOp, Builtin, Expr};
use std::rc::Rc;
use thiserror::Error;

/// Default reduction budget for one compute step or ask input.
pub const DEFAULT_STEP_BUDGET: u64 = 10_000_000;
/// Deepest evaluation nesting allowed, counting every sub-expression.
pub const MAX_EVAL_DEPTH: usize = 200_000;

const STACK_RED_ZONE: usize = 128 * 1024;
const STACK_SEGMENT: usize = 4 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("integer overflow in {0}")]
    Overflow(&'static str),
    #[error("step budget of {0} reductions exhausted")]
    BudgetExhausted(u64),
    #[error("evaluation nested deeper than {0}")]
    TooDeep(usize),
    #[error("{0}")]
    Failed(String),
}

impl EvalError {
    pub fn kind(&self) -> &'static str {
        match self {
            EvalError::DivisionByZero => "division-by-zero",
            EvalError::TypeMismatch(_) => "type-mismatch",
            EvalError::Overflow(_) => "overflow",
            EvalError::BudgetExhausted(_) => "budget-exhausted",
            EvalError::TooDeep(_) => "too-deep",
            EvalError::Failed(_) => "failed",
        }
    }
}

#[derive(Clone)]
enum Rt<'a> {
    Data(Value),
    Closure(Rc<Closure<'a>>),
}

struct Closure<'a> {
    param: &'a str,
    body: &'a Expr,
    env: Env<'a>,
    /// Set for `let f = fn ...`: the closure sees itself under this name.
    rec_name: Option<&'a str>,
}

type Env<'a> = Option<Rc<Frame<'a>>>;

struct Frame<'a> {
    name: &'a str,
    value: Rt<'a>,
    next: Env<'a>,
}

fn bind<'a>(env: &Env<'a>, name: &'a str, value: Rt<'a>) -> Env<'a> {
    Some(Rc::new(Frame { name, value, next: env.clone() }))
}

fn lookup<'a>(mut env: &Env<'a>, name: &str) -> Option<Rt<'a>> {
    while let Some(frame) = env {
        if frame.name == name {
            return Some(frame.value.clone());
        }
        env = &frame.next;
    }
    None
}

/// Evaluates `expr` with `globals` (step bindings plus `context`) in scope.
pub fn eval_expr(expr: &Expr, globals: &ValueMap, step_budget: u64) -> Result<Value, EvalError> {
    let mut ev = Evaluator { globals, budget: step_budget, limit: step_budget, depth: 0 };
    match ev.eval(expr, &None)? {
        Rt::Data(v) => Ok(v),
        Rt::Closure(_) => Err(EvalError::TypeMismatch("expression evaluated to a function, not data".into())),
    }
}

/// Size measure used to charge the budget for copying or building a value.
fn weight(v: &Value) -> u64 {
    let mut n = 0u64;
    let mut stack = vec![v];
    while let Some(x) = stack.pop() {
        n += 1;
        match x {
            Value::Str(s) => n += s.len() as u64 / 64,
            Value::List(items) => stack.extend(items),
            Value::Map(m) => {
                for (k, item) in m {
                    n += k.len() as u64 / 64;
                    stack.push(item);
                }
            }
            _ => {}
        }
    }
    n
}

fn mismatch(what: &str, v: &Value) -> EvalError {
    EvalError::TypeMismatch(format!("{what} cannot take {}", v.type_name()))
}

struct Evaluator<'g> {
    globals: &'g ValueMap,
    budget: u64,
    limit: u64,
    depth: usize,
}

impl<'g> Evaluator<'g> {
    fn charge(&mut self, n: u64) -> Result<(), EvalError> {
        if n > self.budget {
            self.budget = 0;
            return Err(EvalError::BudgetExhausted(self.limit));
        }
        self.budget -= n;
        Ok(())
    }

    fn data<'a>(&mut self, v: Value) -> Result<Rt<'a>, EvalError> {
        self.charge(weight(&v))?;
        Ok(Rt::Data(v))
    }

    fn eval<'a>(&mut self, e: &'a Expr, env: &Env<'a>) -> Result<Rt<'a>, EvalError> {
        self.charge(1)?;
        self.depth += 1;
        if self.depth > MAX_EVAL_DEPTH {
            self.depth -= 1;
            return Err(EvalError::TooDeep(MAX_EVAL_DEPTH));
        }
        let out = stacker::maybe_grow(STACK_RED_ZONE, STACK_SEGMENT, || self.eval_inner(e, env));
        self.depth -= 1;
        out
    }

    fn eval_data<'a>(&mut self, e: &'a Expr, env: &Env<'a>, what: &str) -> Result<Value, EvalError> {
        match self.eval(e, env)? {
            Rt::Data(v) => Ok(v),
            Rt::Closure(_) => Err(EvalError::TypeMismatch(format!("{what} got a function"))),
        }
    }

    fn eval_inner<'a>(&mut self, e: &'a Expr, env: &Env<'a>) -> Result<Rt<'a>, EvalError> {
        match e {
            Expr::Lit(v) => self.data(v.clone()),
            Expr::Var(x) => match lookup(env, x) {
                Some(Rt::Data(v)) => self.data(v),
                Some(closure) => Ok(closure),
                None => match self.globals.get(x.as_str()) {
                    Some(v) => self.data(v.clone()),
                    None => Err(EvalError::Failed(format!("unbound variable '{x}'"))),
                },
            },
            Expr::Field(base, key) => match self.eval_data(base, env, "field access")? {
                Value::Map(mut m) => match m.remove(key.as_str()) {
                    Some(v) => Ok(Rt::Data(v)),
                    None => Err(EvalError::Failed(format!("no field '{key}'"))),
                },
                other => Err(EvalError::TypeMismatch(format!(
                    "field access '.{key}' needs a map, got {}",
                    other.type_name()
                ))),
            },
            Expr::Let(x, value, body) => {
                let bound = match value.as_ref() {
                    Expr::Lambda(param, lbody) => Rt::Closure(Rc::new(Closure {
                        param,
                        body: lbody,
                        env: env.clone(),
                        rec_name: Some(x),
                    })),
                    other => self.eval(other, env)?,
                };
                let inner = bind(env, x, bound);
                self.eval(body, &inner)
            }
            Expr::If(c, t, f) => match self.eval_data(c, env, "if condition")? {
                Value::Bool(true) => self.eval(t, env),
                Value::Bool(false) => self.eval(f, env),
                other => Err(EvalError::TypeMismatch(format!("if condition must be bool, got {}", other.type_name()))),
            },
            Expr::BinOp(op, l, r) => self.binop(*op, l, r, env),
            Expr::Lambda(param, body) => {
                Ok(Rt::Closure(Rc::new(Closure { param, body, env: env.clone(), rec_name: None })))
            }
            Expr::Apply(f, arg) => {
                let Rt::Closure(closure) = self.eval(f, env)? else {
                    return Err(EvalError::TypeMismatch("only functions can be applied".into()));
                };
                let arg = self.eval(arg, env)?;
                let mut call_env = closure.env.clone();
                if let Some(name) = closure.rec_name {
                    call_env = bind(&call_env, name, Rt::Closure(closure.clone()));
                }
                call_env = bind(&call_env, closure.param, arg);
                self.eval(closure.body, &call_env)
            }
            Expr::Builtin(b, args) => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.eval_data(a, env, b.name())?);
                }
                let out = builtin(*b, vals)?;
                self.data(out)
            }
        }
    }

    fn binop<'a>(&mut self, op: BinOp, l: &'a Expr, r: &'a Expr, env: &Env<'a>) -> Result<Rt<'a>, EvalError> {
        if matches!(op, BinOp::And | BinOp::Or) {
            let lhs = self.eval_data(l, env, op.symbol())?;
            let Value::Bool(lb) = lhs else {
                return Err(EvalError::TypeMismatch(format!("'{op}' needs bools, got {}", lhs.type_name())));
            };
            if (op == BinOp::And && !lb) || (op == BinOp::Or && lb) {
                return Ok(Rt::Data(Value::Bool(lb)));
            }
            let rhs = self.eval_data(r, env, op.symbol())?;
            return match rhs {
                Value::Bool(rb) => Ok(Rt::Data(Value::Bool(rb))),
                other => Err(EvalError::TypeMismatch(format!("'{op}' needs bools, got {}", other.type_name()))),
            };
        }
        let lhs = self.eval_data(l, env, op.symbol())?;
        let rhs = self.eval_data(r, env, op.symbol())?;
        let out = apply_binop(op, lhs, rhs)?;
        self.data(out)
    }
}

fn type_pair(op: BinOp, a: &Value, b: &Value) -> EvalError {
    EvalError::TypeMismatch(format!("'{op}' cannot combine {} and {}", a.type_name(), b.type_name()))
}

pub(crate) fn apply_binop(op: BinOp, a: Value, b: Value) -> Result<Value, EvalError> {
    use Value::{Int, List, Str};
    Ok(match (op, a, b) {
        (BinOp::Add, Int(x), Int(y)) => Int(x.checked_add(y).ok_or(EvalError::Overflow("+"))?),
        (BinOp::Add, Str(x), Str(y)) => Str(x + &y),
        (BinOp::Add, Str(x), Int(y)) => Str(format!("{x}{y}")),
        (BinOp::Add, Int(x), Str(y)) => Str(format!("{x}{y}")),
        (BinOp::Sub, Int(x), Int(y)) => Int(x.checked_sub(y).ok_or(EvalError::Overflow("-"))?),
        (BinOp::Mul, Int(x), Int(y)) => Int(x.checked_mul(y).ok_or(EvalError::Overflow("*"))?),
        (BinOp::Div, Int(_), Int(0)) => return Err(EvalError::DivisionByZero),
        (BinOp::Div, Int(x), Int(y)) => Int(x.checked_div(y).ok_or(EvalError::Overflow("/"))?),
        (BinOp::Concat, Str(x), Str(y)) => Str(x + &y),
        (BinOp::Concat, List(mut x), List(y)) => {
            x.extend(y);
            List(x)
        }
        (BinOp::Eq, x, y) => Value::Bool(x == y),
        (BinOp::Ne, x, y) => Value::Bool(x != y),
        (BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge, x, y) => {
            let ord = match (&x, &y) {
                (Int(p), Int(q)) => p.cmp(q),
                (Str(p), Str(q)) => p.as_bytes().cmp(q.as_bytes()),
                _ => return Err(type_pair(op, &x, &y)),
            };
            Value::Bool(match op {
                BinOp::Lt => ord.is_lt(),
                BinOp::Le => ord.is_le(),
                BinOp::Gt => ord.is_gt(),
                _ => ord.is_ge(),
            })
        }
        (op, x, y) => return Err(type_pair(op, &x, &y)),
    })
}

fn want_list(b: Builtin, v: Value) -> Result<Vec<Value>, EvalError> {
    match v {
        Value::List(items) => Ok(items),
        other => Err(EvalError::TypeMismatch(format!("{} needs a list, got {}", b.name(), other.type_name()))),
    }
}

fn want_map(b: Builtin, v: Value) -> Result<ValueMap, EvalError> {
    match v {
        Value::Map(m) => Ok(m),
        other => Err(EvalError::TypeMismatch(format!("{} needs a map, got {}", b.name(), other.type_name()))),
    }
}

fn want_str(b: Builtin, v: Value) -> Result<String, EvalError> {
    match v {
        Value::Str(s) => Ok(s),
        other => Err(EvalError::TypeMismatch(format!("{} needs a string, got {}", b.name(), other.type_name()))),
    }
}

fn want_int(b: Builtin, v: &Value) -> Result<i64, EvalError> {
    v.as_int()
        .ok_or_else(|| EvalError::TypeMismatch(format!("{} needs an integer, got {}", b.name(), v.type_name())))
}

fn index(b: Builtin, i: i64, len: usize) -> Result<usize, EvalError> {
    usize::try_from(i)
        .ok()
        .filter(|&i| i < len)
        .ok_or_else(|| EvalError::Failed(format!("{}: index {i} out of range for length {len}", b.name())))
}

pub(crate) fn builtin(b: Builtin, args: Vec<Value>) -> Result<Value, EvalError> {
    let mut args = args.into_iter();
    let mut next = || args.next().expect("arity checked by the parser");
    Ok(match b {
        Builtin::Len => match next() {
            Value::Str(s) => Value::Int(s.chars().count() as i64),
            Value::List(l) => Value::Int(l.len() as i64),
            Value::Map(m) => Value::Int(m.len() as i64),
            other => return Err(mismatch("len", &other)),
        },
        Builtin::Str => match next() {
            Value::Str(s) => Value::Str(s),
            Value::Int(n) => Value::Str(n.to_string()),
            other => Value::Str(
                String::from_utf8(canonical_serialize(&other).map_err(|e| EvalError::Failed(e.to_string()))?)
                    .expect("canonical encoding is UTF-8"),
            ),
        },
        Builtin::Int => match next() {
            Value::Int(n) => Value::Int(n),
            Value::Str(s) => Value::Int(
                s.parse::<i64>().map_err(|_| EvalError::Failed(format!("int: {s:?} is not an integer")))?,
            ),
            other => return Err(mismatch("int", &other)),
        },
        Builtin::Head => want_list(b, next())?
            .into_iter()
            .next()
            .ok_or_else(|| EvalError::Failed("head of an empty list".into()))?,
        Builtin::Tail => {
            let mut l = want_list(b, next())?;
            if l.is_empty() {
                return Err(EvalError::Failed("tail of an empty list".into()));
            }
            l.remove(0);
            Value::List(l)
        }
        Builtin::Cons => {
            let x = next();
            let mut l = want_list(b, next())?;
            l.insert(0, x);
            Value::List(l)
        }
        Builtin::Nth => {
            let mut l = want_list(b, next())?;
            let i = index(b, want_int(b, &next())?, l.len())?;
            l.swap_remove(i)
        }
        Builtin::SetNth => {
            let mut l = want_list(b, next())?;
            let i = index(b, want_int(b, &next())?, l.len())?;
            l[i] = next();
            Value::List(l)
        }
        Builtin::Append => {
            let mut l = want_list(b, next())?;
            l.push(next());
            Value::List(l)
        }
        Builtin::Get => {
            let mut m = want_map(b, next())?;
            let k = want_str(b, next())?;
            m.remove(&k).ok_or_else(|| EvalError::Failed(format!("get: no key {k:?}")))?
        }
        Builtin::Has => {
            let m = want_map(b, next())?;
            let k = want_str(b, next())?;
            Value::Bool(m.contains_key(&k))
        }
        Builtin::Put => {
            let mut m = want_map(b, next())?;
            let k = want_str(b, next())?;
            m.insert(k, next());
            Value::Map(m)
        }
        Builtin::Keys => Value::List(want_map(b, next())?.into_keys().map(Value::Str).collect()),
        Builtin::Not => match next() {
            Value::Bool(x) => Value::Bool(!x),
            other => return Err(mismatch("not", &other)),
        },
        Builtin::Mod => {
            let x = want_int(b, &next())?;
            let y = want_int(b, &next())?;
            if y == 0 {
                return Err(EvalError::DivisionByZero);
            }
            Value::Int(x.checked_rem_euclid(y).ok_or(EvalError::Overflow("mod"))?)
        }
        Builtin::List => Value::List(args.collect()),
        Builtin::Record => {
            let mut m = ValueMap::new();
            while let Some(k) = args.next() {
                let k = want_str(b, k)?;
                m.insert(k, args.next().expect("record arity is even"));
            }
            Value::Map(m)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval_src(src: &str) -> Result<Value, EvalError> {
        let program = idc_lang::parse(&format!("program t\nstep s: compute {src}\n")).expect("parses");
        let idc_lang::Step::Compute(step) = &program.steps[0] else { unreachable!() };
        let mut globals = ValueMap::new();
        globals.insert("context".into(), Value::map([("invoice", Value::map([("id", Value::Int(4821))]))]));
        eval_expr(&step.expr, &globals, DEFAULT_STEP_BUDGET)
    }

    #[test]
    fn string_plus_int_concatenates() {
        assert_eq!(eval_src(r#""Invoice #" + context.invoice.id"#), Ok(Value::str("Invoice #4821")));
    }

    #[test]
    fn branches_are_lazy() {
        let looping = "let loop = fn x => loop(x) in if true then 1 else loop(0)";
        assert_eq!(eval_src(looping), Ok(Value::Int(1)));
    }

    #[test]
    fn let_binds() {
        assert_eq!(eval_src("let x = 2 in x + 3"), Ok(Value::Int(5)));
    }

    #[test]
    fn recursion_and_currying() {
        assert_eq!(
            eval_src("let f = fn n => if n == 0 then 1 else n * f(n - 1) in f(10)"),
            Ok(Value::Int(3_628_800))
        );
        assert_eq!(eval_src("let add = fn a b => a + b in add(2)(3) + add(4, 5)"), Ok(Value::Int(14)));
    }

    #[test]
    fn closures_capture_their_scope() {
        assert_eq!(eval_src("let k = 10 in let f = fn x => x + k in let k = 0 in f(1)"), Ok(Value::Int(11)));
    }

    #[test]
    fn runtime_errors() {
        assert_eq!(eval_src("1 / 0"), Err(EvalError::DivisionByZero));
        assert_eq!(eval_src("mod(1, 0)"), Err(EvalError::DivisionByZero));
        assert!(matches!(eval_src("1 + true"), Err(EvalError::TypeMismatch(_))));
        assert!(matches!(eval_src("9223372036854775807 + 1"), Err(EvalError::Overflow(_))));
        assert!(matches!(eval_src("-9223372036854775808 / -1"), Err(EvalError::Overflow(_))));
        assert!(matches!(eval_src("head([])"), Err(EvalError::Failed(_))));
        assert!(matches!(eval_src("context.nope"), Err(EvalError::Failed(_))));
        assert!(matches!(eval_src("fn x => x"), Err(EvalError::TypeMismatch(_))));
    }

    #[test]
    fn infinite_loops_hit_the_budget() {
        let r = eval_src("let loop = fn x => loop(x + 1) in loop(0)");
        assert!(matches!(r, Err(EvalError::BudgetExhausted(_)) | Err(EvalError::TooDeep(_))), "{r:?}");
        let r = eval_src("let grow = fn s => grow(s ++ s) in grow(\"ab\")");
        assert!(matches!(r, Err(EvalError::BudgetExhausted(_))), "{r:?}");
    }

    #[test]
    fn short_circuit() {
        assert_eq!(eval_src("false and 1 / 0 == 0"), Ok(Value::Bool(false)));
        assert_eq!(eval_src("true or 1 / 0 == 0"), Ok(Value::Bool(true)));
    }

    #[test]
    fn list_and_map_builtins() {
        assert_eq!(eval_src("len(append(cons(1, [2]), 3))"), Ok(Value::Int(3)));
        assert_eq!(eval_src("nth(set_nth([1, 2, 3], 1, 9), 1)"), Ok(Value::Int(9)));
        assert_eq!(eval_src("get(put({a: 1}, \"b\", 2), \"b\")"), Ok(Value::Int(2)));
        assert_eq!(eval_src("keys({b: 1, a: 2})"), Ok(Value::List(vec![Value::str("a"), Value::str("b")])));
        assert_eq!(eval_src("str(12) ++ str([1, \"x\"])"), Ok(Value::str("12[1,\"x\"]")));
        assert_eq!(eval_src("int(\"-42\") + mod(-7, 3)"), Ok(Value::Int(-40)));
        assert_eq!(eval_src("tail([1, 2]) ++ [3]"), Ok(Value::List(vec![Value::Int(2), Value::Int(3)])));
    }
}
