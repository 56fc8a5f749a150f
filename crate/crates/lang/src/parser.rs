use crate::ast::{is_bindable, is_identifier, AskStep, BinOp, Builtin, ComputeStep, Expr, OnDeny, ProgramAst, Step};
use crate::error::{ParseError, ParseErrorKind, Pos};
use crate::lexer::{lex_line, Tok, Token};
use idc_core::{Value, ValueMap};
use std::collections::{BTreeMap, HashSet};

/// Maximum syntactic nesting of expressions. Keeps parsing and evaluation
/// within a bounded stack.
pub const MAX_NESTING: usize = 200;

const INDENT: usize = 2;

struct Line<'a> {
    no: usize,
    indent: usize,
    text: &'a str,
}

impl Line<'_> {
    fn start(&self) -> Pos {
        Pos { line: self.no, column: self.indent + 1 }
    }

    fn end(&self) -> Pos {
        Pos { line: self.no, column: self.text.chars().count() + 1 }
    }
}

fn indentation(kind_msg: &str, pos: Pos) -> ParseError {
    ParseError::new(ParseErrorKind::Indentation, pos, kind_msg)
}

fn syntax(pos: Pos, msg: impl Into<String>) -> ParseError {
    ParseError::new(ParseErrorKind::Syntax, pos, msg)
}

/// Parses UTF-8 program bytes.
pub fn parse_bytes(bytes: &[u8]) -> Result<ProgramAst, ParseError> {
    match std::str::from_utf8(bytes) {
        Ok(s) => parse(s),
        Err(e) => {
            let good = &bytes[..e.valid_up_to()];
            let line = good.iter().filter(|&&b| b == b'\n').count() + 1;
            let line_start = good.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
            let column = String::from_utf8_lossy(&good[line_start..]).chars().count() + 1;
            Err(syntax(Pos { line, column }, "source is not valid UTF-8"))
        }
    }
}

pub fn parse(source: &str) -> Result<ProgramAst, ParseError> {
    let lines = significant_lines(source)?;
    let Some((header, rest)) = lines.split_first() else {
        return Err(syntax(Pos { line: 1, column: 1 }, "expected program header"));
    };
    let name = parse_header(header)?;

    let mut capabilities: Option<Vec<String>> = None;
    let mut steps: Vec<Step> = Vec::new();
    let mut names = HashSet::new();
    let mut bindings: Vec<String> = Vec::new();

    let mut i = 0;
    while i < rest.len() {
        let head = &rest[i];
        if head.indent != 0 {
            return Err(indentation("unexpected indentation", head.start()));
        }
        let mut j = i + 1;
        while j < rest.len() && (rest[j].indent > 0 || rest[j].text.starts_with('}')) {
            j += 1;
        }
        let item = &rest[i..j];
        i = j;

        let first_word: String = head.text.chars().take_while(|c| c.is_ascii_alphanumeric() || *c == '_').collect();
        match first_word.as_str() {
            "capabilities" => {
                if capabilities.is_some() {
                    return Err(ParseError::new(
                        ParseErrorKind::DuplicateName,
                        head.start(),
                        "capabilities declared more than once",
                    ));
                }
                if !steps.is_empty() {
                    return Err(syntax(head.start(), "capabilities must be declared before the first step"));
                }
                capabilities = Some(parse_capabilities(item)?);
            }
            "step" => {
                let step = parse_step(item, &bindings)?;
                let pos = item[0].start();
                if !names.insert(step.name().to_string()) {
                    return Err(ParseError::new(
                        ParseErrorKind::DuplicateName,
                        pos,
                        format!("duplicate step name '{}'", step.name()),
                    ));
                }
                if bindings.iter().any(|b| b == step.binding()) {
                    return Err(ParseError::new(
                        ParseErrorKind::DuplicateName,
                        pos,
                        format!("duplicate step binding '{}'", step.binding()),
                    ));
                }
                bindings.push(step.binding().to_string());
                steps.push(step);
            }
            _ => return Err(syntax(head.start(), "expected 'step' or 'capabilities'")),
        }
    }

    Ok(ProgramAst { name, capabilities: capabilities.unwrap_or_default(), steps })
}

/// Non-blank, non-comment lines with their indentation checked.
fn significant_lines(source: &str) -> Result<Vec<Line<'_>>, ParseError> {
    let mut out = Vec::new();
    for (idx, raw) in source.split('\n').enumerate() {
        let no = idx + 1;
        let text = raw.strip_suffix('\r').unwrap_or(raw);
        let indent = text.chars().take_while(|&c| c == ' ').count();
        let rest = &text[indent..];
        if rest.starts_with('\t') {
            return Err(indentation("tab characters are not allowed", Pos { line: no, column: indent + 1 }));
        }
        if rest.is_empty() || rest.starts_with('#') {
            continue;
        }
        if indent % INDENT != 0 {
            return Err(indentation("indentation must be a multiple of 2 spaces", Pos { line: no, column: indent + 1 }));
        }
        out.push(Line { no, indent, text: rest });
    }
    Ok(out)
}

fn lex_item(item: &[Line]) -> Result<Vec<Token>, ParseError> {
    let mut toks = Vec::new();
    for line in item {
        let before = toks.len();
        lex_line(line.text, line.no, &mut toks)?;
        for t in &mut toks[before..] {
            t.pos.column += line.indent;
        }
    }
    Ok(toks)
}

fn parse_header(line: &Line) -> Result<String, ParseError> {
    if line.indent != 0 {
        return Err(indentation("unexpected indentation", line.start()));
    }
    let toks = lex_item(std::slice::from_ref(line)).map_err(|_| syntax(line.start(), "expected program header"))?;
    match toks.as_slice() {
        [Token { tok: Tok::Word(kw), .. }, rest @ ..] if kw == "program" => match rest {
            [Token { tok: Tok::Word(name), .. }] => Ok(name.clone()),
            [] => Err(syntax(line.end(), "expected program name")),
            [t, ..] => Err(syntax(t.pos, "program name must be an identifier")),
        },
        _ => Err(syntax(line.start(), "expected program header")),
    }
}

fn parse_capabilities(item: &[Line]) -> Result<Vec<String>, ParseError> {
    let head = &item[0];
    let toks = lex_item(&item[..1])?;
    match toks.as_slice() {
        [_, Token { tok: Tok::Sym(":"), .. }] => {}
        _ => return Err(syntax(head.start(), "expected 'capabilities:'")),
    }
    let mut caps: Vec<String> = Vec::new();
    for line in &item[1..] {
        if line.indent != INDENT {
            return Err(indentation("capability lines are indented by exactly 2 spaces", line.start()));
        }
        let cap = if line.text.starts_with('"') {
            let toks = lex_item(std::slice::from_ref(line))?;
            match toks.as_slice() {
                [Token { tok: Tok::Str(s), .. }] => s.clone(),
                _ => return Err(syntax(line.start(), "expected one quoted capability per line")),
            }
        } else {
            let body = line.text.split('#').next().unwrap_or("").trim_end_matches(' ');
            if let Some(ws) = body.find(|c: char| c.is_whitespace()) {
                let column = line.indent + body[..ws].chars().count() + 1;
                return Err(syntax(Pos { line: line.no, column }, "capability must be a single token; quote it"));
            }
            if body.contains('"') {
                return Err(syntax(line.start(), "stray quote in capability"));
            }
            body.to_string()
        };
        if cap.is_empty() {
            return Err(syntax(line.start(), "capability must be non-empty"));
        }
        if caps.contains(&cap) {
            return Err(ParseError::new(
                ParseErrorKind::DuplicateName,
                line.start(),
                format!("duplicate capability '{cap}'"),
            ));
        }
        caps.push(cap);
    }
    Ok(caps)
}

fn parse_step(item: &[Line], bindings: &[String]) -> Result<Step, ParseError> {
    let toks = lex_item(item)?;
    let end = item.last().expect("non-empty item").end();
    let mut p = TokenParser { toks: &toks, i: 0, end, scope: Vec::new(), globals: bindings, depth: 0 };
    let step = p.step()?;
    if let Some(t) = p.peek() {
        return Err(syntax(t.pos, format!("unexpected {} after step", t.tok.describe())));
    }
    Ok(step)
}

struct TokenParser<'a> {
    toks: &'a [Token],
    i: usize,
    end: Pos,
    scope: Vec<String>,
    globals: &'a [String],
    depth: usize,
}

impl<'a> TokenParser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.toks.get(self.i)
    }

    fn pos(&self) -> Pos {
        self.peek().map_or(self.end, |t| t.pos)
    }

    fn bump(&mut self) -> Option<&'a Token> {
        let t = self.toks.get(self.i);
        self.i += usize::from(t.is_some());
        t
    }

    fn found(&self) -> String {
        self.peek().map_or_else(|| "end of step".to_string(), |t| t.tok.describe())
    }

    fn at_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Token { tok: Tok::Sym(x), .. }) if *x == s)
    }

    fn at_word(&self, w: &str) -> bool {
        matches!(self.peek(), Some(Token { tok: Tok::Word(x), .. }) if x == w)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        let hit = self.at_sym(s);
        self.i += usize::from(hit);
        hit
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(syntax(self.pos(), format!("expected '{s}', found {}", self.found())))
        }
    }

    fn expect_word(&mut self, w: &str) -> Result<(), ParseError> {
        if self.at_word(w) {
            self.i += 1;
            Ok(())
        } else {
            Err(syntax(self.pos(), format!("expected '{w}', found {}", self.found())))
        }
    }

    fn word(&mut self, what: &str) -> Result<(String, Pos), ParseError> {
        match self.peek() {
            Some(Token { tok: Tok::Word(w), pos }) => {
                self.i += 1;
                Ok((w.clone(), *pos))
            }
            _ => Err(syntax(self.pos(), format!("expected {what}, found {}", self.found()))),
        }
    }

    fn binder(&mut self, what: &str) -> Result<String, ParseError> {
        let (name, pos) = self.word(what)?;
        if !is_bindable(&name) {
            return Err(syntax(pos, format!("'{name}' is reserved and cannot be bound")));
        }
        Ok(name)
    }

    /// A map key: a bare word or a string literal.
    fn key(&mut self) -> Result<(String, Pos), ParseError> {
        match self.peek() {
            Some(Token { tok: Tok::Word(w), pos }) | Some(Token { tok: Tok::Str(w), pos }) => {
                self.i += 1;
                Ok((w.clone(), *pos))
            }
            _ => Err(syntax(self.pos(), format!("expected a key, found {}", self.found()))),
        }
    }

    fn step(&mut self) -> Result<Step, ParseError> {
        self.expect_word("step")?;
        let (name, name_pos) = self.word("step name")?;
        if !is_identifier(&name) {
            return Err(syntax(name_pos, "step name must be an identifier"));
        }
        let binding = if self.at_word("as") {
            self.i += 1;
            self.binder("binding name")?
        } else {
            if !is_bindable(&name) {
                return Err(syntax(name_pos, format!("step name '{name}' is reserved; add 'as <binding>'")));
            }
            name.clone()
        };
        self.expect_sym(":")?;
        if self.at_word("compute") {
            self.i += 1;
            let expr = self.expr()?;
            return Ok(Step::Compute(ComputeStep { name, binding, expr }));
        }
        if !self.at_word("ask") {
            return Err(syntax(self.pos(), format!("expected 'compute' or 'ask', found {}", self.found())));
        }
        self.i += 1;
        self.expect_sym("{")?;
        self.expect_word("machine")?;
        let machine = match self.bump() {
            Some(Token { tok: Tok::Str(s), pos }) => {
                if s.is_empty() {
                    return Err(syntax(*pos, "machine id must be non-empty"));
                }
                s.clone()
            }
            _ => return Err(syntax(self.toks.get(self.i - 1).map_or(self.end, |t| t.pos), "expected machine id string")),
        };
        self.expect_word("input")?;
        self.expect_sym("{")?;
        let mut input_fields = BTreeMap::new();
        while !self.at_sym("}") {
            let (key, pos) = self.key()?;
            self.expect_sym(":")?;
            let value = self.expr()?;
            if input_fields.insert(key.clone(), value).is_some() {
                return Err(ParseError::new(ParseErrorKind::DuplicateName, pos, format!("duplicate input field '{key}'")));
            }
            self.eat_sym(",");
        }
        self.expect_sym("}")?;
        let mut on_deny = OnDeny::Halt;
        if self.at_word("on_deny") {
            self.i += 1;
            self.expect_sym(":")?;
            let (mode, pos) = self.word("'continue' or 'halt'")?;
            on_deny = match mode.as_str() {
                "continue" => OnDeny::Continue,
                "halt" => OnDeny::Halt,
                _ => return Err(syntax(pos, "on_deny must be 'continue' or 'halt'")),
            };
        }
        self.expect_sym("}")?;
        Ok(Step::Ask(AskStep { name, binding, machine, input_fields, on_deny }))
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_NESTING {
            return Err(syntax(self.pos(), "expression nested too deeply"));
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let e = self.binary(1);
        self.depth -= 1;
        e
    }

    fn peek_binop(&self) -> Option<BinOp> {
        Some(match &self.peek()?.tok {
            Tok::Sym("+") => BinOp::Add,
            Tok::Sym("-") => BinOp::Sub,
            Tok::Sym("*") => BinOp::Mul,
            Tok::Sym("/") => BinOp::Div,
            Tok::Sym("++") => BinOp::Concat,
            Tok::Sym("==") => BinOp::Eq,
            Tok::Sym("!=") => BinOp::Ne,
            Tok::Sym("<") => BinOp::Lt,
            Tok::Sym("<=") => BinOp::Le,
            Tok::Sym(">") => BinOp::Gt,
            Tok::Sym(">=") => BinOp::Ge,
            Tok::Word(w) if w == "and" => BinOp::And,
            Tok::Word(w) if w == "or" => BinOp::Or,
            _ => return None,
        })
    }

    fn binary(&mut self, min: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.peek_binop() {
            let prec = op.precedence();
            if prec < min {
                break;
            }
            self.i += 1;
            let rhs = self.binary(prec + 1)?;
            lhs = Expr::binop(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if !self.at_sym("-") {
            return self.postfix();
        }
        self.enter()?;
        self.i += 1;
        // The one literal that only exists negated.
        if let Some(Token { tok: Tok::Int(n), .. }) = self.peek() {
            let postfix_follows = matches!(self.toks.get(self.i + 1), Some(Token { tok: Tok::Sym("." | "("), .. }));
            if *n == 1u64 << 63 && !postfix_follows {
                self.i += 1;
                self.depth -= 1;
                return Ok(Expr::int(i64::MIN));
            }
        }
        let operand = self.unary()?;
        self.depth -= 1;
        Ok(match operand {
            Expr::Lit(Value::Int(n)) if n.checked_neg().is_some() => Expr::int(-n),
            other => Expr::binop(BinOp::Sub, Expr::int(0), other),
        })
    }

    fn postfix(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.primary()?;
        loop {
            if self.eat_sym(".") {
                let (key, _) = self.key()?;
                e = Expr::field(e, key);
            } else if self.at_sym("(") {
                for arg in self.call_args()? {
                    e = Expr::apply(e, arg);
                }
            } else {
                return Ok(e);
            }
        }
    }

    fn call_args(&mut self) -> Result<Vec<Expr>, ParseError> {
        let open = self.pos();
        self.expect_sym("(")?;
        let args = self.comma_list(")")?;
        if args.is_empty() {
            return Err(syntax(open, "a call needs at least one argument"));
        }
        Ok(args)
    }

    fn comma_list(&mut self, close: &str) -> Result<Vec<Expr>, ParseError> {
        let mut items = Vec::new();
        if self.eat_sym(close) {
            return Ok(items);
        }
        loop {
            items.push(self.expr()?);
            if self.eat_sym(close) {
                return Ok(items);
            }
            self.expect_sym(",")?;
        }
    }

    fn is_bound(&self, name: &str) -> bool {
        name == "context" || self.scope.iter().any(|s| s == name) || self.globals.iter().any(|g| g == name)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        let Some(tok) = self.bump() else {
            return Err(syntax(pos, "expected an expression, found end of step"));
        };
        match &tok.tok {
            Tok::Int(n) => i64::try_from(*n)
                .map(Expr::int)
                .map_err(|_| syntax(pos, "integer literal out of range")),
            Tok::Str(s) => Ok(Expr::string(s.clone())),
            Tok::Sym("(") => {
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Sym("[") => {
                self.enter()?;
                let items = self.comma_list("]")?;
                self.depth -= 1;
                Ok(fold_list(items))
            }
            Tok::Sym("{") => {
                self.enter()?;
                let r = self.record(pos);
                self.depth -= 1;
                r
            }
            Tok::Word(w) => match w.as_str() {
                "true" => Ok(Expr::Lit(Value::Bool(true))),
                "false" => Ok(Expr::Lit(Value::Bool(false))),
                "null" => Ok(Expr::Lit(Value::Unit)),
                "let" => self.let_form(),
                "if" => {
                    let c = self.expr()?;
                    self.expect_word("then")?;
                    let t = self.expr()?;
                    self.expect_word("else")?;
                    let e = self.expr()?;
                    Ok(Expr::if_then_else(c, t, e))
                }
                "fn" => self.lambda(),
                "in" | "then" | "else" | "and" | "or" => Err(syntax(pos, format!("unexpected '{w}'"))),
                name => {
                    if let Some(b) = Builtin::from_name(name) {
                        if !self.at_sym("(") {
                            return Err(syntax(pos, format!("builtin '{name}' must be called")));
                        }
                        let args = {
                            self.expect_sym("(")?;
                            self.comma_list(")")?
                        };
                        if !b.accepts_arity(args.len()) {
                            return Err(syntax(pos, format!("wrong number of arguments to '{name}'")));
                        }
                        return Ok(Expr::Builtin(b, args));
                    }
                    if !self.is_bound(name) {
                        return Err(ParseError::new(
                            ParseErrorKind::UnboundIdentifier,
                            pos,
                            format!("unbound identifier '{name}'"),
                        ));
                    }
                    Ok(Expr::var(name))
                }
            },
            other => Err(syntax(pos, format!("expected an expression, found {}", other.describe()))),
        }
    }

    fn let_form(&mut self) -> Result<Expr, ParseError> {
        let name = self.binder("a name after 'let'")?;
        self.expect_sym("=")?;
        // Only function values may refer to themselves.
        let recursive = self.at_word("fn");
        if recursive {
            self.scope.push(name.clone());
        }
        let value = self.expr();
        if recursive {
            self.scope.pop();
        }
        let value = value?;
        self.expect_word("in")?;
        self.scope.push(name.clone());
        let body = self.expr();
        self.scope.pop();
        Ok(Expr::let_in(name, value, body?))
    }

    fn lambda(&mut self) -> Result<Expr, ParseError> {
        let mut params = vec![self.binder("a parameter name")?];
        while !self.at_sym("=>") {
            params.push(self.binder("a parameter name or '=>'")?);
        }
        self.i += 1;
        let depth = self.scope.len();
        self.scope.extend(params.iter().cloned());
        let body = self.expr();
        self.scope.truncate(depth);
        Ok(params.into_iter().rev().fold(body?, |b, p| Expr::lambda(p, b)))
    }

    fn record(&mut self, open: Pos) -> Result<Expr, ParseError> {
        let mut entries: Vec<(String, Expr)> = Vec::new();
        if !self.eat_sym("}") {
            loop {
                let (key, pos) = self.key()?;
                self.expect_sym(":")?;
                let value = self.expr()?;
                if entries.iter().any(|(k, _)| *k == key) {
                    return Err(ParseError::new(ParseErrorKind::DuplicateName, pos, format!("duplicate key '{key}'")));
                }
                entries.push((key, value));
                if self.eat_sym("}") {
                    break;
                }
                if self.peek().is_none() {
                    return Err(syntax(open, "unclosed '{'"));
                }
                self.expect_sym(",")?;
            }
        }
        if entries.iter().all(|(_, e)| matches!(e, Expr::Lit(_))) {
            let map: ValueMap = entries
                .into_iter()
                .map(|(k, e)| match e {
                    Expr::Lit(v) => (k, v),
                    _ => unreachable!("checked above"),
                })
                .collect();
            return Ok(Expr::Lit(Value::Map(map)));
        }
        let args = entries.into_iter().flat_map(|(k, e)| [Expr::string(k), e]).collect();
        Ok(Expr::Builtin(Builtin::Record, args))
    }
}

fn fold_list(items: Vec<Expr>) -> Expr {
    if items.iter().all(|e| matches!(e, Expr::Lit(_))) {
        Expr::Lit(Value::List(
            items
                .into_iter()
                .map(|e| match e {
                    Expr::Lit(v) => v,
                    _ => unreachable!("checked above"),
                })
                .collect(),
        ))
    } else {
        Expr::Builtin(Builtin::List, items)
    }
}
