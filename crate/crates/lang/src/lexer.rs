use crate::error::{ParseError, ParseErrorKind, Pos};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Word(String),
    Int(u64),
    Str(String),
    Sym(&'static str),
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("'{w}'"),
            Tok::Int(n) => format!("integer {n}"),
            Tok::Str(_) => "string literal".into(),
            Tok::Sym(s) => format!("'{s}'"),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

const SYMBOLS: [&str; 22] = [
    "=>", "==", "!=", "<=", ">=", "++", "(", ")", "[", "]", "{", "}", ",", ":", ".", "=", "+", "-", "*", "/", "<", ">",
];

/// Tokenizes one source line. `line_no` is 1-based; columns count characters
/// from the start of the line.
pub(crate) fn lex_line(text: &str, line_no: usize, out: &mut Vec<Token>) -> Result<(), ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line: line_no, column: i + 1 };
        match c {
            ' ' => i += 1,
            '\t' => return Err(ParseError::new(ParseErrorKind::Indentation, pos, "tab characters are not allowed")),
            '#' => break,
            '"' => {
                let (s, next) = lex_string(&chars, i, line_no)?;
                out.push(Token { tok: Tok::Str(s), pos });
                i = next;
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let digits: String = chars[start..i].iter().collect();
                let n = digits
                    .parse::<u64>()
                    .map_err(|_| ParseError::new(ParseErrorKind::Syntax, pos, "integer literal out of range"))?;
                if i < chars.len() && (chars[i].is_ascii_alphabetic() || chars[i] == '_') {
                    return Err(ParseError::new(
                        ParseErrorKind::Syntax,
                        Pos { line: line_no, column: i + 1 },
                        "identifier cannot start with a digit",
                    ));
                }
                out.push(Token { tok: Tok::Int(n), pos });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Token { tok: Tok::Word(chars[start..i].iter().collect()), pos });
            }
            _ => {
                let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
                let sym = SYMBOLS
                    .iter()
                    .find(|s| rest.starts_with(**s))
                    .ok_or_else(|| ParseError::new(ParseErrorKind::Syntax, pos, format!("unexpected character {c:?}")))?;
                i += sym.chars().count();
                out.push(Token { tok: Tok::Sym(sym), pos });
            }
        }
    }
    Ok(())
}

fn lex_string(chars: &[char], start: usize, line_no: usize) -> Result<(String, usize), ParseError> {
    let mut s = String::new();
    let mut i = start + 1;
    loop {
        let Some(&c) = chars.get(i) else {
            return Err(ParseError::new(
                ParseErrorKind::Syntax,
                Pos { line: line_no, column: start + 1 },
                "unterminated string literal",
            ));
        };
        match c {
            '"' => return Ok((s, i + 1)),
            '\\' => {
                let esc = chars.get(i + 1).copied();
                s.push(match esc {
                    Some('"') => '"',
                    Some('\\') => '\\',
                    Some('n') => '\n',
                    Some('t') => '\t',
                    _ => {
                        return Err(ParseError::new(
                            ParseErrorKind::Syntax,
                            Pos { line: line_no, column: i + 1 },
                            "unsupported escape sequence (allowed: \\\" \\\\ \\n \\t)",
                        ))
                    }
                });
                i += 2;
            }
            c => {
                s.push(c);
                i += 1;
            }
        }
    }
}
