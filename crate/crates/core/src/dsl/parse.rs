//! Lexer and recursive-descent parser for the Lagrangian language.
//!
//! ```text
//! equation := expr '=' expr
//! expr     := term (('+' | '-') term)*
//! term     := unary (('*' | '/') unary)*
//! unary    := '-' unary | power
//! power    := atom ('^' '-'? INT)?
//! atom     := NUMBER | IDENT | IDENT '(' IDENT (',' IDENT)? ')' | '(' expr ')'
//! ```
//!
//! `d(f,v)` and `d2(f,v)` are first and second partial derivatives. Any
//! other `IDENT(...)` must name a declared opaque function such as `V(x)`.

use std::collections::{BTreeMap, BTreeSet};

use super::expr::{Axis, Expr, FIELD, IMAG, PI, POSITION};
use super::DslError;

#[derive(Clone, Debug, PartialEq)]
pub struct ConstantInfo {
    pub unit: String,
    pub complex: bool,
}

/// The set of names a Lagrangian may refer to.
#[derive(Clone, Debug, PartialEq)]
pub struct Vocabulary {
    constants: BTreeMap<String, ConstantInfo>,
    functions: BTreeSet<String>,
}

const BUILTIN_CONSTANTS: &[(&str, &str)] = &[
    ("m", "mass"),
    ("k", "mass/time^2"),
    ("V", "energy"),
    ("F", "mass*length/time^2"),
    ("v", "length/time"),
    ("c_w", "length/time"),
    ("nu", "1/time"),
    ("psi0", "field"),
    ("hbar", "action"),
    ("q", "charge"),
];

impl Default for Vocabulary {
    fn default() -> Self {
        let constants = BUILTIN_CONSTANTS
            .iter()
            .map(|(n, u)| {
                (
                    n.to_string(),
                    ConstantInfo {
                        unit: u.to_string(),
                        complex: false,
                    },
                )
            })
            .collect();
        Vocabulary {
            constants,
            functions: ["V".to_string()].into_iter().collect(),
        }
    }
}

impl Vocabulary {
    pub fn declare_constant(&mut self, name: &str, unit: &str, complex: bool) {
        self.constants.insert(
            canonical_name(name),
            ConstantInfo {
                unit: unit.to_string(),
                complex,
            },
        );
    }

    pub fn is_constant(&self, name: &str) -> bool {
        name == PI || name == IMAG || self.constants.contains_key(name)
    }

    pub fn constant(&self, name: &str) -> Option<&ConstantInfo> {
        self.constants.get(name)
    }

    pub fn is_function(&self, name: &str) -> bool {
        self.functions.contains(name)
    }

    pub fn is_dynamic(name: &str) -> bool {
        name == POSITION || name == FIELD
    }
}

/// Maps the accepted Unicode spellings onto the ASCII names used internally.
pub fn canonical_name(name: &str) -> String {
    match name {
        "ψ" => "psi",
        "ψ₀" | "ψ0" => "psi0",
        "ħ" => "hbar",
        "ν" => "nu",
        "π" => "pi",
        other => other,
    }
    .to_string()
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    End,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, DslError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (1usize, 1usize);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v: f64 = text.parse().map_err(|_| DslError::Syntax {
                line: tl,
                col: tc,
                message: format!("malformed number `{text}`"),
            })?;
            col += i - start;
            out.push(Token {
                tok: Tok::Num(v),
                line: tl,
                col: tc,
            });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            out.push(Token {
                tok: Tok::Ident(canonical_name(&text)),
                line: tl,
                col: tc,
            });
            continue;
        }
        if "+-*/^(),=".contains(c) {
            out.push(Token {
                tok: Tok::Op(c),
                line: tl,
                col: tc,
            });
            i += 1;
            col += 1;
            continue;
        }
        return Err(DslError::Syntax {
            line: tl,
            col: tc,
            message: format!("unexpected character `{c}`"),
        });
    }
    out.push(Token {
        tok: Tok::End,
        line,
        col,
    });
    Ok(out)
}

struct Parser<'v> {
    toks: Vec<Token>,
    pos: usize,
    vocab: &'v Vocabulary,
}

impl<'v> Parser<'v> {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, tok: &Token, message: impl Into<String>) -> Result<T, DslError> {
        Err(DslError::Syntax {
            line: tok.line,
            col: tok.col,
            message: message.into(),
        })
    }

    fn expect_op(&mut self, op: char) -> Result<(), DslError> {
        let t = self.bump();
        if t.tok == Tok::Op(op) {
            Ok(())
        } else {
            self.error(&t, format!("expected `{op}`, found {}", describe(&t.tok)))
        }
    }

    fn expr(&mut self) -> Result<Expr, DslError> {
        let mut terms = vec![self.term()?];
        loop {
            match self.peek().tok {
                Tok::Op('+') => {
                    self.bump();
                    terms.push(self.term()?);
                }
                Tok::Op('-') => {
                    self.bump();
                    terms.push(Expr::Neg(Box::new(self.term()?)));
                }
                _ => break,
            }
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            Expr::Add(terms)
        })
    }

    fn term(&mut self) -> Result<Expr, DslError> {
        let mut factors = vec![self.unary()?];
        loop {
            match self.peek().tok {
                Tok::Op('*') => {
                    self.bump();
                    factors.push(self.unary()?);
                }
                Tok::Op('/') => {
                    self.bump();
                    let rhs = self.unary()?;
                    let lhs = collapse(std::mem::take(&mut factors));
                    factors.push(Expr::Div(Box::new(lhs), Box::new(rhs)));
                }
                _ => break,
            }
        }
        Ok(collapse(factors))
    }

    fn unary(&mut self) -> Result<Expr, DslError> {
        if self.peek().tok == Tok::Op('-') {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, DslError> {
        let base = self.atom()?;
        if self.peek().tok != Tok::Op('^') {
            return Ok(base);
        }
        self.bump();
        let negative = if self.peek().tok == Tok::Op('-') {
            self.bump();
            true
        } else {
            false
        };
        let t = self.bump();
        match t.tok {
            Tok::Num(v) if v.fract() == 0.0 && v <= i32::MAX as f64 => {
                let n = v as i32;
                Ok(Expr::Pow(Box::new(base), if negative { -n } else { n }))
            }
            _ => self.error(&t, "exponent must be an integer literal"),
        }
    }

    fn ident(&mut self) -> Result<(String, Token), DslError> {
        let t = self.bump();
        match &t.tok {
            Tok::Ident(s) => Ok((s.clone(), t)),
            other => self.error(&t, format!("expected a name, found {}", describe(other))),
        }
    }

    fn atom(&mut self) -> Result<Expr, DslError> {
        let t = self.bump();
        match t.tok.clone() {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect_op(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if self.peek().tok == Tok::Op('(') {
                    self.bump();
                    self.application(name, &t)
                } else if Vocabulary::is_dynamic(&name) || self.vocab.is_constant(&name) {
                    Ok(Expr::Sym(name))
                } else {
                    Err(DslError::Undeclared {
                        name,
                        line: t.line,
                        col: t.col,
                    })
                }
            }
            other => self.error(&t, format!("unexpected {}", describe(&other))),
        }
    }

    fn application(&mut self, name: String, at: &Token) -> Result<Expr, DslError> {
        if name == "d" || name == "d2" {
            let (of, of_tok) = self.ident()?;
            self.expect_op(',')?;
            let (wrt, wrt_tok) = self.ident()?;
            self.expect_op(')')?;
            let wrt = match wrt.as_str() {
                "t" => Axis::T,
                "x" => Axis::X,
                _ => return self.error(&wrt_tok, format!("cannot differentiate with respect to `{wrt}`")),
            };
            let valid = match (of.as_str(), wrt) {
                (POSITION, Axis::T) | (FIELD, _) => true,
                (f, Axis::X) => self.vocab.is_function(f),
                _ => false,
            };
            if !valid {
                return self.error(&of_tok, format!("`{name}({of},{})` is not a supported derivative", wrt.name()));
            }
            let order = if name == "d2" { 2 } else { 1 };
            return Ok(Expr::Deriv { of, wrt, order });
        }
        if !self.vocab.is_function(&name) {
            return Err(DslError::Undeclared {
                name,
                line: at.line,
                col: at.col,
            });
        }
        let (arg, arg_tok) = self.ident()?;
        if arg != POSITION {
            return self.error(&arg_tok, format!("`{name}` may only be applied to `x`"));
        }
        self.expect_op(')')?;
        Ok(Expr::Call { func: name, arg })
    }

    fn finish(&mut self) -> Result<(), DslError> {
        let t = self.bump();
        if t.tok == Tok::End {
            Ok(())
        } else {
            self.error(&t, format!("unexpected {} after expression", describe(&t.tok)))
        }
    }
}

fn collapse(mut factors: Vec<Expr>) -> Expr {
    if factors.len() == 1 {
        factors.pop().unwrap()
    } else {
        Expr::Mul(factors)
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(v) => format!("number `{v}`"),
        Tok::Ident(s) => format!("name `{s}`"),
        Tok::Op(c) => format!("`{c}`"),
        Tok::End => "end of input".to_string(),
    }
}

/// Parses a single expression (a Lagrangian).
pub fn parse_lagrangian(source: &str, vocab: &Vocabulary) -> Result<Expr, DslError> {
    let mut p = Parser {
        toks: lex(source)?,
        pos: 0,
        vocab,
    };
    if p.peek().tok == Tok::End {
        return p.error(&p.peek().clone(), "empty expression");
    }
    let e = p.expr()?;
    p.finish()?;
    Ok(e)
}

/// Parses `lhs = rhs`.
pub fn parse_equation(source: &str, vocab: &Vocabulary) -> Result<(Expr, Expr), DslError> {
    let mut p = Parser {
        toks: lex(source)?,
        pos: 0,
        vocab,
    };
    let lhs = p.expr()?;
    p.expect_op('=')?;
    let rhs = p.expr()?;
    p.finish()?;
    Ok((lhs, rhs))
}
