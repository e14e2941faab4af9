//! Parser for the text grammar:
//!
//! ```text
//! expr     := factor+                      juxtaposition is product
//! factor   := unary ('/' unary)*           '/' binds tighter than product
//! unary    := term | sum | '(' expr ')' | '1'
//! term     := 'p(' names ('|' cond (',' cond)*)? ')'
//! cond     := name | 'do(' names ')'
//! sum      := 'sum_' name expr | 'sum_{' names '}' expr
//! name     := ident "'"*                   x' is the fresh name x__1
//! ```
//!
//! A sum's body extends to the end of the enclosing product.

use super::{primed, Expr, ProbTerm};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    One,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Bar,
    Slash,
}

fn tokenize(s: &str) -> Result<Vec<(usize, Tok)>> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        let tok = match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            ',' => Tok::Comma,
            '|' => Tok::Bar,
            '/' => Tok::Slash,
            c if c.is_ascii_alphanumeric() || c == '_' => {
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                let mut primes = 0;
                while i < chars.len() && chars[i] == '\'' {
                    primes += 1;
                    i += 1;
                }
                if word == "1" && primes == 0 {
                    out.push((start, Tok::One));
                } else if word.starts_with(|c: char| c.is_ascii_digit()) {
                    return Err(err(start, &word, "expected a variable name"));
                } else {
                    out.push((start, Tok::Ident(primed(&word, primes))));
                }
                continue;
            }
            other => return Err(err(start, &other.to_string(), "unexpected character")),
        };
        out.push((start, tok));
        i += 1;
    }
    Ok(out)
}

fn err(col: usize, token: &str, msg: &str) -> Error {
    Error::Expr(format!("column {}: {msg} (at `{token}`)", col + 1))
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.len, |(c, _)| *c)
    }

    fn fail<T>(&self, msg: &str) -> Result<T> {
        let token = match self.peek() {
            None => "end of input".to_string(),
            Some(Tok::Ident(s)) => s.clone(),
            Some(t) => format!("{t:?}"),
        };
        Err(err(self.col(), &token, msg))
    }

    fn expect(&mut self, t: Tok, msg: &str) -> Result<()> {
        if self.peek() == Some(&t) {
            self.pos += 1;
            Ok(())
        } else {
            self.fail(msg)
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.fail("expected a variable name"),
        }
    }

    fn names(&mut self) -> Result<Vec<String>> {
        let mut out = vec![self.ident()?];
        while self.peek() == Some(&Tok::Comma) {
            self.pos += 1;
            out.push(self.ident()?);
        }
        Ok(out)
    }

    fn product(&mut self) -> Result<Expr> {
        let mut factors = Vec::new();
        while !matches!(self.peek(), None | Some(Tok::RParen)) {
            factors.push(self.factor()?);
        }
        if factors.is_empty() {
            return self.fail("expected an expression");
        }
        Ok(Expr::product(factors))
    }

    fn factor(&mut self) -> Result<Expr> {
        let mut e = self.unary()?;
        while self.peek() == Some(&Tok::Slash) {
            self.pos += 1;
            e = Expr::quotient(e, self.unary()?);
        }
        Ok(e)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.product()?;
                self.expect(Tok::RParen, "expected `)`")?;
                Ok(e)
            }
            Some(Tok::One) => {
                self.pos += 1;
                Ok(Expr::one())
            }
            Some(Tok::Ident(w)) if w == "p" => {
                self.pos += 1;
                self.term()
            }
            Some(Tok::Ident(w)) if w.starts_with("sum_") => {
                self.pos += 1;
                let vars = if w == "sum_" {
                    self.expect(Tok::LBrace, "expected `{` after `sum_`")?;
                    let vars = self.names()?;
                    self.expect(Tok::RBrace, "expected `}`")?;
                    vars
                } else {
                    vec![w["sum_".len()..].to_string()]
                };
                let body = self.product()?;
                Ok(Expr::sum(&vars, body))
            }
            _ => self.fail("expected `p(`, `sum_`, `(` or `1`"),
        }
    }

    fn term(&mut self) -> Result<Expr> {
        self.expect(Tok::LParen, "expected `(` after `p`")?;
        let targets = self.names()?;
        let (mut given, mut interventions) = (Vec::new(), Vec::new());
        if self.peek() == Some(&Tok::Bar) {
            loop {
                self.pos += 1;
                let name = self.ident()?;
                if name == "do" && self.peek() == Some(&Tok::LParen) {
                    self.pos += 1;
                    interventions.extend(self.names()?);
                    self.expect(Tok::RParen, "expected `)` closing `do(`")?;
                } else {
                    given.push(name);
                }
                if self.peek() != Some(&Tok::Comma) {
                    break;
                }
            }
        }
        let col = self.col();
        self.expect(Tok::RParen, "expected `)` closing the probability term")?;
        let t = ProbTerm { targets, given, interventions };
        t.validate().map_err(|e| err(col, "p(", &e.to_string()))?;
        Ok(Expr::Prob(t))
    }
}

/// Parses the text grammar produced by [`super::render_text`].
pub fn parse_expr(text: &str) -> Result<Expr> {
    let mut p = Parser { toks: tokenize(text)?, pos: 0, len: text.chars().count() };
    let e = p.product()?;
    if p.pos != p.toks.len() {
        return p.fail("unexpected token");
    }
    e.validate()?;
    Ok(e)
}
