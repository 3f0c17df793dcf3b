//! Text grammar for polynomials:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/')? unary)*      juxtaposition multiplies
//! unary  := '-' unary | '+' unary | power
//! power  := atom ('^' natural)?
//! atom   := number | ident | '(' expr ')'
//! ```
//!
//! Division is only allowed by nonzero constants. Numbers are integers or
//! decimals; `3/4` parses as a constant quotient. An identifier the resolver
//! rejects is read as a product of accepted ones when possible (`xz`).

use num_rational::BigRational;
use num_traits::Zero;

use super::{Polynomial, Var};
use crate::scalar::parse_rational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("column {col}: {msg}")]
pub struct ParseError {
    /// 1-based character column.
    pub col: usize,
    pub msg: String,
}

impl ParseError {
    /// Error at a 0-based column.
    pub fn at(col: usize, msg: impl Into<String>) -> Self {
        ParseError {
            col: col + 1,
            msg: msg.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            if text.matches('.').count() > 1 {
                return Err(ParseError::at(start, format!("malformed number `{text}`")));
            }
            out.push((start, Tok::Num(text)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                i += 1;
            }
            out.push((start, Tok::Ident(chars[start..i].iter().collect())));
        } else if "+-*/^()".contains(c) {
            out.push((i, Tok::Op(c)));
            i += 1;
        } else {
            return Err(ParseError::at(i, format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

struct Parser<'a, F> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    resolve: &'a mut F,
}

type Poly = Polynomial<BigRational>;

impl<F> Parser<'_, F>
where
    F: FnMut(&str, usize) -> Result<Var, ParseError>,
{
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map(|(c, _)| *c).unwrap_or(self.end)
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Poly, ParseError> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc += self.term()?;
            } else if self.eat('-') {
                acc -= self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    /// Reads an unresolved identifier such as `xz` as a product of known
    /// identifiers, using the fewest factors.
    fn split_product(&mut self, name: &str, col: usize) -> Option<Poly> {
        let chars: Vec<char> = name.chars().collect();
        let n = chars.len();
        // best[i]: fewest factors covering chars[..i], with the last cut
        let mut best: Vec<Option<(usize, usize, Var)>> = vec![None; n + 1];
        let mut cost = vec![usize::MAX; n + 1];
        cost[0] = 0;
        for i in 0..n {
            if cost[i] == usize::MAX || !(chars[i].is_ascii_alphabetic() || chars[i] == '_') {
                continue;
            }
            for j in i + 1..=n {
                if (i, j) == (0, n) || cost[i] + 1 >= cost[j] {
                    continue;
                }
                let piece: String = chars[i..j].iter().collect();
                if let Ok(v) = (self.resolve)(&piece, col + i) {
                    cost[j] = cost[i] + 1;
                    best[j] = Some((i, cost[j], v));
                }
            }
        }
        let mut acc = Poly::one();
        let mut j = n;
        while j > 0 {
            let (i, _, v) = best[j].clone()?;
            acc *= Poly::var(&v);
            j = i;
        }
        Some(acc)
    }

    fn starts_factor(&self) -> bool {
        matches!(self.peek(), Some(Tok::Num(_)) | Some(Tok::Ident(_)) | Some(Tok::Op('(')))
    }

    fn term(&mut self) -> Result<Poly, ParseError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc *= self.unary()?;
            } else if self.peek() == Some(&Tok::Op('/')) {
                let col = self.col();
                self.pos += 1;
                let d = self.unary()?;
                match d.constant_value() {
                    Some(k) if !k.is_zero() => acc = acc.div_scalar(&k),
                    Some(_) => return Err(ParseError::at(col, "division by zero")),
                    None => return Err(ParseError::at(col, "division by a non-constant")),
                }
            } else if self.starts_factor() {
                acc *= self.power()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Poly, ParseError> {
        if self.eat('-') {
            Ok(-self.unary()?)
        } else if self.eat('+') {
            self.unary()
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Poly, ParseError> {
        let base = self.atom()?;
        if self.eat('^') {
            let col = self.col();
            match self.peek().cloned() {
                Some(Tok::Num(n)) => {
                    let e: u32 = n
                        .parse()
                        .map_err(|_| ParseError::at(col, format!("exponent `{n}` is not a natural number")))?;
                    self.pos += 1;
                    Ok(base.pow(e))
                }
                _ => Err(ParseError::at(col, "expected a natural-number exponent")),
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Poly, ParseError> {
        let col = self.col();
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                self.pos += 1;
                let r = parse_rational(&n).ok_or_else(|| ParseError::at(col, format!("bad number `{n}`")))?;
                Ok(Poly::constant(r))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                match (self.resolve)(&name, col + 1) {
                    Ok(v) => Ok(Poly::var(&v)),
                    Err(e) => self.split_product(&name, col + 1).ok_or(e),
                }
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(')') {
                    return Err(ParseError::at(self.col(), "expected `)`"));
                }
                Ok(inner)
            }
            Some(Tok::Op(c)) => Err(ParseError::at(col, format!("unexpected `{c}`"))),
            None => Err(ParseError::at(col, "unexpected end of input")),
        }
    }
}

/// Parses a polynomial. `resolve` maps an identifier (and its 1-based column
/// within the parsed fragment) to a variable or rejects it.
pub fn parse_poly<F>(src: &str, mut resolve: F) -> Result<Poly, ParseError>
where
    F: FnMut(&str, usize) -> Result<Var, ParseError>,
{
    let toks = tokenize(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: src.chars().count(),
        resolve: &mut resolve,
    };
    let out = p.expr()?;
    if p.pos < p.toks.len() {
        return Err(ParseError::at(p.col(), "trailing input"));
    }
    Ok(out)
}

/// Parses `lhs == rhs` into `lhs - rhs`; a bare expression means `expr == 0`.
pub fn parse_equation<F>(src: &str, mut resolve: F) -> Result<Poly, ParseError>
where
    F: FnMut(&str, usize) -> Result<Var, ParseError>,
{
    match src.find("==") {
        Some(at) => {
            let lhs = parse_poly(&src[..at], &mut resolve)?;
            let rhs = parse_poly(&src[at + 2..], &mut resolve).map_err(|e| {
                ParseError {
                    col: e.col + src[..at + 2].chars().count(),
                    msg: e.msg,
                }
            })?;
            Ok(lhs - rhs)
        }
        None => parse_poly(src, resolve),
    }
}

/// Parses a conjunction `eq && eq && ...`.
pub fn parse_conjunction<F>(src: &str, mut resolve: F) -> Result<Vec<Poly>, ParseError>
where
    F: FnMut(&str, usize) -> Result<Var, ParseError>,
{
    let mut out = Vec::new();
    let mut offset = 0;
    for part in src.split("&&") {
        let shift = src[..offset].chars().count();
        let p = parse_equation(part, &mut resolve).map_err(|e| ParseError {
            col: e.col + shift,
            msg: e.msg,
        })?;
        out.push(p);
        offset += part.len() + 2;
    }
    Ok(out)
}
