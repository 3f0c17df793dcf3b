use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;

use super::SyntaxError;
use crate::algebra::{parse_poly, ParseError, SymbolTable, Var, VarKind};
use crate::verify::ConcreteSystem;
use crate::{Poly, PolyMatrix, Rational};

/// A concrete loop read from text:
///
/// ```text
/// x, y = 2, 1
/// while true:
///     x = x + 2
///     y = y + 1
/// ```
///
/// The guard must be `true`; the colon and a closing `end` are optional.
/// Header statements run in order. Body statements are composed
/// sequentially; a tuple statement assigns simultaneously. Constants in the
/// body introduce a hidden variable fixed to `1`. Identifiers in the header
/// that are not assigned anywhere become parameters.
#[derive(Clone, Debug)]
pub struct ParsedLoop {
    pub symbols: SymbolTable,
    /// Visible variables in order of first assignment, then the hidden one.
    pub vars: Vec<Var>,
    pub params: Vec<Var>,
    pub update: PolyMatrix,
    pub init: Vec<Poly>,
    pub constant_one: Option<usize>,
    /// Text of a `# invariant: ...` comment, if present.
    pub invariant: Option<String>,
}

struct Stmt {
    line: usize,
    lhs: Vec<String>,
    rhs: Vec<(usize, String)>,
}

/// Splits at top-level commas, keeping 1-based columns.
fn split_commas(s: &str, col0: usize) -> Vec<(usize, String)> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    let chars: Vec<char> = s.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push((col0 + start, chars[start..i].iter().collect()));
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push((col0 + start, chars[start..].iter().collect()));
    out
}

fn statements(text: &str, line: usize, col0: usize) -> Result<Vec<Stmt>, SyntaxError> {
    let mut out = Vec::new();
    let mut col = col0;
    for part in text.split(';') {
        let width = part.chars().count() + 1;
        if part.trim().is_empty() || matches!(part.trim(), "skip" | "pass") {
            col += width;
            continue;
        }
        let eq = part
            .find('=')
            .filter(|&i| !part[i + 1..].starts_with('='))
            .ok_or_else(|| SyntaxError::new(line, col, "expected an assignment `x = e`"))?;
        let lhs: Vec<String> = part[..eq].split(',').map(|s| s.trim().to_string()).collect();
        for name in &lhs {
            if !crate::algebra::is_identifier(name) {
                return Err(SyntaxError::new(line, col, format!("cannot assign to `{name}`")));
            }
        }
        let rhs = split_commas(&part[eq + 1..], col + part[..eq + 1].chars().count());
        if lhs.len() != rhs.len() {
            return Err(SyntaxError::new(
                line,
                col,
                format!("{} targets but {} values", lhs.len(), rhs.len()),
            ));
        }
        out.push(Stmt { line, lhs, rhs });
        col += width;
    }
    Ok(out)
}

fn identifiers(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in s.chars().chain(std::iter::once(' ')) {
        if c.is_ascii_alphanumeric() || c == '_' || c == '\'' {
            cur.push(c);
        } else {
            if cur.starts_with(|d: char| d.is_ascii_alphabetic() || d == '_') {
                out.push(cur.clone());
            }
            cur.clear();
        }
    }
    out
}

impl ParsedLoop {
    pub fn parse(text: &str) -> Result<ParsedLoop, SyntaxError> {
        let mut header = Vec::new();
        let mut body = Vec::new();
        let mut in_body = false;
        let mut invariant = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            if let Some(inv) = raw.trim_start().strip_prefix('#').and_then(|c| c.trim_start().strip_prefix("invariant:")) {
                invariant = Some(super::normalize_ws(inv));
            }
            let content = raw.split('#').next().unwrap_or("");
            let t = content.trim();
            if t.is_empty() {
                continue;
            }
            let col = content.chars().take_while(|c| c.is_whitespace()).count() + 1;
            if t.starts_with("while") {
                if in_body {
                    return Err(SyntaxError::new(line, col, "only one loop is allowed"));
                }
                let guard = t["while".len()..].trim().trim_end_matches(':').trim_end_matches(" do").trim();
                if !matches!(guard, "true" | "(true)" | "*" | "1") {
                    return Err(SyntaxError::new(line, col, format!("unsupported loop guard `{guard}`")));
                }
                in_body = true;
                continue;
            }
            if matches!(t, "end" | "od" | "done" | "}") {
                if !in_body {
                    return Err(SyntaxError::new(line, col, "`end` before the loop"));
                }
                continue;
            }
            let stmts = statements(t, line, col)?;
            if in_body {
                body.extend(stmts);
            } else {
                header.extend(stmts);
            }
        }
        if !in_body {
            return Err(SyntaxError::new(1, 1, "missing `while true:` line"));
        }

        // every assigned name is a variable, in order of first assignment
        let mut names: Vec<String> = Vec::new();
        for s in header.iter().chain(&body) {
            for n in &s.lhs {
                if !names.contains(n) {
                    names.push(n.clone());
                }
            }
        }
        let mut t = SymbolTable::new();
        let mut vars = Vec::new();
        for n in &names {
            vars.push(t.declare(n, VarKind::Program).map_err(|e| SyntaxError::new(0, 0, e.to_string()))?);
        }
        let mut params: Vec<Var> = Vec::new();
        for s in &header {
            for (_, e) in &s.rhs {
                for id in identifiers(e) {
                    if t.get(&id).is_none() {
                        params.push(t.declare(&id, VarKind::Param).map_err(|e| SyntaxError::new(s.line, 0, e.to_string()))?);
                    }
                }
            }
        }

        let at = |line: usize, col: usize| move |e: ParseError| SyntaxError::new(line, col + e.col - 1, e.msg);
        let resolve = |allow_params: bool| {
            let t = &t;
            move |name: &str, col: usize| match t.get(name) {
                Some(v) if allow_params || *v.kind() == VarKind::Program => Ok(v.clone()),
                Some(_) => Err(ParseError {
                    col,
                    msg: format!("parameter `{name}` in an update"),
                }),
                None => Err(ParseError {
                    col,
                    msg: format!("unknown identifier `{name}`"),
                }),
            }
        };

        let mut init: BTreeMap<Var, Poly> = BTreeMap::new();
        for s in &header {
            let mut vals = Vec::new();
            for (col, e) in &s.rhs {
                let p = parse_poly(e, resolve(true)).map_err(at(s.line, *col))?;
                if let Some(v) = p.vars().into_iter().find(|v| vars.contains(v) && !init.contains_key(v)) {
                    return Err(SyntaxError::new(s.line, *col, format!("`{v}` is used before it is initialized")));
                }
                vals.push(p.substitute(&init));
            }
            for (n, p) in s.lhs.iter().zip(vals) {
                init.insert(t.get(n).unwrap().clone(), p);
            }
        }
        for v in &vars {
            if !init.contains_key(v) {
                return Err(SyntaxError::new(0, 0, format!("`{v}` has no initial value")));
            }
        }

        let mut state: BTreeMap<Var, Poly> = vars.iter().map(|v| (v.clone(), Poly::var(v))).collect();
        for s in &body {
            let mut vals = Vec::new();
            for (col, e) in &s.rhs {
                let p = parse_poly(e, resolve(false)).map_err(at(s.line, *col))?;
                if p.total_degree() > 1 {
                    return Err(SyntaxError::new(s.line, *col, format!("`{}` is not affine", e.trim())));
                }
                vals.push(p.substitute(&state));
            }
            for (n, p) in s.lhs.iter().zip(vals) {
                state.insert(t.get(n).unwrap().clone(), p);
            }
        }

        let needs_one = state.values().any(|p| !p.constant_term().is_zero());
        let mut all = vars.clone();
        let mut constant_one = None;
        if needs_one {
            let one = t.fresh("t", VarKind::Program);
            constant_one = Some(all.len());
            all.push(one.clone());
            init.insert(one.clone(), Poly::one());
            state.insert(one.clone(), Poly::var(&one));
        }
        let s = all.len();
        let update = PolyMatrix::from_fn(s, s, |i, j| {
            let row = &state[&all[i]];
            let mut c: Rational = row.coeff(&crate::algebra::Monomial::var(all[j].clone()));
            if Some(j) == constant_one {
                c += row.constant_term();
            }
            Poly::constant(c)
        });
        let init = all.iter().map(|v| init[v].clone()).collect();
        let used: BTreeSet<Var> = params.iter().cloned().collect();
        Ok(ParsedLoop {
            symbols: t,
            vars: all,
            params: used.into_iter().collect(),
            update,
            init,
            constant_one,
            invariant,
        })
    }

    pub fn system(&self) -> ConcreteSystem<Rational> {
        let mut sys = ConcreteSystem::new(self.vars.clone(), self.update.clone(), PolyMatrix::column(self.init.clone()))
            .expect("consistent dimensions");
        for p in &self.params {
            sys = sys.with_param(p.clone());
        }
        sys
    }

    /// Parses an invariant over this loop's variables and parameters.
    /// Unknown identifiers are rejected.
    pub fn parse_invariant(&self, text: &str) -> Result<Vec<Poly>, SyntaxError> {
        crate::algebra::parse_conjunction(text, |name, col| {
            self.symbols
                .get(name)
                .filter(|v| self.constant_one.is_none_or(|i| self.vars[i] != **v))
                .cloned()
                .ok_or_else(|| ParseError {
                    col,
                    msg: format!("unknown identifier `{name}`"),
                })
        })
        .map_err(|e| SyntaxError::new(1, e.col, e.msg))
    }

    pub fn var(&self, name: &str) -> Option<&Var> {
        self.vars.iter().find(|v| v.name() == name)
    }
}
