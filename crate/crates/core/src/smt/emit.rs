//! SMT-LIB 2 rendering of clauses and the reverse translation of terms.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use num_traits::{One, Signed, ToPrimitive, Zero};

use super::sexpr::{parse_all, SExpr};
use crate::algebra::{Atom, Clause, Monomial, Origin, Rel, SymbolTable, Var};
use crate::pcp::Pcp;
use crate::scalar::parse_rational;
use crate::{Poly, RClause, Rational};

const RESERVED: &[&str] = &[
    "abs", "and", "as", "assert", "declare-const", "declare-fun", "define-fun", "distinct", "div", "exists", "false",
    "forall", "ite", "let", "match", "mod", "not", "or", "par", "pi", "root-obj", "to_int", "to_real", "true", "xor",
    "exp", "is_int", "rem",
];

/// A symbol, `|quoted|` when it is reserved or not a plain identifier.
pub fn symbol(name: &str) -> String {
    let simple = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.');
    if simple && !RESERVED.contains(&name) {
        name.to_string()
    } else {
        format!("|{name}|")
    }
}

fn rational(r: &Rational) -> String {
    let body = if r.is_integer() {
        r.abs().numer().to_string()
    } else {
        format!("(/ {} {})", r.numer().abs(), r.denom())
    };
    if r.is_negative() {
        format!("(- {body})")
    } else {
        body
    }
}

fn monomial(m: &Monomial) -> Option<String> {
    let mut factors = Vec::new();
    for (v, e) in m.factors() {
        for _ in 0..*e {
            factors.push(symbol(v.name()));
        }
    }
    match factors.len() {
        0 => None,
        1 => factors.pop(),
        _ => Some(format!("(* {})", factors.join(" "))),
    }
}

/// `|c| * m`, with the unit coefficient left out.
fn magnitude(m: &Monomial, c: &Rational) -> String {
    let c = c.abs();
    match monomial(m) {
        None => rational(&c),
        Some(ms) if c.is_one() => ms,
        Some(ms) => format!("(* {} {ms})", rational(&c)),
    }
}

/// Polynomial term: positive terms summed, negative ones subtracted.
pub fn term(p: &Poly) -> String {
    if p.is_zero() {
        return "0".into();
    }
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (m, c) in p.terms().rev() {
        if c.is_negative() {
            neg.push(magnitude(m, c));
        } else {
            pos.push(magnitude(m, c));
        }
    }
    let sum = |xs: &[String]| {
        if xs.len() == 1 {
            xs[0].clone()
        } else {
            format!("(+ {})", xs.join(" "))
        }
    };
    match (pos.is_empty(), neg.is_empty()) {
        (false, true) => sum(&pos),
        (true, false) => format!("(- {})", sum(&neg)),
        _ => format!("(- {} {})", sum(&pos), neg.join(" ")),
    }
}

pub fn atom(a: &Atom<Rational>) -> String {
    let t = term(&a.lhs);
    match a.rel {
        Rel::Eq => format!("(= {t} 0)"),
        Rel::Ne => format!("(not (= {t} 0))"),
        Rel::Lt => format!("(< {t} 0)"),
        Rel::Le => format!("(<= {t} 0)"),
        Rel::Gt => format!("(> {t} 0)"),
        Rel::Ge => format!("(>= {t} 0)"),
    }
}

pub fn clause(c: &RClause) -> String {
    if c.atoms.len() == 1 {
        atom(&c.atoms[0])
    } else {
        let parts: Vec<String> = c.atoms.iter().map(atom).collect();
        format!("(or {})", parts.join(" "))
    }
}

/// Ingredients of one solver query.
#[derive(Clone, Debug, Default)]
pub struct Script {
    /// Hard clauses with their `:named` labels. Labels share the namespace
    /// of declared constants, so they always contain a `!`.
    pub hard: Vec<(String, RClause)>,
    pub soft: Vec<RClause>,
    /// Symbols whose values are requested after `sat`.
    pub query: Vec<Var>,
    pub cores: bool,
}

impl Script {
    pub fn render(&self) -> String {
        let mut decls: BTreeSet<Var> = self.query.iter().cloned().collect();
        for (_, c) in &self.hard {
            decls.extend(c.vars());
        }
        for c in &self.soft {
            decls.extend(c.vars());
        }
        let mut out = String::new();
        out.push_str("(set-option :produce-models true)\n");
        if self.cores {
            out.push_str("(set-option :produce-unsat-cores true)\n");
        }
        out.push_str("(set-logic QF_NRA)\n");
        for v in &decls {
            let _ = writeln!(out, "(declare-const {} Real)", symbol(v.name()));
        }
        for (label, c) in &self.hard {
            if self.cores {
                let _ = writeln!(out, "(assert (! {} :named {label}))", clause(c));
            } else {
                let _ = writeln!(out, "(assert {})", clause(c));
            }
        }
        for c in &self.soft {
            let _ = writeln!(out, "(assert-soft {})", clause(c));
        }
        out.push_str("(check-sat)\n");
        if !self.query.is_empty() {
            let names: Vec<String> = self.query.iter().map(|v| symbol(v.name())).collect();
            let _ = writeln!(out, "(get-value ({}))", names.join(" "));
        }
        if self.cores {
            out.push_str("(get-unsat-core)\n");
        }
        out.push_str("(exit)\n");
        out
    }
}

/// Script for a whole PCP: hard clauses named `c!<index>`, soft clauses as
/// `assert-soft`, every used symbol queried.
pub fn pcp_script(pcp: &Pcp, soft: bool) -> Script {
    let mut s = Script {
        query: pcp.used_symbols().into_iter().collect(),
        cores: true,
        ..Script::default()
    };
    for (i, c) in pcp.clauses.iter().enumerate() {
        if !c.soft {
            s.hard.push((format!("c!{i}"), c.clone()));
        } else if soft {
            s.soft.push(c.clone());
        }
    }
    s
}

/// The deterministic SMT-LIB 2 script for `pcp`.
pub fn emit_smtlib(pcp: &Pcp) -> String {
    pcp_script(pcp, true).render()
}

/// Evaluates an arithmetic term over `+ - * / ^`, numerals and symbols.
pub fn term_to_poly(e: &SExpr, resolve: &mut dyn FnMut(&str) -> Option<Var>) -> Result<Poly, String> {
    match e {
        SExpr::Atom(a) => {
            if a.starts_with(|c: char| c.is_ascii_digit()) {
                parse_rational(a).map(Poly::constant).ok_or_else(|| format!("bad numeral `{a}`"))
            } else {
                resolve(a).map(|v| Poly::var(&v)).ok_or_else(|| format!("unknown symbol `{a}`"))
            }
        }
        SExpr::Str(s) => Err(format!("unexpected string \"{s}\"")),
        SExpr::List(items) => {
            let (head, args) = match items.split_first() {
                Some((SExpr::Atom(h), rest)) if !rest.is_empty() => (h.as_str(), rest),
                _ => return Err(format!("unexpected term `{e}`")),
            };
            let mut vals = args
                .iter()
                .map(|a| term_to_poly(a, resolve))
                .collect::<Result<Vec<_>, _>>()?;
            match head {
                "+" => Ok(vals.into_iter().sum()),
                "*" => Ok(vals.into_iter().product()),
                "-" if vals.len() == 1 => Ok(-vals.pop().unwrap()),
                "-" => {
                    let first = vals.remove(0);
                    Ok(vals.iter().fold(first, |acc, v| &acc - v))
                }
                "/" => {
                    let first = vals.remove(0);
                    vals.iter().try_fold(first, |acc, v| match v.constant_value() {
                        Some(c) if !c.is_zero() => Ok(acc.div_scalar(&c)),
                        _ => Err(format!("division by non-constant or zero in `{e}`")),
                    })
                }
                "^" if vals.len() == 2 => {
                    let k = vals[1]
                        .constant_value()
                        .filter(|k| k.is_integer() && !k.is_negative())
                        .and_then(|k| k.to_integer().to_u32())
                        .ok_or_else(|| format!("exponent must be a natural number in `{e}`"))?;
                    Ok(vals[0].pow(k))
                }
                _ => Err(format!("unsupported operator `{head}`")),
            }
        }
    }
}

fn atom_from(e: &SExpr, resolve: &mut dyn FnMut(&str) -> Option<Var>) -> Result<Atom<Rational>, String> {
    let items = e.list().ok_or_else(|| format!("expected a relation, got `{e}`"))?;
    match items {
        [SExpr::Atom(n), inner] if n == "not" => Ok(atom_from(inner, resolve)?.negate()),
        [SExpr::Atom(r), lhs, rhs] => {
            let rel = match r.as_str() {
                "=" => Rel::Eq,
                "<" => Rel::Lt,
                "<=" => Rel::Le,
                ">" => Rel::Gt,
                ">=" => Rel::Ge,
                _ => return Err(format!("unsupported relation `{r}`")),
            };
            let d = term_to_poly(lhs, resolve)? - term_to_poly(rhs, resolve)?;
            Ok(Atom::new(d, rel))
        }
        _ => Err(format!("expected a relation, got `{e}`")),
    }
}

fn clause_from(e: &SExpr, resolve: &mut dyn FnMut(&str) -> Option<Var>) -> Result<RClause, String> {
    let atoms = if e.is_call("or") {
        e.list().unwrap()[1..]
            .iter()
            .map(|a| atom_from(a, resolve))
            .collect::<Result<Vec<_>, _>>()?
    } else {
        vec![atom_from(e, resolve)?]
    };
    Ok(Clause::new(atoms, Origin::User))
}

/// Reads back the assertions of a script: `(label, clause)` with soft
/// clauses flagged. Symbols are resolved through `table`.
pub fn reparse_asserts(script: &str, table: &SymbolTable) -> Result<Vec<(Option<String>, RClause)>, String> {
    let mut resolve = |name: &str| table.get(name).cloned();
    let mut out = Vec::new();
    for cmd in parse_all(script).map_err(|e| e.to_string())? {
        let items = match cmd.list() {
            Some(items) => items,
            None => continue,
        };
        match items.first().and_then(SExpr::atom) {
            Some("assert") => {
                let body = items.get(1).ok_or("empty assert")?;
                if body.is_call("!") {
                    let parts = body.list().unwrap();
                    let label = parts
                        .windows(2)
                        .find(|w| w[0].atom() == Some(":named"))
                        .and_then(|w| w[1].atom())
                        .map(str::to_string);
                    out.push((label, clause_from(&parts[1], &mut resolve)?));
                } else {
                    out.push((None, clause_from(body, &mut resolve)?));
                }
            }
            Some("assert-soft") => {
                let body = items.get(1).ok_or("empty assert-soft")?;
                out.push((None, clause_from(body, &mut resolve)?.soft()));
            }
            _ => {}
        }
    }
    Ok(out)
}
