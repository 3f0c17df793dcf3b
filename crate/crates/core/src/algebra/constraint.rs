use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::Serialize;

use super::{Polynomial, Var};
use crate::scalar::Scalar;

/// Relation of an atom's polynomial against zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Rel {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
}

impl Rel {
    pub fn symbol(self) -> &'static str {
        match self {
            Rel::Eq => "=",
            Rel::Ne => "!=",
            Rel::Lt => "<",
            Rel::Le => "<=",
            Rel::Gt => ">",
            Rel::Ge => ">=",
        }
    }

    pub fn holds<C: Scalar + PartialOrd>(self, value: &C) -> bool {
        let zero = C::zero();
        match self {
            Rel::Eq => value.is_negligible(),
            Rel::Ne => !value.is_negligible(),
            Rel::Lt => *value < zero,
            Rel::Le => *value <= zero,
            Rel::Gt => *value > zero,
            Rel::Ge => *value >= zero,
        }
    }

    fn flipped(self) -> Rel {
        match self {
            Rel::Lt => Rel::Gt,
            Rel::Le => Rel::Ge,
            Rel::Gt => Rel::Lt,
            Rel::Ge => Rel::Le,
            r => r,
        }
    }
}

/// `lhs ⋈ 0`. Equalities and disequalities are stored with a positive leading
/// coefficient, so `p = 0` and `-p = 0` are the same atom.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(bound(serialize = "C: Scalar"))]
pub struct Atom<C> {
    pub lhs: Polynomial<C>,
    pub rel: Rel,
}

impl<C: Scalar> Atom<C> {
    pub fn new(lhs: Polynomial<C>, rel: Rel) -> Self {
        match rel {
            Rel::Eq | Rel::Ne => Atom {
                lhs: lhs.normalize_sign(),
                rel,
            },
            _ => Atom { lhs, rel },
        }
    }

    pub fn eq(lhs: Polynomial<C>) -> Self {
        Self::new(lhs, Rel::Eq)
    }

    pub fn ne(lhs: Polynomial<C>) -> Self {
        Self::new(lhs, Rel::Ne)
    }

    pub fn negate(&self) -> Self {
        let rel = match self.rel {
            Rel::Eq => Rel::Ne,
            Rel::Ne => Rel::Eq,
            Rel::Lt => Rel::Ge,
            Rel::Le => Rel::Gt,
            Rel::Gt => Rel::Le,
            Rel::Ge => Rel::Lt,
        };
        Atom::new(self.lhs.clone(), rel)
    }

    /// The same constraint over `-lhs`.
    pub fn mirrored(&self) -> Self {
        Atom::new(-&self.lhs, self.rel.flipped())
    }

    /// Truth value when `lhs` is constant.
    pub fn decide(&self) -> Option<bool>
    where
        C: PartialOrd,
    {
        self.lhs.constant_value().map(|c| self.rel.holds(&c))
    }
}

impl<C: Scalar> fmt::Display for Atom<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} 0", self.lhs, self.rel.symbol())
    }
}

impl<C: Scalar> fmt::Debug for Atom<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Which generator produced a clause.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    Roots,
    Init,
    Coeff,
    Alg,
    Nontrivial,
    Partition,
    Blocking,
    User,
}

/// A disjunction of atoms.
#[derive(Clone, Serialize)]
#[serde(bound(serialize = "C: Scalar"))]
pub struct Clause<C> {
    pub atoms: Vec<Atom<C>>,
    pub soft: bool,
    pub origin: Origin,
}

impl<C: Scalar> Clause<C> {
    /// Builds a clause; duplicate disjuncts are removed and the rest sorted.
    pub fn new(atoms: Vec<Atom<C>>, origin: Origin) -> Self
    where
        C: Ord,
    {
        assert!(!atoms.is_empty(), "a clause needs at least one disjunct");
        let set: BTreeSet<Atom<C>> = atoms.into_iter().collect();
        Clause {
            atoms: set.into_iter().collect(),
            soft: false,
            origin,
        }
    }

    pub fn unit(atom: Atom<C>, origin: Origin) -> Self {
        Clause {
            atoms: vec![atom],
            soft: false,
            origin,
        }
    }

    pub fn eq_zero(p: Polynomial<C>, origin: Origin) -> Self {
        Self::unit(Atom::eq(p), origin)
    }

    pub fn ne_zero(p: Polynomial<C>, origin: Origin) -> Self {
        Self::unit(Atom::ne(p), origin)
    }

    pub fn soft(mut self) -> Self {
        self.soft = true;
        self
    }

    pub fn is_unit(&self) -> bool {
        self.atoms.len() == 1
    }

    /// The polynomial of a unit equality clause.
    pub fn as_unit_eq(&self) -> Option<&Polynomial<C>> {
        match self.atoms.as_slice() {
            [a] if a.rel == Rel::Eq => Some(&a.lhs),
            _ => None,
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.atoms.iter().flat_map(|a| a.lhs.vars()).collect()
    }

    /// Identity used for deduplication: the atoms and the soft flag.
    fn key(&self) -> (&[Atom<C>], bool) {
        (&self.atoms, self.soft)
    }

    /// Exact evaluation under a total assignment. `None` if a variable is
    /// unbound.
    pub fn eval(&self, values: &BTreeMap<Var, C>) -> Option<bool>
    where
        C: PartialOrd,
    {
        let mut any = false;
        for a in &self.atoms {
            let v = a.lhs.eval(values)?;
            any |= a.rel.holds(&v);
        }
        Some(any)
    }
}

impl<C: Scalar + Eq + std::hash::Hash> PartialEq for Clause<C> {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl<C: Scalar + Eq + std::hash::Hash> Eq for Clause<C> {}

impl<C: Scalar + std::hash::Hash> std::hash::Hash for Clause<C> {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.atoms.hash(state);
        self.soft.hash(state);
    }
}

impl<C: Scalar> fmt::Display for Clause<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, a) in self.atoms.iter().enumerate() {
            if k > 0 {
                f.write_str(" or ")?;
            }
            write!(f, "{a}")?;
        }
        if self.soft {
            f.write_str(" [soft]")?;
        }
        Ok(())
    }
}

impl<C: Scalar> fmt::Debug for Clause<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Removes duplicate clauses, keeping the first occurrence.
pub fn dedup_clauses<C: Scalar + Eq + std::hash::Hash>(clauses: Vec<Clause<C>>) -> Vec<Clause<C>> {
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(clauses.len());
    for c in clauses {
        if seen.insert((c.atoms.clone(), c.soft)) {
            out.push(c);
        }
    }
    out
}

/// Replaces every unit equality `p = 0` by the equalities `c_m = 0` for the
/// coefficients of `p` viewed as a polynomial in `vars`. Other clauses are
/// kept as they are. Produced equalities never mention a variable of `vars`.
///
/// Eliminating the variables one at a time and collecting coefficients of
/// every monomial at once give the same set, so the latter is what is
/// computed.
pub fn decompose<C: Scalar + Eq + std::hash::Hash>(clauses: &[Clause<C>], vars: &[Var]) -> Vec<Clause<C>> {
    if vars.is_empty() {
        return clauses.to_vec();
    }
    let elim: BTreeSet<&Var> = vars.iter().collect();
    let mut out = Vec::with_capacity(clauses.len());
    for c in clauses {
        match c.as_unit_eq() {
            Some(p) if p.vars().iter().any(|v| elim.contains(v)) => {
                for (_, coeff) in p.coeffs_over(|v| elim.contains(v)) {
                    let mut d = Clause::eq_zero(coeff, c.origin);
                    d.soft = c.soft;
                    out.push(d);
                }
            }
            _ => out.push(c.clone()),
        }
    }
    dedup_clauses(out)
}
