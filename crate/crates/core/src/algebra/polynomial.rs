use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use serde::{Serialize, Serializer};

use super::{Monomial, Var};
use crate::scalar::{split_sign, Scalar};

/// Multivariate polynomial with coefficients in `C`.
///
/// Terms are kept in a map ordered by the graded-lex monomial order, so two
/// equal polynomials always have identical representations. Zero coefficients
/// are never stored; the zero polynomial is the empty map.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Polynomial<C> {
    terms: BTreeMap<Monomial, C>,
}

impl<C: Scalar> Default for Polynomial<C> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<C: Scalar> Polynomial<C> {
    pub fn zero() -> Self {
        Polynomial {
            terms: BTreeMap::new(),
        }
    }

    pub fn one() -> Self {
        Self::constant(C::one())
    }

    pub fn constant(c: C) -> Self {
        Self::term(c, Monomial::one())
    }

    pub fn from_i64(c: i64) -> Self {
        Self::constant(C::from_i64(c))
    }

    pub fn var(v: &Var) -> Self {
        Self::term(C::one(), Monomial::var(v.clone()))
    }

    pub fn term(c: C, m: Monomial) -> Self {
        let mut p = Self::zero();
        p.add_term(m, c);
        p
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial, C)>) -> Self {
        let mut p = Self::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    /// Adds `c*m` in place, dropping the term if it cancels.
    pub fn add_term(&mut self, m: Monomial, c: C) {
        if c.is_negligible() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get().clone() + c;
                if sum.is_negligible() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(Monomial::is_one)
    }

    /// The value of a constant polynomial.
    pub fn constant_value(&self) -> Option<C> {
        match self.terms.len() {
            0 => Some(C::zero()),
            1 => self.terms.get(&Monomial::one()).cloned(),
            _ => None,
        }
    }

    /// Coefficient of the constant term.
    pub fn constant_term(&self) -> C {
        self.terms.get(&Monomial::one()).cloned().unwrap_or_else(C::zero)
    }

    pub fn coeff(&self, m: &Monomial) -> C {
        self.terms.get(m).cloned().unwrap_or_else(C::zero)
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in ascending graded-lex order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &C)> + ExactSizeIterator {
        self.terms.iter()
    }

    pub fn into_terms(self) -> impl Iterator<Item = (Monomial, C)> {
        self.terms.into_iter()
    }

    /// Leading (largest) term.
    pub fn leading(&self) -> Option<(&Monomial, &C)> {
        self.terms.iter().next_back()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn degree_in(&self, v: &Var) -> u32 {
        self.terms.keys().map(|m| m.degree_in(v)).max().unwrap_or(0)
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.terms.keys().flat_map(|m| m.vars().cloned()).collect()
    }

    pub fn mentions(&self, v: &Var) -> bool {
        self.terms.keys().any(|m| m.degree_in(v) > 0)
    }

    pub fn scale(&self, c: &C) -> Self {
        if c.is_negligible() {
            return Self::zero();
        }
        Self::from_terms(self.terms.iter().map(|(m, k)| (m.clone(), k.clone() * c.clone())))
    }

    pub fn mul_monomial(&self, mono: &Monomial) -> Self {
        Polynomial {
            terms: self.terms.iter().map(|(m, k)| (m.mul(mono), k.clone())).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Divides every coefficient by the leading one (no-op on zero).
    pub fn monic(&self) -> Self {
        match self.leading() {
            None => Self::zero(),
            Some((_, lc)) => {
                let lc = lc.clone();
                Self::from_terms(self.terms.iter().map(|(m, k)| (m.clone(), k.clone() / lc.clone())))
            }
        }
    }

    /// Sign normalization: negates so that the leading coefficient is positive.
    pub fn normalize_sign(&self) -> Self {
        match self.leading() {
            Some((_, lc)) if lc.is_negative() => -self,
            _ => self.clone(),
        }
    }

    /// Simultaneous substitution of variables by polynomials. Unbound
    /// variables are kept.
    pub fn substitute(&self, bindings: &BTreeMap<Var, Polynomial<C>>) -> Self {
        if bindings.is_empty() {
            return self.clone();
        }
        let mut powers: HashMap<(Var, u32), Polynomial<C>> = HashMap::new();
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            let mut kept = Vec::new();
            let mut acc = Self::constant(c.clone());
            for (v, e) in m.factors() {
                match bindings.get(v) {
                    Some(q) => {
                        let qe = powers
                            .entry((v.clone(), *e))
                            .or_insert_with(|| q.pow(*e));
                        acc = &acc * &*qe;
                    }
                    None => kept.push((v.clone(), *e)),
                }
                if acc.is_zero() {
                    break;
                }
            }
            if !kept.is_empty() {
                acc = acc.mul_monomial(&Monomial::from_factors(kept));
            }
            out += acc;
        }
        out
    }

    /// Substitutes a single variable.
    pub fn substitute_one(&self, v: &Var, q: &Polynomial<C>) -> Self {
        let mut b = BTreeMap::new();
        b.insert(v.clone(), q.clone());
        self.substitute(&b)
    }

    /// Evaluates with scalar values; unbound variables stay symbolic.
    pub fn eval_partial(&self, values: &BTreeMap<Var, C>) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            let mut k = c.clone();
            let mut kept = Vec::new();
            for (v, e) in m.factors() {
                match values.get(v) {
                    Some(x) => k = k * x.pow_u32(*e),
                    None => kept.push((v.clone(), *e)),
                }
            }
            out.add_term(Monomial::from_factors(kept), k);
        }
        out
    }

    /// Full evaluation; `None` if some variable is unbound.
    pub fn eval(&self, values: &BTreeMap<Var, C>) -> Option<C> {
        self.eval_partial(values).constant_value()
    }

    /// Groups by powers of `v`: `self = Σ coeff_k * v^k`, sorted by `k`, zero
    /// coefficients omitted.
    pub fn coeffs_in(&self, v: &Var) -> Vec<(u32, Polynomial<C>)> {
        let mut groups: BTreeMap<u32, Polynomial<C>> = BTreeMap::new();
        for (m, c) in &self.terms {
            let (e, rest) = m.take(v);
            groups.entry(e).or_default().add_term(rest, c.clone());
        }
        groups.into_iter().filter(|(_, p)| !p.is_zero()).collect()
    }

    /// Groups by monomials over the variables accepted by `select`: `self =
    /// Σ coeff_m * m` with every `coeff_m` free of selected variables.
    pub fn coeffs_over(&self, select: impl Fn(&Var) -> bool) -> BTreeMap<Monomial, Polynomial<C>> {
        let mut groups: BTreeMap<Monomial, Polynomial<C>> = BTreeMap::new();
        for (m, c) in &self.terms {
            let (sel, rest) = m.split(&select);
            groups.entry(sel).or_default().add_term(rest, c.clone());
        }
        groups.retain(|_, p| !p.is_zero());
        groups
    }

    /// Exact division by a nonzero scalar.
    pub fn div_scalar(&self, c: &C) -> Self {
        assert!(!c.is_negligible(), "division by zero scalar");
        Self::from_terms(self.terms.iter().map(|(m, k)| (m.clone(), k.clone() / c.clone())))
    }

    /// Exact division by `d` when `d` divides `self`, via multivariate
    /// division by the leading term. Returns `None` on a nonzero remainder.
    pub fn div_exact(&self, d: &Polynomial<C>) -> Option<Self> {
        let (dm, dc) = d.leading()?;
        let (dm, dc) = (dm.clone(), dc.clone());
        if let Some(k) = d.constant_value() {
            return Some(self.div_scalar(&k));
        }
        let mut rem = self.clone();
        let mut quot = Self::zero();
        while let Some((m, c)) = rem.leading() {
            let qm = m.div(&dm)?;
            let qc = c.clone() / dc.clone();
            let t = Self::term(qc, qm);
            rem -= &t * d;
            quot += t;
        }
        Some(quot)
    }

    pub fn map_coeffs<D: Scalar>(&self, f: impl Fn(&C) -> D) -> Polynomial<D> {
        Polynomial::from_terms(self.terms.iter().map(|(m, c)| (m.clone(), f(c))))
    }

    /// Renames or retypes variables; colliding images are merged.
    pub fn map_vars(&self, f: impl Fn(&Var) -> Var) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .map(|(m, c)| (Monomial::from_factors(m.factors().iter().map(|(v, e)| (f(v), *e))), c.clone())),
        )
    }
}

impl<C: Scalar> From<&Var> for Polynomial<C> {
    fn from(v: &Var) -> Self {
        Polynomial::var(v)
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $assign_tr:ident, $assign:ident, $body:expr) => {
        impl<C: Scalar> $tr<&Polynomial<C>> for &Polynomial<C> {
            type Output = Polynomial<C>;
            fn $method(self, rhs: &Polynomial<C>) -> Polynomial<C> {
                let f: fn(&Polynomial<C>, &Polynomial<C>) -> Polynomial<C> = $body;
                f(self, rhs)
            }
        }
        impl<C: Scalar> $tr<Polynomial<C>> for Polynomial<C> {
            type Output = Polynomial<C>;
            fn $method(self, rhs: Polynomial<C>) -> Polynomial<C> {
                (&self).$method(&rhs)
            }
        }
        impl<C: Scalar> $tr<&Polynomial<C>> for Polynomial<C> {
            type Output = Polynomial<C>;
            fn $method(self, rhs: &Polynomial<C>) -> Polynomial<C> {
                (&self).$method(rhs)
            }
        }
        impl<C: Scalar> $tr<Polynomial<C>> for &Polynomial<C> {
            type Output = Polynomial<C>;
            fn $method(self, rhs: Polynomial<C>) -> Polynomial<C> {
                self.$method(&rhs)
            }
        }
        impl<C: Scalar> $assign_tr<Polynomial<C>> for Polynomial<C> {
            fn $assign(&mut self, rhs: Polynomial<C>) {
                *self = (&*self).$method(&rhs);
            }
        }
        impl<C: Scalar> $assign_tr<&Polynomial<C>> for Polynomial<C> {
            fn $assign(&mut self, rhs: &Polynomial<C>) {
                *self = (&*self).$method(rhs);
            }
        }
    };
}

binop!(Add, add, AddAssign, add_assign, |a, b| {
    let mut out = a.clone();
    for (m, c) in &b.terms {
        out.add_term(m.clone(), c.clone());
    }
    out
});

binop!(Sub, sub, SubAssign, sub_assign, |a, b| {
    let mut out = a.clone();
    for (m, c) in &b.terms {
        out.add_term(m.clone(), -c.clone());
    }
    out
});

binop!(Mul, mul, MulAssign, mul_assign, |a, b| {
    let mut out = Polynomial::zero();
    for (ma, ca) in &a.terms {
        for (mb, cb) in &b.terms {
            out.add_term(ma.mul(mb), ca.clone() * cb.clone());
        }
    }
    out
});

impl<C: Scalar> Neg for &Polynomial<C> {
    type Output = Polynomial<C>;
    fn neg(self) -> Polynomial<C> {
        Polynomial {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }
}

impl<C: Scalar> Neg for Polynomial<C> {
    type Output = Polynomial<C>;
    fn neg(self) -> Polynomial<C> {
        -&self
    }
}

impl<C: Scalar> std::iter::Sum for Polynomial<C> {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::zero(), |acc, p| acc + p)
    }
}

impl<C: Scalar> std::iter::Product for Polynomial<C> {
    fn product<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::one(), |acc, p| acc * p)
    }
}

/// Prints terms in descending graded-lex order, e.g. `x^2 - 2*x*y + 1/2`.
impl<C: Scalar> fmt::Display for Polynomial<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (k, (m, c)) in self.terms.iter().rev().enumerate() {
            let (neg, abs) = split_sign(c);
            match (k, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            if m.is_one() {
                write!(f, "{abs}")?;
            } else if abs.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{abs}*{m}")?;
            }
        }
        Ok(())
    }
}

impl<C: Scalar> fmt::Debug for Polynomial<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl<C: Scalar> Serialize for Polynomial<C> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}
