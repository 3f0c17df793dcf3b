use std::collections::BTreeMap;
use std::fmt;

use num_traits::One;

use crate::algebra::{Monomial, Var};
use crate::{Poly, Rational};

/// An exponential polynomial `Σ_w w^n · u_w(n, …)`.
///
/// Each key `w` is a monomial over root symbols standing for the sequence
/// `w^n` (the empty monomial is `1^n`). The value is an ordinary polynomial
/// that may mention the loop counter `n`, coefficient symbols and parameters,
/// but never a root symbol as an exponential base.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct ExpPoly {
    terms: BTreeMap<Monomial, Poly>,
}

impl ExpPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    /// A polynomial read as `1^n · p`.
    pub fn constant(p: Poly) -> Self {
        Self::single(Monomial::one(), p)
    }

    pub fn single(w: Monomial, u: Poly) -> Self {
        let mut e = Self::zero();
        e.add_term(w, u);
        e
    }

    pub fn add_term(&mut self, w: Monomial, u: Poly) {
        if u.is_zero() {
            return;
        }
        let slot = self.terms.entry(w.clone()).or_default();
        *slot += u;
        if slot.is_zero() {
            self.terms.remove(&w);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Poly)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &ExpPoly) -> ExpPoly {
        let mut out = self.clone();
        for (w, u) in &other.terms {
            out.add_term(w.clone(), u.clone());
        }
        out
    }

    pub fn scale(&self, p: &Poly) -> ExpPoly {
        let mut out = ExpPoly::zero();
        for (w, u) in &self.terms {
            out.add_term(w.clone(), u * p);
        }
        out
    }

    /// Exponential bases multiply: `w1^n · w2^n = (w1 w2)^n`.
    pub fn mul(&self, other: &ExpPoly) -> ExpPoly {
        let mut out = ExpPoly::zero();
        for (w1, u1) in &self.terms {
            for (w2, u2) in &other.terms {
                out.add_term(w1.mul(w2), u1 * u2);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> ExpPoly {
        let mut acc = ExpPoly::constant(Poly::one());
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Evaluates `p` with some variables bound to exponential polynomials;
    /// unbound variables are read as constants.
    pub fn eval_poly(p: &Poly, bindings: &BTreeMap<Var, ExpPoly>) -> ExpPoly {
        let mut cache: BTreeMap<(Var, u32), ExpPoly> = BTreeMap::new();
        let mut out = ExpPoly::zero();
        for (m, c) in p.terms() {
            let mut acc = ExpPoly::constant(Poly::constant(c.clone()));
            let mut kept = Vec::new();
            for (v, e) in m.factors() {
                match bindings.get(v) {
                    Some(b) => {
                        let pw = cache.entry((v.clone(), *e)).or_insert_with(|| b.pow(*e));
                        acc = acc.mul(pw);
                    }
                    None => kept.push((v.clone(), *e)),
                }
            }
            if !kept.is_empty() {
                acc = acc.scale(&Poly::term(Rational::one(), Monomial::from_factors(kept)));
            }
            for (w, u) in acc.terms {
                out.add_term(w, u);
            }
        }
        out
    }

    /// Evaluates at a concrete `n`, turning `w^n` into an ordinary power.
    pub fn at(&self, counter: &Var, n: u32) -> Poly {
        let nval = Poly::from_i64(n as i64);
        self.terms
            .iter()
            .map(|(w, u)| u.substitute_one(counter, &nval).mul_monomial(&w.pow(n)))
            .sum()
    }

    /// Splits along powers of the counter: `self = Σ_k n^k · q_k` with each
    /// `q_k` free of `n`. Entries with all-zero `q_k` are omitted.
    pub fn by_counter_power(&self, counter: &Var) -> BTreeMap<u32, Vec<(Monomial, Poly)>> {
        let mut out: BTreeMap<u32, Vec<(Monomial, Poly)>> = BTreeMap::new();
        for (w, u) in &self.terms {
            for (k, coeff) in u.coeffs_in(counter) {
                out.entry(k).or_default().push((w.clone(), coeff));
            }
        }
        out
    }
}

impl fmt::Display for ExpPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (k, (w, u)) in self.terms.iter().enumerate() {
            if k > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "({u})*({w})^n")?;
        }
        Ok(())
    }
}

impl fmt::Debug for ExpPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
