use std::cmp::Ordering;
use std::fmt;

use super::Var;

/// A power product `v1^e1 * ... * vk^ek`; sparse, sorted by variable, no zero
/// exponents.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial {
    factors: Vec<(Var, u32)>,
}

impl Monomial {
    pub fn one() -> Self {
        Monomial::default()
    }

    pub fn var(v: Var) -> Self {
        Monomial::power(v, 1)
    }

    pub fn power(v: Var, e: u32) -> Self {
        if e == 0 {
            Monomial::one()
        } else {
            Monomial {
                factors: vec![(v, e)],
            }
        }
    }

    /// Builds a monomial from arbitrary `(var, exp)` pairs; repeated variables
    /// are merged and zero exponents dropped.
    pub fn from_factors(pairs: impl IntoIterator<Item = (Var, u32)>) -> Self {
        let mut factors: Vec<(Var, u32)> = pairs.into_iter().filter(|(_, e)| *e > 0).collect();
        factors.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(Var, u32)> = Vec::with_capacity(factors.len());
        for (v, e) in factors {
            match merged.last_mut() {
                Some((last, le)) if *last == v => *le += e,
                _ => merged.push((v, e)),
            }
        }
        Monomial { factors: merged }
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.factors.iter().map(|(_, e)| e).sum()
    }

    pub fn degree_in(&self, v: &Var) -> u32 {
        self.factors
            .binary_search_by(|(w, _)| w.cmp(v))
            .map(|i| self.factors[i].1)
            .unwrap_or(0)
    }

    pub fn factors(&self) -> &[(Var, u32)] {
        &self.factors
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.factors.iter().map(|(v, _)| v)
    }

    /// Splits into the part over variables accepted by `keep` and the rest.
    pub fn split(&self, keep: impl Fn(&Var) -> bool) -> (Monomial, Monomial) {
        let (a, b): (Vec<_>, Vec<_>) = self.factors.iter().cloned().partition(|(v, _)| keep(v));
        (Monomial { factors: a }, Monomial { factors: b })
    }

    /// Removes `v` entirely, returning its exponent and the cofactor.
    pub fn take(&self, v: &Var) -> (u32, Monomial) {
        let mut rest = self.clone();
        match rest.factors.binary_search_by(|(w, _)| w.cmp(v)) {
            Ok(i) => {
                let (_, e) = rest.factors.remove(i);
                (e, rest)
            }
            Err(_) => (0, rest),
        }
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.factors.len() + other.factors.len());
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.factors, &other.factors);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a[i].0.clone(), a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial { factors: out }
    }

    pub fn pow(&self, e: u32) -> Monomial {
        if e == 0 {
            return Monomial::one();
        }
        Monomial {
            factors: self.factors.iter().map(|(v, k)| (v.clone(), k * e)).collect(),
        }
    }

    /// `self / other` when `other` divides `self`.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut out = Vec::with_capacity(self.factors.len());
        let mut j = 0;
        for (v, e) in &self.factors {
            if j < other.factors.len() && other.factors[j].0 == *v {
                let f = other.factors[j].1;
                if f > *e {
                    return None;
                }
                if f < *e {
                    out.push((v.clone(), e - f));
                }
                j += 1;
            } else if j < other.factors.len() && other.factors[j].0 < *v {
                return None;
            } else {
                out.push((v.clone(), *e));
            }
        }
        if j < other.factors.len() {
            return None;
        }
        Some(Monomial { factors: out })
    }
}

/// Graded lexicographic order: total degree first, then exponent vectors
/// compared lexicographically along the global variable order.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        let by_degree = self.degree().cmp(&other.degree());
        if by_degree != Ordering::Equal {
            return by_degree;
        }
        for (a, b) in self.factors.iter().zip(other.factors.iter()) {
            if a.0 != b.0 {
                // The side holding the earlier variable has the larger exponent there.
                return if a.0 < b.0 { Ordering::Greater } else { Ordering::Less };
            }
            if a.1 != b.1 {
                return a.1.cmp(&b.1);
            }
        }
        self.factors.len().cmp(&other.factors.len())
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return f.write_str("1");
        }
        for (k, (v, e)) in self.factors.iter().enumerate() {
            if k > 0 {
                f.write_str("*")?;
            }
            if *e == 1 {
                write!(f, "{v}")?;
            } else {
                write!(f, "{v}^{e}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
