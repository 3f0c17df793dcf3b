//! Real algebraic numbers reported by the solver as `(root-obj p k)`.

use std::fmt;

use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::Rational;

/// Dense univariate polynomial, coefficients from the constant term up.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UniPoly(pub Vec<Rational>);

impl UniPoly {
    pub fn new(mut c: Vec<Rational>) -> Self {
        while c.last().is_some_and(Zero::is_zero) {
            c.pop();
        }
        UniPoly(c)
    }

    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        self.0.iter().rev().fold(Rational::zero(), |acc, c| acc * x + c)
    }

    pub fn derivative(&self) -> UniPoly {
        UniPoly::new(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * Rational::from_integer(k.into()))
                .collect(),
        )
    }

    /// Quotient and remainder of division by a nonzero polynomial.
    fn div_rem(&self, d: &UniPoly) -> (UniPoly, UniPoly) {
        let dd = d.degree().expect("nonzero divisor");
        let lead = d.0[dd].clone();
        let mut r = self.0.clone();
        let mut q = vec![Rational::zero(); r.len().saturating_sub(dd)];
        while r.len() > dd {
            let top = r.len() - 1;
            let c = &r[top] / &lead;
            for k in 0..=dd {
                let sub = &c * &d.0[k];
                r[top - dd + k] -= sub;
            }
            q[top - dd] = c;
            r.pop();
        }
        (UniPoly::new(q), UniPoly::new(r))
    }

    fn rem(&self, d: &UniPoly) -> UniPoly {
        self.div_rem(d).1
    }

    /// `p / gcd(p, p')`: same roots, all simple.
    pub fn squarefree(&self) -> UniPoly {
        let chain = self.sturm_chain();
        let g = chain.last().expect("nonempty chain");
        if g.degree().unwrap_or(0) == 0 {
            return self.clone();
        }
        self.div_rem(g).0
    }

    fn neg(&self) -> UniPoly {
        UniPoly(self.0.iter().map(|c| -c).collect())
    }

    /// Sturm chain `p, p', -rem(p, p'), …`.
    pub fn sturm_chain(&self) -> Vec<UniPoly> {
        let mut chain = vec![self.clone(), self.derivative()];
        loop {
            let n = chain.len();
            if chain[n - 1].is_zero() {
                chain.pop();
                break;
            }
            let r = chain[n - 2].rem(&chain[n - 1]).neg();
            if r.is_zero() {
                break;
            }
            chain.push(r);
        }
        chain
    }

    /// Upper bound on the absolute value of every real root (Cauchy).
    pub fn root_bound(&self) -> Rational {
        let d = self.degree().unwrap_or(0);
        if d == 0 {
            return Rational::one();
        }
        let lead = self.0[d].abs();
        let m = self.0[..d].iter().map(|c| c.abs() / &lead).fold(Rational::zero(), |a, b| a.max(b));
        m + Rational::one()
    }
}

fn sign_changes(chain: &[UniPoly], x: &Rational) -> usize {
    let mut last = 0i8;
    let mut n = 0;
    for p in chain {
        let v = p.eval(x);
        let s = if v.is_positive() {
            1
        } else if v.is_negative() {
            -1
        } else {
            0
        };
        if s != 0 {
            if last != 0 && s != last {
                n += 1;
            }
            last = s;
        }
    }
    n
}

/// Number of distinct real roots in `(lo, hi]`.
fn roots_in(chain: &[UniPoly], lo: &Rational, hi: &Rational) -> usize {
    sign_changes(chain, lo) - sign_changes(chain, hi)
}

/// The `index`-th smallest real root (1-based) of `poly`, with an isolating
/// interval `(lo, hi]` containing no other root.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AlgebraicNumber {
    #[serde(serialize_with = "ser_poly")]
    pub poly: UniPoly,
    pub index: usize,
    #[serde(serialize_with = "ser_rat")]
    pub lo: Rational,
    #[serde(serialize_with = "ser_rat")]
    pub hi: Rational,
}

fn ser_rat<S: serde::Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

fn ser_poly<S: serde::Serializer>(p: &UniPoly, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&p.to_string())
}

impl AlgebraicNumber {
    /// Isolates the root; `None` if `poly` has fewer than `index` real roots.
    pub fn isolate(poly: UniPoly, index: usize) -> Option<Self> {
        if index == 0 || poly.degree().unwrap_or(0) == 0 {
            return None;
        }
        let chain = poly.squarefree().sturm_chain();
        let b = poly.root_bound();
        let (mut lo, mut hi) = (-b.clone(), b);
        if roots_in(&chain, &lo, &hi) < index {
            return None;
        }
        // Invariant: the target is the `k`-th root in (lo, hi].
        let mut k = index;
        let two = Rational::from_integer(2.into());
        while roots_in(&chain, &lo, &hi) > 1 {
            let mid = (&lo + &hi) / &two;
            let left = roots_in(&chain, &lo, &mid);
            if k <= left {
                hi = mid;
            } else {
                k -= left;
                lo = mid;
            }
        }
        Some(AlgebraicNumber { poly, index, lo, hi })
    }

    /// Narrows the interval until it is narrower than `eps`.
    pub fn refine(&mut self, eps: &Rational) {
        let chain = self.poly.squarefree().sturm_chain();
        let two = Rational::from_integer(2.into());
        while &(&self.hi - &self.lo) > eps {
            let mid = (&self.lo + &self.hi) / &two;
            if roots_in(&chain, &self.lo, &mid) == 1 {
                self.hi = mid;
            } else {
                self.lo = mid;
            }
        }
    }

    pub fn approx(&self) -> f64 {
        let mut c = self.clone();
        c.refine(&Rational::new(1.into(), num_bigint::BigInt::from(1u64 << 52)));
        ((&c.lo + &c.hi) / Rational::from_integer(2.into())).to_f64().unwrap_or(f64::NAN)
    }
}

impl fmt::Display for UniPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.0.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            let a = c.abs();
            if first {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            first = false;
            let unit = a.is_one() && k > 0;
            if !unit {
                write!(f, "{a}")?;
                if k > 0 {
                    f.write_str("*")?;
                }
            }
            match k {
                0 => {}
                1 => f.write_str("x")?,
                _ => write!(f, "x^{k}")?,
            }
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

impl fmt::Display for AlgebraicNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "root #{} of {} (~{:.6})", self.index, self.poly, self.approx())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64) -> Rational {
        Rational::from_integer(n.into())
    }

    #[test]
    fn sqrt_two() {
        let p = UniPoly::new(vec![r(-2), r(0), r(1)]);
        let neg = AlgebraicNumber::isolate(p.clone(), 1).unwrap();
        let pos = AlgebraicNumber::isolate(p.clone(), 2).unwrap();
        assert!((pos.approx() - 2f64.sqrt()).abs() < 1e-12);
        assert!((neg.approx() + 2f64.sqrt()).abs() < 1e-12);
        assert!(AlgebraicNumber::isolate(p, 3).is_none());
        assert_eq!(pos.poly.to_string(), "x^2 - 2");
    }

    #[test]
    fn repeated_and_close_roots() {
        // (x - 1)^2 (x - 1001/1000): two distinct roots
        let p = UniPoly::new(vec![
            Rational::new((-1001).into(), 1000.into()),
            Rational::new(3002.into(), 1000.into()),
            Rational::new((-3001).into(), 1000.into()),
            r(1),
        ]);
        let one = AlgebraicNumber::isolate(p.clone(), 1).unwrap();
        let two = AlgebraicNumber::isolate(p, 2).unwrap();
        assert!((one.approx() - 1.0).abs() < 1e-9);
        assert!((two.approx() - 1.001).abs() < 1e-9);
    }
}
