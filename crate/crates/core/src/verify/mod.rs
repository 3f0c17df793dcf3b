//! Exact invariant checking for concrete affine loops.
//!
//! For a system of size `s`, every state component is a C-finite sequence of
//! order at most `s`. Sums add orders and products multiply them, so
//! `p(X_n)` has order at most [`order_bound`], and a C-finite sequence of
//! order `r` that vanishes for `n < r` vanishes everywhere. Unrolling that many
//! steps is therefore a complete decision procedure.
//!
//! With parameters, the unrolled values are polynomials in the parameters and
//! must be identically zero.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::algebra::{Polynomial, SymMatrix, Var};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VerifyError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invariant mentions `{0}`, which is neither a loop variable, an initial value nor a parameter")]
    UnknownVariable(String),
    #[error("variable map is not a bijection: {0}")]
    NotBijective(String),
}

/// `X_{n+1} = U X_n`, `X_0 = V`.
#[derive(Clone, Debug)]
pub struct ConcreteSystem<C: Scalar> {
    pub vars: Vec<Var>,
    pub update: SymMatrix<C>,
    /// Column of initial values, polynomials over the parameters.
    pub init: SymMatrix<C>,
    /// Symbols denoting `x(0)` for some state index.
    pub initials: BTreeMap<Var, usize>,
    pub params: Vec<Var>,
}

impl<C: Scalar> ConcreteSystem<C> {
    pub fn new(vars: Vec<Var>, update: SymMatrix<C>, init: SymMatrix<C>) -> Result<Self, VerifyError> {
        let s = vars.len();
        if update.rows() != s || update.cols() != s {
            return Err(VerifyError::Dimension(format!(
                "{s} variables but a {}x{} update matrix",
                update.rows(),
                update.cols()
            )));
        }
        if init.rows() != s || init.cols() != 1 {
            return Err(VerifyError::Dimension(format!(
                "{s} variables but a {}x{} initial vector",
                init.rows(),
                init.cols()
            )));
        }
        let params = init.entries().iter().flat_map(Polynomial::vars).collect::<BTreeSet<_>>();
        Ok(ConcreteSystem {
            vars,
            update,
            init,
            initials: BTreeMap::new(),
            params: params.into_iter().collect(),
        })
    }

    pub fn with_initial(mut self, sym: Var, index: usize) -> Self {
        self.initials.insert(sym, index);
        self
    }

    /// Declares a parameter that only the invariant mentions.
    pub fn with_param(mut self, v: Var) -> Self {
        if !self.params.contains(&v) {
            self.params.push(v);
        }
        self
    }

    pub fn size(&self) -> usize {
        self.vars.len()
    }

    /// States `X_0, …, X_{steps-1}`.
    pub fn trace(&self, steps: usize) -> Vec<Vec<Polynomial<C>>> {
        let mut out = Vec::with_capacity(steps);
        let mut x = self.init.clone();
        for k in 0..steps {
            out.push(x.entries().to_vec());
            if k + 1 < steps {
                x = self.update.mul(&x).expect("checked dimensions");
            }
        }
        out
    }

    fn check_vars(&self, p: &Polynomial<C>) -> Result<(), VerifyError> {
        let params: BTreeSet<&Var> = self.params.iter().collect();
        for v in p.vars() {
            if !(self.vars.contains(&v) || self.initials.contains_key(&v) || params.contains(&v)) {
                return Err(VerifyError::UnknownVariable(v.name().to_string()));
            }
        }
        Ok(())
    }

    /// `p` with initial-value symbols replaced by the initial state.
    fn resolve_initials(&self, p: &Polynomial<C>) -> Polynomial<C> {
        let bind: BTreeMap<Var, Polynomial<C>> = self
            .initials
            .iter()
            .map(|(sym, &i)| (sym.clone(), self.init[(i, 0)].clone()))
            .collect();
        p.substitute(&bind)
    }

    /// Value of `p` at a given state.
    pub fn eval_at(&self, p: &Polynomial<C>, state: &[Polynomial<C>]) -> Polynomial<C> {
        let bind: BTreeMap<Var, Polynomial<C>> = self.vars.iter().cloned().zip(state.iter().cloned()).collect();
        self.resolve_initials(p).substitute(&bind)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "C: Scalar"))]
pub struct Verdict<C: Scalar> {
    pub holds: bool,
    /// First failing iteration and the value of the invariant there.
    pub witness: Option<(u64, Polynomial<C>)>,
    pub bound_used: u64,
}

/// Upper bound on the recurrence order of `p(X_n)`: each monomial contributes
/// `s^d` with `d` its degree in `seq_vars`.
pub fn order_bound<C: Scalar>(p: &Polynomial<C>, seq_vars: &BTreeSet<Var>, s: usize) -> u64 {
    let s = s as u64;
    let total = p
        .terms()
        .map(|(m, _)| {
            let d: u32 = m
                .factors()
                .iter()
                .filter(|(v, _)| seq_vars.contains(v))
                .map(|(_, e)| *e)
                .sum();
            s.saturating_pow(d)
        })
        .fold(0u64, u64::saturating_add);
    total.max(1)
}

/// Decides whether `p = 0` holds before and after every iteration.
pub fn check_invariant<C: Scalar>(sys: &ConcreteSystem<C>, p: &Polynomial<C>) -> Result<Verdict<C>, VerifyError> {
    sys.check_vars(p)?;
    let seq: BTreeSet<Var> = sys.vars.iter().cloned().collect();
    let bound = order_bound(p, &seq, sys.size());
    let p = sys.resolve_initials(p);
    let mut x = sys.init.clone();
    for n in 0..bound {
        let bind: BTreeMap<Var, Polynomial<C>> = sys.vars.iter().cloned().zip(x.entries().iter().cloned()).collect();
        let value = p.substitute(&bind);
        if !value.is_zero() {
            return Ok(Verdict {
                holds: false,
                witness: Some((n, value)),
                bound_used: bound,
            });
        }
        if n + 1 < bound {
            x = sys.update.mul(&x).expect("checked dimensions");
        }
    }
    Ok(Verdict {
        holds: true,
        witness: None,
        bound_used: bound,
    })
}

/// Both loops satisfy the invariant, the second one after renaming its
/// variables through `bijection` (variables of `l1` to variables of `l2`).
pub fn check_equiv_modulo<C: Scalar>(
    l1: &ConcreteSystem<C>,
    l2: &ConcreteSystem<C>,
    p: &Polynomial<C>,
    bijection: &BTreeMap<Var, Var>,
) -> Result<bool, VerifyError> {
    let image: BTreeSet<&Var> = bijection.values().collect();
    if image.len() != bijection.len() {
        return Err(VerifyError::NotBijective("two variables share an image".into()));
    }
    for v in p.vars() {
        if l1.vars.contains(&v) && !bijection.contains_key(&v) {
            return Err(VerifyError::NotBijective(format!("`{v}` is not mapped")));
        }
    }
    if !check_invariant(l1, p)?.holds {
        return Ok(false);
    }
    let renamed = p.map_vars(|v| bijection.get(v).cloned().unwrap_or_else(|| v.clone()));
    Ok(check_invariant(l2, &renamed)?.holds)
}
