//! Elimination of symbols fixed by affine unit equalities.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};

use super::{CFiniteConstraint, Pcp};
use crate::algebra::{Atom, Clause, Monomial, Origin, Var};
use crate::{Poly, RClause};

/// Symbols removed by [`simplify`], each defined over the symbols that remain.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Eliminated {
    pub defs: Vec<(Var, Poly)>,
}

impl Eliminated {
    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }

    /// Values of the eliminated symbols; symbols missing from `values` are
    /// free in the reduced problem and read as `0`.
    pub fn extend(&self, values: &mut BTreeMap<Var, crate::Rational>) {
        let mut point = values.clone();
        for (_, def) in &self.defs {
            for v in def.vars() {
                point.entry(v).or_insert_with(crate::Rational::zero);
            }
        }
        for (v, def) in &self.defs {
            let x = def.eval(&point).expect("every symbol bound");
            values.insert(v.clone(), x);
        }
    }
}

/// `v := def` when `p = 0` determines `v` affinely.
fn definition(p: &Poly, v: &Var, roots: &BTreeSet<Var>) -> Option<Poly> {
    let parts = p.coeffs_in(v);
    let lead = parts.iter().find(|(e, _)| *e == 1)?.1.constant_value()?;
    if parts.iter().any(|(e, _)| *e > 1) || lead.is_zero() {
        return None;
    }
    let rest = parts.iter().find(|(e, _)| *e == 0).map(|(_, r)| r.clone()).unwrap_or_else(Poly::zero);
    let def = (-rest).div_scalar(&lead);
    if def.total_degree() > 1 {
        return None;
    }
    if roots.contains(v) {
        // roots may only be renamed or set to 1, keeping exponentials monomial
        let ok = match def.terms().collect::<Vec<_>>().as_slice() {
            [(m, c)] => c.is_one() && m.vars().all(|u| roots.contains(u)),
            _ => false,
        };
        if !ok {
            return None;
        }
    }
    Some(def)
}

fn substitute_clause(c: &RClause, bind: &BTreeMap<Var, Poly>) -> Option<RClause> {
    let mut atoms = Vec::new();
    for a in &c.atoms {
        let a = Atom::new(a.lhs.substitute(bind), a.rel);
        match a.decide() {
            Some(true) => return None,
            Some(false) => {}
            None => atoms.push(a),
        }
    }
    let origin = c.origin;
    let out = if atoms.is_empty() {
        Clause::eq_zero(Poly::one(), origin)
    } else {
        Clause::new(atoms, origin)
    };
    Some(if c.soft { out.soft() } else { out })
}

fn substitute_monomial(w: &Monomial, v: &Var, def: &Poly) -> Monomial {
    let (e, rest) = w.take(v);
    match def.terms().next() {
        Some((m, _)) if e > 0 => rest.mul(&m.pow(e)),
        _ => w.clone(),
    }
}

fn substitute_cfc(c: &CFiniteConstraint, v: &Var, def: &Poly) -> CFiniteConstraint {
    let bind = BTreeMap::from([(v.clone(), def.clone())]);
    let mut merged: BTreeMap<Monomial, Poly> = BTreeMap::new();
    let mut order = Vec::new();
    for (w, u) in &c.terms {
        let w = substitute_monomial(w, v, def);
        if !merged.contains_key(&w) {
            order.push(w.clone());
        }
        *merged.entry(w).or_insert_with(Poly::zero) += u.substitute(&bind);
    }
    CFiniteConstraint {
        terms: order
            .into_iter()
            .filter_map(|w| {
                let u = merged.remove(&w).unwrap();
                (!u.is_zero()).then_some((w, u))
            })
            .collect(),
        params: c.params.clone(),
    }
}

/// `w^n u = 0` for all `n` with `w != 0` means `u = 0`; such constraints
/// become hard clauses.
fn settle_single_terms(clauses: &mut Vec<RClause>, cfcs: &mut Vec<CFiniteConstraint>) {
    cfcs.retain(|c| {
        if c.len() != 1 {
            return true;
        }
        for q in super::split_params(&c.terms[0].1, &c.params) {
            let clause = Clause::eq_zero(q, Origin::Partition);
            // an equal instance clause may exist; it must stay hard
            match clauses.iter_mut().find(|c| **c == clause) {
                Some(c) => c.origin = Origin::Partition,
                None => clauses.push(clause),
            }
        }
        false
    });
}

/// Repeatedly picks a hard unit equality that fixes some symbol as an affine
/// expression of others and substitutes it everywhere. The result has the
/// same models on the remaining symbols; [`Eliminated::extend`] recovers the
/// rest.
pub fn simplify(pcp: &Pcp) -> (Pcp, Eliminated) {
    let roots: BTreeSet<Var> = pcp
        .cfinite
        .iter()
        .flat_map(|c| c.terms.iter().flat_map(|(w, _)| w.vars().cloned().collect::<Vec<_>>()))
        .collect();
    let mut clauses = pcp.clauses.clone();
    let mut cfcs = pcp.cfinite.clone();
    let mut elim = Eliminated::default();
    settle_single_terms(&mut clauses, &mut cfcs);
    loop {
        let mut best: Option<(usize, u32, Var, Poly)> = None;
        for c in clauses.iter().filter(|c| !c.soft) {
            let Some(p) = c.as_unit_eq() else { continue };
            for v in p.vars() {
                if let Some(def) = definition(p, &v, &roots) {
                    let score = (def.num_terms(), def.total_degree());
                    if best.as_ref().is_none_or(|b| score < (b.0, b.1)) {
                        best = Some((score.0, score.1, v, def));
                    }
                }
            }
        }
        let Some((_, _, v, def)) = best else { break };
        let bind = BTreeMap::from([(v.clone(), def.clone())]);
        clauses = clauses.iter().filter_map(|c| substitute_clause(c, &bind)).collect();
        for (_, d) in &mut elim.defs {
            *d = d.substitute(&bind);
        }
        elim.defs.push((v.clone(), def.clone()));
        cfcs = cfcs
            .iter()
            .map(|c| substitute_cfc(c, &v, &def))
            .filter(|c| !c.is_empty())
            .collect();
        settle_single_terms(&mut clauses, &mut cfcs);
        if clauses.iter().any(|c| c.as_unit_eq().is_some_and(|p| p.is_constant())) {
            break;
        }
    }
    let mut out = Pcp::new(clauses, pcp.symbols.clone());
    out.cfinite = cfcs;
    (out, elim)
}
