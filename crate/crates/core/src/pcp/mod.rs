//! The polynomial constraint problem whose models are exactly the loops
//! (for a fixed root pattern) satisfying the invariants.
//!
//! Four clause families are generated from a [`RecurrenceTemplate`]:
//!
//! * `roots`: the characteristic polynomial of `B` factors as
//!   `Π (z - w_i)^{m_i}`, the roots are pairwise distinct and nonzero;
//! * `init`: the closed form agrees with `B^i A` for `i < s`;
//! * `coeff`: the closed form satisfies the recurrence;
//! * `alg`: each invariant, with closed forms substituted, vanishes.
//!
//! With parameters, every equality is finally split into the coefficients of
//! its parameter monomials, which removes the parameters altogether.

mod simplify;

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Value};

use crate::algebra::{decompose, dedup_clauses, Monomial, Origin, SymbolTable, Var, VarKind};
use crate::template::{ExpPoly, RecurrenceTemplate};
use crate::{PolyMatrix, Poly, RClause, Rational};

pub use simplify::{simplify, Eliminated};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PcpError {
    #[error("invariant `{poly}` mentions unknown variable `{var}`")]
    UnknownVariable { poly: String, var: String },
    #[error("invariant `{0} = 0` is a contradiction")]
    Contradiction(String),
}

/// `Σ_i w_i^n u_i = 0` for all `n`, with syntactically distinct `w_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CFiniteConstraint {
    pub terms: Vec<(Monomial, Poly)>,
    /// Symbols over which `u_i` must vanish identically.
    pub params: Vec<Var>,
}

impl CFiniteConstraint {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `Σ_i w_i^j u_i`.
    pub fn instance(&self, j: u32) -> Poly {
        self.terms.iter().map(|(w, u)| u.mul_monomial(&w.pow(j))).sum()
    }

    /// The `ℓ` instances that pin the sequence to zero.
    pub fn instances(&self) -> Vec<Poly> {
        (0..self.terms.len() as u32).map(|j| self.instance(j)).collect()
    }
}

/// A deduplicated clause set with its symbol table.
#[derive(Clone, Debug)]
pub struct Pcp {
    pub clauses: Vec<RClause>,
    pub symbols: SymbolTable,
    pub cfinite: Vec<CFiniteConstraint>,
}

impl Pcp {
    pub fn new(clauses: Vec<RClause>, symbols: SymbolTable) -> Self {
        Pcp {
            clauses: dedup_clauses(clauses),
            symbols,
            cfinite: Vec::new(),
        }
    }

    pub fn by_origin(&self, origin: Origin) -> Vec<&RClause> {
        self.clauses.iter().filter(|c| c.origin == origin).collect()
    }

    /// Symbols actually mentioned, in variable order.
    pub fn used_symbols(&self) -> BTreeSet<Var> {
        self.clauses.iter().flat_map(RClause::vars).collect()
    }

    /// Symbols mentioned in clauses but missing from the table.
    pub fn unregistered(&self) -> Vec<Var> {
        self.used_symbols()
            .into_iter()
            .filter(|v| !self.symbols.contains(v))
            .collect()
    }

    pub fn push(&mut self, clause: RClause) {
        if !self.clauses.iter().any(|c| c.atoms == clause.atoms && c.soft == clause.soft) {
            self.clauses.push(clause);
        }
    }

    pub fn extend(&mut self, clauses: impl IntoIterator<Item = RClause>) {
        for c in clauses {
            self.push(c);
        }
    }

    /// Deterministic debug dump.
    pub fn to_json(&self) -> Value {
        let symbols: Vec<Value> = self
            .used_symbols()
            .iter()
            .map(|v| json!({ "name": v.name(), "kind": v.kind().label() }))
            .collect();
        let cfinite: Vec<Value> = self
            .cfinite
            .iter()
            .map(|c| {
                Value::Array(
                    c.terms
                        .iter()
                        .map(|(w, u)| json!({ "w": w.to_string(), "u": u.to_string() }))
                        .collect(),
                )
            })
            .collect();
        json!({
            "symbols": symbols,
            "clauses": serde_json::to_value(&self.clauses).expect("clauses serialize"),
            "cfinite": cfinite,
        })
    }
}

/// Keeps clauses that are not decided true by constant evaluation.
fn drop_tautologies(clauses: Vec<RClause>) -> Vec<RClause> {
    clauses
        .into_iter()
        .filter(|c| !c.atoms.iter().any(|a| a.decide() == Some(true)))
        .collect()
}

fn column_eqs(m: &PolyMatrix, origin: Origin) -> Vec<RClause> {
    m.entries()
        .iter()
        .filter(|p| !p.is_zero())
        .map(|p| RClause::eq_zero(p.clone(), origin))
        .collect()
}

/// Characteristic polynomial against the prescribed root pattern, plus
/// distinctness and nonvanishing of the roots.
pub fn gen_roots(tpl: &RecurrenceTemplate) -> Vec<RClause> {
    let z = Var::generated("z", VarKind::Indeterminate);
    let chi = tpl.b.char_poly(&z).expect("B is square");
    let zp = Poly::var(&z);
    let target: Poly = tpl
        .roots
        .roots()
        .iter()
        .map(|(w, m)| (&zp - &Poly::var(w)).pow(*m))
        .product();
    let mut out: Vec<RClause> = (&chi - &target)
        .coeffs_in(&z)
        .into_iter()
        .map(|(_, c)| RClause::eq_zero(c, Origin::Roots))
        .collect();
    let roots: Vec<&Var> = tpl.roots.symbols().collect();
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            out.push(RClause::ne_zero(Poly::var(roots[i]) - Poly::var(roots[j]), Origin::Roots));
        }
    }
    for w in roots {
        out.push(RClause::ne_zero(Poly::var(w), Origin::Roots));
    }
    drop_tautologies(out)
}

/// The closed form satisfies `X_{n+1} = B X_n`: for every root `w_i` and
/// every power `n^j`, `(Σ_{k>=j} C(k,j) C_ik w_i - B C_ij) X̂ = 0`.
pub fn gen_coeff(tpl: &RecurrenceTemplate) -> Vec<RClause> {
    let mut out = Vec::new();
    for (i, (w, m)) in tpl.roots.roots().iter().enumerate() {
        let wp = Poly::var(w);
        for j in 0..*m as usize {
            let mut lhs = PolyMatrix::zeros(tpl.size(), tpl.xhat.rows());
            for k in j..*m as usize {
                let binom = Poly::constant(Rational::from_integer(num_integer::binomial(k, j).into()));
                lhs = lhs.add(&tpl.coeffs[i][k].scale(&(&binom * &wp))).unwrap();
            }
            let d = lhs.sub(&tpl.b.mul(&tpl.coeffs[i][j]).unwrap()).unwrap();
            out.extend(column_eqs(&d.mul(&tpl.xhat).unwrap(), Origin::Coeff));
        }
    }
    drop_tautologies(out)
}

/// Closed form at `n = i` equals `B^i X_0` for `i = 0, …, s-1`.
pub fn gen_init(tpl: &RecurrenceTemplate) -> Vec<RClause> {
    let x0 = tpl.initial_values();
    let mut power = PolyMatrix::identity(tpl.size());
    let mut out = Vec::new();
    for i in 0..tpl.size() {
        let cf = PolyMatrix::column(tpl.closed_form.iter().map(|e| e.at(&tpl.counter, i as u32)).collect());
        let unrolled = power.mul(&x0).unwrap();
        out.extend(column_eqs(&cf.sub(&unrolled).unwrap(), Origin::Init));
        power = power.mul(&tpl.b).unwrap();
    }
    drop_tautologies(out)
}

/// Substitutes closed forms (and initial values for initial-value symbols)
/// into the invariant.
pub fn invariant_as_exp(tpl: &RecurrenceTemplate, p: &Poly) -> Result<ExpPoly, PcpError> {
    let params: BTreeSet<&Var> = tpl.params.iter().collect();
    for v in p.vars() {
        if !(tpl.vars.contains(&v) || tpl.initials.contains_key(&v) || params.contains(&v)) {
            return Err(PcpError::UnknownVariable {
                poly: p.to_string(),
                var: v.name().to_string(),
            });
        }
    }
    if p.is_constant() && !p.is_zero() {
        return Err(PcpError::Contradiction(p.to_string()));
    }
    let x0 = tpl.initial_values();
    let init_bind: BTreeMap<Var, Poly> = tpl
        .initials
        .iter()
        .map(|(sym, &row)| (sym.clone(), x0[(row, 0)].clone()))
        .collect();
    let p = p.substitute(&init_bind);
    let bind: BTreeMap<Var, ExpPoly> = tpl
        .vars
        .iter()
        .cloned()
        .zip(tpl.closed_form.iter().cloned())
        .collect();
    Ok(ExpPoly::eval_poly(&p, &bind))
}

/// Invariant clauses: one C-finite constraint per power of `n`, each
/// instantiated at `n = 0, …, ℓ-1`.
pub fn gen_alg(tpl: &RecurrenceTemplate, invariants: &[Poly]) -> Result<(Vec<RClause>, Vec<CFiniteConstraint>), PcpError> {
    let mut clauses = Vec::new();
    let mut cfcs = Vec::new();
    for p in invariants {
        let e = invariant_as_exp(tpl, p)?;
        for (_, terms) in e.by_counter_power(&tpl.counter) {
            let cfc = CFiniteConstraint {
                terms,
                params: tpl.params.clone(),
            };
            for q in cfc.instances() {
                clauses.push(RClause::eq_zero(q, Origin::Alg));
            }
            cfcs.push(cfc);
        }
    }
    Ok((drop_tautologies(clauses), cfcs))
}

/// `C_roots ∪ C_init ∪ C_coeff ∪ C_alg`, split over parameter monomials when
/// the template is parameterized.
pub fn build_pcp(tpl: &RecurrenceTemplate, invariants: &[Poly]) -> Result<Pcp, PcpError> {
    let mut clauses = gen_roots(tpl);
    clauses.extend(gen_init(tpl));
    clauses.extend(gen_coeff(tpl));
    let (alg, cfcs) = gen_alg(tpl, invariants)?;
    clauses.extend(alg);
    let clauses = drop_tautologies(decompose(&clauses, &tpl.params));
    let mut pcp = Pcp::new(clauses, tpl.symbols.clone());
    pcp.cfinite = cfcs;
    Ok(pcp)
}

/// [`build_pcp`] for parameterized templates; the result never mentions a
/// parameter.
pub fn build_param_pcp(tpl: &RecurrenceTemplate, invariants: &[Poly]) -> Result<Pcp, PcpError> {
    build_pcp(tpl, invariants)
}

/// Coefficients of `p` over parameter monomials; `[p]` without parameters.
pub fn split_params(p: &Poly, params: &[Var]) -> Vec<Poly> {
    if params.is_empty() {
        return vec![p.clone()];
    }
    let set: BTreeSet<&Var> = params.iter().collect();
    p.coeffs_over(|v| set.contains(v)).into_values().collect()
}
