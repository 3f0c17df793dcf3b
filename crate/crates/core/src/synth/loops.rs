use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{json, Value};

use super::SynthError;
use crate::algebra::Var;
use crate::smt::{Model, ModelValue};
use crate::template::{IntegerPartition, RecurrenceTemplate, ShapeTier};
use crate::verify::ConcreteSystem;
use crate::{Poly, PolyMatrix, Rational};

/// Where a loop came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LoopOrigin {
    pub tier: ShapeTier,
    #[serde(serialize_with = "ser_display")]
    pub partition: IntegerPartition,
    pub permutation: Vec<String>,
    /// Step of the C-finite procedure that produced the model (0: plain solve).
    pub step: u8,
    pub queries: usize,
    pub millis: u128,
}

fn ser_display<T: std::fmt::Display, S: serde::Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

/// A concrete affine loop `X <- U X` from `X = V`, with simultaneous
/// assignment semantics.
#[derive(Clone, Debug)]
pub struct Loop {
    /// State order; the update matrix is indexed by it.
    pub vars: Vec<Var>,
    pub update: PolyMatrix,
    /// Initial values, affine in `params`.
    pub init: Vec<Poly>,
    /// `V = init_matrix · (params, 1)`.
    pub init_matrix: PolyMatrix,
    pub params: Vec<Var>,
    /// Symbols standing for `x(0)`.
    pub initials: BTreeMap<Var, usize>,
    /// A hidden variable that is constantly `1`.
    pub constant_one: Option<usize>,
    pub origin: Option<LoopOrigin>,
}

fn rational_of(model: &Model, v: &Var) -> Result<Rational, SynthError> {
    match model.get(v) {
        None => Ok(Rational::from_integer(0.into())),
        Some(ModelValue::Rational(r)) => Ok(r.clone()),
        Some(ModelValue::Algebraic(a)) => Err(SynthError::Algebraic {
            symbol: v.name().to_string(),
            value: a.to_string(),
        }),
    }
}

/// `σ(B)` and `σ(A)`. Symbols the solver was not asked about are
/// unconstrained and read as `0`.
pub fn loop_from_model(tpl: &RecurrenceTemplate, model: &Model) -> Result<Loop, SynthError> {
    let mut bind: BTreeMap<Var, Poly> = BTreeMap::new();
    for v in tpl.b_symbols().into_iter().chain(tpl.a_symbols()) {
        let r = rational_of(model, &v)?;
        bind.insert(v, Poly::constant(r));
    }
    let update = tpl.b.substitute(&bind);
    let init_matrix = tpl.a.substitute(&bind);
    let init = init_matrix.mul(&tpl.xhat).expect("A has r+1 columns").entries().to_vec();
    Ok(Loop {
        vars: tpl.vars.clone(),
        update,
        init,
        init_matrix,
        params: tpl.params.clone(),
        initials: tpl.initials.clone(),
        constant_one: tpl.constant_one,
        origin: None,
    })
}

impl Loop {
    pub fn size(&self) -> usize {
        self.vars.len()
    }

    pub fn system(&self) -> ConcreteSystem<Rational> {
        let mut sys = ConcreteSystem::new(self.vars.clone(), self.update.clone(), PolyMatrix::column(self.init.clone()))
            .expect("loop dimensions are consistent");
        for (sym, &i) in &self.initials {
            sys = sys.with_initial(sym.clone(), i);
        }
        for p in &self.params {
            sys = sys.with_param(p.clone());
        }
        sys
    }

    pub fn det(&self) -> Poly {
        self.update.det().expect("square update")
    }

    /// `U X_0 != X_0`.
    pub fn changes_state(&self) -> bool {
        let x0 = PolyMatrix::column(self.init.clone());
        self.update.mul(&x0).expect("square update") != x0
    }

    fn hidden(&self) -> BTreeMap<Var, Poly> {
        self.constant_one
            .map(|t| (self.vars[t].clone(), Poly::one()))
            .into_iter()
            .collect()
    }

    /// Right-hand side of variable `i`'s assignment, the hidden constant
    /// variable printed as `1`.
    pub fn rhs(&self, i: usize) -> Poly {
        let e: Poly = (0..self.size())
            .map(|j| Poly::var(&self.vars[j]) * self.update[(i, j)].clone())
            .sum();
        e.substitute(&self.hidden())
    }

    fn visible(&self) -> Vec<usize> {
        (0..self.size()).filter(|i| Some(*i) != self.constant_one).collect()
    }

    /// Loop text: initial tuple, then sequential assignments when the update
    /// is triangular and a simultaneous tuple otherwise.
    pub fn render(&self) -> String {
        let vis = self.visible();
        let mut out = String::new();
        let names: Vec<&str> = vis.iter().map(|&i| self.vars[i].name()).collect();
        let inits: Vec<String> = vis.iter().map(|&i| self.init[i].to_string()).collect();
        let _ = writeln!(out, "{} = {}", names.join(", "), inits.join(", "));
        out.push_str("while true:\n");
        let changed: Vec<usize> = vis
            .iter()
            .copied()
            .filter(|&i| self.rhs(i) != Poly::var(&self.vars[i]))
            .collect();
        if changed.is_empty() {
            out.push_str("    skip\n");
        } else if self.update.is_upper_triangular() {
            for &i in &changed {
                let _ = writeln!(out, "    {} = {}", self.vars[i].name(), self.rhs(i));
            }
        } else if self.update.is_lower_triangular() {
            for &i in changed.iter().rev() {
                let _ = writeln!(out, "    {} = {}", self.vars[i].name(), self.rhs(i));
            }
        } else {
            let lhs: Vec<&str> = changed.iter().map(|&i| self.vars[i].name()).collect();
            let rhs: Vec<String> = changed.iter().map(|&i| self.rhs(i).to_string()).collect();
            let _ = writeln!(out, "    {} = {}", lhs.join(", "), rhs.join(", "));
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let vars: Vec<&str> = self.vars.iter().map(Var::name).collect();
        let update: Vec<Vec<String>> = (0..self.size())
            .map(|i| (0..self.size()).map(|j| self.update[(i, j)].to_string()).collect())
            .collect();
        json!({
            "vars": vars,
            "params": self.params.iter().map(Var::name).collect::<Vec<_>>(),
            "constant_one": self.constant_one.map(|t| self.vars[t].name().to_string()),
            "init": self.init.iter().map(ToString::to_string).collect::<Vec<_>>(),
            "update": update,
            "text": self.render(),
            "origin": self.origin,
        })
    }
}
