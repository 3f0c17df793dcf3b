use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use super::algebraic::{AlgebraicNumber, UniPoly};
use super::emit::term_to_poly;
use super::sexpr::SExpr;
use crate::algebra::{Var, VarKind};
use crate::Rational;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum ModelValue {
    #[serde(serialize_with = "ser_rat")]
    Rational(Rational),
    Algebraic(AlgebraicNumber),
}

fn ser_rat<S: serde::Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

impl ModelValue {
    pub fn as_rational(&self) -> Option<&Rational> {
        match self {
            ModelValue::Rational(r) => Some(r),
            ModelValue::Algebraic(_) => None,
        }
    }

    /// Reads a solver value term: numerals, `/`, unary `-` and `root-obj`.
    pub fn from_sexpr(e: &SExpr) -> Result<Self, String> {
        if e.is_call("root-obj") {
            let parts = e.list().unwrap();
            let [_, poly, idx] = parts else {
                return Err(format!("malformed `{e}`"));
            };
            let x = Var::generated("x", VarKind::Indeterminate);
            let p = term_to_poly(poly, &mut |n| (n == "x").then(|| x.clone()))?;
            let coeffs = p.coeffs_in(&x);
            let deg = coeffs.last().map(|(d, _)| *d as usize).unwrap_or(0);
            let mut dense = vec![Rational::from_integer(0.into()); deg + 1];
            for (d, c) in coeffs {
                dense[d as usize] = c.constant_value().ok_or("non-constant root-obj coefficient")?;
            }
            let index: usize = idx
                .atom()
                .and_then(|a| a.parse().ok())
                .ok_or_else(|| format!("bad root index in `{e}`"))?;
            return AlgebraicNumber::isolate(UniPoly::new(dense), index)
                .map(ModelValue::Algebraic)
                .ok_or_else(|| format!("`{e}` names no real root"));
        }
        let p = term_to_poly(e, &mut |_| None)?;
        p.constant_value()
            .map(ModelValue::Rational)
            .ok_or_else(|| format!("non-constant value `{e}`"))
    }
}

impl fmt::Display for ModelValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelValue::Rational(r) => write!(f, "{r}"),
            ModelValue::Algebraic(a) => write!(f, "{a}"),
        }
    }
}

/// Values the solver assigned to the queried symbols.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Model {
    pub values: BTreeMap<Var, ModelValue>,
}

impl Model {
    pub fn get(&self, v: &Var) -> Option<&ModelValue> {
        self.values.get(v)
    }

    pub fn rational(&self, v: &Var) -> Option<&Rational> {
        self.values.get(v).and_then(ModelValue::as_rational)
    }

    /// All values rational, so clauses can be re-checked exactly.
    pub fn is_exact(&self) -> bool {
        self.values.values().all(|v| v.as_rational().is_some())
    }

    /// The model as a rational assignment, `None` if any value is algebraic.
    pub fn rationals(&self) -> Option<BTreeMap<Var, Rational>> {
        self.values
            .iter()
            .map(|(k, v)| v.as_rational().map(|r| (k.clone(), r.clone())))
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Object(
            self.values
                .iter()
                .map(|(k, v)| (k.name().to_string(), serde_json::to_value(v).expect("values serialize")))
                .collect(),
        )
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (k, v)) in self.values.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

/// Pairs a `get-value` response with the requested symbols, positionally.
pub(crate) fn model_from_response(resp: &SExpr, query: &[Var]) -> Result<Model, String> {
    let pairs = resp.list().ok_or_else(|| format!("expected a value list, got `{resp}`"))?;
    if pairs.len() != query.len() {
        return Err(format!("asked for {} values, got {}", query.len(), pairs.len()));
    }
    let mut values = BTreeMap::new();
    for (v, pair) in query.iter().zip(pairs) {
        match pair.list() {
            Some([_, val]) => {
                values.insert(v.clone(), ModelValue::from_sexpr(val)?);
            }
            _ => return Err(format!("malformed value pair `{pair}`")),
        }
    }
    Ok(Model { values })
}
