use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::{ExpPoly, IntegerPartition, TemplateError};
use crate::algebra::{Monomial, SymbolTable, Var, VarKind};
use crate::{Poly, PolyMatrix};

/// Restriction on the shape of the update matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ShapeTier {
    #[serde(rename = "UN")]
    UnitUpperTriangular,
    #[serde(rename = "UP")]
    UpperTriangular,
    #[serde(rename = "FU")]
    Full,
}

impl ShapeTier {
    /// Search order: most restrictive first.
    pub const ALL: [ShapeTier; 3] = [
        ShapeTier::UnitUpperTriangular,
        ShapeTier::UpperTriangular,
        ShapeTier::Full,
    ];

    pub fn short(self) -> &'static str {
        match self {
            ShapeTier::UnitUpperTriangular => "UN",
            ShapeTier::UpperTriangular => "UP",
            ShapeTier::Full => "FU",
        }
    }

    /// Whether the variable order changes the search space.
    pub fn order_sensitive(self) -> bool {
        self != ShapeTier::Full
    }
}

impl fmt::Display for ShapeTier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short())
    }
}

impl FromStr for ShapeTier {
    type Err = TemplateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "un" => Ok(ShapeTier::UnitUpperTriangular),
            "up" => Ok(ShapeTier::UpperTriangular),
            "fu" | "full" => Ok(ShapeTier::Full),
            _ => Err(TemplateError::BadTier(s.to_string())),
        }
    }
}

/// Symbolic roots with their multiplicities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootSpec {
    roots: Vec<(Var, u32)>,
}

impl RootSpec {
    pub fn roots(&self) -> &[(Var, u32)] {
        &self.roots
    }

    pub fn symbols(&self) -> impl Iterator<Item = &Var> {
        self.roots.iter().map(|(w, _)| w)
    }

    pub fn partition(&self) -> IntegerPartition {
        IntegerPartition::new(self.roots.iter().map(|(_, m)| *m).collect()).expect("nonempty root list")
    }
}

/// Symbolic initial values ("parameters") of a parameterized loop.
///
/// `params` fixes the order of the vector `(p_1, …, p_r, 1)` by which the
/// initial-value matrix is multiplied. A parameter may be tied to a program
/// variable, forcing `x(0) = p`; untied parameters only occur in the
/// invariant and in the (symbolic) initial values of other variables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ParamSpec {
    params: Vec<Var>,
    ties: BTreeMap<Var, usize>,
}

impl ParamSpec {
    pub fn new(params: Vec<Var>) -> Self {
        ParamSpec {
            params,
            ties: BTreeMap::new(),
        }
    }

    /// One parameter per listed state index (1-based), tied to that variable.
    pub fn from_indices(vars: &[Var], indices: &[usize], names: &[Var]) -> Result<Self, TemplateError> {
        if indices.len() != names.len() {
            return Err(TemplateError::BadParam(format!(
                "{} indices for {} parameter names",
                indices.len(),
                names.len()
            )));
        }
        let mut spec = ParamSpec::new(names.to_vec());
        for (&k, p) in indices.iter().zip(names) {
            let v = k
                .checked_sub(1)
                .and_then(|i| vars.get(i))
                .ok_or_else(|| TemplateError::BadParam(format!("parameter index {k} out of range 1..={}", vars.len())))?;
            spec = spec.tie(v, p)?;
        }
        Ok(spec)
    }

    /// Declares `var(0) = param`.
    pub fn tie(mut self, var: &Var, param: &Var) -> Result<Self, TemplateError> {
        let idx = self
            .params
            .iter()
            .position(|p| p == param)
            .ok_or_else(|| TemplateError::BadParam(format!("`{param}` is not a parameter")))?;
        if self.ties.values().any(|&i| i == idx) {
            return Err(TemplateError::BadParam(format!("parameter `{param}` tied twice")));
        }
        if self.ties.insert(var.clone(), idx).is_some() {
            return Err(TemplateError::BadParam(format!("variable `{var}` tied twice")));
        }
        Ok(self)
    }

    pub fn params(&self) -> &[Var] {
        &self.params
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn tied_param(&self, var: &Var) -> Option<&Var> {
        self.ties.get(var).map(|&i| &self.params[i])
    }
}

/// Everything about a template that stays fixed while the search varies the
/// shape tier and partition.
#[derive(Clone, Debug)]
pub struct TemplateConfig {
    /// Session symbols: program variables, parameters, initial-value symbols.
    pub symbols: SymbolTable,
    /// Program variables in state order.
    pub vars: Vec<Var>,
    /// Initial-value symbol to program variable, e.g. `y0 -> y`.
    pub initials: BTreeMap<Var, Var>,
    /// Fixed initial values, affine in the parameters.
    pub pinned: BTreeMap<Var, Poly>,
    pub params: ParamSpec,
    /// A variable that stays constant `1`.
    pub constant_one: Option<Var>,
}

impl TemplateConfig {
    pub fn new(symbols: SymbolTable, vars: Vec<Var>) -> Self {
        TemplateConfig {
            symbols,
            vars,
            initials: BTreeMap::new(),
            pinned: BTreeMap::new(),
            params: ParamSpec::default(),
            constant_one: None,
        }
    }

    /// Same configuration with the state reordered.
    pub fn permuted(&self, order: &[Var]) -> Self {
        TemplateConfig {
            vars: order.to_vec(),
            ..self.clone()
        }
    }

    fn validate(&self) -> Result<(), TemplateError> {
        let s = self.vars.len();
        if s == 0 {
            return Err(TemplateError::BadSize(0));
        }
        let set: BTreeSet<&Var> = self.vars.iter().collect();
        if set.len() != s {
            return Err(TemplateError::Dimension("repeated program variable".into()));
        }
        for v in &self.vars {
            if !self.symbols.contains(v) {
                return Err(TemplateError::Dimension(format!("`{v}` is not a registered symbol")));
            }
        }
        let params: BTreeSet<&Var> = self.params.params.iter().collect();
        for (v, value) in &self.pinned {
            if !set.contains(v) {
                return Err(TemplateError::Dimension(format!("pinned `{v}` is not a program variable")));
            }
            if self.params.tied_param(v).is_some() || self.constant_one.as_ref() == Some(v) {
                return Err(TemplateError::BadParam(format!("`{v}` has two initial-value definitions")));
            }
            if value.total_degree() > 1 || value.vars().iter().any(|u| !params.contains(u)) {
                return Err(TemplateError::BadParam(format!(
                    "initial value `{value}` of `{v}` must be affine in the parameters"
                )));
            }
        }
        for v in self.params.ties.keys() {
            if !set.contains(v) {
                return Err(TemplateError::BadParam(format!("`{v}` is not a program variable")));
            }
        }
        if let Some(t) = &self.constant_one {
            if !set.contains(t) {
                return Err(TemplateError::Dimension(format!("constant variable `{t}` is not in the state")));
            }
            if self.params.tied_param(t).is_some() {
                return Err(TemplateError::BadParam(format!("`{t}` is both constant and a parameter")));
            }
        }
        for (sym, v) in &self.initials {
            if !set.contains(v) {
                return Err(TemplateError::Dimension(format!("`{sym}` refers to unknown variable `{v}`")));
            }
        }
        Ok(())
    }
}

/// The symbolic recurrence system `X_{n+1} = B X_n`, `X_0 = A X̂`, together
/// with the general closed form induced by a fixed root specification.
#[derive(Clone, Debug)]
pub struct RecurrenceTemplate {
    pub symbols: SymbolTable,
    pub vars: Vec<Var>,
    pub tier: ShapeTier,
    pub roots: RootSpec,
    /// Update matrix, `s x s`.
    pub b: PolyMatrix,
    /// Initial-value matrix, `s x (r+1)`.
    pub a: PolyMatrix,
    /// The column `(p_1, …, p_r, 1)`.
    pub xhat: PolyMatrix,
    pub params: Vec<Var>,
    /// `coeffs[i][j]` is the `s x (r+1)` block multiplying `w_i^n n^j`.
    pub coeffs: Vec<Vec<PolyMatrix>>,
    pub counter: Var,
    /// Closed form of each state component.
    pub closed_form: Vec<ExpPoly>,
    /// Initial-value symbol to state index.
    pub initials: BTreeMap<Var, usize>,
    pub constant_one: Option<usize>,
}

impl RecurrenceTemplate {
    pub fn size(&self) -> usize {
        self.vars.len()
    }

    pub fn partition(&self) -> IntegerPartition {
        self.roots.partition()
    }

    pub fn is_parameterized(&self) -> bool {
        !self.params.is_empty()
    }

    /// `X_0 = A X̂` as an `s x 1` column.
    pub fn initial_values(&self) -> PolyMatrix {
        self.a.mul(&self.xhat).expect("A has r+1 columns")
    }

    /// Unknowns of `B`.
    pub fn b_symbols(&self) -> BTreeSet<Var> {
        self.b.entries().iter().flat_map(Poly::vars).collect()
    }

    /// Unknowns of `A`.
    pub fn a_symbols(&self) -> BTreeSet<Var> {
        self.a.entries().iter().flat_map(Poly::vars).collect()
    }

    pub fn coeff_symbols(&self) -> BTreeSet<Var> {
        self.coeffs
            .iter()
            .flatten()
            .flat_map(|m| m.entries().iter().flat_map(Poly::vars))
            .collect()
    }

    pub fn index_of(&self, v: &Var) -> Option<usize> {
        self.vars.iter().position(|u| u == v)
    }
}

const COEFF_LETTERS: &str = "cdefghijklmopqrsuvxyz";

fn coeff_letter(k: usize) -> String {
    COEFF_LETTERS
        .chars()
        .nth(k)
        .map(String::from)
        .unwrap_or_else(|| format!("c{}_", k + 1))
}

fn index_name(base: &str, i: usize, j: Option<usize>, wide: bool) -> String {
    match (j, wide) {
        (None, _) => format!("{base}{i}"),
        (Some(j), false) => format!("{base}{i}{j}"),
        (Some(j), true) => format!("{base}{i}_{j}"),
    }
}

/// Builds the template for one shape tier and root multiplicity pattern.
pub fn build_template(
    cfg: &TemplateConfig,
    tier: ShapeTier,
    partition: &IntegerPartition,
) -> Result<RecurrenceTemplate, TemplateError> {
    cfg.validate()?;
    let s = cfg.vars.len();
    if partition.total() as usize != s {
        return Err(TemplateError::Dimension(format!(
            "partition {partition} does not sum to the system size {s}"
        )));
    }
    let mut symbols = cfg.symbols.clone();
    let params = cfg.params.params.clone();
    for p in &params {
        symbols.register(p)?;
    }
    let r = params.len();
    let cols = r + 1;
    let wide = s >= 10 || cols >= 10;

    let roots = RootSpec {
        roots: partition
            .parts()
            .iter()
            .enumerate()
            .map(|(i, &m)| (symbols.fresh(&format!("w{}", i + 1), VarKind::Root), m))
            .collect(),
    };

    let t_idx = cfg.constant_one.as_ref().map(|t| cfg.vars.iter().position(|v| v == t).unwrap());

    let mut b = PolyMatrix::zeros(s, s);
    for i in 0..s {
        for j in 0..s {
            let entry = if Some(i) == t_idx {
                if i == j {
                    Poly::one()
                } else {
                    Poly::zero()
                }
            } else {
                match tier {
                    ShapeTier::UnitUpperTriangular if i == j => Poly::one(),
                    ShapeTier::UnitUpperTriangular | ShapeTier::UpperTriangular if i > j => Poly::zero(),
                    _ => {
                        let name = index_name("b", i + 1, Some(j + 1), wide);
                        Poly::var(&symbols.fresh(&name, VarKind::MatrixEntry))
                    }
                }
            };
            b.set(i, j, entry)?;
        }
    }

    let mut a = PolyMatrix::zeros(s, cols);
    for (i, v) in cfg.vars.iter().enumerate() {
        if Some(i) == t_idx {
            a.set(i, r, Poly::one())?;
        } else if let Some(p) = cfg.params.tied_param(v) {
            let col = params.iter().position(|q| q == p).unwrap();
            a.set(i, col, Poly::one())?;
        } else if let Some(value) = cfg.pinned.get(v) {
            for (col, p) in params.iter().enumerate() {
                a.set(i, col, Poly::constant(value.coeff(&Monomial::var(p.clone()))))?;
            }
            a.set(i, r, Poly::constant(value.constant_term()))?;
        } else {
            for col in 0..cols {
                let name = if cols == 1 {
                    index_name("a", i + 1, None, wide)
                } else {
                    index_name("a", i + 1, Some(col + 1), wide)
                };
                a.set(i, col, Poly::var(&symbols.fresh(&name, VarKind::InitEntry)))?;
            }
        }
    }

    let mut xhat_entries: Vec<Poly> = params.iter().map(Poly::var).collect();
    xhat_entries.push(Poly::one());
    let xhat = PolyMatrix::column(xhat_entries);

    let mut coeffs = Vec::with_capacity(roots.roots.len());
    let mut block = 0;
    for (_, m) in &roots.roots {
        let mut per_root = Vec::with_capacity(*m as usize);
        for _ in 0..*m {
            let letter = coeff_letter(block);
            block += 1;
            let mut c = PolyMatrix::zeros(s, cols);
            for i in 0..s {
                for col in 0..cols {
                    let name = if cols == 1 {
                        index_name(&letter, i + 1, None, wide)
                    } else {
                        index_name(&letter, i + 1, Some(col + 1), wide)
                    };
                    c.set(i, col, Poly::var(&symbols.fresh(&name, VarKind::Coeff)))?;
                }
            }
            per_root.push(c);
        }
        coeffs.push(per_root);
    }

    let counter = symbols.fresh("n", VarKind::LoopCounter);
    let npoly = Poly::var(&counter);
    let mut closed_form = vec![ExpPoly::zero(); s];
    for (i, (w, _)) in roots.roots.iter().enumerate() {
        for (j, c) in coeffs[i].iter().enumerate() {
            let cx = c.mul(&xhat)?;
            let nj = npoly.pow(j as u32);
            for (row, cf) in closed_form.iter_mut().enumerate() {
                cf.add_term(Monomial::var(w.clone()), &cx[(row, 0)] * &nj);
            }
        }
    }

    let initials = cfg
        .initials
        .iter()
        .map(|(sym, v)| (sym.clone(), cfg.vars.iter().position(|u| u == v).unwrap()))
        .collect();

    Ok(RecurrenceTemplate {
        symbols,
        vars: cfg.vars.clone(),
        tier,
        roots,
        b,
        a,
        xhat,
        params,
        coeffs,
        counter,
        closed_form,
        initials,
        constant_one: t_idx,
    })
}
