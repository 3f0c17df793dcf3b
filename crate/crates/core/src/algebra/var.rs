use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

/// What a symbol stands for in a synthesis session.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "of")]
pub enum VarKind {
    /// A loop variable `x_i`, read as the sequence value `x_i(n)`.
    Program,
    /// The initial value `x_i(0)` of the named program variable.
    Initial(Arc<str>),
    /// A symbolic eigenvalue.
    Root,
    /// An entry of the update matrix.
    MatrixEntry,
    /// An entry of the initial-value matrix.
    InitEntry,
    /// A closed-form coefficient.
    Coeff,
    /// A universally quantified loop parameter.
    Param,
    /// The iteration counter `n` of a closed form.
    LoopCounter,
    /// A scratch indeterminate (e.g. the variable of a characteristic polynomial).
    Indeterminate,
}

impl VarKind {
    pub fn label(&self) -> &'static str {
        match self {
            VarKind::Program => "program",
            VarKind::Initial(_) => "initial",
            VarKind::Root => "root",
            VarKind::MatrixEntry => "matrix-entry",
            VarKind::InitEntry => "init-entry",
            VarKind::Coeff => "coeff",
            VarKind::Param => "param",
            VarKind::LoopCounter => "loop-counter",
            VarKind::Indeterminate => "indeterminate",
        }
    }
}

/// A named indeterminate.
///
/// Variables are totally ordered by `(rank, name)`: user-declared symbols carry
/// their declaration index as rank, generated symbols share the maximal rank and
/// therefore sort alphabetically after every user symbol. This order drives the
/// graded-lexicographic term order of [`super::Polynomial`].
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    rank: u32,
    name: Arc<str>,
    kind: VarKind,
}

pub const GENERATED_RANK: u32 = u32::MAX;

impl Var {
    pub fn new(name: impl Into<Arc<str>>, kind: VarKind, rank: u32) -> Self {
        Var {
            rank,
            name: name.into(),
            kind,
        }
    }

    /// A generated symbol (maximal rank).
    pub fn generated(name: impl Into<Arc<str>>, kind: VarKind) -> Self {
        Var::new(name, kind, GENERATED_RANK)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &VarKind {
        &self.kind
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    pub fn is_generated(&self) -> bool {
        self.rank == GENERATED_RANK
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SymbolError {
    #[error("symbol `{0}` declared twice")]
    Duplicate(String),
    #[error("`{0}` is not a valid identifier")]
    BadName(String),
}

/// Registry of every symbol in a session; hands out collision-free names.
#[derive(Clone, Debug, Default)]
pub struct SymbolTable {
    by_name: BTreeMap<Arc<str>, Var>,
    next_rank: u32,
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares a user symbol. Ranks follow declaration order.
    pub fn declare(&mut self, name: &str, kind: VarKind) -> Result<Var, SymbolError> {
        if !is_identifier(name) {
            return Err(SymbolError::BadName(name.to_string()));
        }
        if self.by_name.contains_key(name) {
            return Err(SymbolError::Duplicate(name.to_string()));
        }
        let v = Var::new(name, kind, self.next_rank);
        self.next_rank += 1;
        self.by_name.insert(v.name.clone(), v.clone());
        Ok(v)
    }

    /// Generates a fresh symbol named `base` (or `base_1`, `base_2`, ... when
    /// taken).
    pub fn fresh(&mut self, base: &str, kind: VarKind) -> Var {
        let mut name = base.to_string();
        let mut k = 1;
        while self.by_name.contains_key(name.as_str()) {
            name = format!("{base}_{k}");
            k += 1;
        }
        let v = Var::generated(name, kind);
        self.by_name.insert(v.name.clone(), v.clone());
        v
    }

    /// Registers an existing variable (e.g. one created by another table).
    pub fn register(&mut self, v: &Var) -> Result<(), SymbolError> {
        match self.by_name.get(v.name()) {
            Some(existing) if existing == v => Ok(()),
            Some(_) => Err(SymbolError::Duplicate(v.name().to_string())),
            None => {
                if !v.is_generated() {
                    self.next_rank = self.next_rank.max(v.rank + 1);
                }
                self.by_name.insert(v.name.clone(), v.clone());
                Ok(())
            }
        }
    }

    pub fn get(&self, name: &str) -> Option<&Var> {
        self.by_name.get(name)
    }

    pub fn contains(&self, v: &Var) -> bool {
        self.by_name.get(v.name()) == Some(v)
    }

    pub fn len(&self) -> usize {
        self.by_name.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_name.is_empty()
    }

    /// All symbols in variable order.
    pub fn vars(&self) -> Vec<Var> {
        let mut v: Vec<Var> = self.by_name.values().cloned().collect();
        v.sort();
        v
    }

    pub fn of_kind(&self, pred: impl Fn(&VarKind) -> bool) -> Vec<Var> {
        self.vars().into_iter().filter(|v| pred(v.kind())).collect()
    }
}

/// `[A-Za-z_][A-Za-z0-9_']*`
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
}
