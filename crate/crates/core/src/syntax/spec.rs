use std::fmt;
use std::time::Duration;

use super::{normalize_ws, SyntaxError};
use crate::algebra::{parse_equation, ParseError, SymbolTable, Var, VarKind};
use crate::synth::SynthRequest;
use crate::template::{IntegerPartition, ParamSpec, ShapeTier, TemplateConfig};
use crate::Poly;

/// A synthesis problem as written in a `.inv` file.
///
/// ```text
/// # comment
/// vars x y
/// params x0 y0
/// initial a0 = a
/// invariant x == 2*y && ...
/// init y = y0
/// size 3
/// tiers un up fu
/// partition 2,1
/// aux-one
/// all-change
/// timeout 60
/// tag reconstructed
/// ```
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SpecFile {
    pub vars: Vec<String>,
    pub params: Vec<String>,
    /// `(symbol, variable)`: the symbol denotes the variable's initial value.
    pub initials: Vec<(String, String)>,
    /// Conjuncts, whitespace-normalized.
    pub invariants: Vec<String>,
    /// `(variable, expression)` pins.
    pub inits: Vec<(String, String)>,
    pub size: Option<usize>,
    pub tiers: Option<Vec<ShapeTier>>,
    pub partitions: Option<Vec<IntegerPartition>>,
    pub aux_one: bool,
    /// Every variable must change in the first iteration.
    pub all_change: bool,
    pub timeout: Option<u64>,
    pub tags: Vec<String>,
}

fn words(rest: &str) -> impl Iterator<Item = &str> {
    rest.split(|c: char| c == ',' || c.is_whitespace()).filter(|w| !w.is_empty())
}

fn split_def(rest: &str, line: usize, col: usize) -> Result<(String, String), SyntaxError> {
    let (l, r) = rest
        .split_once('=')
        .filter(|(_, r)| !r.starts_with('='))
        .ok_or_else(|| SyntaxError::new(line, col, "expected `name = expression`"))?;
    let name = l.trim();
    if !crate::algebra::is_identifier(name) {
        return Err(SyntaxError::new(line, col, format!("`{name}` is not an identifier")));
    }
    Ok((name.to_string(), normalize_ws(r)))
}

impl SpecFile {
    pub fn parse(text: &str) -> Result<SpecFile, SyntaxError> {
        let mut spec = SpecFile::default();
        let mut raw_invs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("");
            let trimmed = content.trim();
            if trimmed.is_empty() {
                continue;
            }
            let indent = content.len() - content.trim_start().len();
            let (kw, rest) = trimmed.split_once(char::is_whitespace).unwrap_or((trimmed, ""));
            let rest_col = indent + kw.len() + 2 + (rest.len() - rest.trim_start().len());
            let rest = rest.trim();
            match kw {
                "vars" => spec.vars.extend(words(rest).map(str::to_string)),
                "params" => spec.params.extend(words(rest).map(str::to_string)),
                "initial" => spec.initials.push(split_def(rest, line, rest_col)?),
                "init" => spec.inits.push(split_def(rest, line, rest_col)?),
                "invariant" => {
                    if rest.is_empty() {
                        return Err(SyntaxError::new(line, rest_col, "empty invariant"));
                    }
                    let mut off = rest_col;
                    for part in rest.split("&&") {
                        raw_invs.push((line, off, part.to_string()));
                        spec.invariants.push(normalize_ws(part));
                        off += part.chars().count() + 2;
                    }
                }
                "size" => {
                    spec.size = Some(rest.parse().map_err(|_| SyntaxError::new(line, rest_col, format!("bad size `{rest}`")))?)
                }
                "timeout" => {
                    spec.timeout =
                        Some(rest.parse().map_err(|_| SyntaxError::new(line, rest_col, format!("bad timeout `{rest}`")))?)
                }
                "tiers" => {
                    let ts = words(rest)
                        .map(|w| w.parse::<ShapeTier>())
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|e| SyntaxError::new(line, rest_col, e.to_string()))?;
                    spec.tiers = Some(ts);
                }
                "partition" => {
                    let p = rest
                        .parse::<IntegerPartition>()
                        .map_err(|e| SyntaxError::new(line, rest_col, e.to_string()))?;
                    spec.partitions.get_or_insert_with(Vec::new).push(p);
                }
                "aux-one" => spec.aux_one = true,
                "all-change" => spec.all_change = true,
                "tag" => spec.tags.extend(words(rest).map(str::to_string)),
                other => {
                    return Err(SyntaxError::new(line, indent + 1, format!("unknown directive `{other}`")));
                }
            }
        }
        if spec.vars.is_empty() {
            return Err(SyntaxError::new(1, 1, "missing `vars` declaration"));
        }
        if spec.invariants.is_empty() {
            return Err(SyntaxError::new(1, 1, "missing `invariant`"));
        }
        let known: Vec<&str> = spec
            .vars
            .iter()
            .chain(&spec.params)
            .map(String::as_str)
            .chain(spec.initials.iter().map(|(s, _)| s.as_str()))
            .collect();
        for (line, col, text) in raw_invs {
            parse_equation(&text, |name, c| {
                if known.contains(&name) {
                    Ok(Var::generated(name, VarKind::Indeterminate))
                } else {
                    Err(ParseError {
                        col: c,
                        msg: format!("unknown identifier `{name}`"),
                    })
                }
            })
            .map_err(|e| SyntaxError::new(line, col + e.col - 1, e.msg))?;
        }
        Ok(spec)
    }

    pub fn has_tag(&self, tag: &str) -> bool {
        self.tags.iter().any(|t| t == tag)
    }

    /// The invariant as one `&&`-joined line.
    pub fn invariant_text(&self) -> String {
        self.invariants.join(" && ")
    }

    /// Symbols, template configuration and parsed invariants.
    pub fn lower(&self) -> Result<(TemplateConfig, Vec<Poly>), SyntaxError> {
        let err = |msg: String| SyntaxError::new(0, 0, msg);
        let mut t = SymbolTable::new();
        let mut vars = Vec::new();
        for v in &self.vars {
            vars.push(t.declare(v, VarKind::Program).map_err(|e| err(e.to_string()))?);
        }
        let mut params = Vec::new();
        for p in &self.params {
            params.push(t.declare(p, VarKind::Param).map_err(|e| err(e.to_string()))?);
        }
        let mut initials = Vec::new();
        for (sym, of) in &self.initials {
            let target = vars
                .iter()
                .find(|v| v.name() == of)
                .cloned()
                .ok_or_else(|| err(format!("`{of}` in `initial {sym} = {of}` is not a variable")))?;
            let s = t.declare(sym, VarKind::Initial(of.as_str().into())).map_err(|e| err(e.to_string()))?;
            initials.push((s, target));
        }
        let mut invariants = Vec::new();
        for (k, text) in self.invariants.iter().enumerate() {
            let p = parse_equation(text, |name, col| {
                t.get(name)
                    .cloned()
                    .ok_or_else(|| ParseError {
                        col,
                        msg: format!("unknown identifier `{name}`"),
                    })
            })
            .map_err(|e| err(format!("invariant conjunct {}: {e}", k + 1)))?;
            invariants.push(p);
        }
        let mut pinned = std::collections::BTreeMap::new();
        for (v, text) in &self.inits {
            let var = vars
                .iter()
                .find(|u| u.name() == v)
                .cloned()
                .ok_or_else(|| err(format!("`init {v}`: not a variable")))?;
            let p = crate::algebra::parse_poly(text, |name, col| {
                params
                    .iter()
                    .find(|u| u.name() == name)
                    .cloned()
                    .ok_or_else(|| ParseError {
                        col,
                        msg: format!("`{name}` is not a parameter"),
                    })
            })
            .map_err(|e| err(format!("`init {v}`: {e}")))?;
            pinned.insert(var, p);
        }
        let mut state: Vec<Var> = vars.clone();
        let mut constant_one = None;
        if self.aux_one {
            let one = t.fresh("t", VarKind::Program);
            state.push(one.clone());
            constant_one = Some(one);
        }
        if let Some(s) = self.size {
            if s < state.len() {
                return Err(err(format!("size {s} is smaller than the {} state variables", state.len())));
            }
            while state.len() < s {
                state.push(t.fresh("aux", VarKind::Program));
            }
        }
        let mut cfg = TemplateConfig::new(t, state);
        cfg.params = ParamSpec::new(params);
        cfg.pinned = pinned;
        cfg.initials = initials.into_iter().collect();
        cfg.constant_one = constant_one;
        Ok((cfg, invariants))
    }

    /// A synthesis request with the file's options applied.
    pub fn to_request(&self) -> Result<SynthRequest, SyntaxError> {
        let (cfg, invariants) = self.lower()?;
        let mut req = SynthRequest::new(cfg, invariants);
        if let Some(ts) = &self.tiers {
            req.tiers = ts.clone();
        }
        req.partitions = self.partitions.clone();
        req.per_variable_nontrivial = self.all_change;
        if let Some(t) = self.timeout {
            req.timeout = Duration::from_secs(t.max(1));
        }
        Ok(req)
    }
}

impl fmt::Display for SpecFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.tags.is_empty() {
            writeln!(f, "tag {}", self.tags.join(" "))?;
        }
        writeln!(f, "vars {}", self.vars.join(" "))?;
        if !self.params.is_empty() {
            writeln!(f, "params {}", self.params.join(" "))?;
        }
        for (s, v) in &self.initials {
            writeln!(f, "initial {s} = {v}")?;
        }
        writeln!(f, "invariant {}", self.invariant_text())?;
        for (v, e) in &self.inits {
            writeln!(f, "init {v} = {e}")?;
        }
        if let Some(s) = self.size {
            writeln!(f, "size {s}")?;
        }
        if let Some(ts) = &self.tiers {
            let ts: Vec<String> = ts.iter().map(|t| t.short().to_ascii_lowercase()).collect();
            writeln!(f, "tiers {}", ts.join(" "))?;
        }
        for p in self.partitions.iter().flatten() {
            let parts: Vec<String> = p.parts().iter().map(u32::to_string).collect();
            writeln!(f, "partition {}", parts.join(","))?;
        }
        if self.aux_one {
            writeln!(f, "aux-one")?;
        }
        if self.all_change {
            writeln!(f, "all-change")?;
        }
        if let Some(t) = self.timeout {
            writeln!(f, "timeout {t}")?;
        }
        Ok(())
    }
}
