//! External SMT solving over QF_NRA through the SMT-LIB 2 text protocol.
//!
//! Every query is a one-shot script piped into a fresh solver process.
//! Hard clauses carry `:named` labels so unsat cores map back to clauses;
//! values are requested with `get-value` and matched positionally. Rational
//! models are re-checked exactly before they leave this module.

mod algebraic;
mod cfinite;
mod config;
mod emit;
mod model;
mod process;
pub mod sexpr;
mod vandermonde;

use std::time::Duration;

pub use algebraic::{AlgebraicNumber, UniPoly};
pub use cfinite::{index_partitions, solve_cfinite, CfiniteReport, IndexPartition};
pub use config::{SolverConfig, SOLVER_ENV};
pub use emit::{atom as atom_smt, clause as clause_smt, emit_smtlib, pcp_script, reparse_asserts, symbol, term, term_to_poly, Script};
pub use model::{Model, ModelValue};
pub use vandermonde::{vandermonde_det, vandermonde_zero_check};

use crate::pcp::Pcp;
use crate::RClause;
use process::{run_script, RunResult};
use sexpr::{parse_all, SExpr};

#[derive(Debug, thiserror::Error)]
pub enum SmtError {
    #[error("cannot start solver `{path}`: {source}")]
    Spawn {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("solver I/O failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("solver failure: {0}")]
    Process(String),
    #[error("cannot understand solver output: {0}")]
    Protocol(String),
    #[error("solver model violates clause `{clause}`")]
    ModelCheck { clause: String },
    #[error("all {tried} index partitions were refuted")]
    PartitionSpaceExhausted { tried: usize },
    #[error("query cancelled")]
    Cancelled,
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("root values are not pairwise distinct: {0}")]
    DuplicateRoot(String),
}

/// Verdict of one query.
#[derive(Clone, Debug)]
pub enum SmtOutcome {
    /// Rational models have been re-checked; see [`Model::is_exact`].
    Sat(Model),
    /// Labels of an unsat core, when the solver produced one.
    Unsat(Option<Vec<String>>),
    Unknown(String),
    Timeout,
}

impl SmtOutcome {
    pub fn model(&self) -> Option<&Model> {
        match self {
            SmtOutcome::Sat(m) => Some(m),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SmtOutcome::Sat(_) => "sat",
            SmtOutcome::Unsat(_) => "unsat",
            SmtOutcome::Unknown(_) => "unknown",
            SmtOutcome::Timeout => "timeout",
        }
    }
}

/// Runs `script` and interprets the answer. Models are not checked here.
pub(crate) fn run_query(script: &Script, cfg: &SolverConfig, timeout: Duration) -> Result<SmtOutcome, SmtError> {
    let text = script.render();
    log::trace!("solver script:\n{text}");
    let out = match run_script(cfg, &text, timeout)? {
        RunResult::TimedOut => return Ok(SmtOutcome::Timeout),
        RunResult::Finished(out) => out,
    };
    log::trace!("solver output:\n{out}");
    let items = parse_all(&out).map_err(|e| SmtError::Protocol(format!("{e} in `{}`", out.trim())))?;
    let mut errors = Vec::new();
    let mut rest = Vec::new();
    for it in items {
        if it.is_call("error") {
            errors.push(it.to_string());
        } else {
            rest.push(it);
        }
    }
    for e in &errors {
        log::debug!("solver: {e}");
    }
    let mut rest = rest.into_iter();
    let verdict = match rest.next() {
        Some(SExpr::Atom(a)) => a,
        _ => {
            return Err(SmtError::Protocol(format!(
                "no check-sat answer{}",
                errors.first().map(|e| format!(" ({e})")).unwrap_or_default()
            )))
        }
    };
    match verdict.as_str() {
        "sat" => {
            if script.query.is_empty() {
                return Ok(SmtOutcome::Sat(Model::default()));
            }
            let resp = rest.next().ok_or_else(|| SmtError::Protocol("missing get-value response".into()))?;
            let m = model::model_from_response(&resp, &script.query).map_err(SmtError::Protocol)?;
            Ok(SmtOutcome::Sat(m))
        }
        "unsat" => {
            let core = if script.cores {
                rest.next().and_then(|c| {
                    c.list()
                        .map(|xs| xs.iter().filter_map(SExpr::atom).map(str::to_string).collect())
                })
            } else {
                None
            };
            Ok(SmtOutcome::Unsat(core))
        }
        "unknown" | "timeout" => Ok(SmtOutcome::Unknown(verdict)),
        other => Err(SmtError::Protocol(format!("unexpected answer `{other}`"))),
    }
}

/// Exact re-check of a rational model against hard clauses. Algebraic
/// models pass through unchecked.
pub(crate) fn check_model<'a>(model: &Model, clauses: impl IntoIterator<Item = &'a RClause>) -> Result<(), SmtError> {
    let Some(values) = model.rationals() else {
        return Ok(());
    };
    for c in clauses {
        if c.soft {
            continue;
        }
        match c.eval(&values) {
            Some(true) => {}
            Some(false) => return Err(SmtError::ModelCheck { clause: c.to_string() }),
            None => {
                return Err(SmtError::Protocol(format!("model misses a symbol of `{c}`")));
            }
        }
    }
    Ok(())
}

/// Decides the PCP with one solver call.
pub fn solve(pcp: &Pcp, cfg: &SolverConfig) -> Result<SmtOutcome, SmtError> {
    let mut script = pcp_script(pcp, cfg.supports_soft);
    script.cores = cfg.supports_cores;
    let out = run_query(&script, cfg, cfg.timeout)?;
    if let SmtOutcome::Sat(m) = &out {
        check_model(m, &pcp.clauses)?;
        if !m.is_exact() {
            log::warn!("model has algebraic values and is only inexactly verified: {m}");
        }
    }
    Ok(out)
}
