//! Search over shape tiers, variable orders and root multiplicity patterns.
//!
//! Each combination is a cell: one template, one PCP, one solver session.
//! Cells are ordered from the most restrictive template to the least and the
//! first cell that yields a loop wins. Every loop leaves this module only
//! after the exact verifier has accepted it.

mod loops;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use itertools::Itertools;
use serde::Serialize;

pub use loops::{loop_from_model, Loop, LoopOrigin};

use crate::algebra::{Atom, Clause, Origin, Var};
use crate::pcp::{build_pcp, simplify, Eliminated, Pcp, PcpError};
use crate::smt::{solve, solve_cfinite, Model, ModelValue, SmtError, SmtOutcome, SolverConfig};
use crate::template::{build_template, int_partitions, IntegerPartition, RecurrenceTemplate, ShapeTier, TemplateConfig, TemplateError};
use crate::verify::{check_invariant, VerifyError};
use crate::{Poly, PolyMatrix, RClause};

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Pcp(#[from] PcpError),
    #[error(transparent)]
    Smt(#[from] SmtError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error("internal error: synthesized loop violates `{invariant} = 0`:\n{text}")]
    VerifierRejected { invariant: String, text: String },
    #[error("solver assigned the irrational value {value} to `{symbol}`")]
    Algebraic { symbol: String, value: String },
    #[error("{0}")]
    Config(String),
}

/// A synthesis problem and the search options.
#[derive(Clone, Debug)]
pub struct SynthRequest {
    pub config: TemplateConfig,
    pub invariants: Vec<Poly>,
    pub tiers: Vec<ShapeTier>,
    /// Only these root multiplicity patterns, when set.
    pub partitions: Option<Vec<IntegerPartition>>,
    /// Only these variable orders for order-sensitive tiers, when set.
    pub orders: Option<Vec<Vec<Var>>>,
    /// Require `U X_0 != X_0`.
    pub avoid_trivial: bool,
    /// Require every variable to change in the first iteration.
    pub per_variable_nontrivial: bool,
    /// Budget for the whole search.
    pub timeout: Duration,
    /// Number of distinct loops wanted.
    pub count: usize,
    pub jobs: usize,
    /// Use the C-finite procedure instead of one plain query.
    pub use_cfinite: bool,
}

impl SynthRequest {
    pub fn new(config: TemplateConfig, invariants: Vec<Poly>) -> Self {
        SynthRequest {
            config,
            invariants,
            tiers: ShapeTier::ALL.to_vec(),
            partitions: None,
            orders: None,
            avoid_trivial: true,
            per_variable_nontrivial: false,
            timeout: Duration::from_secs(60),
            count: 1,
            jobs: 1,
            use_cfinite: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellStatus {
    Found,
    Unsat,
    Unknown,
    Timeout,
    /// The model had irrational entries in `U` or `V`.
    Irrational,
    /// Not run because an earlier cell already succeeded.
    Skipped,
}

#[derive(Clone, Debug, Serialize)]
pub struct CellReport {
    pub tier: ShapeTier,
    pub partition: String,
    pub permutation: Vec<String>,
    pub status: CellStatus,
    pub step: u8,
    pub queries: usize,
    pub millis: u128,
}

#[derive(Clone, Debug)]
pub enum SynthOutcome {
    Found(Vec<Loop>),
    /// Every cell was refuted.
    NotFound { reason: String },
    /// Some cell ran out of time or the solver gave up.
    Exhausted,
}

#[derive(Clone, Debug)]
pub struct SynthReport {
    pub outcome: SynthOutcome,
    pub cells: Vec<CellReport>,
    pub millis: u128,
}

impl SynthReport {
    pub fn loops(&self) -> &[Loop] {
        match &self.outcome {
            SynthOutcome::Found(ls) => ls,
            _ => &[],
        }
    }
}

/// `(B - I) A != 0`, either as one disjunction or one per variable.
pub fn nontriviality_clauses(tpl: &RecurrenceTemplate, per_variable: bool) -> Vec<RClause> {
    let d = tpl
        .b
        .sub(&PolyMatrix::identity(tpl.size()))
        .and_then(|m| m.mul(&tpl.a))
        .expect("template dimensions");
    let row_atoms = |i: usize| -> Vec<Atom<crate::Rational>> { d.row(i).iter().map(|p| Atom::ne(p.clone())).collect() };
    let rows = (0..tpl.size()).filter(|i| Some(*i) != tpl.constant_one);
    let mut out = Vec::new();
    if per_variable {
        for i in rows {
            out.push(Clause::new(row_atoms(i), Origin::Nontrivial));
        }
    } else {
        out.push(Clause::new(rows.flat_map(row_atoms).collect(), Origin::Nontrivial));
    }
    out
}

/// Excludes `found` from the models of `tpl`, matching variables by name.
/// `None` when the template cannot express `found` at all.
pub fn blocking_clause(tpl: &RecurrenceTemplate, found: &Loop) -> Option<RClause> {
    let pos: Vec<usize> = tpl
        .vars
        .iter()
        .map(|v| found.vars.iter().position(|u| u.name() == v.name()))
        .collect::<Option<_>>()?;
    if found.init_matrix.cols() != tpl.a.cols() {
        return None;
    }
    let mut diffs = Vec::new();
    for i in 0..tpl.size() {
        for j in 0..tpl.size() {
            diffs.push(&tpl.b[(i, j)] - &found.update[(pos[i], pos[j])]);
        }
        for k in 0..tpl.a.cols() {
            diffs.push(&tpl.a[(i, k)] - &found.init_matrix[(pos[i], k)]);
        }
    }
    let mut atoms = Vec::new();
    for p in diffs {
        let a = Atom::ne(p);
        match a.decide() {
            Some(true) => return None,
            Some(false) => {}
            None => atoms.push(a),
        }
    }
    if atoms.is_empty() {
        atoms.push(Atom::ne(Poly::zero()));
    }
    Some(Clause::new(atoms, Origin::Blocking))
}

#[derive(Clone, Debug)]
struct Cell {
    tier: ShapeTier,
    order: Vec<Var>,
    partition: IntegerPartition,
}

fn orders_for(req: &SynthRequest, tier: ShapeTier) -> Result<Vec<Vec<Var>>, SynthError> {
    let cfg = &req.config;
    if !tier.order_sensitive() {
        return Ok(vec![cfg.vars.clone()]);
    }
    if let Some(orders) = &req.orders {
        for o in orders {
            let mut a: Vec<&str> = o.iter().map(Var::name).collect();
            let mut b: Vec<&str> = cfg.vars.iter().map(Var::name).collect();
            a.sort_unstable();
            b.sort_unstable();
            if a != b {
                let o: Vec<&str> = o.iter().map(Var::name).collect();
                return Err(SynthError::Config(format!("`{}` is not an order of the program variables", o.join(" "))));
            }
        }
        return Ok(orders.clone());
    }
    let mut free: Vec<Var> = cfg
        .vars
        .iter()
        .filter(|v| Some(*v) != cfg.constant_one.as_ref())
        .cloned()
        .collect();
    // Under a triangular shape a variable may only read the ones after it.
    // Variables of low degree in the invariant tend to grow fastest, so they
    // go first; orders are then tried by distance from that base order.
    let rank = |v: &Var| req.invariants.iter().map(|p| p.degree_in(v)).max().unwrap_or(0);
    free.sort_by(|a, b| rank(a).cmp(&rank(b)).then_with(|| a.name().cmp(b.name())));
    let n = free.len();
    let mut perms: Vec<Vec<usize>> = (0..n).permutations(n).collect();
    let inversions = |p: &Vec<usize>| (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).filter(|&(i, j)| p[i] > p[j]).count();
    perms.sort_by_cached_key(inversions);
    Ok(perms
        .into_iter()
        .map(|p| {
            let mut o: Vec<Var> = p.into_iter().map(|i| free[i].clone()).collect();
            o.extend(cfg.constant_one.clone());
            o
        })
        .collect())
}

fn cells(req: &SynthRequest) -> Result<Vec<Cell>, SynthError> {
    let s = req.config.vars.len() as u32;
    let all = int_partitions(s)?;
    let allowed = |p: &IntegerPartition| req.partitions.as_ref().is_none_or(|ps| ps.contains(p));
    let mut out = Vec::new();
    for &tier in &req.tiers {
        let parts: Vec<IntegerPartition> = if tier == ShapeTier::UnitUpperTriangular {
            // the unit diagonal forces the single root 1
            vec![IntegerPartition::new(vec![s])?]
        } else {
            all.clone()
        };
        for order in orders_for(req, tier)? {
            for p in parts.iter().filter(|p| allowed(p)) {
                out.push(Cell {
                    tier,
                    order: order.clone(),
                    partition: p.clone(),
                });
            }
        }
    }
    Ok(out)
}

/// The `(tier, partition, order)` cells of `req` in search order.
pub fn search_plan(req: &SynthRequest) -> Result<Vec<(ShapeTier, IntegerPartition, Vec<Var>)>, SynthError> {
    Ok(cells(req)?.into_iter().map(|c| (c.tier, c.partition, c.order)).collect())
}

struct CellResult {
    status: CellStatus,
    loops: Vec<Loop>,
    step: u8,
    queries: usize,
}

fn run_cell(
    req: &SynthRequest,
    cell: &Cell,
    cfg: &SolverConfig,
    blocked: &[Loop],
    wanted: usize,
) -> Result<CellResult, SynthError> {
    let started = Instant::now();
    let tpl = build_template(&req.config.permuted(&cell.order), cell.tier, &cell.partition)?;
    let mut pcp: Pcp = build_pcp(&tpl, &req.invariants)?;
    if req.avoid_trivial || req.per_variable_nontrivial {
        pcp.extend(nontriviality_clauses(&tpl, req.per_variable_nontrivial));
    }
    for l in blocked {
        pcp.extend(blocking_clause(&tpl, l));
    }
    let deadline = started + cfg.timeout;
    let mut res = CellResult {
        status: CellStatus::Unsat,
        loops: Vec::new(),
        step: 0,
        queries: 0,
    };
    while res.loops.len() < wanted {
        let left = deadline.saturating_duration_since(Instant::now());
        if left.is_zero() {
            res.status = CellStatus::Timeout;
            break;
        }
        let qcfg = cfg.clone().with_timeout(left)?;
        let (reduced, elim) = simplify(&pcp);
        let (outcome, step, queries) = if req.use_cfinite && !reduced.cfinite.is_empty() {
            match solve_cfinite(&reduced, &reduced.cfinite, &qcfg) {
                Ok(rep) => (rep.outcome, rep.step, rep.queries),
                Err(SmtError::PartitionSpaceExhausted { tried }) => {
                    log::debug!("all {tried} index partitions refuted");
                    (SmtOutcome::Unsat(None), 3, tried)
                }
                Err(e) => return Err(e.into()),
            }
        } else {
            (solve(&reduced, &qcfg)?, 0, 1)
        };
        res.step = step;
        res.queries += queries;
        let model = match outcome {
            SmtOutcome::Sat(m) => m,
            SmtOutcome::Unsat(_) => {
                if res.loops.is_empty() {
                    res.status = CellStatus::Unsat;
                }
                break;
            }
            SmtOutcome::Unknown(why) => {
                log::debug!("solver returned unknown: {why}");
                res.status = CellStatus::Unknown;
                break;
            }
            SmtOutcome::Timeout => {
                res.status = CellStatus::Timeout;
                break;
            }
        };
        let mut l = match complete_model(model, &elim).and_then(|m| loop_from_model(&tpl, &m)) {
            Ok(l) => l,
            Err(SynthError::Algebraic { symbol, value }) => {
                log::warn!("irrational model value for `{symbol}`: {value}");
                res.status = CellStatus::Irrational;
                break;
            }
            Err(e) => return Err(e),
        };
        gate(req, &l)?;
        l.origin = Some(LoopOrigin {
            tier: cell.tier,
            partition: cell.partition.clone(),
            permutation: cell.order.iter().map(|v| v.name().to_string()).collect(),
            step,
            queries: res.queries,
            millis: started.elapsed().as_millis(),
        });
        pcp.extend(blocking_clause(&tpl, &l));
        res.loops.push(l);
        res.status = CellStatus::Found;
    }
    if !res.loops.is_empty() {
        res.status = CellStatus::Found;
    }
    Ok(res)
}

/// Adds the symbols removed by [`simplify`] to `model`.
fn complete_model(mut model: Model, elim: &Eliminated) -> Result<Model, SynthError> {
    if elim.is_empty() {
        return Ok(model);
    }
    let mut values = BTreeMap::new();
    for (v, x) in &model.values {
        match x {
            ModelValue::Rational(r) => {
                values.insert(v.clone(), r.clone());
            }
            ModelValue::Algebraic(a) => {
                if let Some((u, _)) = elim.defs.iter().find(|(_, d)| d.mentions(v)) {
                    return Err(SynthError::Algebraic {
                        symbol: u.name().to_string(),
                        value: format!("depending on {v} = {a}"),
                    });
                }
            }
        }
    }
    elim.extend(&mut values);
    for (v, _) in &elim.defs {
        model.values.insert(v.clone(), ModelValue::Rational(values[v].clone()));
    }
    Ok(model)
}

/// Exact verification of every invariant plus invertibility of `U`.
fn gate(req: &SynthRequest, l: &Loop) -> Result<(), SynthError> {
    let sys = l.system();
    for p in &req.invariants {
        if !check_invariant(&sys, p)?.holds {
            return Err(SynthError::VerifierRejected {
                invariant: p.to_string(),
                text: l.render(),
            });
        }
    }
    if l.det().is_zero() {
        return Err(SynthError::VerifierRejected {
            invariant: "det(U) != 0".into(),
            text: l.render(),
        });
    }
    Ok(())
}

/// Runs the search described by `req`.
pub fn synthesize(req: &SynthRequest, solver: &SolverConfig) -> Result<SynthReport, SynthError> {
    let started = Instant::now();
    if req.count == 0 {
        return Err(SynthError::Config("count must be positive".into()));
    }
    let invariants: Vec<&Poly> = req.invariants.iter().filter(|p| !p.is_zero()).collect();
    if let Some(p) = invariants.iter().find(|p| p.is_constant()) {
        return Ok(SynthReport {
            outcome: SynthOutcome::NotFound {
                reason: format!("invariant `{p} = 0` is a contradiction"),
            },
            cells: Vec::new(),
            millis: started.elapsed().as_millis(),
        });
    }
    let req = &SynthRequest {
        invariants: invariants.into_iter().cloned().collect(),
        ..req.clone()
    };
    let cells = cells(req)?;
    let n = cells.len();
    let jobs = if req.count > 1 { 1 } else { req.jobs.clamp(1, n.max(1)) };
    let deadline = started + req.timeout;

    let next = AtomicUsize::new(0);
    let winner = AtomicUsize::new(usize::MAX);
    let found_total = AtomicUsize::new(0);
    let flags: Vec<Arc<AtomicBool>> = (0..n).map(|_| Arc::new(AtomicBool::new(false))).collect();
    let blocked: Mutex<Vec<Loop>> = Mutex::new(Vec::new());
    type Slot = Option<(Result<CellResult, SynthError>, u128)>;
    let results: Mutex<Vec<Slot>> = Mutex::new((0..n).map(|_| None).collect());

    let worker = || loop {
        let k = next.fetch_add(1, Ordering::SeqCst);
        if k >= n {
            break;
        }
        let t0 = Instant::now();
        let res = if k > winner.load(Ordering::SeqCst) {
            Ok(CellResult {
                status: CellStatus::Skipped,
                loops: Vec::new(),
                step: 0,
                queries: 0,
            })
        } else {
            let remaining = deadline.saturating_duration_since(t0);
            let share = remaining.mul_f64(jobs as f64 / (n - k) as f64);
            let budget = remaining.min(share.max(Duration::from_secs(1)));
            if budget.is_zero() {
                Ok(CellResult {
                    status: CellStatus::Timeout,
                    loops: Vec::new(),
                    step: 0,
                    queries: 0,
                })
            } else {
                let cfg = SolverConfig {
                    timeout: budget,
                    ..solver.clone()
                }
                .with_cancel(flags[k].clone());
                let block = blocked.lock().unwrap().clone();
                let wanted = req.count - found_total.load(Ordering::SeqCst);
                let c = &cells[k];
                log::info!("cell {k}: {} {} [{}]", c.tier, c.partition, c.order.iter().map(Var::name).join(" "));
                match run_cell(req, c, &cfg, &block, wanted) {
                    Err(SynthError::Smt(SmtError::Cancelled)) => Ok(CellResult {
                        status: CellStatus::Skipped,
                        loops: Vec::new(),
                        step: 0,
                        queries: 0,
                    }),
                    other => other,
                }
            }
        };
        let stop = match &res {
            Ok(r) if !r.loops.is_empty() => {
                blocked.lock().unwrap().extend(r.loops.iter().cloned());
                found_total.fetch_add(r.loops.len(), Ordering::SeqCst) + r.loops.len() >= req.count
            }
            Ok(_) => false,
            Err(_) => true,
        };
        if stop {
            winner.fetch_min(k, Ordering::SeqCst);
            for f in &flags[k + 1..] {
                f.store(true, Ordering::SeqCst);
            }
        }
        results.lock().unwrap()[k] = Some((res, t0.elapsed().as_millis()));
    };
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(worker);
        }
    });

    let mut reports = Vec::with_capacity(n);
    let mut loops = Vec::new();
    let mut inconclusive = false;
    for (cell, slot) in cells.iter().zip(results.into_inner().unwrap()) {
        let (res, millis) = slot.expect("every cell is visited");
        let r = res?;
        inconclusive |= matches!(r.status, CellStatus::Unknown | CellStatus::Timeout | CellStatus::Irrational);
        loops.extend(r.loops);
        reports.push(CellReport {
            tier: cell.tier,
            partition: cell.partition.to_string(),
            permutation: cell.order.iter().map(|v| v.name().to_string()).collect(),
            status: r.status,
            step: r.step,
            queries: r.queries,
            millis,
        });
        if loops.len() >= req.count {
            break;
        }
    }
    // cells past the winner are reported as skipped
    for cell in cells.iter().skip(reports.len()) {
        reports.push(CellReport {
            tier: cell.tier,
            partition: cell.partition.to_string(),
            permutation: cell.order.iter().map(|v| v.name().to_string()).collect(),
            status: CellStatus::Skipped,
            step: 0,
            queries: 0,
            millis: 0,
        });
    }
    loops.truncate(req.count);
    let outcome = if !loops.is_empty() {
        SynthOutcome::Found(loops)
    } else if inconclusive {
        SynthOutcome::Exhausted
    } else {
        SynthOutcome::NotFound {
            reason: format!("all {n} templates are infeasible"),
        }
    };
    Ok(SynthReport {
        outcome,
        cells: reports,
        millis: started.elapsed().as_millis(),
    })
}
