//! Solving PCPs whose invariant part is a set of C-finite constraints
//! `Σ_i w_i^n u_i = 0`, without instantiating them at high powers of `w`.
//!
//! 1. Ask for a model of the hard clauses that satisfies as many soft
//!    constraints `u_i = 0` as possible. If all hold, done.
//! 2. Otherwise group the exponentials by their model values into an index
//!    partition and ask again with: equal values inside blocks, distinct
//!    values across blocks, and vanishing `u`-sums per block.
//! 3. On failure, learn a nogood from the unsat core and move on to the next
//!    partition (more blocks first, then lexicographically).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::time::{Duration, Instant};

use super::{check_model, run_query, Model, Script, SmtError, SmtOutcome, SolverConfig};
use crate::algebra::{Monomial, Origin, Var};
use crate::pcp::{split_params, CFiniteConstraint, Pcp};
use crate::{Poly, RClause, Rational};

/// Disjoint nonempty blocks covering `0..len`, blocks ordered by their
/// smallest element. Displayed 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IndexPartition {
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
}

impl IndexPartition {
    /// From a restricted growth string (`rgs[i]` is the block of `i`).
    pub fn from_rgs(rgs: &[usize]) -> Self {
        let k = rgs.iter().map(|b| b + 1).max().unwrap_or(0);
        let mut blocks = vec![Vec::new(); k];
        for (i, &b) in rgs.iter().enumerate() {
            blocks[b].push(i);
        }
        assert!(blocks.iter().all(|b| !b.is_empty()), "not a restricted growth string");
        IndexPartition {
            blocks,
            block_of: rgs.to_vec(),
        }
    }

    /// Groups indices whose keys are equal.
    pub fn from_keys<K: PartialEq>(keys: &[K]) -> Self {
        let mut reps: Vec<&K> = Vec::new();
        let mut rgs = Vec::with_capacity(keys.len());
        for k in keys {
            match reps.iter().position(|r| *r == k) {
                Some(b) => rgs.push(b),
                None => {
                    rgs.push(reps.len());
                    reps.push(k);
                }
            }
        }
        Self::from_rgs(&rgs)
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn size(&self) -> usize {
        self.block_of.len()
    }

    pub fn same_block(&self, i: usize, j: usize) -> bool {
        self.block_of[i] == self.block_of[j]
    }
}

impl fmt::Display for IndexPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, b) in self.blocks.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            let items: Vec<String> = b.iter().map(|i| (i + 1).to_string()).collect();
            write!(f, "{{{}}}", items.join(","))?;
        }
        f.write_str("}")
    }
}

/// Lexicographic successor among restricted growth strings with exactly `k`
/// blocks.
fn next_rgs(a: &mut [usize], k: usize) -> bool {
    let n = a.len();
    for i in (1..n).rev() {
        let prefix_max = a[..i].iter().copied().max().unwrap_or(0);
        for v in a[i] + 1..=prefix_max + 1 {
            let used = prefix_max.max(v) + 1;
            let rest = n - 1 - i;
            if used <= k && used + rest >= k {
                a[i] = v;
                // zeros, then the missing block labels at the very end
                let missing = k - used;
                for (j, slot) in a[i + 1..].iter_mut().enumerate() {
                    *slot = if j + missing >= rest { used + (j + missing - rest) } else { 0 };
                }
                return true;
            }
        }
    }
    false
}

fn first_rgs(n: usize, k: usize) -> Vec<usize> {
    (0..n).map(|i| (i + k).saturating_sub(n)).collect()
}

/// All partitions of `0..n`: more blocks first, lexicographic by restricted
/// growth string within a block count.
pub fn index_partitions(n: usize) -> impl Iterator<Item = IndexPartition> {
    let mut k = n;
    let mut cur: Option<Vec<usize>> = (n > 0).then(|| first_rgs(n, n));
    std::iter::from_fn(move || loop {
        let a = cur.as_mut()?;
        let out = IndexPartition::from_rgs(a);
        if !next_rgs(a, k) {
            if k > 1 {
                k -= 1;
                *a = first_rgs(n, k);
            } else {
                cur = None;
            }
        }
        return Some(out);
    })
}

/// A partition constraint, as far as nogoods are concerned.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Fact {
    Same(usize, usize),
    Diff(usize, usize),
    /// `Σ_{i∈I} u_i = 0` for one constraint.
    Sum(usize, Vec<usize>),
}

impl Fact {
    /// Whether the constraints of `p` imply this fact.
    fn implied_by(&self, p: &IndexPartition, members: &[BTreeSet<usize>]) -> bool {
        match self {
            Fact::Same(i, j) => p.same_block(*i, *j),
            Fact::Diff(i, j) => !p.same_block(*i, *j),
            Fact::Sum(k, set) => {
                let set: BTreeSet<usize> = set.iter().copied().collect();
                p.blocks().iter().all(|b| {
                    let inside: Vec<bool> = b.iter().filter(|i| members[*k].contains(i)).map(|i| set.contains(i)).collect();
                    inside.iter().all(|x| *x) || inside.iter().all(|x| !*x)
                })
            }
        }
    }
}

/// What [`solve_cfinite`] did.
#[derive(Clone, Debug)]
pub struct CfiniteReport {
    pub outcome: SmtOutcome,
    /// Step of the procedure that produced the outcome (1, 2 or 3).
    pub step: u8,
    /// Partition the model was found under; `None` at step 1.
    pub partition: Option<IndexPartition>,
    /// Distinct exponentials `w_1, …, w_ℓ`.
    pub exponentials: Vec<Monomial>,
    pub queries: usize,
    pub refuted: usize,
}

struct Problem<'a> {
    pcp: &'a Pcp,
    cfg: &'a SolverConfig,
    deadline: Instant,
    hard: Vec<(String, RClause)>,
    query: Vec<Var>,
    ws: Vec<Monomial>,
    /// Per constraint: index of each term's exponential and its `u`.
    terms: Vec<Vec<(usize, Poly)>>,
    members: Vec<BTreeSet<usize>>,
    params: Vec<Vec<Var>>,
    queries: usize,
}

impl Problem<'_> {
    fn remaining(&self) -> Option<Duration> {
        let left = self.deadline.saturating_duration_since(Instant::now());
        (!left.is_zero()).then_some(left)
    }

    fn run(&mut self, extra: Vec<(String, RClause)>, soft: Vec<RClause>) -> Result<SmtOutcome, SmtError> {
        let Some(left) = self.remaining() else {
            return Ok(SmtOutcome::Timeout);
        };
        let mut hard = self.hard.clone();
        hard.extend(extra);
        let script = Script {
            hard,
            soft,
            query: self.query.clone(),
            cores: self.cfg.supports_cores,
        };
        self.queries += 1;
        let out = run_query(&script, self.cfg, left)?;
        if let SmtOutcome::Sat(m) = &out {
            check_model(m, script.hard.iter().map(|(_, c)| c))?;
        }
        Ok(out)
    }

    fn soft_constraints(&self) -> Vec<RClause> {
        let mut out: Vec<RClause> = Vec::new();
        for (k, ts) in self.terms.iter().enumerate() {
            for (_, u) in ts {
                for p in split_params(u, &self.params[k]) {
                    if p.is_constant() {
                        continue;
                    }
                    let c = RClause::eq_zero(p, Origin::Alg).soft();
                    if !out.contains(&c) {
                        out.push(c);
                    }
                }
            }
        }
        out
    }

    /// Whether every `u` vanishes identically in the model.
    fn all_soft_hold(&self, m: &Model) -> Option<bool> {
        let values = m.rationals()?;
        Some(self.terms.iter().flatten().all(|(_, u)| u.eval_partial(&values).is_zero()))
    }

    /// Every constraint's instances vanish identically in the model.
    fn cfinite_hold(&self, m: &Model) -> Option<bool> {
        let values = m.rationals()?;
        Some(self.terms.iter().all(|ts| {
            (0..ts.len() as u32).all(|j| {
                let inst: Poly = ts.iter().map(|(w, u)| u.mul_monomial(&self.ws[*w].pow(j))).sum();
                inst.eval_partial(&values).is_zero()
            })
        }))
    }

    fn partition_of_model(&self, m: &Model) -> Option<IndexPartition> {
        let values = m.rationals()?;
        let keys: Vec<Rational> = self
            .ws
            .iter()
            .map(|w| Poly::term(Rational::from_integer(1.into()), w.clone()).eval(&values))
            .collect::<Option<_>>()?;
        Some(IndexPartition::from_keys(&keys))
    }

    fn w_poly(&self, i: usize) -> Poly {
        Poly::term(Rational::from_integer(1.into()), self.ws[i].clone())
    }

    /// Labelled clauses encoding `p`, with the fact behind each label.
    fn encode(&self, p: &IndexPartition) -> (Vec<(String, RClause)>, BTreeMap<String, Fact>) {
        let mut clauses = Vec::new();
        let mut facts = BTreeMap::new();
        let mut push = |clause: RClause, fact: Fact, clauses: &mut Vec<(String, RClause)>| {
            let label = format!("p!{}", clauses.len());
            facts.insert(label.clone(), fact);
            clauses.push((label, clause));
        };
        for b in p.blocks() {
            for &j in &b[1..] {
                let d = self.w_poly(b[0]) - self.w_poly(j);
                push(RClause::eq_zero(d, Origin::Partition), Fact::Same(b[0], j), &mut clauses);
            }
        }
        for x in 0..p.len() {
            for y in x + 1..p.len() {
                let (i, j) = (p.blocks()[x][0], p.blocks()[y][0]);
                let d = self.w_poly(i) - self.w_poly(j);
                push(RClause::ne_zero(d, Origin::Partition), Fact::Diff(i, j), &mut clauses);
            }
        }
        for (k, ts) in self.terms.iter().enumerate() {
            for b in p.blocks() {
                let inside: Vec<&(usize, Poly)> = ts.iter().filter(|(w, _)| b.contains(w)).collect();
                if inside.is_empty() {
                    continue;
                }
                let sum: Poly = inside.iter().map(|(_, u)| u.clone()).sum();
                let idx: Vec<usize> = inside.iter().map(|(w, _)| *w).collect();
                for q in split_params(&sum, &self.params[k]) {
                    if !q.is_zero() {
                        push(RClause::eq_zero(q, Origin::Partition), Fact::Sum(k, idx.clone()), &mut clauses);
                    }
                }
            }
        }
        (clauses, facts)
    }

    /// Nogood from an unsat core, or the partition's own facts without one.
    fn learn(&self, core: &Option<Vec<String>>, facts: &BTreeMap<String, Fact>) -> BTreeSet<Fact> {
        match core {
            Some(labels) => labels.iter().filter_map(|l| facts.get(l).cloned()).collect(),
            None => facts.values().cloned().collect(),
        }
    }
}

/// Solves `pcp` with its C-finite clauses (origin [`Origin::Alg`]) replaced
/// by the procedure above. The overall budget is `cfg.timeout`.
pub fn solve_cfinite(pcp: &Pcp, cfcs: &[CFiniteConstraint], cfg: &SolverConfig) -> Result<CfiniteReport, SmtError> {
    let ws: Vec<Monomial> = cfcs
        .iter()
        .flat_map(|c| c.terms.iter().map(|(w, _)| w.clone()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index = |w: &Monomial| ws.binary_search(w).expect("collected above");
    let terms: Vec<Vec<(usize, Poly)>> = cfcs
        .iter()
        .map(|c| c.terms.iter().map(|(w, u)| (index(w), u.clone())).collect())
        .collect();
    let members = terms.iter().map(|ts| ts.iter().map(|(w, _)| *w).collect()).collect();
    let hard: Vec<(String, RClause)> = pcp
        .clauses
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.soft && (cfcs.is_empty() || c.origin != Origin::Alg))
        .map(|(i, c)| (format!("c!{i}"), c.clone()))
        .collect();
    let mut prob = Problem {
        pcp,
        cfg,
        deadline: Instant::now() + cfg.timeout,
        hard,
        query: Vec::new(),
        ws,
        terms,
        members,
        params: cfcs.iter().map(|c| c.params.clone()).collect(),
        queries: 0,
    };
    let soft = prob.soft_constraints();
    let mut query: BTreeSet<Var> = pcp.used_symbols();
    for c in &soft {
        query.extend(c.vars());
    }
    for w in &prob.ws {
        query.extend(w.vars().cloned());
    }
    prob.query = query.into_iter().collect();

    let report = |prob: &Problem, outcome, step, partition, refuted| CfiniteReport {
        outcome,
        step,
        partition,
        exponentials: prob.ws.clone(),
        queries: prob.queries,
        refuted,
    };

    // Step 1
    let first = if cfg.supports_soft || soft.is_empty() {
        prob.run(Vec::new(), soft)?
    } else {
        maxsat_fallback(&mut prob, soft)?
    };
    let mut nogoods: Vec<BTreeSet<Fact>> = Vec::new();
    let derived = match &first {
        SmtOutcome::Sat(m) => {
            if prob.all_soft_hold(m) == Some(true) || prob.terms.is_empty() {
                check_cfinite(&prob, m)?;
                return Ok(report(&prob, first, 1, None, 0));
            }
            prob.partition_of_model(m)
        }
        SmtOutcome::Unsat(_) => return Err(SmtError::PartitionSpaceExhausted { tried: 0 }),
        SmtOutcome::Timeout | SmtOutcome::Unknown(_) => return Ok(report(&prob, first, 1, None, 0)),
    };

    // Step 2
    let mut refuted = 0;
    let mut undecided = None;
    if let Some(p) = derived {
        let (extra, facts) = prob.encode(&p);
        match prob.run(extra, Vec::new())? {
            SmtOutcome::Sat(m) => {
                check_cfinite(&prob, &m)?;
                return Ok(report(&prob, SmtOutcome::Sat(m), 2, Some(p), 0));
            }
            SmtOutcome::Unsat(core) => {
                refuted += 1;
                nogoods.push(prob.learn(&core, &facts));
            }
            SmtOutcome::Timeout => return Ok(report(&prob, SmtOutcome::Timeout, 2, Some(p), refuted)),
            SmtOutcome::Unknown(r) => undecided = Some(r),
        }
    }

    // Step 3
    for p in index_partitions(prob.ws.len()) {
        if nogoods.iter().any(|ng| ng.iter().all(|f| f.implied_by(&p, &prob.members))) {
            continue;
        }
        let (extra, facts) = prob.encode(&p);
        match prob.run(extra, Vec::new())? {
            SmtOutcome::Sat(m) => {
                check_cfinite(&prob, &m)?;
                return Ok(report(&prob, SmtOutcome::Sat(m), 3, Some(p), refuted));
            }
            SmtOutcome::Unsat(core) => {
                refuted += 1;
                let ng = prob.learn(&core, &facts);
                log::debug!("partition {p} refuted, nogood {ng:?}");
                let everything = ng.is_empty();
                nogoods.push(ng);
                if everything {
                    break;
                }
            }
            SmtOutcome::Timeout => return Ok(report(&prob, SmtOutcome::Timeout, 3, Some(p), refuted)),
            SmtOutcome::Unknown(r) => undecided = Some(r),
        }
    }
    match undecided {
        Some(r) => Ok(report(&prob, SmtOutcome::Unknown(r), 3, None, refuted)),
        None => Err(SmtError::PartitionSpaceExhausted { tried: refuted }),
    }
}

/// The returned model must satisfy every constraint exactly, including the
/// instantiated clauses the solver never saw.
fn check_cfinite(prob: &Problem, m: &Model) -> Result<(), SmtError> {
    if prob.cfinite_hold(m) == Some(false) {
        return Err(SmtError::ModelCheck {
            clause: "C-finite constraint".into(),
        });
    }
    check_model(m, &prob.pcp.clauses)
}

/// Step 1 without native soft constraints: assume every `u = 0` and drop
/// one core-implicated assumption per unsat answer.
fn maxsat_fallback(prob: &mut Problem, soft: Vec<RClause>) -> Result<SmtOutcome, SmtError> {
    let mut active: Vec<Option<RClause>> = soft
        .into_iter()
        .map(|mut c| {
            c.soft = false;
            Some(c)
        })
        .collect();
    loop {
        let extra: Vec<(String, RClause)> = active
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.as_ref().map(|c| (format!("s!{i}"), c.clone())))
            .collect();
        if extra.is_empty() {
            return prob.run(Vec::new(), Vec::new());
        }
        match prob.run(extra, Vec::new())? {
            SmtOutcome::Unsat(core) => {
                let implicated = core.as_ref().and_then(|labels| {
                    labels
                        .iter()
                        .filter_map(|l| l.strip_prefix("s!").and_then(|n| n.parse::<usize>().ok()))
                        .min()
                });
                match (implicated, core.is_some()) {
                    (Some(i), _) => active[i] = None,
                    // The hard clauses alone are unsatisfiable.
                    (None, true) => return Ok(SmtOutcome::Unsat(core)),
                    (None, false) => active.iter_mut().for_each(|c| *c = None),
                }
            }
            other => return Ok(other),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bell(n: usize) -> usize {
        // Bell triangle
        let mut row = vec![1usize];
        for _ in 1..n {
            let mut next = vec![*row.last().unwrap()];
            for x in &row {
                next.push(next.last().unwrap() + x);
            }
            row = next;
        }
        *row.last().unwrap()
    }

    #[test]
    fn enumeration_order() {
        let all: Vec<String> = index_partitions(3).map(|p| p.to_string()).collect();
        assert_eq!(
            all,
            ["{{1},{2},{3}}", "{{1,2},{3}}", "{{1,3},{2}}", "{{1},{2,3}}", "{{1,2,3}}"]
        );
        for n in 1..=7 {
            let ps: Vec<IndexPartition> = index_partitions(n).collect();
            assert_eq!(ps.len(), bell(n), "n = {n}");
            let uniq: std::collections::HashSet<_> = ps.iter().map(|p| p.to_string()).collect();
            assert_eq!(uniq.len(), ps.len());
            assert!(ps.windows(2).all(|w| w[0].len() >= w[1].len()));
        }
        assert_eq!(index_partitions(0).count(), 0);
    }

    #[test]
    fn from_keys() {
        let p = IndexPartition::from_keys(&[5, 7, 5, 9]);
        assert_eq!(p.to_string(), "{{1,3},{2},{4}}");
        assert!(p.same_block(0, 2) && !p.same_block(1, 3));
    }
}
