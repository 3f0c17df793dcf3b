use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use loopsynth::pcp::build_pcp;
use loopsynth::smt::{emit_smtlib, SmtError, SolverConfig};
use loopsynth::synth::{nontriviality_clauses, search_plan, synthesize, Loop, SynthError, SynthOutcome, SynthReport, SynthRequest};
use loopsynth::syntax::{ParsedLoop, SpecFile};
use loopsynth::template::{build_template, IntegerPartition, ShapeTier};
use loopsynth::verify::{check_equiv_modulo, check_invariant};
use serde_json::json;

use crate::{exit, EquivArgs, SearchArgs, SolverArgs, SynthArgs, TierArg, VerifyArgs};

/// An error with the exit status it maps to.
pub struct Failure {
    pub code: u8,
    pub msg: String,
}

impl Failure {
    pub fn new(code: u8, msg: impl Into<String>) -> Self {
        Failure { code, msg: msg.into() }
    }
}

fn report(f: Failure) -> u8 {
    eprintln!("error: {}", f.msg);
    f.code
}

pub fn tiers(t: TierArg) -> Vec<ShapeTier> {
    match t {
        TierArg::Un => vec![ShapeTier::UnitUpperTriangular],
        TierArg::Up => vec![ShapeTier::UpperTriangular],
        TierArg::Fu => vec![ShapeTier::Full],
        TierArg::Auto => ShapeTier::ALL.to_vec(),
    }
}

pub fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::new(exit::FAILURE, format!("{}: {e}", path.display())))
}

pub fn load_spec(path: &Path) -> Result<SpecFile, Failure> {
    SpecFile::parse(&read(path)?).map_err(|e| Failure::new(exit::PARSE, format!("{}: {e}", path.display())))
}

/// Applies command-line overrides and builds the request and solver settings.
pub fn prepare(
    spec: &mut SpecFile,
    search: Option<&SearchArgs>,
    tier: Option<TierArg>,
    solver: &SolverArgs,
) -> Result<(SynthRequest, SolverConfig), Failure> {
    if let Some(s) = search {
        if let Some(n) = s.size {
            spec.size = Some(n);
        }
        spec.aux_one |= s.aux_one;
        spec.all_change |= s.all_change;
        if let Some(p) = &s.partition {
            let p: IntegerPartition = p.parse().map_err(|e| Failure::new(exit::PARSE, format!("--partition: {e}")))?;
            spec.partitions = Some(vec![p]);
        }
    }
    if let Some(t) = tier {
        spec.tiers = Some(tiers(t));
    }
    if let Some(t) = solver.timeout {
        spec.timeout = Some(t);
    }
    let mut req = spec.to_request().map_err(|e| Failure::new(exit::PARSE, e.to_string()))?;
    req.timeout = Duration::from_secs(spec.timeout.unwrap_or(60).max(1));
    let cfg = SolverConfig::new(&solver.solver);
    Ok((req, cfg))
}

pub fn synth_failure(e: SynthError) -> Failure {
    let code = match &e {
        SynthError::Smt(SmtError::Config(_)) | SynthError::Config(_) => exit::FAILURE,
        SynthError::Smt(_) => exit::SOLVER,
        _ => exit::FAILURE,
    };
    Failure::new(code, e.to_string())
}

/// Re-reads the rendered loop and checks the invariant on the result, so the
/// printed text itself is what gets certified.
pub fn reverify(l: &Loop, spec: &SpecFile) -> bool {
    let direct = || -> Option<bool> {
        let (_, invs) = spec.lower().ok()?;
        let sys = l.system();
        Some(invs.iter().all(|p| check_invariant(&sys, p).is_ok_and(|v| v.holds)))
    };
    if !spec.initials.is_empty() {
        return direct().unwrap_or(false);
    }
    let Ok(parsed) = ParsedLoop::parse(&l.render()) else { return false };
    let Ok(invs) = parsed.parse_invariant(&spec.invariant_text()) else { return false };
    let sys = parsed.system();
    invs.iter().all(|p| check_invariant(&sys, p).is_ok_and(|v| v.holds))
}

fn emit(req: &SynthRequest, out: &Path) -> Result<(), Failure> {
    let plan = search_plan(req).map_err(synth_failure)?;
    let (tier, partition, order) = plan.first().ok_or_else(|| Failure::new(exit::FAILURE, "empty search space"))?;
    let tpl = build_template(&req.config.permuted(order), *tier, partition).map_err(|e| Failure::new(exit::FAILURE, e.to_string()))?;
    let mut pcp = build_pcp(&tpl, &req.invariants).map_err(|e| Failure::new(exit::FAILURE, e.to_string()))?;
    pcp.extend(nontriviality_clauses(&tpl, req.per_variable_nontrivial));
    let text = format!("; tier {tier}, partition {partition}\n{}", emit_smtlib(&pcp));
    if out == Path::new("-") {
        print!("{text}");
        Ok(())
    } else {
        std::fs::write(out, text).map_err(|e| Failure::new(exit::FAILURE, format!("{}: {e}", out.display())))
    }
}

fn outcome_json(rep: &SynthReport) -> serde_json::Value {
    let (status, reason) = match &rep.outcome {
        SynthOutcome::Found(_) => ("found", None),
        SynthOutcome::NotFound { reason } => ("not-found", Some(reason.clone())),
        SynthOutcome::Exhausted => ("timeout", None),
    };
    json!({
        "status": status,
        "reason": reason,
        "loops": rep.loops().iter().map(Loop::to_json).collect::<Vec<_>>(),
        "cells": rep.cells,
        "millis": rep.millis,
    })
}

pub fn synth(a: &SynthArgs) -> u8 {
    let run = || -> Result<u8, Failure> {
        let mut spec = load_spec(&a.spec)?;
        let (mut req, cfg) = prepare(&mut spec, Some(&a.search), a.search.tier, &a.solver)?;
        req.count = a.count.max(1);
        req.jobs = a.jobs.max(1);
        if let Some(out) = &a.emit_smt2 {
            emit(&req, out)?;
            return Ok(exit::OK);
        }
        let rep = synthesize(&req, &cfg).map_err(synth_failure)?;
        for l in rep.loops() {
            if !reverify(l, &spec) {
                return Err(Failure::new(exit::FAILURE, format!("printed loop does not re-verify:\n{}", l.render())));
            }
        }
        if a.json {
            println!("{}", serde_json::to_string_pretty(&outcome_json(&rep)).expect("serializable"));
        }
        Ok(match &rep.outcome {
            SynthOutcome::Found(ls) => {
                if !a.json {
                    for (k, l) in ls.iter().enumerate() {
                        if k > 0 {
                            println!();
                        }
                        if let Some(o) = &l.origin {
                            println!(
                                "# tier {}, partition {}, order {}, {} ms",
                                o.tier,
                                o.partition,
                                o.permutation.join(" "),
                                o.millis
                            );
                        }
                        println!("# invariant: {}", spec.invariant_text());
                        print!("{}", l.render());
                    }
                }
                exit::OK
            }
            SynthOutcome::NotFound { reason } => {
                if !a.json {
                    eprintln!("no loop: {reason}");
                }
                exit::NOT_FOUND
            }
            SynthOutcome::Exhausted => {
                if !a.json {
                    eprintln!("no loop within {} s", req.timeout.as_secs());
                }
                exit::TIMEOUT
            }
        })
    };
    run().unwrap_or_else(report)
}

fn load_loop(path: &Path) -> Result<ParsedLoop, Failure> {
    ParsedLoop::parse(&read(path)?).map_err(|e| Failure::new(exit::PARSE, format!("{}: {e}", path.display())))
}

fn invariant_of(l: &ParsedLoop, given: Option<&String>, path: &Path) -> Result<String, Failure> {
    given
        .cloned()
        .or_else(|| l.invariant.clone())
        .ok_or_else(|| Failure::new(exit::PARSE, format!("{}: no invariant given and no `# invariant:` line", path.display())))
}

pub fn verify(a: &VerifyArgs) -> u8 {
    let run = || -> Result<u8, Failure> {
        let l = load_loop(&a.file)?;
        let text = invariant_of(&l, a.invariant.as_ref(), &a.file)?;
        let invs = l.parse_invariant(&text).map_err(|e| Failure::new(exit::PARSE, format!("invariant: {e}")))?;
        let sys = l.system();
        let mut all = true;
        let mut rows = Vec::new();
        for p in &invs {
            let v = check_invariant(&sys, p).map_err(|e| Failure::new(exit::FAILURE, e.to_string()))?;
            all &= v.holds;
            if !a.json {
                match &v.witness {
                    None => println!("holds: {p} = 0 (checked {} iterations)", v.bound_used),
                    Some((n, val)) => println!("fails: {p} = 0 at iteration {n}, value {val}"),
                }
            }
            rows.push(json!({
                "polynomial": p.to_string(),
                "holds": v.holds,
                "witness": v.witness.as_ref().map(|(n, val)| json!({"iteration": n, "value": val.to_string()})),
                "bound": v.bound_used,
            }));
        }
        if a.json {
            println!("{}", serde_json::to_string_pretty(&json!({"holds": all, "conjuncts": rows})).expect("serializable"));
        }
        Ok(if all { exit::OK } else { exit::NOT_FOUND })
    };
    run().unwrap_or_else(report)
}

fn parse_map(text: Option<&String>) -> Result<BTreeMap<String, String>, Failure> {
    let mut out = BTreeMap::new();
    for pair in text.into_iter().flat_map(|t| t.split(',')).filter(|p| !p.trim().is_empty()) {
        let (l, r) = pair
            .split_once('=')
            .ok_or_else(|| Failure::new(exit::PARSE, format!("--map: expected `a=x`, got `{pair}`")))?;
        out.insert(l.trim().to_string(), r.trim().to_string());
    }
    Ok(out)
}

pub fn equiv(a: &EquivArgs) -> u8 {
    let run = || -> Result<u8, Failure> {
        let l1 = load_loop(&a.first)?;
        let l2 = load_loop(&a.second)?;
        let text = invariant_of(&l1, a.invariant.as_ref(), &a.first)?;
        let invs = l1.parse_invariant(&text).map_err(|e| Failure::new(exit::PARSE, format!("invariant: {e}")))?;
        let map = parse_map(a.map.as_ref())?;
        let mut bij = BTreeMap::new();
        let hidden1 = l1.constant_one.map(|i| l1.vars[i].clone());
        let hidden2 = l2.constant_one.map(|i| l2.vars[i].clone());
        for v in l1.vars.iter().filter(|v| Some(*v) != hidden1.as_ref()).chain(&l1.params) {
            let target = map.get(v.name()).map(String::as_str).unwrap_or(v.name());
            let w = l2
                .vars
                .iter()
                .filter(|w| Some(*w) != hidden2.as_ref())
                .chain(&l2.params)
                .find(|w| w.name() == target)
                .ok_or_else(|| Failure::new(exit::PARSE, format!("`{v}` maps to `{target}`, which the second loop lacks")))?;
            bij.insert(v.clone(), w.clone());
        }
        let (s1, s2) = (l1.system(), l2.system());
        let mut all = true;
        for p in &invs {
            let ok = check_equiv_modulo(&s1, &s2, p, &bij).map_err(|e| Failure::new(exit::FAILURE, e.to_string()))?;
            all &= ok;
        }
        if all {
            println!("equivalent modulo {text}");
            Ok(exit::OK)
        } else {
            println!("not equivalent modulo {text}");
            Ok(exit::NOT_FOUND)
        }
    };
    run().unwrap_or_else(report)
}
