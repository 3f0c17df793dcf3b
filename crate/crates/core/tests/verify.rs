mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{candidate, corpus, first_failure, random_system, solver};
use loopsynth::algebra::{parse_conjunction, ParseError, SymbolTable, Var, VarKind};
use loopsynth::synth::{synthesize, SynthOutcome, SynthRequest};
use loopsynth::syntax::ParsedLoop;
use loopsynth::template::TemplateConfig;
use loopsynth::verify::{check_equiv_modulo, check_invariant, order_bound, VerifyError};
use loopsynth::Poly;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    /// The bounded check agrees with five times longer unrolling, and its
    /// witness is the first failing iteration.
    #[test]
    fn bounded_check_agrees_with_long_unrolling(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = rng.gen_range(1..=3);
        let sys = random_system(&mut rng, s);
        let p = candidate(&mut rng, &sys);
        let v = check_invariant(&sys, &p).unwrap();
        let long = first_failure(&sys, &p, 5 * v.bound_used as usize);
        prop_assert_eq!(v.holds, long.is_none());
        prop_assert_eq!(v.witness.as_ref().map(|w| w.0), long);
        prop_assert!(check_invariant(&sys, &Poly::zero()).unwrap().holds);
    }

    #[test]
    fn equivalence_with_itself_is_the_invariant_check(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = rng.gen_range(1..=3);
        let sys = random_system(&mut rng, s);
        let p = candidate(&mut rng, &sys);
        let id: BTreeMap<Var, Var> = sys.vars.iter().map(|v| (v.clone(), v.clone())).collect();
        prop_assert_eq!(check_equiv_modulo(&sys, &sys, &p, &id).unwrap(), check_invariant(&sys, &p).unwrap().holds);
    }
}

#[test]
fn order_bounds_follow_the_closure_rules() {
    let mut t = SymbolTable::new();
    let x = t.declare("x", VarKind::Program).unwrap();
    let y = t.declare("y", VarKind::Program).unwrap();
    let seq = [x.clone(), y.clone()].into();
    let p = Poly::var(&x) - Poly::from_i64(2) * Poly::var(&y);
    assert_eq!(order_bound(&p, &seq, 2), 4);
    assert_eq!(order_bound(&Poly::from_i64(5), &seq, 2), 1);
    assert_eq!(order_bound(&(Poly::var(&x) * Poly::var(&y)), &seq, 2), 4);
}

#[test]
fn parameterized_loops_are_checked_symbolically() {
    let text = std::fs::read_to_string(corpus().join("loops/eucliddiv-original.loop")).unwrap();
    let l = ParsedLoop::parse(&text).unwrap();
    assert!(!l.params.is_empty());
    let invs = l.parse_invariant(l.invariant.as_deref().unwrap()).unwrap();
    let sys = l.system();
    for p in &invs {
        let v = check_invariant(&sys, p).unwrap();
        assert!(v.holds);
    }
    // shifting the initial remainder by one breaks it for every parameter value
    let broken = text.replacen("= x0,", "= x0 + 1,", 1);
    assert_ne!(broken, text);
    let l = ParsedLoop::parse(&broken).unwrap();
    let p = &l.parse_invariant(l.invariant.as_deref().unwrap()).unwrap()[0];
    let v = check_invariant(&l.system(), p).unwrap();
    assert_eq!(v.witness.map(|w| w.0), Some(0));
}

#[test]
fn mismatched_maps_and_unknown_names_are_errors() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let sys = random_system(&mut rng, 2);
    let (a, b) = (sys.vars[0].clone(), sys.vars[1].clone());
    let p = Poly::var(&a) - Poly::var(&b);
    let squashed: BTreeMap<Var, Var> = [(a.clone(), a.clone()), (b.clone(), a.clone())].into();
    assert!(matches!(check_equiv_modulo(&sys, &sys, &p, &squashed), Err(VerifyError::NotBijective(_))));
    let partial: BTreeMap<Var, Var> = [(a.clone(), a.clone())].into();
    assert!(check_equiv_modulo(&sys, &sys, &p, &partial).is_err());
    let stranger = Var::new("q", VarKind::Program, 9);
    assert!(matches!(check_invariant(&sys, &Poly::var(&stranger)), Err(VerifyError::UnknownVariable(_))));
}

#[test]
fn independently_synthesized_loops_are_equivalent() {
    let Some(cfg) = solver() else {
        eprintln!("no SMT solver available, skipping");
        return;
    };
    for inv in ["x == 2*y^2", "y + 5*x^2 == 0", "2*y == 3*x^2 - 3*x"] {
        let mut t = SymbolTable::new();
        let mut vars: Vec<Var> = ["x", "y"].iter().map(|n| t.declare(n, VarKind::Program).unwrap()).collect();
        let invs = parse_conjunction(inv, |n, col| t.get(n).cloned().ok_or(ParseError::at(col, "unknown"))).unwrap();
        let mut tc = TemplateConfig::new(t, Vec::new());
        let one = tc.symbols.fresh("t", VarKind::Program);
        vars.push(one.clone());
        tc.vars = vars;
        tc.constant_one = Some(one);
        let mut req = SynthRequest::new(tc, invs.clone());
        req.count = 2;
        let rep = synthesize(&req, &cfg).unwrap();
        let SynthOutcome::Found(ls) = rep.outcome else { panic!("{inv}: no loops") };
        assert_eq!(ls.len(), 2);
        let (s1, s2) = (ls[0].system(), ls[1].system());
        let id: BTreeMap<Var, Var> = s1.vars.iter().map(|v| (v.clone(), v.clone())).collect();
        for p in &invs {
            assert!(check_equiv_modulo(&s1, &s2, p, &id).unwrap(), "{inv}");
        }
    }
}
