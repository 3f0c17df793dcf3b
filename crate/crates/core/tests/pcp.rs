use std::collections::{BTreeMap, BTreeSet};

use loopsynth::algebra::{decompose, parse_equation, Origin, ParseError, SymbolTable, Var, VarKind};
use loopsynth::pcp::{build_param_pcp, build_pcp, gen_alg, gen_coeff, gen_init, gen_roots, PcpError};
use loopsynth::template::{build_template, IntegerPartition, ParamSpec, ShapeTier, TemplateConfig};
use loopsynth::{Poly, Rational};

fn session(names: &[&str]) -> (SymbolTable, Vec<Var>) {
    let mut t = SymbolTable::new();
    let vars = names.iter().map(|n| t.declare(n, VarKind::Program).unwrap()).collect();
    (t, vars)
}

fn parse(t: &SymbolTable, s: &str) -> Poly {
    parse_equation(s, |name, col| {
        t.get(name).cloned().ok_or(ParseError {
            col,
            msg: format!("unknown `{name}`"),
        })
    })
    .unwrap()
}

/// Renders clause polynomials (sign-normalized) as a sorted set of strings.
fn rendered(clauses: &[loopsynth::RClause]) -> BTreeSet<String> {
    clauses.iter().map(|c| c.to_string()).collect()
}

fn x_twice_y() -> (SymbolTable, loopsynth::template::RecurrenceTemplate) {
    let (t, vars) = session(&["x", "y"]);
    let cfg = TemplateConfig::new(t.clone(), vars);
    let tpl = build_template(&cfg, ShapeTier::Full, &IntegerPartition::new(vec![2]).unwrap()).unwrap();
    (t, tpl)
}

/// Parses clause text over the template's symbol table and normalizes it.
fn expect(tpl: &loopsynth::template::RecurrenceTemplate, eqs: &[&str], neqs: &[&str]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for e in eqs {
        out.insert(loopsynth::RClause::eq_zero(parse(&tpl.symbols, e), Origin::User).to_string());
    }
    for e in neqs {
        out.insert(loopsynth::RClause::ne_zero(parse(&tpl.symbols, e), Origin::User).to_string());
    }
    out
}

#[test]
fn x_twice_y_roots() {
    let (_, tpl) = x_twice_y();
    let want = expect(&tpl, &["b11 + b22 - 2w1", "b12*b21 - b11*b22 + w1^2"], &["w1"]);
    assert_eq!(rendered(&gen_roots(&tpl)), want);
}

#[test]
fn x_twice_y_coeff() {
    let (_, tpl) = x_twice_y();
    let want = expect(
        &tpl,
        &[
            "c1*w1 + d1*w1 - b11*c1 - b12*c2",
            "c2*w1 + d2*w1 - b21*c1 - b22*c2",
            "d1*w1 - b11*d1 - b12*d2",
            "d2*w1 - b21*d1 - b22*d2",
        ],
        &[],
    );
    assert_eq!(rendered(&gen_coeff(&tpl)), want);
}

#[test]
fn x_twice_y_init() {
    let (_, tpl) = x_twice_y();
    let want = expect(
        &tpl,
        &[
            "c1 - a1",
            "c1*w1 + d1*w1 - b11*a1 - b12*a2",
            "c2 - a2",
            "c2*w1 + d2*w1 - b21*a1 - b22*a2",
        ],
        &[],
    );
    assert_eq!(rendered(&gen_init(&tpl)), want);
}

#[test]
fn x_twice_y_alg() {
    let (t, tpl) = x_twice_y();
    let p = parse(&t, "x - 2y");
    let (clauses, cfcs) = gen_alg(&tpl, &[p]).unwrap();
    assert_eq!(rendered(&clauses), expect(&tpl, &["c1 - 2c2", "d1 - 2d2"], &[]));
    // one constraint per power of n, each with a single exponential
    assert_eq!(cfcs.len(), 2);
    assert!(cfcs.iter().all(|c| c.len() == 1));
}

fn model(tpl: &loopsynth::template::RecurrenceTemplate, pairs: &[(&str, i64)]) -> BTreeMap<Var, Rational> {
    pairs
        .iter()
        .map(|(n, v)| (tpl.symbols.get(n).unwrap().clone(), Rational::from_integer((*v).into())))
        .collect()
}

#[test]
fn x_twice_y_union_and_known_solutions() {
    let (t, tpl) = x_twice_y();
    let pcp = build_pcp(&tpl, &[parse(&t, "x - 2y")]).unwrap();
    assert_eq!(pcp.clauses.len(), 3 + 4 + 4 + 2);
    assert!(pcp.unregistered().is_empty());

    // (x, y) <- (2x, 2y) from (2, 1): w = 2, x(n) = 2*2^n, y(n) = 2^n.
    let doubling = model(
        &tpl,
        &[("b11", 2), ("b12", 0), ("b21", 0), ("b22", 2), ("a1", 2), ("a2", 1), ("w1", 2), ("c1", 2), ("c2", 1), ("d1", 0), ("d2", 0)],
    );
    for c in &pcp.clauses {
        assert_eq!(c.eval(&doubling), Some(true), "doubling violates {c}");
    }
}

/// `(x, y) <- (x + 2, y + 1)` has no linear 2x2 update matrix (it would map
/// (2,1) to (4,2) and (4,2) = 2*(2,1) to (6,3)); with a constant-one state
/// variable it is a model of the size-3 problem.
#[test]
fn x_twice_y_additive_solution_needs_constant() {
    let (mut t, vars) = session(&["x", "y"]);
    let tv = t.fresh("t", VarKind::Program);
    let mut all = vars.clone();
    all.push(tv.clone());
    let mut cfg = TemplateConfig::new(t.clone(), all);
    cfg.constant_one = Some(tv);
    let tpl = build_template(&cfg, ShapeTier::Full, &IntegerPartition::new(vec![3]).unwrap()).unwrap();
    let pcp = build_pcp(&tpl, &[parse(&t, "x - 2y")]).unwrap();
    // x(n) = 2 + 2n, y(n) = 1 + n, t(n) = 1; w = 1.
    let additive = model(
        &tpl,
        &[
            ("b11", 1), ("b12", 0), ("b13", 2),
            ("b21", 0), ("b22", 1), ("b23", 1),
            ("a1", 2), ("a2", 1), ("w1", 1),
            ("c1", 2), ("c2", 1), ("c3", 1),
            ("d1", 2), ("d2", 1), ("d3", 0),
            ("e1", 0), ("e2", 0), ("e3", 0),
        ],
    );
    for c in &pcp.clauses {
        assert_eq!(c.eval(&additive), Some(true), "additive violates {c}");
    }
}

#[test]
fn contradiction_and_unknowns() {
    let (t, tpl) = x_twice_y();
    assert!(matches!(
        gen_alg(&tpl, &[Poly::one()]),
        Err(PcpError::Contradiction(_))
    ));
    let stray = Var::new("q", VarKind::Program, 99);
    assert!(matches!(
        gen_alg(&tpl, &[Poly::var(&stray)]),
        Err(PcpError::UnknownVariable { .. })
    ));
    let (clauses, cfcs) = gen_alg(&tpl, &[Poly::zero()]).unwrap();
    assert!(clauses.is_empty() && cfcs.is_empty());
    let _ = t;
}

#[test]
fn param_template_matrix() {
    let (mut t, vars) = session(&["x1", "x2", "x3"]);
    let p1 = t.declare("p1", VarKind::Param).unwrap();
    let p3 = t.declare("p3", VarKind::Param).unwrap();
    let mut cfg = TemplateConfig::new(t, vars.clone());
    cfg.params = ParamSpec::from_indices(&vars, &[1, 3], &[p1, p3]).unwrap();
    let tpl = build_template(&cfg, ShapeTier::Full, &IntegerPartition::new(vec![3]).unwrap()).unwrap();
    assert_eq!(tpl.a.to_string(), "[[1, 0, 0], [a21, a22, a23], [0, 1, 0]]");
    assert!(ParamSpec::from_indices(&vars, &[4], &[Var::new("q", VarKind::Param, 9)]).is_err());
}

/// Euclidean division with merged `r`: invariant `r0 - y0*q - r`, state
/// `(r, q, y, t)`, parameters `r0 = r(0)` and `y0 = y(0)`, one root of
/// multiplicity 4.
#[test]
fn eucliddiv_alg_grid() {
    let (mut t, vars) = session(&["r", "q", "y", "t"]);
    let r0 = t.declare("r0", VarKind::Param).unwrap();
    let y0 = t.declare("y0", VarKind::Param).unwrap();
    let mut cfg = TemplateConfig::new(t.clone(), vars.clone());
    cfg.params = ParamSpec::new(vec![r0.clone(), y0.clone()])
        .tie(&vars[0], &r0)
        .unwrap()
        .tie(&vars[2], &y0)
        .unwrap();
    let tpl = build_template(&cfg, ShapeTier::Full, &IntegerPartition::new(vec![4]).unwrap()).unwrap();
    let inv = parse(&t, "r0 - y0*q - r");
    let pcp = build_param_pcp(&tpl, &[inv.clone()]).unwrap();
    let (alg, _) = gen_alg(&tpl, &[inv]).unwrap();
    let alg = rendered(&decompose(&alg, &[r0.clone(), y0.clone()]));
    // The closed form of q is (c21 r0 + c22 y0 + c23) w^n + … ; the grid of
    // coefficient equations after splitting over r0, y0.
    let want = expect(
        &tpl,
        &[
            "c21", "1 - c11", "c22", "c23 + c12", "c13",
            "w1*c21", "1 - w1*c11", "w1*c22", "w1*(c23 + c12)", "w1*c13",
            "d21", "d11", "d22", "d23 + d12", "d13",
            "e21", "e11", "e22", "e23 + e12", "e13",
            "f21", "f11", "f22", "f23 + f12", "f13",
        ],
        &[],
    );
    assert_eq!(alg, want);
    let params: BTreeSet<Var> = [r0, y0].into();
    for c in &pcp.clauses {
        assert!(c.vars().is_disjoint(&params), "parameter left in {c}");
    }
    assert!(pcp.unregistered().is_empty());
}

/// Single-exponential constraints of the quartic Fibonacci relation become
/// hard clauses that survive the removal of instance clauses.
#[test]
fn settled_constraints_stay_hard() {
    let (t, vars) = session(&["f", "g"]);
    let cfg = TemplateConfig::new(t.clone(), vars);
    let tpl = build_template(&cfg, ShapeTier::UpperTriangular, &IntegerPartition::new(vec![2]).unwrap()).unwrap();
    let rel = parse(&t, "f^4 + 2f^3 g - f^2 g^2 - 2f g^3 + g^4 - 1");
    let pcp = build_pcp(&tpl, &[rel]).unwrap();
    let (reduced, _) = loopsynth::pcp::simplify(&pcp);
    assert!(reduced.cfinite.len() < pcp.cfinite.len());
    assert!(reduced.cfinite.iter().all(|c| c.len() > 1));
    let settled = pcp.cfinite.iter().filter(|c| c.len() == 1).count();
    let hard = reduced.clauses.iter().filter(|c| c.origin == Origin::Partition).count();
    assert!(hard >= settled, "{hard} hard clauses for {settled} settled constraints");
}
