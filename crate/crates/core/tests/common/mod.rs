//! Helpers shared by the integration suites.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::Rng;

use loopsynth::algebra::{Monomial, Var, VarKind};
use loopsynth::smt::SolverConfig;
use loopsynth::verify::ConcreteSystem;
use loopsynth::{Poly, PolyMatrix, Rational};

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

pub fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn solver() -> Option<SolverConfig> {
    let cfg = SolverConfig::from_env();
    cfg.is_available().then_some(cfg)
}

/// Rational in `[-3, 3]` with denominator at most 4.
pub fn small_ratio<R: Rng + ?Sized>(rng: &mut R) -> Rational {
    let d = rng.gen_range(1..=4);
    rat(rng.gen_range(-3 * d..=3 * d), d)
}

pub fn random_system(rng: &mut impl Rng, s: usize) -> ConcreteSystem<Rational> {
    let vars: Vec<Var> = (0..s).map(|i| Var::new(format!("x{}", i + 1), VarKind::Program, i as u32)).collect();
    let update = PolyMatrix::from_fn(s, s, |_, _| Poly::constant(small_ratio(rng)));
    let init = PolyMatrix::column((0..s).map(|_| Poly::constant(small_ratio(rng))).collect());
    ConcreteSystem::new(vars, update, init).unwrap()
}

/// Monomials of degree at most `deg` in `vars`.
pub fn monomials(vars: &[Var], deg: u32) -> Vec<Monomial> {
    let mut out = vec![Monomial::one()];
    let mut frontier = vec![Monomial::one()];
    for _ in 0..deg {
        let mut next = Vec::new();
        for m in &frontier {
            for v in vars {
                let p = m.mul(&Monomial::var(v.clone()));
                if !next.contains(&p) {
                    next.push(p);
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Basis of the null space of `rows` (each of length `n`).
pub fn null_space(rows: &[Vec<Rational>], n: usize) -> Vec<Vec<Rational>> {
    let mut m: Vec<Vec<Rational>> = rows.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..n {
        let Some(k) = (r..m.len()).find(|&k| m[k][c] != rat(0, 1)) else { continue };
        m.swap(r, k);
        let lead = m[r][c].clone();
        for x in m[r].iter_mut() {
            *x /= &lead;
        }
        for k in 0..m.len() {
            if k != r && m[k][c] != rat(0, 1) {
                let f = m[k][c].clone();
                for j in 0..n {
                    let sub = &f * &m[r][j];
                    m[k][j] -= sub;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    (0..n)
        .filter(|c| !pivots.contains(c))
        .map(|free| {
            let mut v = vec![rat(0, 1); n];
            v[free] = rat(1, 1);
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[row][free].clone();
            }
            v
        })
        .collect()
}

/// A degree-at-most-2 candidate: random, or vanishing on the first few
/// states, so that some candidates hold and others fail late.
pub fn candidate(rng: &mut impl Rng, sys: &ConcreteSystem<Rational>) -> Poly {
    let monos = monomials(&sys.vars, 2);
    let random = |rng: &mut dyn rand::RngCore| {
        let mut p = Poly::zero();
        for m in &monos {
            if rng.gen_bool(0.4) {
                p.add_term(m.clone(), small_ratio(rng));
            }
        }
        p
    };
    if rng.gen_bool(0.3) {
        return random(rng);
    }
    let steps = rng.gen_range(1..=monos.len());
    let trace = sys.trace(steps);
    let rows: Vec<Vec<Rational>> = trace
        .iter()
        .map(|state| {
            let at: BTreeMap<Var, Rational> = sys
                .vars
                .iter()
                .cloned()
                .zip(state.iter().map(|p| p.constant_value().unwrap()))
                .collect();
            monos.iter().map(|m| Poly::term(rat(1, 1), m.clone()).eval(&at).unwrap()).collect()
        })
        .collect();
    let basis = null_space(&rows, monos.len());
    if basis.is_empty() {
        return random(rng);
    }
    let mut coeffs = vec![rat(0, 1); monos.len()];
    for b in &basis {
        let k = rat(rng.gen_range(-2..=2), 1);
        for (c, x) in coeffs.iter_mut().zip(b) {
            *c += &k * x;
        }
    }
    Poly::from_terms(monos.iter().cloned().zip(coeffs))
}

/// First index below `steps` at which `p` is nonzero along the trajectory.
pub fn first_failure(sys: &ConcreteSystem<Rational>, p: &Poly, steps: usize) -> Option<u64> {
    sys.trace(steps)
        .iter()
        .position(|state| !sys.eval_at(p, state).is_zero())
        .map(|n| n as u64)
}
