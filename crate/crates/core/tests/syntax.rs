use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use loopsynth::algebra::{Var, VarKind};
use loopsynth::synth::Loop;
use loopsynth::syntax::{ParsedLoop, SpecFile};
use loopsynth::template::{IntegerPartition, ShapeTier};
use loopsynth::verify::check_invariant;
use loopsynth::{Poly, PolyMatrix, Rational};
use proptest::prelude::*;

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn files(dir: &Path, ext: &str) -> Vec<PathBuf> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == ext))
        .collect();
    out.sort();
    out
}

fn check_file(path: &Path) -> (bool, Option<u64>) {
    let text = std::fs::read_to_string(path).unwrap();
    let l = ParsedLoop::parse(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let inv = l.invariant.clone().expect("invariant comment");
    let sys = l.system();
    let mut holds = true;
    let mut witness = None;
    for p in l.parse_invariant(&inv).unwrap() {
        let v = check_invariant(&sys, &p).unwrap();
        if !v.holds {
            holds = false;
            witness = witness.into_iter().chain(v.witness.map(|(n, _)| n)).min();
        }
    }
    (holds, witness)
}

#[test]
fn corpus_loops_satisfy_their_invariants() {
    let loops = files(&corpus().join("loops"), "loop");
    assert!(loops.len() >= 40);
    for path in loops {
        let faulty = path.file_stem().unwrap().to_str().unwrap().ends_with("faulty");
        let (holds, witness) = check_file(&path);
        assert_eq!(holds, !faulty, "{}", path.display());
        if faulty {
            assert_eq!(witness, Some(0));
        }
    }
}

#[test]
fn corpus_specs_parse_and_lower() {
    let specs = files(&corpus(), "inv");
    assert_eq!(specs.len(), 25);
    for path in specs {
        let text = std::fs::read_to_string(&path).unwrap();
        let spec = SpecFile::parse(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let (cfg, invs) = spec.lower().unwrap();
        assert_eq!(invs.len(), spec.invariants.len());
        assert!(cfg.constant_one.is_some());
        assert_eq!(SpecFile::parse(&spec.to_string()).unwrap(), spec);
    }
}

#[test]
fn corpus_invariants_match_the_printed_text() {
    let expect = [
        ("eucliddiv", "x0 == y0*q+r"),
        ("square", "a == b^2"),
        ("sum1", "1+2a == c && 4b == (c-1)^2"),
        ("intsqrt2", "a0+r == r^2+2y"),
        ("intcbrt", "1+4a0+6r^2==3r+4r^3+4x && 1/4+3r^2==s"),
        ("fmi1", "2y == 3x(x - 1)"),
        ("fmi2", "z == 2y && x == y^2"),
        ("fmi3", "y == 3xz && x == 2(z - 1)"),
        ("fmi4", "x == 2y^2"),
        ("fmi5", "y + 5x^2 == 0"),
        ("cube_conj", "a + 2b == d && d^2 + c == a^3"),
        ("square_conj", "2a == 3b + 4c && c == a^2"),
        ("squared_varied1", "a(b + 2c) == b^2 + 5"),
        ("squared_varied2", "2a + 3b^2 - ab == c + ab"),
        ("cube_square", "a == b^2 + c^3"),
        ("sum_of_square", "a^2 + b^2 + c^2 == d"),
    ];
    for (name, inv) in expect {
        let text = std::fs::read_to_string(corpus().join(format!("{name}.inv"))).unwrap();
        let spec = SpecFile::parse(&text).unwrap();
        assert_eq!(spec.invariant_text(), loopsynth::syntax::normalize_ws(inv), "{name}");
        assert!(!spec.has_tag("reconstructed"));
    }
}

#[test]
fn juxtaposed_names_split_into_products() {
    let l = ParsedLoop::parse("x, z = 1, 2\nwhile true\n  x = x + 1\nend\n").unwrap();
    let xz = l.parse_invariant("3xz == 6").unwrap();
    let x = Poly::var(l.var("x").unwrap());
    let z = Poly::var(l.var("z").unwrap());
    assert_eq!(xz[0], Poly::from_i64(3) * x * z - Poly::from_i64(6));
}

#[test]
fn unknown_identifier_is_located() {
    let e = SpecFile::parse("vars x y\ninvariant x == 2*w\n").unwrap_err();
    assert_eq!((e.line, e.col), (2, 18));
    assert!(e.msg.contains("`w`"));
    let e = SpecFile::parse("vars x\nfrobnicate\n").unwrap_err();
    assert_eq!(e.line, 2);
    let e = ParsedLoop::parse("x = 0\nwhile true:\n    x = x + q\n").unwrap_err();
    assert_eq!((e.line, e.col), (3, 13));
}

#[test]
fn loop_syntax_errors() {
    assert!(ParsedLoop::parse("x = 0\n").is_err());
    assert!(ParsedLoop::parse("x = 0\nwhile x < 3:\n x = x + 1\n").is_err());
    assert!(ParsedLoop::parse("x = 0\nwhile true:\n x = x*x\n").is_err());
    assert!(ParsedLoop::parse("x = y0\nwhile true:\n x = x + y0\n").is_err());
    assert!(ParsedLoop::parse("x, y = 0\nwhile true:\n skip\n").is_err());
}

#[test]
fn sequential_and_tuple_statements_differ() {
    let seq = ParsedLoop::parse("x, y = 1, 0\nwhile true:\n x = x + y\n y = x\n").unwrap();
    let tup = ParsedLoop::parse("x, y = 1, 0\nwhile true:\n x, y = x + y, x\n").unwrap();
    let at = |l: &ParsedLoop, n: usize| l.system().trace(n + 1)[n].clone();
    assert_eq!(at(&seq, 3)[0], Poly::from_i64(4));
    assert_eq!(at(&tup, 3)[0], Poly::from_i64(3));
}

fn ratio() -> impl Strategy<Value = Rational> {
    (-3i64..=3, 1i64..=4).prop_map(|(n, d)| Rational::new(n.into(), d.into()))
}

/// A loop with `n` visible variables and a constant-one variable, shaped as `shape`.
fn random_loop(n: usize, shape: u8, entries: Vec<Rational>, init: Vec<Rational>) -> Loop {
    let s = n + 1;
    let vars: Vec<Var> = (0..s)
        .map(|i| if i < n { Var::new(format!("v{i}"), VarKind::Program, i as u32) } else { Var::new("t", VarKind::Program, i as u32) })
        .collect();
    let update = PolyMatrix::from_fn(s, s, |i, j| {
        if i == n {
            return Poly::from_i64((j == n) as i64);
        }
        let keep = match shape {
            0 => j >= i,
            1 => j <= i,
            _ => true,
        };
        if shape == 1 && j == n {
            return Poly::zero();
        }
        if keep {
            Poly::constant(entries[i * s + j].clone())
        } else {
            Poly::zero()
        }
    });
    let mut init: Vec<Poly> = init.into_iter().take(n).map(Poly::constant).collect();
    init.push(Poly::one());
    Loop {
        init_matrix: PolyMatrix::column(init.clone()),
        vars,
        update,
        init,
        params: vec![],
        initials: BTreeMap::new(),
        constant_one: Some(n),
        origin: None,
    }
}

fn by_name(vars: &[Var], state: &[Poly]) -> BTreeMap<String, Poly> {
    vars.iter().zip(state).map(|(v, p)| (v.name().to_string(), p.clone())).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rendered_loops_reparse_with_the_same_trace(
        n in 1usize..=3,
        shape in 0u8..3,
        entries in proptest::collection::vec(ratio(), 16),
        init in proptest::collection::vec(ratio(), 3),
    ) {
        let l = random_loop(n, shape, entries, init);
        let text = l.render();
        let parsed = ParsedLoop::parse(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        let a = l.system().trace(30);
        let b = parsed.system().trace(30);
        for k in 0..30 {
            let mut x = by_name(&l.vars, &a[k]);
            let mut y = by_name(&parsed.vars, &b[k]);
            x.remove("t");
            y.remove("t");
            prop_assert_eq!(&x, &y, "step {} of\n{}", k, text);
        }
    }

    #[test]
    fn spec_print_parse_is_a_fixpoint(
        nvars in 1usize..4,
        coef in -5i64..6,
        size in proptest::option::of(4usize..7),
        tiers in proptest::option::of(proptest::sample::subsequence(vec![ShapeTier::UnitUpperTriangular, ShapeTier::UpperTriangular, ShapeTier::Full], 1..=3)),
        part in proptest::option::of(proptest::collection::vec(1u32..3, 1..3)),
        aux in any::<bool>(),
        timeout in proptest::option::of(1u64..100),
        tagged in any::<bool>(),
    ) {
        let names: Vec<String> = ["x", "y", "z"].iter().take(nvars).map(|s| s.to_string()).collect();
        let inv = format!("{}  ==  {coef}*{}^2", names[0], names[nvars - 1]);
        let spec = SpecFile {
            vars: names.clone(),
            params: vec!["p0".into()],
            initials: vec![("x0".into(), "x".into())],
            invariants: vec![loopsynth::syntax::normalize_ws(&inv), "x0 == p0".into()],
            inits: vec![("x".into(), "p0 + 1".into())],
            size,
            tiers,
            partitions: part.map(|p| vec![IntegerPartition::new(p).unwrap()]),
            aux_one: aux,
            all_change: !aux,
            timeout,
            tags: if tagged { vec!["reconstructed".into()] } else { vec![] },
        };
        let once = SpecFile::parse(&spec.to_string()).unwrap();
        prop_assert_eq!(&once, &spec);
        prop_assert_eq!(SpecFile::parse(&once.to_string()).unwrap(), once);
    }
}

