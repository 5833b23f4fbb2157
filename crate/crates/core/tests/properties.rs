use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use proptest::prelude::*;
use qdecide::degree::{degree, robustness_margin, FixedMap};
use qdecide::formula::{
    distance_enclosure, parse, same_structure, validate_class_b, Binding, Formula, Func, Quantifier, Term,
};
use qdecide::geometry::{merge_cells, signed_face_volume, BoxComplex, FaceId, Grid};
use qdecide::interval::{ratio, rat, Precision, RatBox, RatInterval, Rational};
use qdecide::solver::{checksat_formula, quasi_decide, DriverConfig, Outcome, SolverOptions, TriValue};

fn rational() -> impl Strategy<Value = Rational> {
    (-40i64..=40, 1i64..=8).prop_map(|(n, d)| ratio(n, d))
}

fn interval() -> impl Strategy<Value = RatInterval> {
    (rational(), 1i64..=16, 1i64..=4).prop_map(|(lo, w, d)| RatInterval::new(lo.clone(), lo + ratio(w, d)).unwrap())
}

/// Terms over `x` and `y` in the form the parser produces (no negated or
/// divided constants) and defined on every box.
fn term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        Just(Term::var("x")),
        Just(Term::var("y")),
        rational().prop_map(Term::constant),
        Just(Term::Pi),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::add(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::sub(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::mul(a, b)),
            (inner.clone(), prop_oneof![Just("x"), Just("y")]).prop_map(|(a, v)| {
                Term::Div(Box::new(a), Box::new(Term::add(Term::pow(Term::var(v), 2), Term::constant(rat(1)))))
            }),
            (inner.clone(), 1u32..4).prop_map(|(a, n)| Term::pow(a, n)),
            prop_oneof![Just("x"), Just("y")].prop_map(|v| Term::Neg(Box::new(Term::var(v)))),
            (prop_oneof![Just(Func::Sin), Just(Func::Cos)], inner.clone()).prop_map(|(f, a)| Term::apply(f, a)),
            inner.clone().prop_map(|a| Term::apply(Func::Exp, Term::apply(Func::Sin, a))),
            inner.prop_map(|a| Term::apply(Func::Sqrt, Term::add(Term::pow(a, 2), Term::constant(rat(1))))),
        ]
    })
}

fn matrix() -> impl Strategy<Value = Formula> {
    let atom = (term(), any::<bool>()).prop_map(|(t, eq)| if eq { Formula::eq(t) } else { Formula::geq(t) });
    atom.prop_recursive(3, 8, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
            inner.prop_map(|a| Formula::Not(Box::new(a))),
        ]
    })
}

fn quantifier() -> impl Strategy<Value = Quantifier> {
    prop_oneof![Just(Quantifier::Exists), Just(Quantifier::ForAll)]
}

fn sentence() -> impl Strategy<Value = Formula> {
    (quantifier(), quantifier(), interval(), interval(), any::<bool>(), matrix()).prop_map(|(q1, q2, ix, iy, merged, body)| {
        let bx = Binding { var: "x".into(), range: ix };
        let by = Binding { var: "y".into(), range: iy };
        if merged {
            Formula::Quant { q: q1, bindings: vec![bx, by], body: Box::new(body) }
        } else {
            let inner = Formula::Quant { q: q2, bindings: vec![by], body: Box::new(body) };
            Formula::Quant { q: q1, bindings: vec![bx], body: Box::new(inner) }
        }
    })
}

fn sentences() -> impl Strategy<Value = Formula> {
    prop_oneof![
        3 => sentence(),
        1 => (sentence(), sentence()).prop_map(|(a, b)| Formula::and(a, b)),
        1 => (sentence(), sentence()).prop_map(|(a, b)| Formula::or(a, b)),
    ]
}

fn rename(f: &Formula, from: &str, to: &str) -> Formula {
    match f {
        Formula::Atom(_) => f.map_terms(&mut |t| t.rename(from, to)),
        Formula::Not(a) => Formula::Not(Box::new(rename(a, from, to))),
        Formula::And(a, b) => Formula::and(rename(a, from, to), rename(b, from, to)),
        Formula::Or(a, b) => Formula::or(rename(a, from, to), rename(b, from, to)),
        Formula::Quant { q, bindings, body } => Formula::Quant {
            q: *q,
            bindings: bindings
                .iter()
                .map(|b| Binding {
                    var: if b.var == from { to.to_string() } else { b.var.clone() },
                    range: b.range.clone(),
                })
                .collect(),
            body: Box::new(rename(body, from, to)),
        },
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn print_then_parse_is_identity(f in sentences()) {
        let text = f.to_string();
        let back = parse(&text).map_err(|e| TestCaseError::fail(format!("{text}: {e}")))?;
        prop_assert_eq!(back, f);
    }

    #[test]
    fn same_structure_is_an_equivalence(f in sentence(), shift in rational(), other in rational()) {
        let g = f.map_terms(&mut |t| Term::add(t.clone(), Term::constant(shift.clone())));
        let h = f.map_terms(&mut |t| Term::mul(t.clone(), Term::constant(other.clone())));
        prop_assert!(same_structure(&f, &f));
        prop_assert_eq!(same_structure(&f, &g), same_structure(&g, &f));
        prop_assert!(same_structure(&f, &g) && same_structure(&g, &h));
        prop_assert!(same_structure(&f, &h));
        let negated = Formula::Not(Box::new(f.clone()));
        prop_assert!(!same_structure(&f, &negated));
    }

    #[test]
    fn class_membership_ignores_names(f in sentences()) {
        let g = rename(&rename(&rename(&f, "x", "u"), "y", "x"), "u", "y");
        let (a, b) = (validate_class_b(&f), validate_class_b(&g));
        prop_assert_eq!(a.in_class, b.in_class);
        prop_assert_eq!(a.blocks, b.blocks);
    }
}

fn polynomial_pair() -> impl Strategy<Value = (String, String)> {
    let coeff = (-6i64..=6, 1i64..=3);
    (proptest::collection::vec(coeff.clone(), 3), proptest::collection::vec(coeff, 3)).prop_map(|(a, b)| {
        let show = |c: &[(i64, i64)]| format!("({}/{})*y^2 + ({}/{})*y + ({}/{})", c[0].0, c[0].1, c[1].0, c[1].1, c[2].0, c[2].1);
        (show(&a), show(&b))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn distance_enclosures_nest((f, g) in polynomial_pair()) {
        let f = parse(&format!("forall y in [-1,1] . {f} >= 0")).unwrap();
        let g = parse(&format!("forall y in [-1,1] . {g} >= 0")).unwrap();
        let coarse = distance_enclosure(&f, &g, &ratio(1, 10)).unwrap();
        let fine = distance_enclosure(&f, &g, &ratio(1, 1000)).unwrap();
        let (coarse, fine) = (coarse.finite().unwrap(), fine.finite().unwrap());
        prop_assert!(coarse.total.width() <= ratio(1, 10));
        prop_assert!(fine.total.width() <= ratio(1, 1000));
        prop_assert!(fine.total.is_subset_of(&coarse.total), "{} not in {}", fine.total, coarse.total);
    }
}

fn grid_and_subset() -> impl Strategy<Value = (Arc<Grid>, Vec<usize>)> {
    (proptest::collection::vec((interval(), 1usize..=4), 1..=3), any::<u64>()).prop_map(|(axes, seed)| {
        let base = RatBox::new(axes.iter().map(|(iv, _)| iv.clone()).collect());
        let counts: Vec<usize> = axes.iter().map(|(_, n)| *n).collect();
        let grid = Arc::new(Grid::with_counts(&base, &counts));
        let cells = grid.cells().filter(|c| (seed >> (c % 64)) & 1 == 1).collect();
        (grid, cells)
    })
}

fn volume(bx: &RatBox) -> Rational {
    bx.components().iter().fold(Rational::one(), |acc, iv| acc * iv.width())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn cells_partition_the_base((grid, _) in grid_and_subset()) {
        let total: Rational = grid.cells().map(|c| volume(&grid.cell_box(c))).sum();
        prop_assert_eq!(total, volume(grid.base()));
        for c in grid.cells() {
            prop_assert_eq!(grid.cell_id(&grid.cell_index(c)), c);
        }
    }

    #[test]
    fn boundary_telescopes((grid, cells) in grid_and_subset()) {
        let cx = BoxComplex::from_cells(grid.clone(), cells);
        let b = cx.boundary();
        for v in signed_face_volume(&b, grid.dim()) {
            prop_assert!(v.is_zero());
        }
        // interior faces of the complex cancel, so no face appears twice
        let mut ids: Vec<(usize, Rational, String)> = b.iter().map(|(f, _)| (f.axis, f.value.clone(), f.bx.to_string())).collect();
        let n = ids.len();
        ids.sort();
        ids.dedup();
        prop_assert_eq!(ids.len(), n);
    }

    #[test]
    fn merge_partitions_cells((grid, _) in grid_and_subset(), pick in any::<u64>()) {
        let faces: Vec<FaceId> = grid.faces().into_iter().enumerate().filter(|(i, _)| (pick >> (i % 64)) & 1 == 1).map(|(_, f)| f).collect();
        let merged = merge_cells(&grid, &faces);
        let mut seen: Vec<usize> = merged.removed.clone();
        for cx in &merged.complexes {
            seen.extend_from_slice(cx.cells());
        }
        let n = seen.len();
        seen.sort_unstable();
        seen.dedup();
        prop_assert_eq!(seen.len(), n, "a cell is in two complexes");
        prop_assert_eq!(n, grid.len());
        // every zero face between two cells lies inside one complex
        for id in &faces {
            let f = grid.face(id);
            if let [a, b] = f.cells.as_slice() {
                let owner = |c: usize| merged.complexes.iter().position(|cx| cx.cells().contains(&c));
                prop_assert_eq!(owner(*a), owner(*b));
            }
        }
        // surviving complexes have no zero face on the base boundary
        for cx in &merged.complexes {
            for id in &faces {
                let f = grid.face(id);
                prop_assert!(!(f.on_boundary && f.cells.iter().any(|c| cx.cells().contains(c))));
            }
        }
    }
}

fn univariate() -> impl Strategy<Value = (Vec<Rational>, Rational, Rational)> {
    (proptest::collection::vec(rational(), 1..=5), rational(), rational())
        .prop_filter("nondegenerate interval", |(_, a, b)| a != b)
        .prop_map(|(c, a, b)| if a < b { (c, a, b) } else { (c, b, a) })
}

fn poly_term(coeffs: &[Rational]) -> Term {
    coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| Term::mul(Term::constant(c.clone()), Term::pow(Term::var("x"), i as u32)))
        .reduce(Term::add)
        .unwrap()
}

fn horner(coeffs: &[Rational], x: &Rational) -> Rational {
    coeffs.iter().rev().fold(Rational::zero(), |acc, c| acc * x + c)
}

fn prec() -> Precision {
    Precision::new(32).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn one_dimensional_degree_is_the_sign_change((coeffs, a, b) in univariate(), splits in 1usize..=5) {
        let (fa, fb) = (horner(&coeffs, &a), horner(&coeffs, &b));
        prop_assume!(!fa.is_zero() && !fb.is_zero());
        let sgn = |q: &Rational| if q.is_positive() { 1 } else { -1 };
        let map = FixedMap::from_terms(&[poly_term(&coeffs)], &["x".to_string()]).unwrap();
        let grid = Arc::new(Grid::with_counts(&RatBox::new(vec![RatInterval::new(a, b).unwrap()]), &[splits]));
        let all = BoxComplex::from_cells(grid.clone(), grid.cells().collect());
        let d = degree(&map, &all, prec(), 1000).unwrap();
        prop_assert_eq!(d.value, (sgn(&fb) - sgn(&fa)) / 2);
    }

    #[test]
    fn degree_is_additive((coeffs, a, b) in univariate(), splits in 2usize..=6, pick in any::<u64>()) {
        let map = FixedMap::from_terms(&[poly_term(&coeffs)], &["x".to_string()]).unwrap();
        let grid = Arc::new(Grid::with_counts(&RatBox::new(vec![RatInterval::new(a, b).unwrap()]), &[splits]));
        let (left, right): (Vec<usize>, Vec<usize>) = grid.cells().partition(|c| (pick >> c) & 1 == 1);
        prop_assume!(!left.is_empty() && !right.is_empty());
        let deg = |cs: Vec<usize>| degree(&map, &BoxComplex::from_cells(grid.clone(), cs), prec(), 1000);
        if let (Ok(d), Ok(d1), Ok(d2)) = (deg(grid.cells().collect()), deg(left), deg(right)) {
            prop_assert_eq!(d.value, d1.value + d2.value);
        }
    }

    #[test]
    fn small_perturbations_keep_the_degree(roots in proptest::collection::vec((-6i64..=6, -6i64..=6), 1..=3), dx in -100i64..=100, dy in -100i64..=100) {
        // real and imaginary parts of prod (z - r_k) + c
        let z = |k: usize| -> (Term, Term) {
            let (a, b) = (ratio(roots[k].0, 4), ratio(roots[k].1, 4));
            (Term::sub(Term::var("x"), Term::constant(a)), Term::sub(Term::var("y"), Term::constant(b)))
        };
        let (mut re, mut im) = z(0);
        for k in 1..roots.len() {
            let (u, v) = z(k);
            let nre = Term::sub(Term::mul(re.clone(), u.clone()), Term::mul(im.clone(), v.clone()));
            let nim = Term::add(Term::mul(re, v), Term::mul(im, u));
            re = nre;
            im = nim;
        }
        let vars = ["x".to_string(), "y".to_string()];
        let square = RatBox::new(vec![RatInterval::from_ints(-2, 2).unwrap(), RatInterval::from_ints(-2, 2).unwrap()]);
        let grid = Arc::new(Grid::with_counts(&square, &[1, 1]));
        let cx = BoxComplex::from_cells(grid.clone(), grid.cells().collect());
        let map = FixedMap::from_terms(&[re.clone(), im.clone()], &vars).unwrap();
        let Ok(d) = degree(&map, &cx, prec(), 4000) else { return Ok(()); };
        // every root lies strictly inside
        prop_assert_eq!(d.value, roots.len() as i64);
        let Ok(margin) = robustness_margin(&d) else { return Ok(()); };
        let (cx_, cy_) = (&margin * ratio(dx, 101), &margin * ratio(dy, 101));
        let shifted = FixedMap::from_terms(
            &[Term::add(re, Term::constant(cx_)), Term::add(im, Term::constant(cy_))],
            &vars,
        ).unwrap();
        let e = degree(&shifted, &cx, prec(), 4000).unwrap();
        prop_assert_eq!(e.value, d.value);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn singleton_answers_agree_on_nested_boxes(lo in -8i64..=8, w in 1i64..=4, sub in 0i64..4, k in 0u32..4) {
        let f = qdecide::formula::parse_with_params("exists y in [-2,2] . y^2 - p = 0", &["p"]).unwrap();
        let outer = RatInterval::new(ratio(lo, 4), ratio(lo + w, 4)).unwrap();
        let piece = outer.width() / rat(4);
        let start = outer.lo() + &piece * rat(sub);
        let inner = RatInterval::new(start.clone(), start + piece).unwrap();
        let r = ratio(1, 1 << k).max(outer.width());
        let params = ["p".to_string()];
        let opts = SolverOptions::default();
        let a = checksat_formula(&f, &params, &RatBox::new(vec![outer]), &r, &opts).unwrap().value;
        let b = checksat_formula(&f, &params, &RatBox::new(vec![inner]), &r, &opts).unwrap().value;
        if a.is_singleton() && b.is_singleton() {
            prop_assert_eq!(a, b);
        }
        // a singleton on the big box is inherited by its pieces whenever they decide
        if a == TriValue::True {
            prop_assert_ne!(b, TriValue::False);
        }
    }

    #[test]
    fn decided_answers_survive_larger_budgets(c in -12i64..=12, d in 1i64..=4, extra in 1u32..4) {
        let src = format!("exists x in [-1,1] . x^3 - x - ({c}/{d}) = 0");
        let f = parse(&src).unwrap();
        let small = quasi_decide(&f, &DriverConfig::with_budget(6)).unwrap();
        let large = quasi_decide(&f, &DriverConfig::with_budget(6 + extra)).unwrap();
        if small.outcome != Outcome::Unknown {
            prop_assert_eq!(small.outcome, large.outcome);
            prop_assert_eq!(small.iterations, large.iterations);
        }
        prop_assert_eq!(&large.trace[..small.trace.len()], &small.trace[..]);
    }

    #[test]
    fn parallel_and_sequential_agree(c in -12i64..=12, d in 1i64..=4) {
        let src = format!("forall p in [0,1] . exists x in [-2,2] . x^3 - x - p - ({c}/{d}) = 0");
        let f = parse(&src).unwrap();
        let seq = quasi_decide(&f, &DriverConfig { budget: 5, parallel: false, ..DriverConfig::default() }).unwrap();
        let par = quasi_decide(&f, &DriverConfig { budget: 5, parallel: true, ..DriverConfig::default() }).unwrap();
        prop_assert_eq!(seq.outcome, par.outcome);
        prop_assert_eq!(seq.iterations, par.iterations);
        let values = |v: &qdecide::solver::Verdict| v.trace.iter().map(|t| t.value).collect::<Vec<_>>();
        prop_assert_eq!(values(&seq), values(&par));
    }
}
