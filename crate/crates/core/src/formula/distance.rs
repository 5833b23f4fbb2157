use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_traits::{Signed, Zero};
use thiserror::Error;

use super::poly::{expand_opaque, Polynomial};
use super::{Atom, Binding, Formula, Term};
use crate::interval::{Precision, Program, RatBox, RatInterval, Rational};

/// Same Boolean and quantifier skeleton, same bounds and the same relation at
/// every atom; bound variable names and terms may differ.
pub fn same_structure(f: &Formula, g: &Formula) -> bool {
    match (f, g) {
        (Formula::Atom(a), Formula::Atom(b)) => a.rel == b.rel,
        (Formula::Not(a), Formula::Not(b)) => same_structure(a, b),
        (Formula::And(a1, b1), Formula::And(a2, b2)) | (Formula::Or(a1, b1), Formula::Or(a2, b2)) => {
            same_structure(a1, a2) && same_structure(b1, b2)
        }
        (
            Formula::Quant { q: q1, bindings: v1, body: b1 },
            Formula::Quant { q: q2, bindings: v2, body: b2 },
        ) => {
            q1 == q2
                && v1.len() == v2.len()
                && v1.iter().zip(v2).all(|(x, y)| x.range == y.range)
                && same_structure(b1, b2)
        }
        _ => false,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceEnclosure {
    /// Encloses `max_i ||f_i - g_i||`.
    pub total: RatInterval,
    /// One enclosure per atom, in left-to-right order.
    pub per_atom: Vec<RatInterval>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Distance {
    Infinite,
    Finite(DistanceEnclosure),
}

impl Distance {
    pub fn finite(&self) -> Option<&DistanceEnclosure> {
        match self {
            Distance::Finite(d) => Some(d),
            Distance::Infinite => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DistanceError {
    #[error("tolerance must be positive")]
    NonPositiveTolerance,
    #[error("`{0}` is free; distance is defined on sentences")]
    FreeVariable(String),
}

/// Boxes expanded per atom before giving up on the requested width.
const MAX_EXPANSIONS: usize = 1 << 18;

/// Encloses `d(f, g)` to within `tol`, or reports that the structures differ.
///
/// Each atom difference is maximized by a deterministic best-first
/// branch-and-bound whose schedule does not depend on `tol`, so a smaller
/// tolerance only runs the same search longer and the enclosures nest.
pub fn distance_enclosure(f: &Formula, g: &Formula, tol: &Rational) -> Result<Distance, DistanceError> {
    if !tol.is_positive() {
        return Err(DistanceError::NonPositiveTolerance);
    }
    for h in [f, g] {
        if let Some(v) = h.free_vars().into_iter().next() {
            return Err(DistanceError::FreeVariable(v));
        }
    }
    if !same_structure(f, g) {
        return Ok(Distance::Infinite);
    }
    let mut left: Vec<(&Atom, Vec<&Binding>)> = Vec::new();
    f.for_each_atom(&mut |a, scope| left.push((a, scope.to_vec())));
    let mut right: Vec<(&Atom, Vec<&Binding>)> = Vec::new();
    g.for_each_atom(&mut |a, scope| right.push((a, scope.to_vec())));

    let mut per_atom = Vec::with_capacity(left.len());
    for ((fa, fs), (ga, gs)) in left.iter().zip(&right) {
        let vars: Vec<String> = fs.iter().map(|b| b.var.clone()).collect();
        let theirs: Vec<String> = gs.iter().map(|b| b.var.clone()).collect();
        let g_term = rename_all(&ga.term, &theirs, &vars);
        let diff = Term::sub(fa.term.clone(), g_term);
        let bx: RatBox = fs.iter().map(|b| b.range.clone()).collect();
        let objective = Objective::new(&diff, &vars);
        per_atom.push(maximize_abs(&objective, bx, tol));
    }
    let lo = per_atom.iter().map(|i| i.lo().clone()).max().unwrap_or_else(Rational::zero);
    let hi = per_atom.iter().map(|i| i.hi().clone()).max().unwrap_or_else(Rational::zero);
    Ok(Distance::Finite(DistanceEnclosure {
        total: RatInterval::new(lo, hi).expect("componentwise max keeps order"),
        per_atom,
    }))
}

fn rename_all(t: &Term, from: &[String], to: &[String]) -> Term {
    let mut out = t.clone();
    for (i, v) in from.iter().enumerate() {
        out = out.rename(v, &format!("#{i}"));
    }
    for (i, v) in to.iter().enumerate() {
        out = out.rename(&format!("#{i}"), v);
    }
    out
}

/// `|h|` as a polynomial over the variables and opaque subterms.
struct Objective {
    poly: Polynomial,
    nvars: usize,
    /// Programs for the opaque subterms the polynomial actually uses.
    atoms: Vec<Option<Program>>,
}

impl Objective {
    fn new(h: &Term, vars: &[String]) -> Self {
        let (poly, atoms) = expand_opaque(h, vars);
        let used = poly.occurs();
        let atoms = atoms
            .iter()
            .enumerate()
            .map(|(k, t)| used[vars.len() + k].then(|| Program::compile(t, vars).expect("scope covers the term")))
            .collect();
        Self {
            poly,
            nvars: vars.len(),
            atoms,
        }
    }

    fn occurs(&self) -> Vec<bool> {
        let used = self.poly.occurs();
        let mut out = used[..self.nvars].to_vec();
        for p in self.atoms.iter().flatten() {
            for (o, u) in out.iter_mut().zip(p.occurs()) {
                *o |= u;
            }
        }
        out
    }

    fn is_exact(&self) -> bool {
        self.atoms.iter().all(Option::is_none)
    }

    /// `None` when evaluation is undefined somewhere on `b`.
    fn eval(&self, b: &RatBox, prec: Precision) -> Option<RatInterval> {
        let mut ext = b.clone();
        for a in &self.atoms {
            ext.push(match a {
                Some(p) => p.eval(b, prec).ok()?,
                None => RatInterval::point(Rational::zero()),
            });
        }
        Some(self.poly.eval(&ext))
    }
}

struct Node {
    /// `None` stands for an unbounded estimate.
    upper: Option<Rational>,
    seq: u64,
    bx: RatBox,
    prec: Precision,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        let by_upper = match (&self.upper, &other.upper) {
            (None, None) => Ordering::Equal,
            (None, Some(_)) => Ordering::Greater,
            (Some(_), None) => Ordering::Less,
            (Some(a), Some(b)) => a.cmp(b),
        };
        by_upper.then_with(|| other.seq.cmp(&self.seq))
    }
}

fn min_upper(a: Option<Rational>, b: &Option<Rational>) -> Option<Rational> {
    match (a, b) {
        (None, b) => b.clone(),
        (Some(a), None) => Some(a),
        (Some(a), Some(b)) => Some(if &a < b { a } else { b.clone() }),
    }
}

const BASE_BITS: u32 = 24;
const MAX_BITS: u32 = 4096;

fn precision_for(gap: Option<&Rational>) -> Precision {
    let bits = match gap {
        Some(g) if g.is_positive() => Precision::for_refinement(g).bits() + 8,
        Some(_) => MAX_BITS,
        None => BASE_BITS,
    };
    Precision::new(bits.clamp(BASE_BITS, MAX_BITS)).expect("nonzero")
}

/// Encloses `max |h|` over `bx`.
fn maximize_abs(obj: &Objective, bx: RatBox, tol: &Rational) -> RatInterval {
    let relevant = obj.occurs();
    let mut lower = Rational::zero();
    let mut seq = 0u64;
    let mut heap = BinaryHeap::new();

    let probe = |b: &RatBox, prec: Precision, lower: &mut Rational| {
        let c = RatBox::point(&b.center());
        if let Some(v) = obj.eval(&c, prec) {
            let m = v.mag_lower();
            if m > *lower {
                *lower = m;
            }
        }
        obj.eval(b, prec).map(|v| v.mag_upper())
    };

    let prec = precision_for(None);
    let upper = probe(&bx, prec, &mut lower);
    heap.push(Node {
        upper,
        seq,
        bx,
        prec,
    });

    let mut expansions = 0;
    loop {
        let Some(top) = heap.peek() else {
            return RatInterval::point(lower);
        };
        if let Some(u) = &top.upper {
            if u <= &lower {
                return RatInterval::point(lower);
            }
            if u - &lower <= *tol || expansions >= MAX_EXPANSIONS {
                return RatInterval::new(lower, u.clone()).expect("upper exceeds lower");
            }
        }
        expansions += 1;
        let node = heap.pop().expect("peeked");
        let gap = node.upper.as_ref().map(|u| u - &lower);
        let axis = (0..node.bx.dim())
            .filter(|&i| relevant[i] && !node.bx.get(i).is_point())
            .max_by(|&a, &b| node.bx.get(a).width().cmp(&node.bx.get(b).width()).then(b.cmp(&a)));
        match axis {
            None if obj.is_exact() => {
                // exact value on a degenerate box: upper and lower coincide
                let v = probe(&node.bx, node.prec, &mut lower);
                if let Some(v) = v {
                    if v > lower {
                        lower = v;
                    }
                }
            }
            None => {
                let bits = (node.prec.bits() + 16).max(precision_for(gap.as_ref()).bits());
                let prec = Precision::new(bits.min(MAX_BITS)).expect("nonzero");
                let upper = min_upper(probe(&node.bx, prec, &mut lower), &node.upper);
                seq += 1;
                heap.push(Node {
                    upper,
                    seq,
                    bx: node.bx,
                    prec,
                });
            }
            Some(a) => {
                let prec = precision_for(gap.as_ref());
                let (l, r) = node.bx.bisect(a);
                for child in [l, r] {
                    let upper = min_upper(probe(&child, prec, &mut lower), &node.upper);
                    if matches!(&upper, Some(u) if *u <= lower) {
                        continue;
                    }
                    seq += 1;
                    heap.push(Node {
                        upper,
                        seq,
                        bx: child,
                        prec,
                    });
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;
    use crate::interval::{rat, ratio};

    fn dist(a: &str, b: &str, tol: Rational) -> Distance {
        distance_enclosure(&parse(a).unwrap(), &parse(b).unwrap(), &tol).unwrap()
    }

    const F: &str = "exists x in [0,1] . forall y in [0,1] . x^2 - y = x*y and x = y";
    const G: &str = "exists x in [0,1] . forall y in [0,1] . x^2 - y = x*y + 1 and x = y^2";

    #[test]
    fn worked_pair() {
        assert!(same_structure(&parse(F).unwrap(), &parse(G).unwrap()));
        let d = dist(F, G, ratio(1, 1000));
        let d = d.finite().unwrap();
        assert!(d.total.contains(&rat(1)));
        assert!(d.total.width() <= ratio(1, 1000));
        assert_eq!(d.per_atom[0], RatInterval::point(rat(1)));
        assert!(d.per_atom[1].contains(&ratio(1, 4)));
        assert!(d.per_atom[1].width() <= ratio(1, 1000));
    }

    #[test]
    fn negation_changes_structure() {
        assert!(!same_structure(&parse("1 >= 0").unwrap(), &parse("not not 1 >= 0").unwrap()));
        assert_eq!(dist("1 >= 0", "not not 1 >= 0", rat(1)), Distance::Infinite);
    }

    #[test]
    fn self_distance() {
        let src = "exists x in [-1,1] . sin(x) - x^3 = 0";
        let d = dist(src, src, ratio(1, 100));
        let d = d.finite().unwrap();
        assert!(d.total.contains(&rat(0)));
        assert!(d.total.width() <= ratio(1, 100));
    }

    #[test]
    fn transcendental_difference() {
        let d = dist(
            "exists x in [0,1] . sin(x) = 0",
            "exists y in [0,1] . sin(y) - 1/2 = 0",
            ratio(1, 1_000_000),
        );
        let d = d.finite().unwrap();
        assert!(d.total.contains(&ratio(1, 2)));
        assert!(d.total.width() <= ratio(1, 1_000_000));
    }

    #[test]
    fn bounds_matter() {
        assert!(!same_structure(
            &parse("exists x in [0,1] . x = 0").unwrap(),
            &parse("exists x in [0,2] . x = 0").unwrap()
        ));
    }

    #[test]
    fn rejects_bad_tolerance() {
        let f = parse("1 >= 0").unwrap();
        assert_eq!(
            distance_enclosure(&f, &f, &rat(0)),
            Err(DistanceError::NonPositiveTolerance)
        );
    }
}
