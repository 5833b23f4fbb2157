//! Three-valued satisfiability checks over parameter boxes and the
//! ε-halving driver built on them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::Signed;
use thiserror::Error;

use crate::degree::{degree_with, robustness_margin, DegreeOptions, FixedMap};
use crate::formula::{Binding, Block, ClassB, ClassBReport, Formula, Term};
use crate::geometry::{merge_cells_touching, BoxComplex, CellId, FaceId, Grid};
use crate::interval::{EvalError, Precision, Program, RatBox, RatInterval, Rational};
use crate::par;

/// A nonempty subset of `{T, F}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TriValue {
    True,
    False,
    Both,
}

impl TriValue {
    pub fn contains(self, b: bool) -> bool {
        match self {
            TriValue::True => b,
            TriValue::False => !b,
            TriValue::Both => true,
        }
    }

    pub fn is_singleton(self) -> bool {
        self != TriValue::Both
    }

    fn from_set(t: bool, f: bool) -> TriValue {
        match (t, f) {
            (true, false) => TriValue::True,
            (false, true) => TriValue::False,
            (true, true) => TriValue::Both,
            (false, false) => unreachable!("nonempty operands give a nonempty result"),
        }
    }

    /// `{u ∧ v | u ∈ self, v ∈ other}`
    pub fn and(self, other: TriValue) -> TriValue {
        let mut t = false;
        let mut f = false;
        for u in [true, false].into_iter().filter(|&u| self.contains(u)) {
            for v in [true, false].into_iter().filter(|&v| other.contains(v)) {
                if u && v {
                    t = true;
                } else {
                    f = true;
                }
            }
        }
        TriValue::from_set(t, f)
    }

    /// `{u ∨ v | u ∈ self, v ∈ other}`
    pub fn or(self, other: TriValue) -> TriValue {
        let mut t = false;
        let mut f = false;
        for u in [true, false].into_iter().filter(|&u| self.contains(u)) {
            for v in [true, false].into_iter().filter(|&v| other.contains(v)) {
                if u || v {
                    t = true;
                } else {
                    f = true;
                }
            }
        }
        TriValue::from_set(t, f)
    }
}

impl fmt::Display for TriValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TriValue::True => "{T}",
            TriValue::False => "{F}",
            TriValue::Both => "{T,F}",
        })
    }
}

/// Work counters; summed over everything a call evaluated.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub cells: u64,
    pub faces: u64,
    pub complexes: u64,
    /// Degree value -> number of complexes with that degree.
    pub degrees: BTreeMap<i64, u64>,
    pub degree_failures: u64,
    /// Grids not built because they exceeded the cell limit.
    pub grids_skipped: u64,
    pub timed_out: bool,
}

impl SolverStats {
    pub fn absorb(&mut self, other: &SolverStats) {
        self.cells += other.cells;
        self.faces += other.faces;
        self.complexes += other.complexes;
        for (k, v) in &other.degrees {
            *self.degrees.entry(*k).or_insert(0) += v;
        }
        self.degree_failures += other.degree_failures;
        self.grids_skipped += other.grids_skipped;
        self.timed_out |= other.timed_out;
    }
}

/// Result of one check together with its certificate.
///
/// For `{T}` the certificate is a robustness margin and for `{F}` a
/// separation bound: no perturbation of the terms by sup-distance below it
/// changes the answer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Evaluation {
    pub value: TriValue,
    pub certificate: Option<Rational>,
    pub stats: SolverStats,
}

impl Evaluation {
    fn new(value: TriValue, certificate: Option<Rational>) -> Self {
        Self {
            value,
            certificate,
            stats: SolverStats::default(),
        }
    }

    fn both() -> Self {
        Self::new(TriValue::Both, None)
    }

    /// Lifted conjunction; `{F}` keeps the first false certificate, `{T}`
    /// the smaller margin.
    pub fn and(mut self, other: Evaluation) -> Evaluation {
        self.stats.absorb(&other.stats);
        let value = self.value.and(other.value);
        let certificate = match (self.value, other.value) {
            (TriValue::False, _) => self.certificate,
            (_, TriValue::False) => other.certificate,
            (TriValue::True, TriValue::True) => min_opt(self.certificate, other.certificate),
            _ => None,
        };
        Evaluation {
            value,
            certificate,
            stats: self.stats,
        }
    }

    /// Lifted disjunction, dual to [`Evaluation::and`].
    pub fn or(mut self, other: Evaluation) -> Evaluation {
        self.stats.absorb(&other.stats);
        let value = self.value.or(other.value);
        let certificate = match (self.value, other.value) {
            (TriValue::True, _) => self.certificate,
            (_, TriValue::True) => other.certificate,
            (TriValue::False, TriValue::False) => min_opt(self.certificate, other.certificate),
            _ => None,
        };
        Evaluation {
            value,
            certificate,
            stats: self.stats,
        }
    }
}

fn min_opt(a: Option<Rational>, b: Option<Rational>) -> Option<Rational> {
    match (a, b) {
        (Some(a), Some(b)) => Some(a.min(b)),
        _ => None,
    }
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Subdivision budget for each degree computation.
    pub degree_budget: usize,
    /// Grids with more cells than this are not built; the check answers `{T,F}`.
    pub max_cells: usize,
    pub parallel: bool,
    /// Past this instant every check answers `{T,F}`.
    pub deadline: Option<Instant>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            degree_budget: 4096,
            max_cells: 1 << 22,
            parallel: false,
            deadline: None,
        }
    }
}

impl SolverOptions {
    fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("formula is not in the supported class: {}", .0.violations.join("; "))]
    NotInClass(ClassBReport),
    #[error("parameter box has dimension {got}, expected {expected}")]
    ParamsMismatch { expected: usize, got: usize },
    #[error("free variable `{0}` in a sentence")]
    FreeVariable(String),
    #[error("refinement must be positive")]
    NonPositiveRefinement,
    #[error("budget must be at least 1")]
    ZeroBudget,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// A class view with terms compiled against the variables in scope.
#[derive(Debug)]
pub enum Plan {
    Exists(ExistsPlan),
    ForAll {
        binding: Binding,
        body: Box<Plan>,
    },
    And(Box<Plan>, Box<Plan>, Projection),
    Or(Box<Plan>, Box<Plan>, Projection),
}

/// Parameter axes kept for the left and right operand.
#[derive(Debug, Clone)]
pub struct Projection {
    left: Vec<usize>,
    right: Vec<usize>,
}

#[derive(Debug)]
pub struct ExistsPlan {
    block: Block,
    base: RatBox,
    f: Vec<Program>,
    g: Vec<Program>,
}

impl ExistsPlan {
    pub fn block(&self) -> &Block {
        &self.block
    }
}

impl Plan {
    /// Compiles `view` for parameters `scope`, given in quantification order.
    pub fn new(view: &ClassB, scope: &[String]) -> Result<Plan, SolveError> {
        Ok(match view {
            ClassB::Exists(block) => {
                let mut vars = scope.to_vec();
                vars.extend(block.vars());
                let compile = |ts: &[Term]| ts.iter().map(|t| Program::compile(t, &vars)).collect::<Result<Vec<_>, _>>();
                Plan::Exists(ExistsPlan {
                    base: RatBox::new(block.bindings.iter().map(|b| b.range.clone()).collect()),
                    f: compile(&block.equations)?,
                    g: compile(&block.inequalities)?,
                    block: block.clone(),
                })
            }
            ClassB::ForAll(b, body) => {
                let mut inner = scope.to_vec();
                inner.push(b.var.clone());
                Plan::ForAll {
                    binding: b.clone(),
                    body: Box::new(Plan::new(body, &inner)?),
                }
            }
            ClassB::And(a, b) | ClassB::Or(a, b) => {
                let (left, ls) = project(a, scope);
                let (right, rs) = project(b, scope);
                let pa = Box::new(Plan::new(a, &ls)?);
                let pb = Box::new(Plan::new(b, &rs)?);
                let proj = Projection { left, right };
                if matches!(view, ClassB::And(..)) {
                    Plan::And(pa, pb, proj)
                } else {
                    Plan::Or(pa, pb, proj)
                }
            }
        })
    }
}

fn view_free_vars(view: &ClassB, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    match view {
        ClassB::Exists(b) => {
            let mut used = BTreeSet::new();
            for t in b.equations.iter().chain(&b.inequalities) {
                t.vars(&mut used);
            }
            let local = b.vars();
            out.extend(used.into_iter().filter(|v| !local.contains(v) && !bound.contains(v)));
        }
        ClassB::ForAll(b, body) => {
            bound.push(b.var.clone());
            view_free_vars(body, bound, out);
            bound.pop();
        }
        ClassB::And(a, b) | ClassB::Or(a, b) => {
            view_free_vars(a, bound, out);
            view_free_vars(b, bound, out);
        }
    }
}

fn project(view: &ClassB, scope: &[String]) -> (Vec<usize>, Vec<String>) {
    let mut free = BTreeSet::new();
    view_free_vars(view, &mut Vec::new(), &mut free);
    scope
        .iter()
        .enumerate()
        .filter(|(_, v)| free.contains(*v))
        .map(|(i, v)| (i, v.clone()))
        .unzip()
}

/// `CheckSat(S, P, r)` for a compiled plan.
pub fn checksat(plan: &Plan, p: &RatBox, r: &Rational, opts: &SolverOptions) -> Evaluation {
    if opts.expired() {
        let mut e = Evaluation::both();
        e.stats.timed_out = true;
        return e;
    }
    match plan {
        Plan::Exists(block) => soei(block, p, r, opts),
        Plan::ForAll { binding, body } => univ(&binding.range, body, p, r, opts),
        Plan::And(a, b, proj) => {
            let left = checksat(a, &p.project(&proj.left), r, opts);
            if left.value == TriValue::False {
                return left;
            }
            left.and(checksat(b, &p.project(&proj.right), r, opts))
        }
        Plan::Or(a, b, proj) => {
            let left = checksat(a, &p.project(&proj.left), r, opts);
            if left.value == TriValue::True {
                return left;
            }
            left.or(checksat(b, &p.project(&proj.right), r, opts))
        }
    }
}

/// Universal quantifier: split its range to width `r` and fold with the
/// lifted conjunction, stopping at the first `{F}`.
pub fn univ(range: &RatInterval, body: &Plan, p: &RatBox, r: &Rational, opts: &SolverOptions) -> Evaluation {
    let grid = Grid::cover(&RatBox::new(vec![range.clone()]), r);
    let pieces: Vec<RatInterval> = grid.cells().map(|c| grid.cell_box(c).get(0).clone()).collect();
    let chunk = if opts.parallel && par::available() { 16 } else { 1 };
    let mut acc: Option<Evaluation> = None;
    for batch in pieces.chunks(chunk) {
        let results = par::map(batch, opts.parallel, |iv| {
            let mut q = p.clone();
            q.push(iv.clone());
            checksat(body, &q, r, opts)
        });
        for e in results {
            let stop = e.value == TriValue::False;
            acc = Some(match acc {
                None => e,
                Some(a) => a.and(e),
            });
            if stop {
                return acc.expect("just set");
            }
        }
    }
    acc.expect("a grid has at least one cell")
}

struct CellInfo {
    /// `Some(d)` if the cell provably has no solution, `d` its separation.
    infeasible: Option<Rational>,
    /// Every equation enclosure contains zero (or is undefined).
    zero: bool,
    /// `Some(lo)` if every inequality enclosure is positive, `lo` the least lower bound.
    positive: Option<Rational>,
}

fn classify(block: &ExistsPlan, bx: &RatBox, prec: Precision) -> CellInfo {
    let mut sep: Option<Rational> = None;
    let mut zero = true;
    let bump = |d: Rational, sep: &mut Option<Rational>| {
        if sep.as_ref().is_none_or(|s| &d > s) {
            *sep = Some(d);
        }
    };
    for f in &block.f {
        if let Ok(v) = f.eval(bx, prec) {
            if v.lo().is_positive() {
                zero = false;
                bump(v.lo().clone(), &mut sep);
            } else if v.hi().is_negative() {
                zero = false;
                bump(-v.hi().clone(), &mut sep);
            }
        }
    }
    let mut positive: Option<Rational> = None;
    let mut all_positive = true;
    for g in &block.g {
        match g.eval(bx, prec) {
            Ok(v) => {
                if v.hi().is_negative() {
                    bump(-v.hi().clone(), &mut sep);
                }
                if v.lo().is_positive() {
                    if positive.as_ref().is_none_or(|p| v.lo() < p) {
                        positive = Some(v.lo().clone());
                    }
                } else {
                    all_positive = false;
                }
            }
            Err(_) => all_positive = false,
        }
    }
    CellInfo {
        infeasible: sep,
        zero,
        positive: if all_positive {
            Some(positive.unwrap_or_else(|| Rational::from_integer(BigInt::from(1))))
        } else {
            None
        },
    }
}

const CELL_CHUNK: usize = 4096;

/// One existential block over the parameter box `p`.
pub fn soei(block: &ExistsPlan, p: &RatBox, r: &Rational, opts: &SolverOptions) -> Evaluation {
    let m = block.base.dim();
    let n = block.f.len();
    let mut stats = SolverStats::default();
    let finish = |value, cert, stats: SolverStats| Evaluation {
        value,
        certificate: cert,
        stats,
    };
    match Grid::checked_len(&block.base, r) {
        Some(len) if len <= opts.max_cells => {}
        _ => {
            stats.grids_skipped += 1;
            return finish(TriValue::Both, None, stats);
        }
    }
    let grid = std::sync::Arc::new(Grid::cover(&block.base, r));
    let prec = Precision::for_refinement(r);

    let mut all_infeasible = true;
    let mut separation: Option<Rational> = None;
    let mut zero_cells: Vec<CellId> = Vec::new();
    let ids: Vec<CellId> = grid.cells().collect();
    for chunk in ids.chunks(CELL_CHUNK) {
        if opts.expired() {
            stats.timed_out = true;
            return finish(TriValue::Both, None, stats);
        }
        let infos = par::map(chunk, opts.parallel, |&c| classify(block, &p.product(&grid.cell_box(c)), prec));
        for (&c, info) in chunk.iter().zip(infos) {
            stats.cells += 1;
            if n == 0 {
                if let Some(lo) = info.positive {
                    return finish(TriValue::True, Some(lo), stats);
                }
            }
            match info.infeasible {
                Some(d) => {
                    if separation.as_ref().is_none_or(|s| &d < s) {
                        separation = Some(d);
                    }
                }
                None => {
                    all_infeasible = false;
                    if n > m {
                        return finish(TriValue::Both, None, stats);
                    }
                }
            }
            if info.zero {
                zero_cells.push(c);
            }
        }
    }
    if all_infeasible {
        return finish(TriValue::False, separation, stats);
    }
    if n == 0 || n != m {
        return finish(TriValue::Both, None, stats);
    }

    let mut faces: Vec<FaceId> = zero_cells.iter().flat_map(|&c| grid.faces_of_cell(c)).collect();
    faces.sort();
    faces.dedup();
    stats.faces += faces.len() as u64;
    let zero_flags = par::map(&faces, opts.parallel, |id| {
        let face = grid.face(id);
        let bx = p.product(&face.bx);
        block.f.iter().all(|f| f.eval(&bx, prec).map_or(true, |v| v.contains_zero()))
    });
    let zero_faces: Vec<FaceId> = faces
        .into_iter()
        .zip(zero_flags)
        .filter(|(_, z)| *z)
        .map(|(f, _)| f)
        .collect();
    let merged = merge_cells_touching(&grid, &zero_faces, &zero_cells);
    stats.complexes += merged.complexes.len() as u64;

    let map = FixedMap::new(block.f.clone(), p.clone());
    let dopts = DegreeOptions {
        prec,
        budget: opts.degree_budget,
        parallel: opts.parallel,
    };
    let outcomes = par::map(&merged.complexes, opts.parallel, |cx| certify_complex(block, &map, cx, p, &dopts, opts));
    let mut witness = None;
    for o in outcomes {
        match o.degree {
            Some(d) => *stats.degrees.entry(d).or_insert(0) += 1,
            None => stats.degree_failures += 1,
        }
        stats.timed_out |= o.timed_out;
        if witness.is_none() {
            witness = o.margin;
        }
    }
    match witness {
        Some(margin) => finish(TriValue::True, Some(margin), stats),
        None => finish(TriValue::Both, None, stats),
    }
}

struct ComplexOutcome {
    degree: Option<i64>,
    /// Set when the complex proves the block true.
    margin: Option<Rational>,
    timed_out: bool,
}

fn certify_complex(
    block: &ExistsPlan,
    map: &FixedMap,
    cx: &BoxComplex,
    p: &RatBox,
    dopts: &DegreeOptions,
    opts: &SolverOptions,
) -> ComplexOutcome {
    if opts.expired() {
        return ComplexOutcome {
            degree: None,
            margin: None,
            timed_out: true,
        };
    }
    let d = match degree_with(map, cx, dopts) {
        Ok(d) => d,
        Err(_) => {
            return ComplexOutcome {
                degree: None,
                margin: None,
                timed_out: false,
            }
        }
    };
    let mut out = ComplexOutcome {
        degree: Some(d.value),
        margin: None,
        timed_out: false,
    };
    let Ok(mut margin) = robustness_margin(&d) else {
        return out;
    };
    for bx in cx.cell_boxes() {
        match classify(block, &p.product(&bx), dopts.prec).positive {
            Some(lo) => {
                let half = lo / Rational::from_integer(BigInt::from(2));
                if half < margin {
                    margin = half;
                }
            }
            None => return out,
        }
    }
    out.margin = Some(margin);
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    True,
    False,
    Unknown,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::True => "TRUE",
            Outcome::False => "FALSE",
            Outcome::Unknown => "UNKNOWN",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Certificate {
    /// Perturbations below this sup-distance keep the sentence true.
    Margin(Rational),
    /// Perturbations below this sup-distance keep the sentence false.
    Separation(Rational),
}

impl Certificate {
    pub fn value(&self) -> &Rational {
        match self {
            Certificate::Margin(q) | Certificate::Separation(q) => q,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IterationRecord {
    pub iteration: u32,
    pub epsilon: Rational,
    pub value: TriValue,
    pub stats: SolverStats,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub outcome: Outcome,
    pub iterations: u32,
    pub final_epsilon: Rational,
    pub certificate: Option<Certificate>,
    pub trace: Vec<IterationRecord>,
}

#[derive(Clone, Debug)]
pub struct DriverConfig {
    /// Maximum number of iterations.
    pub budget: u32,
    pub initial_epsilon: Rational,
    pub degree_budget: usize,
    pub max_cells: usize,
    pub parallel: bool,
    /// Wall-clock limit per iteration; reaching it ends the run as UNKNOWN.
    pub iteration_time_limit: Option<Duration>,
}

impl Default for DriverConfig {
    fn default() -> Self {
        let o = SolverOptions::default();
        Self {
            budget: 20,
            initial_epsilon: Rational::from_integer(BigInt::from(1)),
            degree_budget: o.degree_budget,
            max_cells: o.max_cells,
            parallel: false,
            iteration_time_limit: None,
        }
    }
}

impl DriverConfig {
    pub fn with_budget(budget: u32) -> Self {
        Self {
            budget,
            ..Self::default()
        }
    }
}

/// Runs `CheckSat(S, (), ε)` for `ε = ε₀, ε₀/2, …` until a singleton
/// answer or until the budget is spent.
pub fn quasi_decide(f: &Formula, cfg: &DriverConfig) -> Result<Verdict, SolveError> {
    if let Some(v) = f.free_vars().into_iter().next() {
        return Err(SolveError::FreeVariable(v));
    }
    if cfg.budget == 0 {
        return Err(SolveError::ZeroBudget);
    }
    if !cfg.initial_epsilon.is_positive() {
        return Err(SolveError::NonPositiveRefinement);
    }
    let view = ClassB::new(f).map_err(SolveError::NotInClass)?;
    let plan = Plan::new(&view, &[])?;
    let two = Rational::from_integer(BigInt::from(2));
    let mut eps = cfg.initial_epsilon.clone();
    let mut trace = Vec::new();
    for iteration in 1..=cfg.budget {
        let opts = SolverOptions {
            degree_budget: cfg.degree_budget,
            max_cells: cfg.max_cells,
            parallel: cfg.parallel,
            deadline: cfg.iteration_time_limit.map(|d| Instant::now() + d),
        };
        let e = checksat(&plan, &RatBox::empty(), &eps, &opts);
        let timed_out = e.stats.timed_out;
        trace.push(IterationRecord {
            iteration,
            epsilon: eps.clone(),
            value: e.value,
            stats: e.stats,
        });
        let certificate = match e.value {
            TriValue::True => e.certificate.map(Certificate::Margin),
            TriValue::False => e.certificate.map(Certificate::Separation),
            TriValue::Both => None,
        };
        if e.value.is_singleton() || timed_out {
            return Ok(Verdict {
                outcome: match e.value {
                    TriValue::True => Outcome::True,
                    TriValue::False => Outcome::False,
                    TriValue::Both => Outcome::Unknown,
                },
                iterations: iteration,
                final_epsilon: eps,
                certificate,
                trace,
            });
        }
        if iteration < cfg.budget {
            eps /= two.clone();
        }
    }
    Ok(Verdict {
        outcome: Outcome::Unknown,
        iterations: cfg.budget,
        final_epsilon: eps,
        certificate: None,
        trace,
    })
}

/// `CheckSat` on a formula whose free variables `params` range over `p`.
pub fn checksat_formula(
    f: &Formula,
    params: &[String],
    p: &RatBox,
    r: &Rational,
    opts: &SolverOptions,
) -> Result<Evaluation, SolveError> {
    if p.dim() != params.len() {
        return Err(SolveError::ParamsMismatch {
            expected: params.len(),
            got: p.dim(),
        });
    }
    if !r.is_positive() {
        return Err(SolveError::NonPositiveRefinement);
    }
    if let Some(v) = f.free_vars().into_iter().find(|v| !params.contains(v)) {
        return Err(SolveError::FreeVariable(v));
    }
    let view = ClassB::new(f).map_err(SolveError::NotInClass)?;
    let plan = Plan::new(&view, params)?;
    Ok(checksat(&plan, p, r, opts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse, parse_with_params};
    use crate::interval::{rat, ratio};

    const ALL: [TriValue; 3] = [TriValue::True, TriValue::False, TriValue::Both];

    #[test]
    fn lattice_tables() {
        use TriValue::*;
        assert_eq!(True.and(True), True);
        assert_eq!(False.or(False), False);
        assert_eq!(False.and(Both), False);
        assert_eq!(True.and(Both), Both);
        assert_eq!(True.or(Both), True);
        assert_eq!(Both.or(Both), Both);
    }

    #[test]
    fn lattice_laws() {
        for a in ALL {
            for b in ALL {
                assert_eq!(a.and(b), b.and(a));
                assert_eq!(a.or(b), b.or(a));
                for c in ALL {
                    assert_eq!(a.and(b).and(c), a.and(b.and(c)));
                    assert_eq!(a.or(b).or(c), a.or(b.or(c)));
                }
                // widening an operand never narrows the result
                for u in [true, false] {
                    assert!(!a.and(b).contains(u) || a.and(TriValue::Both).contains(u));
                    assert!(!a.or(b).contains(u) || a.or(TriValue::Both).contains(u));
                }
            }
        }
    }

    fn run(src: &str, r: Rational) -> Evaluation {
        let f = parse(src).unwrap();
        checksat_formula(&f, &[], &RatBox::empty(), &r, &SolverOptions::default()).unwrap()
    }

    #[test]
    fn sine_zero_is_true_at_unit_refinement() {
        let e = run("exists x in [-1,1] . sin(x) = 0", rat(1));
        assert_eq!(e.value, TriValue::True);
        assert!(e.certificate.unwrap().is_positive());
    }

    #[test]
    fn shifted_line_is_false() {
        let e = run("exists x in [0,1] . x - 2 = 0", rat(1));
        assert_eq!(e.value, TriValue::False);
        assert_eq!(e.certificate, Some(rat(1)));
    }

    #[test]
    fn tangency_is_never_decided() {
        for k in 0..8 {
            let r = ratio(1, 1 << k);
            assert_eq!(run("exists x in [1,2] . sin(x) = 1", r).value, TriValue::Both);
        }
    }

    #[test]
    fn duplicated_equation_is_indefinite() {
        for k in 0..8 {
            let r = ratio(1, 1 << k);
            assert_eq!(run("exists x in [0,2] . x - 1 = 0 and x - 1 = 0", r).value, TriValue::Both);
        }
    }

    #[test]
    fn universal_over_existential() {
        let e = run("forall x in [0,1] . exists y in [-2,2] . y - x = 0", ratio(1, 2));
        assert_eq!(e.value, TriValue::True);
        let e = run("forall x in [0,1] . exists y in [0,1] . y - 2 = 0", ratio(1, 2));
        assert_eq!(e.value, TriValue::False);
    }

    #[test]
    fn conjunction_with_false_side() {
        let e = run("(exists x in [-1,1] . sin(x) = 0) and (exists x in [0,1] . x - 2 = 0)", rat(1));
        assert_eq!(e.value, TriValue::False);
    }

    #[test]
    fn inequalities_only_block() {
        assert_eq!(run("exists x in [0,1] . x - 1/2 >= 0", ratio(1, 4)).value, TriValue::True);
        assert_eq!(run("exists x in [0,1] . x - 2 >= 0", rat(1)).value, TriValue::False);
    }

    #[test]
    fn inequality_recheck_on_complex() {
        let src = "exists x in [0,2] . x^2 - 2 = 0 and x - 1 >= 0";
        let e = (0..6).map(|k| run(src, ratio(1, 1 << k))).find(|e| e.value.is_singleton()).unwrap();
        assert_eq!(e.value, TriValue::True);
        let src = "exists x in [0,2] . x^2 - 2 = 0 and 1 - x >= 0";
        let e = (0..6).map(|k| run(src, ratio(1, 1 << k))).find(|e| e.value.is_singleton()).unwrap();
        assert_eq!(e.value, TriValue::False);
    }

    #[test]
    fn parameters_are_projected() {
        let f = parse_with_params("exists y in [-2,2] . y - p = 0", &["q", "p"]).unwrap();
        let params = ["q".to_string(), "p".to_string()];
        let p = RatBox::new(vec![RatInterval::from_ints(5, 6).unwrap(), RatInterval::from_ints(0, 1).unwrap()]);
        let e = checksat_formula(&f, &params, &p, &rat(1), &SolverOptions::default()).unwrap();
        assert_eq!(e.value, TriValue::True);
    }

    #[test]
    fn driver_examples() {
        let v = quasi_decide(&parse("exists x in [0,1] . x - 2 = 0").unwrap(), &DriverConfig::default()).unwrap();
        assert_eq!((v.outcome, v.iterations), (Outcome::False, 1));
        let v = quasi_decide(&parse("exists x in [-1,1] . sin(x) = 0").unwrap(), &DriverConfig::default()).unwrap();
        assert_eq!(v.outcome, Outcome::True);
        let v = quasi_decide(&parse("exists x in [1,2] . sin(x) = 1").unwrap(), &DriverConfig::with_budget(6)).unwrap();
        assert_eq!(v.outcome, Outcome::Unknown);
        assert_eq!(v.trace.len(), 6);
        assert!(v.trace.iter().all(|t| t.value == TriValue::Both));
    }

    #[test]
    fn driver_rejects_bad_input() {
        let f = parse("exists x in [0,1], y in [0,1] . x - y = 0").unwrap();
        assert!(matches!(quasi_decide(&f, &DriverConfig::default()), Err(SolveError::NotInClass(_))));
        let f = parse("exists x in [0,1] . x = 0").unwrap();
        assert!(matches!(quasi_decide(&f, &DriverConfig::with_budget(0)), Err(SolveError::ZeroBudget)));
    }
}
