//! Topological degree `deg(f, A°, 0)` of a map `f: R^m -> R^m` over a box
//! complex, by recursive boundary reduction with interval sign certificates.
//!
//! The boundary of the complex is split until every piece has some
//! component `f_j` whose enclosure excludes zero. With `i*` the component
//! certified on the most pieces, the degree equals `(-1)^pos(i*)` times the
//! degree of `f` without `f_{i*}` over the pieces where `f_{i*} > 0`. The
//! recursion bottoms out at a 0-chain, whose degree is its coefficient sum.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::geometry::BoxComplex;
use crate::interval::{EvalError, Precision, Program, RatBox, RatInterval, Rational};
use crate::par;

/// The components of `f`, with parameters (leading arguments) ranging over
/// a fixed box.
#[derive(Clone, Debug)]
pub struct FixedMap {
    programs: Vec<Program>,
    params: RatBox,
}

impl FixedMap {
    /// # Panics
    /// If some program's arity differs from `params.dim() + programs.len()`.
    pub fn new(programs: Vec<Program>, params: RatBox) -> Self {
        let arity = params.dim() + programs.len();
        assert!(programs.iter().all(|p| p.arity() == arity), "map arity mismatch");
        Self { programs, params }
    }

    pub fn from_terms(terms: &[crate::formula::Term], vars: &[String]) -> Result<Self, EvalError> {
        let programs = terms
            .iter()
            .map(|t| Program::compile(t, vars))
            .collect::<Result<Vec<_>, _>>()?;
        if programs.len() != vars.len() {
            return Err(EvalError::DimensionMismatch {
                expected: vars.len(),
                got: programs.len(),
            });
        }
        Ok(Self::new(programs, RatBox::empty()))
    }

    pub fn dim(&self) -> usize {
        self.programs.len()
    }

    pub fn params(&self) -> &RatBox {
        &self.params
    }

    /// Enclosure of component `j` over `params × bx`; `None` where undefined.
    pub fn eval(&self, j: usize, bx: &RatBox, prec: Precision) -> Option<RatInterval> {
        self.programs[j].eval(&self.params.product(bx), prec).ok()
    }

    pub fn eval_f64(&self, j: usize, x: &[f64]) -> f64 {
        let mut args: Vec<f64> = self
            .params
            .center()
            .iter()
            .map(|c| c.to_f64().unwrap_or(f64::NAN))
            .collect();
        args.extend_from_slice(x);
        self.programs[j].eval_f64(&args)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DegreeOptions {
    pub prec: Precision,
    /// Total number of piece subdivisions allowed.
    pub budget: usize,
    pub parallel: bool,
}

impl DegreeOptions {
    pub fn new(prec: Precision, budget: usize) -> Self {
        Self {
            prec,
            budget,
            parallel: false,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DegreeStats {
    pub subdivisions: usize,
    pub precision_raises: usize,
    pub certified_pieces: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeResult {
    pub value: i64,
    /// Verified lower bound on `min |f|_∞` over the boundary of the complex.
    pub boundary_min_lb: Rational,
    pub stats: DegreeStats,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DegreeError {
    #[error("boundary certification did not finish within budget")]
    Failure(DegreeStats),
    #[error("map has {map} components but the complex has dimension {complex}")]
    DimensionMismatch { map: usize, complex: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Cell {
    bx: RatBox,
    free: Vec<usize>,
    coeff: i64,
}

/// Extra bits tried on a point before giving up; pieces narrower than
/// `2^-(p + MAX_EXTRA_BITS)` are not split further.
const MAX_EXTRA_BITS: u32 = 64;

pub fn degree(map: &FixedMap, complex: &BoxComplex, prec: Precision, budget: usize) -> Result<DegreeResult, DegreeError> {
    degree_with(map, complex, &DegreeOptions::new(prec, budget))
}

pub fn degree_with(map: &FixedMap, complex: &BoxComplex, opts: &DegreeOptions) -> Result<DegreeResult, DegreeError> {
    let m = complex.dim();
    if map.dim() != m {
        return Err(DegreeError::DimensionMismatch {
            map: map.dim(),
            complex: m,
        });
    }
    let top: Vec<Cell> = complex
        .cell_boxes()
        .into_iter()
        .map(|bx| Cell {
            bx,
            free: (0..m).collect(),
            coeff: 1,
        })
        .collect();
    let mut run = Run {
        map,
        opts,
        budget: opts.budget,
        stats: DegreeStats::default(),
        boundary_min_lb: None,
    };
    let comps: Vec<usize> = (0..m).collect();
    let value = run.reduce(top, &comps)?;
    Ok(DegreeResult {
        value,
        boundary_min_lb: run.boundary_min_lb.unwrap_or_else(Rational::zero),
        stats: run.stats,
    })
}

struct Run<'a> {
    map: &'a FixedMap,
    opts: &'a DegreeOptions,
    budget: usize,
    stats: DegreeStats,
    boundary_min_lb: Option<Rational>,
}

struct Certified {
    cell: Cell,
    /// `(component, positive?)` for every component whose enclosure excludes 0.
    signs: Vec<(usize, bool)>,
    /// Largest distance from 0 among the certified enclosures.
    margin: Rational,
}

impl Run<'_> {
    fn reduce(&mut self, chain: Vec<Cell>, comps: &[usize]) -> Result<i64, DegreeError> {
        if comps.is_empty() {
            return Ok(chain.iter().map(|c| c.coeff).sum());
        }
        let top_level = self.boundary_min_lb.is_none();
        let faces = cancel(refine(boundary(&chain)));
        let pieces = self.certify(faces, comps)?;
        if top_level {
            let lb = pieces.iter().map(|p| p.margin.clone()).min();
            self.boundary_min_lb = Some(lb.unwrap_or_else(Rational::zero));
        }
        let mut counts = vec![0usize; comps.len()];
        for p in &pieces {
            for &(j, _) in &p.signs {
                counts[comps.iter().position(|&c| c == j).expect("certified on a live component")] += 1;
            }
        }
        let mut pos = 0;
        for (k, &n) in counts.iter().enumerate() {
            if n > counts[pos] {
                pos = k;
            }
        }
        let star = comps[pos];
        let gamma: Vec<Cell> = pieces
            .into_iter()
            .filter(|p| p.signs.contains(&(star, true)))
            .map(|p| p.cell)
            .collect();
        let rest: Vec<usize> = comps.iter().copied().filter(|&c| c != star).collect();
        let sign = if pos % 2 == 0 { 1 } else { -1 };
        Ok(sign * self.reduce(gamma, &rest)?)
    }

    fn certify(&mut self, cells: Vec<Cell>, comps: &[usize]) -> Result<Vec<Certified>, DegreeError> {
        let mut out = Vec::with_capacity(cells.len());
        let mut pending: Vec<(Cell, u32)> = cells.into_iter().map(|c| (c, 0)).collect();
        while !pending.is_empty() {
            let base = self.opts.prec;
            let map = self.map;
            let results = par::map(&pending, self.opts.parallel, |(cell, extra)| {
                signs_on(map, comps, &cell.bx, base.raised(*extra))
            });
            let mut next = Vec::new();
            for ((cell, extra), (signs, margin)) in pending.into_iter().zip(results) {
                if !signs.is_empty() {
                    self.stats.certified_pieces += 1;
                    out.push(Certified { cell, signs, margin });
                    continue;
                }
                let axes: Vec<usize> = cell.free.iter().copied().filter(|&a| !cell.bx.get(a).is_point()).collect();
                if axes.is_empty() {
                    if extra >= MAX_EXTRA_BITS {
                        return Err(DegreeError::Failure(self.stats));
                    }
                    self.stats.precision_raises += 1;
                    next.push((cell, extra + 8));
                    continue;
                }
                let floor = Rational::new(BigInt::one(), BigInt::one() << (base.bits() + MAX_EXTRA_BITS) as usize);
                if self.budget == 0 || axes.iter().all(|&a| cell.bx.get(a).width() < floor) {
                    return Err(DegreeError::Failure(self.stats));
                }
                self.budget -= 1;
                self.stats.subdivisions += 1;
                let mut parts = vec![cell.bx.clone()];
                for &a in &axes {
                    parts = parts
                        .into_iter()
                        .flat_map(|b| {
                            let (l, r) = b.bisect(a);
                            [l, r]
                        })
                        .collect();
                }
                next.extend(parts.into_iter().map(|bx| {
                    (
                        Cell {
                            bx,
                            free: cell.free.clone(),
                            coeff: cell.coeff,
                        },
                        extra,
                    )
                }));
            }
            pending = next;
        }
        Ok(out)
    }
}

fn signs_on(map: &FixedMap, comps: &[usize], bx: &RatBox, prec: Precision) -> (Vec<(usize, bool)>, Rational) {
    let mut signs = Vec::new();
    let mut margin = Rational::zero();
    for &j in comps {
        if let Some(v) = map.eval(j, bx, prec) {
            let d = if v.lo().is_positive() {
                signs.push((j, true));
                v.lo().clone()
            } else if v.hi().is_negative() {
                signs.push((j, false));
                -v.hi().clone()
            } else {
                continue;
            };
            if d > margin {
                margin = d;
            }
        }
    }
    (signs, margin)
}

/// Oriented boundary: for free axes `a_0 < a_1 < …`, the face at the upper
/// end of `a_j` carries `(-1)^j` and the lower one `-(-1)^j`.
fn boundary(chain: &[Cell]) -> Vec<Cell> {
    let mut out = Vec::with_capacity(chain.len() * 2 * chain.first().map_or(0, |c| c.free.len()));
    for c in chain {
        for (j, &a) in c.free.iter().enumerate() {
            let s = if j % 2 == 0 { c.coeff } else { -c.coeff };
            let free: Vec<usize> = c.free.iter().copied().filter(|&b| b != a).collect();
            let iv = c.bx.get(a);
            for (end, sign) in [(iv.hi().clone(), s), (iv.lo().clone(), -s)] {
                let mut bx = c.bx.clone();
                bx.set(a, RatInterval::point(end));
                out.push(Cell {
                    bx,
                    free: free.clone(),
                    coeff: sign,
                });
            }
        }
    }
    out
}

/// Splits faces lying in a common hyperplane at each other's breakpoints so
/// that overlapping pieces become identical and can cancel.
fn refine(faces: Vec<Cell>) -> Vec<Cell> {
    type Plane = (Vec<usize>, Vec<RatInterval>);
    let mut groups: BTreeMap<Plane, Vec<Cell>> = BTreeMap::new();
    for f in faces {
        let fixed: Vec<RatInterval> = (0..f.bx.dim())
            .filter(|a| !f.free.contains(a))
            .map(|a| f.bx.get(a).clone())
            .collect();
        groups.entry((f.free.clone(), fixed)).or_default().push(f);
    }
    let mut out = Vec::new();
    for ((free, _), group) in groups {
        if group.len() == 1 {
            out.extend(group);
            continue;
        }
        let cuts: Vec<Vec<Rational>> = free
            .iter()
            .map(|&a| {
                let mut v: Vec<Rational> = group
                    .iter()
                    .flat_map(|f| [f.bx.get(a).lo().clone(), f.bx.get(a).hi().clone()])
                    .collect();
                v.sort();
                v.dedup();
                v
            })
            .collect();
        for f in group {
            let mut parts = vec![f.bx.clone()];
            for (k, &a) in free.iter().enumerate() {
                let iv = f.bx.get(a);
                let start = cuts[k].partition_point(|c| c <= iv.lo());
                let end = cuts[k].partition_point(|c| c < iv.hi());
                if start >= end {
                    continue;
                }
                let mut points = vec![iv.lo().clone()];
                points.extend(cuts[k][start..end].iter().cloned());
                points.push(iv.hi().clone());
                parts = parts
                    .into_iter()
                    .flat_map(|b| {
                        points
                            .windows(2)
                            .map(|w| {
                                let mut c = b.clone();
                                c.set(a, RatInterval::new(w[0].clone(), w[1].clone()).expect("sorted cuts"));
                                c
                            })
                            .collect::<Vec<_>>()
                    })
                    .collect();
            }
            out.extend(parts.into_iter().map(|bx| Cell {
                bx,
                free: f.free.clone(),
                coeff: f.coeff,
            }));
        }
    }
    out
}

fn cancel(cells: Vec<Cell>) -> Vec<Cell> {
    let mut acc: BTreeMap<(Vec<usize>, RatBox), i64> = BTreeMap::new();
    for c in cells {
        *acc.entry((c.free, c.bx)).or_insert(0) += c.coeff;
    }
    acc.into_iter()
        .filter(|(_, k)| *k != 0)
        .map(|((free, bx), coeff)| Cell { bx, free, coeff })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MarginError {
    #[error("degree is zero; no zero is guaranteed")]
    ZeroDegree,
}

/// A rational `ε` such that every continuous map within sup-distance `ε` of
/// `f` still has a zero in the complex: half the certified boundary bound.
pub fn robustness_margin(result: &DegreeResult) -> Result<Rational, MarginError> {
    if result.value == 0 || !result.boundary_min_lb.is_positive() {
        return Err(MarginError::ZeroDegree);
    }
    Ok(&result.boundary_min_lb / Rational::from_integer(BigInt::from(2)))
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("winding oracle needs a planar map, got dimension {0}")]
    NotPlanar(usize),
    #[error("sampled boundary point ({0}, {1}) is too close to a zero")]
    NearZero(f64, f64),
}

/// Floating-point winding number of `f` along the oriented boundary of a
/// planar complex; unverified, for cross-checking [`degree`].
pub fn winding_oracle_2d(map: &FixedMap, complex: &BoxComplex, samples: usize) -> Result<i64, OracleError> {
    if complex.dim() != 2 || map.dim() != 2 {
        return Err(OracleError::NotPlanar(complex.dim()));
    }
    let samples = samples.max(2);
    let mut total = 0.0;
    for (face, outward) in complex.boundary() {
        let along = 1 - face.axis;
        let forward = (i64::from(outward) * if face.axis == 0 { 1 } else { -1 }) > 0;
        let iv = face.bx.get(along);
        let (a, b) = (iv.lo().to_f64().unwrap_or(f64::NAN), iv.hi().to_f64().unwrap_or(f64::NAN));
        let (start, end) = if forward { (a, b) } else { (b, a) };
        let fixed = face.value.to_f64().unwrap_or(f64::NAN);
        let mut prev: Option<f64> = None;
        for k in 0..=samples {
            let t = start + (end - start) * (k as f64) / (samples as f64);
            let mut x = [0.0; 2];
            x[face.axis] = fixed;
            x[along] = t;
            let (u, v) = (map.eval_f64(0, &x), map.eval_f64(1, &x));
            if u.hypot(v) < 1e-12 || !u.is_finite() || !v.is_finite() {
                return Err(OracleError::NearZero(x[0], x[1]));
            }
            let ang = v.atan2(u);
            if let Some(p) = prev {
                let mut d = ang - p;
                while d > PI {
                    d -= 2.0 * PI;
                }
                while d <= -PI {
                    d += 2.0 * PI;
                }
                total += d;
            }
            prev = Some(ang);
        }
    }
    Ok((total / (2.0 * PI)).round() as i64)
}
