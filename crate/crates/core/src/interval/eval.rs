use num_traits::{Signed, ToPrimitive};

use super::transcendental::{cos_interval, exp_interval, pi_enclosure, sin_interval, sqrt_interval};
use super::{EvalError, Precision, RatBox, RatInterval, Rational};
use crate::formula::{Func, Term};

#[derive(Clone, Debug)]
enum Node {
    Const(Rational),
    Pi,
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, u32),
    Apply(Func, Box<Node>),
}

/// A term compiled against a fixed variable order, ready for repeated
/// evaluation over boxes of that arity.
#[derive(Clone, Debug)]
pub struct Program {
    root: Node,
    arity: usize,
}

impl Program {
    pub fn compile(term: &Term, vars: &[String]) -> Result<Self, EvalError> {
        Ok(Self {
            root: lower(term, vars)?,
            arity: vars.len(),
        })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn eval(&self, b: &RatBox, prec: Precision) -> Result<RatInterval, EvalError> {
        if b.dim() != self.arity {
            return Err(EvalError::DimensionMismatch {
                expected: self.arity,
                got: b.dim(),
            });
        }
        eval_node(&self.root, b, prec)
    }

    /// Plain floating-point evaluation; unverified, for test oracles.
    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        eval_node_f64(&self.root, x)
    }

    /// Per-axis flag telling whether the variable occurs in the term.
    pub fn occurs(&self) -> Vec<bool> {
        let mut seen = vec![false; self.arity];
        mark(&self.root, &mut seen);
        seen
    }
}

fn lower(t: &Term, vars: &[String]) -> Result<Node, EvalError> {
    let b = |t: &Term| lower(t, vars).map(Box::new);
    Ok(match t {
        Term::Const(q) => Node::Const(q.clone()),
        Term::Pi => Node::Pi,
        Term::Var(v) => Node::Var(
            vars.iter()
                .position(|w| w == v)
                .ok_or_else(|| EvalError::UnknownVariable(v.clone()))?,
        ),
        Term::Neg(a) => Node::Neg(b(a)?),
        Term::Add(x, y) => Node::Add(b(x)?, b(y)?),
        Term::Sub(x, y) => Node::Sub(b(x)?, b(y)?),
        Term::Mul(x, y) => Node::Mul(b(x)?, b(y)?),
        Term::Div(x, y) => Node::Div(b(x)?, b(y)?),
        Term::Pow(x, n) => Node::Pow(b(x)?, *n),
        Term::Apply(f, x) => Node::Apply(*f, b(x)?),
    })
}

fn mark(n: &Node, seen: &mut [bool]) {
    match n {
        Node::Const(_) | Node::Pi => {}
        Node::Var(i) => seen[*i] = true,
        Node::Neg(a) | Node::Pow(a, _) | Node::Apply(_, a) => mark(a, seen),
        Node::Add(a, c) | Node::Sub(a, c) | Node::Mul(a, c) | Node::Div(a, c) => {
            mark(a, seen);
            mark(c, seen);
        }
    }
}

fn eval_node(n: &Node, b: &RatBox, prec: Precision) -> Result<RatInterval, EvalError> {
    Ok(match n {
        Node::Const(q) => RatInterval::point(q.clone()),
        Node::Pi => pi_enclosure(prec),
        Node::Var(i) => b.get(*i).clone(),
        Node::Neg(a) => -&eval_node(a, b, prec)?,
        Node::Add(x, y) => &eval_node(x, b, prec)? + &eval_node(y, b, prec)?,
        Node::Sub(x, y) => &eval_node(x, b, prec)? - &eval_node(y, b, prec)?,
        Node::Mul(x, y) => &eval_node(x, b, prec)? * &eval_node(y, b, prec)?,
        Node::Div(x, y) => eval_node(x, b, prec)?.checked_div(&eval_node(y, b, prec)?)?,
        Node::Pow(x, k) => eval_node(x, b, prec)?.powi(*k),
        Node::Apply(f, x) => {
            let a = eval_node(x, b, prec)?;
            match f {
                Func::Exp => exp_interval(&a, prec)?,
                Func::Sin => sin_interval(&a, prec),
                Func::Cos => cos_interval(&a, prec),
                Func::Sqrt => sqrt_interval(&a, prec)?,
            }
        }
    })
}

fn eval_node_f64(n: &Node, x: &[f64]) -> f64 {
    match n {
        Node::Const(q) => q.to_f64().unwrap_or(f64::NAN),
        Node::Pi => std::f64::consts::PI,
        Node::Var(i) => x[*i],
        Node::Neg(a) => -eval_node_f64(a, x),
        Node::Add(a, c) => eval_node_f64(a, x) + eval_node_f64(c, x),
        Node::Sub(a, c) => eval_node_f64(a, x) - eval_node_f64(c, x),
        Node::Mul(a, c) => eval_node_f64(a, x) * eval_node_f64(c, x),
        Node::Div(a, c) => eval_node_f64(a, x) / eval_node_f64(c, x),
        Node::Pow(a, k) => eval_node_f64(a, x).powi(*k as i32),
        Node::Apply(f, a) => {
            let v = eval_node_f64(a, x);
            match f {
                Func::Exp => v.exp(),
                Func::Sin => v.sin(),
                Func::Cos => v.cos(),
                Func::Sqrt => v.sqrt(),
            }
        }
    }
}

/// Enclosure of a single term; `vars` fixes the meaning of the box axes.
pub fn eval_term(
    t: &Term,
    vars: &[String],
    b: &RatBox,
    prec: Precision,
) -> Result<RatInterval, EvalError> {
    Program::compile(t, vars)?.eval(b, prec)
}

/// Componentwise enclosure; an empty list yields the 0-dimensional box.
pub fn eval_vector(ts: &[Program], b: &RatBox, prec: Precision) -> Result<RatBox, EvalError> {
    ts.iter().map(|t| t.eval(b, prec)).collect()
}

/// Sound test for `0 ∉ f(B)`: true only when the enclosure box misses the origin.
pub fn excludes_zero(ts: &[Program], b: &RatBox, prec: Precision) -> Result<bool, EvalError> {
    for t in ts {
        if !t.eval(b, prec)?.contains_zero() {
            return Ok(true);
        }
    }
    Ok(false)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IneqBand {
    /// Every component enclosure lies in `(0, ∞)`.
    AllPositive,
    /// Some component enclosure lies in `(-∞, 0)`.
    DisjointFromNonneg,
    Undecided,
}

pub fn ineq_band(ts: &[Program], b: &RatBox, prec: Precision) -> Result<IneqBand, EvalError> {
    let mut all_positive = true;
    for t in ts {
        let v = t.eval(b, prec)?;
        if v.hi().is_negative() {
            return Ok(IneqBand::DisjointFromNonneg);
        }
        if !v.lo().is_positive() {
            all_positive = false;
        }
    }
    Ok(if all_positive {
        IneqBand::AllPositive
    } else {
        IneqBand::Undecided
    })
}
