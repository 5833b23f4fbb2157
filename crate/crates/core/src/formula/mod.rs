//! Bounded first-order sentences over the reals.
//!
//! Atoms are kept in normal form `t = 0` or `t >= 0`; the parser rewrites
//! `a = b` to `a - b = 0`, `a >= b` to `a - b >= 0` and `a <= b` to
//! `b - a >= 0`, dropping a literal `0` right-hand side.

mod classb;
mod distance;
mod parser;
mod poly;

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::interval::{RatInterval, Rational};

pub use classb::{validate_class_b, Block, BlockShape, ClassB, ClassBReport};
pub use distance::{distance_enclosure, same_structure, Distance, DistanceEnclosure};
pub use parser::{parse, parse_with_params, ParseError, ParseErrorKind};
pub use poly::expand_polynomial;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Const(Rational),
    Pi,
    Var(String),
    Neg(Box<Term>),
    Add(Box<Term>, Box<Term>),
    Sub(Box<Term>, Box<Term>),
    Mul(Box<Term>, Box<Term>),
    Div(Box<Term>, Box<Term>),
    Pow(Box<Term>, u32),
    Apply(Func, Box<Term>),
}

#[allow(clippy::should_implement_trait)]
impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn constant(q: Rational) -> Term {
        Term::Const(q)
    }

    pub fn add(a: Term, b: Term) -> Term {
        Term::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: Term, b: Term) -> Term {
        Term::Sub(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Term, b: Term) -> Term {
        Term::Mul(Box::new(a), Box::new(b))
    }

    pub fn pow(a: Term, n: u32) -> Term {
        Term::Pow(Box::new(a), n)
    }

    pub fn apply(f: Func, a: Term) -> Term {
        Term::Apply(f, Box::new(a))
    }

    pub fn vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Const(_) | Term::Pi => {}
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Neg(a) | Term::Pow(a, _) | Term::Apply(_, a) => a.vars(out),
            Term::Add(a, b) | Term::Sub(a, b) | Term::Mul(a, b) | Term::Div(a, b) => {
                a.vars(out);
                b.vars(out);
            }
        }
    }

    /// Replaces variables by constants from `env` simultaneously.
    pub fn substitute(&self, env: &[(String, Rational)]) -> Term {
        let s = |t: &Term| Box::new(t.substitute(env));
        match self {
            Term::Var(v) => match env.iter().find(|(n, _)| n == v) {
                Some((_, q)) => Term::Const(q.clone()),
                None => self.clone(),
            },
            Term::Const(_) | Term::Pi => self.clone(),
            Term::Neg(a) => Term::Neg(s(a)),
            Term::Add(a, b) => Term::Add(s(a), s(b)),
            Term::Sub(a, b) => Term::Sub(s(a), s(b)),
            Term::Mul(a, b) => Term::Mul(s(a), s(b)),
            Term::Div(a, b) => Term::Div(s(a), s(b)),
            Term::Pow(a, n) => Term::Pow(s(a), *n),
            Term::Apply(f, a) => Term::Apply(*f, s(a)),
        }
    }

    pub fn rename(&self, from: &str, to: &str) -> Term {
        let r = |t: &Term| Box::new(t.rename(from, to));
        match self {
            Term::Var(v) if v == from => Term::Var(to.to_string()),
            Term::Var(_) | Term::Const(_) | Term::Pi => self.clone(),
            Term::Neg(a) => Term::Neg(r(a)),
            Term::Add(a, b) => Term::Add(r(a), r(b)),
            Term::Sub(a, b) => Term::Sub(r(a), r(b)),
            Term::Mul(a, b) => Term::Mul(r(a), r(b)),
            Term::Div(a, b) => Term::Div(r(a), r(b)),
            Term::Pow(a, n) => Term::Pow(r(a), *n),
            Term::Apply(f, a) => Term::Apply(*f, r(a)),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Term::Add(..) | Term::Sub(..) => 1,
            Term::Mul(..) | Term::Div(..) => 2,
            Term::Neg(_) => 3,
            Term::Pow(..) => 4,
            _ => 5,
        }
    }

    fn write_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let own = self.precedence();
        if own < min {
            write!(f, "(")?;
            self.write_prec(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Term::Const(q) => write_const(f, q),
            Term::Pi => write!(f, "pi"),
            Term::Var(v) => write!(f, "{v}"),
            Term::Neg(a) => {
                write!(f, "-")?;
                a.write_prec(f, 3)
            }
            Term::Add(a, b) | Term::Sub(a, b) | Term::Mul(a, b) | Term::Div(a, b) => {
                let op = match self {
                    Term::Add(..) => "+",
                    Term::Sub(..) => "-",
                    Term::Mul(..) => "*",
                    _ => "/",
                };
                a.write_prec(f, own)?;
                write!(f, " {op} ")?;
                // left-associative: a right operand of equal precedence needs parentheses
                b.write_prec(f, own + 1)
            }
            Term::Pow(a, n) => {
                a.write_prec(f, 5)?;
                write!(f, "^{n}")
            }
            Term::Apply(func, a) => {
                write!(f, "{}(", func.name())?;
                a.write_prec(f, 0)?;
                write!(f, ")")
            }
        }
    }
}

fn write_const(f: &mut fmt::Formatter<'_>, q: &Rational) -> fmt::Result {
    if q.is_integer() && !q.is_negative() {
        write!(f, "{}", q.numer())
    } else {
        write!(f, "({q})")
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_prec(f, 0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rel {
    /// `t = 0`
    Eq,
    /// `t >= 0`
    Geq,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Atom {
    pub rel: Rel,
    pub term: Term,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Quantifier {
    Exists,
    ForAll,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Binding {
    pub var: String,
    pub range: RatInterval,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom(Atom),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Quant {
        q: Quantifier,
        bindings: Vec<Binding>,
        body: Box<Formula>,
    },
}

impl Formula {
    pub fn eq(term: Term) -> Formula {
        Formula::Atom(Atom { rel: Rel::Eq, term })
    }

    pub fn geq(term: Term) -> Formula {
        Formula::Atom(Atom { rel: Rel::Geq, term })
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn exists(bindings: Vec<Binding>, body: Formula) -> Formula {
        Formula::Quant {
            q: Quantifier::Exists,
            bindings,
            body: Box::new(body),
        }
    }

    pub fn forall(bindings: Vec<Binding>, body: Formula) -> Formula {
        Formula::Quant {
            q: Quantifier::ForAll,
            bindings,
            body: Box::new(body),
        }
    }

    /// Free variables, in order of first occurrence (left to right).
    pub fn free_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut Vec<String>) {
        match self {
            Formula::Atom(a) => {
                let mut vs = BTreeSet::new();
                a.term.vars(&mut vs);
                // occurrence order, not alphabetical
                let mut ordered = Vec::new();
                occurrence_order(&a.term, &mut ordered);
                for v in ordered {
                    if !bound.contains(&v) && !out.contains(&v) {
                        out.push(v);
                    }
                }
            }
            Formula::Not(a) => a.collect_free(bound, out),
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Formula::Quant { bindings, body, .. } => {
                let before = bound.len();
                bound.extend(bindings.iter().map(|b| b.var.clone()));
                body.collect_free(bound, out);
                bound.truncate(before);
            }
        }
    }

    pub fn is_sentence(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Visits atoms left to right together with the bindings in scope,
    /// outermost first.
    pub fn for_each_atom<'a>(&'a self, f: &mut dyn FnMut(&'a Atom, &[&'a Binding])) {
        fn go<'a>(
            node: &'a Formula,
            scope: &mut Vec<&'a Binding>,
            f: &mut dyn FnMut(&'a Atom, &[&'a Binding]),
        ) {
            match node {
                Formula::Atom(a) => f(a, scope),
                Formula::Not(a) => go(a, scope, f),
                Formula::And(a, b) | Formula::Or(a, b) => {
                    go(a, scope, f);
                    go(b, scope, f);
                }
                Formula::Quant { bindings, body, .. } => {
                    let n = scope.len();
                    scope.extend(bindings.iter());
                    go(body, scope, f);
                    scope.truncate(n);
                }
            }
        }
        go(self, &mut Vec::new(), f)
    }

    pub fn map_terms(&self, f: &mut dyn FnMut(&Term) -> Term) -> Formula {
        match self {
            Formula::Atom(a) => Formula::Atom(Atom {
                rel: a.rel,
                term: f(&a.term),
            }),
            Formula::Not(a) => Formula::Not(Box::new(a.map_terms(f))),
            Formula::And(a, b) => Formula::and(a.map_terms(f), b.map_terms(f)),
            Formula::Or(a, b) => Formula::or(a.map_terms(f), b.map_terms(f)),
            Formula::Quant { q, bindings, body } => Formula::Quant {
                q: *q,
                bindings: bindings.clone(),
                body: Box::new(body.map_terms(f)),
            },
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Quant { .. } => 0,
            Formula::Or(..) => 1,
            Formula::And(..) => 2,
            Formula::Not(_) => 3,
            Formula::Atom(_) => 4,
        }
    }

    fn write_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let own = self.precedence();
        if own < min {
            write!(f, "(")?;
            self.write_prec(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Formula::Atom(a) => {
                let op = match a.rel {
                    Rel::Eq => "=",
                    Rel::Geq => ">=",
                };
                write!(f, "{} {op} 0", a.term)
            }
            Formula::Not(a) => {
                write!(f, "not ")?;
                a.write_prec(f, 3)
            }
            Formula::And(a, b) | Formula::Or(a, b) => {
                let op = if own == 1 { "or" } else { "and" };
                a.write_prec(f, own)?;
                write!(f, " {op} ")?;
                b.write_prec(f, own + 1)
            }
            Formula::Quant { q, bindings, body } => {
                let kw = match q {
                    Quantifier::Exists => "exists",
                    Quantifier::ForAll => "forall",
                };
                write!(f, "{kw} ")?;
                for (i, b) in bindings.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{} in [{}, {}]", b.var, b.range.lo(), b.range.hi())?;
                }
                write!(f, " . ")?;
                body.write_prec(f, 0)
            }
        }
    }
}

fn occurrence_order(t: &Term, out: &mut Vec<String>) {
    match t {
        Term::Const(_) | Term::Pi => {}
        Term::Var(v) => {
            if !out.contains(v) {
                out.push(v.clone());
            }
        }
        Term::Neg(a) | Term::Pow(a, _) | Term::Apply(_, a) => occurrence_order(a, out),
        Term::Add(a, b) | Term::Sub(a, b) | Term::Mul(a, b) | Term::Div(a, b) => {
            occurrence_order(a, out);
            occurrence_order(b, out);
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_prec(f, 0)
    }
}

/// Exact values for free variables, in quantification order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ParamEnv {
    entries: Vec<(String, Rational)>,
}

impl ParamEnv {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, var: &str, value: Rational) -> Self {
        self.entries.push((var.to_string(), value));
        self
    }

    pub fn entries(&self) -> &[(String, Rational)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BindError {
    #[error("variable `{0}` is not free in the formula")]
    NotFree(String),
}

/// Substitutes exact constants for free variables (parallel substitution).
pub fn bind(f: &Formula, env: &ParamEnv) -> Result<Formula, BindError> {
    let free = f.free_vars();
    if let Some((v, _)) = env.entries.iter().find(|(v, _)| !free.contains(v)) {
        return Err(BindError::NotFree(v.clone()));
    }
    Ok(f.map_terms(&mut |t| t.substitute(&env.entries)))
}

pub(crate) fn is_zero_const(t: &Term) -> bool {
    matches!(t, Term::Const(q) if q.is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::rat;

    #[test]
    fn bind_identity_shift() {
        let f = parse_with_params("exists x in [-1, 1] . sin(x + p) = 0", &["p"]).unwrap();
        let g = bind(&f, &ParamEnv::new().with("p", rat(0))).unwrap();
        assert_eq!(g.to_string(), "exists x in [-1, 1] . sin(x + 0) = 0");
        assert!(g.is_sentence());
    }

    #[test]
    fn bind_parallel_tuple() {
        let f = parse_with_params("exists x in [0, 1] . x - p * q >= 0", &["p", "q"]).unwrap();
        let env = ParamEnv::new().with("p", rat(2)).with("q", rat(3));
        let g = bind(&f, &env).unwrap();
        assert_eq!(g.to_string(), "exists x in [0, 1] . x - 2 * 3 >= 0");
    }

    #[test]
    fn bind_unknown_variable() {
        let f = parse_with_params("exists x in [0, 1] . x - p >= 0", &["p"]).unwrap();
        let err = bind(&f, &ParamEnv::new().with("z", rat(1))).unwrap_err();
        assert_eq!(err, BindError::NotFree("z".into()));
        // bound variables are not free either
        assert!(bind(&f, &ParamEnv::new().with("x", rat(1))).is_err());
    }

    #[test]
    fn free_vars_in_occurrence_order() {
        let f = parse_with_params("exists x in [0, 1] . q * x - p >= 0", &["p", "q"]).unwrap();
        assert_eq!(f.free_vars(), vec!["q".to_string(), "p".to_string()]);
    }
}
