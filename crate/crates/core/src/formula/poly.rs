use std::collections::BTreeMap;

use num_traits::{One, Zero};

use super::Term;
use crate::interval::{RatBox, RatInterval, Rational};

/// Sparse multivariate polynomial with exact coefficients; keys are exponent
/// vectors over a fixed variable list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Polynomial {
    vars: Vec<String>,
    terms: BTreeMap<Vec<u32>, Rational>,
}

impl Polynomial {
    fn constant(vars: &[String], c: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(vec![0; vars.len()], c);
        }
        Self {
            vars: vars.to_vec(),
            terms,
        }
    }

    fn variable(vars: &[String], i: usize) -> Self {
        let mut e = vec![0; vars.len()];
        e[i] = 1;
        Self {
            vars: vars.to_vec(),
            terms: BTreeMap::from([(e, Rational::one())]),
        }
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self
                .terms
                .iter()
                .next()
                .filter(|(e, _)| e.iter().all(|&k| k == 0))
                .map(|(_, c)| c.clone()),
            _ => None,
        }
    }

    pub fn coefficients(&self) -> impl Iterator<Item = (&[u32], &Rational)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), c))
    }

    /// Axes with a positive exponent in some monomial.
    pub fn occurs(&self) -> Vec<bool> {
        let mut seen = vec![false; self.vars.len()];
        for e in self.terms.keys() {
            for (s, &k) in seen.iter_mut().zip(e) {
                *s |= k > 0;
            }
        }
        seen
    }

    fn add_scaled(&mut self, other: &Polynomial, s: &Rational) {
        for (e, c) in &other.terms {
            let entry = self.terms.entry(e.clone()).or_insert_with(Rational::zero);
            *entry += c * s;
            if entry.is_zero() {
                self.terms.remove(e);
            }
        }
    }

    fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = Polynomial::constant(&self.vars, Rational::zero());
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                let entry = out.terms.entry(e.clone()).or_insert_with(Rational::zero);
                *entry += c1 * c2;
                if entry.is_zero() {
                    out.terms.remove(&e);
                }
            }
        }
        out
    }

    /// Sum of monomial enclosures over `b`, whose axes follow `vars`.
    pub fn eval(&self, b: &RatBox) -> RatInterval {
        let mut acc = RatInterval::point(Rational::zero());
        for (e, c) in &self.terms {
            let mut m = RatInterval::point(c.clone());
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    m = &m * &b.get(i).powi(k);
                }
            }
            acc = &acc + &m;
        }
        acc
    }
}

/// Expands a term into canonical form when it is a polynomial in `vars`
/// (division only by nonzero constants); `None` otherwise.
pub fn expand_polynomial(t: &Term, vars: &[String]) -> Option<Polynomial> {
    expand(t, vars, &[])
}

/// Expansion treating every non-polynomial subterm as an extra symbol.
///
/// The returned polynomial ranges over `vars` followed by one symbol per
/// entry of the returned list; structurally equal subterms share a symbol.
pub(crate) fn expand_opaque(t: &Term, vars: &[String]) -> (Polynomial, Vec<Term>) {
    let mut atoms = Vec::new();
    collect_opaque(t, vars, &mut atoms);
    let mut symbols = vars.to_vec();
    symbols.extend((0..atoms.len()).map(|i| format!("#{i}")));
    let p = expand(t, &symbols, &atoms).expect("opaque subterms absorb the rest");
    (p, atoms)
}

fn collect_opaque(t: &Term, vars: &[String], atoms: &mut Vec<Term>) {
    let is_const_poly = |b: &Term| {
        matches!(expand_polynomial(b, vars).and_then(|p| p.as_constant()), Some(c) if !c.is_zero())
    };
    match t {
        Term::Const(_) | Term::Var(_) => {}
        Term::Pi | Term::Apply(..) => push_unique(atoms, t),
        Term::Div(a, b) if !is_const_poly(b) => push_unique(atoms, t),
        Term::Neg(a) | Term::Pow(a, _) | Term::Div(a, _) => collect_opaque(a, vars, atoms),
        Term::Add(a, b) | Term::Sub(a, b) | Term::Mul(a, b) => {
            collect_opaque(a, vars, atoms);
            collect_opaque(b, vars, atoms);
        }
    }
}

fn push_unique(atoms: &mut Vec<Term>, t: &Term) {
    if !atoms.contains(t) {
        atoms.push(t.clone());
    }
}

/// `symbols` lists the variables and then one name per opaque subterm.
fn expand(t: &Term, symbols: &[String], atoms: &[Term]) -> Option<Polynomial> {
    if let Some(k) = atoms.iter().position(|a| a == t) {
        let i = symbols.len() - atoms.len() + k;
        return Some(Polynomial::variable(symbols, i));
    }
    let vars = symbols;
    Some(match t {
        Term::Const(q) => Polynomial::constant(vars, q.clone()),
        Term::Var(v) => Polynomial::variable(vars, vars.iter().position(|w| w == v)?),
        Term::Pi | Term::Apply(..) => return None,
        Term::Neg(a) => {
            let mut out = Polynomial::constant(vars, Rational::zero());
            out.add_scaled(&expand(a, vars, atoms)?, &-Rational::one());
            out
        }
        Term::Add(a, b) | Term::Sub(a, b) => {
            let mut out = expand(a, vars, atoms)?;
            let s = if matches!(t, Term::Add(..)) {
                Rational::one()
            } else {
                -Rational::one()
            };
            out.add_scaled(&expand(b, vars, atoms)?, &s);
            out
        }
        Term::Mul(a, b) => expand(a, vars, atoms)?.mul(&expand(b, vars, atoms)?),
        Term::Div(a, b) => {
            let d = expand(b, vars, atoms)?.as_constant()?;
            if d.is_zero() {
                return None;
            }
            let mut out = Polynomial::constant(vars, Rational::zero());
            out.add_scaled(&expand(a, vars, atoms)?, &d.recip());
            out
        }
        Term::Pow(a, n) => {
            let base = expand(a, vars, atoms)?;
            let mut out = Polynomial::constant(vars, Rational::one());
            for _ in 0..*n {
                out = out.mul(&base);
            }
            out
        }
    })
}
