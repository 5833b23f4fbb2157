//! Recursive-descent parser for the concrete syntax.
//!
//! ```text
//! formula  := quant | disj
//! quant    := ("exists" | "forall") binding ("," binding)* "." formula
//! binding  := ident "in" "[" bound "," bound "]"
//! bound    := ["-"] number ["/" number]
//! disj     := conj ("or" conj)*
//! conj     := unary ("and" unary)*
//! unary    := "not" unary | quant | atom | "(" formula ")"
//! atom     := term ("=" | ">=" | "<=") term
//! term     := product (("+" | "-") product)*
//! product  := signed (("*" | "/") signed)*
//! signed   := "-" signed | power
//! power    := primary ("^" natural)*
//! primary  := number | "pi" | ident | func "(" term ")" | "(" term ")"
//! ```
//!
//! `#` starts a comment running to the end of the line.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use thiserror::Error;

use super::{is_zero_const, Atom, Binding, Formula, Func, Quantifier, Rel, Term};
use crate::interval::{eval_term, EvalError, Precision, RatBox, RatInterval, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("non-rational literal `{0}`")]
    NonRationalLiteral(String),
    #[error("variable `{0}` is bound twice on one path")]
    DuplicateBinding(String),
    #[error("empty interval [{0}, {1}]")]
    EmptyInterval(String, String),
    #[error("cannot verify domain of `{0}` over the quantification box")]
    Domain(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {kind}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub line: usize,
    pub col: usize,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Rational, String),
    Ident(String),
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

const SYMBOLS: &[&str] = &[
    ">=", "<=", "=", "+", "-", "*", "/", "^", "(", ")", "[", "]", ",", ".",
];

fn lex(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let err = |line, col, msg: String| ParseError {
        kind: ParseErrorKind::Syntax(msg),
        line,
        col,
    };
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = col;
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let begin = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()) {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[begin..i].iter().collect();
            let value = decimal(&text).ok_or_else(|| err(line, start, format!("bad number `{text}`")))?;
            col += i - begin;
            out.push(Spanned {
                tok: Tok::Num(value, text),
                line,
                col: start,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let begin = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                i += 1;
            }
            col += i - begin;
            out.push(Spanned {
                tok: Tok::Ident(chars[begin..i].iter().collect()),
                line,
                col: start,
            });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                i += s.len();
                col += s.len();
                out.push(Spanned {
                    tok: Tok::Sym(s),
                    line,
                    col: start,
                });
            }
            None => return Err(err(line, col, format!("unexpected character `{c}`"))),
        }
    }
    out.push(Spanned { tok: Tok::Eof, line, col });
    Ok(out)
}

/// Exact value of an unsigned decimal literal with optional exponent.
fn decimal(text: &str) -> Option<Rational> {
    let (mantissa, exp) = match text.find(['e', 'E']) {
        Some(k) => (&text[..k], text[k + 1..].parse::<i64>().ok()?),
        None => (text, 0),
    };
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let digits: BigInt = format!("{int}{frac}").parse().ok()?;
    let shift = exp - frac.len() as i64;
    let ten = Rational::from_integer(BigInt::from(10));
    let scale = num_traits::pow::pow(ten, shift.unsigned_abs().try_into().ok()?);
    let v = Rational::from_integer(digits);
    Some(if shift >= 0 { v * scale } else { v / scale })
}

const KEYWORDS: &[&str] = &[
    "exists", "forall", "in", "and", "or", "not", "pi", "exp", "sin", "cos", "sqrt",
];

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    scope: Vec<String>,
    params: Vec<String>,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn here(&self) -> (usize, usize) {
        let s = &self.toks[self.pos];
        (s.line, s.col)
    }

    fn error<T>(&self, kind: ParseErrorKind) -> PResult<T> {
        let (line, col) = self.here();
        Err(ParseError { kind, line, col })
    }

    fn expected<T>(&self, what: &str) -> PResult<T> {
        let found = match self.peek() {
            Tok::Num(_, s) | Tok::Ident(s) => format!("`{s}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".to_string(),
        };
        self.error(ParseErrorKind::Syntax(format!("expected {what}, found {found}")))
    }

    fn bump(&mut self) {
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
    }

    fn at_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(t) if *t == s)
    }

    fn at_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(t) if t == k)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        let hit = self.at_sym(s);
        if hit {
            self.bump();
        }
        hit
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.expected(&format!("`{s}`"))
        }
    }

    fn formula(&mut self) -> PResult<Formula> {
        if self.at_kw("exists") || self.at_kw("forall") {
            return self.quant();
        }
        let mut lhs = self.conj()?;
        while self.at_kw("or") {
            self.bump();
            lhs = Formula::or(lhs, self.conj()?);
        }
        Ok(lhs)
    }

    fn conj(&mut self) -> PResult<Formula> {
        let mut lhs = self.unary()?;
        while self.at_kw("and") {
            self.bump();
            lhs = Formula::and(lhs, self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Formula> {
        if self.at_kw("not") {
            self.bump();
            return Ok(Formula::Not(Box::new(self.unary()?)));
        }
        if self.at_kw("exists") || self.at_kw("forall") {
            return self.quant();
        }
        if !self.at_sym("(") {
            return self.atom();
        }
        // `(` opens either a term or a formula; try the atom reading first
        let save = self.pos;
        let as_atom = self.atom();
        if as_atom.is_ok() {
            return as_atom;
        }
        let atom_pos = self.pos;
        self.pos = save;
        self.bump();
        let inner = self.formula().and_then(|f| self.expect_sym(")").map(|_| f));
        match (inner, as_atom) {
            (Ok(f), _) => Ok(f),
            (Err(e), Err(a)) => {
                if self.pos >= atom_pos {
                    Err(e)
                } else {
                    Err(a)
                }
            }
            (Err(e), Ok(_)) => Err(e),
        }
    }

    fn quant(&mut self) -> PResult<Formula> {
        let q = if self.at_kw("exists") {
            Quantifier::Exists
        } else {
            Quantifier::ForAll
        };
        self.bump();
        let mut bindings = Vec::new();
        loop {
            let var = match self.peek().clone() {
                Tok::Ident(v) if !KEYWORDS.contains(&v.as_str()) => v,
                _ => return self.expected("a variable name"),
            };
            if self.scope.contains(&var) || self.params.contains(&var) || bindings.iter().any(|b: &Binding| b.var == var) {
                return self.error(ParseErrorKind::DuplicateBinding(var));
            }
            self.bump();
            if !self.at_kw("in") {
                return self.expected("`in`");
            }
            self.bump();
            self.expect_sym("[")?;
            let lo = self.bound()?;
            self.expect_sym(",")?;
            let hi = self.bound()?;
            if lo > hi {
                return self.error(ParseErrorKind::EmptyInterval(lo.to_string(), hi.to_string()));
            }
            self.expect_sym("]")?;
            bindings.push(Binding {
                var,
                range: RatInterval::new(lo, hi).expect("checked order"),
            });
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_sym(".")?;
        let n = self.scope.len();
        self.scope.extend(bindings.iter().map(|b| b.var.clone()));
        let body = self.formula();
        self.scope.truncate(n);
        Ok(Formula::Quant {
            q,
            bindings,
            body: Box::new(body?),
        })
    }

    fn bound(&mut self) -> PResult<Rational> {
        let neg = self.eat_sym("-");
        let mut v = self.number()?;
        if self.eat_sym("/") {
            let d = self.number()?;
            if d.is_zero() {
                return self.error(ParseErrorKind::Syntax("zero denominator in bound".into()));
            }
            v /= d;
        }
        Ok(if neg { -v } else { v })
    }

    fn number(&mut self) -> PResult<Rational> {
        match self.peek().clone() {
            Tok::Num(v, _) => {
                self.bump();
                Ok(v)
            }
            Tok::Ident(s) if is_non_rational(&s) => self.error(ParseErrorKind::NonRationalLiteral(s)),
            _ => self.expected("a rational literal"),
        }
    }

    fn atom(&mut self) -> PResult<Formula> {
        let lhs = self.term()?;
        let rel = match self.peek() {
            Tok::Sym("=") => 0,
            Tok::Sym(">=") => 1,
            Tok::Sym("<=") => 2,
            _ => return self.expected("`=`, `>=` or `<=`"),
        };
        self.bump();
        let rhs = self.term()?;
        let normal = |a: Term, b: Term| if is_zero_const(&b) { a } else { Term::sub(a, b) };
        Ok(Formula::Atom(match rel {
            0 => Atom {
                rel: Rel::Eq,
                term: normal(lhs, rhs),
            },
            1 => Atom {
                rel: Rel::Geq,
                term: normal(lhs, rhs),
            },
            _ => Atom {
                rel: Rel::Geq,
                term: normal(rhs, lhs),
            },
        }))
    }

    fn term(&mut self) -> PResult<Term> {
        let mut lhs = self.product()?;
        loop {
            if self.eat_sym("+") {
                lhs = Term::add(lhs, self.product()?);
            } else if self.eat_sym("-") {
                lhs = Term::sub(lhs, self.product()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn product(&mut self) -> PResult<Term> {
        let mut lhs = self.signed()?;
        loop {
            if self.eat_sym("*") {
                lhs = Term::mul(lhs, self.signed()?);
            } else if self.eat_sym("/") {
                let rhs = self.signed()?;
                lhs = match (&lhs, &rhs) {
                    (Term::Const(a), Term::Const(b)) if !b.is_zero() => Term::Const(a / b),
                    _ => Term::Div(Box::new(lhs), Box::new(rhs)),
                };
            } else {
                return Ok(lhs);
            }
        }
    }

    fn signed(&mut self) -> PResult<Term> {
        if self.eat_sym("-") {
            return Ok(match self.signed()? {
                Term::Const(q) => Term::Const(-q),
                t => Term::Neg(Box::new(t)),
            });
        }
        self.power()
    }

    fn power(&mut self) -> PResult<Term> {
        let mut base = self.primary()?;
        while self.eat_sym("^") {
            let n = match self.peek().clone() {
                Tok::Num(v, _) if v.is_integer() && !v.is_negative() => v,
                _ => return self.expected("a natural exponent"),
            };
            let n: u32 = match n.to_integer().try_into() {
                Ok(n) => n,
                Err(_) => return self.expected("an exponent below 2^32"),
            };
            self.bump();
            base = Term::pow(base, n);
        }
        Ok(base)
    }

    fn primary(&mut self) -> PResult<Term> {
        match self.peek().clone() {
            Tok::Num(v, _) => {
                self.bump();
                Ok(Term::Const(v))
            }
            Tok::Sym("(") => {
                self.bump();
                let t = self.term()?;
                self.expect_sym(")")?;
                Ok(t)
            }
            Tok::Ident(name) => {
                let func = match name.as_str() {
                    "exp" => Some(Func::Exp),
                    "sin" => Some(Func::Sin),
                    "cos" => Some(Func::Cos),
                    "sqrt" => Some(Func::Sqrt),
                    _ => None,
                };
                if let Some(f) = func {
                    self.bump();
                    self.expect_sym("(")?;
                    let arg = self.term()?;
                    self.expect_sym(")")?;
                    return Ok(Term::apply(f, arg));
                }
                if name == "pi" {
                    self.bump();
                    return Ok(Term::Pi);
                }
                if is_non_rational(&name) {
                    return self.error(ParseErrorKind::NonRationalLiteral(name));
                }
                if KEYWORDS.contains(&name.as_str()) {
                    return self.expected("a term");
                }
                if !self.scope.contains(&name) && !self.params.contains(&name) {
                    return self.error(ParseErrorKind::UnboundVariable(name));
                }
                self.bump();
                Ok(Term::Var(name))
            }
            _ => self.expected("a term"),
        }
    }
}

fn is_non_rational(s: &str) -> bool {
    matches!(s.to_ascii_lowercase().as_str(), "inf" | "infinity" | "nan")
}

/// Parses a sentence; every variable must be bound by a quantifier.
pub fn parse(text: &str) -> Result<Formula, ParseError> {
    parse_with_params(text, &[])
}

/// Parses a formula whose free variables are exactly declared in `params`.
///
/// Division and square roots are checked against the quantification box
/// only in atoms that mention no parameter.
pub fn parse_with_params(text: &str, params: &[&str]) -> Result<Formula, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        scope: Vec::new(),
        params: params.iter().map(|s| s.to_string()).collect(),
    };
    let f = p.formula()?;
    if *p.peek() != Tok::Eof {
        return p.expected("end of input");
    }
    check_domains(&f, &p.params).map_err(|t| ParseError {
        kind: ParseErrorKind::Domain(t),
        line: 1,
        col: 1,
    })?;
    Ok(f)
}

const DOMAIN_SPLITS: usize = 4096;

fn check_domains(f: &Formula, params: &[String]) -> Result<(), String> {
    let mut failure = None;
    f.for_each_atom(&mut |atom, scope| {
        if failure.is_some() || !needs_domain_check(&atom.term) {
            return;
        }
        let mut used = std::collections::BTreeSet::new();
        atom.term.vars(&mut used);
        if used.iter().any(|v| params.contains(v)) {
            return;
        }
        let vars: Vec<String> = scope.iter().map(|b| b.var.clone()).collect();
        let bx: RatBox = scope.iter().map(|b| b.range.clone()).collect();
        if !domain_holds(&atom.term, &vars, bx) {
            failure = Some(atom.term.to_string());
        }
    });
    failure.map_or(Ok(()), Err)
}

fn needs_domain_check(t: &Term) -> bool {
    match t {
        Term::Div(..) | Term::Apply(Func::Sqrt, _) => true,
        Term::Const(_) | Term::Pi | Term::Var(_) => false,
        Term::Neg(a) | Term::Pow(a, _) | Term::Apply(_, a) => needs_domain_check(a),
        Term::Add(a, b) | Term::Sub(a, b) | Term::Mul(a, b) => needs_domain_check(a) || needs_domain_check(b),
    }
}

/// Succeeds when interval evaluation is defined on every box of some finite
/// bisection cover of `bx`.
fn domain_holds(t: &Term, vars: &[String], bx: RatBox) -> bool {
    let prec = Precision::new(32).expect("nonzero");
    let mut stack = vec![bx];
    let mut visited = 0;
    while let Some(b) = stack.pop() {
        visited += 1;
        if visited > DOMAIN_SPLITS {
            return false;
        }
        match eval_term(t, vars, &b, prec) {
            Ok(_) => {}
            Err(EvalError::Domain { .. }) => {
                let axis = b.widest_axis();
                match axis {
                    Some(a) if !b.get(a).is_point() => {
                        let (l, r) = b.bisect(a);
                        stack.push(r);
                        stack.push(l);
                    }
                    _ => return false,
                }
            }
            Err(_) => return false,
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::{rat, ratio};

    #[test]
    fn sine_sentence() {
        let f = parse("exists x in [-1,1] . sin(x) = 0").unwrap();
        let expected = Formula::exists(
            vec![Binding {
                var: "x".into(),
                range: RatInterval::from_ints(-1, 1).unwrap(),
            }],
            Formula::eq(Term::apply(Func::Sin, Term::var("x"))),
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn nested_sentence() {
        let f = parse(
            "forall x in [-1,1] . exists y in [-1,1], z in [-1,1] . \
             x^2-y^2-z^2 = 0 and x^3-y^3-z^3 = 0",
        )
        .unwrap();
        let Formula::Quant { q: Quantifier::ForAll, body, .. } = f else {
            panic!()
        };
        let Formula::Quant { q: Quantifier::Exists, bindings, body } = *body else {
            panic!()
        };
        assert_eq!(bindings.len(), 2);
        assert!(matches!(*body, Formula::And(..)));
    }

    #[test]
    fn missing_body() {
        let e = parse("exists x in [0,1]").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::Syntax(_)));
        assert_eq!((e.line, e.col), (1, 18));
    }

    #[test]
    fn error_positions() {
        let e = parse("exists x in [0,1] .\n  y = 0").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnboundVariable("y".into()));
        assert_eq!((e.line, e.col), (2, 3));
        let e = parse("exists x in [0, inf] . x = 0").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::NonRationalLiteral("inf".into()));
        let e = parse("exists x in [1, 0] . x = 0").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::EmptyInterval(..)));
        let e = parse("exists x in [0, 1] . exists x in [0, 1] . x = 0").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::DuplicateBinding("x".into()));
    }

    #[test]
    fn decimals_are_exact() {
        let f = parse("exists x in [-0.1, 2.5e-1] . x - 0.3 = 0").unwrap();
        let Formula::Quant { bindings, body, .. } = f else { panic!() };
        assert_eq!(bindings[0].range, RatInterval::new(ratio(-1, 10), ratio(1, 4)).unwrap());
        assert_eq!(*body, Formula::eq(Term::sub(Term::var("x"), Term::Const(ratio(3, 10)))));
    }

    #[test]
    fn relation_normal_form() {
        let f = parse("exists x in [0,1] . 1 <= x").unwrap();
        let Formula::Quant { body, .. } = f else { panic!() };
        assert_eq!(*body, Formula::geq(Term::sub(Term::var("x"), Term::Const(rat(1)))));
    }

    #[test]
    fn parenthesized_formulas() {
        let f = parse("exists x in [0,1] . (x >= 0 or (x) - 1 = 0) and x^2 >= 0").unwrap();
        let Formula::Quant { body, .. } = f else { panic!() };
        assert!(matches!(*body, Formula::And(ref a, _) if matches!(**a, Formula::Or(..))));
        assert!(parse("not not 1 >= 0").is_ok());
    }

    #[test]
    fn domain_checks() {
        assert!(parse("exists x in [1,2] . 1/x - 1 = 0").is_ok());
        assert!(parse("exists x in [0,1] . sqrt(x) - 1 = 0").is_ok());
        assert!(parse("exists x in [0,1] . 1/(x^2 + 1) - 1 = 0").is_ok());
        let e = parse("exists x in [-1,1] . 1/x = 0").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::Domain(_)));
        assert!(parse("exists x in [-1,1] . sqrt(x) = 0").is_err());
    }

    #[test]
    fn print_parse_round_trip() {
        for src in [
            "exists x in [-1, 1] . sin(x) = 0",
            "forall x in [-1/2, 3] . exists y in [0, 1] . y - x * (-2) >= 0 or x - y = 0",
            "exists x in [0, 1] . -x^2 + (2/3) * exp(x - pi) - sqrt(x + 1) / (x + 1) = 0",
            "exists x in [0, 1] . x - (x - 1) = 0 and (exists y in [0, 1] . y >= 0)",
        ] {
            let f = parse(src).unwrap();
            let printed = f.to_string();
            assert_eq!(parse(&printed).unwrap(), f, "{printed}");
        }
    }
}
