use super::{Atom, Binding, Formula, Quantifier, Rel, Term};

/// Shape of one existential block: `m` variables, `n` equations, `k` inequalities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BlockShape {
    pub m: usize,
    pub n: usize,
    pub k: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassBReport {
    pub in_class: bool,
    /// Existential blocks in left-to-right order.
    pub blocks: Vec<BlockShape>,
    pub violations: Vec<String>,
}

/// `∃ bindings . f_1 = 0 ∧ … ∧ f_n = 0 ∧ g_1 ≥ 0 ∧ … ∧ g_k ≥ 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub bindings: Vec<Binding>,
    pub equations: Vec<Term>,
    pub inequalities: Vec<Term>,
}

impl Block {
    pub fn shape(&self) -> BlockShape {
        BlockShape {
            m: self.bindings.len(),
            n: self.equations.len(),
            k: self.inequalities.len(),
        }
    }

    pub fn vars(&self) -> Vec<String> {
        self.bindings.iter().map(|b| b.var.clone()).collect()
    }
}

/// A formula rebuilt from the constructors the solver understands.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClassB {
    Exists(Block),
    ForAll(Binding, Box<ClassB>),
    And(Box<ClassB>, Box<ClassB>),
    Or(Box<ClassB>, Box<ClassB>),
}

impl ClassB {
    /// The class view, or the report listing why there is none.
    pub fn new(f: &Formula) -> Result<ClassB, ClassBReport> {
        let mut st = State::default();
        let view = st.visit(f);
        let report = st.into_report();
        match view {
            Some(v) if report.in_class => Ok(v),
            _ => Err(report),
        }
    }

    pub fn blocks(&self) -> Vec<&Block> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect<'a>(&'a self, out: &mut Vec<&'a Block>) {
        match self {
            ClassB::Exists(b) => out.push(b),
            ClassB::ForAll(_, body) => body.collect(out),
            ClassB::And(a, b) | ClassB::Or(a, b) => {
                a.collect(out);
                b.collect(out);
            }
        }
    }
}

#[derive(Default)]
struct State {
    blocks: Vec<BlockShape>,
    violations: Vec<String>,
}

impl State {
    fn into_report(self) -> ClassBReport {
        ClassBReport {
            in_class: self.violations.is_empty(),
            blocks: self.blocks,
            violations: self.violations,
        }
    }

    fn visit(&mut self, f: &Formula) -> Option<ClassB> {
        match f {
            Formula::Atom(_) => self.block(Vec::new(), f),
            Formula::Not(_) => {
                self.violations.push("negation is not admitted".into());
                None
            }
            Formula::And(a, b) => {
                let (a, b) = (self.visit(a), self.visit(b));
                Some(ClassB::And(Box::new(a?), Box::new(b?)))
            }
            Formula::Or(a, b) => {
                let (a, b) = (self.visit(a), self.visit(b));
                Some(ClassB::Or(Box::new(a?), Box::new(b?)))
            }
            Formula::Quant {
                q: Quantifier::ForAll,
                bindings,
                body,
            } => {
                let mut inner = self.visit(body);
                for b in bindings.iter().rev() {
                    inner = inner.map(|v| ClassB::ForAll(b.clone(), Box::new(v)));
                }
                inner
            }
            Formula::Quant {
                q: Quantifier::Exists,
                bindings,
                body,
            } => {
                let mut all = bindings.clone();
                let mut body = body.as_ref();
                while let Formula::Quant {
                    q: Quantifier::Exists,
                    bindings,
                    body: inner,
                } = body
                {
                    all.extend(bindings.iter().cloned());
                    body = inner;
                }
                self.block(all, body)
            }
        }
    }

    fn block(&mut self, bindings: Vec<Binding>, body: &Formula) -> Option<ClassB> {
        let index = self.blocks.len() + 1;
        let mut atoms = Vec::new();
        let ok = conjuncts(body, &mut atoms);
        let block = Block {
            bindings,
            equations: atoms.iter().filter(|a| a.rel == Rel::Eq).map(|a| a.term.clone()).collect(),
            inequalities: atoms.iter().filter(|a| a.rel == Rel::Geq).map(|a| a.term.clone()).collect(),
        };
        let s = block.shape();
        self.blocks.push(s);
        if !ok {
            self.violations.push(format!(
                "existential block {index}: body is not a conjunction of equations and inequalities"
            ));
            return None;
        }
        if s.n < s.m && s.n != 0 {
            self.violations.push(format!(
                "existential block {index}: {} equation(s) for {} variable(s); need n >= m or n = 0",
                s.n, s.m
            ));
            return None;
        }
        Some(ClassB::Exists(block))
    }
}

fn conjuncts<'a>(f: &'a Formula, out: &mut Vec<&'a Atom>) -> bool {
    match f {
        Formula::Atom(a) => {
            out.push(a);
            true
        }
        Formula::And(a, b) => conjuncts(a, out) & conjuncts(b, out),
        _ => false,
    }
}

pub fn validate_class_b(f: &Formula) -> ClassBReport {
    let mut st = State::default();
    st.visit(f);
    st.into_report()
}
