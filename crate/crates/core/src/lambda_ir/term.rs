use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Built-in primitive operators, written `#name` in both dialects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Prim {
    Add,
    Sub,
    Mul,
    Eq,
    If,
    /// Integer addition, produced by operator specialization.
    AddZ,
    /// Real addition, produced by operator specialization.
    AddR,
}

impl Prim {
    pub const ALL: [Prim; 7] = [
        Prim::Add,
        Prim::Sub,
        Prim::Mul,
        Prim::Eq,
        Prim::If,
        Prim::AddZ,
        Prim::AddR,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Prim::Add => "add",
            Prim::Sub => "sub",
            Prim::Mul => "mul",
            Prim::Eq => "eq",
            Prim::If => "if",
            Prim::AddZ => "addZ",
            Prim::AddR => "addR",
        }
    }

    pub fn from_name(name: &str) -> Option<Prim> {
        Prim::ALL.into_iter().find(|p| p.name() == name)
    }

    /// Number of arguments the delta rule consumes.
    pub fn arity(self) -> usize {
        match self {
            Prim::If => 3,
            _ => 2,
        }
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(
            self,
            Prim::Add | Prim::Sub | Prim::Mul | Prim::AddZ | Prim::AddR
        )
    }
}

impl fmt::Display for Prim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.name())
    }
}

/// Lambda-calculus IR node.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Term {
    Var(String),
    Lam(String, Box<Term>),
    App(Box<Term>, Box<Term>),
    Int(i64),
    Bool(bool),
    Prim(Prim),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    pub fn lam(param: impl Into<String>, body: Term) -> Term {
        Term::Lam(param.into(), Box::new(body))
    }

    pub fn app(fun: Term, arg: Term) -> Term {
        Term::App(Box::new(fun), Box::new(arg))
    }

    /// Left-associated application of `head` to every argument in turn.
    pub fn apply(head: Term, args: impl IntoIterator<Item = Term>) -> Term {
        args.into_iter().fold(head, Term::app)
    }

    pub fn size(&self) -> usize {
        match self {
            Term::Lam(_, b) => 1 + b.size(),
            Term::App(f, a) => 1 + f.size() + a.size(),
            _ => 1,
        }
    }

    pub fn count_lams(&self) -> usize {
        match self {
            Term::Lam(_, b) => 1 + b.count_lams(),
            Term::App(f, a) => f.count_lams() + a.count_lams(),
            _ => 0,
        }
    }

    /// Number of binders directly at the root (`\x y. ...` has two).
    pub fn leading_lams(&self) -> usize {
        let mut n = 0;
        let mut t = self;
        while let Term::Lam(_, b) = t {
            n += 1;
            t = b;
        }
        n
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut bound = Vec::new();
        collect_free(self, &mut bound, &mut out);
        out
    }

    pub fn is_free(&self, name: &str) -> bool {
        match self {
            Term::Var(v) => v == name,
            Term::Lam(p, b) => p != name && b.is_free(name),
            Term::App(f, a) => f.is_free(name) || a.is_free(name),
            _ => false,
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Replace free occurrences of `name` by a closed `value`.
    ///
    /// `value` must be closed, so no capture can occur.
    pub fn subst_closed(&self, name: &str, value: &Term) -> Term {
        match self {
            Term::Var(v) if v == name => value.clone(),
            Term::Lam(p, b) if p != name => Term::lam(p.clone(), b.subst_closed(name, value)),
            Term::App(f, a) => Term::app(f.subst_closed(name, value), a.subst_closed(name, value)),
            other => other.clone(),
        }
    }

    /// Head and argument list of an application spine.
    pub fn spine(&self) -> (&Term, Vec<&Term>) {
        let mut args = Vec::new();
        let mut t = self;
        while let Term::App(f, a) = t {
            args.push(a.as_ref());
            t = f;
        }
        args.reverse();
        (t, args)
    }
}

fn collect_free(t: &Term, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    match t {
        Term::Var(v) => {
            if !bound.iter().any(|b| b == v) {
                out.insert(v.clone());
            }
        }
        Term::Lam(p, b) => {
            bound.push(p.clone());
            collect_free(b, bound, out);
            bound.pop();
        }
        Term::App(f, a) => {
            collect_free(f, bound, out);
            collect_free(a, bound, out);
        }
        _ => {}
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::pretty_print(self))
    }
}

/// A sequence of top-level definitions and an optional main expression.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Program {
    pub defs: Vec<(String, Term)>,
    pub main: Option<Term>,
}

impl Program {
    pub fn from_main(main: Term) -> Program {
        Program {
            defs: Vec::new(),
            main: Some(main),
        }
    }

    /// Substitute every definition reference in `t` by its (recursively
    /// inlined) body. Only definitions before index `upto` are visible.
    pub fn inline_upto(&self, t: &Term, upto: usize) -> Term {
        let mut out = t.clone();
        for (name, body) in self.defs[..upto].iter().rev() {
            if out.is_free(name) {
                let closed = self.inline_upto(body, self.def_index(name).unwrap_or(upto));
                out = out.subst_closed(name, &closed);
            }
        }
        out
    }

    pub fn def_index(&self, name: &str) -> Option<usize> {
        self.defs.iter().position(|(n, _)| n == name)
    }

    /// Closed form of definition `idx`.
    pub fn inlined_def(&self, idx: usize) -> Term {
        self.inline_upto(&self.defs[idx].1, idx)
    }

    pub fn inlined_main(&self) -> Option<Term> {
        self.main.as_ref().map(|m| self.inline_upto(m, self.defs.len()))
    }

    /// Named units (`defs` then `main`) in program order, each fully inlined.
    pub fn inlined_units(&self) -> Vec<(String, Term)> {
        let mut out: Vec<_> = (0..self.defs.len())
            .map(|i| (self.defs[i].0.clone(), self.inlined_def(i)))
            .collect();
        if let Some(m) = self.inlined_main() {
            out.push(("main".to_string(), m));
        }
        out
    }
}
