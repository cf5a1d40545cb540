//! Seeded generators for property tests.
//!
//! Terms are generated against simple types over `Int` and `Bool`, so every
//! generated term (and every combinator encoding of one) is strongly
//! normalizing; probing with integers never diverges.

use crate::lambda_ir::{Prim, Term};
use crate::rng::SplitMix64;
use crate::ski::{compile, RuleSet, SkiTerm};
use crate::types::{ConstraintSet, Factor, Operand, Predicate, TypeTag, VarId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ty {
    Int,
    Bool,
    Arrow(Box<Ty>, Box<Ty>),
}

impl Ty {
    pub fn arrow(a: Ty, b: Ty) -> Ty {
        Ty::Arrow(Box::new(a), Box::new(b))
    }

    /// `Int -> ... -> Int -> result` with `n` arguments.
    pub fn ints_to(n: usize, result: Ty) -> Ty {
        (0..n).fold(result, |acc, _| Ty::arrow(Ty::Int, acc))
    }
}

pub fn depth(t: &Term) -> usize {
    match t {
        Term::Lam(_, b) => 1 + depth(b),
        Term::App(f, a) => 1 + depth(f).max(depth(a)),
        _ => 0,
    }
}

pub struct TermGen {
    rng: SplitMix64,
    fresh: usize,
}

impl TermGen {
    pub fn new(seed: u64) -> TermGen {
        TermGen {
            rng: SplitMix64::new(seed),
            fresh: 0,
        }
    }

    pub fn rng(&mut self) -> &mut SplitMix64 {
        &mut self.rng
    }

    fn small_int(&mut self) -> i64 {
        self.rng.below(7) as i64 - 3
    }

    pub fn random_ty(&mut self, depth: usize) -> Ty {
        match self.rng.below(if depth == 0 { 2 } else { 4 }) {
            0 => Ty::Int,
            1 => Ty::Bool,
            _ => Ty::arrow(self.random_ty(depth - 1), self.random_ty(depth - 1)),
        }
    }

    fn leaf(&mut self, ty: &Ty, ctx: &[(String, Ty)]) -> Option<Term> {
        let vars: Vec<&String> = ctx.iter().filter(|(_, t)| t == ty).map(|(n, _)| n).collect();
        if !vars.is_empty() && self.rng.chance(0.6) {
            return Some(Term::var(vars[self.rng.below(vars.len())].clone()));
        }
        let int = Ty::Int;
        let int2 = Ty::arrow(Ty::Int, Ty::Int);
        match ty {
            Ty::Int => Some(Term::Int(self.small_int())),
            Ty::Bool => Some(Term::Bool(self.rng.chance(0.5))),
            Ty::Arrow(a, b) if **a == int && **b == int2 => {
                let ps = [Prim::Add, Prim::Sub, Prim::Mul];
                Some(Term::Prim(ps[self.rng.below(3)]))
            }
            Ty::Arrow(a, b) if **a == int && **b == Ty::arrow(Ty::Int, Ty::Bool) => {
                Some(Term::Prim(Prim::Eq))
            }
            _ => vars.first().map(|v| Term::var((*v).clone())),
        }
    }

    /// A term of type `ty` in context `ctx` with nesting at most `budget`
    /// (plus the binders an arrow type forces at the leaves).
    pub fn term_of(&mut self, ty: &Ty, ctx: &mut Vec<(String, Ty)>, budget: usize) -> Term {
        if budget == 0 || self.rng.chance(0.25) {
            if let Some(t) = self.leaf(ty, ctx) {
                return t;
            }
        }
        let budget = budget.saturating_sub(1);
        if let Ty::Arrow(a, b) = ty {
            if self.rng.chance(0.7) || budget == 0 {
                let name = format!("x{}", self.fresh);
                self.fresh += 1;
                ctx.push((name.clone(), (**a).clone()));
                let body = self.term_of(b, ctx, budget);
                ctx.pop();
                return Term::lam(name, body);
            }
        }
        match self.rng.below(4) {
            0 => {
                let c = self.term_of(&Ty::Bool, ctx, budget.saturating_sub(1));
                let t = self.term_of(ty, ctx, budget.saturating_sub(1));
                let e = self.term_of(ty, ctx, budget.saturating_sub(1));
                Term::apply(Term::Prim(Prim::If), [c, t, e])
            }
            1 if *ty == Ty::Int || *ty == Ty::Bool => {
                let p = if *ty == Ty::Bool {
                    Prim::Eq
                } else {
                    [Prim::Add, Prim::Sub, Prim::Mul][self.rng.below(3)]
                };
                let x = self.term_of(&Ty::Int, ctx, budget.saturating_sub(1));
                let y = self.term_of(&Ty::Int, ctx, budget.saturating_sub(1));
                Term::apply(Term::Prim(p), [x, y])
            }
            _ => {
                let arg_ty = if self.rng.chance(0.7) { Ty::Int } else { self.random_ty(1) };
                let f = self.term_of(&Ty::arrow(arg_ty.clone(), ty.clone()), ctx, budget);
                let x = self.term_of(&arg_ty, ctx, budget);
                Term::app(f, x)
            }
        }
    }

    /// Closed term of depth at most `max_depth`, taking 0 to 3 integer
    /// arguments.
    pub fn closed_term(&mut self, max_depth: usize) -> Term {
        loop {
            let arity = self.rng.below(4);
            let result = if self.rng.chance(0.8) { Ty::Int } else { Ty::Bool };
            let ty = Ty::ints_to(arity, result);
            let budget = 1 + self.rng.below(max_depth);
            let t = self.term_of(&ty, &mut Vec::new(), budget);
            if depth(&t) <= max_depth {
                return t;
            }
        }
    }

    fn rule(&mut self) -> RuleSet {
        RuleSet::ALL[self.rng.below(3)]
    }

    /// Closed combinator term encoding a generated term of type `ty`.
    pub fn ski_of(&mut self, ty: &Ty, budget: usize) -> SkiTerm {
        let t = self.term_of(ty, &mut Vec::new(), budget);
        let r = self.rule();
        compile(&t, r)
    }

    /// `(x, y, z)` typed so that `S x y z` is well typed.
    pub fn s_triple(&mut self) -> (SkiTerm, SkiTerm, SkiTerm) {
        let a = self.random_ty(1);
        let b = self.random_ty(1);
        let c = if self.rng.chance(0.7) { Ty::Int } else { self.random_ty(1) };
        let x = self.ski_of(&Ty::arrow(a.clone(), Ty::arrow(b.clone(), c)), 4);
        let y = self.ski_of(&Ty::arrow(a.clone(), b), 4);
        let z = self.ski_of(&a, 3);
        (x, y, z)
    }

    /// Lambda-free term with no typing discipline; for syntactic properties
    /// only (it may not normalize).
    pub fn raw_ski(&mut self, depth: usize) -> SkiTerm {
        if depth == 0 || self.rng.chance(0.3) {
            return match self.rng.below(8) {
                0 => SkiTerm::S,
                1 => SkiTerm::K,
                2 => SkiTerm::I,
                3 => SkiTerm::Int(self.rng.below(2001) as i64 - 1000),
                4 => SkiTerm::Bool(self.rng.chance(0.5)),
                5 => {
                    let ps = [Prim::Add, Prim::Sub, Prim::Mul, Prim::Eq, Prim::If, Prim::AddZ, Prim::AddR];
                    SkiTerm::Prim(ps[self.rng.below(ps.len())])
                }
                6 => SkiTerm::Var(format!("d{}", self.rng.below(4))),
                _ => SkiTerm::I,
            };
        }
        SkiTerm::app(self.raw_ski(depth - 1), self.raw_ski(depth - 1))
    }

    /// Random factor set over `1..=max_vars` variables.
    pub fn constraint_set(&mut self, max_vars: usize) -> (ConstraintSet, Vec<VarId>) {
        let n = 1 + self.rng.below(max_vars);
        let vars: Vec<VarId> = (0..n).collect();
        let mut cs = ConstraintSet {
            factors: Vec::new(),
            offset: self.rng.next_signed_unit() * 3.0,
        };
        let nf = 1 + self.rng.below(2 * n + 2);
        while cs.factors.len() < nf {
            let operand = |g: &mut Self| {
                if g.rng.chance(0.8) {
                    Operand::Var(g.rng.below(n))
                } else {
                    let tag = TypeTag::ALL[g.rng.below(4)];
                    if g.rng.chance(0.5) {
                        Operand::Env(tag)
                    } else {
                        Operand::Known(tag)
                    }
                }
            };
            let k = 1 + self.rng.below(3);
            let ops: Vec<Operand> = (0..k).map(|_| operand(self)).collect();
            let pred = match self.rng.below(3) {
                0 => Predicate::SameNumeric(ops),
                1 => Predicate::Same(ops),
                _ => Predicate::Is(ops[0], TypeTag::ALL[self.rng.below(4)]),
            };
            let weight = 0.1 + 3.9 * self.rng.next_f64();
            if let Some(f) = Factor::new(weight, pred) {
                cs.factors.push(f);
            }
        }
        (cs, vars)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lambda_ir::{beta_reduce, DEFAULT_FUEL};

    #[test]
    fn generated_terms_are_closed_shallow_and_normalize() {
        let mut g = TermGen::new(1);
        for _ in 0..300 {
            let t = g.closed_term(6);
            assert!(t.is_closed(), "{t}");
            assert!(depth(&t) <= 6);
            let applied = Term::apply(t.clone(), [Term::Int(1), Term::Int(2), Term::Int(3)]);
            assert!(beta_reduce(&applied, DEFAULT_FUEL).is_ok(), "{t}");
        }
    }

    #[test]
    fn deterministic() {
        let a: Vec<Term> = {
            let mut g = TermGen::new(99);
            (0..20).map(|_| g.closed_term(6)).collect()
        };
        let mut g = TermGen::new(99);
        let b: Vec<Term> = (0..20).map(|_| g.closed_term(6)).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn constraint_sets_have_factors() {
        let mut g = TermGen::new(5);
        for _ in 0..50 {
            let (cs, vars) = g.constraint_set(6);
            assert!(!cs.factors.is_empty());
            assert!(cs.factors.iter().all(|f| f.clique.iter().all(|v| vars.contains(v))));
        }
    }
}
