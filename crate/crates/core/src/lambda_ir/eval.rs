//! Normal-order evaluation over a de Bruijn view of [`Term`].

use std::collections::BTreeSet;

use thiserror::Error;

use super::{Prim, Term};

pub const DEFAULT_FUEL: u64 = 10_000;

/// Upper bound on term nodes copied by substitution during one evaluation.
pub const NODE_BUDGET: u64 = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Error)]
pub enum EvalError {
    /// The step budget (or the node-copy budget) ran out before a normal
    /// form was reached. Says nothing about whether one exists.
    #[error("fuel exhausted")]
    FuelExhausted,
    #[error("64-bit integer overflow in #{0}")]
    Overflow(&'static str),
}

const RED_ZONE: usize = 64 * 1024;
const STACK_CHUNK: usize = 4 * 1024 * 1024;

pub(crate) fn deep<R>(f: impl FnOnce() -> R) -> R {
    stacker::maybe_grow(RED_ZONE, STACK_CHUNK, f)
}

/// Locally nameless term: bound variables are indices, binders keep their
/// source name only as a printing hint.
#[derive(Debug, Clone)]
pub(crate) enum Db {
    Bound(usize),
    Free(String),
    Lam(String, Box<Db>),
    App(Box<Db>, Box<Db>),
    Int(i64),
    Bool(bool),
    Prim(Prim),
}

impl Db {
    pub(crate) fn from_term(t: &Term) -> Db {
        fn go(t: &Term, ctx: &mut Vec<String>) -> Db {
            deep(|| match t {
                Term::Var(v) => match ctx.iter().rev().position(|b| b == v) {
                    Some(i) => Db::Bound(i),
                    None => Db::Free(v.clone()),
                },
                Term::Lam(p, b) => {
                    ctx.push(p.clone());
                    let body = go(b, ctx);
                    ctx.pop();
                    Db::Lam(p.clone(), Box::new(body))
                }
                Term::App(f, a) => Db::App(Box::new(go(f, ctx)), Box::new(go(a, ctx))),
                Term::Int(n) => Db::Int(*n),
                Term::Bool(b) => Db::Bool(*b),
                Term::Prim(p) => Db::Prim(*p),
            })
        }
        go(t, &mut Vec::new())
    }

    pub(crate) fn to_term(&self) -> Term {
        let mut free = BTreeSet::new();
        self.collect_free(&mut free);
        fn go(d: &Db, ctx: &mut Vec<String>, free: &BTreeSet<String>) -> Term {
            deep(|| match d {
                Db::Bound(i) => Term::Var(ctx[ctx.len() - 1 - i].clone()),
                Db::Free(v) => Term::Var(v.clone()),
                Db::Lam(hint, b) => {
                    let mut name = hint.clone();
                    let mut k = 1;
                    while ctx.contains(&name) || free.contains(&name) {
                        name = format!("{hint}{k}");
                        k += 1;
                    }
                    ctx.push(name.clone());
                    let body = go(b, ctx, free);
                    ctx.pop();
                    Term::lam(name, body)
                }
                Db::App(f, a) => Term::app(go(f, ctx, free), go(a, ctx, free)),
                Db::Int(n) => Term::Int(*n),
                Db::Bool(b) => Term::Bool(*b),
                Db::Prim(p) => Term::Prim(*p),
            })
        }
        go(self, &mut Vec::new(), &free)
    }

    fn collect_free(&self, out: &mut BTreeSet<String>) {
        deep(|| match self {
            Db::Free(v) => {
                out.insert(v.clone());
            }
            Db::Lam(_, b) => b.collect_free(out),
            Db::App(f, a) => {
                f.collect_free(out);
                a.collect_free(out);
            }
            _ => {}
        })
    }

    /// Structural equality ignoring binder hints.
    pub(crate) fn alpha_eq(&self, other: &Db) -> bool {
        deep(|| match (self, other) {
            (Db::Bound(a), Db::Bound(b)) => a == b,
            (Db::Free(a), Db::Free(b)) => a == b,
            (Db::Lam(_, a), Db::Lam(_, b)) => a.alpha_eq(b),
            (Db::App(f, a), Db::App(g, b)) => f.alpha_eq(g) && a.alpha_eq(b),
            (Db::Int(a), Db::Int(b)) => a == b,
            (Db::Bool(a), Db::Bool(b)) => a == b,
            (Db::Prim(a), Db::Prim(b)) => a == b,
            _ => false,
        })
    }

    fn size(&self) -> u64 {
        deep(|| match self {
            Db::Lam(_, b) => 1 + b.size(),
            Db::App(f, a) => 1 + f.size() + a.size(),
            _ => 1,
        })
    }

    /// Shift free indices `>= cutoff` up by `by`.
    fn shift_up(&self, by: usize, cutoff: usize) -> Db {
        if by == 0 {
            return self.clone();
        }
        deep(|| match self {
            Db::Bound(k) if *k >= cutoff => Db::Bound(k + by),
            Db::Lam(h, b) => Db::Lam(h.clone(), Box::new(b.shift_up(by, cutoff + 1))),
            Db::App(f, a) => Db::App(Box::new(f.shift_up(by, cutoff)), Box::new(a.shift_up(by, cutoff))),
            other => other.clone(),
        })
    }

    /// Whether index `idx` (relative to this term) occurs.
    fn has_index(&self, idx: usize) -> bool {
        deep(|| match self {
            Db::Bound(k) => *k == idx,
            Db::Lam(_, b) => b.has_index(idx + 1),
            Db::App(f, a) => f.has_index(idx) || a.has_index(idx),
            _ => false,
        })
    }

    /// Decrement free indices above `cutoff`; index `cutoff` must not occur.
    fn shift_down(&self, cutoff: usize) -> Db {
        deep(|| match self {
            Db::Bound(k) if *k > cutoff => Db::Bound(k - 1),
            Db::Lam(h, b) => Db::Lam(h.clone(), Box::new(b.shift_down(cutoff + 1))),
            Db::App(f, a) => Db::App(Box::new(f.shift_down(cutoff)), Box::new(a.shift_down(cutoff))),
            other => other.clone(),
        })
    }

    fn into_spine(self) -> (Db, Vec<Db>) {
        let mut args = Vec::new();
        let mut t = self;
        while let Db::App(f, a) = t {
            args.push(*a);
            t = *f;
        }
        args.reverse();
        (t, args)
    }

    fn from_spine(head: Db, args: impl IntoIterator<Item = Db>) -> Db {
        args.into_iter()
            .fold(head, |f, a| Db::App(Box::new(f), Box::new(a)))
    }
}

/// Result of applying a primitive's delta rule to literal operands.
pub(crate) enum Delta<T> {
    Value(T),
    /// Operands are not literals of the right kind.
    Stuck,
}

/// Delta rules for the strict binary primitives, shared by the lambda and
/// combinator evaluators.
pub(crate) fn apply_delta(
    p: Prim,
    a: Option<Literal>,
    b: Option<Literal>,
) -> Result<Delta<Literal>, EvalError> {
    use Literal::*;
    let arith = |f: fn(i64, i64) -> Option<i64>| match (a, b) {
        (Some(Int(x)), Some(Int(y))) => f(x, y)
            .map(|v| Delta::Value(Int(v)))
            .ok_or(EvalError::Overflow(p.name())),
        _ => Ok(Delta::Stuck),
    };
    match p {
        Prim::Add | Prim::AddZ | Prim::AddR => arith(i64::checked_add),
        Prim::Sub => arith(i64::checked_sub),
        Prim::Mul => arith(i64::checked_mul),
        Prim::Eq => Ok(match (a, b) {
            (Some(Int(x)), Some(Int(y))) => Delta::Value(Bool(x == y)),
            (Some(Bool(x)), Some(Bool(y))) => Delta::Value(Bool(x == y)),
            _ => Delta::Stuck,
        }),
        Prim::If => unreachable!("#if is handled by branch selection"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Literal {
    Int(i64),
    Bool(bool),
}

/// Step and allocation budget shared across one evaluation.
pub(crate) struct Budget {
    pub fuel: u64,
    pub nodes: u64,
}

impl Budget {
    pub(crate) fn new(fuel: u64) -> Budget {
        Budget {
            fuel,
            nodes: NODE_BUDGET,
        }
    }

    pub(crate) fn step(&mut self) -> Result<(), EvalError> {
        if self.fuel == 0 {
            return Err(EvalError::FuelExhausted);
        }
        self.fuel -= 1;
        Ok(())
    }

    pub(crate) fn alloc(&mut self, n: u64) -> Result<(), EvalError> {
        if n > self.nodes {
            return Err(EvalError::FuelExhausted);
        }
        self.nodes -= n;
        Ok(())
    }
}

/// Substitute `arg` for index 0 in `body` (the body of a binder).
fn instantiate(body: &Db, arg: &Db, budget: &mut Budget) -> Result<Db, EvalError> {
    fn go(t: &Db, arg: &Db, depth: usize, budget: &mut Budget) -> Result<Db, EvalError> {
        deep(|| {
            Ok(match t {
                Db::Bound(k) if *k == depth => {
                    budget.alloc(arg.size())?;
                    arg.shift_up(depth, 0)
                }
                Db::Bound(k) if *k > depth => Db::Bound(k - 1),
                Db::Lam(h, b) => Db::Lam(h.clone(), Box::new(go(b, arg, depth + 1, budget)?)),
                Db::App(f, a) => Db::App(
                    Box::new(go(f, arg, depth, budget)?),
                    Box::new(go(a, arg, depth, budget)?),
                ),
                other => other.clone(),
            })
        })
    }
    go(body, arg, 0, budget)
}

fn literal(d: &Db) -> Option<Literal> {
    match d {
        Db::Int(n) => Some(Literal::Int(*n)),
        Db::Bool(b) => Some(Literal::Bool(*b)),
        _ => None,
    }
}

fn from_literal(l: Literal) -> Db {
    match l {
        Literal::Int(n) => Db::Int(n),
        Literal::Bool(b) => Db::Bool(b),
    }
}

/// Reduce to weak head normal form, leftmost-outermost.
fn whnf(t: Db, budget: &mut Budget) -> Result<Db, EvalError> {
    let (mut head, mut args) = t.into_spine();
    loop {
        match head {
            Db::Lam(_, ref body) if !args.is_empty() => {
                budget.step()?;
                let arg = args.remove(0);
                let reduced = instantiate(body, &arg, budget)?;
                let (h, mut more) = reduced.into_spine();
                more.append(&mut args);
                head = h;
                args = more;
            }
            Db::App(..) => {
                let (h, mut more) = head.into_spine();
                more.append(&mut args);
                head = h;
                args = more;
            }
            Db::Prim(p) if args.len() >= p.arity() => {
                let Some(result) = delta(p, &mut args, budget)? else {
                    return Ok(Db::from_spine(head, args));
                };
                budget.step()?;
                args.drain(..p.arity());
                head = result;
            }
            _ => return Ok(Db::from_spine(head, args)),
        }
    }
}

/// Try the delta rule for `p` on the leading arguments, forcing the
/// operands it inspects to weak head normal form in place.
fn delta(p: Prim, args: &mut [Db], budget: &mut Budget) -> Result<Option<Db>, EvalError> {
    let mut force = |i: usize, budget: &mut Budget| -> Result<(), EvalError> {
        let t = std::mem::replace(&mut args[i], Db::Int(0));
        args[i] = deep(|| whnf(t, budget))?;
        Ok(())
    };
    if p == Prim::If {
        force(0, budget)?;
        return Ok(match args[0] {
            Db::Bool(true) => Some(args[1].clone()),
            Db::Bool(false) => Some(args[2].clone()),
            _ => None,
        });
    }
    force(0, budget)?;
    force(1, budget)?;
    Ok(match apply_delta(p, literal(&args[0]), literal(&args[1]))? {
        Delta::Value(l) => Some(from_literal(l)),
        Delta::Stuck => None,
    })
}

fn normalize(t: Db, budget: &mut Budget) -> Result<Db, EvalError> {
    deep(|| {
        let t = whnf(t, budget)?;
        match t {
            Db::Lam(h, b) => Ok(Db::Lam(h, Box::new(normalize(*b, budget)?))),
            other => {
                let (head, args) = other.into_spine();
                let args = args
                    .into_iter()
                    .map(|a| normalize(a, budget))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Db::from_spine(head, args))
            }
        }
    })
}

/// Eta-contract a beta-normal term bottom-up.
fn eta_contract(t: Db) -> Db {
    deep(|| match t {
        Db::Lam(h, b) => {
            let body = eta_contract(*b);
            if let Db::App(f, a) = &body {
                if matches!(**a, Db::Bound(0)) && !f.has_index(0) {
                    return f.shift_down(0);
                }
            }
            Db::Lam(h, Box::new(body))
        }
        Db::App(f, a) => Db::App(Box::new(eta_contract(*f)), Box::new(eta_contract(*a))),
        other => other,
    })
}

pub(crate) fn normalize_db(t: Db, fuel: u64) -> Result<Db, EvalError> {
    normalize(t, &mut Budget::new(fuel))
}

pub(crate) fn beta_eta_db(t: Db, fuel: u64) -> Result<Db, EvalError> {
    Ok(eta_contract(normalize_db(t, fuel)?))
}

/// Normal-order beta/delta reduction to full normal form.
pub fn beta_reduce(t: &Term, fuel: u64) -> Result<Term, EvalError> {
    Ok(normalize_db(Db::from_term(t), fuel)?.to_term())
}

/// Beta/delta normal form followed by eta contraction; the canonical form
/// used when comparing behaviours.
pub fn beta_eta_normal(t: &Term, fuel: u64) -> Result<Term, EvalError> {
    Ok(beta_eta_db(Db::from_term(t), fuel)?.to_term())
}

pub fn alpha_equivalent(a: &Term, b: &Term) -> bool {
    Db::from_term(a).alpha_eq(&Db::from_term(b))
}

/// Whether any beta or delta redex occurs anywhere in `t`.
pub fn has_redex(t: &Term) -> bool {
    deep(|| match t {
        Term::Lam(_, b) => has_redex(b),
        Term::App(..) => {
            let (head, args) = t.spine();
            let here = match head {
                Term::Lam(..) => true,
                Term::Prim(Prim::If) if args.len() >= 3 => matches!(args[0], Term::Bool(_)),
                Term::Prim(p) if *p != Prim::If && args.len() >= 2 => {
                    matches!(
                        (p, args[0], args[1]),
                        (Prim::Eq, Term::Bool(_), Term::Bool(_)) | (_, Term::Int(_), Term::Int(_))
                    )
                }
                _ => false,
            };
            here || has_redex(head) || args.into_iter().any(has_redex)
        }
        _ => false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lambda_ir::{parse_term, pretty_print};

    fn eval(src: &str) -> Result<Term, EvalError> {
        beta_reduce(&parse_term(src).unwrap(), DEFAULT_FUEL)
    }

    #[test]
    fn beta_axiom() {
        assert_eq!(eval("(\\x. x) 5").unwrap(), Term::Int(5));
    }

    #[test]
    fn delta_rules() {
        assert_eq!(eval("(\\x.\\y. #add x y) 2 3").unwrap(), Term::Int(5));
        assert_eq!(eval("#sub 2 3").unwrap(), Term::Int(-1));
        assert_eq!(eval("#mul 4 3").unwrap(), Term::Int(12));
        assert_eq!(eval("#eq 4 4").unwrap(), Term::Bool(true));
        assert_eq!(eval("#eq true false").unwrap(), Term::Bool(false));
        assert_eq!(eval("#if (#eq 1 2) 10 20").unwrap(), Term::Int(20));
        assert_eq!(eval("#if true 10 20").unwrap(), Term::Int(10));
        assert_eq!(eval("#addZ 1 2").unwrap(), Term::Int(3));
        assert_eq!(eval("#addR 1 2").unwrap(), Term::Int(3));
    }

    #[test]
    fn diverging_term_exhausts_fuel() {
        let omega = parse_term("(\\x. x x)(\\x. x x)").unwrap();
        assert_eq!(beta_reduce(&omega, 1000), Err(EvalError::FuelExhausted));
    }

    #[test]
    fn growing_divergence_exhausts_budget() {
        let t = parse_term("(\\x. x x x)(\\x. x x x)").unwrap();
        assert_eq!(beta_reduce(&t, DEFAULT_FUEL), Err(EvalError::FuelExhausted));
    }

    #[test]
    fn zero_fuel_on_normal_form_succeeds() {
        assert_eq!(beta_reduce(&Term::Int(1), 0), Ok(Term::Int(1)));
        assert_eq!(eval("(\\x. x) 5").map(|_| ()), Ok(()));
        assert!(beta_reduce(&parse_term("(\\x. x) 5").unwrap(), 0).is_err());
    }

    #[test]
    fn overflow_is_an_error() {
        assert_eq!(
            eval("#add 9223372036854775807 1"),
            Err(EvalError::Overflow("add"))
        );
        assert_eq!(eval("#mul -9223372036854775808 -1"), Err(EvalError::Overflow("mul")));
    }

    #[test]
    fn normal_order_skips_unused_divergence() {
        let t = parse_term("(\\x.\\y. y) ((\\x. x x)(\\x. x x)) 3").unwrap();
        assert_eq!(beta_reduce(&t, 100).unwrap(), Term::Int(3));
        let t = parse_term("#if true 1 ((\\x. x x)(\\x. x x))").unwrap();
        assert_eq!(beta_reduce(&t, 100).unwrap(), Term::Int(1));
    }

    #[test]
    fn reduces_under_binders_without_capture() {
        let t = parse_term("\\y. (\\x.\\y. x) y").unwrap();
        let nf = beta_reduce(&t, 100).unwrap();
        assert_eq!(pretty_print(&nf), "\\y y1. y");
        assert!(alpha_equivalent(&nf, &parse_term("\\a b. a").unwrap()));
    }

    #[test]
    fn stuck_primitive_keeps_normalized_arguments() {
        let t = parse_term("\\x. #add x ((\\y. y) 1)").unwrap();
        let nf = beta_reduce(&t, 100).unwrap();
        assert_eq!(pretty_print(&nf), "\\x. #add x 1");
        assert!(!has_redex(&nf));
    }

    #[test]
    fn alpha_equivalence() {
        let p = |s| parse_term(s).unwrap();
        assert!(alpha_equivalent(&p("\\x. x"), &p("\\y. y")));
        assert!(!alpha_equivalent(&p("\\x.\\y. x"), &p("\\x.\\y. y")));
        assert!(alpha_equivalent(&p("\\x. x (\\x. x)"), &p("\\a. a (\\b. b)")));
    }

    #[test]
    fn eta_normal_form() {
        let t = parse_term("\\x. \\y. #add x y").unwrap();
        assert_eq!(beta_eta_normal(&t, 100).unwrap(), Term::Prim(Prim::Add));
        let keep = parse_term("\\x. x x").unwrap();
        assert!(alpha_equivalent(&beta_eta_normal(&keep, 100).unwrap(), &keep));
    }

    #[test]
    fn redex_scan() {
        assert!(has_redex(&parse_term("(\\x. x) 1").unwrap()));
        assert!(has_redex(&parse_term("\\y. #add 1 2").unwrap()));
        assert!(!has_redex(&parse_term("\\y. #add y 2").unwrap()));
        assert!(!has_redex(&parse_term("#if 1 2 3").unwrap()));
    }
}
