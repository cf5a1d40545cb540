use super::SkiTerm;
use crate::lambda_ir::{apply_delta, deep, Budget, Delta, EvalError, Literal, Prim};

fn into_spine(t: SkiTerm) -> (SkiTerm, Vec<SkiTerm>) {
    let mut args = Vec::new();
    let mut t = t;
    while let SkiTerm::App(f, a) = t {
        args.push(*a);
        t = *f;
    }
    args.reverse();
    (t, args)
}

fn literal(t: &SkiTerm) -> Option<Literal> {
    match t {
        SkiTerm::Int(n) => Some(Literal::Int(*n)),
        SkiTerm::Bool(b) => Some(Literal::Bool(*b)),
        _ => None,
    }
}

/// Weak head normal form. Arguments are kept in a vector with the next
/// argument to consume at the end, so rewrites pop from the back.
fn whnf(t: SkiTerm, budget: &mut Budget) -> Result<SkiTerm, EvalError> {
    let (mut head, mut args) = into_spine(t);
    args.reverse();
    loop {
        match head {
            SkiTerm::App(..) => {
                let (h, more) = into_spine(head);
                args.extend(more.into_iter().rev());
                head = h;
            }
            SkiTerm::I if !args.is_empty() => {
                budget.step()?;
                head = args.pop().unwrap();
            }
            SkiTerm::K if args.len() >= 2 => {
                budget.step()?;
                let x = args.pop().unwrap();
                args.pop();
                head = x;
            }
            SkiTerm::S if args.len() >= 3 => {
                budget.step()?;
                let x = args.pop().unwrap();
                let y = args.pop().unwrap();
                let z = args.pop().unwrap();
                budget.alloc(z.size() as u64)?;
                args.push(SkiTerm::app(y, z.clone()));
                args.push(z);
                head = x;
            }
            SkiTerm::Prim(p) if args.len() >= p.arity() => {
                let n = args.len();
                let result = deep(|| -> Result<Option<SkiTerm>, EvalError> {
                    let mut force = |i: usize, budget: &mut Budget| -> Result<(), EvalError> {
                        let t = std::mem::replace(&mut args[i], SkiTerm::I);
                        args[i] = whnf(t, budget)?;
                        Ok(())
                    };
                    if p == Prim::If {
                        force(n - 1, budget)?;
                        return Ok(match args[n - 1] {
                            SkiTerm::Bool(true) => Some(args[n - 2].clone()),
                            SkiTerm::Bool(false) => Some(args[n - 3].clone()),
                            _ => None,
                        });
                    }
                    force(n - 1, budget)?;
                    force(n - 2, budget)?;
                    Ok(match apply_delta(p, literal(&args[n - 1]), literal(&args[n - 2]))? {
                        Delta::Value(Literal::Int(v)) => Some(SkiTerm::Int(v)),
                        Delta::Value(Literal::Bool(v)) => Some(SkiTerm::Bool(v)),
                        Delta::Stuck => None,
                    })
                })?;
                match result {
                    Some(r) => {
                        budget.step()?;
                        args.truncate(n - p.arity());
                        head = r;
                    }
                    None => break,
                }
            }
            _ => break,
        }
    }
    args.reverse();
    Ok(SkiTerm::apply(head, args))
}

fn normalize(t: SkiTerm, budget: &mut Budget) -> Result<SkiTerm, EvalError> {
    deep(|| {
        let t = whnf(t, budget)?;
        let (head, args) = into_spine(t);
        let args = args
            .into_iter()
            .map(|a| normalize(a, budget))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SkiTerm::apply(head, args))
    })
}

/// Normal-order combinator rewriting (`S x y z -> x z (y z)`,
/// `K x y -> x`, `I x -> x`, plus the primitive delta rules).
pub fn ski_reduce(s: &SkiTerm, fuel: u64) -> Result<SkiTerm, EvalError> {
    normalize(s.clone(), &mut Budget::new(fuel))
}
