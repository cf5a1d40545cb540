use super::SkiTerm;
use crate::lambda_ir::{deep, Term};

fn s_term() -> Term {
    let v = Term::var;
    Term::lam(
        "x",
        Term::lam(
            "y",
            Term::lam(
                "z",
                Term::app(Term::app(v("x"), v("z")), Term::app(v("y"), v("z"))),
            ),
        ),
    )
}

/// Replace each combinator by its defining lambda term; everything else is
/// kept in place.
pub fn ski_decode(s: &SkiTerm) -> Term {
    deep(|| match s {
        SkiTerm::S => s_term(),
        SkiTerm::K => Term::lam("x", Term::lam("y", Term::var("x"))),
        SkiTerm::I => Term::lam("x", Term::var("x")),
        SkiTerm::App(f, a) => Term::app(ski_decode(f), ski_decode(a)),
        SkiTerm::Int(n) => Term::Int(*n),
        SkiTerm::Bool(b) => Term::Bool(*b),
        SkiTerm::Prim(p) => Term::Prim(*p),
        SkiTerm::Var(v) => Term::Var(v.clone()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lambda_ir::{beta_reduce, pretty_print};

    #[test]
    fn combinators() {
        assert_eq!(pretty_print(&ski_decode(&SkiTerm::I)), "\\x. x");
        assert_eq!(pretty_print(&ski_decode(&SkiTerm::K)), "\\x y. x");
        assert_eq!(pretty_print(&ski_decode(&SkiTerm::S)), "\\x y z. x z (y z)");
    }

    #[test]
    fn applied_constant() {
        let t = ski_decode(&SkiTerm::app(SkiTerm::K, SkiTerm::Int(5)));
        assert_eq!(pretty_print(&t), "(\\x y. x) 5");
        assert_eq!(pretty_print(&beta_reduce(&t, 10).unwrap()), "\\y. 5");
    }
}
