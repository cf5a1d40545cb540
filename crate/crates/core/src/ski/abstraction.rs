use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::SkiTerm;
use crate::lambda_ir::{deep, Term};

/// Rule sets for bracket abstraction. Each one extends the previous.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleSet {
    /// `S` and `K` only; `[x]x = S K K`.
    Naive,
    /// Adds `[x]x = I`.
    WithI,
    /// Adds eta: `[x](M x) = M` when `x` is not free in `M`.
    EtaOptimized,
}

impl RuleSet {
    pub const ALL: [RuleSet; 3] = [RuleSet::Naive, RuleSet::WithI, RuleSet::EtaOptimized];

    pub fn name(self) -> &'static str {
        match self {
            RuleSet::Naive => "naive",
            RuleSet::WithI => "i",
            RuleSet::EtaOptimized => "eta",
        }
    }
}

impl fmt::Display for RuleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RuleSet {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RuleSet::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| format!("unknown rule set `{s}` (expected naive, i or eta)"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AbstractError {
    #[error("term is open: free variables {0:?}")]
    OpenTerm(Vec<String>),
}

/// Translate a closed lambda term into combinator form.
pub fn bracket_abstract(t: &Term, rules: RuleSet) -> Result<SkiTerm, AbstractError> {
    let free = t.free_vars();
    if !free.is_empty() {
        return Err(AbstractError::OpenTerm(free.into_iter().collect()));
    }
    Ok(compile(t, rules))
}

/// Like [`bracket_abstract`] but free variables are kept as named
/// references, for definition bodies that mention earlier definitions.
pub fn compile(t: &Term, rules: RuleSet) -> SkiTerm {
    deep(|| match t {
        Term::Var(v) => SkiTerm::Var(v.clone()),
        Term::Lam(x, body) => abstract_var(x, compile(body, rules), rules),
        Term::App(f, a) => SkiTerm::app(compile(f, rules), compile(a, rules)),
        Term::Int(n) => SkiTerm::Int(*n),
        Term::Bool(b) => SkiTerm::Bool(*b),
        Term::Prim(p) => SkiTerm::Prim(*p),
    })
}

fn identity(rules: RuleSet) -> SkiTerm {
    match rules {
        RuleSet::Naive => SkiTerm::apply(SkiTerm::S, [SkiTerm::K, SkiTerm::K]),
        _ => SkiTerm::I,
    }
}

/// `[x] body` for a lambda-free body.
fn abstract_var(x: &str, body: SkiTerm, rules: RuleSet) -> SkiTerm {
    deep(|| {
        if !body.has_var(x) {
            return SkiTerm::app(SkiTerm::K, body);
        }
        match body {
            SkiTerm::Var(_) => identity(rules),
            SkiTerm::App(m, n) => {
                if rules == RuleSet::EtaOptimized
                    && matches!(&*n, SkiTerm::Var(v) if v == x)
                    && !m.has_var(x)
                {
                    return *m;
                }
                SkiTerm::apply(
                    SkiTerm::S,
                    [abstract_var(x, *m, rules), abstract_var(x, *n, rules)],
                )
            }
            _ => unreachable!("only variables and applications mention a variable"),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lambda_ir::parse_term;
    use crate::ski::gael_print;

    fn enc(src: &str, rules: RuleSet) -> String {
        gael_print(&bracket_abstract(&parse_term(src).unwrap(), rules).unwrap())
    }

    #[test]
    fn base_rules() {
        assert_eq!(enc("\\x. x", RuleSet::WithI), "I");
        assert_eq!(enc("\\x. x", RuleSet::Naive), "S K K");
        assert_eq!(enc("\\x. 5", RuleSet::Naive), "K 5");
        assert_eq!(enc("\\x.\\y. x", RuleSet::EtaOptimized), "K");
        assert_eq!(enc("\\x.\\y. x", RuleSet::WithI), "S (K K) I");
    }

    #[test]
    fn eta_shrinks_addition() {
        let naive = bracket_abstract(&parse_term("\\x.\\y. #add x y").unwrap(), RuleSet::Naive).unwrap();
        let eta = bracket_abstract(&parse_term("\\x.\\y. #add x y").unwrap(), RuleSet::EtaOptimized).unwrap();
        assert_eq!(gael_print(&eta), "#add");
        assert!(eta.app_count() < naive.app_count());
    }

    #[test]
    fn open_terms_rejected() {
        let t = Term::lam("x", Term::app(Term::var("f"), Term::var("x")));
        assert_eq!(
            bracket_abstract(&t, RuleSet::WithI),
            Err(AbstractError::OpenTerm(vec!["f".into()]))
        );
        assert_eq!(gael_print(&compile(&t, RuleSet::EtaOptimized)), "f");
        assert_eq!(gael_print(&compile(&t, RuleSet::WithI)), "S (K f) I");
    }

    #[test]
    fn shadowed_binders() {
        assert_eq!(enc("\\x.\\x. x", RuleSet::WithI), "K I");
    }

    #[test]
    fn rule_set_names_parse() {
        for r in RuleSet::ALL {
            assert_eq!(r.name().parse::<RuleSet>().unwrap(), r);
        }
        assert!("bogus".parse::<RuleSet>().is_err());
    }
}
