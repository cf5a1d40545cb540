//! Behavioural equivalence by probing: both sides are applied to the same
//! integer argument tuples, reduced, and their normal forms compared.
//!
//! Results are compared in the lambda domain: combinator normal forms are
//! decoded and re-normalized, and both sides are eta-contracted, so a
//! partially applied `K 0` and `\y. 0` agree.

use serde::{Deserialize, Serialize};

use super::{ski_decode, ski_reduce, SkiTerm};
use crate::lambda_ir::{beta_eta_db, normalize_db, Db, EvalError, Term};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeConfig {
    /// Candidate integer arguments.
    pub values: Vec<i64>,
    /// Tuple length; inferred from the subjects when `None`.
    pub arity: Option<usize>,
    /// Cap on the number of tuples taken from the Cartesian product.
    pub max_tuples: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            values: vec![-2, -1, 0, 1, 2, 3],
            arity: None,
            max_tuples: 216,
        }
    }
}

impl ProbeConfig {
    /// Lexicographic enumeration of the Cartesian product (first position
    /// varies slowest), truncated to `max_tuples`.
    pub fn tuples(&self, arity: usize) -> Vec<Vec<i64>> {
        let mut out = Vec::new();
        if self.max_tuples == 0 || (arity > 0 && self.values.is_empty()) {
            return out;
        }
        let mut idx = vec![0usize; arity];
        loop {
            out.push(idx.iter().map(|&i| self.values[i]).collect());
            if out.len() >= self.max_tuples {
                return out;
            }
            let mut pos = arity;
            loop {
                if pos == 0 {
                    return out;
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < self.values.len() {
                    break;
                }
                idx[pos] = 0;
            }
        }
    }
}

/// Either side of an equivalence query.
#[derive(Debug, Clone, Copy)]
pub enum Subject<'a> {
    Lambda(&'a Term),
    Ski(&'a SkiTerm),
}

impl<'a> From<&'a Term> for Subject<'a> {
    fn from(t: &'a Term) -> Self {
        Subject::Lambda(t)
    }
}

impl<'a> From<&'a SkiTerm> for Subject<'a> {
    fn from(s: &'a SkiTerm) -> Self {
        Subject::Ski(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum Verdict {
    Equal,
    Different { witness: Vec<i64> },
    Unknown,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Equal => "equal",
            Verdict::Different { .. } => "different",
            Verdict::Unknown => "unknown",
        }
    }
}

/// Per-probe tallies behind a verdict.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeStats {
    pub arity: usize,
    pub total: usize,
    pub mismatches: usize,
    /// Probes where either side ran out of fuel and no mismatch was seen.
    pub exhausted: usize,
    /// Lowest-index mismatching tuple.
    pub first_witness: Option<Vec<i64>>,
}

impl ProbeStats {
    pub fn verdict(&self) -> Verdict {
        match (&self.first_witness, self.exhausted) {
            (Some(w), _) => Verdict::Different { witness: w.clone() },
            (None, 0) => Verdict::Equal,
            (None, _) => Verdict::Unknown,
        }
    }
}

enum Outcome {
    Value(Db),
    Overflow,
    Exhausted,
}

fn lambda_view(s: Subject<'_>) -> Term {
    match s {
        Subject::Lambda(t) => t.clone(),
        Subject::Ski(s) => ski_decode(s),
    }
}

fn inferred_arity(s: Subject<'_>, fuel: u64) -> usize {
    let view = lambda_view(s);
    match normalize_db(Db::from_term(&view), fuel) {
        Ok(nf) => {
            let mut n = 0;
            let mut t = &nf;
            while let Db::Lam(_, b) = t {
                n += 1;
                t = b;
            }
            n
        }
        Err(_) => view.leading_lams(),
    }
}

fn run(s: Subject<'_>, args: &[i64], fuel: u64) -> Outcome {
    let result = match s {
        Subject::Lambda(t) => {
            let applied = Term::apply(t.clone(), args.iter().map(|&v| Term::Int(v)));
            beta_eta_db(Db::from_term(&applied), fuel)
        }
        Subject::Ski(s) => {
            let applied = SkiTerm::apply(s.clone(), args.iter().map(|&v| SkiTerm::Int(v)));
            ski_reduce(&applied, fuel)
                .and_then(|nf| beta_eta_db(Db::from_term(&ski_decode(&nf)), fuel))
        }
    };
    match result {
        Ok(v) => Outcome::Value(v),
        Err(EvalError::Overflow(_)) => Outcome::Overflow,
        Err(EvalError::FuelExhausted) => Outcome::Exhausted,
    }
}

/// Probe both sides and tally agreement.
pub fn compare_on_probes<'a, 'b>(
    a: impl Into<Subject<'a>>,
    b: impl Into<Subject<'b>>,
    probes: &ProbeConfig,
    fuel: u64,
) -> ProbeStats {
    let (a, b) = (a.into(), b.into());
    let arity = probes
        .arity
        .unwrap_or_else(|| inferred_arity(a, fuel).max(inferred_arity(b, fuel)));
    let tuples = probes.tuples(arity);
    let mut stats = ProbeStats {
        arity,
        total: tuples.len(),
        mismatches: 0,
        exhausted: 0,
        first_witness: None,
    };
    for tuple in tuples {
        match (run(a, &tuple, fuel), run(b, &tuple, fuel)) {
            (Outcome::Exhausted, _) | (_, Outcome::Exhausted) => stats.exhausted += 1,
            (Outcome::Overflow, Outcome::Overflow) => {}
            (Outcome::Value(x), Outcome::Value(y)) if x.alpha_eq(&y) => {}
            _ => {
                stats.mismatches += 1;
                if stats.first_witness.is_none() {
                    stats.first_witness = Some(tuple);
                }
            }
        }
    }
    stats
}

pub fn behavioral_equal<'a, 'b>(
    a: impl Into<Subject<'a>>,
    b: impl Into<Subject<'b>>,
    probes: &ProbeConfig,
    fuel: u64,
) -> Verdict {
    compare_on_probes(a, b, probes, fuel).verdict()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lambda_ir::{parse_term, DEFAULT_FUEL};
    use crate::ski::parse_gael_term;

    fn ski(src: &str) -> SkiTerm {
        parse_gael_term(src).unwrap()
    }

    #[test]
    fn tuple_enumeration() {
        let cfg = ProbeConfig::default();
        assert_eq!(cfg.tuples(0), vec![Vec::<i64>::new()]);
        assert_eq!(cfg.tuples(1).len(), 6);
        let t3 = cfg.tuples(3);
        assert_eq!(t3.len(), 216);
        assert_eq!(t3[0], vec![-2, -2, -2]);
        assert_eq!(t3[1], vec![-2, -2, -1]);
        assert_eq!(cfg.tuples(4).len(), 216);
        let none = ProbeConfig {
            max_tuples: 0,
            ..ProbeConfig::default()
        };
        assert!(none.tuples(2).is_empty());
    }

    #[test]
    fn skk_is_identity() {
        let cfg = ProbeConfig {
            values: (0..8).collect(),
            ..ProbeConfig::default()
        };
        assert_eq!(
            behavioral_equal(&ski("S K K"), &SkiTerm::I, &cfg, DEFAULT_FUEL),
            Verdict::Equal
        );
    }

    #[test]
    fn k_differs_from_i_at_first_pair() {
        let stats = compare_on_probes(&SkiTerm::K, &SkiTerm::I, &ProbeConfig::default(), DEFAULT_FUEL);
        assert_eq!(stats.arity, 2);
        assert_eq!(stats.verdict(), Verdict::Different { witness: vec![-2, -2] });
    }

    #[test]
    fn lambda_against_combinators() {
        let t = parse_term("\\x.\\y. #add x y").unwrap();
        assert_eq!(
            behavioral_equal(&t, &ski("#add"), &ProbeConfig::default(), DEFAULT_FUEL),
            Verdict::Equal
        );
        assert!(matches!(
            behavioral_equal(&t, &ski("#sub"), &ProbeConfig::default(), DEFAULT_FUEL),
            Verdict::Different { .. }
        ));
    }

    #[test]
    fn partial_results_compare_up_to_eta() {
        let t = parse_term("\\x.\\y. x").unwrap();
        let cfg = ProbeConfig {
            arity: Some(1),
            ..ProbeConfig::default()
        };
        assert_eq!(behavioral_equal(&t, &SkiTerm::K, &cfg, DEFAULT_FUEL), Verdict::Equal);
    }

    #[test]
    fn divergence_is_unknown() {
        let omega = ski("S I I (S I I)");
        let t = parse_term("(\\x. x x)(\\x. x x)").unwrap();
        assert_eq!(
            behavioral_equal(&t, &omega, &ProbeConfig::default(), 200),
            Verdict::Unknown
        );
    }

    #[test]
    fn overflow_on_both_sides_agrees() {
        let t = parse_term("#mul 9223372036854775807 2").unwrap();
        let s = ski("#mul 9223372036854775807 2");
        assert_eq!(behavioral_equal(&t, &s, &ProbeConfig::default(), 100), Verdict::Equal);
        assert!(matches!(
            behavioral_equal(&t, &ski("0"), &ProbeConfig::default(), 100),
            Verdict::Different { .. }
        ));
    }
}
