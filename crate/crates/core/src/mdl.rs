//! Minimum-description-length search over combinator encodings.
//!
//! The objective is `lambda * |S| + (1 - lambda) * D(P, S)` where `|S|` is
//! the GAEL length of the encoding (tokens by default) and `D` the fraction
//! of probes on which source and encoding disagree. Decisions are the rule
//! set used for each top-level unit, followed by common-subterm extraction
//! moves; a beam keeps the best partial plans.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lambda_ir::{Program, Term, DEFAULT_FUEL};
use crate::lex::Dialect;
use crate::metrics::tokenize;
use crate::ski::{
    compare_on_probes, compile, gael_print, gael_print_program, AbstractError, ProbeConfig,
    ProbeStats, RuleSet, SkiProgram, SkiTerm,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthUnit {
    Tokens,
    Bytes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdlConfig {
    pub lambda_weight: f64,
    pub beam_width: usize,
    pub probes: ProbeConfig,
    /// Rule sets to explore; the first one is the baseline for undecided
    /// units.
    pub rule_sets: Vec<RuleSet>,
    pub extraction_enabled: bool,
    pub fuel: u64,
    pub length_unit: LengthUnit,
}

impl Default for MdlConfig {
    fn default() -> Self {
        MdlConfig {
            lambda_weight: 0.99,
            beam_width: 8,
            probes: ProbeConfig::default(),
            rule_sets: RuleSet::ALL.to_vec(),
            extraction_enabled: true,
            fuel: DEFAULT_FUEL,
            length_unit: LengthUnit::Tokens,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MdlError {
    #[error(transparent)]
    Open(#[from] AbstractError),
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl MdlConfig {
    pub fn validate(&self) -> Result<(), MdlError> {
        if !(0.0..=1.0).contains(&self.lambda_weight) {
            return Err(MdlError::Config(format!(
                "lambda weight {} outside [0, 1]",
                self.lambda_weight
            )));
        }
        if self.beam_width == 0 {
            return Err(MdlError::Config("beam width must be at least 1".into()));
        }
        if self.rule_sets.is_empty() {
            return Err(MdlError::Config("no rule sets to explore".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub decision: String,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressionPlan {
    pub encoded: SkiProgram,
    pub objective: f64,
    /// Encoding length in the configured unit.
    pub token_length: usize,
    pub distance: f64,
    /// Rule set chosen for each source unit, in program order.
    pub rules: Vec<(String, RuleSet)>,
    pub trace: Vec<TraceStep>,
}

impl CompressionPlan {
    pub fn recompute_objective(&self, lambda_weight: f64) -> f64 {
        combine(lambda_weight, self.token_length, self.distance)
    }
}

fn combine(lambda_weight: f64, length: usize, distance: f64) -> f64 {
    lambda_weight * length as f64 + (1.0 - lambda_weight) * distance
}

fn distance_of(stats: &ProbeStats) -> f64 {
    if stats.total == 0 {
        return 0.0;
    }
    (stats.mismatches as f64 + 0.5 * stats.exhausted as f64) / stats.total as f64
}

/// Fraction of probe tuples on which `p` and `s` disagree; exhausted
/// probes count half. Zero probes give zero.
pub fn semantic_distance(p: &Term, s: &SkiTerm, probes: &ProbeConfig, fuel: u64) -> f64 {
    distance_of(&compare_on_probes(p, s, probes, fuel))
}

pub fn gael_tokens(text: &str) -> usize {
    tokenize(text, Dialect::Gael)
        .expect("printed GAEL always lexes")
        .len()
}

fn measure(text: &str, unit: LengthUnit) -> usize {
    match unit {
        LengthUnit::Tokens => gael_tokens(text),
        LengthUnit::Bytes => text.len(),
    }
}

/// Objective of a single closed encoding against its source term.
pub fn mdl_objective(s: &SkiTerm, p: &Term, cfg: &MdlConfig) -> f64 {
    let len = measure(&gael_print(s), cfg.length_unit);
    let d = semantic_distance(p, s, &cfg.probes, cfg.fuel);
    combine(cfg.lambda_weight, len, d)
}

/// Source units of a program: definitions, then `main`.
fn units(prog: &Program) -> Vec<(String, Term)> {
    prog.defs
        .iter()
        .cloned()
        .chain(prog.main.clone().map(|m| ("main".to_string(), m)))
        .collect()
}

fn assemble(prog: &Program, encoded: Vec<SkiTerm>) -> SkiProgram {
    let mut it = encoded.into_iter();
    let defs = prog
        .defs
        .iter()
        .map(|(n, _)| (n.clone(), it.next().expect("one encoding per unit")))
        .collect();
    SkiProgram {
        defs,
        main: it.next(),
    }
}

/// Inline every definition that does not come from the source program.
fn expand_helpers(enc: &SkiProgram, source_names: &HashSet<&str>) -> SkiProgram {
    let mut helpers: Vec<(String, SkiTerm)> = Vec::new();
    let mut out = SkiProgram {
        defs: Vec::new(),
        main: None,
    };
    let expand = |t: &SkiTerm, helpers: &[(String, SkiTerm)]| {
        let mut t = t.clone();
        for (n, body) in helpers.iter().rev() {
            if t.has_var(n) {
                t = t.subst(n, body);
            }
        }
        t
    };
    for (name, body) in &enc.defs {
        let body = expand(body, &helpers);
        if source_names.contains(name.as_str()) {
            out.defs.push((name.clone(), body));
        } else {
            helpers.push((name.clone(), body));
        }
    }
    out.main = enc.main.as_ref().map(|m| expand(m, &helpers));
    out
}

/// Scores programs against one source, caching per-unit probe results.
///
/// Each unit is compared with references to other definitions held
/// abstract, so a unit's distance depends only on its own encoding.
struct Scorer<'a> {
    source: &'a Program,
    units: Vec<(String, Term)>,
    cfg: &'a MdlConfig,
    cache: HashMap<(usize, SkiTerm), ProbeStats>,
}

impl<'a> Scorer<'a> {
    fn new(source: &'a Program, cfg: &'a MdlConfig) -> Self {
        Scorer {
            source,
            units: units(source),
            cfg,
            cache: HashMap::new(),
        }
    }

    fn distance(&mut self, enc: &SkiProgram) -> f64 {
        let names: HashSet<&str> = self.source.defs.iter().map(|(n, _)| n.as_str()).collect();
        let expanded = expand_helpers(enc, &names);
        let terms: Vec<SkiTerm> = expanded.terms().cloned().collect();
        let (mut bad, mut total) = (0.0, 0usize);
        for (i, t) in terms.into_iter().enumerate() {
            let stats = match self.cache.get(&(i, t.clone())) {
                Some(s) => s.clone(),
                None => {
                    let s = compare_on_probes(&self.units[i].1, &t, &self.cfg.probes, self.cfg.fuel);
                    self.cache.insert((i, t), s.clone());
                    s
                }
            };
            bad += stats.mismatches as f64 + 0.5 * stats.exhausted as f64;
            total += stats.total;
        }
        if total == 0 {
            0.0
        } else {
            bad / total as f64
        }
    }

    fn score(&mut self, enc: &SkiProgram) -> (f64, usize, f64) {
        let len = measure(&gael_print_program(enc), self.cfg.length_unit);
        let d = self.distance(enc);
        (combine(self.cfg.lambda_weight, len, d), len, d)
    }
}

/// Objective, length and distance of an encoded program against its source.
pub fn program_objective(source: &Program, enc: &SkiProgram, cfg: &MdlConfig) -> (f64, usize, f64) {
    Scorer::new(source, cfg).score(enc)
}

/// Encode a whole program with the given rule set for each unit.
pub fn encode_with(prog: &Program, rules: &[RuleSet]) -> SkiProgram {
    let encoded = units(prog)
        .iter()
        .zip(rules)
        .map(|((_, t), r)| compile(t, *r))
        .collect();
    assemble(prog, encoded)
}

fn check_scoping(prog: &Program) -> Result<(), MdlError> {
    for (i, (name, t)) in units(prog).iter().enumerate() {
        let visible: HashSet<&str> = prog.defs[..i.min(prog.defs.len())]
            .iter()
            .map(|(n, _)| n.as_str())
            .collect();
        let open: Vec<String> = t
            .free_vars()
            .into_iter()
            .filter(|v| !visible.contains(v.as_str()))
            .collect();
        if !open.is_empty() {
            let _ = name;
            return Err(AbstractError::OpenTerm(open).into());
        }
    }
    Ok(())
}

pub fn compress_term(p: &Term, cfg: &MdlConfig) -> Result<CompressionPlan, MdlError> {
    compress_program(&Program::from_main(p.clone()), cfg)
}

pub fn compress_program(prog: &Program, cfg: &MdlConfig) -> Result<CompressionPlan, MdlError> {
    cfg.validate()?;
    check_scoping(prog)?;
    let mut scorer = Scorer::new(prog, cfg);
    let n = scorer.units.len();
    let encodings: Vec<HashMap<RuleSet, SkiTerm>> = scorer
        .units
        .iter()
        .map(|(_, t)| cfg.rule_sets.iter().map(|r| (*r, compile(t, *r))).collect())
        .collect();
    let baseline = cfg.rule_sets[0];
    let plan_for = |choices: &[RuleSet]| -> SkiProgram {
        let terms = (0..n)
            .map(|i| encodings[i][choices.get(i).unwrap_or(&baseline)].clone())
            .collect();
        assemble(prog, terms)
    };

    // Beam over per-unit rule choices; undecided units use the baseline.
    let mut beam: Vec<(Vec<RuleSet>, f64, String)> = vec![(Vec::new(), 0.0, String::new())];
    for _ in 0..n {
        let mut next = Vec::new();
        let mut seen = HashSet::new();
        for (choices, _, _) in &beam {
            for r in &cfg.rule_sets {
                let mut c = choices.clone();
                c.push(*r);
                if !seen.insert(c.clone()) {
                    continue;
                }
                let enc = plan_for(&c);
                let (obj, _, _) = scorer.score(&enc);
                next.push((c, obj, gael_print_program(&enc)));
            }
        }
        next.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.2.cmp(&b.2)));
        next.truncate(cfg.beam_width);
        beam = next;
    }
    let best = beam.swap_remove(0).0;

    let mut trace = Vec::new();
    let (base_obj, _, _) = scorer.score(&plan_for(&[]));
    trace.push(TraceStep {
        decision: format!("baseline: every unit {baseline}"),
        objective: base_obj,
    });
    for i in 0..n {
        let (obj, _, _) = scorer.score(&plan_for(&best[..=i]));
        trace.push(TraceStep {
            decision: format!("{}: {}", scorer.units[i].0, best[i]),
            objective: obj,
        });
    }

    let mut encoded = plan_for(&best);
    let (mut objective, mut length, mut distance) = scorer.score(&encoded);
    if cfg.extraction_enabled {
        let protected: HashSet<String> = prog.defs.iter().map(|(n, _)| n.clone()).collect();
        while let Some((candidate, name)) = extract_once(&encoded, &protected) {
            let (obj, len, d) = scorer.score(&candidate);
            if obj >= objective {
                break;
            }
            let body = candidate.def(&name).map(gael_print).unwrap_or_default();
            trace.push(TraceStep {
                decision: format!("extract {name} := {body}"),
                objective: obj,
            });
            encoded = candidate;
            (objective, length, distance) = (obj, len, d);
        }
    }

    Ok(CompressionPlan {
        encoded,
        objective,
        token_length: length,
        distance,
        rules: scorer
            .units
            .iter()
            .map(|(name, _)| name.clone())
            .zip(best)
            .collect(),
        trace,
    })
}

fn program_tokens(p: &SkiProgram) -> usize {
    gael_tokens(&gael_print_program(p))
}

fn count_subterms(t: &SkiTerm, counts: &mut HashMap<SkiTerm, usize>) {
    if let SkiTerm::App(f, a) = t {
        *counts.entry(t.clone()).or_default() += 1;
        count_subterms(f, counts);
        count_subterms(a, counts);
    }
}

fn replace_all(t: &SkiTerm, target: &SkiTerm, name: &str) -> SkiTerm {
    if t == target {
        return SkiTerm::Var(name.to_string());
    }
    match t {
        SkiTerm::App(f, a) => SkiTerm::app(replace_all(f, target, name), replace_all(a, target, name)),
        other => other.clone(),
    }
}

fn fresh_name(p: &SkiProgram, protected: &HashSet<String>) -> String {
    (0..)
        .map(|k| format!("c{k}"))
        .find(|n| !protected.contains(n) && p.def(n).is_none())
        .expect("unbounded name supply")
}

/// Abbreviate `target` everywhere with a new definition placed just before
/// its first use.
fn abbreviate(p: &SkiProgram, target: &SkiTerm, name: &str) -> SkiProgram {
    let mut defs = Vec::with_capacity(p.defs.len() + 1);
    let mut placed = false;
    for (n, body) in &p.defs {
        let replaced = replace_all(body, target, name);
        if !placed && replaced != *body {
            defs.push((name.to_string(), target.clone()));
            placed = true;
        }
        defs.push((n.clone(), replaced));
    }
    let main = p.main.as_ref().map(|m| replace_all(m, target, name));
    if !placed {
        defs.push((name.to_string(), target.clone()));
    }
    SkiProgram { defs, main }
}

/// The first improving extraction move, trying candidates by frequency,
/// then size, then text.
fn extract_once(p: &SkiProgram, protected: &HashSet<String>) -> Option<(SkiProgram, String)> {
    let mut counts = HashMap::new();
    for t in p.terms() {
        count_subterms(t, &mut counts);
    }
    let mut candidates: Vec<(SkiTerm, usize, usize, String)> = counts
        .into_iter()
        .filter(|(t, c)| *c >= 2 && t.size() >= 3)
        .map(|(t, c)| {
            let size = t.size();
            let text = gael_print(&t);
            (t, c, size, text)
        })
        .collect();
    candidates.sort_by(|a, b| b.1.cmp(&a.1).then(b.2.cmp(&a.2)).then_with(|| a.3.cmp(&b.3)));
    let before = program_tokens(p);
    let name = fresh_name(p, protected);
    candidates.into_iter().find_map(|(t, _, _, _)| {
        let next = abbreviate(p, &t, &name);
        (program_tokens(&next) < before).then(|| (next, name.clone()))
    })
}

/// Repeatedly abbreviate repeated subterms (at least three nodes) while the
/// GAEL token count strictly drops.
pub fn extract_common_subterms(prog: &SkiProgram, cfg: &MdlConfig) -> SkiProgram {
    let mut current = prog.clone();
    if !cfg.extraction_enabled {
        return current;
    }
    let protected = HashSet::new();
    while let Some((next, _)) = extract_once(&current, &protected) {
        current = next;
    }
    current
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lambda_ir::{parse_program, parse_term};
    use crate::ski::{bracket_abstract, parse_gael_program, parse_gael_term};

    #[test]
    fn identity_plan() {
        let plan = compress_term(&parse_term("\\x. x").unwrap(), &MdlConfig::default()).unwrap();
        assert_eq!(plan.encoded.main, Some(SkiTerm::I));
        assert_eq!(plan.token_length, 1);
        assert_eq!(plan.distance, 0.0);
        assert!((plan.recompute_objective(0.99) - plan.objective).abs() < 1e-12);
    }

    #[test]
    fn objective_extremes() {
        let p = parse_term("\\x.\\y. #add x y").unwrap();
        let s = bracket_abstract(&p, RuleSet::Naive).unwrap();
        let len = gael_tokens(&gael_print(&s));
        let lam1 = MdlConfig {
            lambda_weight: 1.0,
            ..MdlConfig::default()
        };
        assert_eq!(mdl_objective(&s, &p, &lam1), len as f64);
        let lam0 = MdlConfig {
            lambda_weight: 0.0,
            ..MdlConfig::default()
        };
        assert_eq!(mdl_objective(&s, &p, &lam0), 0.0);
        assert!(mdl_objective(&SkiTerm::K, &p, &lam0) > 0.0);
    }

    #[test]
    fn distance_cases() {
        let id = parse_term("\\x. x").unwrap();
        assert!(semantic_distance(&id, &SkiTerm::K, &ProbeConfig::default(), 1000) > 0.0);
        let t = parse_term("\\x.\\y. #if (#eq x y) 1 0").unwrap();
        for r in RuleSet::ALL {
            let s = bracket_abstract(&t, r).unwrap();
            assert_eq!(semantic_distance(&t, &s, &ProbeConfig::default(), 1000), 0.0);
        }
        let none = ProbeConfig {
            max_tuples: 0,
            ..ProbeConfig::default()
        };
        assert_eq!(semantic_distance(&id, &SkiTerm::K, &none, 1000), 0.0);
    }

    #[test]
    fn trace_is_monotone_and_rules_recorded() {
        let prog = parse_program("a := \\x. x; b := \\x.\\y. #add x y; b (a 1) 2").unwrap();
        let plan = compress_program(&prog, &MdlConfig::default()).unwrap();
        for w in plan.trace.windows(2) {
            assert!(w[1].objective <= w[0].objective);
        }
        assert_eq!(plan.rules.len(), 3);
        assert_eq!(gael_print(plan.encoded.def("b").unwrap()), "#add");
    }

    #[test]
    fn open_units_are_rejected() {
        let prog = Program::from_main(Term::var("nope"));
        assert!(matches!(
            compress_program(&prog, &MdlConfig::default()),
            Err(MdlError::Open(_))
        ));
    }

    #[test]
    fn config_validation() {
        let bad = MdlConfig {
            lambda_weight: 1.5,
            ..MdlConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = MdlConfig {
            beam_width: 0,
            ..MdlConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn extraction_of_repeated_subterm() {
        let x = "(S (K #add) I)";
        let src = format!("{x} {x} {x}");
        let prog = SkiProgram::from_main(parse_gael_term(&src).unwrap());
        let before = program_tokens(&prog);
        let out = extract_common_subterms(&prog, &MdlConfig::default());
        let after = program_tokens(&out);
        // The head occurrence prints without parentheses: 6 + 8 + 8 tokens.
        // Afterwards `c0 := S (K #add) I;` is 9 tokens and main is 3.
        assert_eq!(before, 22);
        assert_eq!(after, 12);
        assert_eq!(out.defs.len(), 1);
        assert_eq!(gael_print_program(&out), "c0 := S (K #add) I;\nc0 c0 c0\n");
        assert!(after < before);
    }

    #[test]
    fn extraction_rejected_when_not_shorter() {
        let prog = parse_gael_program("K I (K I)").unwrap();
        assert_eq!(extract_common_subterms(&prog, &MdlConfig::default()), prog);
        let single = parse_gael_program("id := I; id").unwrap();
        assert_eq!(extract_common_subterms(&single, &MdlConfig::default()), single);
    }
}
