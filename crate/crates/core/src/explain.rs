//! Controlled-English explanations of combinator terms, and their inverse.
//!
//! Every leaf gets one sentence from a fixed table; every application spine
//! gets one compositional sentence (`H applied to X, then to Y`). Each
//! sentence is anchored by a path of `f` (function) / `a` (argument) steps
//! from the root. Text form is one sentence per line: `[path] sentence`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lambda_ir::Prim;
use crate::ski::SkiTerm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Step {
    F,
    A,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Anchor(pub Vec<Step>);

impl Anchor {
    fn child(&self, s: Step) -> Anchor {
        let mut v = self.0.clone();
        v.push(s);
        Anchor(v)
    }

    /// A spine root is an application that is not itself the function part
    /// of a larger application.
    fn is_spine_root_position(&self) -> bool {
        self.0.last() != Some(&Step::F)
    }

    pub fn parse(s: &str) -> Option<Anchor> {
        s.chars()
            .map(|c| match c {
                'f' => Some(Step::F),
                'a' => Some(Step::A),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(Anchor)
    }
}

impl fmt::Display for Anchor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            f.write_str(match s {
                Step::F => "f",
                Step::A => "a",
            })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub text: String,
    pub anchor: Anchor,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplanationDoc {
    pub sentences: Vec<Sentence>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("sentence {index}: {message}")]
pub struct ExplainError {
    pub index: usize,
    pub message: String,
}

fn err(index: usize, message: impl Into<String>) -> ExplainError {
    ExplainError {
        index,
        message: message.into(),
    }
}

const S_TEXT: &str = "apply the first argument to the third and to the second applied to the third";
const K_TEXT: &str = "a constant function returning its first argument";
const I_TEXT: &str = "the identity function";

fn prim_text(p: Prim) -> &'static str {
    match p {
        Prim::Add => "addition",
        Prim::Sub => "subtraction",
        Prim::Mul => "multiplication",
        Prim::Eq => "the equality test",
        Prim::If => "the conditional choice",
        Prim::AddZ => "integer addition",
        Prim::AddR => "real addition",
    }
}

const PRIMS: [Prim; 7] = [
    Prim::Add,
    Prim::Sub,
    Prim::Mul,
    Prim::Eq,
    Prim::If,
    Prim::AddZ,
    Prim::AddR,
];

fn leaf_text(t: &SkiTerm) -> String {
    match t {
        SkiTerm::S => S_TEXT.into(),
        SkiTerm::K => K_TEXT.into(),
        SkiTerm::I => I_TEXT.into(),
        SkiTerm::Prim(p) => prim_text(*p).into(),
        SkiTerm::Int(n) => format!("the integer {n}"),
        SkiTerm::Bool(b) => format!("the boolean {b}"),
        SkiTerm::Var(v) => format!("the reference to {v}"),
        SkiTerm::App(..) => unreachable!("applications are not leaves"),
    }
}

fn parse_leaf(text: &str) -> Option<SkiTerm> {
    match text {
        S_TEXT => return Some(SkiTerm::S),
        K_TEXT => return Some(SkiTerm::K),
        I_TEXT => return Some(SkiTerm::I),
        "the boolean true" => return Some(SkiTerm::Bool(true)),
        "the boolean false" => return Some(SkiTerm::Bool(false)),
        _ => {}
    }
    if let Some(p) = PRIMS.iter().find(|p| prim_text(**p) == text) {
        return Some(SkiTerm::Prim(*p));
    }
    if let Some(n) = text.strip_prefix("the integer ") {
        // Reject non-canonical spellings such as `+3` or `007`.
        return n
            .parse::<i64>()
            .ok()
            .filter(|v| v.to_string() == n)
            .map(SkiTerm::Int);
    }
    if let Some(v) = text.strip_prefix("the reference to ") {
        let mut cs = v.chars();
        let ok = cs.next().is_some_and(|c| c.is_ascii_lowercase())
            && cs.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_');
        return ok.then(|| SkiTerm::Var(v.to_string()));
    }
    None
}

/// Compositional phrase for a whole subterm.
fn phrase(t: &SkiTerm) -> String {
    match t {
        SkiTerm::App(..) => {
            let (head, args) = t.spine();
            let mut out = phrase(head);
            for (i, a) in args.iter().enumerate() {
                out.push_str(if i == 0 { " applied to " } else { ", then to " });
                if a.is_leaf() {
                    out.push_str(&phrase(a));
                } else {
                    out.push('(');
                    out.push_str(&phrase(a));
                    out.push(')');
                }
            }
            out
        }
        leaf => leaf_text(leaf),
    }
}

fn walk(t: &SkiTerm, at: Anchor, out: &mut Vec<Sentence>) {
    crate::lambda_ir::deep(|| match t {
        SkiTerm::App(..) => {
            out.push(Sentence {
                text: phrase(t),
                anchor: at.clone(),
            });
            let (head, args) = t.spine();
            let mut head_at = at.clone();
            for _ in 0..args.len() {
                head_at = head_at.child(Step::F);
            }
            walk(head, head_at, out);
            for (i, a) in args.iter().enumerate() {
                let mut arg_at = at.clone();
                for _ in 0..args.len() - 1 - i {
                    arg_at = arg_at.child(Step::F);
                }
                walk(a, arg_at.child(Step::A), out);
            }
        }
        leaf => out.push(Sentence {
            text: leaf_text(leaf),
            anchor: at,
        }),
    })
}

/// Pre-order explanation: each spine sentence precedes the sentences for
/// its head and arguments.
pub fn explain_term(s: &SkiTerm) -> ExplanationDoc {
    let mut sentences = Vec::new();
    walk(s, Anchor::default(), &mut sentences);
    ExplanationDoc { sentences }
}

fn build(
    at: &Anchor,
    leaves: &BTreeMap<Anchor, (usize, SkiTerm)>,
    inner: &BTreeSet<Anchor>,
    used: &mut usize,
) -> Result<SkiTerm, ExplainError> {
    crate::lambda_ir::deep(|| {
        if let Some((_, t)) = leaves.get(at) {
            *used += 1;
            return Ok(t.clone());
        }
        if !inner.contains(at) {
            return Err(err(0, format!("no sentence covers position [{at}]")));
        }
        let f = build(&at.child(Step::F), leaves, inner, used)?;
        let a = build(&at.child(Step::A), leaves, inner, used)?;
        Ok(SkiTerm::app(f, a))
    })
}

fn subterm<'t>(t: &'t SkiTerm, at: &Anchor) -> Option<&'t SkiTerm> {
    at.0.iter().try_fold(t, |t, s| match (t, s) {
        (SkiTerm::App(f, _), Step::F) => Some(&**f),
        (SkiTerm::App(_, a), Step::A) => Some(&**a),
        _ => None,
    })
}

pub fn parse_explanation(doc: &ExplanationDoc) -> Result<SkiTerm, ExplainError> {
    if doc.sentences.is_empty() {
        return Err(err(0, "empty explanation"));
    }
    let mut leaves = BTreeMap::new();
    let mut spines = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, s) in doc.sentences.iter().enumerate() {
        if !seen.insert(s.anchor.clone()) {
            return Err(err(i, format!("duplicate anchor [{}]", s.anchor)));
        }
        match parse_leaf(&s.text) {
            Some(t) => {
                leaves.insert(s.anchor.clone(), (i, t));
            }
            None if s.text.contains(" applied to ") => spines.push(i),
            None => return Err(err(i, format!("unrecognized sentence {:?}", s.text))),
        }
    }
    // Every proper prefix of a leaf anchor is an application node.
    let mut inner = BTreeSet::new();
    for a in leaves.keys() {
        for k in 0..a.0.len() {
            inner.insert(Anchor(a.0[..k].to_vec()));
        }
    }
    for (a, (i, _)) in &leaves {
        if inner.contains(a) {
            return Err(err(*i, format!("leaf at [{a}] has sentences beneath it")));
        }
    }
    let mut used = 0;
    let term = build(&Anchor::default(), &leaves, &inner, &mut used)?;
    if used != leaves.len() {
        let stray = leaves
            .values()
            .map(|(i, _)| *i)
            .find(|i| subterm(&term, &doc.sentences[*i].anchor).is_none())
            .unwrap_or(0);
        return Err(err(stray, "leaf is not reachable from the root"));
    }
    let mut covered = BTreeSet::new();
    for i in spines {
        let s = &doc.sentences[i];
        let node = subterm(&term, &s.anchor)
            .filter(|n| matches!(n, SkiTerm::App(..)) && s.anchor.is_spine_root_position())
            .ok_or_else(|| err(i, format!("no application spine at [{}]", s.anchor)))?;
        if phrase(node) != s.text {
            return Err(err(i, "sentence does not match the term it anchors"));
        }
        covered.insert(s.anchor.clone());
    }
    let missing = inner
        .iter()
        .find(|a| a.is_spine_root_position() && !covered.contains(*a));
    if let Some(a) = missing {
        return Err(err(doc.sentences.len(), format!("missing sentence for spine at [{a}]")));
    }
    Ok(term)
}

impl ExplanationDoc {
    pub fn to_text(&self) -> String {
        self.sentences
            .iter()
            .map(|s| format!("[{}] {}\n", s.anchor, s.text))
            .collect()
    }

    /// Inverse of [`ExplanationDoc::to_text`]; blank lines are ignored.
    pub fn from_text(text: &str) -> Result<ExplanationDoc, ExplainError> {
        let mut sentences = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let index = sentences.len();
            let rest = line
                .strip_prefix('[')
                .ok_or_else(|| err(index, "expected `[path]` prefix"))?;
            let (path, body) = rest
                .split_once("] ")
                .ok_or_else(|| err(index, "expected `] ` after path"))?;
            let anchor = Anchor::parse(path).ok_or_else(|| err(index, format!("bad path {path:?}")))?;
            sentences.push(Sentence {
                text: body.to_string(),
                anchor,
            });
        }
        Ok(ExplanationDoc { sentences })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ski::parse_gael_term;

    fn round(src: &str) {
        let t = parse_gael_term(src).unwrap();
        let doc = explain_term(&t);
        assert_eq!(parse_explanation(&doc).unwrap(), t, "{src}");
        let back = ExplanationDoc::from_text(&doc.to_text()).unwrap();
        assert_eq!(back, doc);
    }

    #[test]
    fn leaf_templates() {
        assert_eq!(explain_term(&SkiTerm::I).to_text(), "[] the identity function\n");
        assert_eq!(explain_term(&SkiTerm::K).sentences[0].text, K_TEXT);
        assert_eq!(
            explain_term(&parse_gael_term("#addZ").unwrap()).sentences[0].text,
            "integer addition"
        );
    }

    #[test]
    fn compositional_sentence() {
        let doc = explain_term(&parse_gael_term("I 5").unwrap());
        assert_eq!(
            doc.to_text(),
            "[] the identity function applied to the integer 5\n\
             [f] the identity function\n\
             [a] the integer 5\n"
        );
        let doc = explain_term(&parse_gael_term("S (K I) x").unwrap());
        assert_eq!(
            doc.sentences[0].text,
            format!("{S_TEXT} applied to ({K_TEXT} applied to {I_TEXT}), then to the reference to x")
        );
    }

    #[test]
    fn round_trips() {
        for src in ["I", "S K K", "S (K I)", "S (S (K #addR) I) (K -3)", "#if true 1 (K 0 false)", "f (g 1) (h (k 2))"] {
            round(src);
        }
    }

    #[test]
    fn coverage_count() {
        let t = parse_gael_term("S (K (I 1)) (S K) 2").unwrap();
        let doc = explain_term(&t);
        // 7 leaves; spines at the root, `K (I 1)`, `I 1` and `S K`.
        assert_eq!(doc.sentences.len(), 7 + 4);
    }

    #[test]
    fn unknown_sentence_reports_index() {
        let mut doc = explain_term(&parse_gael_term("K 1 2").unwrap());
        doc.sentences[2].text = "something else entirely".into();
        assert_eq!(parse_explanation(&doc).unwrap_err().index, 2);
    }

    #[test]
    fn inconsistent_docs_rejected() {
        let mut doc = explain_term(&parse_gael_term("K 1 2").unwrap());
        doc.sentences[0].text = format!("{K_TEXT} applied to the integer 2, then to the integer 1");
        assert_eq!(parse_explanation(&doc).unwrap_err().index, 0);

        let mut doc = explain_term(&parse_gael_term("K 1").unwrap());
        doc.sentences.remove(0);
        assert!(parse_explanation(&doc).is_err());

        let doc = ExplanationDoc::from_text("[] the integer 007\n").unwrap();
        assert_eq!(parse_explanation(&doc).unwrap_err().index, 0);
        assert!(ExplanationDoc::from_text("the identity function").is_err());
    }
}
