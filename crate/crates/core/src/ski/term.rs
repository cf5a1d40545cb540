use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::lambda_ir::{deep, ParseError, Prim};
use crate::lex::{lex, Dialect, Token, TokenClass};

/// Combinator-form term: the compressed representation. Never contains a
/// binder.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SkiTerm {
    S,
    K,
    I,
    App(Box<SkiTerm>, Box<SkiTerm>),
    Int(i64),
    Bool(bool),
    Prim(Prim),
    /// Named reference: a top-level definition of the enclosing program, or
    /// a free variable while a binder is being abstracted.
    Var(String),
}

impl SkiTerm {
    pub fn app(f: SkiTerm, a: SkiTerm) -> SkiTerm {
        SkiTerm::App(Box::new(f), Box::new(a))
    }

    pub fn apply(head: SkiTerm, args: impl IntoIterator<Item = SkiTerm>) -> SkiTerm {
        args.into_iter().fold(head, SkiTerm::app)
    }

    /// Total node count (applications and leaves).
    pub fn size(&self) -> usize {
        deep(|| match self {
            SkiTerm::App(f, a) => 1 + f.size() + a.size(),
            _ => 1,
        })
    }

    pub fn app_count(&self) -> usize {
        deep(|| match self {
            SkiTerm::App(f, a) => 1 + f.app_count() + a.app_count(),
            _ => 0,
        })
    }

    pub fn has_var(&self, name: &str) -> bool {
        deep(|| match self {
            SkiTerm::Var(v) => v == name,
            SkiTerm::App(f, a) => f.has_var(name) || a.has_var(name),
            _ => false,
        })
    }

    pub fn vars(&self) -> HashSet<String> {
        fn go(t: &SkiTerm, out: &mut HashSet<String>) {
            deep(|| match t {
                SkiTerm::Var(v) => {
                    out.insert(v.clone());
                }
                SkiTerm::App(f, a) => {
                    go(f, out);
                    go(a, out);
                }
                _ => {}
            })
        }
        let mut out = HashSet::new();
        go(self, &mut out);
        out
    }

    pub fn subst(&self, name: &str, value: &SkiTerm) -> SkiTerm {
        deep(|| match self {
            SkiTerm::Var(v) if v == name => value.clone(),
            SkiTerm::App(f, a) => SkiTerm::app(f.subst(name, value), a.subst(name, value)),
            other => other.clone(),
        })
    }

    pub fn spine(&self) -> (&SkiTerm, Vec<&SkiTerm>) {
        let mut args = Vec::new();
        let mut t = self;
        while let SkiTerm::App(f, a) = t {
            args.push(a.as_ref());
            t = f;
        }
        args.reverse();
        (t, args)
    }

    pub fn is_leaf(&self) -> bool {
        !matches!(self, SkiTerm::App(..))
    }
}

impl fmt::Display for SkiTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&gael_print(self))
    }
}

/// Definitions in combinator form plus an optional main term.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkiProgram {
    pub defs: Vec<(String, SkiTerm)>,
    pub main: Option<SkiTerm>,
}

impl SkiProgram {
    pub fn from_main(main: SkiTerm) -> SkiProgram {
        SkiProgram {
            defs: Vec::new(),
            main: Some(main),
        }
    }

    /// Substitute references to definitions before `upto`.
    pub fn inline_upto(&self, t: &SkiTerm, upto: usize) -> SkiTerm {
        let mut out = t.clone();
        for idx in (0..upto).rev() {
            let name = &self.defs[idx].0;
            if out.has_var(name) {
                let body = self.inline_upto(&self.defs[idx].1, idx);
                out = out.subst(name, &body);
            }
        }
        out
    }

    pub fn inlined_def(&self, idx: usize) -> SkiTerm {
        self.inline_upto(&self.defs[idx].1, idx)
    }

    pub fn inlined_main(&self) -> Option<SkiTerm> {
        self.main.as_ref().map(|m| self.inline_upto(m, self.defs.len()))
    }

    pub fn def(&self, name: &str) -> Option<&SkiTerm> {
        self.defs.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    /// Every term of the program, definitions first.
    pub fn terms(&self) -> impl Iterator<Item = &SkiTerm> {
        self.defs.iter().map(|(_, t)| t).chain(self.main.iter())
    }

    pub fn size(&self) -> usize {
        self.terms().map(SkiTerm::size).sum()
    }
}

/// GAEL text of a term: left-associative juxtaposition, parentheses only
/// around applications in argument position.
pub fn gael_print(t: &SkiTerm) -> String {
    let mut out = String::new();
    write_term(t, &mut out);
    out
}

pub fn gael_print_program(p: &SkiProgram) -> String {
    let mut out = String::new();
    for (name, body) in &p.defs {
        out.push_str(name);
        out.push_str(" := ");
        write_term(body, &mut out);
        out.push_str(";\n");
    }
    if let Some(m) = &p.main {
        write_term(m, &mut out);
        out.push('\n');
    }
    out
}

fn write_term(t: &SkiTerm, out: &mut String) {
    deep(|| match t {
        SkiTerm::App(..) => {
            let (head, args) = t.spine();
            write_term(head, out);
            for a in args {
                out.push(' ');
                if a.is_leaf() {
                    write_term(a, out);
                } else {
                    out.push('(');
                    write_term(a, out);
                    out.push(')');
                }
            }
        }
        SkiTerm::S => out.push('S'),
        SkiTerm::K => out.push('K'),
        SkiTerm::I => out.push('I'),
        SkiTerm::Int(n) => out.push_str(&n.to_string()),
        SkiTerm::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        SkiTerm::Prim(p) => out.push_str(&p.to_string()),
        SkiTerm::Var(v) => out.push_str(v),
    })
}

struct GaelParser<'a> {
    toks: &'a [Token],
    pos: usize,
    /// `None` accepts any identifier as a free reference.
    globals: Option<HashSet<String>>,
}

impl<'a> GaelParser<'a> {
    fn error(&self, message: impl Into<String>) -> ParseError {
        let (line, col) = self.toks.get(self.pos).map_or((0, 0), |t| (t.line, t.col));
        ParseError::Syntax {
            line,
            col,
            message: message.into(),
        }
    }

    fn peek_punct(&self, p: &str) -> bool {
        self.toks
            .get(self.pos)
            .is_some_and(|t| t.class == TokenClass::Punct && t.lexeme == p)
    }

    fn term(&mut self) -> Result<SkiTerm, ParseError> {
        let mut t = self.atom()?;
        while self.starts_atom() {
            let a = self.atom()?;
            t = SkiTerm::app(t, a);
        }
        Ok(t)
    }

    fn starts_atom(&self) -> bool {
        self.toks
            .get(self.pos)
            .is_some_and(|t| t.class != TokenClass::Punct || t.lexeme == "(")
    }

    fn atom(&mut self) -> Result<SkiTerm, ParseError> {
        let Some(tok) = self.toks.get(self.pos) else {
            return Err(self.error("expected term, found end of input"));
        };
        let t = match tok.class {
            TokenClass::Combinator => match tok.lexeme.as_str() {
                "S" => SkiTerm::S,
                "K" => SkiTerm::K,
                _ => SkiTerm::I,
            },
            TokenClass::Integer => SkiTerm::Int(
                tok.lexeme
                    .parse()
                    .map_err(|_| self.error("integer literal out of 64-bit range"))?,
            ),
            TokenClass::Keyword => SkiTerm::Bool(tok.lexeme == "true"),
            TokenClass::Primitive => SkiTerm::Prim(Prim::from_name(&tok.lexeme[1..]).expect("validated by lexer")),
            TokenClass::Identifier => {
                if let Some(g) = &self.globals {
                    if !g.contains(&tok.lexeme) {
                        return Err(ParseError::Unbound {
                            name: tok.lexeme.clone(),
                            line: tok.line,
                            col: tok.col,
                        });
                    }
                }
                SkiTerm::Var(tok.lexeme.clone())
            }
            TokenClass::Punct if tok.lexeme == "(" => {
                self.pos += 1;
                let inner = self.term()?;
                if !self.peek_punct(")") {
                    return Err(self.error("expected `)`"));
                }
                self.pos += 1;
                return Ok(inner);
            }
            TokenClass::Punct => return Err(self.error(format!("unexpected `{}`", tok.lexeme))),
        };
        self.pos += 1;
        Ok(t)
    }
}

/// Parse a GAEL program; identifiers must name earlier definitions.
pub fn parse_gael_program(src: &str) -> Result<SkiProgram, ParseError> {
    let toks = lex(src, Dialect::Gael)?;
    let mut p = GaelParser {
        toks: &toks,
        pos: 0,
        globals: Some(HashSet::new()),
    };
    let mut defs = Vec::new();
    while matches!(
        (toks.get(p.pos), toks.get(p.pos + 1)),
        (Some(a), Some(b)) if a.class == TokenClass::Identifier && b.lexeme == ":="
    ) {
        let tok = &toks[p.pos];
        if p.globals.as_ref().is_some_and(|g| g.contains(&tok.lexeme)) {
            return Err(ParseError::Duplicate {
                name: tok.lexeme.clone(),
                line: tok.line,
                col: tok.col,
            });
        }
        p.pos += 2;
        let body = p.term()?;
        if !p.peek_punct(";") {
            return Err(p.error("expected `;` after definition"));
        }
        p.pos += 1;
        if let Some(g) = p.globals.as_mut() {
            g.insert(tok.lexeme.clone());
        }
        defs.push((tok.lexeme.clone(), body));
    }
    let main = if p.pos < toks.len() { Some(p.term()?) } else { None };
    if p.pos < toks.len() {
        return Err(p.error("unexpected token after main term"));
    }
    Ok(SkiProgram { defs, main })
}

/// Parse a single GAEL term; identifiers become free references.
pub fn parse_gael_term(src: &str) -> Result<SkiTerm, ParseError> {
    let toks = lex(src, Dialect::Gael)?;
    let mut p = GaelParser {
        toks: &toks,
        pos: 0,
        globals: None,
    };
    let t = p.term()?;
    if p.pos < toks.len() {
        return Err(p.error("unexpected token after term"));
    }
    Ok(t)
}
