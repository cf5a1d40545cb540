use std::collections::HashSet;

use thiserror::Error;

use super::{Prim, Program, Term};
use crate::lex::{lex, Dialect, LexError, Token, TokenClass};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("unbound identifier `{name}` at {line}:{col}")]
    Unbound { name: String, line: usize, col: usize },
    #[error("duplicate definition `{name}` at {line}:{col}")]
    Duplicate { name: String, line: usize, col: usize },
}

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    /// Line/column reported for errors at end of input.
    eof: (usize, usize),
    globals: HashSet<String>,
    scope: Vec<String>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.toks.get(self.pos)
    }

    fn peek_is(&self, lexeme: &str) -> bool {
        self.peek().is_some_and(|t| t.class == TokenClass::Punct && t.lexeme == lexeme)
    }

    fn error_here(&self, message: impl Into<String>) -> ParseError {
        let (line, col) = self.peek().map_or(self.eof, |t| (t.line, t.col));
        ParseError::Syntax {
            line,
            col,
            message: message.into(),
        }
    }

    fn expect(&mut self, lexeme: &str) -> Result<(), ParseError> {
        if self.peek_is(lexeme) {
            self.pos += 1;
            Ok(())
        } else {
            let found = self.peek().map_or("end of input".to_string(), |t| format!("`{}`", t.lexeme));
            Err(self.error_here(format!("expected `{lexeme}`, found {found}")))
        }
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        let mut defs: Vec<(String, Term)> = Vec::new();
        while self.is_def_start() {
            let tok = &self.toks[self.pos];
            if self.globals.contains(&tok.lexeme) {
                return Err(ParseError::Duplicate {
                    name: tok.lexeme.clone(),
                    line: tok.line,
                    col: tok.col,
                });
            }
            self.pos += 2;
            let body = self.expr()?;
            self.expect(";")?;
            self.globals.insert(tok.lexeme.clone());
            defs.push((tok.lexeme.clone(), body));
        }
        let main = if self.peek().is_some() {
            Some(self.expr()?)
        } else {
            None
        };
        if self.peek().is_some() {
            return Err(self.error_here("unexpected token after main expression"));
        }
        Ok(Program { defs, main })
    }

    fn is_def_start(&self) -> bool {
        matches!(
            (self.toks.get(self.pos), self.toks.get(self.pos + 1)),
            (Some(a), Some(b)) if a.class == TokenClass::Identifier && b.lexeme == ":="
        )
    }

    fn expr(&mut self) -> Result<Term, ParseError> {
        if self.peek_is("\\") {
            self.pos += 1;
            let mut params = Vec::new();
            while let Some(t) = self.peek() {
                if t.class != TokenClass::Identifier {
                    break;
                }
                params.push(t.lexeme.clone());
                self.pos += 1;
            }
            if params.is_empty() {
                return Err(self.error_here("expected parameter after `\\`"));
            }
            self.expect(".")?;
            let depth = self.scope.len();
            self.scope.extend(params.iter().cloned());
            let body = self.expr();
            self.scope.truncate(depth);
            let body = body?;
            return Ok(params.into_iter().rev().fold(body, |b, p| Term::lam(p, b)));
        }
        let mut t = self.atom()?;
        while self.starts_atom() {
            let a = self.atom()?;
            t = Term::app(t, a);
        }
        Ok(t)
    }

    fn starts_atom(&self) -> bool {
        match self.peek() {
            Some(t) => match t.class {
                TokenClass::Punct => t.lexeme == "(",
                _ => true,
            },
            None => false,
        }
    }

    fn atom(&mut self) -> Result<Term, ParseError> {
        let Some(tok) = self.peek() else {
            return Err(self.error_here("expected expression, found end of input"));
        };
        let term = match tok.class {
            TokenClass::Identifier => {
                let name = &tok.lexeme;
                if !self.scope.iter().any(|s| s == name) && !self.globals.contains(name) {
                    return Err(ParseError::Unbound {
                        name: name.clone(),
                        line: tok.line,
                        col: tok.col,
                    });
                }
                Term::Var(name.clone())
            }
            TokenClass::Integer => Term::Int(tok.lexeme.parse().map_err(|_| ParseError::Syntax {
                line: tok.line,
                col: tok.col,
                message: format!("integer literal `{}` out of 64-bit range", tok.lexeme),
            })?),
            TokenClass::Keyword => Term::Bool(tok.lexeme == "true"),
            TokenClass::Primitive => Term::Prim(Prim::from_name(&tok.lexeme[1..]).expect("lexer validates primitives")),
            TokenClass::Punct if tok.lexeme == "(" => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(")")?;
                return Ok(inner);
            }
            _ => return Err(self.error_here(format!("unexpected `{}`", tok.lexeme))),
        };
        self.pos += 1;
        Ok(term)
    }
}

fn eof_position(source: &str) -> (usize, usize) {
    let line = source.matches('\n').count() + 1;
    let col = source.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

pub fn parse_program(source: &str) -> Result<Program, ParseError> {
    let toks = lex(source, Dialect::Source)?;
    let mut p = Parser {
        toks: &toks,
        pos: 0,
        eof: eof_position(source),
        globals: HashSet::new(),
        scope: Vec::new(),
    };
    p.program()
}

/// Parse a single closed expression (no definitions).
pub fn parse_term(source: &str) -> Result<Term, ParseError> {
    let prog = parse_program(source)?;
    match prog {
        Program { defs, main: Some(m) } if defs.is_empty() => Ok(m),
        _ => Err(ParseError::Syntax {
            line: 1,
            col: 1,
            message: "expected a single expression".into(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity() {
        assert_eq!(parse_term("\\x. x").unwrap(), Term::lam("x", Term::var("x")));
    }

    #[test]
    fn definition_and_main() {
        let p = parse_program("add := \\x.\\y. #add x y; add 2 3").unwrap();
        assert_eq!(p.defs.len(), 1);
        assert_eq!(p.defs[0].0, "add");
        assert_eq!(
            p.main,
            Some(Term::apply(Term::var("add"), [Term::Int(2), Term::Int(3)]))
        );
    }

    #[test]
    fn multi_param_lambda() {
        assert_eq!(
            parse_term("\\x y. x").unwrap(),
            parse_term("\\x. \\y. x").unwrap()
        );
    }

    #[test]
    fn unbound_identifier() {
        match parse_program("\\x. y") {
            Err(ParseError::Unbound { name, line, col }) => {
                assert_eq!(name, "y");
                assert_eq!((line, col), (1, 5));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_definition() {
        assert!(matches!(
            parse_program("a := 1; a := 2; a"),
            Err(ParseError::Duplicate { name, .. }) if name == "a"
        ));
    }

    #[test]
    fn no_forward_references() {
        assert!(matches!(
            parse_program("a := b; b := 1; a"),
            Err(ParseError::Unbound { .. })
        ));
        assert!(matches!(
            parse_program("f := \\x. f x; f"),
            Err(ParseError::Unbound { .. })
        ));
    }

    #[test]
    fn syntax_errors() {
        assert!(matches!(parse_program("(\\x. x"), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse_program("\\. x"), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse_program("1 ;"), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse_program("\\true. 1"), Err(ParseError::Syntax { .. })));
        assert!(matches!(
            parse_program("99999999999999999999"),
            Err(ParseError::Syntax { .. })
        ));
    }

    #[test]
    fn definitions_only() {
        let p = parse_program("one := 1;\n-- comment\ntwo := #add one one;").unwrap();
        assert_eq!(p.defs.len(), 2);
        assert!(p.main.is_none());
    }
}
