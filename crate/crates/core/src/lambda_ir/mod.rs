//! Lambda-calculus IR: terms, the surface parser, normal-order evaluation
//! and canonical printing.

mod eval;
mod parse;
mod print;
mod term;

pub use eval::{
    alpha_equivalent, beta_eta_normal, beta_reduce, has_redex, EvalError, DEFAULT_FUEL,
    NODE_BUDGET,
};
pub(crate) use eval::{apply_delta, deep, Budget, Db, Delta, Literal};
pub(crate) use eval::{beta_eta_db, normalize_db};
pub use parse::{parse_program, parse_term, ParseError};
pub use print::{pretty_print, print_program};
pub use term::{Prim, Program, Term};
