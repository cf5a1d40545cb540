//! Combinator terms, bracket abstraction, decoding, reduction and the
//! probe-based equivalence oracle.

mod abstraction;
mod decode;
mod equiv;
mod reduce;
mod term;

pub use abstraction::{bracket_abstract, compile, AbstractError, RuleSet};
pub use decode::ski_decode;
pub use equiv::{behavioral_equal, compare_on_probes, ProbeConfig, ProbeStats, Subject, Verdict};
pub use reduce::ski_reduce;
pub use term::{gael_print, gael_print_program, parse_gael_program, parse_gael_term, SkiProgram, SkiTerm};
