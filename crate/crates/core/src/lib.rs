//! A small compiler from an untyped lambda language to SKI combinator form
//! ("GAEL"), driven by a minimum-description-length objective.

pub mod explain;
pub mod gen;
pub mod lambda_ir;
pub mod lex;
pub mod ski;
pub mod softgrad;
pub mod mdl;
pub mod metrics;
pub mod pipeline;
pub mod rng;
pub mod types;
