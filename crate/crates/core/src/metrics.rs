//! Token counts, compression rate, and a DEFLATE-based stand-in for
//! Kolmogorov complexity.
//!
//! Compression rate is measured in tokens, density in bytes.

use std::io::Write;

use flate2::write::DeflateEncoder;
use flate2::Compression;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lex::{lex, Dialect, LexError, TokenClass};

/// Default constant of the `K(s) >= |s| - c log2 |s|` diagnostic.
pub const DEFAULT_C: f64 = 16.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error("compression rate undefined for zero original tokens")]
    ZeroDenominator,
    #[error("empty input")]
    EmptyInput,
    #[error("constant c must be a nonnegative finite number, got {0}")]
    BadConstant(f64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSeq {
    pub tokens: Vec<(TokenClass, String)>,
}

impl TokenSeq {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Lexemes joined by single spaces.
    pub fn joined(&self) -> String {
        self.tokens
            .iter()
            .map(|(_, l)| l.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

pub fn tokenize(source: &str, dialect: Dialect) -> Result<TokenSeq, LexError> {
    Ok(TokenSeq {
        tokens: lex(source, dialect)?
            .into_iter()
            .map(|t| (t.class, t.lexeme))
            .collect(),
    })
}

/// `1 - s/p`, evaluated as `(p - s) / p` so the result is the correctly
/// rounded value of the exact rational.
pub fn compression_rate(s_tokens: usize, p_tokens: usize) -> Result<f64, MetricsError> {
    if p_tokens == 0 {
        return Err(MetricsError::ZeroDenominator);
    }
    let diff = p_tokens as i128 - s_tokens as i128;
    Ok(diff as f64 / p_tokens as f64)
}

/// Raw DEFLATE (no zlib/gzip container) at maximum effort.
pub fn deflate_raw(data: &[u8]) -> Vec<u8> {
    let mut enc = DeflateEncoder::new(Vec::new(), Compression::best());
    enc.write_all(data).expect("writing to a Vec cannot fail");
    enc.finish().expect("writing to a Vec cannot fail")
}

pub fn approx_kolmogorov(data: &[u8]) -> Result<usize, MetricsError> {
    if data.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    Ok(deflate_raw(data).len())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    /// Input length in bytes.
    pub byte_length: usize,
    /// Compressed length in bytes.
    pub k_approx: usize,
    /// `k_approx / byte_length`; may exceed 1 on incompressible input.
    pub rho: f64,
    /// `k_approx - (byte_length - c log2 byte_length)`, in bytes. Nonnegative
    /// when the compressor respects the lower bound on this input.
    pub bound_slack: f64,
    pub c_constant: f64,
}

pub fn symbolic_density(data: &[u8], c: f64) -> Result<DensityReport, MetricsError> {
    if !(c.is_finite() && c >= 0.0) {
        return Err(MetricsError::BadConstant(c));
    }
    let k = approx_kolmogorov(data)?;
    let n = data.len() as f64;
    Ok(DensityReport {
        byte_length: data.len(),
        k_approx: k,
        rho: k as f64 / n,
        bound_slack: k as f64 - (n - c * n.log2()),
        c_constant: c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::prng_bytes;

    #[test]
    fn token_examples() {
        assert_eq!(tokenize("\\x. #add x 1", Dialect::Source).unwrap().len(), 6);
        assert_eq!(tokenize("S (K I)", Dialect::Gael).unwrap().len(), 5);
        assert_eq!(tokenize("", Dialect::Source).unwrap().len(), 0);
        assert_eq!(tokenize("  -- only a comment\n", Dialect::Gael).unwrap().len(), 0);
    }

    #[test]
    fn compression_rate_cases() {
        assert_eq!(compression_rate(217, 1000).unwrap(), 0.783);
        assert_eq!(compression_rate(9, 9).unwrap(), 0.0);
        assert_eq!(compression_rate(14, 7).unwrap(), -1.0);
        assert_eq!(compression_rate(1, 0), Err(MetricsError::ZeroDenominator));
    }

    #[test]
    fn empty_input_rejected() {
        assert_eq!(approx_kolmogorov(&[]), Err(MetricsError::EmptyInput));
        assert!(symbolic_density(&[], DEFAULT_C).is_err());
        assert!(symbolic_density(b"a", -1.0).is_err());
    }

    #[test]
    fn density_fixtures() {
        let repeated = symbolic_density(&[0x61; 4096], DEFAULT_C).unwrap();
        assert!(repeated.rho <= 0.05);
        let random = symbolic_density(&prng_bytes(42, 4096), DEFAULT_C).unwrap();
        assert!(random.rho >= 0.9);
        assert!(random.bound_slack >= 0.0);
    }
}
