//! Differentiable pieces: a soft compression rate and a single-head
//! scaled dot-product attention layer with hand-derived gradients.
//!
//! Forward map, with `Q = H Wq`, `K = H Wk`, `V = H Wv`:
//!
//! ```text
//! A = softmax_rows(Q K^T * scale)      scale = 1/sqrt(d) or 1
//! Y = A V
//! ```

use ndarray::{Array1, Array2, Axis};
use thiserror::Error;

use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SoftError {
    #[error("empty keep vector")]
    Empty,
    #[error("keep probability {value} at position {index} is outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
}

/// Per-token probability of being kept in the encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftKeepVector {
    probs: Array1<f64>,
}

impl SoftKeepVector {
    pub fn new(probs: Vec<f64>) -> Result<SoftKeepVector, SoftError> {
        if let Some((index, &value)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !(0.0..=1.0).contains(*p))
        {
            return Err(SoftError::OutOfRange { index, value });
        }
        Ok(SoftKeepVector {
            probs: Array1::from(probs),
        })
    }

    /// Keep the first `kept` of `total` positions.
    pub fn indicator(kept: usize, total: usize) -> SoftKeepVector {
        SoftKeepVector {
            probs: (0..total).map(|i| if i < kept { 1.0 } else { 0.0 }).collect(),
        }
    }

    pub fn probs(&self) -> &Array1<f64> {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// `1 - mean(p)`, computed as `(n - sum p) / n`; on a 0/1 vector this is
/// bit-identical to the discrete compression rate.
pub fn soft_cr(keep: &SoftKeepVector) -> Result<f64, SoftError> {
    if keep.is_empty() {
        return Err(SoftError::Empty);
    }
    let n = keep.len() as f64;
    Ok((n - keep.probs.sum()) / n)
}

pub fn soft_cr_grad(keep: &SoftKeepVector) -> Result<Array1<f64>, SoftError> {
    if keep.is_empty() {
        return Err(SoftError::Empty);
    }
    Ok(Array1::from_elem(keep.len(), -1.0 / keep.len() as f64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttnParams {
    pub wq: Array2<f64>,
    pub wk: Array2<f64>,
    pub wv: Array2<f64>,
    pub d: usize,
    /// Divide scores by `sqrt(d)`.
    pub scaled: bool,
}

impl AttnParams {
    pub fn new(wq: Array2<f64>, wk: Array2<f64>, wv: Array2<f64>) -> Result<AttnParams, SoftError> {
        let d = wq.nrows();
        for (name, w) in [("W_Q", &wq), ("W_K", &wk), ("W_V", &wv)] {
            if w.dim() != (d, d) {
                return Err(SoftError::Shape(format!("{name} is {:?}, expected {d}x{d}", w.dim())));
            }
            if !w.iter().all(|v| v.is_finite()) {
                return Err(SoftError::NonFinite(name));
            }
        }
        Ok(AttnParams {
            wq,
            wk,
            wv,
            d,
            scaled: true,
        })
    }

    pub fn unscaled(mut self) -> AttnParams {
        self.scaled = false;
        self
    }

    fn scale(&self) -> f64 {
        if self.scaled {
            1.0 / (self.d as f64).sqrt()
        } else {
            1.0
        }
    }
}

fn check_input(h: &Array2<f64>, params: &AttnParams) -> Result<(), SoftError> {
    if h.nrows() == 0 {
        return Err(SoftError::Shape("H has no rows".into()));
    }
    if h.ncols() != params.d {
        return Err(SoftError::Shape(format!(
            "H has {} columns, parameters have d = {}",
            h.ncols(),
            params.d
        )));
    }
    if !h.iter().all(|v| v.is_finite()) {
        return Err(SoftError::NonFinite("H"));
    }
    Ok(())
}

pub fn softmax_rows(scores: &Array2<f64>) -> Array2<f64> {
    let mut out = scores.clone();
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    out
}

struct Forward {
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    a: Array2<f64>,
    y: Array2<f64>,
}

fn forward(h: &Array2<f64>, p: &AttnParams) -> Forward {
    let q = h.dot(&p.wq);
    let k = h.dot(&p.wk);
    let v = h.dot(&p.wv);
    let a = softmax_rows(&(q.dot(&k.t()) * p.scale()));
    let y = a.dot(&v);
    Forward { q, k, v, a, y }
}

/// Row-stochastic attention weights `A`.
pub fn attention_weights(h: &Array2<f64>, params: &AttnParams) -> Result<Array2<f64>, SoftError> {
    check_input(h, params)?;
    Ok(forward(h, params).a)
}

pub fn attention_forward(h: &Array2<f64>, params: &AttnParams) -> Result<Array2<f64>, SoftError> {
    check_input(h, params)?;
    Ok(forward(h, params).y)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttnGrads {
    pub dh: Array2<f64>,
    pub dwq: Array2<f64>,
    pub dwk: Array2<f64>,
    pub dwv: Array2<f64>,
}

/// Gradients of `sum(upstream * Y)`.
pub fn attention_backward(
    h: &Array2<f64>,
    params: &AttnParams,
    upstream: &Array2<f64>,
) -> Result<AttnGrads, SoftError> {
    check_input(h, params)?;
    if upstream.dim() != h.dim() {
        return Err(SoftError::Shape(format!(
            "upstream is {:?}, output is {:?}",
            upstream.dim(),
            h.dim()
        )));
    }
    let Forward { q, k, v, a, .. } = forward(h, params);
    let g = upstream;
    let dv = a.t().dot(g);
    let da = g.dot(&v.t());
    // Softmax Jacobian, row by row: dS = A * (dA - rowsum(dA * A)).
    let row_dot = (&da * &a).sum_axis(Axis(1)).insert_axis(Axis(1));
    let ds = &a * &(&da - &row_dot) * params.scale();
    let dq = ds.dot(&k);
    let dk = ds.t().dot(&q);
    let dwq = h.t().dot(&dq);
    let dwk = h.t().dot(&dk);
    let dwv = h.t().dot(&dv);
    let dh = dq.dot(&params.wq.t()) + dk.dot(&params.wk.t()) + dv.dot(&params.wv.t());
    Ok(AttnGrads { dh, dwq, dwk, dwv })
}

/// Largest relative error between `grad` and central differences of `f`
/// at `point`; the denominator is `max(|grad_i|, 1e-8)`.
pub fn finite_diff_check(f: impl Fn(&[f64]) -> f64, grad: &[f64], point: &[f64], eps: f64) -> f64 {
    assert!(eps > 0.0, "eps must be positive");
    assert_eq!(grad.len(), point.len(), "gradient and point lengths differ");
    let mut x = point.to_vec();
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + eps;
        let up = f(&x);
        x[i] = orig - eps;
        let down = f(&x);
        x[i] = orig;
        let numeric = (up - down) / (2.0 * eps);
        let rel = (numeric - grad[i]).abs() / grad[i].abs().max(1e-8);
        worst = worst.max(rel);
    }
    worst
}

/// Seeded fixture: `H` (n x d), then `Wq`, `Wk`, `Wv`, each filled row-major
/// from `next_signed_unit`.
pub fn seeded_fixture(seed: u64, n: usize, d: usize) -> (Array2<f64>, AttnParams) {
    let mut rng = SplitMix64::new(seed);
    let mut fill = |rows: usize| Array2::from_shape_fn((rows, d), |_| rng.next_signed_unit());
    let h = fill(n);
    let (wq, wk, wv) = (fill(d), fill(d), fill(d));
    (h, AttnParams::new(wq, wk, wv).expect("square by construction"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn soft_cr_cases() {
        assert_eq!(soft_cr(&SoftKeepVector::new(vec![1.0; 5]).unwrap()).unwrap(), 0.0);
        assert_eq!(soft_cr(&SoftKeepVector::new(vec![0.0; 5]).unwrap()).unwrap(), 1.0);
        assert_eq!(soft_cr(&SoftKeepVector::indicator(217, 1000)).unwrap(), 0.783);
        assert_eq!(
            soft_cr(&SoftKeepVector::indicator(217, 1000)).unwrap(),
            crate::metrics::compression_rate(217, 1000).unwrap()
        );
        assert_eq!(soft_cr(&SoftKeepVector::new(vec![]).unwrap()), Err(SoftError::Empty));
        assert!(SoftKeepVector::new(vec![0.5, 1.5]).is_err());
        assert!(SoftKeepVector::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn soft_cr_gradient_is_exact() {
        let keep = SoftKeepVector::new(vec![0.1, 0.7, 0.3, 0.9]).unwrap();
        let grad = soft_cr_grad(&keep).unwrap();
        let f = |x: &[f64]| soft_cr(&SoftKeepVector { probs: Array1::from(x.to_vec()) }).unwrap();
        let err = finite_diff_check(f, grad.as_slice().unwrap(), keep.probs.as_slice().unwrap(), 1e-5);
        assert!(err <= 1e-10, "{err}");
    }

    #[test]
    fn quadratic_check() {
        let err = finite_diff_check(|x| x[0] * x[0], &[6.0], &[3.0], 1e-3);
        assert!(err <= 1e-9);
    }

    #[test]
    fn single_row_is_linear() {
        let (h, p) = seeded_fixture(3, 1, 3);
        let y = attention_forward(&h, &p).unwrap();
        let expect = h.dot(&p.wv);
        assert!((&y - &expect).iter().all(|e| e.abs() < 1e-15));
        let g = array![[0.5, -1.0, 2.0]];
        let grads = attention_backward(&h, &p, &g).unwrap();
        // Only the value path carries gradient when n = 1.
        assert!(grads.dwq.iter().all(|v| v.abs() < 1e-15));
        assert!(grads.dwk.iter().all(|v| v.abs() < 1e-15));
        let dwv = h.t().dot(&g);
        assert!((&grads.dwv - &dwv).iter().all(|e| e.abs() < 1e-15));
        let dh = g.dot(&p.wv.t());
        assert!((&grads.dh - &dh).iter().all(|e| e.abs() < 1e-14));
    }

    #[test]
    fn zero_query_key_gives_uniform_attention() {
        let (h, p) = seeded_fixture(5, 4, 3);
        let p = AttnParams::new(Array2::zeros((3, 3)), Array2::zeros((3, 3)), p.wv).unwrap();
        let y = attention_forward(&h, &p).unwrap();
        let mean = h.dot(&p.wv).mean_axis(Axis(0)).unwrap();
        for row in y.rows() {
            assert!((&row - &mean).iter().all(|e| e.abs() < 1e-15));
        }
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let (h, p) = seeded_fixture(9, 5, 4);
        let g = attention_backward(&h, &p, &Array2::zeros((5, 4))).unwrap();
        for m in [&g.dh, &g.dwq, &g.dwk, &g.dwv] {
            assert!(m.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn shape_errors() {
        let (h, p) = seeded_fixture(1, 3, 3);
        assert!(attention_forward(&Array2::zeros((2, 4)), &p).is_err());
        assert!(attention_forward(&Array2::zeros((0, 3)), &p).is_err());
        assert!(attention_backward(&h, &p, &Array2::zeros((2, 3))).is_err());
        assert!(AttnParams::new(Array2::zeros((2, 2)), Array2::zeros((3, 3)), Array2::zeros((2, 2))).is_err());
    }

    #[test]
    fn rows_are_distributions() {
        for seed in 0..20 {
            let (h, p) = seeded_fixture(seed, 6, 4);
            let h = h * 30.0;
            let a = attention_weights(&h, &p).unwrap();
            for row in a.rows() {
                assert!((row.sum() - 1.0).abs() <= 1e-12);
            }
        }
    }
}
