//! Double-double evaluation of a [`NetIR`].
//!
//! Nets with large, strongly cancelling weights amplify the rounding of each
//! hidden value, so two nets that agree as functions can disagree by far more
//! than their rounding unit when evaluated in `f64`. Carrying about 106
//! significant bits through every layer makes such comparisons meaningful.

use twofloat::TwoFloat;

use super::{AffineMap, InterlayerOp, NetIR};
use crate::error::{invalid, Error, Result};
use crate::kernels::{ActivationKind, NormKind};

type T = TwoFloat;

fn t(v: f64) -> T {
    T::from(v)
}

fn to_f64(v: T) -> f64 {
    v.hi() + v.lo()
}

fn affine(map: &AffineMap, x: &[T]) -> Vec<T> {
    (0..map.out_dim())
        .map(|i| {
            let mut acc = t(map.b[i]);
            for (j, &xj) in x.iter().enumerate() {
                let w = map.w[(i, j)];
                if w != 0.0 {
                    acc += t(w) * xj;
                }
            }
            acc
        })
        .collect()
}

/// Quotient with one residual correction; the plain `TwoFloat` division is
/// only accurate to about `f64` precision.
fn div(a: T, b: T) -> T {
    let q = a / b;
    q + (a - q * b) / b
}

/// q-th root of a positive value: sqrt for q = 2, else Newton refinement of
/// the `f64` root.
fn root(v: T, q: u32) -> T {
    if q == 2 {
        return v.sqrt();
    }
    let mut r = t(to_f64(v).powf(1.0 / q as f64));
    for _ in 0..3 {
        r -= div(r.powi(q as i32) - v, t(q as f64) * r.powi(q as i32 - 1));
    }
    r
}

fn phi_pq(p: u32, q: u32, x: T) -> T {
    let ax = x.abs();
    if ax <= 1.0 {
        div(x.powi((p / q) as i32), root(t(1.0) + ax.powi(p as i32), q))
    } else {
        let sign = if x > 0.0 { 1.0 } else { -1.0 };
        div(t(sign), root(t(1.0) + div(t(1.0), ax).powi(p as i32), q))
    }
}

fn activate(kind: ActivationKind, x: T) -> T {
    match kind {
        ActivationKind::Sign => t(if x > 0.0 {
            1.0
        } else if x < 0.0 {
            -1.0
        } else {
            0.0
        }),
        ActivationKind::Sat => phi_pq(2, 2, x),
        ActivationKind::PhiPq { p, q } => phi_pq(p, q, x),
        // Only `f64` accuracy; no construction uses tanh.
        ActivationKind::Tanh => t(to_f64(x).tanh()),
        ActivationKind::Relu => {
            if x > 0.0 {
                x
            } else {
                t(0.0)
            }
        }
    }
}

fn max_abs(c: &[T]) -> T {
    c.iter().fold(t(0.0), |m, v| if v.abs() > m { v.abs() } else { m })
}

fn mean(h: &[T]) -> T {
    div(h.iter().fold(t(0.0), |a, &v| a + v), t(h.len() as f64))
}

fn mean_square(c: &[T]) -> T {
    div(c.iter().fold(t(0.0), |a, &v| a + v * v), t(c.len() as f64))
}

fn norm(kind: NormKind, h: &[T]) -> Result<Vec<T>> {
    let zeros = || vec![t(0.0); h.len()];
    match kind {
        NormKind::Ln | NormKind::LnDelta(_) => {
            if h.iter().all(|&v| v == h[0]) {
                return Ok(zeros());
            }
            let mu = mean(h);
            let c: Vec<T> = h.iter().map(|&v| v - mu).collect();
            let s = max_abs(&c);
            if s == 0.0 {
                return Ok(zeros());
            }
            let scaled: Vec<T> = c.iter().map(|&v| div(v, s)).collect();
            match kind {
                NormKind::LnDelta(delta) => {
                    let sigma = s * mean_square(&scaled).sqrt();
                    Ok(c.iter().map(|&v| div(v, sigma + t(delta))).collect())
                }
                _ => {
                    let sigma = mean_square(&scaled).sqrt();
                    Ok(scaled.iter().map(|&v| div(v, sigma)).collect())
                }
            }
        }
        NormKind::Ls => {
            let s = max_abs(h);
            if s == 0.0 {
                return Ok(zeros());
            }
            let scaled: Vec<T> = h.iter().map(|&v| div(v, s)).collect();
            let rms = mean_square(&scaled).sqrt();
            Ok(scaled.iter().map(|&v| div(v, rms)).collect())
        }
        NormKind::Pq { p, q } => {
            let s = max_abs(h);
            if s == 0.0 {
                return Ok(zeros());
            }
            let scaled: Vec<T> = h.iter().map(|&v| div(v, s)).collect();
            let m = scaled.iter().fold(t(0.0), |a, &v| a + v.abs().powi(p as i32));
            let m = div(m, t(h.len() as f64));
            let denom = root(m, q);
            Ok(scaled.iter().map(|&v| div(v.powi((p / q) as i32), denom)).collect())
        }
    }
}

fn apply(op: &InterlayerOp, h: &[T]) -> Result<Vec<T>> {
    match op {
        InterlayerOp::Activation(kind) => Ok(h.iter().map(|&v| activate(*kind, v)).collect()),
        InterlayerOp::Grouped(spec) => {
            if spec.width != h.len() {
                return Err(Error::Dimension { expected: spec.width, got: h.len() });
            }
            let mut out = Vec::with_capacity(h.len());
            for group in h.chunks(spec.ns) {
                out.extend(norm(spec.kind, group)?);
            }
            Ok(out)
        }
    }
}

impl NetIR {
    /// Evaluates the net in double-double arithmetic and rounds the output
    /// to `f64`.
    pub fn eval_extended(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::Dimension { expected: self.input_dim(), got: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return invalid("input must be finite");
        }
        let mut h: Vec<T> = x.iter().map(|&v| t(v)).collect();
        for (map, op) in self.affines.iter().zip(&self.ops) {
            h = apply(op, &affine(map, &h))?;
        }
        let last = self.affines.last().expect("at least one affine map");
        Ok(affine(last, &h).into_iter().map(to_f64).collect())
    }
}
