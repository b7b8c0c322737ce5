//! Normalization operators, activations, and exact derivatives of φ_{p,q}.
//!
//! All operators are plain functions on `f64` slices. Degenerate inputs
//! (zero variance for LN, zero vector for LS and the (p,q)-norm) map to the
//! zero vector.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Base normalization applied inside one group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NormKind {
    Ln,
    Ls,
    LnDelta(f64),
    Pq { p: u32, q: u32 },
}

impl NormKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NormKind::LnDelta(delta) if !(delta > 0.0) => invalid("LNDelta requires δ > 0"),
            NormKind::Pq { p, q } => validate_pq(p, q),
            _ => Ok(()),
        }
    }

    /// Smallest admissible group size.
    pub fn min_group(&self) -> usize {
        match self {
            NormKind::Ln | NormKind::LnDelta(_) => 2,
            NormKind::Ls | NormKind::Pq { .. } => 1,
        }
    }

    /// Same operator family, ignoring δ.
    pub fn same_class(&self, other: &NormKind) -> bool {
        std::mem::discriminant(self) == std::mem::discriminant(other)
    }
}

/// Scalar activation functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ActivationKind {
    Sign,
    Sat,
    PhiPq { p: u32, q: u32 },
    Tanh,
    Relu,
}

impl ActivationKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ActivationKind::PhiPq { p, q } => validate_pq(p, q),
            _ => Ok(()),
        }
    }

    /// True for `Sat` and for `PhiPq(2,2)`, which is the same function.
    pub fn is_sat(&self) -> bool {
        matches!(self, ActivationKind::Sat | ActivationKind::PhiPq { p: 2, q: 2 })
    }
}

/// A norm applied to contiguous groups of `ns` entries across `width` entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupedNormSpec {
    pub kind: NormKind,
    pub ns: usize,
    pub width: usize,
}

impl GroupedNormSpec {
    pub fn new(kind: NormKind, ns: usize, width: usize) -> Result<Self> {
        kind.validate()?;
        if ns < kind.min_group() {
            return invalid(format!("group size {ns} below minimum {} for {kind:?}", kind.min_group()));
        }
        if width == 0 || !width.is_multiple_of(ns) {
            return invalid(format!("width {width} is not a positive multiple of group size {ns}"));
        }
        Ok(Self { kind, ns, width })
    }

    pub fn groups(&self) -> usize {
        self.width / self.ns
    }
}

/// Checks p ≥ q ≥ 2 even with p/q odd.
pub fn validate_pq(p: u32, q: u32) -> Result<()> {
    if q == 0 || p < q || !p.is_multiple_of(2) || !q.is_multiple_of(2) || !p.is_multiple_of(q) || (p / q).is_multiple_of(2) {
        return invalid(format!("(p,q)=({p},{q}) must be even with p ≥ q and p/q odd"));
    }
    Ok(())
}

fn all_equal(h: &[f64]) -> bool {
    h.iter().all(|&v| v == h[0])
}

/// Divides `c` by its largest magnitude, returning the scale (0 for the zero vector).
fn rescale(c: &mut [f64]) -> f64 {
    let s = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if s > 0.0 {
        c.iter_mut().for_each(|v| *v /= s);
    }
    s
}

fn mean(h: &[f64]) -> f64 {
    h.iter().sum::<f64>() / h.len() as f64
}

/// Layer normalization (h − μ)/σ with population variance.
pub fn apply_ln(h: &[f64]) -> Result<Vec<f64>> {
    if h.len() < 2 {
        return invalid("LN needs dimension ≥ 2");
    }
    if all_equal(h) {
        return Ok(vec![0.0; h.len()]);
    }
    let mu = mean(h);
    let mut c: Vec<f64> = h.iter().map(|v| v - mu).collect();
    if rescale(&mut c) == 0.0 {
        return Ok(vec![0.0; h.len()]);
    }
    let sigma = (c.iter().map(|v| v * v).sum::<f64>() / h.len() as f64).sqrt();
    Ok(c.into_iter().map(|v| v / sigma).collect())
}

/// RMS normalization h/√(mean h²).
pub fn apply_ls(h: &[f64]) -> Result<Vec<f64>> {
    if h.is_empty() {
        return invalid("LS needs dimension ≥ 1");
    }
    let mut c = h.to_vec();
    if rescale(&mut c) == 0.0 {
        return Ok(c);
    }
    let rms = (c.iter().map(|v| v * v).sum::<f64>() / h.len() as f64).sqrt();
    Ok(c.into_iter().map(|v| v / rms).collect())
}

/// LN with a stabilized denominator: (h − μ)/(σ + δ).
pub fn apply_ln_delta(h: &[f64], delta: f64) -> Result<Vec<f64>> {
    if !(delta > 0.0) {
        return invalid("δ must be positive");
    }
    if h.is_empty() {
        return invalid("LN needs a nonempty input");
    }
    if all_equal(h) {
        return Ok(vec![0.0; h.len()]);
    }
    let mu = mean(h);
    let c: Vec<f64> = h.iter().map(|v| v - mu).collect();
    let mut scaled = c.clone();
    let s = rescale(&mut scaled);
    let sigma = s * (scaled.iter().map(|v| v * v).sum::<f64>() / h.len() as f64).sqrt();
    Ok(c.into_iter().map(|v| v / (sigma + delta)).collect())
}

/// (p,q)-normalization h_i^{p/q} / mean(|h|^p)^{1/q}.
pub fn apply_pq_norm(h: &[f64], p: u32, q: u32) -> Result<Vec<f64>> {
    validate_pq(p, q)?;
    if h.is_empty() {
        return invalid("(p,q)-norm needs a nonempty input");
    }
    let r = (p / q) as i32;
    let mut c = h.to_vec();
    if rescale(&mut c) == 0.0 {
        return Ok(c);
    }
    let m = c.iter().map(|v| v.abs().powi(p as i32)).sum::<f64>() / h.len() as f64;
    let denom = root(m, q);
    Ok(c.into_iter().map(|v| v.powi(r) / denom).collect())
}

fn root(v: f64, q: u32) -> f64 {
    if q == 2 {
        v.sqrt()
    } else {
        v.powf(1.0 / q as f64)
    }
}

/// Applies one base norm to a single group.
pub fn apply_norm(kind: NormKind, h: &[f64]) -> Result<Vec<f64>> {
    match kind {
        NormKind::Ln => apply_ln(h),
        NormKind::Ls => apply_ls(h),
        NormKind::LnDelta(delta) => apply_ln_delta(h, delta),
        NormKind::Pq { p, q } => apply_pq_norm(h, p, q),
    }
}

/// Applies the base norm independently to each contiguous group.
pub fn apply_grouped(spec: &GroupedNormSpec, h: &[f64]) -> Result<Vec<f64>> {
    if spec.ns == 0 || !h.len().is_multiple_of(spec.ns) {
        return invalid(format!("width {} not divisible by group size {}", h.len(), spec.ns));
    }
    let mut out = Vec::with_capacity(h.len());
    for group in h.chunks(spec.ns) {
        out.extend(apply_norm(spec.kind, group)?);
    }
    Ok(out)
}

/// φ_{p,q}(x) = x^{p/q}/(1+|x|^p)^{1/q}, evaluated without overflow for large |x|.
pub fn phi_pq(p: u32, q: u32, x: f64) -> f64 {
    let ax = x.abs();
    if ax <= 1.0 {
        x.powi((p / q) as i32) / root(1.0 + ax.powi(p as i32), q)
    } else {
        x.signum() / root(1.0 + ax.powi(-(p as i32)), q)
    }
}

/// Scalar activation value; sign(0) = 0.
pub fn activate(kind: ActivationKind, x: f64) -> f64 {
    match kind {
        ActivationKind::Sign => {
            if x > 0.0 {
                1.0
            } else if x < 0.0 {
                -1.0
            } else if x.is_nan() {
                x
            } else {
                0.0
            }
        }
        ActivationKind::Sat => phi_pq(2, 2, x),
        ActivationKind::PhiPq { p, q } => phi_pq(p, q, x),
        ActivationKind::Tanh => x.tanh(),
        ActivationKind::Relu => x.max(0.0),
    }
}

/// Element-wise activation.
pub fn activate_vec(kind: ActivationKind, h: &[f64]) -> Vec<f64> {
    h.iter().map(|&v| activate(kind, v)).collect()
}

/// Exact derivatives φ^{(m)} = Q_m(x)(1+x^p)^{−1/q−m} for m up to a fixed order.
///
/// The polynomials Q_m are generated with rational arithmetic and stored as
/// `f64` coefficients.
#[derive(Debug, Clone)]
pub struct PhiDerivatives {
    p: u32,
    q: u32,
    polys: Vec<Vec<f64>>,
}

impl PhiDerivatives {
    pub fn new(p: u32, q: u32, max_order: usize) -> Result<Self> {
        validate_pq(p, q)?;
        let r = (p / q) as usize;
        let pu = p as usize;
        let mut current = vec![BigRational::zero(); r + 1];
        current[r] = BigRational::from_integer(BigInt::from(1));
        let mut polys = vec![to_f64_coeffs(&current)?];
        for m in 0..max_order {
            let deriv: Vec<BigRational> = current.iter().enumerate().skip(1).map(|(i, c)| c * BigRational::from_integer(BigInt::from(i))).collect();
            let mut next = vec![BigRational::zero(); current.len() + pu - 1];
            for (i, c) in deriv.iter().enumerate() {
                next[i] += c;
                next[i + pu] += c;
            }
            // (m + 1/q)·p = (mq + 1)p/q
            let factor = BigRational::new(BigInt::from((m as i64 * q as i64 + 1) * p as i64), BigInt::from(q));
            for (i, c) in current.iter().enumerate() {
                next[i + pu - 1] -= &factor * c;
            }
            while next.len() > 1 && next.last().is_some_and(|c| c.is_zero()) {
                next.pop();
            }
            polys.push(to_f64_coeffs(&next)?);
            current = next;
        }
        Ok(Self { p, q, polys })
    }

    pub fn max_order(&self) -> usize {
        self.polys.len() - 1
    }

    /// Coefficients of Q_m in increasing degree.
    pub fn poly(&self, m: usize) -> &[f64] {
        &self.polys[m]
    }

    /// φ^{(m)}(x); panics if `m` exceeds the order the table was built for.
    pub fn eval(&self, m: usize, x: f64) -> f64 {
        let coeffs = &self.polys[m];
        let expo = m as f64 + 1.0 / self.q as f64;
        let ax = x.abs();
        if ax <= 1.0 {
            let qv = coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c);
            return qv * (1.0 + ax.powi(self.p as i32)).powf(-expo);
        }
        let deg = coeffs.len() - 1;
        let t = 1.0 / x;
        let scaled = coeffs.iter().fold(0.0, |acc, c| acc * t + c);
        let ln_ax = ax.ln();
        let log_mag = deg as f64 * ln_ax - expo * (self.p as f64 * ln_ax + ax.powi(-(self.p as i32)).ln_1p());
        let sign = if x < 0.0 && deg % 2 == 1 { -1.0 } else { 1.0 };
        scaled * sign * log_mag.exp()
    }
}

fn to_f64_coeffs(c: &[BigRational]) -> Result<Vec<f64>> {
    c.iter().map(|v| v.to_f64().filter(|f| f.is_finite()).ok_or_else(|| Error::Unbounded("derivative polynomial coefficient".into()))).collect()
}

/// Exact m-th derivative of φ_{p,q} at x.
pub fn phi_pq_derivative(p: u32, q: u32, m: usize, x: f64) -> Result<f64> {
    Ok(PhiDerivatives::new(p, q, m)?.eval(m, x))
}

/// m!·binom(−1/q, j) when m = p/q + pj, else 0.
pub fn phi_derivative_at_zero(p: u32, q: u32, m: usize) -> Result<f64> {
    validate_pq(p, q)?;
    let r = (p / q) as usize;
    if m < r || !(m - r).is_multiple_of(p as usize) {
        return Ok(0.0);
    }
    let j = (m - r) / p as usize;
    let a = -1.0 / q as f64;
    let binom = (0..j).fold(1.0, |acc, i| acc * (a - i as f64) / (i as f64 + 1.0));
    Ok(factorial(m) * binom)
}

/// Envelope constant A(p,q,m) = (16p²/(πq))^m · m!.
///
/// Only positivity of p and q is checked; the formula itself is defined for
/// any pair.
pub fn derivative_bound_a(p: u32, q: u32, m: usize) -> Result<f64> {
    if p == 0 || q == 0 {
        return invalid("p and q must be positive");
    }
    let base = 16.0 * (p as f64).powi(2) / (std::f64::consts::PI * q as f64);
    let v = base.powi(m as i32) * factorial(m);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Unbounded(format!("A({p},{q},{m}) overflows f64")))
    }
}

/// Membership in S_{p,q} = {p/q + pj}.
pub fn in_s_pq(p: u32, q: u32, m: usize) -> bool {
    let r = (p / q) as usize;
    m >= r && (m - r).is_multiple_of(p as usize)
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64).round()
}
