//! Grid-based error measurement, sampled exactness checks and the
//! negative-result search for single-group LN-nets.

mod negsearch;

pub use negsearch::{theorem31_search, NegSearchReport};

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::kernels::binomial;
use crate::sobolev::multi_indices_up_to;

/// Axis-aligned box Π [lo_i, hi_i].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return invalid("box bounds must be nonempty and of equal length");
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return invalid("box must have positive extent on every axis");
        }
        Ok(BoxDomain { lo, hi })
    }

    /// [0, 1]^d.
    pub fn unit(d: usize) -> Self {
        BoxDomain { lo: vec![0.0; d], hi: vec![1.0; d] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Largest edge length.
    pub fn size(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).fold(0.0, f64::max)
    }

    fn shrink(&self, margin: f64) -> Result<BoxDomain> {
        let lo: Vec<f64> = self.lo.iter().map(|v| v + margin).collect();
        let hi: Vec<f64> = self.hi.iter().map(|v| v - margin).collect();
        if lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return invalid("finite-difference margin exceeds the box");
        }
        Ok(BoxDomain { lo, hi })
    }

    /// Point number `index` of the tensor grid with `n` points per axis
    /// (endpoints included; a degenerate axis yields its single value).
    pub fn grid_point(&self, n: usize, mut index: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        for i in (0..self.dim()).rev() {
            let t = (index % n) as f64 / (n - 1) as f64;
            index /= n;
            x[i] = self.lo[i] + (self.hi[i] - self.lo[i]) * t;
        }
        x
    }
}

/// Default finite-difference step: 10⁻³ times the box size.
pub fn default_fd_step(domain: &BoxDomain) -> f64 {
    1e-3 * domain.size()
}

type Stencil = Vec<(Vec<f64>, f64)>;

/// Tensor product of central stencils: order a uses offsets (a/2 − j)h with
/// weights (−1)^j binom(a, j)/h^a.
fn stencil(alpha: &[usize], h: f64) -> Stencil {
    let mut out: Stencil = vec![(Vec::with_capacity(alpha.len()), 1.0)];
    for &a in alpha {
        let scale = h.powi(a as i32);
        out = out
            .into_iter()
            .flat_map(|(offset, w)| {
                (0..=a).map(move |j| {
                    let mut next = offset.clone();
                    next.push((a as f64 / 2.0 - j as f64) * h);
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    (next, w * sign * binomial(a, j) / scale)
                })
            })
            .collect();
    }
    out
}

fn nan_to_inf(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// max over |α| ≤ k and grid points of the central finite-difference |D^α u|.
///
/// The grid is taken on the box shrunk by k·fd_step; at k = 0 this is the
/// plain grid maximum of |u|.
pub fn sobolev_norm(u: &(dyn Fn(&[f64]) -> f64 + Sync), k: usize, domain: &BoxDomain, grid: usize, fd_step: f64) -> Result<f64> {
    if grid < 2 {
        return invalid("grid needs at least two points per axis");
    }
    if k > 0 && !(fd_step > 0.0) {
        return invalid("finite-difference step must be positive");
    }
    let inner = if k > 0 { domain.shrink(k as f64 * fd_step)? } else { domain.clone() };
    let stencils: Vec<Stencil> = multi_indices_up_to(k, domain.dim()).iter().map(|a| stencil(a, fd_step)).collect();
    let total = grid.checked_pow(domain.dim() as u32).filter(|&t| t <= 50_000_000).ok_or_else(|| Error::InvalidArgument("grid too large".into()))?;
    let value = (0..total)
        .into_par_iter()
        .map(|i| {
            let x = inner.grid_point(grid, i);
            let mut shifted = x.clone();
            stencils
                .iter()
                .map(|st| {
                    let v: f64 = st
                        .iter()
                        .map(|(offset, w)| {
                            for (s, (xi, o)) in shifted.iter_mut().zip(x.iter().zip(offset)) {
                                *s = xi + o;
                            }
                            w * u(&shifted)
                        })
                        .sum();
                    nan_to_inf(v.abs())
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(value)
}

/// Finite-difference W^{k,∞} distance between f and g on the grid.
pub fn sobolev_error(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    g: &(dyn Fn(&[f64]) -> f64 + Sync),
    k: usize,
    domain: &BoxDomain,
    grid: usize,
    fd_step: f64,
) -> Result<f64> {
    sobolev_norm(&|x: &[f64]| f(x) - g(x), k, domain, grid, fd_step)
}

/// Grid maximum of |f − g|, a lower bound for the true sup-norm.
pub fn sup_error(f: &(dyn Fn(&[f64]) -> f64 + Sync), g: &(dyn Fn(&[f64]) -> f64 + Sync), domain: &BoxDomain, grid: usize) -> Result<f64> {
    sobolev_error(f, g, 0, domain, grid, 0.0)
}

/// Outcome of a sampled exactness check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchReport {
    pub pass: bool,
    pub worst_diff: f64,
    pub worst_sample: Option<Vec<f64>>,
    pub checked: usize,
    pub excluded: usize,
}

/// Compares f and g on `n_samples` draws of `sampler`, skipping samples for
/// which `exclude` holds; passes iff every compared sample differs by < tol.
pub fn exact_match(
    f: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
    g: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
    sampler: &mut dyn FnMut() -> Vec<f64>,
    n_samples: usize,
    tol: f64,
    exclude: &dyn Fn(&[f64]) -> bool,
) -> Result<MatchReport> {
    if !(tol > 0.0) {
        return invalid("tolerance must be positive");
    }
    let mut report = MatchReport { pass: true, worst_diff: 0.0, worst_sample: None, checked: 0, excluded: 0 };
    for _ in 0..n_samples {
        let x = sampler();
        if exclude(&x) {
            report.excluded += 1;
            continue;
        }
        let (a, b) = (f(&x)?, g(&x)?);
        if a.len() != b.len() {
            return Err(Error::Dimension { expected: a.len(), got: b.len() });
        }
        let diff = a.iter().zip(&b).map(|(u, v)| nan_to_inf((u - v).abs())).fold(0.0, f64::max);
        report.checked += 1;
        if diff > report.worst_diff || report.worst_sample.is_none() {
            report.worst_diff = diff;
            report.worst_sample = Some(x);
        }
    }
    report.pass = report.worst_diff < tol;
    Ok(report)
}

/// Measured and theoretical errors of one approximation run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApproxReport {
    pub domain: BoxDomain,
    pub grid: usize,
    pub fd_step: f64,
    pub linf: f64,
    /// Measured W^{j,∞} errors for j = 1..=k.
    pub wk: Vec<f64>,
    pub linf_bound: Option<f64>,
    pub wk_bound: Option<f64>,
    pub metadata: BTreeMap<String, String>,
    pub wall_time_s: f64,
}

impl ApproxReport {
    /// Measures f − g up to order k; `grid` must be at least 64.
    pub fn measure(
        f: &(dyn Fn(&[f64]) -> f64 + Sync),
        g: &(dyn Fn(&[f64]) -> f64 + Sync),
        k: usize,
        domain: BoxDomain,
        grid: usize,
        fd_step: f64,
    ) -> Result<Self> {
        if grid < 64 {
            return invalid("grid resolution must be at least 64 per axis");
        }
        let start = std::time::Instant::now();
        let linf = sup_error(f, g, &domain, grid)?;
        let wk = (1..=k).map(|j| sobolev_error(f, g, j, &domain, grid, fd_step)).collect::<Result<Vec<_>>>()?;
        if !linf.is_finite() || wk.iter().any(|v| !v.is_finite()) {
            return Err(Error::Internal("non-finite measured error".into()));
        }
        Ok(ApproxReport {
            domain,
            grid,
            fd_step,
            linf,
            wk,
            linf_bound: None,
            wk_bound: None,
            metadata: BTreeMap::new(),
            wall_time_s: start.elapsed().as_secs_f64(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sup_examples() {
        let unit = BoxDomain::unit(1);
        let f = |x: &[f64]| x[0];
        let g = |x: &[f64]| x[0] + 0.1;
        assert_eq!(sup_error(&f, &f, &unit, 64).unwrap(), 0.0);
        assert!((sup_error(&f, &g, &unit, 64).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn derivative_of_square() {
        let unit = BoxDomain::unit(1);
        let f = |x: &[f64]| x[0] * x[0];
        let zero = |_: &[f64]| 0.0;
        let v = sobolev_error(&f, &zero, 1, &unit, 101, 1e-3).unwrap();
        assert!((v - 2.0).abs() < 1e-2, "{v}");
    }

    #[test]
    fn k0_is_bit_identical() {
        let unit = BoxDomain::unit(2);
        let f = |x: &[f64]| (x[0] * 3.1).sin() * x[1];
        let g = |x: &[f64]| x[0] - x[1] * x[1];
        let a = sup_error(&f, &g, &unit, 64).unwrap();
        let b = sobolev_error(&f, &g, 0, &unit, 64, 1e-3).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn mixed_partial() {
        let unit = BoxDomain::unit(2);
        let f = |x: &[f64]| x[0] * x[0] * x[1];
        let zero = |_: &[f64]| 0.0;
        // |∂²/∂x² f| = 2|y| ≤ 2 and |∂²/∂x∂y f| = 2|x| ≤ 2.
        let v = sobolev_error(&f, &zero, 2, &unit, 64, 1e-3).unwrap();
        assert!((v - 2.0).abs() < 1e-2, "{v}");
    }

    #[test]
    fn exact_match_reports_worst() {
        let f = |x: &[f64]| Ok(vec![x[0]]);
        let g = |x: &[f64]| Ok(vec![x[0] + if x[0] > 0.5 { 1e-3 } else { 0.0 }]);
        let mut i = 0;
        let mut sampler = || {
            i += 1;
            vec![i as f64 / 10.0]
        };
        let same = exact_match(&f, &f, &mut sampler, 10, f64::MIN_POSITIVE, &|_| false).unwrap();
        assert!(same.pass);
        let diff = exact_match(&f, &g, &mut sampler, 10, 1e-6, &|_| false).unwrap();
        assert!(!diff.pass);
        assert!(diff.worst_sample.unwrap()[0] > 0.5);
    }
}
