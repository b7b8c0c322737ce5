//! Approximate partition of unity built from φ_{p,q}.

use crate::error::{invalid, Error, Result};
use crate::kernels::{derivative_bound_a, phi_pq, validate_pq, PhiDerivatives};
use crate::verify::{sobolev_norm, BoxDomain};

/// Scale α and monotonicity threshold R of the partition functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionParams {
    pub d: usize,
    pub n: usize,
    pub k: usize,
    pub eps: f64,
    pub alpha: f64,
    pub r: f64,
    pub p: u32,
    pub q: u32,
}

/// Grid points per decade in the monotonicity scan.
const R_SCAN_PER_DECADE: usize = 400;
const R_SAFETY: f64 = 1.1;

/// Smallest point of a geometric grid on [1, 10⁶] after which |φ^{(m)}| is
/// non-increasing for every 1 ≤ m ≤ max(k, 1), times 1.1.
pub fn monotonicity_threshold(p: u32, q: u32, k: usize) -> Result<f64> {
    let orders = k.max(1);
    let table = PhiDerivatives::new(p, q, orders)?;
    let count = 6 * R_SCAN_PER_DECADE + 1;
    let xs: Vec<f64> = (0..count).map(|i| 10f64.powf(i as f64 / R_SCAN_PER_DECADE as f64)).collect();
    let mut start = 0;
    for m in 1..=orders {
        let vals: Vec<f64> = xs.iter().map(|&x| table.eval(m, x).abs()).collect();
        let last_rise = (0..count - 1).rev().find(|&i| vals[i + 1] > vals[i]);
        if let Some(i) = last_rise {
            start = start.max(i + 1);
        }
    }
    Ok(xs[start] * R_SAFETY)
}

/// α = N·max{R, (1/(qε))^{1/p}, (A(p,q,k)N^k/ε)^{q/p}} with R from
/// [`monotonicity_threshold`]; the third term is present only for k ≥ 1.
pub fn choose_alpha(d: usize, n: usize, k: usize, eps: f64, p: u32, q: u32) -> Result<PartitionParams> {
    validate_pq(p, q)?;
    let r = monotonicity_threshold(p, q, k)?;
    choose_alpha_with_r(d, n, k, eps, p, q, r)
}

/// [`choose_alpha`] with a caller-supplied threshold R.
pub fn choose_alpha_with_r(d: usize, n: usize, k: usize, eps: f64, p: u32, q: u32, r: f64) -> Result<PartitionParams> {
    validate_pq(p, q)?;
    if !(eps > 0.0 && eps < 0.25) {
        return invalid(format!("ε = {eps} must lie in (0, 1/4)"));
    }
    if n == 0 || d == 0 {
        return invalid("N and d must be positive");
    }
    let nf = n as f64;
    let mut scale = r.max((1.0 / (q as f64 * eps)).powf(1.0 / p as f64));
    if k >= 1 {
        let a = derivative_bound_a(p, q, k)?;
        scale = scale.max((a * nf.powi(k as i32) / eps).powf(q as f64 / p as f64));
    }
    let alpha = nf * scale;
    if !alpha.is_finite() {
        return Err(Error::Unbounded("α overflows".into()));
    }
    Ok(PartitionParams { d, n, k, eps, alpha, r, p, q })
}

impl PartitionParams {
    /// The three defining conditions, checked with the exact derivatives:
    /// α/N ≥ R, 1 − φ(α/N) ≤ ε, and α^m|φ^{(m)}(α/N)| ≤ ε for 1 ≤ m ≤ k.
    pub fn conditions(&self) -> Result<[bool; 3]> {
        let x = self.alpha / self.n as f64;
        let table = PhiDerivatives::new(self.p, self.q, self.k)?;
        let derivs = (1..=self.k).all(|m| self.alpha.powi(m as i32) * table.eval(m, x).abs() <= self.eps);
        Ok([x >= self.r, 1.0 - phi_pq(self.p, self.q, x) <= self.eps, derivs])
    }
}

/// ρ_j^N(y) for 1 ≤ j ≤ N; ρ_1 ≡ 1 when N = 1.
pub fn partition_rho(j: usize, n: usize, alpha: f64, p: u32, q: u32, y: f64) -> Result<f64> {
    if j == 0 || j > n {
        return invalid(format!("partition index {j} outside 1..={n}"));
    }
    if n == 1 {
        return Ok(1.0);
    }
    let u = |i: usize| phi_pq(p, q, alpha * (y - i as f64 / n as f64));
    Ok(if j == 1 {
        0.5 - 0.5 * u(1)
    } else if j == n {
        0.5 * u(n - 1) + 0.5
    } else {
        0.5 * u(j - 1) - 0.5 * u(j)
    })
}

/// Φ_j(x) = Π_i ρ_{j_i}(x_i).
pub fn partition_phi(j: &[usize], n: usize, alpha: f64, p: u32, q: u32, x: &[f64]) -> Result<f64> {
    if j.len() != x.len() {
        return Err(Error::Dimension { expected: j.len(), got: x.len() });
    }
    j.iter().zip(x).try_fold(1.0, |acc, (&ji, &xi)| Ok(acc * partition_rho(ji, n, alpha, p, q, xi)?))
}

/// Bound checks of the partition on one cube I_j.
#[derive(Debug, Clone, PartialEq)]
pub struct CubeCheck {
    pub cube: Vec<usize>,
    /// W^{k,∞}(I_j) deviation of Σ_{‖v‖∞ ≤ 1} Φ_{j+v} from 1.
    pub near_sum: f64,
    /// max over ‖v‖∞ ≥ 2 of sup_{I_j} |Φ_{j+v}|.
    pub distant: f64,
}

/// Diagnostics of the approximate partition of unity.
#[derive(Debug, Clone, PartialEq)]
pub struct PouReport {
    pub params: PartitionParams,
    pub alpha_conditions: [bool; 3],
    /// max |Σ_j ρ_j(y) − 1| on a grid of [−1, 2].
    pub telescoping: f64,
    pub near_bound: f64,
    pub distant_bound: f64,
    pub cubes: Vec<CubeCheck>,
}

impl PouReport {
    pub fn passes(&self) -> bool {
        self.alpha_conditions.iter().all(|&c| c)
            && self.telescoping <= 1e-14
            && self.cubes.iter().all(|c| c.near_sum <= self.near_bound && c.distant <= self.distant_bound)
    }
}

fn all_tuples(n: usize, d: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..d {
        out = out.into_iter().flat_map(|t: Vec<usize>| (1..=n).map(move |v| [t.clone(), vec![v]].concat())).collect();
    }
    out
}

/// Checks the near-sum bound 2^{dk}·d·ε and the distant-term bound ε (the
/// latter in L∞) on every cube, with a grid of `grid` points per axis.
pub fn pou_report(d: usize, n: usize, k: usize, eps: f64, p: u32, q: u32, grid: usize, fd_step: f64) -> Result<PouReport> {
    if grid < 64 {
        return invalid("grid must have at least 64 points per axis");
    }
    let params = choose_alpha(d, n, k, eps, p, q)?;
    let alpha = params.alpha;
    let telescoping = (0..=10_000)
        .map(|i| {
            let y = -1.0 + 3.0 * i as f64 / 10_000.0;
            let total: f64 = (1..=n).map(|j| partition_rho(j, n, alpha, p, q, y).unwrap()).sum();
            (total - 1.0).abs()
        })
        .fold(0.0, f64::max);
    let tuples = all_tuples(n, d);
    let mut cubes = Vec::with_capacity(tuples.len());
    for j in &tuples {
        let lo: Vec<f64> = j.iter().map(|&v| (v - 1) as f64 / n as f64).collect();
        let hi: Vec<f64> = j.iter().map(|&v| v as f64 / n as f64).collect();
        let cube = BoxDomain::new(lo, hi)?;
        let near: Vec<&Vec<usize>> = tuples.iter().filter(|t| t.iter().zip(j).all(|(&a, &b)| a.abs_diff(b) <= 1)).collect();
        let far: Vec<&Vec<usize>> = tuples.iter().filter(|t| t.iter().zip(j).any(|(&a, &b)| a.abs_diff(b) >= 2)).collect();
        let deviation = |x: &[f64]| near.iter().map(|t| partition_phi(t, n, alpha, p, q, x).unwrap()).sum::<f64>() - 1.0;
        let near_sum = sobolev_norm(&deviation, k, &cube, grid, fd_step / n as f64)?;
        let mut distant: f64 = 0.0;
        for t in far {
            let term = |x: &[f64]| partition_phi(t, n, alpha, p, q, x).unwrap();
            distant = distant.max(sobolev_norm(&term, 0, &cube, grid, fd_step / n as f64)?);
        }
        cubes.push(CubeCheck { cube: j.clone(), near_sum, distant });
    }
    Ok(PouReport {
        alpha_conditions: params.conditions()?,
        params,
        telescoping,
        near_bound: 2f64.powi((d * k) as i32) * d as f64 * eps,
        distant_bound: eps,
        cubes,
    })
}
