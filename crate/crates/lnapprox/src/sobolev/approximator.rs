//! Two-hidden-layer φ_{p,q} approximation of smooth functions on [0, 1]^d:
//! local Taylor polynomials glued by an approximate partition of unity and
//! shallow multiplication nets.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::monomials::{multiplication_parts, multivariate_parts};
use super::multi_index::{multi_index_count, multi_indices, MultiIndexPoly};
use super::partition::{choose_alpha, PartitionParams};
use super::shallow::phi_activation;
use crate::construct::compile_deep_phi_net_to_pln;
use crate::error::{invalid, Error, Result};
use crate::kernels::{derivative_bound_a, factorial, validate_pq};
use crate::netir::{AffineMap, InterlayerOp, NetIR};
use crate::verify::{ApproxReport, BoxDomain};

/// A target with computable partial derivatives on [0, 1]^d.
pub trait SmoothTarget: Sync {
    fn dim(&self) -> usize;
    fn name(&self) -> String;
    /// D^α f(x).
    fn derivative(&self, alpha: &[usize], x: &[f64]) -> f64;
    /// An upper bound for sup_{[0,1]^d} |D^α f|.
    fn derivative_sup(&self, alpha: &[usize]) -> f64;

    fn value(&self, x: &[f64]) -> f64 {
        self.derivative(&vec![0; self.dim()], x)
    }

    /// max_{|α| = s} sup |D^α f|.
    fn seminorm(&self, s: usize) -> f64 {
        multi_indices(s, self.dim()).iter().map(|a| self.derivative_sup(a)).fold(0.0, f64::max)
    }

    /// max_{|α| ≤ k} sup |D^α f|.
    fn norm(&self, k: usize) -> f64 {
        (0..=k).map(|s| self.seminorm(s)).fold(0.0, f64::max)
    }
}

/// Π_i sin(2π x_i).
#[derive(Debug, Clone, Copy)]
pub struct SinTwoPi {
    pub d: usize,
}

impl SmoothTarget for SinTwoPi {
    fn dim(&self) -> usize {
        self.d
    }
    fn name(&self) -> String {
        "sin2pi".into()
    }
    fn derivative(&self, alpha: &[usize], x: &[f64]) -> f64 {
        let w = 2.0 * std::f64::consts::PI;
        alpha.iter().zip(x).map(|(&a, &xi)| w.powi(a as i32) * (w * xi + a as f64 * std::f64::consts::FRAC_PI_2).sin()).product()
    }
    fn derivative_sup(&self, alpha: &[usize]) -> f64 {
        (2.0 * std::f64::consts::PI).powi(alpha.iter().sum::<usize>() as i32)
    }
}

/// f ≡ c.
#[derive(Debug, Clone, Copy)]
pub struct ConstantTarget {
    pub d: usize,
    pub c: f64,
}

impl SmoothTarget for ConstantTarget {
    fn dim(&self) -> usize {
        self.d
    }
    fn name(&self) -> String {
        "const".into()
    }
    fn derivative(&self, alpha: &[usize], _: &[f64]) -> f64 {
        if alpha.iter().all(|&a| a == 0) {
            self.c
        } else {
            0.0
        }
    }
    fn derivative_sup(&self, alpha: &[usize]) -> f64 {
        self.derivative(alpha, &[]).abs()
    }
}

/// exp(−a‖x − ½𝟙‖²), differentiated through Hermite polynomials.
#[derive(Debug, Clone, Copy)]
pub struct GaussianTarget {
    pub d: usize,
    pub a: f64,
}

impl GaussianTarget {
    /// d^n/dt^n exp(−a t²) = (−√a)^n H_n(√a t) exp(−a t²).
    fn axis(&self, n: usize, t: f64) -> f64 {
        let r = self.a.sqrt();
        let z = r * t;
        let (mut h0, mut h1) = (1.0, 2.0 * z);
        let hn = if n == 0 {
            1.0
        } else {
            for m in 1..n {
                let next = 2.0 * z * h1 - 2.0 * m as f64 * h0;
                h0 = h1;
                h1 = next;
            }
            h1
        };
        (-r).powi(n as i32) * hn * (-self.a * t * t).exp()
    }
}

/// Grid used for the per-axis maxima of Gaussian derivatives, and its safety factor.
const GAUSS_SUP_GRID: usize = 20_001;
const GAUSS_SUP_SAFETY: f64 = 1.01;

impl SmoothTarget for GaussianTarget {
    fn dim(&self) -> usize {
        self.d
    }
    fn name(&self) -> String {
        "gauss".into()
    }
    fn derivative(&self, alpha: &[usize], x: &[f64]) -> f64 {
        alpha.iter().zip(x).map(|(&n, &xi)| self.axis(n, xi - 0.5)).product()
    }
    fn derivative_sup(&self, alpha: &[usize]) -> f64 {
        alpha
            .iter()
            .map(|&n| {
                let m = (0..GAUSS_SUP_GRID).map(|i| self.axis(n, -0.5 + i as f64 / (GAUSS_SUP_GRID - 1) as f64).abs()).fold(0.0, f64::max);
                if n == 0 {
                    m
                } else {
                    m * GAUSS_SUP_SAFETY
                }
            })
            .product()
    }
}

/// Named targets: `sin2pi`, `const` (value 1), `gauss` (a = 4).
pub fn target_by_name(name: &str, d: usize) -> Result<Box<dyn SmoothTarget>> {
    if d == 0 {
        return invalid("dimension must be positive");
    }
    match name {
        "sin2pi" => Ok(Box::new(SinTwoPi { d })),
        "const" => Ok(Box::new(ConstantTarget { d, c: 1.0 })),
        "gauss" => Ok(Box::new(GaussianTarget { d, a: 4.0 })),
        other => invalid(format!("unknown target '{other}' (expected sin2pi, const or gauss)")),
    }
}

/// Parameters of the Sobolev construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SobolevConfig {
    pub d: usize,
    pub s: usize,
    pub k: usize,
    pub n: usize,
    pub delta: f64,
    pub p: u32,
    pub q: u32,
}

/// Constants and sizes behind one construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SobolevDiagnostics {
    pub c1: f64,
    /// C₁ actually used for tolerances (floored to stay positive).
    pub c1_used: f64,
    pub target_norm: f64,
    pub eta: f64,
    pub eps: f64,
    pub alpha: f64,
    pub r: f64,
    pub h: f64,
    pub monomial_tol: f64,
    pub product_scale: f64,
    pub multiplication_tol: f64,
    pub linf_bound: f64,
    pub wk_bound: Option<f64>,
    pub width1: usize,
    pub width2: usize,
    pub width1_bound: usize,
    pub width2_bound: usize,
}

/// A built approximator with its diagnostics.
#[derive(Debug, Clone)]
pub struct SobolevApproximator {
    pub config: SobolevConfig,
    pub net: NetIR,
    pub diagnostics: SobolevDiagnostics,
}

/// Relative floor on C₁, so that targets with vanishing top derivatives
/// still get finite tolerances.
const C1_FLOOR: f64 = 2e-2;

/// Largest dense second-layer weight matrix accepted (entries).
const MAX_DENSE_ENTRIES: usize = 40_000_000;

fn ceil_div(a: i64, b: i64) -> i64 {
    let q = a / b;
    if a % b != 0 && (a < 0) == (b < 0) {
        q + 1
    } else {
        q
    }
}

/// Width of the shallow net for all monomials of degree n: (p+1)/2·(p⌈(n−r)/p⌉ + r + 1).
fn monomial_block_width(n: usize, p: u32, q: u32) -> usize {
    let (pi, r) = (p as i64, (p / q) as i64);
    let top = pi * ceil_div(n as i64 - r, pi).max(0) + r;
    ((p as i64 + 1) * (top + 1) / 2) as usize
}

/// Width bounds of the two hidden layers.
pub fn sobolev_width_bounds(d: usize, s: usize, n: usize, p: u32, q: u32) -> (usize, usize) {
    let first = monomial_block_width(s - 1, p, q) * multi_index_count(s - 1, d + 1) + d * (n - 1);
    let second = monomial_block_width(d + 1, p, q) * multi_index_count(d + 1, d + 1) * n.pow(d as u32);
    (first, second)
}

/// Width bounds of the compiled PLN-net: n_s(3⌈s/2⌉|P_{s−1,d+1}| + d(N−1)) and
/// 3n_s⌈(d+2)/2⌉|P_{d+1,d+1}|N^d.
pub fn pln_width_bounds(d: usize, s: usize, n: usize, ns: usize) -> (usize, usize) {
    let first = ns * (3 * s.div_ceil(2) * multi_index_count(s - 1, d + 1) + d * (n - 1));
    let second = 3 * ns * (d + 2).div_ceil(2) * multi_index_count(d + 1, d + 1) * n.pow(d as u32);
    (first, second)
}

fn check_config(cfg: &SobolevConfig) -> Result<()> {
    validate_pq(cfg.p, cfg.q)?;
    if cfg.d == 0 || cfg.s == 0 {
        return invalid("d and s must be positive");
    }
    if !(cfg.delta > 0.0 && cfg.delta.is_finite()) {
        return invalid("δ must be positive");
    }
    if 2 * cfg.n <= 3 * cfg.d {
        return Err(Error::Hypothesis(format!("N > 3d/2 fails: N = {}, d = {}", cfg.n, cfg.d)));
    }
    if cfg.k >= 1 {
        if cfg.k >= cfg.s {
            return Err(Error::Hypothesis(format!("k < s fails: k = {}, s = {}", cfg.k, cfg.s)));
        }
        if cfg.delta > 6.0 {
            return Err(Error::Hypothesis(format!("δ ≤ 6 fails: δ = {}", cfg.delta)));
        }
        let r = (cfg.p / cfg.q) as f64;
        let need = (cfg.k * (cfg.s + cfg.d + cfg.k)) as f64 / (cfg.s - cfg.k) as f64;
        if r <= need {
            return Err(Error::Hypothesis(format!("p/q > k(s+d+k)/(s−k) fails: {r} ≤ {need}")));
        }
    }
    Ok(())
}

/// C₁ = max_{ℓ ≤ k} (3d/2)^{s−ℓ}|f|_{W^{s,∞}}/(s−ℓ)!.
pub fn sobolev_c1(target: &dyn SmoothTarget, d: usize, s: usize, k: usize) -> f64 {
    let semi = target.seminorm(s);
    (0..=k).map(|l| (1.5 * d as f64).powi((s - l) as i32) * semi / factorial(s - l)).fold(0.0, f64::max)
}

fn cube_indices(n: usize, d: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..d {
        out = out.into_iter().flat_map(|t: Vec<usize>| (1..=n).map(move |v| [t.clone(), vec![v]].concat())).collect();
    }
    out
}

/// Builds the two-hidden-layer approximator.
pub fn build_sobolev_approximator(target: &dyn SmoothTarget, cfg: SobolevConfig) -> Result<SobolevApproximator> {
    check_config(&cfg)?;
    let SobolevConfig { d, s, k, n, delta, p, q } = cfg;
    if target.dim() != d {
        return Err(Error::Dimension { expected: d, got: target.dim() });
    }
    let nf = n as f64;
    let df = d as f64;
    let n_s = nf.powi(s as i32);
    let n_d = nf.powi(d as i32);
    let c1 = sobolev_c1(target, d, s, k);
    let norm = target.norm(k);
    let c1_used = c1.max(C1_FLOOR * (1.0 + norm));

    let eta = delta * c1_used / (6.0 * n_s);
    let (eps, alpha_params, h) = if k == 0 {
        let a = if norm > 0.0 { delta * c1_used / (3.0 * norm * (df + n_d) * n_s) } else { f64::INFINITY };
        let b = (delta / 6.0) * (c1_used / n_s) / ((c1_used / n_s + eta) * df + n_d * (norm + c1_used + eta));
        let eps = a.min(b).min(0.2);
        let params = choose_alpha(d, n, k, eps, p, q)?;
        let h = delta * c1_used / (3.0 * n_s * n_d * (df + 1.0).powi(d as i32));
        (eps, params, h)
    } else {
        let a = if norm > 0.0 { 2.0 * 3f64.powi(d as i32) * c1_used * delta / (n_d * norm) } else { f64::INFINITY };
        let b = 3f64.powi(d as i32) * delta / (12.0 * nf.powi((s + d) as i32));
        let eps = a.min(b).min(0.2);
        let params = choose_alpha(d, n, k, eps, p, q)?;
        let ak = derivative_bound_a(p, q, k)?;
        let alpha_k = params.alpha.powi(k as i32);
        let n_sk = nf.powi((s - k) as i32);
        let denom_core = norm + c1_used / n_sk + eta + alpha_k * ak;
        let h = c1_used * alpha_k * ak / (n_sk * n_d * (df + 1.0).powi(d as i32) * df.powi(2 * k as i32) * denom_core.powi(k as i32)) * delta / 3.0;
        (eps, params, h)
    };
    if !alpha_params.conditions()?.iter().all(|&c| c) {
        return Err(Error::Internal("α fails its defining conditions".into()));
    }
    let PartitionParams { alpha, r, .. } = alpha_params;

    // Local Taylor polynomials at the cube centres, in powers of x.
    let cubes = cube_indices(n, d);
    let polys: Vec<MultiIndexPoly> = cubes
        .iter()
        .map(|j| {
            let center: Vec<f64> = j.iter().map(|&v| (2 * v - 1) as f64 / (2.0 * nf)).collect();
            MultiIndexPoly::taylor(&center, s - 1, |g| target.derivative(g, &center))
        })
        .collect();
    let coeff_mass = polys.iter().map(MultiIndexPoly::abs_coeff_sum).fold(0.0, f64::max);
    let monomial_tol = if coeff_mass > 0.0 { eta / coeff_mass } else { eta };
    let product_scale = (coeff_mass * (1.0 + monomial_tol)).max(1.0);
    let multiplication_tol = h / product_scale;

    // First hidden layer: monomials of ω = (1, x), then the partition units.
    let (mono, _) = multivariate_parts(s - 1, d + 1, p, q, monomial_tol, 1.0, k)?;
    let embed =
        AffineMap::new(DMatrix::from_fn(d + 1, d, |i, j| if i == j + 1 { 1.0 } else { 0.0 }), DVector::from_fn(d + 1, |i, _| if i == 0 { 1.0 } else { 0.0 }))?;
    let mono = mono.precompose(&embed);
    let mono_width = mono.width();
    let pou_width = d * (n - 1);
    let width1 = mono_width + pou_width;
    let mut w1 = DMatrix::zeros(width1, d);
    let mut b1 = DVector::zeros(width1);
    w1.view_mut((0, 0), (mono_width, d)).copy_from(&mono.w1);
    b1.rows_mut(0, mono_width).copy_from(&mono.b1);
    let unit = |axis: usize, j: usize| mono_width + axis * (n - 1) + (j - 1);
    for axis in 0..d {
        for j in 1..n {
            w1[(unit(axis, j), axis)] = alpha;
            b1[unit(axis, j)] = -alpha * j as f64 / nf;
        }
    }

    // Each mono output ω^β is a row of (mono.w2, mono.b2) over the first-layer activations.
    let mono_index = multi_indices(s - 1, d + 1);
    let mono_row = |gamma: &[usize]| -> usize {
        let deg: usize = gamma.iter().sum();
        let mut beta = vec![s - 1 - deg];
        beta.extend_from_slice(gamma);
        mono_index.iter().position(|b| *b == beta).expect("monomial present")
    };

    let mult = multiplication_parts(d + 1, p, q, multiplication_tol, 1.0, k)?;
    let mw = mult.width();
    let width2 = mw * cubes.len();
    if width2.saturating_mul(width1) > MAX_DENSE_ENTRIES {
        return invalid(format!("second layer of {width2}×{width1} weights exceeds the dense size limit"));
    }
    let mut w2 = DMatrix::zeros(width2, width1);
    let mut b2 = DVector::zeros(width2);
    let mut w3 = DMatrix::zeros(1, width2);
    let mut b3 = 0.0;
    for (ci, (j, poly)) in cubes.iter().zip(&polys).enumerate() {
        // z = Z·a₁ + z₀ with z = (q_j/M, ρ_{j₁}(x₁), …, ρ_{j_d}(x_d)).
        let mut z = DMatrix::zeros(d + 1, width1);
        let mut z0 = DVector::zeros(d + 1);
        for (gamma, &c) in poly.terms() {
            let row = mono_row(gamma);
            let scale = c / product_scale;
            for col in 0..mono_width {
                z[(0, col)] += scale * mono.w2[(row, col)];
            }
            z0[0] += scale * mono.b2[row];
        }
        for (axis, &ji) in j.iter().enumerate() {
            if n == 1 {
                z0[axis + 1] = 1.0;
                continue;
            }
            if ji == 1 {
                z[(axis + 1, unit(axis, 1))] = -0.5;
                z0[axis + 1] = 0.5;
            } else if ji == n {
                z[(axis + 1, unit(axis, n - 1))] = 0.5;
                z0[axis + 1] = 0.5;
            } else {
                z[(axis + 1, unit(axis, ji - 1))] = 0.5;
                z[(axis + 1, unit(axis, ji))] = -0.5;
            }
        }
        let block = &mult.w1 * &z;
        w2.view_mut((ci * mw, 0), (mw, width1)).copy_from(&block);
        b2.rows_mut(ci * mw, mw).copy_from(&(&mult.w1 * &z0 + &mult.b1));
        for col in 0..mw {
            w3[(0, ci * mw + col)] = product_scale * mult.w2[(0, col)];
        }
        b3 += product_scale * mult.b2[0];
    }

    let act = InterlayerOp::Activation(phi_activation(p, q));
    let net = NetIR::new(vec![AffineMap::new(w1, b1)?, AffineMap::new(w2, b2)?, AffineMap::new(w3, DVector::from_element(1, b3))?], vec![act, act])?;

    let linf_bound = (1.0 + delta) * c1_used / n_s;
    let wk_bound = if k >= 1 {
        let ak = derivative_bound_a(p, q, k)?;
        Some((1.0 + delta) * 2f64.powi(k as i32 + 1) * 3f64.powi(d as i32) * c1_used / nf.powi((s - k) as i32) * alpha.powi(k as i32) * ak)
    } else {
        None
    };
    let (width1_bound, width2_bound) = sobolev_width_bounds(d, s, n, p, q);
    Ok(SobolevApproximator {
        config: cfg,
        net,
        diagnostics: SobolevDiagnostics {
            c1,
            c1_used,
            target_norm: norm,
            eta,
            eps,
            alpha,
            r,
            h,
            monomial_tol,
            product_scale,
            multiplication_tol,
            linf_bound,
            wk_bound,
            width1,
            width2,
            width1_bound,
            width2_bound,
        },
    })
}

/// Compiles a two-hidden-layer Sat approximator into a PLN-net.
pub fn compile_sobolev_to_pln(net: &NetIR, ns: usize) -> Result<NetIR> {
    if net.depth() != 2 {
        return invalid(format!("expected two hidden layers, got {}", net.depth()));
    }
    compile_deep_phi_net_to_pln(net, ns)
}

/// One row of a convergence table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub n: usize,
    pub linf_measured: f64,
    pub linf_bound: f64,
    pub wk_measured: Option<f64>,
    pub wk_bound: Option<f64>,
    pub width1: usize,
    pub width2: usize,
    pub report: ApproxReport,
}

/// Builds and measures the approximator for every N in `ns_list`.
pub fn sobolev_rate_report(target: &dyn SmoothTarget, base: SobolevConfig, n_list: &[usize], grid: usize, fd_step: f64) -> Result<Vec<RateRow>> {
    n_list
        .iter()
        .map(|&n| {
            let start = std::time::Instant::now();
            let cfg = SobolevConfig { n, ..base };
            let built = build_sobolev_approximator(target, cfg)?;
            let net = &built.net;
            let f = |x: &[f64]| target.value(x);
            let g = |x: &[f64]| net.eval_scalar(x).unwrap_or(f64::NAN);
            let mut report = ApproxReport::measure(&f, &g, cfg.k, BoxDomain::unit(cfg.d), grid, fd_step)?;
            report.linf_bound = Some(built.diagnostics.linf_bound);
            report.wk_bound = built.diagnostics.wk_bound;
            report.metadata.insert("target".into(), target.name());
            report.metadata.insert("alpha".into(), format!("{:e}", built.diagnostics.alpha));
            report.metadata.insert("c1".into(), format!("{:e}", built.diagnostics.c1));
            report.wall_time_s = start.elapsed().as_secs_f64();
            Ok(RateRow {
                n,
                linf_measured: report.linf,
                linf_bound: built.diagnostics.linf_bound,
                wk_measured: report.wk.last().copied(),
                wk_bound: built.diagnostics.wk_bound,
                width1: built.diagnostics.width1,
                width2: built.diagnostics.width2,
                report,
            })
        })
        .collect()
}
