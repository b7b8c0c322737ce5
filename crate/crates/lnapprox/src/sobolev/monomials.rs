//! Shallow φ_{p,q}-nets for families of monomials: all powers of one
//! variable, all multivariate monomials of one degree, and products.

use nalgebra::{DMatrix, DVector};

use super::monomial::{choose_fd_step, fd_terms};
use super::multi_index::{monomial as eval_monomial, multi_index_count, multi_indices, multinomial, MultiIndex};
use super::shallow::{phi_activation, Shallow};
use super::vandermonde::{next_in_s, vandermonde_coeffs, vandermonde_nodes};
use crate::error::{invalid, Error, Result};
use crate::kernels::{binomial, in_s_pq, validate_pq};
use crate::netir::{AffineMap, NetIR};

/// Construction data of an all-monomials net.
#[derive(Debug, Clone, PartialEq)]
pub struct AllMonomialsInfo {
    pub s: usize,
    /// Shared finite-difference step.
    pub h: f64,
    /// Tolerance requested from each shifted power net.
    pub eta: f64,
    /// Amplification constant of the recursion: max_t E_t at unit η.
    pub recursion_constant: f64,
}

/// Net with outputs ψ_0..ψ_s, ψ_t ≈ y^t on [−M, M] in W^{k,∞} to `eps`.
pub fn build_all_monomials_net(s: usize, p: u32, q: u32, eps: f64, m_range: f64, k: usize) -> Result<NetIR> {
    let (parts, _) = all_monomials_parts(s, p, q, eps, m_range, k)?;
    parts.to_net(phi_activation(p, q))
}

/// As [`build_all_monomials_net`], also returning the construction data.
pub fn build_all_monomials_net_with_info(s: usize, p: u32, q: u32, eps: f64, m_range: f64, k: usize) -> Result<(NetIR, AllMonomialsInfo)> {
    let (parts, info) = all_monomials_parts(s, p, q, eps, m_range, k)?;
    Ok((parts.to_net(phi_activation(p, q))?, info))
}

pub(crate) fn all_monomials_parts(s: usize, p: u32, q: u32, eps: f64, m_range: f64, k: usize) -> Result<(Shallow, AllMonomialsInfo)> {
    validate_pq(p, q)?;
    if s.is_multiple_of(2) || !in_s_pq(p, q, s) {
        return invalid(format!("degree {s} must be odd and belong to S_{{{p},{q}}}"));
    }
    if !(eps > 0.0 && m_range > 0.0) {
        return invalid("ε and M must be positive");
    }
    let pu = p as usize;
    let nodes = vandermonde_nodes(pu);
    let mut coeffs = Vec::with_capacity(s);
    let mut degrees = Vec::with_capacity(s);
    for t in 1..=s {
        let m = next_in_s(t, p, q)?;
        coeffs.push(vandermonde_coeffs(t, m, pu)?);
        degrees.push(m);
    }

    // Error recursion at unit η; E_0 = 0 because ψ_0 is exact.
    let mut errors = vec![0.0];
    for vc in &coeffs {
        let (t, m) = (vc.t, vc.m_t);
        let direct: f64 = vc.c.iter().map(|c| c.abs()).sum();
        let carried: f64 = (0..t).map(|l| binomial(m, l) * vc.a[l].abs() * errors[l]).sum();
        errors.push((direct + carried) / binomial(m, t));
    }
    let recursion_constant = errors.iter().copied().fold(0.0, f64::max);
    let eta = eps / recursion_constant;

    let shifted_range = m_range + pu as f64 / 2.0;
    let mut distinct = degrees.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let mut h = f64::INFINITY;
    for &m in &distinct {
        h = h.min(choose_fd_step(m, p, q, k, shifted_range, eta)?.h);
    }

    // Hidden unit (k, j) computes φ((j/2)·h·(y + β_k)) for odd j ≤ s.
    let per_node = s.div_ceil(2);
    let width = (pu + 1) * per_node;
    let unit = |node: usize, j: usize| node * per_node + (j - 1) / 2;
    let mut w1 = DMatrix::zeros(width, 1);
    let mut b1 = DVector::zeros(width);
    for (node, beta) in nodes.iter().enumerate() {
        for j in (1..=s).step_by(2) {
            let scale = j as f64 / 2.0 * h;
            w1[(unit(node, j), 0)] = scale;
            b1[unit(node, j)] = scale * beta;
        }
    }

    let mut w2 = DMatrix::zeros(s + 1, width);
    let mut b2 = DVector::zeros(s + 1);
    b2[0] = 1.0;
    for vc in &coeffs {
        let (t, m) = (vc.t, vc.m_t);
        let inv = 1.0 / binomial(m, t);
        let terms = fd_terms(m, h, p, q)?;
        let mut row = DVector::<f64>::zeros(width);
        for (node, &c) in vc.c.iter().enumerate() {
            for &(j, w) in &terms {
                row[unit(node, j)] += c * w;
            }
        }
        let mut bias = 0.0;
        for l in 0..t {
            let f = binomial(m, l) * vc.a[l];
            if f != 0.0 {
                row -= w2.row(l).transpose() * f;
                bias -= f * b2[l];
            }
        }
        w2.set_row(t, &(row * inv).transpose());
        b2[t] = bias * inv;
    }
    Ok((Shallow { w1, b1, w2, b2 }, AllMonomialsInfo { s, h, eta, recursion_constant }))
}

/// Direction vectors c_i and the inverse of G[i][β] = multinom(β)·c_i^β.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSystem {
    pub n: usize,
    pub indices: Vec<MultiIndex>,
    pub directions: Vec<Vec<usize>>,
    /// Row β holds the weights of (c_i·ω)^n in ω^β.
    pub inverse: DMatrix<f64>,
    pub residual: f64,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Greedy lexicographic choice of integer directions in {0..n}^d with gcd 1
/// whose n-th powers span all degree-n monomials.
pub fn direction_system(n: usize, d: usize) -> Result<DirectionSystem> {
    if d == 0 {
        return invalid("dimension must be positive");
    }
    let indices = multi_indices(n, d);
    let count = indices.len();
    let row_of = |c: &[usize]| -> DVector<f64> {
        let cf: Vec<f64> = c.iter().map(|&v| v as f64).collect();
        DVector::from_iterator(count, indices.iter().map(|b| multinomial(b) * eval_monomial(b, &cf)))
    };
    let mut directions: Vec<Vec<usize>> = Vec::with_capacity(count);
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(count);
    let base = n.max(1) + 1;
    let total = base.pow(d as u32);
    for code in 1..total {
        if directions.len() == count {
            break;
        }
        let mut c = vec![0usize; d];
        let mut rest = code;
        for slot in c.iter_mut().rev() {
            *slot = rest % base;
            rest /= base;
        }
        if c.iter().fold(0, |g, &v| gcd(g, v)) != 1 {
            continue;
        }
        let row = row_of(&c);
        let mut residual = row.clone();
        for b in &basis {
            residual -= b * b.dot(&residual);
        }
        let norm = residual.norm();
        if norm > 1e-9 * row.norm() {
            basis.push(residual / norm);
            directions.push(c);
        }
    }
    if directions.len() < count {
        return Err(Error::Internal(format!("could not find {count} independent directions for degree {n} in {d} variables")));
    }
    let g = DMatrix::from_fn(count, count, |i, b| {
        multinomial(&indices[b]) * eval_monomial(&indices[b], &directions[i].iter().map(|&v| v as f64).collect::<Vec<_>>())
    });
    let inverse = g.clone().try_inverse().ok_or_else(|| Error::Internal("direction matrix is singular".into()))?;
    let residual = (&g * &inverse - DMatrix::identity(count, count)).amax();
    if residual >= 1e-8 {
        return Err(Error::Internal(format!("direction system residual {residual:e}")));
    }
    Ok(DirectionSystem { n, indices, directions, inverse, residual })
}

/// Net with |P_{n,d}| outputs approximating ω^β (|β| = n) on [−M, M]^d.
pub fn build_multivariate_monomials_net(n: usize, d: usize, p: u32, q: u32, eps: f64, m_range: f64, k: usize) -> Result<NetIR> {
    multivariate_parts(n, d, p, q, eps, m_range, k)?.0.to_net(phi_activation(p, q))
}

pub(crate) fn multivariate_parts(n: usize, d: usize, p: u32, q: u32, eps: f64, m_range: f64, k: usize) -> Result<(Shallow, DirectionSystem)> {
    validate_pq(p, q)?;
    if !(eps > 0.0 && m_range > 0.0) {
        return invalid("ε and M must be positive");
    }
    let system = direction_system(n, d)?;
    let count = multi_index_count(n, d);
    if n == 0 {
        let parts = Shallow { w1: DMatrix::zeros(0, d), b1: DVector::zeros(0), w2: DMatrix::zeros(1, 0), b2: DVector::from_element(1, 1.0) };
        return Ok((parts, system));
    }
    let stretch: Vec<f64> = system.directions.iter().map(|c| (*c.iter().max().unwrap() as f64).max(1.0).powi(k as i32)).collect();
    let amplification = (0..count).map(|b| (0..count).map(|i| system.inverse[(b, i)].abs() * stretch[i]).sum::<f64>()).fold(0.0, f64::max);
    let eta = eps / amplification;
    let s = next_in_s(n, p, q)?;
    let parts = system
        .directions
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let l1 = c.iter().sum::<usize>() as f64;
            let (uni, _) = all_monomials_parts(s, p, q, eta, l1 * m_range, k)?;
            let project = AffineMap::new(DMatrix::from_row_iterator(1, d, c.iter().map(|&v| v as f64)), DVector::zeros(1))?;
            let select = DMatrix::from_fn(count, s + 1, |b, t| if t == n { system.inverse[(b, i)] } else { 0.0 });
            Ok(uni.precompose(&project).postcompose(&select, &DVector::zeros(count)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((Shallow::sum(&parts), system))
}

/// Net approximating x₁⋯x_d on [−M, M]^d in W^{k,∞} to `eps`.
pub fn build_multiplication_net(d: usize, p: u32, q: u32, eps: f64, m_range: f64, k: usize) -> Result<NetIR> {
    multiplication_parts(d, p, q, eps, m_range, k)?.to_net(phi_activation(p, q))
}

pub(crate) fn multiplication_parts(d: usize, p: u32, q: u32, eps: f64, m_range: f64, k: usize) -> Result<Shallow> {
    let (parts, system) = multivariate_parts(d, d, p, q, eps, m_range, k)?;
    let target = vec![1usize; d];
    let row = system.indices.iter().position(|b| *b == target).expect("all-ones index present");
    let select = DMatrix::from_fn(1, parts.out_dim(), |_, j| if j == row { 1.0 } else { 0.0 });
    Ok(parts.postcompose(&select, &DVector::zeros(1)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_error(net: &NetIR, f: impl Fn(f64) -> Vec<f64>, m: f64) -> f64 {
        (0..=1000)
            .map(|i| {
                let y = -m + 2.0 * m * i as f64 / 1000.0;
                let out = net.eval(&[y]).unwrap();
                out.iter().zip(f(y)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn all_monomials_cubic() {
        let eps = 1e-3;
        let net = build_all_monomials_net(3, 2, 2, eps, 1.0, 0).unwrap();
        assert_eq!(net.output_dim(), 4);
        assert_eq!(net.width(), 3 * 4 / 2);
        assert_eq!(net.eval(&[0.37]).unwrap()[0], 1.0);
        let err = grid_error(&net, |y| (0..4).map(|t| y.powi(t)).collect(), 1.0);
        assert!(err < eps, "{err}");
    }

    #[test]
    fn directions_for_products() {
        let sys = direction_system(2, 2).unwrap();
        assert_eq!(sys.directions, vec![vec![0, 1], vec![1, 0], vec![1, 1]]);
        let sys = direction_system(3, 3).unwrap();
        assert_eq!(sys.directions.len(), 10);
        assert!(sys.residual < 1e-8);
    }

    #[test]
    fn product_of_two() {
        let eps = 1e-3;
        let net = build_multiplication_net(2, 2, 2, eps, 1.0, 0).unwrap();
        assert!((net.eval_scalar(&[0.5, -0.5]).unwrap() + 0.25).abs() < eps);
        assert!(net.eval_scalar(&[0.0, 0.8]).unwrap().abs() < eps);
    }

    #[test]
    fn degree_zero_is_constant() {
        let net = build_multivariate_monomials_net(0, 3, 2, 2, 1e-3, 1.0, 0).unwrap();
        assert_eq!(net.eval(&[0.1, 0.2, 0.3]).unwrap(), vec![1.0]);
    }
}
