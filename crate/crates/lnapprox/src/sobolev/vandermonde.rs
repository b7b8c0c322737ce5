//! Shifted-power representation of lower-degree monomials.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::kernels::{in_s_pq, validate_pq};

/// Solution of Σ_k c_k β_k^ℓ = [ℓ = m_t − t] (ℓ = 0..p) on the nodes β_k = k − p/2.
#[derive(Debug, Clone, PartialEq)]
pub struct VandermondeCoeffs {
    pub t: usize,
    pub m_t: usize,
    pub nodes: Vec<f64>,
    pub c: Vec<f64>,
    /// A_ℓ = Σ_k c_k β_k^{m_t − ℓ} for ℓ = 0..t.
    pub a: Vec<f64>,
    pub residual: f64,
}

/// β_k = k − p/2 for k = 0..=p.
pub fn vandermonde_nodes(p: usize) -> Vec<f64> {
    (0..=p).map(|k| k as f64 - p as f64 / 2.0).collect()
}

/// Smallest element of S_{p,q} that is ≥ t.
pub fn next_in_s(t: usize, p: u32, q: u32) -> Result<usize> {
    validate_pq(p, q)?;
    Ok((t..).find(|&m| in_s_pq(p, q, m)).expect("S_{p,q} is unbounded"))
}

pub fn vandermonde_coeffs(t: usize, m_t: usize, p: usize) -> Result<VandermondeCoeffs> {
    if m_t < t || m_t - t > p {
        return invalid(format!("need 0 ≤ m_t − t ≤ p, got t = {t}, m_t = {m_t}, p = {p}"));
    }
    let nodes = vandermonde_nodes(p);
    let v = DMatrix::from_fn(p + 1, p + 1, |l, k| nodes[k].powi(l as i32));
    let mut rhs = DVector::zeros(p + 1);
    rhs[m_t - t] = 1.0;
    let c = v.clone().lu().solve(&rhs).ok_or_else(|| Error::Internal("singular Vandermonde system".into()))?;
    let residual = (&v * &c - &rhs).amax();
    if residual >= 1e-10 {
        return Err(Error::Internal(format!("Vandermonde residual {residual:e}")));
    }
    let a = (0..t).map(|l| c.iter().zip(&nodes).map(|(ck, b)| ck * b.powi((m_t - l) as i32)).sum()).collect();
    Ok(VandermondeCoeffs { t, m_t, nodes, c: c.iter().copied().collect(), a, residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_solved_cases() {
        let top = vandermonde_coeffs(0, 2, 2).unwrap();
        assert_eq!(top.nodes, vec![-1.0, 0.0, 1.0]);
        for (got, want) in top.c.iter().zip([0.5, -1.0, 0.5]) {
            assert!((got - want).abs() < 1e-14);
        }
        let zero = vandermonde_coeffs(3, 3, 2).unwrap();
        for (got, want) in zero.c.iter().zip([0.0, 1.0, 0.0]) {
            assert!((got - want).abs() < 1e-14);
        }
        assert!(vandermonde_coeffs(1, 4, 2).is_err());
    }

    #[test]
    fn next_element() {
        assert_eq!(next_in_s(0, 2, 2).unwrap(), 1);
        assert_eq!(next_in_s(2, 2, 2).unwrap(), 3);
        assert_eq!(next_in_s(3, 2, 2).unwrap(), 3);
        assert_eq!(next_in_s(4, 6, 2).unwrap(), 9);
    }
}
