//! Finite-difference approximation of a single power y^n by a shallow φ_{p,q}-net.

use nalgebra::{DMatrix, DVector};

use super::shallow::{phi_activation, Shallow};
use crate::error::{invalid, Error, Result};
use crate::kernels::{binomial, derivative_bound_a, factorial, in_s_pq, phi_derivative_at_zero, phi_pq, validate_pq, PhiDerivatives};
use crate::netir::NetIR;

/// Safety factor applied to grid maxima of |φ^{(m)}| on [−1/2, 1/2].
const SUP_SAFETY: f64 = 1.05;
/// Grid points used for those maxima.
const SUP_GRID: usize = 2001;

/// Step size chosen for a finite-difference monomial net with its error constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdStep {
    pub n: usize,
    pub h: f64,
    /// Constant C with W^{k,∞} truncation error ≤ C·h², built from the actual
    /// maxima of |φ^{(j)}| on [−1/2, 1/2].
    pub truncation_constant: f64,
    /// The coarser envelope constant based on A(p,q,·); infinite on overflow.
    pub envelope_constant: f64,
    /// Estimated rounding error of one evaluation on [−M, M].
    pub roundoff: f64,
}

/// Output weights of the folded difference quotient: pairs (j, weight) for
/// the neuron φ((j/2)·h·y), j = n, n − 2, …, 1.
pub(crate) fn fd_terms(n: usize, h: f64, p: u32, q: u32) -> Result<Vec<(usize, f64)>> {
    let d0 = phi_derivative_at_zero(p, q, n)?;
    let scale = d0 * h.powi(n as i32);
    if !(scale.is_finite() && scale != 0.0) {
        return Err(Error::Unbounded(format!("φ^({n})(0)·h^{n} is not representable")));
    }
    Ok((0..=(n - 1) / 2)
        .map(|i| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            (n - 2 * i, 2.0 * sign * binomial(n, i) / scale)
        })
        .collect())
}

fn sup_abs_derivative(table: &PhiDerivatives, m: usize) -> f64 {
    (0..SUP_GRID).map(|i| table.eval(m, -0.5 + i as f64 / (SUP_GRID - 1) as f64).abs()).fold(0.0, f64::max) * SUP_SAFETY
}

fn centered_power_sum(n: usize, j: usize) -> f64 {
    (0..=n).map(|i| binomial(n, i) * (n as f64 / 2.0 - i as f64).abs().powi(j as i32)).sum()
}

fn check_degree(n: usize, p: u32, q: u32) -> Result<()> {
    validate_pq(p, q)?;
    if n.is_multiple_of(2) || !in_s_pq(p, q, n) {
        return invalid(format!("degree {n} must be odd and belong to S_{{{p},{q}}}"));
    }
    Ok(())
}

/// Picks h so that the W^{k,∞}([−M, M]) error of the net for y^n is at most
/// `tol`, splitting the budget evenly between truncation and rounding.
pub fn choose_fd_step(n: usize, p: u32, q: u32, k: usize, m_range: f64, tol: f64) -> Result<FdStep> {
    check_degree(n, p, q)?;
    if !(tol > 0.0 && m_range > 0.0) {
        return invalid("tolerance and range must be positive");
    }
    let table = PhiDerivatives::new(p, q, (n + 2).max(k))?;
    let d0 = phi_derivative_at_zero(p, q, n)?.abs();
    let sup_n2 = sup_abs_derivative(&table, n + 2);
    let s_n2 = centered_power_sum(n, n + 2);
    let mut constant: f64 = 0.0;
    for m in 0..=k {
        let c = if m <= n + 1 {
            sup_n2 * s_n2 * m_range.powi((n + 2 - m) as i32) / (d0 * factorial(n + 2 - m))
        } else {
            sup_abs_derivative(&table, m) * centered_power_sum(n, m) / d0
        };
        constant = constant.max(c);
    }
    let envelope_constant = {
        let a_n2 = derivative_bound_a(p, q, n + 2).unwrap_or(f64::INFINITY);
        let a_k = derivative_bound_a(p, q, k).unwrap_or(f64::INFINITY);
        let half = n as f64 / 2.0;
        a_n2 * 2f64.powi(n as i32) * half.powi(n as i32 + 2) * m_range.powi(n as i32 + 2) + a_k * 2f64.powi(n as i32) * half.powi(k as i32)
    };
    let h = (0.5 * tol / constant).sqrt().min(1.0 / (n as f64 * m_range)).min(1.0);
    let roundoff = fd_roundoff(n, h, p, q, m_range)?;
    if roundoff > 0.5 * tol {
        return Err(Error::Unbounded(format!(
            "tolerance {tol:e} for y^{n} on [−{m_range}, {m_range}] is below the double-precision floor (rounding ≈ {roundoff:e})"
        )));
    }
    Ok(FdStep { n, h, truncation_constant: constant, envelope_constant, roundoff })
}

/// 4u·Σ|w_j φ((j/2)hM)| for the folded difference quotient.
pub(crate) fn fd_roundoff(n: usize, h: f64, p: u32, q: u32, m_range: f64) -> Result<f64> {
    let terms = fd_terms(n, h, p, q)?;
    let sum: f64 = terms.iter().map(|&(j, w)| (w * phi_pq(p, q, j as f64 / 2.0 * h * m_range)).abs()).sum();
    Ok(4.0 * f64::EPSILON * sum)
}

/// Shallow φ_{p,q}-net with ⌈(n + 1)/2⌉ neurons approximating y^n on [−M, M].
pub fn build_monomial_fd_net(n: usize, h: f64, p: u32, q: u32, m_range: f64) -> Result<NetIR> {
    check_degree(n, p, q)?;
    if !(h > 0.0 && m_range > 0.0) {
        return invalid("h and M must be positive");
    }
    if n as f64 / 2.0 * h * m_range > 0.5 * (1.0 + 1e-12) {
        return invalid(format!("step h = {h} violates (n/2)·h·M ≤ 1/2"));
    }
    let terms = fd_terms(n, h, p, q)?;
    let w1 = DMatrix::from_iterator(terms.len(), 1, terms.iter().map(|&(j, _)| j as f64 / 2.0 * h));
    let w2 = DMatrix::from_iterator(1, terms.len(), terms.iter().map(|&(_, w)| w));
    Shallow { w1, b1: DVector::zeros(terms.len()), w2, b2: DVector::zeros(1) }.to_net(phi_activation(p, q))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_case() {
        let net = build_monomial_fd_net(1, 0.01, 2, 2, 1.0).unwrap();
        assert_eq!(net.width(), 1);
        assert_eq!(net.eval_scalar(&[0.0]).unwrap(), 0.0);
        assert!((net.eval_scalar(&[0.5]).unwrap() - 0.5).abs() < 1e-4);
    }

    #[test]
    fn widths_and_rejections() {
        for n in [1usize, 3, 5, 7] {
            assert_eq!(build_monomial_fd_net(n, 0.01, 2, 2, 1.0).unwrap().width(), n.div_ceil(2));
        }
        assert!(build_monomial_fd_net(2, 0.01, 2, 2, 1.0).is_err());
        assert!(build_monomial_fd_net(3, 0.5, 2, 2, 1.0).is_err());
        assert!(build_monomial_fd_net(1, 0.01, 6, 2, 1.0).is_err());
        assert!(build_monomial_fd_net(3, 0.01, 6, 2, 1.0).is_ok());
    }

    #[test]
    fn chosen_step_meets_tolerance() {
        for (n, tol) in [(1, 1e-4), (3, 1e-4), (5, 1e-3)] {
            let step = choose_fd_step(n, 2, 2, 0, 1.0, tol).unwrap();
            assert!(step.envelope_constant >= step.truncation_constant);
            let net = build_monomial_fd_net(n, step.h, 2, 2, 1.0).unwrap();
            let worst = (0..=400)
                .map(|i| {
                    let y = -1.0 + i as f64 / 200.0;
                    (net.eval_scalar(&[y]).unwrap() - y.powi(n as i32)).abs()
                })
                .fold(0.0, f64::max);
            assert!(worst <= tol, "n={n}: {worst} > {tol}");
        }
    }

    #[test]
    fn floor_is_reported() {
        assert!(matches!(choose_fd_step(7, 2, 2, 0, 1.0, 1e-14), Err(Error::Unbounded(_))));
    }
}
