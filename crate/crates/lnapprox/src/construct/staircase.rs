//! Piecewise-constant sign-net approximation of Lipschitz functions on [0, 1]
//! and its smooth counterpart under the δ-stabilized LN.

use nalgebra::{DMatrix, DVector};

use super::{compile_sign_to_ln, compile_sign_to_ln_delta, merge_ln_sum_to_pln};
use crate::error::{invalid, Result};
use crate::kernels::ActivationKind;
use crate::netir::{AffineMap, InterlayerOp, NetIR};

/// Staircase parameters for an L-Lipschitz target on [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct StaircaseSpec {
    pub lipschitz: f64,
    pub eps: f64,
    pub pieces: usize,
    /// Target values at the midpoints (2j − 1)/(2N), j = 1..N.
    pub samples: Vec<f64>,
}

impl StaircaseSpec {
    /// Samples `f` at the piece midpoints with N = ⌊L/(2ε)⌋ + 1.
    pub fn new(lipschitz: f64, eps: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        if !(lipschitz >= 0.0 && lipschitz.is_finite()) {
            return invalid("Lipschitz constant must be finite and non-negative");
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return invalid("ε must be positive");
        }
        let ratio = (lipschitz / (2.0 * eps)).floor();
        if ratio > 1e7 {
            return invalid("staircase would need more than 10^7 pieces");
        }
        let pieces = ratio as usize + 1;
        let samples = (1..=pieces).map(|j| f((2 * j - 1) as f64 / (2 * pieces) as f64)).collect();
        Ok(StaircaseSpec { lipschitz, eps, pieces, samples })
    }

    /// Output weights α_1..α_N.
    pub fn alphas(&self) -> Vec<f64> {
        let n = self.pieces;
        let s = &self.samples;
        let mut a: Vec<f64> = (0..n.saturating_sub(1)).map(|j| 0.5 * (s[j + 1] - s[j])).collect();
        a.push(0.5 * (s[0] + s[n - 1]));
        a
    }

    /// Biases b_j = −j/N for j < N and b_N = 1.
    pub fn biases(&self) -> Vec<f64> {
        let n = self.pieces;
        (1..=n).map(|j| if j == n { 1.0 } else { -(j as f64) / n as f64 }).collect()
    }
}

/// Returns the sign-net Σ α_j sign(x + b_j) and its pointwise-equal PLN-net.
pub fn build_lipschitz_staircase(spec: &StaircaseSpec, ns: usize) -> Result<(NetIR, NetIR)> {
    let (alphas, biases) = (spec.alphas(), spec.biases());
    let n = spec.pieces;
    let first = AffineMap::new(DMatrix::from_element(n, 1, 1.0), DVector::from_vec(biases.clone()))?;
    let second = AffineMap::new(DMatrix::from_row_slice(1, n, &alphas), DVector::zeros(1))?;
    let sign = NetIR::shallow(first, InterlayerOp::Activation(ActivationKind::Sign), second)?;
    let pieces = alphas.iter().zip(&biases).map(|(&a, &b)| compile_sign_to_ln(&[1.0], b, &[a], &[0.0], ns)).collect::<Result<Vec<_>>>()?;
    Ok((sign, merge_ln_sum_to_pln(&pieces)?))
}

/// Error budget split for the δ-staircase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaMargins {
    pub eps1: f64,
    pub eps2: f64,
    pub delta0: f64,
}

impl DeltaMargins {
    /// ε₁ = ε₂ = min(ε/4, ε − L/(2N)) and δ₀ = 1/(4N).
    pub fn default_for(spec: &StaircaseSpec) -> Self {
        let n = spec.pieces as f64;
        let slack = spec.eps - spec.lipschitz / (2.0 * n);
        let e = (spec.eps / 4.0).min(slack);
        DeltaMargins { eps1: e, eps2: e, delta0: 1.0 / (4.0 * n) }
    }

    fn validate(&self, spec: &StaircaseSpec) -> Result<()> {
        let n = spec.pieces as f64;
        if !(self.eps1 > 0.0 && self.eps2 > 0.0) {
            return invalid("margins ε₁, ε₂ must be positive");
        }
        if !(self.delta0 > 0.0 && self.delta0 < 1.0 / (2.0 * n)) {
            return invalid("δ₀ must lie in (0, 1/(2N))");
        }
        if spec.lipschitz / (2.0 * n) > spec.eps - self.eps1.max(self.eps2) {
            return invalid("margins exceed the slack ε − L/(2N)");
        }
        Ok(())
    }
}

/// Quantities behind the choice of λ.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaDiagnostics {
    pub alpha_star: f64,
    pub delta_n: f64,
    pub delta_k: Vec<f64>,
    pub delta_star: f64,
    pub lambda: f64,
}

/// Builds Σ α_j (x + b_j)/(|x + b_j| + λδ) as a δ-LN net with λ = δ*/δ.
pub fn build_staircase_delta(spec: &StaircaseSpec, delta: f64, margins: DeltaMargins, ns: usize) -> Result<(NetIR, DeltaDiagnostics)> {
    if !(delta > 0.0 && delta.is_finite()) {
        return invalid("δ must be positive");
    }
    margins.validate(spec)?;
    let alphas = spec.alphas();
    let n = spec.pieces;
    let alpha_star = alphas.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let delta_n = if alpha_star > 0.0 { margins.eps1 * margins.delta0 / (n as f64 * alpha_star) } else { f64::INFINITY };
    let delta_k: Vec<f64> = (0..n.saturating_sub(1))
        .map(|k| {
            let other = alphas.iter().enumerate().filter(|&(j, _)| j != k).fold(0.0f64, |m, (_, a)| m.max(a.abs()));
            if other > 0.0 {
                (margins.eps2 / (2.0 * n as f64)) / ((n - 1) as f64 * other)
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let delta_star = delta_k.iter().fold(delta_n, |m, &v| m.min(v));
    let lambda = if delta_star.is_finite() { delta_star / delta } else { 1.0 };
    let net = build_staircase_delta_with_lambda(spec, delta, lambda, ns)?;
    Ok((net, DeltaDiagnostics { alpha_star, delta_n, delta_k, delta_star, lambda }))
}

/// δ-staircase with an explicit temperature λ > 0.
pub fn build_staircase_delta_with_lambda(spec: &StaircaseSpec, delta: f64, lambda: f64, ns: usize) -> Result<NetIR> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return invalid("λ must be positive");
    }
    let alphas = spec.alphas();
    let n = spec.pieces;
    // A constant target needs no smoothing: sign(x + 1) = 1 on [0, 1].
    let constant = alphas[..n - 1].iter().all(|&a| a == 0.0);
    let pieces = alphas
        .iter()
        .zip(&spec.biases())
        .enumerate()
        .map(|(j, (&a, &b))| {
            if constant && j == n - 1 {
                compile_sign_to_ln_delta(&[1.0], b, &[0.0], &[a], ns, delta, lambda)
            } else {
                compile_sign_to_ln_delta(&[1.0], b, &[a], &[0.0], ns, delta, lambda)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    merge_ln_sum_to_pln(&pieces)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_example() {
        let spec = StaircaseSpec::new(1.0, 0.3, |x| x).unwrap();
        assert_eq!(spec.pieces, 2);
        assert_eq!(spec.alphas(), vec![0.25, 0.5]);
        let (sign, pln) = build_lipschitz_staircase(&spec, 2).unwrap();
        assert_eq!(sign.eval_scalar(&[0.1]).unwrap(), 0.25);
        assert!((pln.eval_scalar(&[0.1]).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn constant_is_exact() {
        let spec = StaircaseSpec::new(0.0, 0.1, |_| 1.7).unwrap();
        let (sign, _) = build_lipschitz_staircase(&spec, 3).unwrap();
        assert_eq!(sign.eval_scalar(&[0.4]).unwrap(), 1.7);
        let (net, diag) = build_staircase_delta(&spec, 1e-3, DeltaMargins::default_for(&spec), 2).unwrap();
        assert_eq!(diag.alpha_star, 1.7);
        assert!(net.eval_scalar(&[0.4]).unwrap() == 1.7);
    }

    #[test]
    fn delta_margins_respect_slack() {
        let spec = StaircaseSpec::new(1.0, 0.3, |x| x).unwrap();
        let m = DeltaMargins::default_for(&spec);
        assert!(m.eps1 > 0.0 && m.eps1 <= 0.3 - 0.25 + 1e-15);
        assert!(DeltaMargins { eps1: 0.075, ..m }.validate(&spec).is_err());
    }
}
