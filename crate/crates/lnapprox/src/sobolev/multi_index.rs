//! Multi-indices and polynomials indexed by them.

use std::collections::BTreeMap;

use crate::kernels::{binomial, factorial};

/// Exponent tuple β ∈ ℕ₀^d.
pub type MultiIndex = Vec<usize>;

/// |P_{n,d}| = binom(n + d − 1, n).
pub fn multi_index_count(n: usize, d: usize) -> usize {
    assert!(d >= 1, "dimension must be positive");
    binomial(n + d - 1, n) as usize
}

/// All β ∈ ℕ₀^d with |β| = n, in reverse lexicographic order
/// (the first index has the largest first component).
pub fn multi_indices(n: usize, d: usize) -> Vec<MultiIndex> {
    fn rec(n: usize, d: usize, prefix: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
        if d == 1 {
            prefix.push(n);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in (0..=n).rev() {
            prefix.push(first);
            rec(n - first, d - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::with_capacity(multi_index_count(n, d));
    rec(n, d, &mut Vec::with_capacity(d), &mut out);
    out
}

/// All β ∈ ℕ₀^d with |β| ≤ n, grouped by increasing degree.
pub fn multi_indices_up_to(n: usize, d: usize) -> Vec<MultiIndex> {
    (0..=n).flat_map(|m| multi_indices(m, d)).collect()
}

/// n!/(β₁!⋯β_d!).
pub fn multinomial(beta: &[usize]) -> f64 {
    let n: usize = beta.iter().sum();
    beta.iter().fold(factorial(n), |acc, &b| acc / factorial(b)).round()
}

/// β! = β₁!⋯β_d!.
pub fn multi_factorial(beta: &[usize]) -> f64 {
    beta.iter().map(|&b| factorial(b)).product()
}

/// x^β.
pub fn monomial(beta: &[usize], x: &[f64]) -> f64 {
    beta.iter().zip(x).map(|(&b, &v)| v.powi(b as i32)).product()
}

/// Sparse polynomial Σ c_β x^β in d variables.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MultiIndexPoly {
    dim: usize,
    coeffs: BTreeMap<MultiIndex, f64>,
}

impl MultiIndexPoly {
    pub fn new(dim: usize) -> Self {
        MultiIndexPoly { dim, coeffs: BTreeMap::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Adds `c` to the coefficient of x^β.
    pub fn add_term(&mut self, beta: MultiIndex, c: f64) {
        assert_eq!(beta.len(), self.dim, "multi-index length must equal the dimension");
        *self.coeffs.entry(beta).or_insert(0.0) += c;
    }

    pub fn coeff(&self, beta: &[usize]) -> f64 {
        self.coeffs.get(beta).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &f64)> {
        self.coeffs.iter()
    }

    /// Largest |β| with a nonzero coefficient, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.iter().filter(|(_, &c)| c != 0.0).map(|(b, _)| b.iter().sum()).max()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|(b, &c)| c * monomial(b, x)).sum()
    }

    /// Σ |c_β|.
    pub fn abs_coeff_sum(&self) -> f64 {
        self.coeffs.values().map(|c| c.abs()).sum()
    }

    /// Taylor polynomial Σ_{|γ| ≤ n} D^γ f(c)/γ! (x − c)^γ expanded in powers of x.
    ///
    /// `derivative(γ)` returns D^γ f at the expansion point `center`.
    pub fn taylor(center: &[f64], n: usize, derivative: impl Fn(&[usize]) -> f64) -> Self {
        let d = center.len();
        let mut poly = MultiIndexPoly::new(d);
        for gamma in multi_indices_up_to(n, d) {
            let scale = derivative(&gamma) / multi_factorial(&gamma);
            if scale == 0.0 {
                continue;
            }
            // (x − c)^γ = Π_i Σ_{b ≤ γ_i} binom(γ_i, b) x_i^b (−c_i)^{γ_i − b}
            let mut partial: Vec<(MultiIndex, f64)> = vec![(Vec::with_capacity(d), scale)];
            for i in 0..d {
                let g = gamma[i];
                partial = partial
                    .into_iter()
                    .flat_map(|(beta, c)| {
                        (0..=g).map(move |b| {
                            let mut next = beta.clone();
                            next.push(b);
                            (next, c * binomial(g, b) * (-center[i]).powi((g - b) as i32))
                        })
                    })
                    .collect();
            }
            for (beta, c) in partial {
                poly.add_term(beta, c);
            }
        }
        poly
    }
}
