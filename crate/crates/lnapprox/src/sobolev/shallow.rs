//! Dense shallow network x ↦ W₂ φ(W₁x + b₁) + b₂ used while assembling
//! larger constructions.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::kernels::ActivationKind;
use crate::netir::{AffineMap, InterlayerOp, NetIR};

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Shallow {
    pub w1: DMatrix<f64>,
    pub b1: DVector<f64>,
    pub w2: DMatrix<f64>,
    pub b2: DVector<f64>,
}

impl Shallow {
    pub fn width(&self) -> usize {
        self.w1.nrows()
    }

    pub fn out_dim(&self) -> usize {
        self.w2.nrows()
    }

    /// Replaces the input x by A·x + a.
    pub fn precompose(&self, map: &AffineMap) -> Shallow {
        Shallow { w1: &self.w1 * &map.w, b1: &self.w1 * &map.b + &self.b1, w2: self.w2.clone(), b2: self.b2.clone() }
    }

    /// Replaces the output y by T·y + c.
    pub fn postcompose(&self, t: &DMatrix<f64>, c: &DVector<f64>) -> Shallow {
        Shallow { w1: self.w1.clone(), b1: self.b1.clone(), w2: t * &self.w2, b2: t * &self.b2 + c }
    }

    /// Stacks the hidden units of every part and sums their (already mapped) outputs.
    pub fn sum(parts: &[Shallow]) -> Shallow {
        let in_dim = parts[0].w1.ncols();
        let out_dim = parts[0].out_dim();
        let width: usize = parts.iter().map(Shallow::width).sum();
        let mut w1 = DMatrix::zeros(width, in_dim);
        let mut b1 = DVector::zeros(width);
        let mut w2 = DMatrix::zeros(out_dim, width);
        let mut b2 = DVector::zeros(out_dim);
        let mut row = 0;
        for part in parts {
            let w = part.width();
            w1.view_mut((row, 0), (w, in_dim)).copy_from(&part.w1);
            b1.rows_mut(row, w).copy_from(&part.b1);
            w2.view_mut((0, row), (out_dim, w)).copy_from(&part.w2);
            b2 += &part.b2;
            row += w;
        }
        Shallow { w1, b1, w2, b2 }
    }

    pub fn to_net(&self, act: ActivationKind) -> Result<NetIR> {
        NetIR::shallow(AffineMap::new(self.w1.clone(), self.b1.clone())?, InterlayerOp::Activation(act), AffineMap::new(self.w2.clone(), self.b2.clone())?)
    }
}

/// The φ_{p,q} activation, reported as `Sat` for p = q = 2.
pub(crate) fn phi_activation(p: u32, q: u32) -> ActivationKind {
    if p == 2 && q == 2 {
        ActivationKind::Sat
    } else {
        ActivationKind::PhiPq { p, q }
    }
}
