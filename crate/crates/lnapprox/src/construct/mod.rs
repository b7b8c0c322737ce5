//! Exact compilers from sign/Sat networks to LN, LS and PLN networks.
//!
//! Every compiler returns a [`NetIR`] that equals its source pointwise; the
//! only discrepancy is floating-point rounding.

mod lift;
mod staircase;

pub use lift::{centered_orthogonal_lift, ln_net_to_ls_net, ls_net_to_ln_net};
pub use staircase::{build_lipschitz_staircase, build_staircase_delta, build_staircase_delta_with_lambda, DeltaDiagnostics, DeltaMargins, StaircaseSpec};

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result};
use crate::kernels::{ActivationKind, GroupedNormSpec, NormKind};
use crate::netir::{AffineMap, InterlayerOp, NetIR, SequenceAffine};

/// Realizes x ↦ w2·sign(w1ᵀx + b1) + b2 with one LN group of size `ns`.
pub fn compile_sign_to_ln(w1: &[f64], b1: f64, w2: &[f64], b2: &[f64], ns: usize) -> Result<NetIR> {
    compile_sign_like(w1, b1, w2, b2, ns, NormKind::Ln, 1.0, (2.0 / ns as f64).sqrt())
}

#[allow(clippy::too_many_arguments)]
fn compile_sign_like(w1: &[f64], b1: f64, w2: &[f64], b2: &[f64], ns: usize, kind: NormKind, input_scale: f64, output_scale: f64) -> Result<NetIR> {
    if ns < 2 {
        return invalid("sign compilation needs ns ≥ 2");
    }
    if w2.len() != b2.len() {
        return invalid("w2 and b2 lengths differ");
    }
    let d = w1.len();
    let mut v1 = DMatrix::zeros(ns, d);
    for (j, &w) in w1.iter().enumerate() {
        v1[(0, j)] = input_scale * w;
        v1[(1, j)] = -input_scale * w;
    }
    let mut c1 = DVector::zeros(ns);
    c1[0] = input_scale * b1;
    c1[1] = -input_scale * b1;
    let mut v2 = DMatrix::zeros(w2.len(), ns);
    for (i, &w) in w2.iter().enumerate() {
        v2[(i, 0)] = output_scale * w;
    }
    let spec = GroupedNormSpec::new(kind, ns, ns)?;
    NetIR::shallow(AffineMap::new(v1, c1)?, InterlayerOp::Grouped(spec), AffineMap::new(v2, DVector::from_column_slice(b2))?)
}

/// LN_δ group realizing x ↦ w2·φ_δ((w1ᵀx + b1)/λ) + b2 with φ_δ(t) = t/(|t| + δ).
pub(crate) fn compile_sign_to_ln_delta(w1: &[f64], b1: f64, w2: &[f64], b2: &[f64], ns: usize, delta: f64, lambda: f64) -> Result<NetIR> {
    let kappa = (ns as f64 / 2.0).sqrt();
    compile_sign_like(w1, b1, w2, b2, ns, NormKind::LnDelta(delta), kappa / lambda, 1.0 / kappa)
}

/// Realizes x ↦ w2·Sat(w1ᵀx + b1) + b2 with one LN group of size `ns` ≥ 3.
///
/// For ns a power of two with ns ≥ 8 the group input is z·u + w with
/// u = ±m on 2^j entries and w = ±m on 2^j further entries, which gives
/// LN(z·u + w) = (z·u + w)/√(z² + 1); every weight is then the source weight
/// times a power of two. Other sizes build an LS-net of group size ns − 1
/// and lift it.
pub fn compile_phi_to_ln(w1: &[f64], b1: f64, w2: &[f64], b2: &[f64], ns: usize) -> Result<NetIR> {
    if ns < 3 {
        return invalid("Sat compilation needs ns ≥ 3");
    }
    if w2.len() != b2.len() {
        return invalid("w2 and b2 lengths differ");
    }
    if let Some((support, m)) = dyadic_sat_layout(ns) {
        let d = w1.len();
        let sign = |t: usize| if t.is_multiple_of(2) { 1.0 } else { -1.0 };
        let mut v1 = DMatrix::zeros(ns, d);
        let mut c1 = DVector::zeros(ns);
        let mut v2 = DMatrix::zeros(w2.len(), ns);
        for t in 0..support {
            for (j, &w) in w1.iter().enumerate() {
                v1[(t, j)] = sign(t) * m * w;
            }
            c1[t] = sign(t) * m * b1;
            c1[support + t] = sign(t) * m;
            for (i, &w) in w2.iter().enumerate() {
                v2[(i, t)] = sign(t) * w / (support as f64 * m);
            }
        }
        let spec = GroupedNormSpec::new(NormKind::Ln, ns, ns)?;
        return NetIR::shallow(AffineMap::new(v1, c1)?, InterlayerOp::Grouped(spec), AffineMap::new(v2, DVector::from_column_slice(b2))?);
    }
    let m = ns - 1;
    let d = w1.len();
    let mut v1 = DMatrix::zeros(m, d);
    for (j, &w) in w1.iter().enumerate() {
        v1[(0, j)] = w;
    }
    let mut c1 = DVector::zeros(m);
    c1[0] = b1;
    c1[1] = 1.0;
    let mut v2 = DMatrix::zeros(w2.len(), m);
    let scale = 1.0 / (m as f64).sqrt();
    for (i, &w) in w2.iter().enumerate() {
        v2[(i, 0)] = scale * w;
    }
    let spec = GroupedNormSpec::new(NormKind::Ls, m, m)?;
    let ls = NetIR::shallow(AffineMap::new(v1, c1)?, InterlayerOp::Grouped(spec), AffineMap::new(v2, DVector::from_column_slice(b2))?)?;
    ls_net_to_ln_net(&ls)
}

/// Support size 2^j and magnitude m = 2^{(k−j)/2} of the dyadic Sat encoding
/// for ns = 2^k, when one exists.
fn dyadic_sat_layout(ns: usize) -> Option<(usize, f64)> {
    if !ns.is_power_of_two() || ns < 8 {
        return None;
    }
    let k = ns.trailing_zeros();
    let j = if k % 2 == 1 { 1 } else { 2 };
    Some((1 << j, (1u64 << ((k - j) / 2)) as f64))
}

fn shallow_grouped(net: &NetIR) -> Result<GroupedNormSpec> {
    if net.depth() != 1 {
        return invalid(format!("expected a shallow net, got depth {}", net.depth()));
    }
    net.ops()[0].grouped().copied().ok_or_else(|| crate::error::Error::InvalidArgument("expected a grouped norm layer".into()))
}

/// Sums shallow grouped-norm nets into one shallow net by stacking hidden units.
pub fn merge_ln_sum_to_pln(nets: &[NetIR]) -> Result<NetIR> {
    let first = nets.first().ok_or_else(|| crate::error::Error::InvalidArgument("nothing to merge".into()))?;
    let spec0 = shallow_grouped(first)?;
    let (d, m) = (first.input_dim(), first.output_dim());
    let mut total = 0;
    for net in nets {
        let spec = shallow_grouped(net)?;
        if spec.ns != spec0.ns || spec.kind != spec0.kind {
            return invalid("merged nets must share norm kind and group size");
        }
        if net.input_dim() != d || net.output_dim() != m {
            return invalid("merged nets must share input and output dimensions");
        }
        total += spec.width;
    }
    let mut v1 = DMatrix::zeros(total, d);
    let mut c1 = DVector::zeros(total);
    let mut v2 = DMatrix::zeros(m, total);
    let mut c2 = DVector::zeros(m);
    let mut row = 0;
    for net in nets {
        let (a, b) = (&net.affines()[0], &net.affines()[1]);
        let w = a.out_dim();
        v1.view_mut((row, 0), (w, d)).copy_from(&a.w);
        c1.rows_mut(row, w).copy_from(&a.b);
        v2.view_mut((0, row), (m, w)).copy_from(&b.w);
        c2 += &b.b;
        row += w;
    }
    let spec = GroupedNormSpec::new(spec0.kind, spec0.ns, total)?;
    NetIR::shallow(AffineMap::new(v1, c1)?, InterlayerOp::Grouped(spec), AffineMap::new(v2, c2)?)
}

/// Splits a shallow grouped net into one single-group net per group.
///
/// The output bias goes to the first piece so that summation is exact.
pub fn split_pln_to_ln_sum(net: &NetIR) -> Result<Vec<NetIR>> {
    let spec = shallow_grouped(net)?;
    let (a, b) = (&net.affines()[0], &net.affines()[1]);
    let (d, m, ns) = (net.input_dim(), net.output_dim(), spec.ns);
    (0..spec.groups())
        .map(|g| {
            let first = AffineMap::new(a.w.view((g * ns, 0), (ns, d)).into_owned(), a.b.rows(g * ns, ns).into_owned())?;
            let bias = if g == 0 { b.b.clone() } else { DVector::zeros(m) };
            let second = AffineMap::new(b.w.view((0, g * ns), (m, ns)).into_owned(), bias)?;
            NetIR::shallow(first, InterlayerOp::Grouped(GroupedNormSpec::new(spec.kind, ns, ns)?), second)
        })
        .collect()
}

fn require_sat(net: &NetIR) -> Result<()> {
    for op in net.ops() {
        match op.activation() {
            Some(kind) if kind.is_sat() => {}
            _ => return invalid("every interlayer operator must be the Sat activation"),
        }
    }
    Ok(())
}

/// Shallow Sat-net of width N to a shallow PLN-net of width ns·N.
pub fn compile_shallow_phi_net_to_pln(net: &NetIR, ns: usize) -> Result<NetIR> {
    require_sat(net)?;
    if net.depth() != 1 {
        return invalid("expected a shallow net");
    }
    let (a, b) = (&net.affines()[0], &net.affines()[1]);
    let pieces = (0..a.out_dim())
        .map(|i| {
            let w1: Vec<f64> = a.w.row(i).iter().copied().collect();
            let w2: Vec<f64> = b.w.column(i).iter().copied().collect();
            let b2: Vec<f64> = if i == 0 { b.b.iter().copied().collect() } else { vec![0.0; b.out_dim()] };
            compile_phi_to_ln(&w1, a.b[i], &w2, &b2, ns)
        })
        .collect::<Result<Vec<_>>>()?;
    merge_ln_sum_to_pln(&pieces)
}

/// Deep Sat-net to a PLN-net of the same depth, fusing the per-layer
/// encoders and decoders into the surrounding affine maps.
pub fn compile_deep_phi_net_to_pln(net: &NetIR, ns: usize) -> Result<NetIR> {
    require_sat(net)?;
    if net.depth() == 0 {
        return Ok(net.clone());
    }
    let mut coders = Vec::with_capacity(net.depth());
    for width in net.hidden_widths() {
        let identity = NetIR::shallow(AffineMap::identity(width), InterlayerOp::Activation(ActivationKind::Sat), AffineMap::identity(width))?;
        coders.push(compile_shallow_phi_net_to_pln(&identity, ns)?);
    }
    let src = net.affines();
    let mut affines = Vec::with_capacity(src.len());
    for (l, map) in src.iter().enumerate() {
        let mut fused = map.clone();
        if l > 0 {
            fused = fused.compose(&coders[l - 1].affines()[1])?;
        }
        if l < coders.len() {
            fused = coders[l].affines()[0].compose(&fused)?;
        }
        affines.push(fused);
    }
    let ops = coders.iter().map(|c| c.ops()[0]).collect();
    NetIR::new(affines, ops)
}

/// Token-wise Sat feed-forward block to φ₂ ∘ PLN(ns) ∘ φ₁.
pub fn compile_ffn_to_pln_sequence(pre: &SequenceAffine, post: &SequenceAffine, ns: usize) -> Result<(SequenceAffine, GroupedNormSpec, SequenceAffine)> {
    let token = NetIR::shallow(pre.to_affine(), InterlayerOp::Activation(ActivationKind::Sat), post.to_affine())?;
    let pln = compile_shallow_phi_net_to_pln(&token, ns)?;
    let spec = *pln.ops()[0].grouped().expect("grouped");
    Ok((SequenceAffine::from_affine(&pln.affines()[0]), spec, SequenceAffine::from_affine(&pln.affines()[1])))
}

/// Depth and width of the PLN class containing a depth-L width-N ReLU net.
pub fn theorem42_size_bound(l: usize, n: usize, ns: usize) -> (usize, usize) {
    (2 * l, 3 * ns * n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn sign_scalar_example() {
        let net = compile_sign_to_ln(&[3.0], -1.0, &[2.0], &[5.0], 2).unwrap();
        assert!(close(net.eval_scalar(&[1.0]).unwrap(), 7.0));
        assert_eq!(net.eval_scalar(&[1.0 / 3.0]).unwrap(), 5.0);
        let flat = compile_sign_to_ln(&[3.0], -1.0, &[0.0], &[4.0], 3).unwrap();
        assert_eq!(flat.eval_scalar(&[0.7]).unwrap(), 4.0);
        assert!(compile_sign_to_ln(&[1.0], 0.0, &[1.0], &[0.0], 1).is_err());
    }

    #[test]
    fn phi_examples() {
        let net = compile_phi_to_ln(&[1.0], 0.0, &[1.0], &[0.0], 3).unwrap();
        assert!(close(net.eval_scalar(&[1.0]).unwrap(), 0.5f64.sqrt()));
        assert!(net.eval_scalar(&[0.0]).unwrap().abs() < 1e-15);
        assert_eq!((net.depth(), net.width()), (1, 3));
        assert!(compile_phi_to_ln(&[1.0], 0.0, &[1.0], &[0.0], 2).is_err());
    }

    #[test]
    fn dyadic_encoding_is_weight_exact() {
        assert_eq!(dyadic_sat_layout(4), None);
        assert_eq!(dyadic_sat_layout(8), Some((2, 2.0)));
        assert_eq!(dyadic_sat_layout(16), Some((4, 2.0)));
        assert_eq!(dyadic_sat_layout(32), Some((2, 4.0)));
        for ns in [8, 16, 32] {
            let net = compile_phi_to_ln(&[0.3, -1.7], 0.1, &[2.5], &[0.5], ns).unwrap();
            let (support, m) = dyadic_sat_layout(ns).unwrap();
            let a = &net.affines()[0];
            assert_eq!(a.w[(1, 1)], 1.7 * m);
            assert_eq!(a.b[support + 1], -m);
            assert_eq!(net.affines()[1].w[(0, 0)], 2.5 / (support as f64 * m));
            for x in [[0.2f64, 0.4], [-3.0, 1.0], [1e-6, 5.9e-2]] {
                let z = 0.3 * x[0] - 1.7 * x[1] + 0.1;
                let want = 2.5 * z / (z * z + 1.0).sqrt() + 0.5;
                let got = net.eval_scalar(&x).unwrap();
                assert!((got - want).abs() <= 4.0 * f64::EPSILON * want.abs().max(1.0), "{ns}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn merge_with_negation_cancels() {
        let a = compile_sign_to_ln(&[1.0, -2.0], 0.3, &[1.5], &[0.2], 3).unwrap();
        let b = compile_sign_to_ln(&[1.0, -2.0], 0.3, &[-1.5], &[-0.2], 3).unwrap();
        let merged = merge_ln_sum_to_pln(&[a, b]).unwrap();
        assert_eq!(merged.width(), 6);
        for x in [[0.1, 0.9], [2.0, -1.0]] {
            assert!(merged.eval_scalar(&x).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn split_counts() {
        let a = compile_sign_to_ln(&[1.0], 0.3, &[1.5], &[0.2], 3).unwrap();
        assert_eq!(split_pln_to_ln_sum(&a).unwrap().len(), 1);
        let merged = merge_ln_sum_to_pln(&[a.clone(), a.clone(), a]).unwrap();
        let parts = split_pln_to_ln_sum(&merged).unwrap();
        assert_eq!(parts.len(), 3);
        assert!(parts.iter().all(|p| p.width() == 3));
    }

    #[test]
    fn size_bound_formula() {
        assert_eq!(theorem42_size_bound(1, 1, 3), (2, 9));
        assert_eq!(theorem42_size_bound(2, 4, 3), (4, 36));
    }

    #[test]
    fn deep_rejects_other_activations() {
        let net = NetIR::shallow(AffineMap::identity(1), InterlayerOp::Activation(ActivationKind::Relu), AffineMap::identity(1)).unwrap();
        assert!(compile_deep_phi_net_to_pln(&net, 3).is_err());
    }
}
