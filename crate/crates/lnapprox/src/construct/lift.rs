//! Conversions between LN-nets and LS-nets through an orthogonal lift.

use nalgebra::DMatrix;

use crate::error::{invalid, Result};
use crate::kernels::{GroupedNormSpec, NormKind};
use crate::netir::{AffineMap, InterlayerOp, NetIR};

/// Householder reflection sending e_d to 𝟙/√d.
///
/// The first d−1 columns then span the zero-sum subspace and the last column
/// is 𝟙/√d.
pub fn centered_orthogonal_lift(d: usize) -> Result<DMatrix<f64>> {
    if d < 2 {
        return invalid("lift dimension must be at least 2");
    }
    let inv = 1.0 / (d as f64).sqrt();
    let mut v = vec![-inv; d];
    v[d - 1] += 1.0;
    let vv: f64 = v.iter().map(|x| x * x).sum();
    Ok(DMatrix::from_fn(d, d, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        delta - 2.0 * v[i] * v[j] / vv
    }))
}

fn block_diag(block: &DMatrix<f64>, count: usize) -> DMatrix<f64> {
    let (r, c) = block.shape();
    let mut out = DMatrix::zeros(r * count, c * count);
    for g in 0..count {
        out.view_mut((g * r, g * c), (r, c)).copy_from(block);
    }
    out
}

/// Replaces every grouped `from` norm with `to`, inserting `enter` after the
/// preceding affine map and `leave` before the following one.
fn rewrite(net: &NetIR, from: NormKind, to: NormKind, new_ns: usize, enter: &DMatrix<f64>, leave: &DMatrix<f64>) -> Result<NetIR> {
    let mut affines: Vec<AffineMap> = net.affines().to_vec();
    let mut ops = Vec::with_capacity(net.depth());
    for (l, op) in net.ops().iter().enumerate() {
        let spec = match op {
            InterlayerOp::Grouped(spec) if spec.kind.same_class(&from) => spec,
            _ => return invalid(format!("layer {l} is not a grouped {from:?} norm")),
        };
        let groups = spec.groups();
        let t_in = block_diag(enter, groups);
        let t_out = block_diag(leave, groups);
        affines[l] = AffineMap { w: &t_in * &affines[l].w, b: &t_in * &affines[l].b };
        affines[l + 1] = AffineMap { w: &affines[l + 1].w * &t_out, b: affines[l + 1].b.clone() };
        ops.push(InterlayerOp::Grouped(GroupedNormSpec::new(to, new_ns, new_ns * groups)?));
    }
    NetIR::new(affines, ops)
}

/// LN-net with group size d ≥ 2 to an LS-net with group size d − 1.
pub fn ln_net_to_ls_net(net: &NetIR) -> Result<NetIR> {
    let d = uniform_group(net, NormKind::Ln)?;
    if d < 2 {
        return invalid("LN group size must be at least 2");
    }
    let q = centered_orthogonal_lift(d)?;
    let head = q.columns(0, d - 1).into_owned();
    let enter = head.transpose();
    let leave = head * (d as f64 / (d - 1) as f64).sqrt();
    rewrite(net, NormKind::Ln, NormKind::Ls, d - 1, &enter, &leave)
}

/// LS-net with group size m ≥ 1 to an LN-net with group size m + 1.
pub fn ls_net_to_ln_net(net: &NetIR) -> Result<NetIR> {
    let m = uniform_group(net, NormKind::Ls)?;
    let d = m + 1;
    let q = centered_orthogonal_lift(d)?;
    let head = q.columns(0, m).into_owned();
    let leave = head.transpose() * (m as f64 / d as f64).sqrt();
    rewrite(net, NormKind::Ls, NormKind::Ln, d, &head, &leave)
}

fn uniform_group(net: &NetIR, kind: NormKind) -> Result<usize> {
    let first = net
        .ops()
        .first()
        .and_then(|op| op.grouped())
        .ok_or_else(|| crate::error::Error::InvalidArgument(format!("expected a net with grouped {kind:?} layers")))?;
    if !first.kind.same_class(&kind) {
        return invalid(format!("expected grouped {kind:?}, found {:?}", first.kind));
    }
    Ok(first.ns)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lift_properties() {
        for d in 2..=16 {
            let q = centered_orthogonal_lift(d).unwrap();
            let gram = &q * q.transpose();
            assert!((gram - DMatrix::identity(d, d)).amax() < 1e-12);
            for j in 0..d - 1 {
                assert!(q.column(j).sum().abs() < 1e-12);
            }
            let inv = 1.0 / (d as f64).sqrt();
            assert!(q.column(d - 1).iter().all(|v| (v - inv).abs() < 1e-14));
        }
        assert!(centered_orthogonal_lift(1).is_err());
    }

    #[test]
    fn textbook_two_by_two_also_qualifies() {
        let s = 0.5f64.sqrt();
        let q = DMatrix::from_row_slice(2, 2, &[s, s, -s, s]);
        assert!((&q * q.transpose() - DMatrix::identity(2, 2)).amax() < 1e-15);
        assert!(q.column(0).sum().abs() < 1e-15);
    }
}
