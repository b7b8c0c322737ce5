//! Layered network representation, evaluator and JSON form.
//!
//! A [`NetIR`] stores `L + 1` affine maps interleaved with `L` interlayer
//! operators. Depth counts interlayer operators; width is the largest hidden
//! dimension.

mod extended;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernels::{activate, apply_grouped, ActivationKind, GroupedNormSpec, NormKind};

/// x ↦ Wx + b.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub w: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl AffineMap {
    pub fn new(w: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if w.nrows() != b.len() {
            return Err(Error::Dimension { expected: w.nrows(), got: b.len() });
        }
        Ok(Self { w, b })
    }

    pub fn from_rows(rows: &[Vec<f64>], b: &[f64], in_dim: usize) -> Result<Self> {
        if rows.iter().any(|r| r.len() != in_dim) {
            return invalid("ragged weight rows");
        }
        let w = DMatrix::from_fn(rows.len(), in_dim, |i, j| rows[i][j]);
        Self::new(w, DVector::from_column_slice(b))
    }

    pub fn identity(n: usize) -> Self {
        Self { w: DMatrix::identity(n, n), b: DVector::zeros(n) }
    }

    pub fn in_dim(&self) -> usize {
        self.w.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.w.nrows()
    }

    /// Row-by-row dot products in index order.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.w.nrows()];
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (w, xj) in self.w.row(i).iter().zip(x) {
                acc += w * xj;
            }
            *o = acc + self.b[i];
        }
        out
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &AffineMap) -> Result<AffineMap> {
        if self.in_dim() != inner.out_dim() {
            return Err(Error::Dimension { expected: self.in_dim(), got: inner.out_dim() });
        }
        Ok(AffineMap { w: &self.w * &inner.w, b: &self.w * &inner.b + &self.b })
    }
}

/// Operator placed between two affine maps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InterlayerOp {
    Activation(ActivationKind),
    Grouped(GroupedNormSpec),
}

impl InterlayerOp {
    fn same_class(&self, other: &InterlayerOp) -> bool {
        match (self, other) {
            (InterlayerOp::Activation(a), InterlayerOp::Activation(b)) => a == b,
            (InterlayerOp::Grouped(a), InterlayerOp::Grouped(b)) => a.kind.same_class(&b.kind) && a.ns == b.ns,
            _ => false,
        }
    }

    pub fn apply(&self, h: &[f64]) -> Result<Vec<f64>> {
        match self {
            InterlayerOp::Activation(kind) => Ok(h.iter().map(|&v| activate(*kind, v)).collect()),
            InterlayerOp::Grouped(spec) => {
                if spec.width != h.len() {
                    return Err(Error::Dimension { expected: spec.width, got: h.len() });
                }
                apply_grouped(spec, h)
            }
        }
    }

    pub fn grouped(&self) -> Option<&GroupedNormSpec> {
        match self {
            InterlayerOp::Grouped(spec) => Some(spec),
            InterlayerOp::Activation(_) => None,
        }
    }

    pub fn activation(&self) -> Option<ActivationKind> {
        match self {
            InterlayerOp::Activation(kind) => Some(*kind),
            InterlayerOp::Grouped(_) => None,
        }
    }
}

/// Alternating affine maps and interlayer operators.
#[derive(Debug, Clone, PartialEq)]
pub struct NetIR {
    affines: Vec<AffineMap>,
    ops: Vec<InterlayerOp>,
}

impl NetIR {
    /// Validates chaining, grouped widths and operator class before building.
    pub fn new(affines: Vec<AffineMap>, ops: Vec<InterlayerOp>) -> Result<Self> {
        if affines.len() != ops.len() + 1 {
            return invalid(format!("{} affine maps for {} interlayer ops", affines.len(), ops.len()));
        }
        for (l, op) in ops.iter().enumerate() {
            let width = affines[l].out_dim();
            if affines[l + 1].in_dim() != width {
                return Err(Error::Dimension { expected: width, got: affines[l + 1].in_dim() });
            }
            match op {
                InterlayerOp::Activation(kind) => kind.validate()?,
                InterlayerOp::Grouped(spec) => {
                    spec.kind.validate()?;
                    if spec.width != width || spec.ns == 0 || !width.is_multiple_of(spec.ns) {
                        return invalid(format!("grouped width {} (ns {}) does not match layer width {width}", spec.width, spec.ns));
                    }
                }
            }
            if !op.same_class(&ops[0]) {
                return invalid("interlayer operators must share one class");
            }
        }
        Ok(Self { affines, ops })
    }

    /// Net with no hidden layer.
    pub fn affine_only(map: AffineMap) -> Self {
        Self { affines: vec![map], ops: vec![] }
    }

    /// Shallow net `w2 · op(w1 x + b1) + b2`.
    pub fn shallow(first: AffineMap, op: InterlayerOp, second: AffineMap) -> Result<Self> {
        Self::new(vec![first, second], vec![op])
    }

    pub fn affines(&self) -> &[AffineMap] {
        &self.affines
    }

    pub fn ops(&self) -> &[InterlayerOp] {
        &self.ops
    }

    pub fn input_dim(&self) -> usize {
        self.affines[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.affines.last().map(AffineMap::out_dim).unwrap_or(0)
    }

    pub fn depth(&self) -> usize {
        self.ops.len()
    }

    pub fn width(&self) -> usize {
        self.affines[..self.ops.len()].iter().map(AffineMap::out_dim).max().unwrap_or(0)
    }

    /// Hidden dimension of every layer in order.
    pub fn hidden_widths(&self) -> Vec<usize> {
        self.affines[..self.ops.len()].iter().map(AffineMap::out_dim).collect()
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::Dimension { expected: self.input_dim(), got: x.len() });
        }
        let mut h = self.affines[0].apply(x);
        for (op, next) in self.ops.iter().zip(&self.affines[1..]) {
            h = op.apply(&h)?;
            h = next.apply(&h);
        }
        Ok(h)
    }

    /// First output coordinate; convenient for scalar nets.
    pub fn eval_scalar(&self, x: &[f64]) -> Result<f64> {
        Ok(self.eval(x)?[0])
    }

    /// `outer ∘ inner` with the boundary affine maps fused.
    pub fn fuse(inner: &NetIR, outer: &NetIR) -> Result<NetIR> {
        let boundary = outer.affines[0].compose(inner.affines.last().expect("nonempty"))?;
        let mut affines = inner.affines[..inner.affines.len() - 1].to_vec();
        affines.push(boundary);
        affines.extend_from_slice(&outer.affines[1..]);
        let mut ops = inner.ops.clone();
        ops.extend_from_slice(&outer.ops);
        NetIR::new(affines, ops)
    }

    /// Pre-composes an affine map on the input side.
    pub fn precompose(&self, map: &AffineMap) -> Result<NetIR> {
        let mut affines = self.affines.clone();
        affines[0] = affines[0].compose(map)?;
        NetIR::new(affines, self.ops.clone())
    }

    /// Post-composes an affine map on the output side.
    pub fn postcompose(&self, map: &AffineMap) -> Result<NetIR> {
        let mut affines = self.affines.clone();
        let last = affines.len() - 1;
        affines[last] = map.compose(&affines[last])?;
        NetIR::new(affines, self.ops.clone())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(&NetDoc::from(self)).map_err(|e| Error::Serde(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: NetDoc = serde_json::from_str(text).map_err(|e| Error::Serde(e.to_string()))?;
        doc.into_net()
    }
}

/// Token-wise affine map X ↦ XW + 𝟙bᵀ with W of shape d × m.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceAffine {
    pub w: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl SequenceAffine {
    pub fn new(w: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if w.ncols() != b.len() {
            return Err(Error::Dimension { expected: w.ncols(), got: b.len() });
        }
        Ok(Self { w, b })
    }

    /// Equivalent per-token map x ↦ Wᵀx + b.
    pub fn to_affine(&self) -> AffineMap {
        AffineMap { w: self.w.transpose(), b: self.b.clone() }
    }

    pub fn from_affine(map: &AffineMap) -> Self {
        Self { w: map.w.transpose(), b: map.b.clone() }
    }
}

/// Applies `post ∘ mid ∘ pre` to every row of `x`.
pub fn eval_sequence(pre: &SequenceAffine, mid: &InterlayerOp, post: &SequenceAffine, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let net = NetIR::shallow(pre.to_affine(), *mid, post.to_affine())?;
    if x.ncols() != net.input_dim() {
        return Err(Error::Dimension { expected: net.input_dim(), got: x.ncols() });
    }
    let mut out = DMatrix::zeros(x.nrows(), net.output_dim());
    for i in 0..x.nrows() {
        let row: Vec<f64> = x.row(i).iter().copied().collect();
        let y = net.eval(&row)?;
        for (j, v) in y.into_iter().enumerate() {
            out[(i, j)] = v;
        }
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct NetDoc {
    version: u32,
    input_dim: usize,
    layers: Vec<LayerDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum LayerDoc {
    Affine { w: Vec<Vec<f64>>, b: Vec<f64> },
    Op(OpDoc),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum OpDoc {
    Norm {
        kind: String,
        ns: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        p: Option<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        q: Option<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta: Option<f64>,
    },
    Activation {
        activation: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        p: Option<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        q: Option<u32>,
    },
}

const SCHEMA_VERSION: u32 = 1;

impl From<&NetIR> for NetDoc {
    fn from(net: &NetIR) -> Self {
        let mut layers = Vec::new();
        for (l, map) in net.affines.iter().enumerate() {
            let w = (0..map.out_dim()).map(|i| map.w.row(i).iter().copied().collect()).collect();
            layers.push(LayerDoc::Affine { w, b: map.b.iter().copied().collect() });
            if let Some(op) = net.ops.get(l) {
                layers.push(LayerDoc::Op(op_doc(op)));
            }
        }
        NetDoc { version: SCHEMA_VERSION, input_dim: net.input_dim(), layers }
    }
}

fn op_doc(op: &InterlayerOp) -> OpDoc {
    match op {
        InterlayerOp::Grouped(spec) => {
            let (kind, p, q, delta) = match spec.kind {
                NormKind::Ln => ("ln", None, None, None),
                NormKind::Ls => ("ls", None, None, None),
                NormKind::LnDelta(d) => ("ln_delta", None, None, Some(d)),
                NormKind::Pq { p, q } => ("pq", Some(p), Some(q), None),
            };
            OpDoc::Norm { kind: kind.into(), ns: spec.ns, p, q, delta }
        }
        InterlayerOp::Activation(kind) => {
            let (name, p, q) = match *kind {
                ActivationKind::Sign => ("sign", None, None),
                ActivationKind::Sat => ("sat", None, None),
                ActivationKind::PhiPq { p, q } => ("phi_pq", Some(p), Some(q)),
                ActivationKind::Tanh => ("tanh", None, None),
                ActivationKind::Relu => ("relu", None, None),
            };
            OpDoc::Activation { activation: name.into(), p, q }
        }
    }
}

fn need<T>(v: Option<T>, what: &str) -> Result<T> {
    v.ok_or_else(|| Error::Serde(format!("missing field {what}")))
}

impl NetDoc {
    fn into_net(self) -> Result<NetIR> {
        if self.version != SCHEMA_VERSION {
            return Err(Error::Serde(format!("unsupported version {}", self.version)));
        }
        let mut affines = Vec::new();
        let mut ops = Vec::new();
        let mut dim = self.input_dim;
        let mut expect_affine = true;
        for layer in self.layers {
            match (layer, expect_affine) {
                (LayerDoc::Affine { w, b }, true) => {
                    let map = AffineMap::from_rows(&w, &b, dim)?;
                    dim = map.out_dim();
                    affines.push(map);
                }
                (LayerDoc::Op(doc), false) => ops.push(parse_op(doc, dim)?),
                _ => return Err(Error::Serde("layers must alternate affine/op starting and ending with affine".into())),
            }
            expect_affine = !expect_affine;
        }
        if expect_affine || affines.is_empty() {
            return Err(Error::Serde("layer list must end with an affine map".into()));
        }
        NetIR::new(affines, ops)
    }
}

fn parse_op(doc: OpDoc, width: usize) -> Result<InterlayerOp> {
    match doc {
        OpDoc::Norm { kind, ns, p, q, delta } => {
            let kind = match kind.as_str() {
                "ln" => NormKind::Ln,
                "ls" => NormKind::Ls,
                "ln_delta" => NormKind::LnDelta(need(delta, "delta")?),
                "pq" => NormKind::Pq { p: need(p, "p")?, q: need(q, "q")? },
                other => return Err(Error::Serde(format!("unknown norm kind {other}"))),
            };
            Ok(InterlayerOp::Grouped(GroupedNormSpec::new(kind, ns, width)?))
        }
        OpDoc::Activation { activation, p, q } => {
            let kind = match activation.as_str() {
                "sign" => ActivationKind::Sign,
                "sat" => ActivationKind::Sat,
                "phi_pq" => ActivationKind::PhiPq { p: need(p, "p")?, q: need(q, "q")? },
                "tanh" => ActivationKind::Tanh,
                "relu" => ActivationKind::Relu,
                other => return Err(Error::Serde(format!("unknown activation {other}"))),
            };
            kind.validate()?;
            Ok(InterlayerOp::Activation(kind))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sign_net() -> NetIR {
        let a = AffineMap::from_rows(&[vec![3.0]], &[-1.0], 1).unwrap();
        let b = AffineMap::from_rows(&[vec![2.0]], &[5.0], 1).unwrap();
        NetIR::shallow(a, InterlayerOp::Activation(ActivationKind::Sign), b).unwrap()
    }

    #[test]
    fn affine_only_net() {
        let map = AffineMap::from_rows(&[vec![1.0, 2.0], vec![0.0, -1.0]], &[0.5, 1.0], 2).unwrap();
        let net = NetIR::affine_only(map);
        assert_eq!(net.eval(&[1.0, 1.0]).unwrap(), vec![3.5, 0.0]);
        assert_eq!(net.depth(), 0);
        assert_eq!(net.width(), 0);
    }

    #[test]
    fn ln_composition() {
        let spec = GroupedNormSpec::new(NormKind::Ln, 2, 2).unwrap();
        let net = NetIR::shallow(AffineMap::identity(2), InterlayerOp::Grouped(spec), AffineMap::identity(2)).unwrap();
        assert_eq!(net.eval(&[2.0, 0.0]).unwrap(), vec![1.0, -1.0]);
        assert_eq!((net.depth(), net.width()), (1, 2));
    }

    #[test]
    fn sign_net_value() {
        assert_eq!(sign_net().eval(&[1.0]).unwrap(), vec![7.0]);
        assert!(sign_net().eval(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn rejects_mixed_classes() {
        let ops = vec![InterlayerOp::Activation(ActivationKind::Sat), InterlayerOp::Activation(ActivationKind::Relu)];
        let affines = vec![AffineMap::identity(1), AffineMap::identity(1), AffineMap::identity(1)];
        assert!(NetIR::new(affines, ops).is_err());
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let spec = GroupedNormSpec::new(NormKind::LnDelta(1e-3), 2, 2).unwrap();
        let w = AffineMap::from_rows(&[vec![0.1 + 0.2], vec![-1.0 / 3.0]], &[std::f64::consts::PI, 5e-324], 1).unwrap();
        let net = NetIR::shallow(w, InterlayerOp::Grouped(spec), AffineMap::from_rows(&[vec![1e300, -2.5e-17]], &[0.0], 2).unwrap()).unwrap();
        let text = net.to_json().unwrap();
        assert_eq!(NetIR::from_json(&text).unwrap(), net);
        assert!(text.contains("\"kind\":\"ln_delta\""));
        let back = NetIR::from_json(&sign_net().to_json().unwrap()).unwrap();
        assert_eq!(back, sign_net());
    }

    #[test]
    fn json_rejects_bad_documents() {
        assert!(NetIR::from_json(r#"{"version":2,"input_dim":1,"layers":[]}"#).is_err());
        assert!(NetIR::from_json(r#"{"version":1,"input_dim":1,"layers":[{"op":{"activation":"sat"}}]}"#).is_err());
        let ok = r#"{"version":1,"input_dim":1,"layers":[{"affine":{"w":[[1.0],[2.0]],"b":[0.0,1.0]}},{"op":{"kind":"ln","ns":2}},{"affine":{"w":[[1.0,0.0]],"b":[0.0]}}]}"#;
        assert_eq!(NetIR::from_json(ok).unwrap().width(), 2);
    }

    #[test]
    fn fuse_matches_composition() {
        let inner = sign_net();
        let outer =
            NetIR::shallow(AffineMap::from_rows(&[vec![0.5]], &[-3.0], 1).unwrap(), InterlayerOp::Activation(ActivationKind::Sign), AffineMap::identity(1))
                .unwrap();
        let fused = NetIR::fuse(&inner, &outer).unwrap();
        for &x in &[-1.0, 0.2, 1.0] {
            let want = outer.eval(&inner.eval(&[x]).unwrap()).unwrap();
            assert_eq!(fused.eval(&[x]).unwrap(), want);
        }
        assert_eq!(fused.depth(), 2);
    }

    #[test]
    fn sequence_rows_are_independent() {
        let pre = SequenceAffine::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -1.0, 2.0]), DVector::from_vec(vec![0.1, 0.2])).unwrap();
        let post = SequenceAffine::new(DMatrix::from_row_slice(2, 1, &[1.0, -1.0]), DVector::from_vec(vec![0.0])).unwrap();
        let mid = InterlayerOp::Activation(ActivationKind::Sat);
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 2.0, -0.5, 0.0]);
        let y = eval_sequence(&pre, &mid, &post, &x).unwrap();
        assert_eq!(y[(0, 0)], y[(1, 0)]);
        let token = NetIR::shallow(pre.to_affine(), mid, post.to_affine()).unwrap();
        assert_eq!(y[(2, 0)], token.eval(&[-0.5, 0.0]).unwrap()[0]);
    }
}
