//! Acceptance suite: one PASS/FAIL line per criterion, each with its own
//! wall-clock budget. Runs without the libtest harness so the lines are
//! always printed, and runs the criteria sequentially so that timings are not
//! distorted by other tests sharing the CPU. Any failed assertion panics and
//! fails the test binary.

#![allow(clippy::type_complexity)]

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lnapprox::construct::{
    build_lipschitz_staircase, compile_deep_phi_net_to_pln, compile_ffn_to_pln_sequence, compile_phi_to_ln, compile_shallow_phi_net_to_pln, compile_sign_to_ln,
    ln_net_to_ls_net, ls_net_to_ln_net, merge_ln_sum_to_pln, split_pln_to_ln_sum, StaircaseSpec,
};
use lnapprox::kernels::{derivative_bound_a, in_s_pq, phi_derivative_at_zero, ActivationKind, GroupedNormSpec, NormKind, PhiDerivatives};
use lnapprox::netir::{eval_sequence, AffineMap, InterlayerOp, NetIR, SequenceAffine};
use lnapprox::sobolev::{
    build_monomial_fd_net, build_sobolev_approximator, choose_alpha, compile_sobolev_to_pln, next_in_s, partition_rho, pou_report, vandermonde_coeffs,
    SinTwoPi, SobolevConfig,
};
use lnapprox::verify::theorem31_search;

const EXACT_TOL: f64 = 1e-10;
const SAMPLES: usize = 10_000;
const SEEDS: u64 = 50;

struct Outcome {
    pass: bool,
    /// False only when a part of the criterion outside its known
    /// counterexample fails.
    attainable_pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Outcome { pass, attainable_pass: pass, detail }
    }
}

/// Criteria whose literal statement is false; each still asserts every
/// attainable part (see `Outcome::attainable_pass`).
const KNOWN_UNATTAINABLE: &[u32] = &[4];

fn sat(z: f64) -> f64 {
    z / (1.0 + z * z).sqrt()
}

fn sign(z: f64) -> f64 {
    if z > 0.0 {
        1.0
    } else if z < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn uniform(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Plain forward pass of a Sat network given as dense (W, b) layers.
fn sat_forward(layers: &[(Vec<Vec<f64>>, Vec<f64>)], x: &[f64]) -> Vec<f64> {
    let mut h = x.to_vec();
    for (l, (w, b)) in layers.iter().enumerate() {
        h = w.iter().zip(b).map(|(row, bi)| dot(row, &h) + bi).collect();
        if l + 1 < layers.len() {
            h = h.into_iter().map(sat).collect();
        }
    }
    h
}

fn to_affine(w: &[Vec<f64>], b: &[f64]) -> AffineMap {
    AffineMap::from_rows(w, b, w[0].len()).unwrap()
}

fn random_layers(rng: &mut ChaCha8Rng, dims: &[usize]) -> Vec<(Vec<Vec<f64>>, Vec<f64>)> {
    dims.windows(2).map(|p| ((0..p[1]).map(|_| uniform(rng, p[0], -2.0, 2.0)).collect(), uniform(rng, p[1], -2.0, 2.0))).collect()
}

/// Runs `case(seed, rng)` for every seed and returns the worst difference.
fn over_seeds(case: &dyn Fn(&mut ChaCha8Rng) -> f64) -> f64 {
    (0..SEEDS).map(|seed| case(&mut ChaCha8Rng::seed_from_u64(seed))).fold(0.0, f64::max)
}

fn criterion1() -> Outcome {
    let mut worst = Vec::new();
    for ns in [2, 3, 4] {
        let w = over_seeds(&|rng| {
            let d = rng.gen_range(1..=4);
            let m = rng.gen_range(1..=2);
            let (w1, b1, w2, b2) = (uniform(rng, d, -2.0, 2.0), rng.gen_range(-2.0..2.0), uniform(rng, m, -2.0, 2.0), uniform(rng, m, -2.0, 2.0));
            let net = compile_sign_to_ln(&w1, b1, &w2, &b2, ns).unwrap();
            let mut worst: f64 = 0.0;
            for _ in 0..SAMPLES {
                let x = uniform(rng, d, -3.0, 3.0);
                let z = dot(&w1, &x) + b1;
                if z.abs() < 1e-6 {
                    continue;
                }
                let want: Vec<f64> = w2.iter().zip(&b2).map(|(a, c)| a * sign(z) + c).collect();
                worst = worst.max(max_diff(&net.eval(&x).unwrap(), &want));
            }
            worst
        });
        worst.push((format!("sign ns={ns}"), w));
    }
    for ns in [3, 5] {
        let w = over_seeds(&|rng| {
            let d = rng.gen_range(1..=4);
            let m = rng.gen_range(1..=2);
            let (w1, b1, w2, b2) = (uniform(rng, d, -2.0, 2.0), rng.gen_range(-2.0..2.0), uniform(rng, m, -2.0, 2.0), uniform(rng, m, -2.0, 2.0));
            let net = compile_phi_to_ln(&w1, b1, &w2, &b2, ns).unwrap();
            let mut worst: f64 = 0.0;
            for _ in 0..SAMPLES {
                let x = uniform(rng, d, -3.0, 3.0);
                let z = dot(&w1, &x) + b1;
                let want: Vec<f64> = w2.iter().zip(&b2).map(|(a, c)| a * sat(z) + c).collect();
                worst = worst.max(max_diff(&net.eval(&x).unwrap(), &want));
            }
            worst
        });
        worst.push((format!("phi ns={ns}"), w));
    }
    let w = over_seeds(&|rng| {
        let d = rng.gen_range(1..=4);
        let pieces: Vec<NetIR> = (0..rng.gen_range(1..=4))
            .map(|_| {
                compile_phi_to_ln(&uniform(rng, d, -2.0, 2.0), rng.gen_range(-2.0..2.0), &[rng.gen_range(-2.0..2.0)], &[rng.gen_range(-2.0..2.0)], 3).unwrap()
            })
            .collect();
        let merged = merge_ln_sum_to_pln(&pieces).unwrap();
        let split = split_pln_to_ln_sum(&merged).unwrap();
        let mut worst: f64 = 0.0;
        for _ in 0..SAMPLES {
            let x = uniform(rng, d, -3.0, 3.0);
            let direct: f64 = pieces.iter().map(|n| n.eval_scalar(&x).unwrap()).sum();
            let resplit: f64 = split.iter().map(|n| n.eval_scalar(&x).unwrap()).sum();
            let m = merged.eval_scalar(&x).unwrap();
            worst = worst.max((m - direct).abs()).max((resplit - direct).abs());
        }
        worst
    });
    worst.push(("merge/split".into(), w));
    for ns in [3, 4] {
        let w = over_seeds(&|rng| {
            let d = rng.gen_range(1..=4);
            let groups = rng.gen_range(1..=3);
            let width = ns * groups;
            let depth = rng.gen_range(1..=2);
            let mut dims = vec![d];
            dims.extend(std::iter::repeat_n(width, depth));
            dims.push(1);
            let layers = random_layers(rng, &dims);
            let affines: Vec<AffineMap> = layers.iter().map(|(w, b)| to_affine(w, b)).collect();
            let ops = vec![InterlayerOp::Grouped(GroupedNormSpec::new(NormKind::Ln, ns, width).unwrap()); depth];
            let ln = NetIR::new(affines, ops).unwrap();
            let ls = ln_net_to_ls_net(&ln).unwrap();
            let back = ls_net_to_ln_net(&ls).unwrap();
            let mut worst: f64 = 0.0;
            for _ in 0..SAMPLES {
                let x = uniform(rng, d, -3.0, 3.0);
                let a = ln.eval(&x).unwrap();
                worst = worst.max(max_diff(&a, &ls.eval(&x).unwrap())).max(max_diff(&a, &back.eval(&x).unwrap()));
            }
            worst
        });
        worst.push((format!("ln<->ls ns={ns}"), w));
    }
    for deep in [false, true] {
        let w = over_seeds(&|rng| {
            let d = rng.gen_range(1..=4);
            let depth = if deep { rng.gen_range(1..=3) } else { 1 };
            let mut dims = vec![d];
            dims.extend((0..depth).map(|_| rng.gen_range(1..=8)));
            dims.push(rng.gen_range(1..=2));
            let layers = random_layers(rng, &dims);
            let affines: Vec<AffineMap> = layers.iter().map(|(w, b)| to_affine(w, b)).collect();
            let src = NetIR::new(affines, vec![InterlayerOp::Activation(ActivationKind::Sat); depth]).unwrap();
            let ns = rng.gen_range(3..=5);
            let pln = if deep { compile_deep_phi_net_to_pln(&src, ns) } else { compile_shallow_phi_net_to_pln(&src, ns) }.unwrap();
            let mut worst: f64 = 0.0;
            for _ in 0..SAMPLES {
                let x = uniform(rng, d, -3.0, 3.0);
                worst = worst.max(max_diff(&pln.eval(&x).unwrap(), &sat_forward(&layers, &x)));
            }
            worst
        });
        worst.push((if deep { "deep->pln" } else { "shallow->pln" }.into(), w));
    }
    let w = over_seeds(&|rng| {
        let d = rng.gen_range(1..=4);
        let hidden = rng.gen_range(1..=6);
        let out = rng.gen_range(1..=3);
        let seq = rng.gen_range(1..=6);
        let pre =
            SequenceAffine::new(DMatrix::from_vec(d, hidden, uniform(rng, d * hidden, -2.0, 2.0)), DVector::from_vec(uniform(rng, hidden, -2.0, 2.0))).unwrap();
        let post = SequenceAffine::new(DMatrix::from_vec(hidden, out, uniform(rng, hidden * out, -2.0, 2.0)), DVector::from_vec(uniform(rng, out, -2.0, 2.0)))
            .unwrap();
        let (a, spec, b) = compile_ffn_to_pln_sequence(&pre, &post, 3).unwrap();
        let mut worst: f64 = 0.0;
        for _ in 0..SAMPLES / seq {
            let x = DMatrix::from_vec(seq, d, uniform(rng, seq * d, -3.0, 3.0));
            let got = eval_sequence(&a, &InterlayerOp::Grouped(spec), &b, &x).unwrap();
            for i in 0..seq {
                for o in 0..out {
                    let want: f64 =
                        (0..hidden).map(|j| post.w[(j, o)] * sat((0..d).map(|k| x[(i, k)] * pre.w[(k, j)]).sum::<f64>() + pre.b[j])).sum::<f64>() + post.b[o];
                    worst = worst.max((got[(i, o)] - want).abs());
                }
            }
        }
        worst
    });
    worst.push(("ffn".into(), w));
    let pass = worst.iter().all(|(_, w)| *w < EXACT_TOL);
    let detail = worst.iter().map(|(k, w)| format!("{k}: {w:.1e}")).collect::<Vec<_>>().join(", ");
    Outcome::new(pass, detail)
}

fn criterion2() -> Outcome {
    let targets: [(&str, f64, fn(f64) -> f64); 3] = [("x", 1.0, |x| x), ("cos(pi x)", PI, |x| (PI * x).cos()), ("|x-1/2|", 1.0, |x| (x - 0.5).abs())];
    let grid = 100_001;
    let mut pass = true;
    let mut worst_ratio: f64 = 0.0;
    for (name, lip, f) in targets {
        for eps in [0.2, 0.1, 0.05] {
            let spec = StaircaseSpec::new(lip, eps, f).unwrap();
            let expected_pieces = (lip / (2.0 * eps)).floor() as usize + 1;
            let (sign_net, pln) = build_lipschitz_staircase(&spec, 3).unwrap();
            let (mut e_sign, mut e_pln): (f64, f64) = (0.0, 0.0);
            for i in 0..grid {
                let x = i as f64 / (grid - 1) as f64;
                e_sign = e_sign.max((sign_net.eval_scalar(&[x]).unwrap() - f(x)).abs());
                e_pln = e_pln.max((pln.eval_scalar(&[x]).unwrap() - f(x)).abs());
            }
            let ok = spec.pieces == expected_pieces && e_sign < eps && e_pln < eps;
            if !ok {
                eprintln!("  staircase {name} eps={eps}: pieces {} (want {expected_pieces}), sign {e_sign:.3e}, pln {e_pln:.3e}", spec.pieces);
            }
            pass &= ok;
            worst_ratio = worst_ratio.max(e_sign / eps).max(e_pln / eps);
        }
    }
    Outcome::new(pass, format!("9 cases, worst error/eps = {worst_ratio:.3}"))
}

fn criterion3() -> Outcome {
    let report = theorem31_search(10_000, 200, 801, 0).unwrap();
    Outcome::new(report.best >= 0.95, format!("best sup error {:.4} (smooth {:.4}, step {:.4}) >= 0.95", report.best, report.smooth_best, report.sign_best))
}

fn criterion4() -> Outcome {
    let mut at_zero_ok = true;
    let mut min_at_zero = f64::INFINITY;
    let mut positive_orders_ok = true;
    let mut positive_ratio: f64 = 0.0;
    let mut order0_ratio: f64 = 0.0;
    let mut order0_matches_counterexample = true;
    for (p, q) in [(2u32, 2u32), (6, 2)] {
        let table = PhiDerivatives::new(p, q, 15).unwrap();
        let r = (p / q) as usize;
        for m in 0..=15 {
            // Series φ(x) = Σ_j binom(−1/q, j) x^{r + pj}.
            let member = m >= r && (m - r).is_multiple_of(p as usize);
            assert_eq!(member, in_s_pq(p, q, m));
            if !member {
                continue;
            }
            let j = (m - r) / p as usize;
            let series = (1..=m).map(|i| i as f64).product::<f64>() * (0..j).map(|i| (-1.0 / q as f64 - i as f64) / (i as f64 + 1.0)).product::<f64>();
            let closed = phi_derivative_at_zero(p, q, m).unwrap();
            let recurrence = table.eval(m, 0.0);
            let agree = (closed - series).abs() <= 1e-12 * series.abs() && (recurrence - series).abs() <= 1e-9 * series.abs();
            at_zero_ok &= agree && closed.abs() >= 1.0;
            min_at_zero = min_at_zero.min(closed.abs());
        }
        for m in 0..=4 {
            let a = (16.0 * (p * p) as f64 / (PI * q as f64)).powi(m as i32) * (1..=m).map(|i| i as f64).product::<f64>();
            at_zero_ok &= (derivative_bound_a(p, q, m).unwrap() - a).abs() <= 1e-12 * a;
            // |φ^{(m)}(x)| ≤ A·(1+|x|)^{−m}·(1+|x|^p)^{−1/q}
            let worst = (0..10_000)
                .map(|i| {
                    let x: f64 = -50.0 + 100.0 * i as f64 / 9_999.0;
                    let envelope = a * (1.0 + x.abs()).powi(-(m as i32)) * (1.0 + x.abs().powi(p as i32)).powf(-1.0 / q as f64);
                    table.eval(m, x).abs() / envelope
                })
                .fold(0.0, f64::max);
            if m == 0 {
                // φ(x) → ±1 while the envelope decays like |x|^{−p/q}, so the
                // ratio peaks at 50^{p/q} on the grid edge.
                let expected = table.eval(0, 50.0).abs() * (1.0 + 50f64.powi(p as i32)).powf(1.0 / q as f64);
                order0_matches_counterexample &= (worst - expected).abs() <= 1e-9 * expected && worst > 1.0;
                order0_ratio = order0_ratio.max(worst);
            } else {
                positive_orders_ok &= worst <= 1.0;
                positive_ratio = positive_ratio.max(worst);
            }
        }
    }
    Outcome {
        pass: at_zero_ok && positive_orders_ok && order0_ratio <= 1.0,
        attainable_pass: at_zero_ok && positive_orders_ok && order0_matches_counterexample,
        detail: format!(
            "min |phi^(m)(0)| over S_pq = {min_at_zero:.3}; max |phi^(m)|/envelope = {positive_ratio:.3} for 1 <= m <= 4; \
             m = 0 violates the envelope (ratio {order0_ratio:.3e} = |phi(x)|(1+|x|^p)^(1/q) at |x| = 50, unattainable since phi -> 1)"
        ),
    }
}

/// W^{1,∞}([−1, 1]) distance between y^n and its finite-difference Sat net,
/// with the net derivative taken in closed form.
fn fd_error(n: usize, h: f64) -> f64 {
    let net = build_monomial_fd_net(n, h, 2, 2, 1.0).unwrap();
    let (a, b) = (&net.affines()[0], &net.affines()[1]);
    let mut worst: f64 = 0.0;
    for i in 0..=4000 {
        let y = -1.0 + i as f64 / 2000.0;
        let (mut g, mut dg) = (b.b[0], 0.0);
        for j in 0..a.out_dim() {
            let z = a.w[(j, 0)] * y + a.b[j];
            g += b.w[(0, j)] * sat(z);
            dg += b.w[(0, j)] * a.w[(j, 0)] * (1.0 + z * z).powf(-1.5);
        }
        let f = y.powi(n as i32);
        let df = n as f64 * y.powi(n as i32 - 1);
        worst = worst.max((g - f).abs()).max((dg - df).abs());
    }
    worst
}

fn criterion5() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [1, 3, 5] {
        let h0 = 0.1;
        let e: Vec<f64> = [h0, h0 / 2.0, h0 / 4.0].iter().map(|&h| fd_error(n, h)).collect();
        let ratios = [e[0] / e[1], e[1] / e[2]];
        pass &= ratios.iter().all(|r| (3.0..=5.0).contains(r));
        parts.push(format!("n={n}: {:.3}, {:.3}", ratios[0], ratios[1]));
    }
    Outcome::new(pass, format!("error ratios per halving {}", parts.join("; ")))
}

fn criterion6() -> Outcome {
    let mut pass = true;
    let mut telescoping: f64 = 0.0;
    for n in 1..=32 {
        let alpha = choose_alpha(1, n, 0, 1e-3, 2, 2).unwrap().alpha;
        for i in 0..=3000 {
            let y = -1.0 + 3.0 * i as f64 / 3000.0;
            let total: f64 = (1..=n).map(|j| partition_rho(j, n, alpha, 2, 2, y).unwrap()).sum();
            telescoping = telescoping.max((total - 1.0).abs());
        }
    }
    pass &= telescoping <= 1e-14;
    let mut parts = vec![format!("max |sum rho - 1| = {telescoping:.1e}")];
    for (d, n, grid) in [(1, 8, 1001), (2, 6, 101)] {
        let eps = 1e-3;
        let report = pou_report(d, n, 0, eps, 2, 2, grid, 1e-3).unwrap();
        let near = report.cubes.iter().map(|c| c.near_sum).fold(0.0, f64::max);
        let far = report.cubes.iter().map(|c| c.distant).fold(0.0, f64::max);
        let ok = report.alpha_conditions.iter().all(|&c| c) && near <= d as f64 * eps && far <= eps;
        pass &= ok;
        parts.push(format!("(d={d},N={n}) near {near:.2e} <= {:.0e}, distant {far:.2e} <= {eps:.0e}", d as f64 * eps));
    }
    Outcome::new(pass, parts.join("; "))
}

fn binom(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn criterion7() -> Outcome {
    let (d, s, p, q, delta, ns) = (1usize, 2usize, 2u32, 2u32, 0.5, 8usize);
    let c1 = 1.5f64.powi(2) / 2.0 * (2.0 * PI).powi(2);
    let target = SinTwoPi { d };
    let mut pass = true;
    let mut errors = Vec::new();
    let mut parts = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in [4usize, 8, 16] {
        let built = build_sobolev_approximator(&target, SobolevConfig { d, s, k: 0, n, delta, p, q }).unwrap();
        let net = &built.net;
        let err = (0..=20_000)
            .map(|i| {
                let x = i as f64 / 20_000.0;
                (net.eval_scalar(&[x]).unwrap() - (2.0 * PI * x).sin()).abs()
            })
            .fold(0.0, f64::max);
        let bound = (1.0 + delta) * c1 / (n as f64).powi(s as i32);
        pass &= err <= bound;
        errors.push(err);

        let pln = compile_sobolev_to_pln(net, ns).unwrap();
        let (mut diff_ext, mut diff_f64): (f64, f64) = (0.0, 0.0);
        for _ in 0..1000 {
            let x = [rng.gen_range(0.0..1.0)];
            diff_ext = diff_ext.max((net.eval_extended(&x).unwrap()[0] - pln.eval_extended(&x).unwrap()[0]).abs());
            diff_f64 = diff_f64.max((net.eval_scalar(&x).unwrap() - pln.eval_scalar(&x).unwrap()).abs());
        }
        pass &= diff_ext <= 1e-11;

        // Hidden widths: a degree-n block costs (p+1)/2·(m+1) neurons with m the
        // smallest element of S_{p,q} that is ≥ n; |P_{n,d}| = binom(n+d−1, n).
        let r = (p / q) as usize;
        let block = |deg: usize| (p as usize + 1) * ((deg..).find(|&m| m >= r && (m - r).is_multiple_of(p as usize)).unwrap() + 1) / 2;
        let w1_bound = block(s - 1) * binom(s - 1 + d, s - 1) + d * (n - 1);
        let w2_bound = block(d + 1) * binom(2 * d + 1, d + 1) * n.pow(d as u32);
        let pw1_bound = ns * (3 * s.div_ceil(2) * binom(s - 1 + d, s - 1) + d * (n - 1));
        let pw2_bound = 3 * ns * (d + 2).div_ceil(2) * binom(2 * d + 1, d + 1) * n.pow(d as u32);
        let (w, pw) = (net.hidden_widths(), pln.hidden_widths());
        pass &= w[0] <= w1_bound && w[1] <= w2_bound && pw[0] <= pw1_bound && pw[1] <= pw2_bound && pw == vec![ns * w[0], ns * w[1]];
        parts.push(format!(
            "N={n}: err {err:.4} <= {bound:.3}, pln diff {diff_ext:.1e} in double-double (plain f64 eval {diff_f64:.1e}), widths {w:?} <= [{w1_bound}, {w2_bound}], pln {pw:?} <= [{pw1_bound}, {pw2_bound}]"
        ));
    }
    pass &= errors.windows(2).all(|e| e[1] < e[0]);
    Outcome::new(pass, parts.join("; "))
}

fn criterion8() -> Outcome {
    let mut pass = true;
    let mut worst: f64 = 0.0;
    for (p, q) in [(2u32, 2u32), (4, 4)] {
        for t in 0..=5 {
            let m = next_in_s(t, p, q).unwrap();
            let v = vandermonde_coeffs(t, m, p as usize).unwrap();
            // y^t = [Σ_k c_k (y + β_k)^m − Σ_{ℓ<t} binom(m, ℓ) A_ℓ y^ℓ] / binom(m, t)
            for i in 0..100 {
                let y = -1.0 + 2.0 * i as f64 / 99.0;
                let shifted: f64 = v.c.iter().zip(&v.nodes).map(|(c, b)| c * (y + b).powi(m as i32)).sum();
                let lower: f64 = v.a.iter().enumerate().map(|(l, a)| binom(m, l) as f64 * a * y.powi(l as i32)).sum();
                let recon = (shifted - lower) / binom(m, t) as f64;
                worst = worst.max((recon - y.powi(t as i32)).abs());
            }
        }
    }
    pass &= worst < 1e-9;
    Outcome::new(pass, format!("max reconstruction residual {worst:.1e} < 1e-9"))
}

fn run_cli(dir: &std::path::Path, args: &[&str]) -> std::process::Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_lnapprox")).args(args).arg("--out").arg(dir).output().unwrap()
}

fn criterion9() -> Outcome {
    let runs: [(&str, &[&str]); 4] = [
        ("compile", &["compile", "--kind", "deep", "--seed", "11", "--samples", "2000"]),
        ("approx", &["approx", "--eps", "0.1,0.05", "--seed", "11"]),
        ("negsearch", &["negsearch", "--restarts", "50", "--refine-iters", "20", "--threshold", "0.0", "--seed", "11"]),
        ("sobolev", &["sobolev", "--N", "4", "--grid", "257", "--seed", "11"]),
    ];
    let root = tempfile::tempdir().unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, args) in runs {
        let (a, b) = (root.path().join(format!("{name}-a")), root.path().join(format!("{name}-b")));
        let ok_runs = run_cli(&a, args).status.success() && run_cli(&b, args).status.success();
        let csv = format!("{name}.csv");
        let same = ok_runs && std::fs::read(a.join(&csv)).unwrap() == std::fs::read(b.join(&csv)).unwrap();
        pass &= same;
        parts.push(format!("{name} {}", if same { "identical" } else { "DIFFERENT" }));
    }
    Outcome::new(pass, parts.join(", "))
}

fn main() {
    let criteria: [(u32, &str, Option<Duration>, fn() -> Outcome); 9] = [
        (1, "exact representation suite", Some(Duration::from_secs(60)), criterion1),
        (2, "Lipschitz staircase", Some(Duration::from_secs(10)), criterion2),
        (3, "negative result search", Some(Duration::from_secs(300)), criterion3),
        (4, "activation derivatives", Some(Duration::from_secs(10)), criterion4),
        (5, "finite-difference rate", Some(Duration::from_secs(10)), criterion5),
        (6, "partition of unity", Some(Duration::from_secs(30)), criterion6),
        (7, "Sobolev approximation", Some(Duration::from_secs(300)), criterion7),
        (8, "Vandermonde representation", Some(Duration::from_secs(5)), criterion8),
        (9, "CLI reproducibility", None, criterion9),
    ];
    let mut failed = Vec::new();
    for (id, name, budget, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let pass = outcome.pass && budget.is_none_or(|b| elapsed <= b);
        let limit = budget.map_or("no limit".to_string(), |b| format!("{}s", b.as_secs()));
        println!("criterion {id} {}: {name} [{:.2}s / {limit}] {}", if pass { "PASS" } else { "FAIL" }, elapsed.as_secs_f64(), outcome.detail);
        if !pass {
            failed.push(id);
        }
        assert!(outcome.attainable_pass && budget.is_none_or(|b| elapsed <= b), "criterion {id} failed beyond its known counterexample");
    }
    assert!(failed.iter().all(|id| KNOWN_UNATTAINABLE.contains(id)), "failed criteria: {failed:?}");
}
