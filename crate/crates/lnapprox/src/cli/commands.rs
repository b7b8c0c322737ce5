//! Subcommand implementations.

use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::Resolver;
use super::{unix_time, CliError, Outcome, RunContext, GUARDRAIL_D, GUARDRAIL_N, GUARDRAIL_S};
use crate::construct::{
    build_lipschitz_staircase, build_staircase_delta, compile_deep_phi_net_to_pln, compile_ffn_to_pln_sequence, compile_phi_to_ln,
    compile_shallow_phi_net_to_pln, compile_sign_to_ln, ln_net_to_ls_net, DeltaMargins, StaircaseSpec,
};
use crate::kernels::ActivationKind;
use crate::netir::{eval_sequence, AffineMap, InterlayerOp, NetIR, SequenceAffine};
use crate::sobolev::{build_sobolev_approximator, compile_sobolev_to_pln, pln_width_bounds, pou_report, target_by_name, SobolevConfig};
use crate::verify::{exact_match, sup_error, theorem31_search, ApproxReport, BoxDomain};

fn config_err<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Config(msg.into()))
}

fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-scale..scale))
}

fn uniform_vector(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-scale..scale))
}

fn random_sat_net(rng: &mut ChaCha8Rng, d: usize, width: usize, depth: usize, out_dim: usize) -> crate::Result<NetIR> {
    let mut affines = Vec::with_capacity(depth + 1);
    let mut in_dim = d;
    for _ in 0..depth {
        affines.push(AffineMap::new(uniform_matrix(rng, width, in_dim, 2.0), uniform_vector(rng, width, 2.0))?);
        in_dim = width;
    }
    affines.push(AffineMap::new(uniform_matrix(rng, out_dim, in_dim, 2.0), uniform_vector(rng, out_dim, 2.0))?);
    NetIR::new(affines, vec![InterlayerOp::Activation(ActivationKind::Sat); depth])
}

// ---------------------------------------------------------------- compile

#[derive(Debug, Args)]
pub(crate) struct CompileArgs {
    /// sign, phi, ls, shallow, deep or ffn.
    #[arg(long)]
    kind: Option<String>,
    /// Normalization group size.
    #[arg(long)]
    ns: Option<usize>,
    /// Input dimension of the source net.
    #[arg(long)]
    d: Option<usize>,
    /// Hidden width of the source net.
    #[arg(long)]
    width: Option<usize>,
    /// Hidden layers of the source net (deep only).
    #[arg(long)]
    depth: Option<usize>,
    /// Output dimension of the source net.
    #[arg(long)]
    out_dim: Option<usize>,
    /// Tokens per input sequence (ffn only).
    #[arg(long)]
    seq_len: Option<usize>,
    /// Number of random test inputs.
    #[arg(long)]
    samples: Option<usize>,
    /// Pass threshold on the largest output difference.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Serialize)]
struct CompileRow {
    seed: u64,
    kind: String,
    ns: usize,
    d: usize,
    width: usize,
    depth: usize,
    compiled_depth: usize,
    compiled_width: usize,
    samples: usize,
    checked: usize,
    excluded: usize,
    worst_diff: f64,
    tol: f64,
    pass: bool,
}

/// Breakpoint ball excluded when checking sign targets.
const SIGN_EXCLUSION: f64 = 1e-6;

pub(crate) fn compile(ctx: &RunContext, a: CompileArgs, mut cfg: Resolver) -> Result<Outcome, CliError> {
    let kind: String = cfg.require(a.kind, "kind")?;
    let ns = cfg.get(a.ns, "ns", 3usize)?;
    let d = cfg.get(a.d, "d", 2usize)?;
    let width = cfg.get(a.width, "width", 4usize)?;
    let depth = cfg.get(a.depth, "depth", 2usize)?;
    let out_dim = cfg.get(a.out_dim, "out_dim", 1usize)?;
    let seq_len = cfg.get(a.seq_len, "seq_len", 4usize)?;
    let samples = cfg.get(a.samples, "samples", 10_000usize)?;
    let tol = cfg.get(a.tol, "tol", 1e-10)?;
    let params = cfg.finish()?;
    if d == 0 || width == 0 || out_dim == 0 || seq_len == 0 || samples == 0 {
        return config_err("d, width, out_dim, seq_len and samples must be positive");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let (source, compiled, report, used_depth, used_width) = match kind.as_str() {
        "sign" | "phi" | "ls" => {
            let w1: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let b1 = rng.gen_range(-2.0..2.0);
            let w2: Vec<f64> = (0..out_dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let b2: Vec<f64> = (0..out_dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let act = if kind == "sign" { ActivationKind::Sign } else { ActivationKind::Sat };
            let source = NetIR::shallow(
                AffineMap::from_rows(std::slice::from_ref(&w1), &[b1], d)?,
                InterlayerOp::Activation(act),
                AffineMap::new(DMatrix::from_column_slice(out_dim, 1, &w2), DVector::from_column_slice(&b2))?,
            )?;
            let compiled = match kind.as_str() {
                "sign" => compile_sign_to_ln(&w1, b1, &w2, &b2, ns)?,
                "phi" => compile_phi_to_ln(&w1, b1, &w2, &b2, ns)?,
                _ => ln_net_to_ls_net(&compile_phi_to_ln(&w1, b1, &w2, &b2, ns)?)?,
            };
            let exclude = |x: &[f64]| kind == "sign" && (w1.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b1).abs() < SIGN_EXCLUSION;
            let mut sampler = || (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect::<Vec<f64>>();
            let report = exact_match(&|x| source.eval(x), &|x| compiled.eval(x), &mut sampler, samples, tol, &exclude)?;
            (source, compiled, report, 1, 1)
        }
        "shallow" | "deep" => {
            let layers = if kind == "shallow" { 1 } else { depth };
            if layers == 0 {
                return config_err("depth must be positive");
            }
            let source = random_sat_net(&mut rng, d, width, layers, out_dim)?;
            let compiled = if kind == "shallow" { compile_shallow_phi_net_to_pln(&source, ns)? } else { compile_deep_phi_net_to_pln(&source, ns)? };
            let mut sampler = || (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect::<Vec<f64>>();
            let report = exact_match(&|x| source.eval(x), &|x| compiled.eval(x), &mut sampler, samples, tol, &|_| false)?;
            (source, compiled, report, layers, width)
        }
        "ffn" => {
            let pre = SequenceAffine::new(uniform_matrix(&mut rng, d, width, 2.0), uniform_vector(&mut rng, width, 2.0))?;
            let post = SequenceAffine::new(uniform_matrix(&mut rng, width, out_dim, 2.0), uniform_vector(&mut rng, out_dim, 2.0))?;
            let (pre2, spec, post2) = compile_ffn_to_pln_sequence(&pre, &post, ns)?;
            let sat = InterlayerOp::Activation(ActivationKind::Sat);
            let grouped = InterlayerOp::Grouped(spec);
            let as_matrix = |x: &[f64]| DMatrix::from_row_slice(seq_len, d, x);
            let f = |x: &[f64]| eval_sequence(&pre, &sat, &post, &as_matrix(x)).map(|m| m.as_slice().to_vec());
            let g = |x: &[f64]| eval_sequence(&pre2, &grouped, &post2, &as_matrix(x)).map(|m| m.as_slice().to_vec());
            let mut sampler = || (0..seq_len * d).map(|_| rng.gen_range(-3.0..3.0)).collect::<Vec<f64>>();
            let report = exact_match(&f, &g, &mut sampler, samples, tol, &|_| false)?;
            let source = NetIR::shallow(pre.to_affine(), sat, post.to_affine())?;
            let compiled = NetIR::shallow(pre2.to_affine(), grouped, post2.to_affine())?;
            (source, compiled, report, 1, width)
        }
        other => return config_err(format!("unknown kind '{other}' (expected sign, phi, ls, shallow, deep or ffn)")),
    };

    std::fs::write(ctx.path("_source.json"), source.to_json()?)?;
    std::fs::write(ctx.path("_net.json"), compiled.to_json()?)?;
    ctx.write_json("_report.json", &report)?;
    ctx.write_config(params)?;
    let row = CompileRow {
        seed: ctx.seed,
        kind: kind.clone(),
        ns,
        d,
        width: used_width,
        depth: used_depth,
        compiled_depth: compiled.depth(),
        compiled_width: compiled.width(),
        samples,
        checked: report.checked,
        excluded: report.excluded,
        worst_diff: report.worst_diff,
        tol,
        pass: report.pass,
    };
    ctx.write_csv(&[row])?;
    Ok(Outcome {
        pass: report.pass,
        summary: format!("compile {kind}: worst difference {:e} over {} samples (tol {tol:e})", report.worst_diff, report.checked),
    })
}

// ---------------------------------------------------------------- approx

/// Named Lipschitz targets on [0, 1] with their Lipschitz constants.
pub(crate) fn lipschitz_target(name: &str) -> Result<(f64, fn(f64) -> f64), CliError> {
    Ok(match name {
        "x" => (1.0, |x| x),
        "cos" => (std::f64::consts::PI, |x| (std::f64::consts::PI * x).cos()),
        "abs" => (1.0, |x| (x - 0.5).abs()),
        "const" => (0.0, |_| 1.0),
        other => return config_err(format!("unknown target '{other}' (expected x, cos, abs or const)")),
    })
}

#[derive(Debug, Args)]
pub(crate) struct ApproxArgs {
    /// x, cos, abs or const.
    #[arg(long)]
    target: Option<String>,
    /// Target errors (comma separated).
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    /// Override of the target's Lipschitz constant.
    #[arg(long)]
    lipschitz: Option<f64>,
    /// Normalization group size of the compiled nets.
    #[arg(long)]
    ns: Option<usize>,
    /// Also build the smooth staircase under LN with this δ.
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Serialize)]
struct ApproxRow {
    seed: u64,
    target: String,
    lipschitz: f64,
    eps: f64,
    pieces: usize,
    ns: usize,
    grid: usize,
    linf_sign: f64,
    linf_pln: f64,
    delta: Option<f64>,
    linf_delta: Option<f64>,
    pass: bool,
}

#[derive(Serialize)]
struct TimingRow {
    seed: u64,
    label: String,
    runtime_s: f64,
    unix_time: f64,
}

pub(crate) fn approx(ctx: &RunContext, a: ApproxArgs, mut cfg: Resolver) -> Result<Outcome, CliError> {
    let target: String = cfg.get(a.target, "target", "cos".to_string())?;
    let eps_list = cfg.get(a.eps, "eps", vec![0.1])?;
    let (default_l, f) = lipschitz_target(&target)?;
    let lipschitz = cfg.get(a.lipschitz, "lipschitz", default_l)?;
    let ns = cfg.get(a.ns, "ns", 3usize)?;
    let delta = cfg.opt(a.delta, "delta")?;
    let params = cfg.finish()?;
    let grid = ctx.grid.unwrap_or(10_001);
    if eps_list.is_empty() {
        return config_err("eps list is empty");
    }
    let domain = BoxDomain::unit(1);
    let target_fn = |x: &[f64]| f(x[0]);
    let mut rows = Vec::new();
    let mut timing = Vec::new();
    for &eps in &eps_list {
        let start = Instant::now();
        let spec = StaircaseSpec::new(lipschitz, eps, f)?;
        let (sign, pln) = build_lipschitz_staircase(&spec, ns)?;
        let linf_sign = sup_error(&target_fn, &|x| sign.eval_scalar(x).unwrap_or(f64::NAN), &domain, grid)?;
        let linf_pln = sup_error(&target_fn, &|x| pln.eval_scalar(x).unwrap_or(f64::NAN), &domain, grid)?;
        let linf_delta = match delta {
            Some(dl) => {
                let (net, _) = build_staircase_delta(&spec, dl, DeltaMargins::default_for(&spec), ns)?;
                Some(sup_error(&target_fn, &|x| net.eval_scalar(x).unwrap_or(f64::NAN), &domain, grid)?)
            }
            None => None,
        };
        let pass = linf_sign < eps && linf_pln < eps && linf_delta.is_none_or(|v| v < eps);
        rows.push(ApproxRow {
            seed: ctx.seed,
            target: target.clone(),
            lipschitz,
            eps,
            pieces: spec.pieces,
            ns,
            grid,
            linf_sign,
            linf_pln,
            delta,
            linf_delta,
            pass,
        });
        timing.push(TimingRow { seed: ctx.seed, label: format!("eps={eps}"), runtime_s: start.elapsed().as_secs_f64(), unix_time: unix_time() });
    }
    ctx.write_csv(&rows)?;
    ctx.write_timing(&timing)?;
    ctx.write_config(params)?;
    let pass = rows.iter().all(|r| r.pass);
    let worst = rows.iter().map(|r| r.linf_sign.max(r.linf_pln) / r.eps).fold(0.0, f64::max);
    Ok(Outcome { pass, summary: format!("approx {target}: {} rows, worst error/ε = {worst:.4}", rows.len()) })
}

// ---------------------------------------------------------------- sobolev

#[derive(Debug, Args)]
pub(crate) struct SobolevArgs {
    /// Input dimension of the target
    #[arg(long)]
    d: Option<usize>,
    /// Smoothness order of the target.
    #[arg(long)]
    s: Option<usize>,
    /// Sobolev order of the measured error.
    #[arg(long)]
    k: Option<usize>,
    /// Partition sizes (comma separated).
    #[arg(long = "N", value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Accuracy parameter of the partition of unity
    #[arg(long)]
    delta: Option<f64>,
    /// Even exponent p of the (p, q) activation
    #[arg(long)]
    p: Option<u32>,
    /// Even exponent q of the (p, q) activation
    #[arg(long)]
    q: Option<u32>,
    /// sin2pi, const or gauss.
    #[arg(long)]
    target: Option<String>,
    /// Finite-difference step for derivative errors.
    #[arg(long)]
    fd_step: Option<f64>,
    /// Group size of the compiled PLN-net (Sat nets only); powers of two
    /// from 8 up give weights that are exact multiples of the source weights.
    #[arg(long)]
    ns: Option<usize>,
}

#[derive(Serialize)]
struct SobolevRow {
    seed: u64,
    target: String,
    d: usize,
    s: usize,
    k: usize,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "Linf_measured")]
    linf_measured: f64,
    #[serde(rename = "Linf_bound")]
    linf_bound: f64,
    #[serde(rename = "Wk_measured")]
    wk_measured: Option<f64>,
    #[serde(rename = "Wk_bound")]
    wk_bound: Option<f64>,
    width1: usize,
    width2: usize,
    width1_bound: usize,
    width2_bound: usize,
    pln_width1: Option<usize>,
    pln_width2: Option<usize>,
    pln_width1_bound: Option<usize>,
    pln_width2_bound: Option<usize>,
    pln_max_diff: Option<f64>,
    pln_max_diff_f64: Option<f64>,
    pass: bool,
}

/// Tolerance for agreement between the φ-net and its PLN-net, both evaluated
/// in double-double arithmetic.
pub(crate) const PLN_MATCH_TOL: f64 = 1e-11;
const PLN_MATCH_SAMPLES: usize = 1000;

pub(crate) fn sobolev(ctx: &RunContext, a: SobolevArgs, mut cfg: Resolver) -> Result<Outcome, CliError> {
    let d = cfg.get(a.d, "d", 1usize)?;
    let s = cfg.get(a.s, "s", 2usize)?;
    let k = cfg.get(a.k, "k", 0usize)?;
    let n_list = cfg.get(a.n, "N", vec![4, 8, 16])?;
    let delta = cfg.get(a.delta, "delta", 0.5)?;
    let p = cfg.get(a.p, "p", 2u32)?;
    let q = cfg.get(a.q, "q", 2u32)?;
    let target_name: String = cfg.get(a.target, "target", "sin2pi".to_string())?;
    let fd_step = cfg.get(a.fd_step, "fd_step", 1e-3)?;
    let ns = cfg.get(a.ns, "ns", 8usize)?;
    let params = cfg.finish()?;
    if n_list.is_empty() {
        return config_err("N list is empty");
    }
    let max_n = n_list.iter().copied().max().unwrap_or(0);
    if !ctx.override_guardrails && (d > GUARDRAIL_D || s > GUARDRAIL_S || max_n > GUARDRAIL_N) {
        return config_err(format!(
            "d = {d}, s = {s}, N = {max_n} exceed the limits d ≤ {GUARDRAIL_D}, s ≤ {GUARDRAIL_S}, N ≤ {GUARDRAIL_N} (use --override-guardrails)"
        ));
    }
    let grid = ctx.grid.unwrap_or(match d {
        1 => 2001,
        2 => 257,
        _ => 64,
    });
    let target = target_by_name(&target_name, d)?;
    let sat = p == 2 && q == 2;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut rows = Vec::new();
    let mut timing = Vec::new();
    let mut diagnostics = Vec::new();
    for &n in &n_list {
        let start = Instant::now();
        let config = SobolevConfig { d, s, k, n, delta, p, q };
        let built = build_sobolev_approximator(target.as_ref(), config)?;
        let net = &built.net;
        let f = |x: &[f64]| target.value(x);
        let g = |x: &[f64]| net.eval_scalar(x).unwrap_or(f64::NAN);
        let report = ApproxReport::measure(&f, &g, k, BoxDomain::unit(d), grid, fd_step)?;
        let dg = &built.diagnostics;
        let wk_measured = report.wk.last().copied();
        let (mut pln_width1, mut pln_width2, mut pln_b1, mut pln_b2, mut pln_max_diff, mut pln_max_diff_f64) = (None, None, None, None, None, None);
        let mut pass = report.linf <= dg.linf_bound && dg.width1 <= dg.width1_bound && dg.width2 <= dg.width2_bound;
        if let (Some(m), Some(b)) = (wk_measured, dg.wk_bound) {
            pass &= m <= b;
        }
        if sat {
            let pln = compile_sobolev_to_pln(net, ns)?;
            let widths = pln.hidden_widths();
            let bounds = pln_width_bounds(d, s, n, ns);
            let (mut worst, mut worst_f64): (f64, f64) = (0.0, 0.0);
            for _ in 0..PLN_MATCH_SAMPLES {
                let x: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..1.0)).collect();
                worst = worst.max((net.eval_extended(&x)?[0] - pln.eval_extended(&x)?[0]).abs());
                worst_f64 = worst_f64.max((net.eval_scalar(&x)? - pln.eval_scalar(&x)?).abs());
            }
            pass &= worst <= PLN_MATCH_TOL && widths[0] <= bounds.0 && widths[1] <= bounds.1;
            (pln_width1, pln_width2, pln_b1, pln_b2) = (Some(widths[0]), Some(widths[1]), Some(bounds.0), Some(bounds.1));
            (pln_max_diff, pln_max_diff_f64) = (Some(worst), Some(worst_f64));
        }
        rows.push(SobolevRow {
            seed: ctx.seed,
            target: target_name.clone(),
            d,
            s,
            k,
            n,
            linf_measured: report.linf,
            linf_bound: dg.linf_bound,
            wk_measured,
            wk_bound: dg.wk_bound,
            width1: dg.width1,
            width2: dg.width2,
            width1_bound: dg.width1_bound,
            width2_bound: dg.width2_bound,
            pln_width1,
            pln_width2,
            pln_width1_bound: pln_b1,
            pln_width2_bound: pln_b2,
            pln_max_diff,
            pln_max_diff_f64,
            pass,
        });
        diagnostics.push(built.diagnostics.clone());
        timing.push(TimingRow { seed: ctx.seed, label: format!("N={n}"), runtime_s: start.elapsed().as_secs_f64(), unix_time: unix_time() });
    }
    ctx.write_csv(&rows)?;
    ctx.write_timing(&timing)?;
    ctx.write_json("_diagnostics.json", &diagnostics)?;
    ctx.write_config(params)?;
    let mut sorted: Vec<&SobolevRow> = rows.iter().collect();
    sorted.sort_by_key(|r| r.n);
    let monotone = sorted.windows(2).all(|w| w[1].linf_measured <= w[0].linf_measured);
    let pass = monotone && rows.iter().all(|r| r.pass);
    let errors: Vec<String> = sorted.iter().map(|r| format!("N={}: {:.3e}", r.n, r.linf_measured)).collect();
    Ok(Outcome { pass, summary: format!("sobolev {target_name}: {} (non-increasing: {monotone})", errors.join(", ")) })
}

// ---------------------------------------------------------------- pou

#[derive(Debug, Args)]
pub(crate) struct PouArgs {
    /// Input dimension
    #[arg(long)]
    d: Option<usize>,
    /// Cubes per axis.
    #[arg(long = "N")]
    n: Option<usize>,
    /// Sobolev order of the near-sum check.
    #[arg(long)]
    k: Option<usize>,
    /// Tolerance of the partition construction
    #[arg(long)]
    eps: Option<f64>,
    /// Even exponent p of the (p, q) activation
    #[arg(long)]
    p: Option<u32>,
    /// Even exponent q of the (p, q) activation
    #[arg(long)]
    q: Option<u32>,
    /// Finite-difference step relative to the cube size.
    #[arg(long)]
    fd_step: Option<f64>,
}

#[derive(Serialize)]
struct PouRow {
    seed: u64,
    cube: String,
    near_sum: f64,
    near_bound: f64,
    distant: f64,
    distant_bound: f64,
    pass: bool,
}

#[derive(Serialize)]
struct PouSummary {
    seed: u64,
    d: usize,
    n: usize,
    k: usize,
    eps: f64,
    alpha: f64,
    r: f64,
    alpha_conditions: [bool; 3],
    telescoping: f64,
    pass: bool,
}

pub(crate) fn pou(ctx: &RunContext, a: PouArgs, mut cfg: Resolver) -> Result<Outcome, CliError> {
    let d = cfg.get(a.d, "d", 1usize)?;
    let n = cfg.get(a.n, "N", 8usize)?;
    let k = cfg.get(a.k, "k", 0usize)?;
    let eps = cfg.get(a.eps, "eps", 1e-3)?;
    let p = cfg.get(a.p, "p", 2u32)?;
    let q = cfg.get(a.q, "q", 2u32)?;
    let fd_step = cfg.get(a.fd_step, "fd_step", 1e-3)?;
    let params = cfg.finish()?;
    if !ctx.override_guardrails && (d > GUARDRAIL_D || n > GUARDRAIL_N) {
        return config_err(format!("d = {d}, N = {n} exceed d ≤ {GUARDRAIL_D}, N ≤ {GUARDRAIL_N} (use --override-guardrails)"));
    }
    let grid = ctx.grid.unwrap_or(64);
    let start = Instant::now();
    let report = pou_report(d, n, k, eps, p, q, grid, fd_step)?;
    let rows: Vec<PouRow> = report
        .cubes
        .iter()
        .map(|c| PouRow {
            seed: ctx.seed,
            cube: c.cube.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("-"),
            near_sum: c.near_sum,
            near_bound: report.near_bound,
            distant: c.distant,
            distant_bound: report.distant_bound,
            pass: c.near_sum <= report.near_bound && c.distant <= report.distant_bound,
        })
        .collect();
    let pass = report.passes();
    let summary = PouSummary {
        seed: ctx.seed,
        d,
        n,
        k,
        eps,
        alpha: report.params.alpha,
        r: report.params.r,
        alpha_conditions: report.alpha_conditions,
        telescoping: report.telescoping,
        pass,
    };
    ctx.write_csv(&rows)?;
    ctx.write_json("_summary.json", &summary)?;
    ctx.write_timing(&[TimingRow { seed: ctx.seed, label: "pou".into(), runtime_s: start.elapsed().as_secs_f64(), unix_time: unix_time() }])?;
    ctx.write_config(params)?;
    let failing = rows.iter().filter(|r| !r.pass).count();
    Ok(Outcome { pass, summary: format!("pou d={d} N={n} k={k}: {} cubes, {failing} failing, telescoping {:e}", rows.len(), report.telescoping) })
}

// ---------------------------------------------------------------- negsearch

#[derive(Debug, Args)]
pub(crate) struct NegsearchArgs {
    /// Number of random starting points
    #[arg(long)]
    restarts: Option<usize>,
    /// Objective evaluations spent polishing each restart.
    #[arg(long)]
    refine_iters: Option<usize>,
    /// Pass threshold on the best error found.
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Serialize)]
struct NegsearchRow {
    seed: u64,
    restarts: usize,
    refine_iters: usize,
    grid: usize,
    best: f64,
    sign_best: f64,
    smooth_best: f64,
    a: f64,
    b: f64,
    e: f64,
    tau: f64,
    smooth_b0: f64,
    t: f64,
    c: f64,
    sign_b0: f64,
    threshold: f64,
    pass: bool,
}

pub(crate) fn negsearch(ctx: &RunContext, a: NegsearchArgs, mut cfg: Resolver) -> Result<Outcome, CliError> {
    let restarts = cfg.get(a.restarts, "restarts", 10_000usize)?;
    let refine_iters = cfg.get(a.refine_iters, "refine_iters", 200usize)?;
    let threshold = cfg.get(a.threshold, "threshold", 0.95)?;
    let params = cfg.finish()?;
    let grid = ctx.grid.unwrap_or(801);
    let start = Instant::now();
    let r = theorem31_search(restarts, refine_iters, grid, ctx.seed)?;
    let pass = r.best >= threshold;
    let [ta, tb, te, tt, tb0] = r.smooth_params;
    let [st, sc, sb0] = r.sign_params;
    let row = NegsearchRow {
        seed: ctx.seed,
        restarts,
        refine_iters,
        grid,
        best: r.best,
        sign_best: r.sign_best,
        smooth_best: r.smooth_best,
        a: ta,
        b: tb,
        e: te,
        tau: tt,
        smooth_b0: tb0,
        t: st,
        c: sc,
        sign_b0: sb0,
        threshold,
        pass,
    };
    ctx.write_csv(&[row])?;
    ctx.write_json("_report.json", &r)?;
    ctx.write_timing(&[TimingRow { seed: ctx.seed, label: "negsearch".into(), runtime_s: start.elapsed().as_secs_f64(), unix_time: unix_time() }])?;
    ctx.write_config(params)?;
    Ok(Outcome { pass, summary: format!("negsearch: best {:.6} (sign {:.6}, smooth {:.6}) over {restarts} restarts", r.best, r.sign_best, r.smooth_best) })
}

// ---------------------------------------------------------------- verify

#[derive(Debug, Args)]
pub(crate) struct VerifyArgs {
    /// NetIR JSON file under test.
    #[arg(long)]
    net: Option<PathBuf>,
    /// NetIR JSON file to compare against pointwise.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Named scalar target on [0, 1]^d: x, cos, abs, const (d = 1) or sin2pi, gauss.
    #[arg(long)]
    target: Option<String>,
    /// Sobolev order of the error against a target.
    #[arg(long)]
    k: Option<usize>,
    /// Random samples for net-to-net comparison.
    #[arg(long)]
    samples: Option<usize>,
    /// Pass threshold.
    #[arg(long)]
    tol: Option<f64>,
    /// Sampling box for net-to-net comparison is [lo, hi]^d.
    #[arg(long, allow_hyphen_values = true)]
    lo: Option<f64>,
    /// Upper end of the sampling box
    #[arg(long, allow_hyphen_values = true)]
    hi: Option<f64>,
    /// Finite-difference step for derivative errors against a target
    #[arg(long)]
    fd_step: Option<f64>,
}

#[derive(Serialize)]
struct VerifyRow {
    seed: u64,
    mode: String,
    against: String,
    input_dim: usize,
    k: usize,
    checked: usize,
    linf: f64,
    wk: Option<f64>,
    tol: f64,
    pass: bool,
}

fn load_net(path: &std::path::Path) -> Result<NetIR, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    Ok(NetIR::from_json(&text)?)
}

pub(crate) fn verify(ctx: &RunContext, a: VerifyArgs, mut cfg: Resolver) -> Result<Outcome, CliError> {
    let net_path: PathBuf = cfg.require(a.net, "net")?;
    let reference: Option<PathBuf> = cfg.opt(a.reference, "reference")?;
    let target: Option<String> = cfg.opt(a.target, "target")?;
    let k = cfg.get(a.k, "k", 0usize)?;
    let samples = cfg.get(a.samples, "samples", 10_000usize)?;
    let tol = cfg.get(a.tol, "tol", 1e-10)?;
    let lo = cfg.get(a.lo, "lo", -1.0)?;
    let hi = cfg.get(a.hi, "hi", 1.0)?;
    let fd_step = cfg.get(a.fd_step, "fd_step", 1e-3)?;
    let params = cfg.finish()?;
    let net = load_net(&net_path)?;
    let d = net.input_dim();
    let start = Instant::now();
    let row = match (reference, target) {
        (Some(ref_path), None) => {
            if !(lo < hi) {
                return config_err("lo must be below hi");
            }
            let other = load_net(&ref_path)?;
            let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
            let mut sampler = || (0..d).map(|_| rng.gen_range(lo..hi)).collect::<Vec<f64>>();
            let report = exact_match(&|x| net.eval(x), &|x| other.eval(x), &mut sampler, samples, tol, &|_| false)?;
            ctx.write_json("_report.json", &report)?;
            VerifyRow {
                seed: ctx.seed,
                mode: "net".into(),
                against: ref_path.display().to_string(),
                input_dim: d,
                k: 0,
                checked: report.checked,
                linf: report.worst_diff,
                wk: None,
                tol,
                pass: report.pass,
            }
        }
        (None, Some(name)) => {
            if net.output_dim() != 1 {
                return config_err("target comparison needs a scalar-output net");
            }
            let smooth = target_by_name(&name, d).ok();
            let scalar = if d == 1 { lipschitz_target(&name).ok().map(|(_, f)| f) } else { None };
            let f: Box<dyn Fn(&[f64]) -> f64 + Sync> = match (smooth, scalar) {
                (Some(t), _) => Box::new(move |x: &[f64]| t.value(x)),
                (None, Some(f)) => Box::new(move |x: &[f64]| f(x[0])),
                _ => return config_err(format!("unknown target '{name}' for input dimension {d}")),
            };
            let grid = ctx.grid.unwrap_or(if d == 1 { 2001 } else { 64 });
            let g = |x: &[f64]| net.eval_scalar(x).unwrap_or(f64::NAN);
            let report = ApproxReport::measure(f.as_ref(), &g, k, BoxDomain::unit(d), grid, fd_step)?;
            ctx.write_json("_report.json", &report)?;
            let wk = report.wk.last().copied();
            let pass = report.linf <= tol && wk.is_none_or(|v| v <= tol);
            VerifyRow { seed: ctx.seed, mode: "target".into(), against: name, input_dim: d, k, checked: grid.pow(d as u32), linf: report.linf, wk, tol, pass }
        }
        _ => return config_err("give exactly one of --reference or --target"),
    };
    ctx.write_csv(std::slice::from_ref(&row))?;
    ctx.write_timing(&[TimingRow { seed: ctx.seed, label: "verify".into(), runtime_s: start.elapsed().as_secs_f64(), unix_time: unix_time() }])?;
    ctx.write_config(params)?;
    Ok(Outcome { pass: row.pass, summary: format!("verify against {}: L∞ {:e} (tol {tol:e})", row.against, row.linf) })
}
