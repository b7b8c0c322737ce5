//! Search for the best approximation of cos(πx) on [−2, 2] by scalar
//! single-group LN-nets.
//!
//! Such a net is either a two-level step function c·sign(x − t) + b₀ or a
//! member of the family (ax + b)/√((x + e)² + τ²) + b₀. The search scans the
//! step family exhaustively and runs seeded random restarts with
//! coordinate-wise golden-section polishing on the smooth family. For fixed
//! (a, b, e, τ) the best offset b₀ is the midrange of the residual, so it is
//! eliminated analytically.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};

/// Best parameters found and the corresponding grid sup errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NegSearchReport {
    pub best: f64,
    pub sign_best: f64,
    pub smooth_best: f64,
    /// (a, b, e, τ, b₀) of the best smooth candidate.
    pub smooth_params: [f64; 5],
    /// (t, c, b₀) of the best step candidate.
    pub sign_params: [f64; 3],
    pub restarts: usize,
    pub refine_iters: usize,
    pub grid: usize,
    pub seed: u64,
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;
const LINE_STEPS: usize = 8;
const BREAKPOINTS: usize = 8001;

struct Problem {
    xs: Vec<f64>,
    target: Vec<f64>,
}

impl Problem {
    /// Returns (best sup error over b₀, optimal b₀) for θ = (a, b, e, log₁₀τ).
    fn smooth(&self, theta: &[f64; 4]) -> (f64, f64) {
        let tau = 10f64.powf(theta[3]);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (&x, &y) in self.xs.iter().zip(&self.target) {
            let shift = x + theta[2];
            let den = (shift * shift + tau * tau).sqrt();
            let g = if den > 0.0 { (theta[0] * x + theta[1]) / den } else { 0.0 };
            let r = g - y;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        if !(lo.is_finite() && hi.is_finite()) {
            return (f64::INFINITY, 0.0);
        }
        (0.5 * (hi - lo), -0.5 * (hi + lo))
    }

    /// Best two-level step with breakpoint t (value b₀ at t itself).
    fn step(&self, t: f64) -> (f64, f64, f64) {
        let range = |pred: &dyn Fn(f64) -> bool| {
            self.xs.iter().zip(&self.target).filter(|(&x, _)| pred(x)).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, &y)| (lo.min(y), hi.max(y)))
        };
        let (llo, lhi) = range(&|x| x < t);
        let (rlo, rhi) = range(&|x| x > t);
        let (left, right) = match (llo.is_finite(), rlo.is_finite()) {
            (true, true) => (0.5 * (llo + lhi), 0.5 * (rlo + rhi)),
            (true, false) => (0.5 * (llo + lhi), 0.5 * (llo + lhi)),
            (false, _) => (0.5 * (rlo + rhi), 0.5 * (rlo + rhi)),
        };
        let (c, b0) = (0.5 * (right - left), 0.5 * (right + left));
        let err = self
            .xs
            .iter()
            .zip(&self.target)
            .map(|(&x, &y)| {
                let s = if x > t {
                    1.0
                } else if x < t {
                    -1.0
                } else {
                    0.0
                };
                (c * s + b0 - y).abs()
            })
            .fold(0.0, f64::max);
        (err, c, b0)
    }
}

fn random_start(rng: &mut ChaCha8Rng) -> [f64; 4] {
    [rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..1.0)]
}

/// Coordinate-wise golden-section polish using `iters` objective evaluations.
fn polish(problem: &Problem, start: [f64; 4], iters: usize) -> ([f64; 4], f64) {
    let mut theta = start;
    let mut best = problem.smooth(&theta).0;
    let mut widths = [2.0, 2.0, 1.5, 1.0];
    let mut used = 0;
    let mut coord = 0;
    while used + 2 <= iters {
        let (mut lo, mut hi) = (theta[coord] - widths[coord], theta[coord] + widths[coord]);
        let eval = |v: f64, theta: &[f64; 4]| {
            let mut t = *theta;
            t[coord] = v;
            problem.smooth(&t).0
        };
        let mut x1 = hi - GOLDEN * (hi - lo);
        let mut x2 = lo + GOLDEN * (hi - lo);
        let mut f1 = eval(x1, &theta);
        let mut f2 = eval(x2, &theta);
        used += 2;
        let mut steps = 0;
        while steps < LINE_STEPS && used < iters {
            if f1 < f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - GOLDEN * (hi - lo);
                f1 = eval(x1, &theta);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + GOLDEN * (hi - lo);
                f2 = eval(x2, &theta);
            }
            used += 1;
            steps += 1;
        }
        let (x, f) = if f1 < f2 { (x1, f1) } else { (x2, f2) };
        if f < best {
            best = f;
            theta[coord] = x;
        }
        widths[coord] *= 0.7;
        coord = (coord + 1) % 4;
    }
    (theta, best)
}

/// Minimum grid sup error against cos(πx) on [−2, 2] over both families.
///
/// `grid − 1` must be a multiple of 4 so that the integers −2..2 are grid
/// points; `refine_iters` is the number of objective evaluations spent
/// polishing each restart.
pub fn theorem31_search(restarts: usize, refine_iters: usize, grid: usize, seed: u64) -> Result<NegSearchReport> {
    if restarts == 0 {
        return invalid("need at least one restart");
    }
    if grid < 5 || !(grid - 1).is_multiple_of(4) {
        return invalid("grid − 1 must be a positive multiple of 4");
    }
    let xs: Vec<f64> = (0..grid).map(|i| -2.0 + 4.0 * i as f64 / (grid - 1) as f64).collect();
    let target = xs.iter().map(|&x| (std::f64::consts::PI * x).cos()).collect();
    let problem = Problem { xs, target };

    let (sign_best, sign_params) = (0..BREAKPOINTS)
        .map(|i| {
            let t = -2.2 + 4.4 * i as f64 / (BREAKPOINTS - 1) as f64;
            let (err, c, b0) = problem.step(t);
            (err, [t, c, b0])
        })
        .fold((f64::INFINITY, [0.0; 3]), |acc, cur| if cur.0 < acc.0 { cur } else { acc });

    let (smooth_best, _, theta) = (0..restarts)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let (theta, err) = polish(&problem, random_start(&mut rng), refine_iters);
            (err, i, theta)
        })
        .reduce(|| (f64::INFINITY, usize::MAX, [0.0; 4]), |a, b| if (b.0, b.1) < (a.0, a.1) { b } else { a });
    let b0 = problem.smooth(&theta).1;
    Ok(NegSearchReport {
        best: sign_best.min(smooth_best),
        sign_best,
        smooth_best,
        smooth_params: [theta[0], theta[1], theta[2], 10f64.powf(theta[3]), b0],
        sign_params,
        restarts,
        refine_iters,
        grid,
        seed,
    })
}
