//! Shared test oracles, independent of the library's solution paths.
//!
//! The spectrum oracle re-derives active-set candidates from the stationarity
//! conditions and solves the scalar equations by bisection rather than by
//! radicals, then scans every active set and keeps the lowest objective. The
//! design oracle evaluates the constrained objective on explicit spectra.

#![allow(dead_code)]
// `!(x > 0.0)` rejects NaN along with out-of-domain values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Value of the spectrum objective
/// `a^2/(4 d max) + sigma^2 sum 1/l_i + sigma^2 d / max` for squared
/// singular values `lambda` paired with eigenvalues `eigs`.
pub fn spectrum_objective(eigs: &[f64], lambda: &[f64], sigma: f64) -> f64 {
    let d = eigs.len() as f64;
    let lmax = lambda.iter().fold(0.0f64, |m, &l| m.max(l));
    let a: f64 = eigs.iter().zip(lambda).map(|(e, l)| e * l).sum();
    let inv: f64 = lambda.iter().map(|l| 1.0 / l).sum();
    a * a / (4.0 * d * lmax) + sigma * sigma * inv + sigma * sigma * d / lmax
}

/// Bisection for the unique positive root of `x^3 - p x - q` with `q > 0`.
fn cubic_root_bisect(p: f64, q: f64) -> f64 {
    let mut lo = (p.max(0.0) / 3.0).sqrt();
    let f = |x: f64| x * x * x - p * x - q;
    let mut hi = lo.max(1.0);
    while f(hi) <= 0.0 {
        hi *= 2.0;
    }
    if f(lo) > 0.0 {
        lo = 0.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Bisection for the weighted trace of the empty active set:
/// `a^2/2 - K = sigma C sqrt((2 d / d1)(a^2/2 + K))` with
/// `K = 2 sigma^2 d (d + 1)` and `C = sum_{i >= 2} sqrt(D_i)`.
fn empty_set_a_bisect(d: usize, d1: f64, c: f64, sigma: f64) -> f64 {
    let df = d as f64;
    let k = 2.0 * sigma * sigma * df * (df + 1.0);
    // Convex in a^2 with f(0) < 0: exactly one positive crossing.
    let f = |a: f64| {
        let half = a * a / 2.0;
        half - k - sigma * c * ((2.0 * df / d1) * (half + k)).sqrt()
    };
    let mut lo = 0.0;
    let mut hi = (2.0 * k).sqrt().max(1.0);
    while f(hi) <= 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Candidate spectrum for the active set pinning the first `pinned` entries,
/// built from the stationarity conditions with bisection for the scalar.
/// Returns `(lambda, a)`.
pub fn naive_candidate(
    pinned: usize,
    eigs: &[f64],
    sigma: f64,
    h: f64,
) -> Option<(Vec<f64>, f64)> {
    let d = eigs.len();
    let df = d as f64;
    let h2 = h * h;
    if pinned >= d || eigs[pinned] <= 0.0 {
        return None;
    }
    if pinned == 0 {
        let d1 = eigs[0];
        let c: f64 = eigs[1..].iter().map(|e| e.sqrt()).sum();
        let a = empty_set_a_bisect(d, d1, c, sigma);
        let lambda1 = 2.0 * df / (a * d1) * (a * a / (4.0 * df) + sigma * sigma * (df + 1.0));
        let mut lambda = vec![lambda1];
        for &e in &eigs[1..] {
            lambda.push(sigma * (2.0 * df * lambda1 / (a * e)).sqrt());
        }
        Some((lambda, a))
    } else {
        let c: f64 = eigs[pinned..].iter().map(|e| e.sqrt()).sum();
        let q = sigma * (2.0 * df * h2).sqrt() * c;
        let p: f64 = eigs[..pinned].iter().sum::<f64>() * h2;
        let x = cubic_root_bisect(p, q);
        let a = x * x;
        let mut lambda = vec![h2; pinned];
        for &e in &eigs[pinned..] {
            lambda.push(sigma * (2.0 * df * h2 / (a * e)).sqrt());
        }
        Some((lambda, a))
    }
}

/// All-active-sets reference solver: every candidate from the nonpositive
/// count up to all-pinned, full feasibility check, lowest objective wins.
/// Returns `(lambda, pinned)`.
pub fn naive_sigma_star(eigs: &[f64], sigma: f64, h: f64) -> (Vec<f64>, usize) {
    let d = eigs.len();
    let h2 = h * h;
    let cap = h2 * (1.0 + 1e-12);
    let trace: f64 = eigs.iter().sum();
    assert!(trace >= 0.0, "oracle requires nonnegative trace");
    if trace == 0.0 {
        return (vec![h2; d], d);
    }
    let k = eigs.iter().take_while(|&&e| e <= 1e-300).count();
    let mut best: Option<(f64, Vec<f64>, usize)> = None;
    for pinned in k..=d {
        let candidate = if pinned == d {
            Some((vec![h2; d], 0.0))
        } else {
            naive_candidate(pinned, eigs, sigma, h)
        };
        let Some((lambda, _)) = candidate else { continue };
        if lambda.iter().any(|&l| !(l > 0.0) || l > cap) {
            continue;
        }
        let value = spectrum_objective(eigs, &lambda, sigma);
        if best.as_ref().is_none_or(|(b, _, _)| value < *b) {
            best = Some((value, lambda, pinned));
        }
    }
    let (_, lambda, pinned) = best.expect("the all-pinned spectrum is always feasible");
    (lambda, pinned)
}

/// Random symmetric matrix with the given eigenvalues in a random basis.
pub fn random_symmetric(eigs: &DVector<f64>, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let d = eigs.len();
    let q = casg::linalg::random_orthogonal(d, rng);
    &q * DMatrix::from_diagonal(eigs) * q.transpose()
}

/// Random eigenvalues: log-uniform magnitudes in `[10^lo, 10^hi]` with
/// random signs, sorted increasing.
pub fn random_eigs(
    d: usize,
    lo: f64,
    hi: f64,
    allow_negative: bool,
    rng: &mut ChaCha8Rng,
) -> DVector<f64> {
    let mut values: Vec<f64> = (0..d)
        .map(|_| {
            let mag = 10f64.powf(rng.random_range(lo..hi));
            if allow_negative && rng.random_bool(0.5) {
                -mag
            } else {
                mag
            }
        })
        .collect();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    DVector::from_vec(values)
}

/// Random feasible design in the eigenbasis: random orthogonal factors with
/// log-uniform singular values at most `h`.
pub fn random_feasible_design(
    d: usize,
    h: f64,
    rng: &mut ChaCha8Rng,
) -> DMatrix<f64> {
    let q1 = casg::linalg::random_orthogonal(d, rng);
    let q2 = casg::linalg::random_orthogonal(d, rng);
    let s = DVector::from_fn(d, |_, _| h * 10f64.powf(rng.random_range(-3.0..0.0)));
    q1 * DMatrix::from_diagonal(&s) * q2.transpose()
}

/// Grid-plus-polish minimizer of the two-dimensional spectrum objective over
/// `(0, h^2]^2`: a log-spaced coarse grid followed by shrinking local grids
/// around the best cell.
pub fn grid_polish_best_2d(eigs: &[f64; 2], sigma: f64, h: f64, n_side: usize) -> (f64, [f64; 2]) {
    let h2 = h * h;
    let lo = h2 * 1e-8;
    let value = |l: [f64; 2]| spectrum_objective(eigs, &l, sigma);
    let mut best = (f64::INFINITY, [h2, h2]);
    let log_lo = lo.ln();
    let log_hi = h2.ln();
    for i in 0..n_side {
        let l1 = (log_lo + (log_hi - log_lo) * i as f64 / (n_side - 1) as f64).exp();
        for j in 0..n_side {
            let l2 = (log_lo + (log_hi - log_lo) * j as f64 / (n_side - 1) as f64).exp();
            let v = value([l1, l2]);
            if v < best.0 {
                best = (v, [l1, l2]);
            }
        }
    }
    // Local polish: shrinking multiplicative grids around the incumbent.
    let mut width = (log_hi - log_lo) / (n_side - 1) as f64;
    for _ in 0..40 {
        let center = best.1;
        for di in -4i32..=4 {
            for dj in -4i32..=4 {
                let l1 = (center[0].ln() + width * di as f64 / 4.0).exp().min(h2);
                let l2 = (center[1].ln() + width * dj as f64 / 4.0).exp().min(h2);
                let v = value([l1, l2]);
                if v < best.0 {
                    best = (v, [l1, l2]);
                }
            }
        }
        width *= 0.5;
    }
    best
}
