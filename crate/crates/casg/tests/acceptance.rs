//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured quantities (run with `--nocapture` to see them). Criteria
//! covering the command-line binary (byte-identical reruns and the golden
//! smoke run) live in the `casg-cli` crate's acceptance tests.

#[path = "support/mod.rs"]
mod support;

use std::time::Instant;

use casg::ecasg::subdivide;
use casg::global_model::fit_rbf;
use casg::harness::config::{DfoConfig, MethodName, SensitivityConfig};
use casg::harness::dfo::dfo_run;
use casg::harness::problems::{ackley, builtin_problem, dfo_default_problem_names};
use casg::harness::profile::data_profile;
use casg::harness::sensitivity::sensitivity_run;
use casg::harness::toy::{decades, toy_sweep};
use casg::harness::OdeCoefficients;
use casg::simplex::{
    mse_monte_carlo, noise_error, objective, simplex_gradient, CurvatureSpec, DifferenceMatrix,
};
use casg::solver::{active_set_candidate, casg_sample_set, hadamard, optimal_spectrum};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use support::{naive_sigma_star, random_eigs, random_feasible_design, random_symmetric};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}

/// Criterion 1: the constructed design is globally optimal against random
/// feasible designs, 50 instances x 1e5 candidates, slack 1e-9, under two
/// minutes.
#[test]
fn criterion_01_theorem_optimality() {
    let start = Instant::now();
    let dims = [2usize, 4, 8];
    let results: Vec<(usize, f64)> = (0..50u64)
        .into_par_iter()
        .map(|instance| {
            let mut rng = ChaCha8Rng::seed_from_u64(1_000 + instance);
            let d = dims[(instance % 3) as usize];
            let eigs = random_eigs(d, -1.5, 1.5, true, &mut rng);
            let hess = random_symmetric(&eigs, &mut rng);
            let sigma = 10f64.powf(rng.random_range(-2.5..0.0));
            let h = 10f64.powf(rng.random_range(-1.0..1.0));
            let spec = CurvatureSpec::new(hess, sigma, h).unwrap();
            let (_, result) = casg_sample_set(&spec, &DVector::zeros(d)).unwrap();
            let mut worst_margin = f64::INFINITY;
            for _ in 0..100_000 {
                let s = DifferenceMatrix::new(random_feasible_design(d, h, &mut rng));
                let value = objective(&s, &spec);
                assert!(
                    result.objective_value <= value * (1.0 + 1e-9),
                    "instance {instance} (d={d}): random design {value} beat {}",
                    result.objective_value
                );
                worst_margin = worst_margin.min(value / result.objective_value);
            }
            (d, worst_margin)
        })
        .collect();
    let elapsed = start.elapsed();
    let tightest = results.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    assert!(
        elapsed.as_secs_f64() <= 120.0,
        "runtime {elapsed:?} exceeds two minutes"
    );
    println!(
        "criterion 1: PASS - 50 instances x 1e5 designs, tightest random/optimal ratio {tightest:.6}, {elapsed:.1?}"
    );
}

/// Criterion 2: the linear-time solver equals the all-active-sets reference
/// on 200 instances up to d = 64; stationarity residuals at 1e-8; root
/// substitution residuals at 1e-9 on both cubic branches and the quartic.
#[test]
fn criterion_02_solver_correctness() {
    let mut rng = ChaCha8Rng::seed_from_u64(2_000);
    for trial in 0..200 {
        let d = rng.random_range(1..=64usize);
        let mut eigs = random_eigs(d, -2.0, 2.0, true, &mut rng);
        if eigs.iter().sum::<f64>() < 0.0 {
            eigs = DVector::from_iterator(d, eigs.iter().rev().map(|v| -v));
        }
        let sigma = 10f64.powf(rng.random_range(-3.0..0.5));
        let h = 10f64.powf(rng.random_range(-1.0..1.0));
        let fast = optimal_spectrum(&eigs, sigma, h).unwrap();
        let (slow_lambda, slow_pinned) = naive_sigma_star(eigs.as_slice(), sigma, h);
        assert_eq!(fast.pinned, slow_pinned, "trial {trial} (d={d})");
        for (i, slow) in slow_lambda.iter().enumerate() {
            assert!(
                (fast.lambda[i] - slow).abs() <= 1e-10 * (1.0 + slow.abs()),
                "trial {trial}: lambda[{i}] {} vs {slow}",
                fast.lambda[i],
            );
        }
        // Stationarity residuals of the free coordinates.
        if fast.pinned < d {
            let a = fast.weighted_trace;
            let lmax = fast.lambda[0];
            for i in fast.pinned.max(1)..d {
                let t1 = eigs[i] * a / (2.0 * d as f64 * lmax);
                let t2 = sigma * sigma / (fast.lambda[i] * fast.lambda[i]);
                assert!(rel(t1, t2) <= 1e-8, "trial {trial}: FONC residual at {i}");
            }
        }
    }
    // Root-substitution residuals on constructed branch cases plus random
    // pinned instances.
    let mut substitution_checks = 0;
    for (pinned, eigs, sigma, h) in [
        (1usize, vec![-3.0, 0.5, 2.0, 4.0], 0.2, 1.0),
        (2, vec![3.0, 4.0, 5.0, 6.0], 1e-5, 1.0),
    ] {
        let c1: f64 = eigs.iter().skip(pinned).map(|e: &f64| e.sqrt()).sum();
        let c2: f64 = eigs.iter().take(pinned).sum();
        let (_, a) = active_set_candidate(pinned, &eigs, sigma, h, c1, c2).unwrap();
        let x = a.sqrt();
        let c1s = sigma * (2.0 * eigs.len() as f64 * h * h).sqrt() * c1;
        let c2s = h * h * c2;
        assert!((x * x * x - c2s * x - c1s).abs() <= 1e-9 * (1.0 + x * x * x));
        substitution_checks += 1;
    }
    for _ in 0..100 {
        let d = rng.random_range(2..=16usize);
        let eigs = random_eigs(d, -1.0, 1.0, false, &mut rng);
        let sigma = 10f64.powf(rng.random_range(-3.0..0.0));
        let h = 10f64.powf(rng.random_range(-0.5..0.5));
        let c1: f64 = eigs.iter().map(|e| e.sqrt()).sum();
        let (_, a) = active_set_candidate(0, eigs.as_slice(), sigma, h, c1, 0.0).unwrap();
        // Quartic fixed point.
        let df = d as f64;
        let k = 2.0 * sigma * sigma * df * (df + 1.0);
        let c: f64 = eigs.iter().skip(1).map(|e| e.sqrt()).sum();
        let inner = a * a / 2.0 + k;
        let rhs = (sigma * ((2.0 * df / eigs[0]) * inner).sqrt() * c + inner) / a;
        assert!(rel(a, rhs) <= 1e-9);
        substitution_checks += 1;
    }
    println!(
        "criterion 2: PASS - 200 reference-solver matches (d <= 64), {substitution_checks} root substitutions"
    );
}

/// Criterion 3: the analytic noise error matches Monte-Carlo within three
/// standard errors on 20 instances, and the full objective matches the
/// Monte-Carlo mean squared error on quadratics; under one minute.
#[test]
fn criterion_03_mse_decomposition() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3_000);
    for instance in 0..20 {
        let d = rng.random_range(2..=8usize);
        let s = DifferenceMatrix::new(random_feasible_design(d, 1.0, &mut rng));
        let sigma = 10f64.powf(rng.random_range(-1.5..0.0));
        let analytic = noise_error(&s, sigma).unwrap();
        let stats = mse_monte_carlo(
            |trial_rng| {
                let eps: Vec<f64> = (0..=d)
                    .map(|_| sigma * Distribution::<f64>::sample(&StandardNormal, trial_rng))
                    .collect();
                let delta = DVector::from_fn(d, |i, _| eps[i + 1] - eps[0]);
                simplex_gradient(&s, &delta)
            },
            &DVector::zeros(d),
            100_000,
            30_000 + instance,
        )
        .unwrap();
        assert!(
            (stats.mean - analytic).abs() <= 3.0 * stats.stderr,
            "instance {instance}: analytic {analytic} vs mc {} +- {}",
            stats.mean,
            stats.stderr
        );
    }
    // Quadratics: total objective is the exact mean squared error.
    for instance in 0..5 {
        let d = 4;
        let eigs = random_eigs(d, -1.0, 1.0, true, &mut rng);
        let hess = random_symmetric(&eigs, &mut rng);
        let sigma = 0.05;
        let h = 0.5;
        let spec = CurvatureSpec::new(hess.clone(), sigma, h).unwrap();
        let x0 = DVector::from_element(d, 0.3);
        let gradient = DVector::from_fn(d, |i, _| 0.5 - i as f64);
        let f = |x: &DVector<f64>| {
            0.5 * ((x - &x0).transpose() * &hess * (x - &x0))[(0, 0)] + gradient.dot(&(x - &x0))
        };
        let (sample, result) = casg_sample_set(&spec, &x0).unwrap();
        let stats = mse_monte_carlo(
            |trial_rng| {
                // Evaluate the quadratic with fresh noise at all d + 1 points.
                let mut base = 0.0;
                let mut values = Vec::with_capacity(d);
                for (i, point) in sample.all_points().enumerate() {
                    let noisy =
                        f(point) + sigma * Distribution::<f64>::sample(&StandardNormal, trial_rng);
                    if i == 0 {
                        base = noisy;
                    } else {
                        values.push(noisy);
                    }
                }
                let delta = DVector::from_fn(d, |i, _| values[i] - base);
                simplex_gradient(&sample.difference_matrix(), &delta)
            },
            &gradient,
            100_000,
            40_000 + instance,
        )
        .unwrap();
        assert!(
            (stats.mean - result.objective_value).abs() <= 3.0 * stats.stderr,
            "instance {instance}: objective {} vs mc {} +- {}",
            result.objective_value,
            stats.mean,
            stats.stderr
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() <= 60.0, "runtime {elapsed:?}");
    println!("criterion 3: PASS - 20 noise instances + 5 quadratic MSE checks, {elapsed:.1?}");
}

/// Criterion 4: the toy conditioning sweep. KNOWN RED: the acceptance
/// contract requires a factor-10 separation for every k at or below 1e-2,
/// but the exact ratio of the optimal-FD objective to the CASG objective at
/// k = 1e-2 is 9.9558 for every non-binding radius (the asymptotic formula
/// 1.17/sqrt(k) suggests 11.7 and likely calibrated the threshold; binding
/// radii only lower the ratio). The assertion is kept as written rather
/// than loosened; every other clause of this criterion passes.
#[test]
fn criterion_04_toy_reproduction() {
    let ks = decades(-4, 4);
    let rows = toy_sweep(&ks, 0.1, 1e3).unwrap();
    for row in &rows {
        assert!(
            row.casg_objective <= row.fd_objective + 1e-12,
            "dominance failed at k = {}",
            row.k
        );
    }
    let neg_ks: Vec<f64> = decades(-4, 4).iter().map(|k| -k).collect();
    let neg_rows = toy_sweep(&neg_ks, 0.1, 1e2).unwrap();
    let at_minus_one = neg_rows.iter().find(|r| r.k == -1.0).unwrap();
    assert!(
        at_minus_one.casg_approx_error <= 1e-18,
        "approximation error {} at k = -1",
        at_minus_one.casg_approx_error
    );
    assert!(
        (at_minus_one.casg_objective - at_minus_one.cd_noise_error).abs()
            <= 0.05 * at_minus_one.cd_noise_error,
        "k = -1: casg {} vs cd noise {}",
        at_minus_one.casg_objective,
        at_minus_one.cd_noise_error
    );
    let mut shortfalls = Vec::new();
    for row in rows.iter().filter(|r| r.k <= 1e-2) {
        let ratio = row.fd_objective / row.casg_objective;
        if ratio < 10.0 {
            shortfalls.push((row.k, ratio));
        }
    }
    assert!(
        shortfalls.is_empty(),
        "ratio >= 10 fails at {shortfalls:?}; the exact boundary ratio at k = 1e-2 is 9.9558 \
         for any non-binding radius, so the factor-10 requirement is unattainable at that grid \
         point (see this test's doc comment)"
    );
    println!("criterion 4: PASS - dominance everywhere, ratios >= 10 below 1e-2, CD floor matched at k = -1");
}

/// Criterion 5: rotation and negation invariance on 1000 random instances.
#[test]
fn criterion_05_invariances() {
    let mut rng = ChaCha8Rng::seed_from_u64(5_000);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let d = rng.random_range(2..=6usize);
        let eigs = random_eigs(d, -1.5, 1.5, true, &mut rng);
        let hess = random_symmetric(&eigs, &mut rng);
        let sigma = 10f64.powf(rng.random_range(-2.0..0.0));
        let h = 10f64.powf(rng.random_range(-0.5..0.5));
        let spec = CurvatureSpec::new(hess, sigma, h).unwrap();
        let s = random_feasible_design(d, h, &mut rng);
        let value = objective(&DifferenceMatrix::new(s.clone()), &spec);
        let spec_d = CurvatureSpec::new(
            DMatrix::from_diagonal(spec.eigenvalues()),
            sigma,
            h,
        )
        .unwrap();
        let rotated = spec.rotation().transpose() * &s;
        let value_rot = objective(&DifferenceMatrix::new(rotated), &spec_d);
        let spec_neg = CurvatureSpec::new(-spec.hessian(), sigma, h).unwrap();
        let value_neg = objective(&DifferenceMatrix::new(s), &spec_neg);
        let dev = ((value - value_rot).abs()).max((value - value_neg).abs());
        worst = worst.max(dev / (1.0 + value.abs()));
        assert!(
            dev <= 1e-10 * (1.0 + value.abs()),
            "invariance deviation {dev} at objective {value}"
        );
    }
    println!("criterion 5: PASS - 1000 instances, worst relative deviation {worst:.2e}");
}

/// Criterion 6: partition validity and block additivity of the extension.
#[test]
fn criterion_06_ecasg_additivity() {
    assert_eq!(subdivide(11).sizes(), vec![8, 2, 1]);
    for d in 1..=257usize {
        let p = subdivide(d);
        let mut seen = vec![false; d];
        for cell in p.cells() {
            assert!(cell.len().is_power_of_two());
            for &i in cell {
                assert!(!seen[i], "d={d}: index {i} duplicated");
                seen[i] = true;
            }
        }
        assert!(seen.iter().all(|&s| s), "d={d}: indices not covered");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(6_000);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let d = rng.random_range(2..=12usize);
        let eigs = random_eigs(d, -1.0, 1.0, true, &mut rng);
        let sigma = 10f64.powf(rng.random_range(-2.0..0.0));
        let h = 1.0;
        let spec_d = CurvatureSpec::new(DMatrix::from_diagonal(&eigs), sigma, h).unwrap();
        let partition = subdivide(d);
        let mut s_full = DMatrix::zeros(d, d);
        let mut cell_sum = 0.0;
        let mut offset = 0;
        for idx in partition.cells() {
            let size = idx.len();
            let block = random_feasible_design(size, h, &mut rng);
            for (p, &row) in idx.iter().enumerate() {
                for q in 0..size {
                    s_full[(row, offset + q)] = block[(p, q)];
                }
            }
            let cell_eigs = DVector::from_iterator(size, idx.iter().map(|&i| eigs[i]));
            let cell_spec =
                CurvatureSpec::new(DMatrix::from_diagonal(&cell_eigs), sigma, h).unwrap();
            cell_sum += objective(&DifferenceMatrix::new(block), &cell_spec);
            offset += size;
        }
        let total = objective(&DifferenceMatrix::new(s_full), &spec_d);
        let dev = (total - cell_sum).abs() / (1.0 + total.abs());
        worst = worst.max(dev);
        assert!(dev <= 1e-10, "additivity deviation {dev}");
    }
    println!("criterion 6: PASS - partitions valid to d = 257, 200 random blocks additive (worst {worst:.2e})");
}

/// Criterion 7: Hadamard factor properties across the power-of-two range.
#[test]
fn criterion_07_hadamard_properties() {
    for d in [1usize, 2, 4, 8, 16, 32] {
        for k in [0usize, d / 2, d - 1] {
            let m = hadamard(d, k).unwrap();
            let gram_defect = (&m.transpose() * &m - DMatrix::identity(d, d)).amax();
            assert!(gram_defect <= 1e-12, "d={d}: orthogonality defect {gram_defect}");
            let mag = 1.0 / (d as f64).sqrt();
            for v in m.iter() {
                assert!(
                    (v.abs() - mag).abs() <= f64::EPSILON * mag,
                    "d={d}: entry magnitude {v}"
                );
            }
            assert!(m.column(k).iter().all(|&v| v > 0.0), "d={d}: column {k} not positive");
        }
    }
    println!("criterion 7: PASS - d in {{1,2,4,8,16,32}}, three column choices each");
}

/// Criterion 8: analytic model derivatives against finite differences of the
/// model itself, and exact interpolation at the centers without smoothing.
#[test]
fn criterion_08_rbf_derivatives() {
    let mut rng = ChaCha8Rng::seed_from_u64(8_000);
    let f = |x: &DVector<f64>| (1.3 * x[0]).sin() * (0.6 * x[1]).cos() + 0.2 * x[0] * x[1] * x[1];
    let mut history = casg::history::EvaluationHistory::new();
    for _ in 0..180 {
        let x = DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0));
        let y = f(&x);
        history.push(x, y).unwrap();
    }
    let model = fit_rbf(history.records(), 0.0).unwrap();
    for r in history.records() {
        let v = model.value(&r.x);
        assert!(
            (v - r.y).abs() <= 1e-8 * (1.0 + r.y.abs()),
            "interpolation residual {} at a center",
            v - r.y
        );
    }
    let mut worst_grad: f64 = 0.0;
    let mut worst_hess: f64 = 0.0;
    for _ in 0..100 {
        let x = DVector::from_fn(2, |_, _| rng.random_range(-0.9..0.9));
        let g = model.gradient(&x);
        let hess = model.hessian(&x);
        assert_eq!((&hess - hess.transpose()).amax(), 0.0);
        for i in 0..2 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += 1e-5;
            xm[i] -= 1e-5;
            let fd = (model.value(&xp) - model.value(&xm)) / 2e-5;
            let gdev = (g[i] - fd).abs() / (1.0 + fd.abs());
            worst_grad = worst_grad.max(gdev);
            assert!(gdev <= 1e-5, "gradient deviation {gdev}");
            let mut hp = x.clone();
            let mut hm = x.clone();
            hp[i] += 1e-4;
            hm[i] -= 1e-4;
            let col = (model.gradient(&hp) - model.gradient(&hm)) / 2e-4;
            for j in 0..2 {
                let hdev = (hess[(i, j)] - col[j]).abs() / (1.0 + col[j].abs());
                worst_hess = worst_hess.max(hdev);
                assert!(hdev <= 1e-3, "hessian deviation {hdev}");
            }
        }
    }
    println!(
        "criterion 8: PASS - 180 centers interpolated, 100 query points (worst grad {worst_grad:.1e}, hess {worst_hess:.1e})"
    );
}

/// Criterion 9: the sensitivity trend on the 8-dimensional Ackley function
/// at sigma = 1e-5 with a 2000-point global model, under ten minutes.
#[test]
fn criterion_09_sensitivity_trend() {
    let start = Instant::now();
    let problem = ackley(8);
    let cfg = SensitivityConfig {
        problems: vec!["ackley_d8".into()],
        methods: vec![
            MethodName::CasgExact,
            MethodName::FdExact,
            MethodName::CasgRbf,
            MethodName::GlobalGrad,
        ],
        steps: vec![0.1, 0.05, 0.01],
        n_points: 100,
        rbf_points: 2000,
        rbf_smoothing: 0.0,
        sigma: Some(1e-5),
        ..SensitivityConfig::default()
    };
    let outcome = sensitivity_run(&problem, &cfg, 9_000);
    assert!(outcome.failures.is_empty(), "failures: {:?}", outcome.failures);
    let median_of = |m: MethodName| {
        outcome
            .summaries
            .iter()
            .find(|s| s.method == m)
            .unwrap_or_else(|| panic!("missing summary for {m:?}"))
            .median
    };
    let casg_exact = median_of(MethodName::CasgExact);
    let fd_exact = median_of(MethodName::FdExact);
    let casg_rbf = median_of(MethodName::CasgRbf);
    let global_grad = median_of(MethodName::GlobalGrad);
    assert!(
        casg_rbf <= fd_exact,
        "model-driven casg {casg_rbf} should beat exact-curvature fd {fd_exact}"
    );
    assert!(casg_exact <= fd_exact);
    assert!(
        global_grad >= casg_rbf,
        "global-model gradient {global_grad} should trail casg-rbf {casg_rbf}"
    );
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() <= 600.0, "runtime {elapsed:?}");
    println!(
        "criterion 9: PASS - medians: casg_exact {casg_exact:.2e} <= fd_exact {fd_exact:.2e}, casg_rbf {casg_rbf:.2e} <= fd_exact, global_grad {global_grad:.2e} >= casg_rbf; {elapsed:.1?}"
    );
}

/// Criterion 10: the optimization race on the built-in problem set at
/// sigma = 1e-5: weak data-profile dominance of exact-curvature CASG over
/// exact-curvature FD beyond 20 simplex-gradient budgets at tau = 1e-5, and
/// every simplex method above 0.8 by budget 100 at tau = 0.1; under twenty
/// minutes.
#[test]
fn criterion_10_dfo_trend() {
    let start = Instant::now();
    let ode = OdeCoefficients::default();
    let names = dfo_default_problem_names();
    let problems: Vec<_> = names
        .iter()
        .map(|n| builtin_problem(n, &ode).unwrap())
        .collect();
    let cfg = DfoConfig {
        problems: names.clone(),
        methods: vec![MethodName::CasgExact, MethodName::FdExact, MethodName::Cd],
        ..DfoConfig::default()
    };
    let outcome = dfo_run(&problems, &cfg, 1e-5, 10_000);
    assert!(outcome.failures.is_empty(), "failures: {:?}", outcome.failures);
    let tight = data_profile(&outcome.chosen_runs, 1e-5).unwrap();
    let curve = |m: &str| tight.iter().find(|c| c.method == m).unwrap();
    let casg = curve("casg_exact");
    let fd = curve("fd_exact");
    for b in 20..=200 {
        let budget = b as f64;
        assert!(
            casg.fraction_at(budget) >= fd.fraction_at(budget),
            "dominance violated at budget {budget}: casg {} < fd {}",
            casg.fraction_at(budget),
            fd.fraction_at(budget)
        );
    }
    let loose = data_profile(&outcome.chosen_runs, 1e-1).unwrap();
    for method in ["casg_exact", "fd_exact"] {
        let fraction = loose
            .iter()
            .find(|c| c.method == method)
            .unwrap()
            .fraction_at(100.0);
        assert!(
            fraction >= 0.8,
            "{method} reached only {fraction} by budget 100 at tau 0.1"
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() <= 1200.0, "runtime {elapsed:?}");
    println!(
        "criterion 10: PASS - tau 1e-5: casg@100 {:.2} vs fd@100 {:.2}, dominance holds on 20..=200; tau 0.1 fractions above 0.8; {elapsed:.1?}",
        casg.fraction_at(100.0),
        fd.fraction_at(100.0)
    );
}

/// Criterion 11: linear-time scaling of the spectrum solver, median
/// wall-time growth at most 2.5x per doubling from d = 2^10 to 2^18.
#[test]
fn criterion_11_linear_time_scaling() {
    let dims: Vec<usize> = (10..=18).map(|p| 1usize << p).collect();
    let mut inputs = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(11_000);
    for &d in &dims {
        // Mixed-sign eigenvalues with positive sum; a realistic scan depth.
        let mut eigs: Vec<f64> = (0..d)
            .map(|_| 10f64.powf(rng.random_range(-1.0..1.0)))
            .collect();
        for e in eigs.iter_mut().take(d / 8) {
            *e = -*e * 0.01;
        }
        eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        inputs.push(DVector::from_vec(eigs));
    }
    let reps = 15;
    let mut times = vec![Vec::with_capacity(reps); dims.len()];
    // Round-robin over sizes so load spikes hit all of them alike.
    for _ in 0..reps {
        for (i, eigs) in inputs.iter().enumerate() {
            let t0 = Instant::now();
            let sol = optimal_spectrum(eigs, 0.1, 1.0).unwrap();
            let elapsed = t0.elapsed().as_secs_f64();
            assert!(sol.lambda.len() == dims[i]);
            times[i].push(elapsed);
        }
    }
    let medians: Vec<f64> = times
        .iter()
        .map(|t| {
            let mut s = t.clone();
            s.sort_by(|a, b| a.partial_cmp(b).unwrap());
            s[s.len() / 2]
        })
        .collect();
    let mut ratios = Vec::new();
    for w in medians.windows(2) {
        ratios.push(w[1] / w[0]);
        assert!(
            w[1] <= w[0] * 2.5,
            "doubling grew {}x (medians {medians:?})",
            w[1] / w[0]
        );
    }
    println!(
        "criterion 11: PASS - medians {:?} us, per-doubling ratios {:?}",
        medians.iter().map(|m| (m * 1e6).round()).collect::<Vec<_>>(),
        ratios.iter().map(|r| (r * 100.0).round() / 100.0).collect::<Vec<_>>()
    );
}

/// Statistical conformance of the evaluation noise stream (harness
/// invariant): mean within 3 sigma/sqrt(N), variance within 5%.
#[test]
fn noise_model_conformance() {
    let problem = builtin_problem("quad_well_d4", &OdeCoefficients::default())
        .unwrap()
        .with_sigma(0.3);
    let x = problem.start().clone();
    let clean = problem.eval_noiseless(&x).unwrap();
    let mut stream = problem.noisy(77);
    let n = 1_000_000;
    let (mut sum, mut sumsq) = (0.0, 0.0);
    for _ in 0..n {
        let e = stream.eval(&x).unwrap() - clean;
        sum += e;
        sumsq += e * e;
    }
    let mean = sum / n as f64;
    let var = sumsq / n as f64 - mean * mean;
    assert!(mean.abs() <= 3.0 * 0.3 / (n as f64).sqrt());
    assert!((var - 0.09).abs() <= 0.05 * 0.09);
}

/// The paired-estimator check of the global-model framework: on a quadratic
/// with a dense history, curvature from the model costs at most twice the
/// exact-curvature mean squared error.
#[test]
fn model_curvature_within_twice_exact() {
    let hess = nalgebra::dmatrix![4.0, 1.0; 1.0, 1.5];
    let f = |x: &DVector<f64>| 0.5 * (x.transpose() * &hess * x)[(0, 0)];
    let mut rng = ChaCha8Rng::seed_from_u64(123);
    let mut history = casg::history::EvaluationHistory::new();
    for _ in 0..200 {
        let x = DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0));
        let y = f(&x);
        history.push(x, y).unwrap();
    }
    let model = fit_rbf(history.records(), 0.0).unwrap();
    let x0 = DVector::zeros(2);
    let sigma = 1e-3;
    let h = 0.2;
    let spec_exact = CurvatureSpec::new(hess.clone(), sigma, h).unwrap();
    let spec_model = CurvatureSpec::new(model.hessian(&x0), sigma, h).unwrap();
    let mse_of = |spec: &CurvatureSpec| {
        let (sample, _) = casg_sample_set(spec, &x0).unwrap();
        let run = |trial_rng: &mut ChaCha8Rng| {
            let mut values = Vec::new();
            let mut base = 0.0;
            for (i, p) in sample.all_points().enumerate() {
                let noisy =
                    f(p) + sigma * Distribution::<f64>::sample(&StandardNormal, trial_rng);
                if i == 0 {
                    base = noisy;
                } else {
                    values.push(noisy);
                }
            }
            let delta = DVector::from_fn(2, |i, _| values[i] - base);
            simplex_gradient(&sample.difference_matrix(), &delta)
        };
        mse_monte_carlo(run, &DVector::zeros(2), 100 * 1000, 9).unwrap().mean
    };
    let exact = mse_of(&spec_exact);
    let modeled = mse_of(&spec_model);
    assert!(
        modeled <= 2.0 * exact,
        "model-curvature mse {modeled} vs exact {exact}"
    );
}
