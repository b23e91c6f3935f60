//! Solver correctness against independent oracles: bisection-based candidate
//! residuals, the all-active-sets reference solver, a grid-plus-polish
//! minimizer for the two-dimensional case, and random-search optimality.

#[path = "support/mod.rs"]
mod support;

use casg::simplex::{objective, CurvatureSpec, DifferenceMatrix};
use casg::solver::{
    active_set_candidate, casg_sample_set, objective_lower_bound, optimal_spectrum,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::{
    grid_polish_best_2d, naive_sigma_star, random_eigs, random_feasible_design,
    spectrum_objective,
};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}

#[test]
fn candidate_satisfies_pinned_residual_equation() {
    // For a nonempty active set the returned scalar must satisfy
    // a^{3/2} = sigma sqrt(2 d h^2) sum_{i>J} sqrt(D_i) + sqrt(a) h^2 sum_{i<=J} D_i.
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut checked = 0;
    while checked < 100 {
        let d = [2usize, 3, 4, 6, 8, 16][rng.random_range(0..6)];
        let eigs = random_eigs(d, -2.0, 2.0, true, &mut rng);
        let k = eigs.iter().filter(|&&e| e <= 0.0).count();
        let pinned = rng.random_range(k.max(1)..d.max(k.max(1) + 1)).min(d - 1);
        if pinned >= d || eigs[pinned] <= 0.0 {
            continue;
        }
        let sigma = 10f64.powf(rng.random_range(-3.0..0.0));
        let h = 10f64.powf(rng.random_range(-1.0..1.0));
        let c1: f64 = eigs.iter().skip(pinned).map(|e| e.sqrt()).sum();
        let c2: f64 = eigs.iter().take(pinned).sum();
        let Ok((_, a)) = active_set_candidate(pinned, eigs.as_slice(), sigma, h, c1, c2) else {
            continue;
        };
        let lhs = a.powf(1.5);
        let rhs = sigma * (2.0 * d as f64 * h * h).sqrt() * c1 + a.sqrt() * c2 * h * h;
        assert!(
            rel(lhs, rhs) <= 1e-9,
            "pinned residual violated: {lhs} vs {rhs} (d={d}, pinned={pinned})"
        );
        checked += 1;
    }
}

#[test]
fn candidate_satisfies_empty_set_fixed_point() {
    // For the empty active set: a = (1/a) (sigma sqrt((2d/D1)(a^2/2 + K)) C
    // + (a^2/2 + K)) with K = 2 sigma^2 d (d+1) and C = sum_{i>=2} sqrt(D_i).
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..100 {
        let d = [2usize, 4, 8][rng.random_range(0..3)];
        let eigs = random_eigs(d, -2.0, 2.0, false, &mut rng);
        let sigma = 10f64.powf(rng.random_range(-3.0..0.0));
        let h = 10f64.powf(rng.random_range(-1.0..1.0));
        let c1: f64 = eigs.iter().map(|e| e.sqrt()).sum();
        let (_, a) = active_set_candidate(0, eigs.as_slice(), sigma, h, c1, 0.0).unwrap();
        let df = d as f64;
        let k = 2.0 * sigma * sigma * df * (df + 1.0);
        let c: f64 = eigs.iter().skip(1).map(|e| e.sqrt()).sum();
        let inner = a * a / 2.0 + k;
        let rhs = (sigma * ((2.0 * df / eigs[0]) * inner).sqrt() * c + inner) / a;
        assert!(rel(a, rhs) <= 1e-9, "fixed point violated: {a} vs {rhs}");
    }
}

#[test]
fn cubic_branches_verified_by_substitution() {
    // Constructed instances with each discriminant sign; the root of
    // x^3 - c2 x - c1 = 0 is verified by substitution.
    let cases: [(usize, Vec<f64>, f64, f64); 2] = [
        // Radical branch: negative pinned mass makes c2 < 0.
        (1, vec![-3.0, 0.5, 2.0, 4.0], 0.2, 1.0),
        // Trigonometric branch: heavy positive pinned mass, tiny noise.
        (2, vec![3.0, 4.0, 5.0, 6.0], 1e-5, 1.0),
    ];
    for (pinned, eigs, sigma, h) in cases {
        let c1: f64 = eigs.iter().skip(pinned).map(|e: &f64| e.sqrt()).sum();
        let c2: f64 = eigs.iter().take(pinned).sum();
        let (_, a) = active_set_candidate(pinned, &eigs, sigma, h, c1, c2).unwrap();
        let d = eigs.len() as f64;
        let c1s = sigma * (2.0 * d * h * h).sqrt() * c1;
        let c2s = h * h * c2;
        let disc = 27.0 * c1s * c1s - 4.0 * c2s * c2s * c2s;
        if pinned == 1 {
            assert!(disc >= 0.0, "expected the radical branch");
        } else {
            assert!(disc < 0.0, "expected the trigonometric branch");
        }
        let x = a.sqrt();
        assert!(
            (x * x * x - c2s * x - c1s).abs() <= 1e-9 * (1.0 + (x * x * x).abs()),
            "root substitution failed: disc {disc}, x {x}"
        );
        assert!(a > 0.0);
    }
}

#[test]
fn matches_all_active_sets_reference_solver() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..60 {
        let d = rng.random_range(1..=64usize);
        let mut eigs = random_eigs(d, -2.0, 2.0, true, &mut rng);
        if eigs.iter().sum::<f64>() < 0.0 {
            eigs = DVector::from_iterator(d, eigs.iter().rev().map(|v| -v));
        }
        let sigma = 10f64.powf(rng.random_range(-3.0..0.5));
        let h = 10f64.powf(rng.random_range(-1.0..1.0));
        let fast = optimal_spectrum(&eigs, sigma, h).unwrap();
        let (slow_lambda, slow_pinned) = naive_sigma_star(eigs.as_slice(), sigma, h);
        assert_eq!(
            fast.pinned, slow_pinned,
            "active-set size mismatch on trial {trial} (d={d})"
        );
        for (i, slow) in slow_lambda.iter().enumerate() {
            assert!(
                (fast.lambda[i] - slow).abs() <= 1e-10 * (1.0 + slow.abs()),
                "lambda[{i}] mismatch on trial {trial}: {} vs {slow}",
                fast.lambda[i],
            );
        }
    }
}

#[test]
fn first_order_conditions_hold_at_the_solution() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let d = rng.random_range(2..=32usize);
        let mut eigs = random_eigs(d, -2.0, 2.0, true, &mut rng);
        if eigs.iter().sum::<f64>() < 0.0 {
            eigs = DVector::from_iterator(d, eigs.iter().rev().map(|v| -v));
        }
        if eigs.iter().sum::<f64>() == 0.0 {
            continue;
        }
        let sigma = 10f64.powf(rng.random_range(-2.0..0.0));
        let h = 10f64.powf(rng.random_range(-0.5..0.5));
        let sol = optimal_spectrum(&eigs, sigma, h).unwrap();
        let a = sol.weighted_trace;
        let lmax = sol.lambda[0];
        let df = d as f64;
        if sol.pinned == d {
            continue;
        }
        // Free coordinates balance the two stationarity terms.
        for i in sol.pinned.max(1)..d {
            let t1 = eigs[i] * a / (2.0 * df * lmax);
            let t2 = sigma * sigma / (sol.lambda[i] * sol.lambda[i]);
            assert!(
                rel(t1, t2) <= 1e-8,
                "stationarity violated at {i}: {t1} vs {t2}"
            );
        }
        if sol.pinned == 0 {
            let t1 = eigs[0] * a / (2.0 * df * lmax);
            let t2 = a * a / (4.0 * df * lmax * lmax)
                + sigma * sigma * (df + 1.0) / (lmax * lmax);
            assert!(rel(t1, t2) <= 1e-8, "first-coordinate stationarity: {t1} vs {t2}");
        }
        // Monotone order and boundary pinning.
        for i in 1..d {
            assert!(sol.lambda[i] <= sol.lambda[i - 1] * (1.0 + 1e-12));
        }
        for i in 0..sol.pinned {
            assert_eq!(sol.lambda[i], h * h);
        }
    }
}

#[test]
fn two_dim_grid_polish_oracle() {
    // d = 2, D = (1, 2), sigma = 0.1, h = 1: the solver's objective matches
    // exhaustive grid search with local refinement to 1e-5 relative.
    let eigs = DVector::from_vec(vec![1.0, 2.0]);
    let (sigma, h) = (0.1, 1.0);
    let sol = optimal_spectrum(&eigs, sigma, h).unwrap();
    let solver_value = spectrum_objective(eigs.as_slice(), sol.lambda.as_slice(), sigma);
    let (grid_value, grid_lambda) = grid_polish_best_2d(&[1.0, 2.0], sigma, h, 2000);
    assert!(
        (solver_value - grid_value).abs() <= 1e-5 * grid_value,
        "solver {solver_value} vs grid {grid_value} at {grid_lambda:?}"
    );
    assert!(solver_value <= grid_value * (1.0 + 1e-9));
}

#[test]
fn scaling_limits_behave() {
    let eigs = DVector::from_vec(vec![0.5, 1.0, 2.0, 4.0]);
    let h = 1.0;
    // Vanishing noise: nothing pinned, spectrum shrinks.
    let small = optimal_spectrum(&eigs, 1e-9, h).unwrap();
    assert_eq!(small.pinned, 0);
    assert!(small.lambda.iter().all(|&l| l < 1e-3));
    // Dominant noise: everything pinned at the radius.
    let large = optimal_spectrum(&eigs, 1e6, h).unwrap();
    assert_eq!(large.pinned, 4);
    assert!(large.lambda.iter().all(|&l| l == 1.0));
}

#[test]
fn random_search_never_beats_the_construction() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..6 {
        let d = [2usize, 4][rng.random_range(0..2)];
        let eigs = random_eigs(d, -1.5, 1.5, true, &mut rng);
        let hess = support::random_symmetric(&eigs, &mut rng);
        let sigma = 10f64.powf(rng.random_range(-2.0..0.0));
        let h = 10f64.powf(rng.random_range(-0.5..0.5));
        let spec = CurvatureSpec::new(hess, sigma, h).unwrap();
        let (_, result) = casg_sample_set(&spec, &DVector::zeros(d)).unwrap();
        for _ in 0..20_000 {
            let s = DifferenceMatrix::new(random_feasible_design(d, h, &mut rng));
            let value = objective(&s, &spec);
            assert!(
                result.objective_value <= value * (1.0 + 1e-9),
                "random design beat the construction: {} vs {}",
                value,
                result.objective_value
            );
        }
    }
}

#[test]
fn lower_bound_holds_for_random_factors() {
    // The identity-left-factor bound is below the objective of any design
    // sharing the spectrum, for any mixing matrix.
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let eigs = random_eigs(4, -1.0, 1.0, true, &mut rng);
    let spec = CurvatureSpec::new(DMatrix::from_diagonal(&eigs), 0.1, 1.0).unwrap();
    for _ in 0..1000 {
        let sigmas = DVector::from_fn(4, |_, _| 10f64.powf(rng.random_range(-2.0..0.0)));
        let v = casg::linalg::random_orthogonal(4, &mut rng);
        let design = DifferenceMatrix::new(DMatrix::from_diagonal(&sigmas) * v.transpose());
        let bound = objective_lower_bound(&spec, &sigmas);
        let value = objective(&design, &spec);
        assert!(
            bound <= value * (1.0 + 1e-9) + 1e-300,
            "bound {bound} above objective {value}"
        );
    }
}

#[test]
fn hadamard_alignment_of_the_design() {
    // 1/sqrt(d) is a right singular vector of the optimal design paired with
    // the largest singular value.
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for d in [2usize, 4, 8] {
        let eigs = random_eigs(d, -1.0, 1.0, true, &mut rng);
        let hess = support::random_symmetric(&eigs, &mut rng);
        let spec = CurvatureSpec::new(hess, 0.2, 0.8).unwrap();
        let (_, result) = casg_sample_set(&spec, &DVector::zeros(d)).unwrap();
        let ones = DVector::from_element(d, 1.0 / (d as f64).sqrt());
        let image = result.s_star.matrix() * ones;
        let sigma_max = result.sigma.max();
        assert!(
            (image.norm() - sigma_max).abs() <= 1e-10 * (1.0 + sigma_max),
            "d={d}: |S 1|/sqrt(d) = {} vs sigma_max {sigma_max}",
            image.norm()
        );
    }
}
