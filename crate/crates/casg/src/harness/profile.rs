//! Data profiles: for each method, the fraction of random runs that reached
//! their problem's convergence threshold within a given budget, measured in
//! simplex-gradient units (total evaluations divided by the dimension).

use std::collections::BTreeMap;

use thiserror::Error;

use crate::harness::dfo::RunTrace;

/// Profile computation errors.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProfileError {
    #[error("no run records supplied")]
    EmptyRecordSet,
    #[error("tau must lie strictly between 0 and 1")]
    InvalidTau,
}

/// One method's profile curve: nondecreasing fractions over the budget grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileCurve {
    /// Method identifier.
    pub method: String,
    /// `(budget, fraction)` pairs on an integer budget grid.
    pub points: Vec<(f64, f64)>,
}

impl ProfileCurve {
    /// Fraction converged at the given budget (step function).
    pub fn fraction_at(&self, budget: f64) -> f64 {
        let mut value = 0.0;
        for &(b, f) in &self.points {
            if b <= budget {
                value = f;
            } else {
                break;
            }
        }
        value
    }
}

/// Computes data profiles from per-run traces.
///
/// A run on problem `p` converges at the first budget where its best value
/// satisfies `f(x0) - f <= ... >= (1 - tau) (f(x0) - f_L)`, with `f_L` the
/// lowest mean final value over the runs of any one method on `p`. Curves
/// are step functions over the integer budget grid up to the largest
/// recorded budget.
pub fn data_profile(runs: &[RunTrace], tau: f64) -> Result<Vec<ProfileCurve>, ProfileError> {
    if runs.is_empty() {
        return Err(ProfileError::EmptyRecordSet);
    }
    if !(tau > 0.0 && tau < 1.0) {
        return Err(ProfileError::InvalidTau);
    }
    // f_L per problem: the lowest average achieved value over any method.
    let mut by_problem_method: BTreeMap<(&str, &str), Vec<f64>> = BTreeMap::new();
    for run in runs {
        by_problem_method
            .entry((run.problem.as_str(), run.method.as_str()))
            .or_default()
            .push(run.final_best());
    }
    let mut f_lowest: BTreeMap<&str, f64> = BTreeMap::new();
    for ((problem, _), finals) in &by_problem_method {
        let mean = finals.iter().sum::<f64>() / finals.len() as f64;
        f_lowest
            .entry(problem)
            .and_modify(|v| *v = v.min(mean))
            .or_insert(mean);
    }
    let max_budget = runs
        .iter()
        .flat_map(|r| r.points.iter().map(|p| p.0))
        .fold(0.0f64, f64::max)
        .ceil() as usize;
    let mut methods: Vec<&str> = runs.iter().map(|r| r.method.as_str()).collect();
    methods.sort_unstable();
    methods.dedup();
    let mut curves = Vec::new();
    for method in methods {
        let method_runs: Vec<&RunTrace> = runs.iter().filter(|r| r.method == method).collect();
        let n = method_runs.len() as f64;
        // Convergence budget per run, if reached.
        let thresholds: Vec<Option<f64>> = method_runs
            .iter()
            .map(|run| {
                let f_l = f_lowest[run.problem.as_str()];
                let target = run.f_start - (1.0 - tau) * (run.f_start - f_l);
                run.points
                    .iter()
                    .find(|(_, best)| *best <= target)
                    .map(|(budget, _)| *budget)
            })
            .collect();
        let points = (0..=max_budget)
            .map(|b| {
                let budget = b as f64;
                let converged = thresholds
                    .iter()
                    .filter(|t| t.is_some_and(|tb| tb <= budget))
                    .count();
                (budget, converged as f64 / n)
            })
            .collect();
        curves.push(ProfileCurve {
            method: method.to_string(),
            points,
        });
    }
    Ok(curves)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(problem: &str, method: &str, f_start: f64, points: Vec<(f64, f64)>) -> RunTrace {
        RunTrace {
            problem: problem.into(),
            method: method.into(),
            h: 0.1,
            seed: 0,
            f_start,
            points,
        }
    }

    #[test]
    fn single_converging_run_is_a_step() {
        let runs = vec![trace("p", "m", 1.0, vec![(1.0, 1.0), (5.0, 0.0), (9.0, 0.0)])];
        let curves = data_profile(&runs, 0.5).unwrap();
        let c = &curves[0];
        assert_eq!(c.fraction_at(4.0), 0.0);
        assert_eq!(c.fraction_at(5.0), 1.0);
        assert_eq!(c.fraction_at(9.0), 1.0);
        // Nondecreasing in [0, 1].
        let mut last = 0.0;
        for &(_, f) in &c.points {
            assert!(f >= last && (0.0..=1.0).contains(&f));
            last = f;
        }
    }

    #[test]
    fn tau_near_one_converges_immediately() {
        let runs = vec![trace("p", "m", 1.0, vec![(2.0, 0.999), (5.0, 0.5)])];
        let curves = data_profile(&runs, 1.0 - 1e-12).unwrap();
        assert_eq!(curves[0].fraction_at(2.0), 1.0);
    }

    #[test]
    fn identical_records_identical_curves() {
        let pts = vec![(1.0, 0.8), (4.0, 0.2), (8.0, 0.05)];
        let runs = vec![
            trace("p", "a", 1.0, pts.clone()),
            trace("p", "b", 1.0, pts),
        ];
        let curves = data_profile(&runs, 0.3).unwrap();
        assert_eq!(curves[0].points, curves[1].points);
    }

    #[test]
    fn rejects_empty_and_bad_tau() {
        assert_eq!(data_profile(&[], 0.5).unwrap_err(), ProfileError::EmptyRecordSet);
        let runs = vec![trace("p", "m", 1.0, vec![(1.0, 0.0)])];
        assert_eq!(data_profile(&runs, 0.0).unwrap_err(), ProfileError::InvalidTau);
        assert_eq!(data_profile(&runs, 1.0).unwrap_err(), ProfileError::InvalidTau);
    }
}
