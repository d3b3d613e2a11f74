//! UCB acquisition and its maximization over the unit hypercube.
//!
//! The maximizer scans a finite candidate set, then refines the best
//! `n_starts` candidates with a coordinate pattern search (step halving,
//! clamped to the unit cube). Setting `max_evals_per_start = 0` disables
//! refinement, which constrains the argmax to the candidate set.

use std::cell::Cell;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::gp::GpModel;
use crate::sobol::{self, DirectionTable};

/// GP-UCB parameters. beta_t = 2 log(N_t^2 pi^2 / (6 delta)) unless overridden.
#[derive(Debug, Clone, Copy)]
pub struct UcbParams {
    pub delta: f64,
    pub beta_override: Option<f64>,
}

impl Default for UcbParams {
    fn default() -> Self {
        Self { delta: 0.1, beta_override: None }
    }
}

/// Multi-start refinement budget. `max_evals_per_start = 0` disables the
/// local search and the maximizer returns the best raw candidate.
#[derive(Debug, Clone, Copy)]
pub struct RefineBudget {
    pub n_starts: usize,
    pub max_evals_per_start: usize,
    pub step_init: f64,
    pub step_min: f64,
}

impl RefineBudget {
    pub fn for_dim(dim: usize) -> Self {
        Self { n_starts: 5, max_evals_per_start: 50 * dim.max(1), step_init: 0.05, step_min: 1e-4 }
    }
}

/// Sobol candidates drawn per inner maximization, per dimension.
pub const ACQ_CANDIDATES_PER_DIM: usize = 100;

/// The candidate set every inner maximization uses by default:
/// `100 d` Sobol points with the origin skipped.
pub fn default_acquisition_candidates(dim: usize) -> Result<Vec<Vec<f64>>> {
    sobol::generate(dim, ACQ_CANDIDATES_PER_DIM * dim, sobol::DEFAULT_SKIP)
}

pub fn acquisition_candidates_with_table(
    dim: usize,
    per_dim: usize,
    table: &DirectionTable,
) -> Result<Vec<Vec<f64>>> {
    sobol::generate_with_table(dim, per_dim * dim, sobol::DEFAULT_SKIP, table)
}

/// beta_t for `n_obs` observations so far.
pub fn beta_t(n_obs: usize, params: &UcbParams) -> f64 {
    if let Some(beta) = params.beta_override {
        return beta;
    }
    let n = n_obs.max(1) as f64;
    2.0 * (n * n * std::f64::consts::PI.powi(2) / (6.0 * params.delta)).ln()
}

/// alpha_UCB(x) = mu(x) + sqrt(beta_t) sigma(x), with N_t taken from the model.
pub fn ucb_value(model: &GpModel, x: &[f64], t: usize, params: &UcbParams) -> Result<f64> {
    if t < 1 {
        return Err(Error::InvalidConfig("iteration index t must be >= 1".into()));
    }
    let (mean, variance) = model.posterior(x)?;
    Ok(mean + beta_t(model.n_train(), params).sqrt() * variance.sqrt())
}

thread_local! {
    static INNER_OPT_CALLS: Cell<u64> = const { Cell::new(0) };
}

/// Number of `maximize_acquisition` invocations on this thread so far.
/// Policies report per-batch deltas of this counter.
pub fn inner_opt_calls() -> u64 {
    INNER_OPT_CALLS.with(|c| c.get())
}

/// Maximize `score` over `[0,1]^dim`: scan all candidates, refine the top
/// `n_starts` with pattern search, return the best point found.
/// Deterministic given `rng_seed`; ties keep the lowest candidate index.
pub fn maximize_acquisition<F>(
    score: F,
    dim: usize,
    candidates: &[Vec<f64>],
    budget: &RefineBudget,
    rng_seed: u64,
) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    if candidates.is_empty() {
        return Err(Error::InvalidConfig("candidate set is empty".into()));
    }
    if let Some(bad) = candidates.iter().find(|c| c.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, got: bad.len() });
    }
    INNER_OPT_CALLS.with(|c| c.set(c.get() + 1));

    let eval = |x: &[f64]| -> Result<f64> {
        let v = score(x)?;
        if !v.is_finite() {
            return Err(Error::NonFiniteScore { point: x.to_vec() });
        }
        Ok(v)
    };

    let mut scores = Vec::with_capacity(candidates.len());
    for c in candidates {
        scores.push(eval(c)?);
    }
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&i, &j| scores[j].partial_cmp(&scores[i]).unwrap().then(i.cmp(&j)));
    let starts = &order[..budget.n_starts.max(1).min(order.len())];

    let mut best_point = candidates[starts[0]].clone();
    let mut best_score = scores[starts[0]];
    for (rank, &ci) in starts.iter().enumerate() {
        let mut rng = ChaCha12Rng::seed_from_u64(
            rng_seed ^ (rank as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
        );
        let (point, value) =
            pattern_search(&eval, &candidates[ci], scores[ci], budget, &mut rng)?;
        if value > best_score {
            best_score = value;
            best_point = point;
        }
    }
    Ok(best_point)
}

/// Coordinate pattern search: probe +/- step on each coordinate (seeded
/// sweep order), move on strict improvement, halve the step on a full
/// sweep without improvement.
fn pattern_search<E>(
    eval: &E,
    start: &[f64],
    start_score: f64,
    budget: &RefineBudget,
    rng: &mut ChaCha12Rng,
) -> Result<(Vec<f64>, f64)>
where
    E: Fn(&[f64]) -> Result<f64>,
{
    let mut x = start.to_vec();
    let mut fx = start_score;
    let mut step = budget.step_init;
    let mut evals = 0usize;
    let mut dims: Vec<usize> = (0..x.len()).collect();

    while step >= budget.step_min && evals < budget.max_evals_per_start {
        let mut improved = false;
        dims.shuffle(rng);
        'sweep: for &j in &dims {
            for dir in [1.0, -1.0] {
                if evals >= budget.max_evals_per_start {
                    break 'sweep;
                }
                let coord = (x[j] + dir * step).clamp(0.0, 1.0);
                if coord == x[j] {
                    continue;
                }
                let mut y = x.clone();
                y[j] = coord;
                let fy = eval(&y)?;
                evals += 1;
                if fy > fx {
                    x = y;
                    fx = fy;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok((x, fx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::GpModel;
    use proptest::prelude::*;

    fn sq_dist_to(center: f64) -> impl Fn(&[f64]) -> Result<f64> {
        move |x: &[f64]| Ok(-x.iter().map(|&v| (v - center) * (v - center)).sum::<f64>())
    }

    #[test]
    fn beta_override_zero_collapses_to_mean() {
        let model = GpModel::fit_fixed(&[vec![0.2], vec![0.8]], &[-1.0, 1.0], 1e-4, 0.3).unwrap();
        let params = UcbParams { delta: 0.1, beta_override: Some(0.0) };
        let x = [0.4];
        let ucb = ucb_value(&model, &x, 1, &params).unwrap();
        let (mean, _) = model.posterior(&x).unwrap();
        assert_eq!(ucb, mean);
    }

    #[test]
    fn beta_override_four_adds_two_sigma() {
        // mu = 0.5, sigma = 0.25 -> 0.5 + 2 * 0.25 = 1.0
        let mean = 0.5;
        let sigma = 0.25;
        let beta = beta_t(10, &UcbParams { delta: 0.1, beta_override: Some(4.0) });
        assert_eq!(mean + beta.sqrt() * sigma, 1.0);
    }

    #[test]
    fn beta_schedule_matches_formula() {
        let beta = beta_t(10, &UcbParams::default());
        assert!((beta - 14.810911162905764).abs() < 1e-9, "{beta}");
        assert!((beta - 14.81).abs() < 1e-2);
        // positive for any data size
        assert!(beta_t(1, &UcbParams::default()) > 0.0);
    }

    #[test]
    fn ucb_rejects_t_zero() {
        let model = GpModel::fit_fixed(&[vec![0.2]], &[0.0], 1e-4, 0.3).unwrap();
        assert!(ucb_value(&model, &[0.1], 0, &UcbParams::default()).is_err());
    }

    #[test]
    fn maximize_finds_center_of_quadratic() {
        let candidates = crate::sobol::generate(2, 128, 1).unwrap();
        let budget = RefineBudget::for_dim(2);
        let best =
            maximize_acquisition(sq_dist_to(0.5), 2, &candidates, &budget, 17).unwrap();
        for &v in &best {
            assert!((v - 0.5).abs() < 1e-3, "{best:?}");
        }
    }

    #[test]
    fn refinement_disabled_returns_single_candidate() {
        let candidates = vec![vec![0.3, 0.7]];
        let budget =
            RefineBudget { n_starts: 1, max_evals_per_start: 0, step_init: 0.05, step_min: 1e-4 };
        let best = maximize_acquisition(sq_dist_to(0.0), 2, &candidates, &budget, 5).unwrap();
        assert_eq!(best, vec![0.3, 0.7]);
    }

    #[test]
    fn constant_score_returns_lowest_index_candidate() {
        let candidates = crate::sobol::generate(2, 32, 1).unwrap();
        let budget = RefineBudget::for_dim(2);
        let best = maximize_acquisition(|_| Ok(1.5), 2, &candidates, &budget, 9).unwrap();
        assert_eq!(best, candidates[0]);
    }

    #[test]
    fn non_finite_score_is_reported_with_point() {
        let candidates = vec![vec![0.1], vec![0.9]];
        let budget = RefineBudget::for_dim(1);
        let err = maximize_acquisition(
            |x| Ok(if x[0] > 0.5 { f64::NAN } else { 0.0 }),
            1,
            &candidates,
            &budget,
            1,
        )
        .unwrap_err();
        match err {
            Error::NonFiniteScore { point } => assert_eq!(point, vec![0.9]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn counter_increments_per_invocation() {
        let before = inner_opt_calls();
        let candidates = vec![vec![0.5]];
        let budget =
            RefineBudget { n_starts: 1, max_evals_per_start: 0, step_init: 0.05, step_min: 1e-4 };
        maximize_acquisition(|_| Ok(0.0), 1, &candidates, &budget, 0).unwrap();
        maximize_acquisition(|_| Ok(0.0), 1, &candidates, &budget, 0).unwrap();
        assert_eq!(inner_opt_calls() - before, 2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        /// Refinement never loses to the raw candidate set and stays in bounds.
        #[test]
        fn prop_result_beats_candidates_and_stays_in_cube(
            seed in 0u64..1000,
            cx in 0.0f64..1.0,
            cy in 0.0f64..1.0,
        ) {
            let candidates = crate::sobol::generate(2, 64, 1).unwrap();
            let budget = RefineBudget::for_dim(2);
            let score = move |x: &[f64]| {
                Ok(-((x[0] - cx) * (x[0] - cx) + (x[1] - cy) * (x[1] - cy)))
            };
            let best = maximize_acquisition(score, 2, &candidates, &budget, seed).unwrap();
            prop_assert!(best.iter().all(|&v| (0.0..=1.0).contains(&v)));
            let best_val = score(&best).unwrap();
            for c in &candidates {
                prop_assert!(best_val >= score(c).unwrap());
            }
        }

        /// Scaling the score by a positive power of two (exact in f64)
        /// leaves the returned point unchanged.
        #[test]
        fn prop_argmax_invariant_under_positive_scaling(
            seed in 0u64..1000,
            cx in 0.0f64..1.0,
            scale_pow in -3i32..=3,
        ) {
            let candidates = crate::sobol::generate(1, 64, 1).unwrap();
            let budget = RefineBudget::for_dim(1);
            let c = 2.0f64.powi(scale_pow);
            let base = move |x: &[f64]| Ok(-(x[0] - cx) * (x[0] - cx));
            let scaled = move |x: &[f64]| Ok(c * -((x[0] - cx) * (x[0] - cx)));
            let a = maximize_acquisition(base, 1, &candidates, &budget, seed).unwrap();
            let b = maximize_acquisition(scaled, 1, &candidates, &budget, seed).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
