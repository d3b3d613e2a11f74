//! Distance exploration: greedy selection of batch points that maximize the
//! minimum squared distance to all current (and just-selected) observations,
//! over a fixed pool of Sobol candidates.
//!
//! The pool keeps an incremental min-squared-distance cache so a whole batch
//! costs O(M B d) regardless of any optimizer budget. A selected candidate
//! is consumed permanently: once it joins the observation set its min
//! distance is zero forever.

use std::time::{Duration, Instant};

use crate::acquisition::{self, RefineBudget};
use crate::error::{Error, Result};

/// How a proposed point was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum PointRole {
    Ucb,
    De,
    Rand,
    Bucb,
    Cl,
}

/// One batch of proposed evaluation points.
#[derive(Debug, Clone)]
pub struct BatchProposal {
    pub points: Vec<Vec<f64>>,
    pub roles: Vec<PointRole>,
    /// Wall-clock duration of the selection phase.
    pub selection_time: Duration,
    /// `maximize_acquisition` invocations spent producing this batch.
    pub inner_opt_calls: u64,
}

/// Sobol candidate pool with the incremental exploration-score cache.
///
/// `min_sq_dist[m]` always equals the minimum weighted squared distance from
/// candidate m to every observation pushed through `update` so far (infinity
/// before the first update). Distances use l(a,b) = sum_j (a_j-b_j)^2/sigma_j
/// with sigma defaulting to ones (isotropic squared Euclidean).
#[derive(Debug, Clone)]
pub struct CandidatePool {
    points: Vec<Vec<f64>>,
    min_sq_dist: Vec<f64>,
    alive: Vec<bool>,
    inv_sigma: Vec<f64>,
    dim: usize,
    n_alive: usize,
    dist_ops: u64,
}

impl CandidatePool {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points.first().map_or(0, |p| p.len());
        Self::with_weights(points, vec![1.0; dim])
    }

    /// Pool with anisotropic distance weights sigma_j.
    pub fn with_weights(points: Vec<Vec<f64>>, sigma: Vec<f64>) -> Result<Self> {
        let dim = points.first().map_or(sigma.len(), |p| p.len());
        if sigma.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: sigma.len() });
        }
        if !sigma.iter().all(|&s| s > 0.0) {
            return Err(Error::InvalidConfig("distance weights must be positive".into()));
        }
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
            }
        }
        let m = points.len();
        Ok(Self {
            points,
            min_sq_dist: vec![f64::INFINITY; m],
            alive: vec![true; m],
            inv_sigma: sigma.into_iter().map(|s| 1.0 / s).collect(),
            dim,
            n_alive: m,
            dist_ops: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn n_alive(&self) -> usize {
        self.n_alive
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn alive(&self) -> &[bool] {
        &self.alive
    }

    pub fn min_sq_dists(&self) -> &[f64] {
        &self.min_sq_dist
    }

    /// Candidate-observation distance evaluations performed so far.
    pub fn dist_ops(&self) -> u64 {
        self.dist_ops
    }

    fn weighted_sq_dist(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .zip(&self.inv_sigma)
            .map(|((x, y), w)| (x - y) * (x - y) * w)
            .sum()
    }

    /// Fold new observations into the cache:
    /// `min_sq_dist[m] <- min(min_sq_dist[m], min over obs of l(s_m, x))`.
    pub fn update(&mut self, new_obs: &[Vec<f64>]) -> Result<()> {
        for x in new_obs {
            if x.len() != self.dim {
                return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
            }
        }
        for m in 0..self.points.len() {
            if !self.alive[m] {
                continue;
            }
            for x in new_obs {
                let d = self.weighted_sq_dist(&self.points[m], x);
                self.dist_ops += 1;
                if d < self.min_sq_dist[m] {
                    self.min_sq_dist[m] = d;
                }
            }
        }
        Ok(())
    }

    /// Pop the alive candidate with the largest cached min distance
    /// (lowest index on ties) and mark it consumed.
    pub fn farthest_point(&mut self) -> Result<Vec<f64>> {
        let mut best: Option<(usize, f64)> = None;
        for m in 0..self.points.len() {
            if !self.alive[m] {
                continue;
            }
            match best {
                Some((_, v)) if self.min_sq_dist[m] <= v => {}
                _ => best = Some((m, self.min_sq_dist[m])),
            }
        }
        let Some((idx, _)) = best else {
            return Err(Error::PoolExhausted {
                size: self.points.len(),
                consumed: self.points.len() - self.n_alive,
            });
        };
        self.alive[idx] = false;
        self.n_alive -= 1;
        Ok(self.points[idx].clone())
    }

    /// Algorithm loop for one batch: augment with the UCB point, then pick
    /// and self-augment B-1 farthest points.
    pub fn fill_batch_de(&mut self, first_point: Vec<f64>, batch_size: usize) -> Result<BatchProposal> {
        if batch_size < 1 {
            return Err(Error::InvalidConfig("batch size must be >= 1".into()));
        }
        if self.n_alive < batch_size - 1 {
            return Err(Error::PoolExhausted {
                size: self.points.len(),
                consumed: self.points.len() - self.n_alive,
            });
        }
        let start = Instant::now();
        let mut points = Vec::with_capacity(batch_size);
        let mut roles = Vec::with_capacity(batch_size);
        self.update(std::slice::from_ref(&first_point))?;
        points.push(first_point);
        roles.push(PointRole::Ucb);
        for _ in 1..batch_size {
            let pick = self.farthest_point()?;
            self.update(std::slice::from_ref(&pick))?;
            points.push(pick);
            roles.push(PointRole::De);
        }
        Ok(BatchProposal { points, roles, selection_time: start.elapsed(), inner_opt_calls: 0 })
    }
}

/// Squared Euclidean distance from `x` to its nearest point in `obs`.
pub fn min_sq_dist_to(x: &[f64], obs: &[Vec<f64>]) -> f64 {
    obs.iter()
        .map(|o| x.iter().zip(o).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

/// Continuous-domain farthest point: maximize min_i ||x - x_i||^2 with the
/// multi-start refiner over a fresh Sobol candidate set. Used by the
/// continuous distance-exploration arm of the M-sweep study.
pub fn farthest_point_continuous(
    obs: &[Vec<f64>],
    dim: usize,
    budget: &RefineBudget,
    seed: u64,
) -> Result<Vec<f64>> {
    farthest_point_continuous_with(obs, dim, budget, seed, crate::sobol::default_table())
}

pub fn farthest_point_continuous_with(
    obs: &[Vec<f64>],
    dim: usize,
    budget: &RefineBudget,
    seed: u64,
    table: &crate::sobol::DirectionTable,
) -> Result<Vec<f64>> {
    if obs.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let candidates =
        acquisition::acquisition_candidates_with_table(dim, acquisition::ACQ_CANDIDATES_PER_DIM, table)?;
    acquisition::maximize_acquisition(
        |x| Ok(min_sq_dist_to(x, obs)),
        dim,
        &candidates,
        budget,
        seed,
    )
}
