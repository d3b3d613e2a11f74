//! Batch policies behind one interface: pure random search, UCB-Rand,
//! GP-BUCB, Constant Liar, and the headline UCB-DE.
//!
//! All policies share the same acquisition optimizer and budget for their
//! UCB point, so per-batch cost differences come entirely from how the
//! remaining B-1 points are chosen. Proposals carry their selection wall
//! time and the number of inner-optimizer invocations spent.

use std::sync::Arc;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::acquisition::{
    acquisition_candidates_with_table, beta_t, inner_opt_calls, maximize_acquisition, ucb_value,
    RefineBudget, UcbParams, ACQ_CANDIDATES_PER_DIM,
};
use crate::batch_de::{BatchProposal, CandidatePool, PointRole};
use crate::derive_seed;
use crate::error::{Error, Result};
use crate::gp::{kernel_cross, GpModel, ObservationSet, MIN_VARIANCE};
use crate::sobol::{default_table, DirectionTable};

/// Names exposed by the policy registry.
pub const POLICY_NAMES: [&str; 5] = ["random", "ucb-rand", "bucb", "cl", "ucb-de"];

/// Internal variant used by the M-sweep comparison: distance exploration via
/// continuous maximization instead of the Sobol pool.
pub const CONTINUOUS_POLICY: &str = "ucb-de-cont";

/// A batch-selection strategy. Implementations are pure given
/// (model, obs, pool, seed), so separate runs may execute concurrently.
pub trait BatchPolicy: Send + Sync {
    fn name(&self) -> &'static str;

    fn propose(
        &self,
        model: &GpModel,
        obs: &ObservationSet,
        pool: &mut CandidatePool,
        batch_size: usize,
        t: usize,
        seed: u64,
    ) -> Result<BatchProposal>;

    /// Whether propose() already folded its own batch into the pool cache.
    fn updates_pool(&self) -> bool {
        false
    }
}

/// Shared knobs every policy is constructed with.
#[derive(Clone)]
pub struct PolicySettings {
    pub ucb: UcbParams,
    pub budget: RefineBudget,
    pub table: Arc<DirectionTable>,
    pub acq_per_dim: usize,
}

impl PolicySettings {
    pub fn for_dim(dim: usize) -> Self {
        Self {
            ucb: UcbParams::default(),
            budget: RefineBudget::for_dim(dim),
            table: Arc::new(default_table().clone()),
            acq_per_dim: ACQ_CANDIDATES_PER_DIM,
        }
    }
}

pub fn make_policy(name: &str, settings: PolicySettings) -> Result<Box<dyn BatchPolicy>> {
    match name {
        "random" => Ok(Box::new(RandomPolicy)),
        "ucb-rand" => Ok(Box::new(UcbRandPolicy { settings })),
        "bucb" => Ok(Box::new(BucbPolicy { settings })),
        "cl" => Ok(Box::new(ClPolicy { settings })),
        "ucb-de" => Ok(Box::new(UcbDePolicy { settings })),
        CONTINUOUS_POLICY => Ok(Box::new(UcbDeContinuousPolicy { settings })),
        _ => Err(Error::UnknownPolicy { name: name.into(), known: POLICY_NAMES.join(", ") }),
    }
}

fn candidates(settings: &PolicySettings, dim: usize) -> Result<Vec<Vec<f64>>> {
    acquisition_candidates_with_table(dim, settings.acq_per_dim, &settings.table)
}

/// argmax of the UCB acquisition; every UCB-first policy calls this with the
/// same derived seed so they coincide at B = 1.
fn ucb_first_point(
    model: &GpModel,
    settings: &PolicySettings,
    t: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let cands = candidates(settings, model.dim())?;
    maximize_acquisition(
        |x| ucb_value(model, x, t, &settings.ucb),
        model.dim(),
        &cands,
        &settings.budget,
        seed,
    )
}

fn uniform_point(rng: &mut ChaCha12Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.gen::<f64>()).collect()
}

fn require_batch(batch_size: usize) -> Result<()> {
    if batch_size < 1 {
        return Err(Error::InvalidConfig("batch size must be >= 1".into()));
    }
    Ok(())
}

/// Training inputs plus hallucinated batch points, with the Cholesky factor
/// extended one rank at a time.
///
/// Variance-only mode (GP-BUCB) keeps the batch-start mean function fixed;
/// lie mode (Constant Liar) refreshes the weights after each extension so
/// the mean moves too.
pub struct HallucinatedState {
    lengthscale: f64,
    noise_var: f64,
    jitter: f64,
    inputs: Vec<Vec<f64>>,
    chol: DMatrix<f64>,
    targets: Vec<f64>,
    base_n: usize,
    base_weights: DVector<f64>,
    ext_weights: Option<DVector<f64>>,
    lie: Option<f64>,
}

impl HallucinatedState {
    /// BUCB semantics: extensions update the predictive variance only.
    pub fn variance_only(model: &GpModel) -> Self {
        Self::build(model, None)
    }

    /// Constant-Liar semantics: each hallucinated point is observed at `lie`.
    pub fn with_lie(model: &GpModel, lie: f64) -> Self {
        Self::build(model, Some(lie))
    }

    fn build(model: &GpModel, lie: Option<f64>) -> Self {
        Self {
            lengthscale: model.lengthscale(),
            noise_var: model.noise_var(),
            jitter: model.jitter(),
            inputs: model.train_inputs().to_vec(),
            chol: model.chol().clone(),
            targets: model.train_targets().iter().copied().collect(),
            base_n: model.n_train(),
            base_weights: model.weights().clone(),
            ext_weights: lie.map(|_| model.weights().clone()),
            lie,
        }
    }

    pub fn n_points(&self) -> usize {
        self.inputs.len()
    }

    pub fn base_n(&self) -> usize {
        self.base_n
    }

    /// Outputs assigned to the hallucinated points (empty in variance-only mode).
    pub fn hallucinated_targets(&self) -> &[f64] {
        if self.lie.is_some() {
            &self.targets[self.base_n..]
        } else {
            &[]
        }
    }

    /// Extend the factor with one pending point. On a failed pivot the new
    /// diagonal entry gets escalating jitter before giving up.
    pub fn hallucinate(&mut self, x: &[f64]) -> Result<()> {
        let k_new = kernel_cross(&self.inputs, x, self.lengthscale);
        let l12 = self
            .chol
            .solve_lower_triangular(&k_new)
            .expect("cholesky factor has positive diagonal");
        let kxx = 1.0 + self.noise_var + self.jitter;
        let mut pivot = kxx - l12.norm_squared();
        if pivot <= 0.0 {
            let mut recovered = false;
            for extra in [1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4] {
                if pivot + extra > 0.0 {
                    pivot += extra;
                    recovered = true;
                    break;
                }
            }
            if !recovered {
                return Err(Error::SingularKernel {
                    lengthscale: self.lengthscale,
                    max_jitter: 1e-4,
                });
            }
        }
        let n = self.inputs.len();
        let mut grown = DMatrix::zeros(n + 1, n + 1);
        grown.view_mut((0, 0), (n, n)).copy_from(&self.chol);
        for j in 0..n {
            grown[(n, j)] = l12[j];
        }
        grown[(n, n)] = pivot.sqrt();
        self.chol = grown;
        self.inputs.push(x.to_vec());
        if let Some(lie) = self.lie {
            self.targets.push(lie);
            let y = DVector::from_vec(self.targets.clone());
            let z = self.chol.solve_lower_triangular(&y).expect("positive diagonal");
            let w = self.chol.tr_solve_lower_triangular(&z).expect("positive diagonal");
            self.ext_weights = Some(w);
        }
        Ok(())
    }

    pub fn mean(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        match &self.ext_weights {
            Some(w) => Ok(kernel_cross(&self.inputs, x, self.lengthscale).dot(w)),
            // mean stays the batch-start mean: base inputs and weights only
            None => {
                Ok(kernel_cross(&self.inputs[..self.base_n], x, self.lengthscale)
                    .dot(&self.base_weights))
            }
        }
    }

    pub fn variance(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let k = kernel_cross(&self.inputs, x, self.lengthscale);
        let v = self.chol.solve_lower_triangular(&k).expect("positive diagonal");
        Ok((1.0 - v.norm_squared()).max(MIN_VARIANCE))
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        let dim = self.inputs.first().map_or(0, |p| p.len());
        if x.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: x.len() });
        }
        Ok(())
    }
}

/// Pure random search: B points uniform in the unit cube.
pub struct RandomPolicy;

impl BatchPolicy for RandomPolicy {
    fn name(&self) -> &'static str {
        "random"
    }

    fn propose(
        &self,
        model: &GpModel,
        _obs: &ObservationSet,
        _pool: &mut CandidatePool,
        batch_size: usize,
        _t: usize,
        seed: u64,
    ) -> Result<BatchProposal> {
        let start = Instant::now();
        let calls0 = inner_opt_calls();
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let points: Vec<Vec<f64>> =
            (0..batch_size).map(|_| uniform_point(&mut rng, model.dim())).collect();
        Ok(BatchProposal {
            roles: vec![PointRole::Rand; points.len()],
            points,
            selection_time: start.elapsed(),
            inner_opt_calls: inner_opt_calls() - calls0,
        })
    }
}

/// GP-UCB first point, uniform random remainder.
pub struct UcbRandPolicy {
    pub settings: PolicySettings,
}

impl BatchPolicy for UcbRandPolicy {
    fn name(&self) -> &'static str {
        "ucb-rand"
    }

    fn propose(
        &self,
        model: &GpModel,
        _obs: &ObservationSet,
        _pool: &mut CandidatePool,
        batch_size: usize,
        t: usize,
        seed: u64,
    ) -> Result<BatchProposal> {
        require_batch(batch_size)?;
        let start = Instant::now();
        let calls0 = inner_opt_calls();
        let mut points = vec![ucb_first_point(model, &self.settings, t, derive_seed(seed, 0))?];
        let mut roles = vec![PointRole::Ucb];
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        for _ in 1..batch_size {
            points.push(uniform_point(&mut rng, model.dim()));
            roles.push(PointRole::Rand);
        }
        Ok(BatchProposal {
            points,
            roles,
            selection_time: start.elapsed(),
            inner_opt_calls: inner_opt_calls() - calls0,
        })
    }
}

/// GP-BUCB: each batch point maximizes mu_0(x) + sqrt(beta) sigma_b(x) where
/// sigma_b reflects the hallucinated points so far and mu_0 never moves.
pub struct BucbPolicy {
    pub settings: PolicySettings,
}

impl BatchPolicy for BucbPolicy {
    fn name(&self) -> &'static str {
        "bucb"
    }

    fn propose(
        &self,
        model: &GpModel,
        _obs: &ObservationSet,
        _pool: &mut CandidatePool,
        batch_size: usize,
        t: usize,
        seed: u64,
    ) -> Result<BatchProposal> {
        require_batch(batch_size)?;
        let start = Instant::now();
        let calls0 = inner_opt_calls();
        let hal = HallucinatedState::variance_only(model);
        let (points, mut roles) =
            hallucinating_loop(model, &self.settings, hal, batch_size, t, seed)?;
        for role in roles.iter_mut().skip(1) {
            *role = PointRole::Bucb;
        }
        Ok(BatchProposal {
            points,
            roles,
            selection_time: start.elapsed(),
            inner_opt_calls: inner_opt_calls() - calls0,
        })
    }
}

/// Constant Liar (CL-max): hallucinated points are observed at the current
/// maximum standardized output, so mean and variance both update.
pub struct ClPolicy {
    pub settings: PolicySettings,
}

impl BatchPolicy for ClPolicy {
    fn name(&self) -> &'static str {
        "cl"
    }

    fn propose(
        &self,
        model: &GpModel,
        obs: &ObservationSet,
        _pool: &mut CandidatePool,
        batch_size: usize,
        t: usize,
        seed: u64,
    ) -> Result<BatchProposal> {
        require_batch(batch_size)?;
        let start = Instant::now();
        let calls0 = inner_opt_calls();
        let lie = obs.std_outputs().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let hal = HallucinatedState::with_lie(model, lie);
        let (points, mut roles) =
            hallucinating_loop(model, &self.settings, hal, batch_size, t, seed)?;
        for role in roles.iter_mut().skip(1) {
            *role = PointRole::Cl;
        }
        Ok(BatchProposal {
            points,
            roles,
            selection_time: start.elapsed(),
            inner_opt_calls: inner_opt_calls() - calls0,
        })
    }
}

/// Shared BUCB/CL loop: B sequential inner maximizations, extending the
/// hallucinated state between picks. beta is frozen at its batch-start value.
fn hallucinating_loop(
    model: &GpModel,
    settings: &PolicySettings,
    mut hal: HallucinatedState,
    batch_size: usize,
    t: usize,
    seed: u64,
) -> Result<(Vec<Vec<f64>>, Vec<PointRole>)> {
    let dim = model.dim();
    let x0 = ucb_first_point(model, settings, t, derive_seed(seed, 0))?;
    let mut points = vec![x0];
    let mut roles = vec![PointRole::Ucb];
    if batch_size > 1 {
        let cands = candidates(settings, dim)?;
        let sqrt_beta = beta_t(model.n_train(), &settings.ucb).sqrt();
        for b in 1..batch_size {
            hal.hallucinate(points.last().expect("nonempty"))?;
            let score =
                |x: &[f64]| Ok(hal.mean(x)? + sqrt_beta * hal.variance(x)?.sqrt());
            let xb = maximize_acquisition(
                score,
                dim,
                &cands,
                &settings.budget,
                derive_seed(seed, b as u64),
            )?;
            points.push(xb);
            roles.push(PointRole::Ucb); // retagged by the caller
        }
    }
    Ok((points, roles))
}

/// UCB-DE: GP-UCB first point, then B-1 greedy farthest points from the
/// Sobol pool. One inner optimization per batch, whatever B is.
pub struct UcbDePolicy {
    pub settings: PolicySettings,
}

impl BatchPolicy for UcbDePolicy {
    fn name(&self) -> &'static str {
        "ucb-de"
    }

    fn propose(
        &self,
        model: &GpModel,
        _obs: &ObservationSet,
        pool: &mut CandidatePool,
        batch_size: usize,
        t: usize,
        seed: u64,
    ) -> Result<BatchProposal> {
        require_batch(batch_size)?;
        let start = Instant::now();
        let calls0 = inner_opt_calls();
        let x0 = ucb_first_point(model, &self.settings, t, derive_seed(seed, 0))?;
        let mut proposal = pool.fill_batch_de(x0, batch_size)?;
        proposal.selection_time = start.elapsed();
        proposal.inner_opt_calls = inner_opt_calls() - calls0;
        Ok(proposal)
    }

    fn updates_pool(&self) -> bool {
        true
    }
}

/// UCB first point plus B-1 continuous farthest-point maximizations.
/// Costs B inner optimizations per batch; exists for the M-sweep comparison.
pub struct UcbDeContinuousPolicy {
    pub settings: PolicySettings,
}

impl BatchPolicy for UcbDeContinuousPolicy {
    fn name(&self) -> &'static str {
        CONTINUOUS_POLICY
    }

    fn propose(
        &self,
        model: &GpModel,
        obs: &ObservationSet,
        _pool: &mut CandidatePool,
        batch_size: usize,
        t: usize,
        seed: u64,
    ) -> Result<BatchProposal> {
        require_batch(batch_size)?;
        let start = Instant::now();
        let calls0 = inner_opt_calls();
        let dim = model.dim();
        let x0 = ucb_first_point(model, &self.settings, t, derive_seed(seed, 0))?;
        let mut augmented = obs.inputs().to_vec();
        augmented.push(x0.clone());
        let mut points = vec![x0];
        let mut roles = vec![PointRole::Ucb];
        for b in 1..batch_size {
            let xb = crate::batch_de::farthest_point_continuous_with(
                &augmented,
                dim,
                &self.settings.budget,
                derive_seed(seed, b as u64),
                &self.settings.table,
            )?;
            augmented.push(xb.clone());
            points.push(xb);
            roles.push(PointRole::De);
        }
        Ok(BatchProposal {
            points,
            roles,
            selection_time: start.elapsed(),
            inner_opt_calls: inner_opt_calls() - calls0,
        })
    }
}
