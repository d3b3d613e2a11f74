//! Gaussian-process surrogate: isotropic squared-exponential kernel,
//! Cholesky-based posterior, log marginal likelihood, and lengthscale
//! selection over a grid.
//!
//! All posterior math goes through triangular solves against the cached
//! Cholesky factor; the explicit inverse is never formed.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

/// Floor applied to the latent posterior variance.
pub const MIN_VARIANCE: f64 = 1e-12;

/// Diagonal jitter escalation schedule tried when a factorization fails.
/// The first attempt adds no jitter beyond the observation noise.
const JITTERS: [f64; 8] = [0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4];
const MAX_JITTER: f64 = 1e-4;

/// Training data in the unit hypercube with standardized outputs.
///
/// Standardization (mean 0, population std 1) is recomputed from scratch on
/// every `extend`, so the invariants hold after each batch of observations.
#[derive(Debug, Clone)]
pub struct ObservationSet {
    dim: usize,
    inputs: Vec<Vec<f64>>,
    raw_outputs: Vec<f64>,
    std_outputs: Vec<f64>,
    out_mean: f64,
    out_std: f64,
}

impl ObservationSet {
    pub fn new(dim: usize) -> Self {
        Self { dim, inputs: Vec::new(), raw_outputs: Vec::new(), std_outputs: Vec::new(), out_mean: 0.0, out_std: 1.0 }
    }

    pub fn from_data(inputs: Vec<Vec<f64>>, raw_outputs: Vec<f64>) -> Result<Self> {
        let dim = inputs.first().map_or(0, |p| p.len());
        let mut set = Self::new(dim);
        set.extend(inputs, raw_outputs)?;
        Ok(set)
    }

    /// Append a batch of observations and re-standardize the outputs.
    pub fn extend(&mut self, inputs: Vec<Vec<f64>>, raw_outputs: Vec<f64>) -> Result<()> {
        if inputs.len() != raw_outputs.len() {
            return Err(Error::InvalidConfig(format!(
                "{} inputs but {} outputs",
                inputs.len(),
                raw_outputs.len()
            )));
        }
        for p in &inputs {
            if p.len() != self.dim {
                return Err(Error::DimensionMismatch { expected: self.dim, got: p.len() });
            }
            if !p.iter().all(|&x| (0.0..=1.0).contains(&x)) {
                return Err(Error::OutOfDomain { point: p.clone() });
            }
        }
        self.inputs.extend(inputs);
        self.raw_outputs.extend(raw_outputs);
        let (std, mean, sd) = standardize(&self.raw_outputs);
        self.std_outputs = std;
        self.out_mean = mean;
        self.out_std = sd;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn raw_outputs(&self) -> &[f64] {
        &self.raw_outputs
    }

    pub fn std_outputs(&self) -> &[f64] {
        &self.std_outputs
    }

    pub fn out_mean(&self) -> f64 {
        self.out_mean
    }

    pub fn out_std(&self) -> f64 {
        self.out_std
    }

    /// Largest raw output observed so far.
    pub fn best_raw(&self) -> Option<f64> {
        self.raw_outputs.iter().copied().reduce(f64::max)
    }
}

/// Standardize to mean 0 and population standard deviation 1.
/// Constant (or single) inputs keep std_dev = 1 so the outputs become zeros.
pub fn standardize(raw: &[f64]) -> (Vec<f64>, f64, f64) {
    if raw.is_empty() {
        return (Vec::new(), 0.0, 1.0);
    }
    let n = raw.len() as f64;
    let mean = raw.iter().sum::<f64>() / n;
    let var = raw.iter().map(|&y| (y - mean) * (y - mean)).sum::<f64>() / n;
    let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
    (raw.iter().map(|&y| (y - mean) / sd).collect(), mean, sd)
}

/// Squared-exponential kernel exp(-||a-b||^2 / (2 l^2)).
pub fn se_kernel(a: &[f64], b: &[f64], lengthscale: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    if lengthscale <= 0.0 || lengthscale.is_nan() {
        return Err(Error::NonPositiveLengthscale(lengthscale));
    }
    Ok(se_kernel_unchecked(a, b, lengthscale))
}

#[inline]
fn se_kernel_unchecked(a: &[f64], b: &[f64], lengthscale: f64) -> f64 {
    let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-sq / (2.0 * lengthscale * lengthscale)).exp()
}

/// Cross-kernel vector k(x_i, x) for a fixed query point.
pub(crate) fn kernel_cross(inputs: &[Vec<f64>], x: &[f64], lengthscale: f64) -> DVector<f64> {
    DVector::from_iterator(inputs.len(), inputs.iter().map(|xi| se_kernel_unchecked(xi, x, lengthscale)))
}

/// Fitted GP. Immutable after `fit`; posterior queries are read-only.
#[derive(Debug, Clone)]
pub struct GpModel {
    lengthscale: f64,
    noise_var: f64,
    jitter: f64,
    /// Lower-triangular L with L Lᵀ = K + (noise_var + jitter) I.
    chol: DMatrix<f64>,
    /// α = (K + noise_var I)⁻¹ y_std, cached for posterior means.
    weights: DVector<f64>,
    train_inputs: Vec<Vec<f64>>,
    train_targets: DVector<f64>,
    log_marginal: f64,
}

impl GpModel {
    /// Fit by maximizing the log marginal likelihood over a lengthscale grid.
    /// Ties (and the degenerate all-zero-target case) keep the lowest grid index.
    pub fn fit(obs: &ObservationSet, noise_var: f64, lengthscale_grid: &[f64]) -> Result<GpModel> {
        if obs.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        if lengthscale_grid.is_empty() {
            return Err(Error::InvalidConfig("lengthscale grid is empty".into()));
        }
        for &ls in lengthscale_grid {
            if ls <= 0.0 || ls.is_nan() {
                return Err(Error::NonPositiveLengthscale(ls));
            }
        }
        let targets: Vec<f64> = obs.std_outputs().to_vec();
        // With identically-zero standardized targets the data cannot prefer
        // any lengthscale; return the lowest-index grid value.
        if targets.iter().all(|&y| y == 0.0) {
            return Self::fit_fixed(obs.inputs(), &targets, noise_var, lengthscale_grid[0]);
        }
        let sq_dists = pairwise_sq_dists(obs.inputs());
        let y = DVector::from_vec(targets);
        let mut best: Option<GpModel> = None;
        for &ls in lengthscale_grid {
            let model = fit_prepared(&sq_dists, obs.inputs(), &y, noise_var, ls)?;
            if best.as_ref().is_none_or(|b| model.log_marginal > b.log_marginal) {
                best = Some(model);
            }
        }
        Ok(best.expect("grid is nonempty"))
    }

    /// Fit at a fixed lengthscale on already-standardized targets.
    pub fn fit_fixed(
        inputs: &[Vec<f64>],
        std_targets: &[f64],
        noise_var: f64,
        lengthscale: f64,
    ) -> Result<GpModel> {
        if inputs.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        if lengthscale <= 0.0 || lengthscale.is_nan() {
            return Err(Error::NonPositiveLengthscale(lengthscale));
        }
        let sq_dists = pairwise_sq_dists(inputs);
        let y = DVector::from_vec(std_targets.to_vec());
        fit_prepared(&sq_dists, inputs, &y, noise_var, lengthscale)
    }

    /// Posterior mean and latent variance (noise-free convention) at `query`.
    /// The variance is clamped at `MIN_VARIANCE`.
    pub fn posterior(&self, query: &[f64]) -> Result<(f64, f64)> {
        if query.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: query.len() });
        }
        let k_star = kernel_cross(&self.train_inputs, query, self.lengthscale);
        let mean = k_star.dot(&self.weights);
        let v = self
            .chol
            .solve_lower_triangular(&k_star)
            .expect("cholesky factor has positive diagonal");
        let variance = (1.0 - v.norm_squared()).max(MIN_VARIANCE);
        Ok((mean, variance))
    }

    pub fn lengthscale(&self) -> f64 {
        self.lengthscale
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    /// Jitter that was needed (beyond the noise) to factorize the kernel.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn log_marginal(&self) -> f64 {
        self.log_marginal
    }

    pub fn chol(&self) -> &DMatrix<f64> {
        &self.chol
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn train_inputs(&self) -> &[Vec<f64>] {
        &self.train_inputs
    }

    pub fn train_targets(&self) -> &DVector<f64> {
        &self.train_targets
    }

    pub fn n_train(&self) -> usize {
        self.train_inputs.len()
    }

    pub fn dim(&self) -> usize {
        self.train_inputs.first().map_or(0, |p| p.len())
    }
}

fn pairwise_sq_dists(inputs: &[Vec<f64>]) -> DMatrix<f64> {
    let n = inputs.len();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let sq: f64 = inputs[i].iter().zip(&inputs[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            d[(i, j)] = sq;
            d[(j, i)] = sq;
        }
    }
    d
}

fn fit_prepared(
    sq_dists: &DMatrix<f64>,
    inputs: &[Vec<f64>],
    y: &DVector<f64>,
    noise_var: f64,
    lengthscale: f64,
) -> Result<GpModel> {
    let n = y.len();
    let denom = 2.0 * lengthscale * lengthscale;
    let base = sq_dists.map(|sq| (-sq / denom).exp());
    for &jitter in &JITTERS {
        let mut k = base.clone();
        for i in 0..n {
            k[(i, i)] += noise_var + jitter;
        }
        let Some(chol) = Cholesky::new(k) else { continue };
        let l = chol.l();
        if !l.diagonal().iter().all(|&d| d > 0.0 && d.is_finite()) {
            continue;
        }
        let weights = chol.solve(y);
        let log_det_half: f64 = l.diagonal().iter().map(|&d| d.ln()).sum();
        let log_marginal = -0.5 * y.dot(&weights)
            - log_det_half
            - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
        return Ok(GpModel {
            lengthscale,
            noise_var,
            jitter,
            chol: l,
            weights,
            train_inputs: inputs.to_vec(),
            train_targets: y.clone(),
            log_marginal,
        });
    }
    Err(Error::SingularKernel { lengthscale, max_jitter: MAX_JITTER })
}
