//! Experiment runner: seeded repeats of the batch optimization loop with
//! per-iteration records, summary statistics, CSV/JSON persistence, and the
//! M-sweep and batch-size timing studies.

use std::collections::HashSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::acquisition::{
    acquisition_candidates_with_table, maximize_acquisition, RefineBudget, UcbParams,
    ACQ_CANDIDATES_PER_DIM,
};
use crate::baselines::{make_policy, BatchPolicy, PolicySettings, CONTINUOUS_POLICY, POLICY_NAMES};
use crate::batch_de::CandidatePool;
use crate::benchmarks::{self, BenchmarkFunction};
use crate::derive_seed;
use crate::error::{Error, Result};
use crate::gp::{GpModel, ObservationSet};
use crate::sobol::{self, DirectionTable};

const INIT_STREAM: u64 = 0x1;
const POLICY_STREAM_BASE: u64 = 0x10_000;
const REC_STREAM_BASE: u64 = 0x20_000;

/// 40-point log-spaced lengthscale grid on [0.01, 10], searched at every refit.
pub fn default_lengthscale_grid() -> Vec<f64> {
    let n = 40;
    (0..n)
        .map(|i| 10f64.powf(-2.0 + 3.0 * i as f64 / (n - 1) as f64))
        .collect()
}

/// Seeded uniform initial design in the unit cube.
pub fn initial_design(seed: u64, n: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    (0..n).map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::InvalidConfig(format!("unknown format `{other}` (csv|json)"))),
        }
    }
}

/// Fully resolved experiment configuration. Defaults mirror the benchmark
/// protocol: T = 10 d, n_init = 3 d, B = 10, M = 10 T B, 20 repeats.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExperimentConfig {
    pub function: String,
    pub dim: usize,
    pub policy: String,
    #[serde(rename = "T")]
    pub t_iterations: usize,
    pub n_init: usize,
    #[serde(rename = "B")]
    pub batch_size: usize,
    #[serde(rename = "M")]
    pub pool_size: usize,
    pub repeats: usize,
    pub seed: u64,
    pub noise_var: f64,
    pub delta: f64,
    pub beta_override: Option<f64>,
    pub n_starts: usize,
    pub max_evals_per_start: usize,
    pub step_init: f64,
    pub step_min: f64,
    pub acq_per_dim: usize,
    pub latency_ms: Option<f64>,
    pub parallel_eval: bool,
    pub parallel_repeats: bool,
    pub sobol_table: Option<PathBuf>,
    pub output_path: Option<PathBuf>,
    pub format: OutputFormat,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 1 {
            return Err(Error::InvalidConfig("B must be >= 1".into()));
        }
        if self.n_init < 1 {
            return Err(Error::InvalidConfig("n_init must be >= 1".into()));
        }
        if self.repeats < 1 {
            return Err(Error::InvalidConfig("repeats must be >= 1".into()));
        }
        if self.pool_size < self.batch_size * self.t_iterations {
            return Err(Error::InvalidConfig(format!(
                "M = {} too small: need M >= B*T = {} so the pool cannot exhaust",
                self.pool_size,
                self.batch_size * self.t_iterations
            )));
        }
        if self.noise_var < 0.0 || self.noise_var.is_nan() {
            return Err(Error::InvalidConfig("noise-var must be >= 0".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidConfig("delta must lie in (0, 1)".into()));
        }
        if !(self.step_init > 0.0 && self.step_min > 0.0 && self.step_min <= self.step_init) {
            return Err(Error::InvalidConfig("require 0 < step_min <= step_init".into()));
        }
        if self.n_starts < 1 {
            return Err(Error::InvalidConfig("n-starts must be >= 1".into()));
        }
        if self.acq_per_dim < 1 {
            return Err(Error::InvalidConfig("acq-per-dim must be >= 1".into()));
        }
        if self.policy != CONTINUOUS_POLICY && !POLICY_NAMES.contains(&self.policy.as_str()) {
            return Err(Error::UnknownPolicy {
                name: self.policy.clone(),
                known: POLICY_NAMES.join(", "),
            });
        }
        benchmarks::make(&self.function, Some(self.dim))?;
        Ok(())
    }

    pub fn ucb_params(&self) -> UcbParams {
        UcbParams { delta: self.delta, beta_override: self.beta_override }
    }

    pub fn refine_budget(&self) -> RefineBudget {
        RefineBudget {
            n_starts: self.n_starts,
            max_evals_per_start: self.max_evals_per_start,
            step_init: self.step_init,
            step_min: self.step_min,
        }
    }

    pub fn latency(&self) -> Option<Duration> {
        self.latency_ms.map(|ms| Duration::from_secs_f64(ms / 1000.0))
    }
}

/// Unresolved configuration: every field optional, so a key=value file and
/// CLI flags can be merged before defaults are applied.
#[derive(Debug, Clone, Default)]
pub struct ConfigOverrides {
    pub function: Option<String>,
    pub dim: Option<usize>,
    pub policy: Option<String>,
    pub t_iterations: Option<usize>,
    pub n_init: Option<usize>,
    pub batch_size: Option<usize>,
    pub pool_size: Option<usize>,
    pub repeats: Option<usize>,
    pub seed: Option<u64>,
    pub noise_var: Option<f64>,
    pub delta: Option<f64>,
    pub beta_override: Option<f64>,
    pub n_starts: Option<usize>,
    pub max_evals_per_start: Option<usize>,
    pub step_init: Option<f64>,
    pub step_min: Option<f64>,
    pub acq_per_dim: Option<usize>,
    pub latency_ms: Option<f64>,
    pub parallel_eval: Option<bool>,
    pub parallel_repeats: Option<bool>,
    pub sobol_table: Option<PathBuf>,
    pub output_path: Option<PathBuf>,
    pub format: Option<OutputFormat>,
}

impl ConfigOverrides {
    /// Parse a flat `key=value` config file. Keys use the CLI flag spelling;
    /// `#` starts a comment.
    pub fn from_kv_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut out = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::InvalidConfig(format!(
                    "{}:{}: expected key=value, got `{line}`",
                    path.display(),
                    idx + 1
                )));
            };
            out.set(key.trim(), value.trim()).map_err(|e| {
                Error::InvalidConfig(format!("{}:{}: {e}", path.display(), idx + 1))
            })?;
        }
        Ok(out)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse::<T>()
                .map_err(|_| Error::InvalidConfig(format!("bad value for `{key}`: `{value}`")))
        }
        match key {
            "function" => self.function = Some(value.to_string()),
            "dim" => self.dim = Some(parse(key, value)?),
            "policy" => self.policy = Some(value.to_string()),
            "T" => self.t_iterations = Some(parse(key, value)?),
            "n-init" => self.n_init = Some(parse(key, value)?),
            "B" => self.batch_size = Some(parse(key, value)?),
            "M" => self.pool_size = Some(parse(key, value)?),
            "repeats" => self.repeats = Some(parse(key, value)?),
            "seed" => self.seed = Some(parse(key, value)?),
            "noise-var" => self.noise_var = Some(parse(key, value)?),
            "delta" => self.delta = Some(parse(key, value)?),
            "beta-override" => self.beta_override = Some(parse(key, value)?),
            "n-starts" => self.n_starts = Some(parse(key, value)?),
            "max-evals" => self.max_evals_per_start = Some(parse(key, value)?),
            "step-init" => self.step_init = Some(parse(key, value)?),
            "step-min" => self.step_min = Some(parse(key, value)?),
            "acq-per-dim" => self.acq_per_dim = Some(parse(key, value)?),
            "latency-ms" => self.latency_ms = Some(parse(key, value)?),
            "parallel-eval" => self.parallel_eval = Some(parse(key, value)?),
            "parallel-repeats" => self.parallel_repeats = Some(parse(key, value)?),
            "sobol-table" => self.sobol_table = Some(PathBuf::from(value)),
            "out" => self.output_path = Some(PathBuf::from(value)),
            "format" => self.format = Some(value.parse()?),
            other => {
                return Err(Error::InvalidConfig(format!("unknown config key `{other}`")));
            }
        }
        Ok(())
    }

    /// Merge, with `other` (e.g. CLI flags) winning over `self`.
    pub fn merged_with(mut self, other: ConfigOverrides) -> ConfigOverrides {
        macro_rules! take {
            ($($field:ident),* $(,)?) => {
                $(if other.$field.is_some() { self.$field = other.$field; })*
            };
        }
        take!(
            function, dim, policy, t_iterations, n_init, batch_size, pool_size, repeats, seed,
            noise_var, delta, beta_override, n_starts, max_evals_per_start, step_init, step_min,
            acq_per_dim, latency_ms, parallel_eval, parallel_repeats, sobol_table, output_path,
            format,
        );
        self
    }
}

/// Apply defaults in dependency order (dim -> T -> M) and validate.
pub fn resolve_config(overrides: &ConfigOverrides) -> Result<ExperimentConfig> {
    let function = overrides
        .function
        .clone()
        .ok_or_else(|| Error::InvalidConfig("--function is required".into()))?;
    let probe = benchmarks::make(&function, overrides.dim)?;
    let dim = probe.dim();
    let t_iterations = overrides.t_iterations.unwrap_or(10 * dim);
    let batch_size = overrides.batch_size.unwrap_or(10);
    let cfg = ExperimentConfig {
        function,
        dim,
        policy: overrides.policy.clone().unwrap_or_else(|| "ucb-de".into()),
        t_iterations,
        n_init: overrides.n_init.unwrap_or(3 * dim),
        batch_size,
        pool_size: overrides.pool_size.unwrap_or(10 * t_iterations.max(1) * batch_size),
        repeats: overrides.repeats.unwrap_or(20),
        seed: overrides.seed.unwrap_or(0),
        noise_var: overrides.noise_var.unwrap_or(1e-4),
        delta: overrides.delta.unwrap_or(0.1),
        beta_override: overrides.beta_override,
        n_starts: overrides.n_starts.unwrap_or(5),
        max_evals_per_start: overrides.max_evals_per_start.unwrap_or(50 * dim),
        step_init: overrides.step_init.unwrap_or(0.05),
        step_min: overrides.step_min.unwrap_or(1e-4),
        acq_per_dim: overrides.acq_per_dim.unwrap_or(ACQ_CANDIDATES_PER_DIM),
        latency_ms: overrides.latency_ms,
        parallel_eval: overrides.parallel_eval.unwrap_or(false),
        parallel_repeats: overrides.parallel_repeats.unwrap_or(false),
        sobol_table: overrides.sobol_table.clone(),
        output_path: overrides.output_path.clone(),
        format: overrides.format.unwrap_or(OutputFormat::Csv),
    };
    cfg.validate()?;
    Ok(cfg)
}

/// One row per (repeat, iteration); `t = 0` is the initialization row and
/// carries no recommendation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRow {
    pub repeat_id: usize,
    pub t: usize,
    pub cumulative_evals: usize,
    pub recommended_value: Option<f64>,
    pub best_observed_value: f64,
    pub batch_selection_seconds: f64,
    pub gp_fit_seconds: f64,
    pub eval_seconds: f64,
    pub cumulative_wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatFailure {
    pub repeat_id: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub rows: Vec<IterationRow>,
    pub failures: Vec<RepeatFailure>,
}

fn load_table(cfg: &ExperimentConfig) -> Result<Arc<DirectionTable>> {
    match &cfg.sobol_table {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            Ok(Arc::new(sobol::parse_direction_file(&text)?))
        }
        None => Ok(Arc::new(sobol::default_table().clone())),
    }
}

fn policy_settings(cfg: &ExperimentConfig, table: Arc<DirectionTable>) -> PolicySettings {
    PolicySettings {
        ucb: cfg.ucb_params(),
        budget: cfg.refine_budget(),
        table,
        acq_per_dim: cfg.acq_per_dim,
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunRecord> {
    let function =
        benchmarks::make(&cfg.function, Some(cfg.dim))?.with_sim_latency(cfg.latency());
    run_experiment_on(cfg, &function)
}

/// Like `run_experiment` but evaluating the supplied function instance, so
/// callers can watch its oracle-evaluation counter.
pub fn run_experiment_on(cfg: &ExperimentConfig, function: &BenchmarkFunction) -> Result<RunRecord> {
    cfg.validate()?;
    let table = load_table(cfg)?;
    let policy = make_policy(&cfg.policy, policy_settings(cfg, Arc::clone(&table)))?;
    let grid = default_lengthscale_grid();

    let mut rows: Vec<IterationRow> = Vec::new();
    let mut failures: Vec<RepeatFailure> = Vec::new();
    if cfg.parallel_repeats && cfg.repeats > 1 {
        let results: Vec<Result<Vec<IterationRow>>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..cfg.repeats)
                .map(|repeat| {
                    let table = Arc::clone(&table);
                    let policy = &*policy;
                    let grid = &grid;
                    scope.spawn(move || run_repeat(cfg, function, policy, table, grid, repeat))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("repeat thread panicked")).collect()
        });
        for (repeat, result) in results.into_iter().enumerate() {
            match result {
                Ok(r) => rows.extend(r),
                Err(e) => failures.push(RepeatFailure { repeat_id: repeat, reason: e.to_string() }),
            }
        }
    } else {
        for repeat in 0..cfg.repeats {
            match run_repeat(cfg, function, &*policy, Arc::clone(&table), &grid, repeat) {
                Ok(r) => rows.extend(r),
                Err(e) => failures.push(RepeatFailure { repeat_id: repeat, reason: e.to_string() }),
            }
        }
    }
    rows.sort_by_key(|r| (r.repeat_id, r.t));
    Ok(RunRecord { config: cfg.clone(), rows, failures })
}

fn run_repeat(
    cfg: &ExperimentConfig,
    function: &BenchmarkFunction,
    policy: &dyn BatchPolicy,
    table: Arc<DirectionTable>,
    grid: &[f64],
    repeat: usize,
) -> Result<Vec<IterationRow>> {
    let repeat_seed = derive_seed(cfg.seed, repeat as u64);
    let dim = cfg.dim;

    let init_points = initial_design(derive_seed(repeat_seed, INIT_STREAM), cfg.n_init, dim);
    let eval_start = Instant::now();
    let init_values = function.evaluate_batch(&init_points, cfg.parallel_eval)?;
    let mut eval_seconds = eval_start.elapsed().as_secs_f64();

    let mut obs = ObservationSet::from_data(init_points.clone(), init_values)?;
    let fit_start = Instant::now();
    let mut model = GpModel::fit(&obs, cfg.noise_var, grid)?;
    let mut fit_seconds = fit_start.elapsed().as_secs_f64();

    let pool_points =
        sobol::generate_with_table(dim, cfg.pool_size, sobol::DEFAULT_SKIP, &table)?;
    let mut pool = CandidatePool::new(pool_points)?;
    pool.update(&init_points)?;

    let rec_candidates = acquisition_candidates_with_table(dim, cfg.acq_per_dim, &table)?;
    let budget = cfg.refine_budget();

    let mut wall_seconds = eval_seconds + fit_seconds;
    let mut rows = vec![IterationRow {
        repeat_id: repeat,
        t: 0,
        cumulative_evals: obs.len(),
        recommended_value: None,
        best_observed_value: obs.best_raw().expect("n_init >= 1"),
        batch_selection_seconds: 0.0,
        gp_fit_seconds: fit_seconds,
        eval_seconds,
        cumulative_wall_seconds: wall_seconds,
    }];

    for t in 1..=cfg.t_iterations {
        let proposal = policy.propose(
            &model,
            &obs,
            &mut pool,
            cfg.batch_size,
            t,
            derive_seed(repeat_seed, POLICY_STREAM_BASE + t as u64),
        )?;
        let selection_seconds = proposal.selection_time.as_secs_f64();

        let eval_start = Instant::now();
        let values = function.evaluate_batch(&proposal.points, cfg.parallel_eval)?;
        eval_seconds = eval_start.elapsed().as_secs_f64();

        obs.extend(proposal.points.clone(), values)?;
        if !policy.updates_pool() {
            pool.update(&proposal.points)?;
        }

        let fit_start = Instant::now();
        model = GpModel::fit(&obs, cfg.noise_var, grid)?;
        fit_seconds = fit_start.elapsed().as_secs_f64();

        // Recommendation: argmax of the posterior mean (beta = 0),
        // scored by one out-of-budget oracle call that never reaches the GP
        // and is excluded from the wall-time axis.
        let recommended = maximize_acquisition(
            |x| Ok(model.posterior(x)?.0),
            dim,
            &rec_candidates,
            &budget,
            derive_seed(repeat_seed, REC_STREAM_BASE + t as u64),
        )?;
        let recommended_value = function.eval_unit(&recommended)?;

        wall_seconds += selection_seconds + eval_seconds + fit_seconds;
        rows.push(IterationRow {
            repeat_id: repeat,
            t,
            cumulative_evals: cfg.n_init + t * cfg.batch_size,
            recommended_value: Some(recommended_value),
            best_observed_value: obs.best_raw().expect("nonempty"),
            batch_selection_seconds: selection_seconds,
            gp_fit_seconds: fit_seconds,
            eval_seconds,
            cumulative_wall_seconds: wall_seconds,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TSummary {
    pub t: usize,
    pub mean_recommended: f64,
    pub se_recommended: f64,
    pub n_repeats: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub per_t: Vec<TSummary>,
    pub final_values: Vec<f64>,
    pub mean_final: f64,
    pub se_final: f64,
    pub mean_selection_seconds: f64,
    pub mean_fit_seconds: f64,
    pub mean_eval_seconds: f64,
    pub mean_total_wall_seconds: f64,
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt() / n.sqrt())
}

pub fn summarize(record: &RunRecord) -> Summary {
    let t_max = record.rows.iter().map(|r| r.t).max().unwrap_or(0);
    let mut per_t = Vec::new();
    for t in 1..=t_max {
        let vals: Vec<f64> = record
            .rows
            .iter()
            .filter(|r| r.t == t)
            .filter_map(|r| r.recommended_value)
            .collect();
        let (mean, se) = mean_se(&vals);
        per_t.push(TSummary { t, mean_recommended: mean, se_recommended: se, n_repeats: vals.len() });
    }
    let final_values: Vec<f64> = record
        .rows
        .iter()
        .filter(|r| r.t == t_max)
        .filter_map(|r| r.recommended_value)
        .collect();
    let (mean_final, se_final) = mean_se(&final_values);

    let iter_rows: Vec<&IterationRow> = record.rows.iter().filter(|r| r.t >= 1).collect();
    let avg = |f: fn(&IterationRow) -> f64| -> f64 {
        if iter_rows.is_empty() {
            0.0
        } else {
            iter_rows.iter().map(|r| f(r)).sum::<f64>() / iter_rows.len() as f64
        }
    };
    let totals: Vec<f64> = {
        let mut by_repeat: std::collections::BTreeMap<usize, f64> = Default::default();
        for r in &record.rows {
            let entry = by_repeat.entry(r.repeat_id).or_insert(0.0);
            *entry = entry.max(r.cumulative_wall_seconds);
        }
        by_repeat.into_values().collect()
    };
    Summary {
        per_t,
        mean_final,
        se_final,
        final_values,
        mean_selection_seconds: avg(|r| r.batch_selection_seconds),
        mean_fit_seconds: avg(|r| r.gp_fit_seconds),
        mean_eval_seconds: avg(|r| r.eval_seconds),
        mean_total_wall_seconds: if totals.is_empty() {
            0.0
        } else {
            totals.iter().sum::<f64>() / totals.len() as f64
        },
    }
}

const CSV_HEADER: &str = "repeat_id,t,cumulative_evals,recommended_value,best_observed_value,batch_selection_seconds,gp_fit_seconds,eval_seconds,cumulative_wall_seconds";

pub fn write_csv<W: Write>(record: &RunRecord, mut w: W) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in &record.rows {
        let rec = r.recommended_value.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.repeat_id,
            r.t,
            r.cumulative_evals,
            rec,
            r.best_observed_value,
            r.batch_selection_seconds,
            r.gp_fit_seconds,
            r.eval_seconds,
            r.cumulative_wall_seconds
        )?;
    }
    Ok(())
}

pub fn write_json<W: Write>(record: &RunRecord, w: W) -> Result<()> {
    serde_json::to_writer_pretty(w, record)?;
    Ok(())
}

pub fn read_json<R: std::io::Read>(r: R) -> Result<RunRecord> {
    Ok(serde_json::from_reader(r)?)
}

/// Write a run to `path` in the requested format.
pub fn emit(record: &RunRecord, format: OutputFormat, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut buf = std::io::BufWriter::new(file);
    match format {
        OutputFormat::Csv => write_csv(record, &mut buf)?,
        OutputFormat::Json => write_json(record, &mut buf)?,
    }
    buf.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepArm {
    pub label: String,
    /// Sobol pool size, or None for the continuous-optimization arm.
    pub pool_size: Option<usize>,
    pub summary: Summary,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: ExperimentConfig,
    pub arms: Vec<SweepArm>,
}

/// Run the experiment once per pool size M (duplicates dropped with a
/// warning) plus one continuous distance-exploration arm.
pub fn sweep_m(base: &ExperimentConfig, m_values: &[usize]) -> Result<SweepResult> {
    let mut seen = HashSet::new();
    let mut unique = Vec::new();
    for &m in m_values {
        if seen.insert(m) {
            unique.push(m);
        } else {
            eprintln!("warning: duplicate M value {m} ignored");
        }
    }
    if unique.is_empty() {
        return Err(Error::InvalidConfig("sweep-m needs at least one M value".into()));
    }
    let mut arms = Vec::new();
    for m in unique {
        let mut cfg = base.clone();
        cfg.pool_size = m;
        let record = run_experiment(&cfg)?;
        arms.push(SweepArm {
            label: format!("M={m}"),
            pool_size: Some(m),
            summary: summarize(&record),
        });
    }
    let mut cfg = base.clone();
    cfg.policy = CONTINUOUS_POLICY.to_string();
    let record = run_experiment(&cfg)?;
    arms.push(SweepArm { label: "continuous".into(), pool_size: None, summary: summarize(&record) });
    Ok(SweepResult { config: base.clone(), arms })
}

pub fn write_sweep_csv<W: Write>(result: &SweepResult, mut w: W) -> Result<()> {
    writeln!(
        w,
        "arm,M,repeats,mean_final_recommended,se_final_recommended,mean_selection_seconds,mean_total_wall_seconds"
    )?;
    for arm in &result.arms {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            arm.label,
            arm.pool_size.map(|m| m.to_string()).unwrap_or_default(),
            arm.summary.final_values.len(),
            arm.summary.mean_final,
            arm.summary.se_final,
            arm.summary.mean_selection_seconds,
            arm.summary.mean_total_wall_seconds
        )?;
    }
    Ok(())
}

/// Per-(policy, dim, B) batch-selection timing at a fixed observation count.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimingCell {
    pub policy: String,
    pub dim: usize,
    pub batch_size: usize,
    pub n_observations: usize,
    pub selection_seconds: Vec<f64>,
    pub mean_selection_seconds: f64,
    pub median_selection_seconds: f64,
    pub inner_opt_calls_per_batch: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimingResult {
    pub n_observations: usize,
    pub repeats: usize,
    pub cells: Vec<TimingCell>,
}

/// Observation count used by the timing study unless overridden: large
/// enough that one batch selection takes milliseconds, not microseconds.
pub const TIMING_N_OBS: usize = 120;

/// Measure batch-selection wall time per (policy, B, d) on gsobol with a
/// frozen model of `n_obs` observations, so N is held fixed while B varies.
/// Each repetition proposes one batch from a fresh pool.
pub fn timing_study(
    base: &ExperimentConfig,
    dims: &[usize],
    batch_sizes: &[usize],
    policies: &[String],
    n_obs: usize,
) -> Result<TimingResult> {
    if dims.is_empty() || batch_sizes.is_empty() || policies.is_empty() {
        return Err(Error::InvalidConfig("timing needs dims, batch sizes, and policies".into()));
    }
    let table = load_table(base)?;
    let grid = default_lengthscale_grid();
    let mut cells = Vec::new();
    for &dim in dims {
        let function = benchmarks::make("gsobol", Some(dim))?;
        let seed_d = derive_seed(base.seed, 0xD100 + dim as u64);
        let inputs = initial_design(derive_seed(seed_d, INIT_STREAM), n_obs, dim);
        let values = function.evaluate_batch(&inputs, false)?;
        let obs = ObservationSet::from_data(inputs.clone(), values)?;
        let model = GpModel::fit(&obs, base.noise_var, &grid)?;

        for &batch_size in batch_sizes {
            // pool sized by the M = 10 T B convention at the small fixed T = 2
            let pool_size = 10 * 2 * batch_size;
            for policy_name in policies {
                let settings = PolicySettings {
                    ucb: base.ucb_params(),
                    budget: RefineBudget::for_dim(dim),
                    table: Arc::clone(&table),
                    acq_per_dim: base.acq_per_dim,
                };
                let policy = make_policy(policy_name, settings)?;
                let mut times = Vec::with_capacity(base.repeats);
                let mut calls = 0;
                for rep in 0..base.repeats {
                    let pool_points =
                        sobol::generate_with_table(dim, pool_size, sobol::DEFAULT_SKIP, &table)?;
                    let mut pool = CandidatePool::new(pool_points)?;
                    pool.update(&inputs)?;
                    let proposal = policy.propose(
                        &model,
                        &obs,
                        &mut pool,
                        batch_size,
                        1,
                        derive_seed(seed_d, 0x7000 + (batch_size * 1000 + rep) as u64),
                    )?;
                    times.push(proposal.selection_time.as_secs_f64());
                    calls = proposal.inner_opt_calls;
                }
                let mean = times.iter().sum::<f64>() / times.len() as f64;
                let mut sorted = times.clone();
                sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let median = sorted[sorted.len() / 2];
                cells.push(TimingCell {
                    policy: policy_name.clone(),
                    dim,
                    batch_size,
                    n_observations: n_obs,
                    selection_seconds: times,
                    mean_selection_seconds: mean,
                    median_selection_seconds: median,
                    inner_opt_calls_per_batch: calls,
                });
            }
        }
    }
    Ok(TimingResult { n_observations: n_obs, repeats: base.repeats, cells })
}

pub fn write_timing_csv<W: Write>(result: &TimingResult, mut w: W) -> Result<()> {
    writeln!(
        w,
        "policy,dim,B,n_observations,repeats,mean_selection_seconds,median_selection_seconds,inner_opt_calls_per_batch"
    )?;
    for c in &result.cells {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            c.policy,
            c.dim,
            c.batch_size,
            c.n_observations,
            c.selection_seconds.len(),
            c.mean_selection_seconds,
            c.median_selection_seconds,
            c.inner_opt_calls_per_batch
        )?;
    }
    Ok(())
}
