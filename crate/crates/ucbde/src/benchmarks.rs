//! Black-box test functions with domain scaling and optional simulated
//! evaluation latency. Everything is registered under a maximization
//! convention: natively-minimized functions are negated, and
//! `known_best_value` is the global maximum under that convention.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use crate::error::{Error, Result};

pub const FUNCTION_NAMES: [&str; 5] = ["branin", "hartmann3", "hartmann6", "alpine2", "gsobol"];

type EvalFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;

pub struct BenchmarkFunction {
    name: String,
    dim: usize,
    bounds: Vec<(f64, f64)>,
    eval: EvalFn,
    known_best_value: Option<f64>,
    known_best_point: Option<Vec<f64>>,
    sim_latency: Option<Duration>,
    eval_count: AtomicU64,
}

impl std::fmt::Debug for BenchmarkFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BenchmarkFunction")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("bounds", &self.bounds)
            .finish()
    }
}

impl BenchmarkFunction {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn known_best_value(&self) -> Option<f64> {
        self.known_best_value
    }

    /// Location of the optimum in native coordinates.
    pub fn known_best_point(&self) -> Option<&[f64]> {
        self.known_best_point.as_deref()
    }

    pub fn sim_latency(&self) -> Option<Duration> {
        self.sim_latency
    }

    pub fn with_sim_latency(mut self, latency: Option<Duration>) -> Self {
        self.sim_latency = latency;
        self
    }

    /// Oracle evaluations performed so far (unit and native combined).
    pub fn eval_count(&self) -> u64 {
        self.eval_count.load(Ordering::Relaxed)
    }

    /// Evaluate at native coordinates.
    pub fn eval_native(&self, x: &[f64]) -> f64 {
        self.eval_count.fetch_add(1, Ordering::Relaxed);
        (self.eval)(x)
    }

    /// Evaluate at unit-cube coordinates: eval(lo + u * (hi - lo)).
    pub fn eval_unit(&self, u: &[f64]) -> Result<f64> {
        if u.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: u.len() });
        }
        if !u.iter().all(|&v| (0.0..=1.0).contains(&v)) {
            return Err(Error::OutOfDomain { point: u.to_vec() });
        }
        let x: Vec<f64> =
            u.iter().zip(&self.bounds).map(|(&ui, &(lo, hi))| lo + ui * (hi - lo)).collect();
        let value = self.eval_native(&x);
        if !value.is_finite() {
            return Err(Error::NonFiniteValue { function: self.name.clone(), point: u.to_vec() });
        }
        Ok(value)
    }

    /// Evaluate a batch of unit-cube points, preserving input order. With
    /// `parallel` the evaluations overlap, so a latency-simulating batch
    /// takes roughly one latency rather than B of them.
    pub fn evaluate_batch(&self, points: &[Vec<f64>], parallel: bool) -> Result<Vec<f64>> {
        let eval_one = |p: &Vec<f64>| -> Result<f64> {
            if let Some(latency) = self.sim_latency {
                std::thread::sleep(latency);
            }
            self.eval_unit(p)
        };
        if parallel && points.len() > 1 {
            std::thread::scope(|scope| {
                let handles: Vec<_> =
                    points.iter().map(|p| scope.spawn(move || eval_one(p))).collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("evaluation thread panicked"))
                    .collect()
            })
        } else {
            points.iter().map(eval_one).collect()
        }
    }
}

/// Build a registered benchmark function. `dim` is required for alpine2 and
/// gsobol and must match the native dimension of the fixed-size functions.
pub fn make(name: &str, dim: Option<usize>) -> Result<BenchmarkFunction> {
    let check_fixed = |native: usize| -> Result<usize> {
        match dim {
            None => Ok(native),
            Some(d) if d == native => Ok(native),
            Some(d) => Err(Error::InvalidConfig(format!(
                "function `{name}` has fixed dimension {native}, got --dim {d}"
            ))),
        }
    };
    let need_dim = || -> Result<usize> {
        match dim {
            Some(d) if d >= 1 => Ok(d),
            Some(_) => Err(Error::InvalidConfig("dimension must be >= 1".into())),
            None => Err(Error::InvalidConfig(format!("function `{name}` requires --dim"))),
        }
    };

    match name {
        "branin" => {
            check_fixed(2)?;
            Ok(branin())
        }
        "hartmann3" => {
            check_fixed(3)?;
            Ok(hartmann3())
        }
        "hartmann6" => {
            check_fixed(6)?;
            Ok(hartmann6())
        }
        "alpine2" => Ok(alpine2(need_dim()?)),
        "gsobol" => Ok(gsobol(need_dim()?)),
        _ => Err(Error::UnknownFunction { name: name.into(), known: FUNCTION_NAMES.join(", ") }),
    }
}

const BRANIN_BEST: f64 = 0.397_887_357_729_738_1; // 5/(4 pi), at (pi, 2.275)

fn branin() -> BenchmarkFunction {
    use std::f64::consts::PI;
    let eval = |x: &[f64]| {
        let (x1, x2) = (x[0], x[1]);
        let a = 1.0;
        let b = 5.1 / (4.0 * PI * PI);
        let c = 5.0 / PI;
        let r = 6.0;
        let s = 10.0;
        let t = 1.0 / (8.0 * PI);
        let value = a * (x2 - b * x1 * x1 + c * x1 - r).powi(2) + s * (1.0 - t) * x1.cos() + s;
        -value // natively minimization
    };
    BenchmarkFunction {
        name: "branin".into(),
        dim: 2,
        bounds: vec![(-5.0, 10.0), (0.0, 15.0)],
        eval: Box::new(eval),
        known_best_value: Some(-BRANIN_BEST),
        known_best_point: Some(vec![PI, 2.275]),
        sim_latency: None,
        eval_count: AtomicU64::new(0),
    }
}

const HARTMANN_ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];

const HARTMANN3_A: [[f64; 3]; 4] =
    [[3.0, 10.0, 30.0], [0.1, 10.0, 35.0], [3.0, 10.0, 30.0], [0.1, 10.0, 35.0]];
const HARTMANN3_P: [[f64; 3]; 4] = [
    [0.3689, 0.1170, 0.2673],
    [0.4699, 0.4387, 0.7470],
    [0.1091, 0.8732, 0.5547],
    [0.0381, 0.5743, 0.8828],
];

const HARTMANN6_A: [[f64; 6]; 4] = [
    [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
    [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
    [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
    [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
];
const HARTMANN6_P: [[f64; 6]; 4] = [
    [0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886],
    [0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991],
    [0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650],
    [0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381],
];

fn hartmann_eval<const D: usize>(a: &[[f64; D]; 4], p: &[[f64; D]; 4], x: &[f64]) -> f64 {
    let mut sum = 0.0;
    for i in 0..4 {
        let inner: f64 = (0..D).map(|j| a[i][j] * (x[j] - p[i][j]).powi(2)).sum();
        sum += HARTMANN_ALPHA[i] * (-inner).exp();
    }
    sum // already negated relative to the minimization form
}

fn hartmann3() -> BenchmarkFunction {
    BenchmarkFunction {
        name: "hartmann3".into(),
        dim: 3,
        bounds: vec![(0.0, 1.0); 3],
        eval: Box::new(|x| hartmann_eval(&HARTMANN3_A, &HARTMANN3_P, x)),
        known_best_value: Some(3.862779786949337),
        known_best_point: Some(vec![0.114614, 0.555649, 0.852547]),
        sim_latency: None,
        eval_count: AtomicU64::new(0),
    }
}

fn hartmann6() -> BenchmarkFunction {
    BenchmarkFunction {
        name: "hartmann6".into(),
        dim: 6,
        bounds: vec![(0.0, 1.0); 6],
        eval: Box::new(|x| hartmann_eval(&HARTMANN6_A, &HARTMANN6_P, x)),
        known_best_value: Some(3.322368011391339),
        known_best_point: Some(vec![0.20169, 0.150011, 0.476874, 0.275332, 0.311652, 0.6573]),
        sim_latency: None,
        eval_count: AtomicU64::new(0),
    }
}

// argmax of sqrt(x) sin(x) on [1, 10] and its value
const ALPINE2_BEST_COORD: f64 = 7.917052684666207;
const ALPINE2_BEST_FACTOR: f64 = 2.808131180007005;

fn alpine2(dim: usize) -> BenchmarkFunction {
    BenchmarkFunction {
        name: "alpine2".into(),
        dim,
        bounds: vec![(1.0, 10.0); dim],
        eval: Box::new(|x| x.iter().map(|&v| v.sqrt() * v.sin()).product()),
        known_best_value: Some(ALPINE2_BEST_FACTOR.powi(dim as i32)),
        known_best_point: Some(vec![ALPINE2_BEST_COORD; dim]),
        sim_latency: None,
        eval_count: AtomicU64::new(0),
    }
}

fn gsobol(dim: usize) -> BenchmarkFunction {
    // a_j = (j - 2) / 2 clamped at zero, j = 1..=d
    let coeffs: Vec<f64> = (1..=dim).map(|j| ((j as f64 - 2.0) / 2.0).max(0.0)).collect();
    let eval = move |x: &[f64]| {
        let prod: f64 = x
            .iter()
            .zip(&coeffs)
            .map(|(&xj, &aj)| ((4.0 * xj - 2.0).abs() + aj) / (1.0 + aj))
            .product();
        -prod // natively minimization, optimum 0 at x = 0.5
    };
    BenchmarkFunction {
        name: "gsobol".into(),
        dim,
        bounds: vec![(0.0, 1.0); dim],
        eval: Box::new(eval),
        known_best_value: Some(0.0),
        known_best_point: Some(vec![0.5; dim]),
        sim_latency: None,
        eval_count: AtomicU64::new(0),
    }
}
