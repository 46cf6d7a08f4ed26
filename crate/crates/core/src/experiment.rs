//! End-to-end trials: fit a curve or run a baseline on a dataset and score
//! the resulting ordering against the true times.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::datagen::{CurveModel, Dataset};
use crate::error::{invalid, Result};
use crate::metric::Metric;
use crate::ppc::{fit, Bandwidth, FitResult, Kernel, Mode, PpcConfig};
use crate::seriation::{ppc_seriation, spectral_seriation, tsp_seriation, DistanceMatrix, SeriationResult};

/// Data-noise level used by the branching models.
pub const DEFAULT_DATA_SIGMA: f64 = 0.1;

/// Knot count used when none is given (capped at the number of batches).
pub const DEFAULT_KNOTS: usize = 20;

/// Tuned parameters for one data model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelDefaults {
    pub beta: f64,
    pub h: f64,
    pub spectral_sigma: f64,
}

impl ModelDefaults {
    pub fn for_model(model: CurveModel) -> Self {
        match model {
            CurveModel::Dataset1 => Self {
                beta: 0.17,
                h: 0.037,
                spectral_sigma: 0.5,
            },
            CurveModel::Dataset2 => Self {
                beta: 0.037,
                h: 0.01,
                spectral_sigma: 0.315,
            },
            CurveModel::EuclideanLine => Self {
                beta: 1e-3,
                h: 0.037,
                spectral_sigma: 0.5,
            },
        }
    }
}

/// Solver settings for a principal-curve trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSpec {
    pub beta: f64,
    /// Knot count; `None` uses `min(N, DEFAULT_KNOTS)`.
    pub knots: Option<usize>,
    pub mode: Mode,
    pub h: f64,
    pub kernel: Kernel,
    /// Pin the first and last knots to the batches with the smallest and
    /// largest true time.
    pub pin_ends: bool,
    /// Refine pseudotimes onto the segments next to the nearest knot.
    pub refine: bool,
    pub epsilon: f64,
    pub max_outer_iters: usize,
    pub time_limit: Option<Duration>,
}

impl SolverSpec {
    pub fn for_model(model: CurveModel) -> Self {
        let d = ModelDefaults::for_model(model);
        let nonlocal = model != CurveModel::EuclideanLine;
        Self {
            beta: d.beta,
            knots: None,
            mode: if nonlocal { Mode::Nonlocal } else { Mode::Local },
            h: d.h,
            kernel: Kernel::default(),
            pin_ends: nonlocal,
            refine: true,
            epsilon: 1e-7,
            max_outer_iters: 50,
            time_limit: None,
        }
    }

    /// Solver configuration for `data`; pins need the true times.
    pub fn config<P: Clone>(&self, data: &Dataset<P>, seed: u64) -> Result<PpcConfig<P>> {
        let n = data.len();
        let k = self.knots.unwrap_or(n.min(DEFAULT_KNOTS));
        if k == 0 || k > n {
            return Err(invalid(format!("knot count {k} must lie in 1..={n}")));
        }
        let mut cfg = PpcConfig::new(self.beta, k);
        cfg.epsilon = self.epsilon;
        cfg.max_outer_iters = self.max_outer_iters;
        cfg.mode = self.mode;
        cfg.bandwidth = Bandwidth::Scalar(self.h);
        cfg.kernel = self.kernel.clone();
        cfg.seed = seed;
        cfg.time_limit = self.time_limit;
        if self.pin_ends {
            let (first, last) = data
                .extreme_batches()
                .ok_or_else(|| invalid("pinned ends need true times"))?;
            if k < 2 {
                return Err(invalid("pinned ends need at least two knots"));
            }
            cfg.pins = vec![
                (0, data.batches()[first].clone()),
                (k - 1, data.batches()[last].clone()),
            ];
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Short human-readable parameter summary.
    pub fn describe(&self) -> String {
        let mode = match self.mode {
            Mode::Local => "local",
            Mode::Nonlocal => "nonlocal",
        };
        let k = self.knots.map_or(format!("min(N,{DEFAULT_KNOTS})"), |k| k.to_string());
        format!(
            "beta={};h={};K={};mode={};pin_ends={}",
            self.beta, self.h, k, mode, self.pin_ends
        )
    }
}

/// One scored ordering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub method: String,
    pub params: String,
    pub seed: u64,
    pub kendall_error_raw: Option<f64>,
    pub kendall_error_up_to_reversal: Option<f64>,
    pub runtime_ms: f64,
    pub objective_final: Option<f64>,
    #[serde(default)]
    pub flags: Vec<String>,
}

impl ResultRecord {
    fn from_result(r: &SeriationResult, params: String, seed: u64, runtime: Duration, objective: Option<f64>) -> Self {
        Self {
            method: r.method.clone(),
            params,
            seed,
            kendall_error_raw: r.error,
            kendall_error_up_to_reversal: r.error_up_to_reversal,
            runtime_ms: runtime.as_secs_f64() * 1e3,
            objective_final: objective,
            flags: r.flags.clone(),
        }
    }

    /// Raw error when the orientation is known, otherwise the error up to
    /// reversal.
    pub fn headline_error(&self, oriented: bool) -> Option<f64> {
        if oriented {
            self.kendall_error_raw
        } else {
            self.kendall_error_up_to_reversal
        }
    }
}

/// Outcome of a principal-curve trial.
#[derive(Debug, Clone)]
pub struct PpcRun<P> {
    pub fit: FitResult<P>,
    pub seriation: SeriationResult,
    pub record: ResultRecord,
}

/// Fits a curve, orders the batches along it and scores the ordering when
/// true times are known.
pub fn run_ppc<M: Metric>(
    metric: &M,
    data: &Dataset<M::Point>,
    spec: &SolverSpec,
    seed: u64,
) -> Result<PpcRun<M::Point>> {
    let cfg = spec.config(data, seed)?;
    let start = Instant::now();
    let fitted = fit(metric, data.batches(), &cfg)?;
    let mut seriation = ppc_seriation(metric, data.batches(), &fitted.curve, spec.refine)?;
    let elapsed = start.elapsed();
    if let Some(t) = data.true_times() {
        seriation.evaluate(t)?;
    }
    for (cond, flag) in [
        (!fitted.trace.converged, "not_converged"),
        (fitted.trace.descent_violation, "descent_violation"),
        (fitted.trace.timed_out, "timed_out"),
        (fitted.trace.local_fallback, "local_fallback"),
    ] {
        if cond {
            seriation = seriation.with_flag(flag);
        }
    }
    let record = ResultRecord::from_result(
        &seriation,
        spec.describe(),
        seed,
        elapsed,
        fitted.trace.final_objective(),
    );
    Ok(PpcRun {
        fit: fitted,
        seriation,
        record,
    })
}

/// Distance-matrix seriation methods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Baseline {
    Tsp,
    Spectral { sigma: f64 },
}

impl Baseline {
    pub fn describe(&self) -> String {
        match self {
            Baseline::Tsp => "tsp".to_string(),
            Baseline::Spectral { sigma } => format!("sigma={sigma}"),
        }
    }
}

/// Runs a baseline on a precomputed distance matrix and scores it against
/// `truth` when given.
pub fn run_baseline(
    w: &DistanceMatrix,
    method: Baseline,
    truth: Option<&[f64]>,
    fixed_ends: Option<(usize, usize)>,
    seed: u64,
) -> Result<(SeriationResult, ResultRecord)> {
    let start = Instant::now();
    let mut r = match method {
        Baseline::Tsp => tsp_seriation(w, fixed_ends)?,
        Baseline::Spectral { sigma } => spectral_seriation(w, sigma)?,
    };
    let elapsed = start.elapsed();
    if let Some(t) = truth {
        r.evaluate(t)?;
    }
    let record = ResultRecord::from_result(&r, method.describe(), seed, elapsed, None);
    Ok((r, record))
}

/// Arithmetic mean; `None` for an empty slice.
pub fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Median (average of the middle pair for even lengths); `None` when empty.
pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    })
}
