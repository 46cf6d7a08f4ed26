//! Experiment configuration: a TOML file merged with command-line flags over
//! per-model defaults.

use std::path::{Path, PathBuf};
use std::time::Duration;

use principal_curves::experiment::{ModelDefaults, SolverSpec, DEFAULT_DATA_SIGMA};
use principal_curves::ppc::Kernel;
use principal_curves::{CurveModel, Mode, OtMethod, SinkhornConfig, Wasserstein};
use serde::{Deserialize, Serialize};

use crate::args::{BaselineFlags, DataFlags, MethodArg, ModeArg, OtArg, OtFlags, SolverFlags};
use crate::error::{usage, CliError, CliResult};

pub const DEFAULT_N: usize = 250;
pub const DEFAULT_ATOMS: usize = 10_000;
/// Seeds per configuration for single experiments.
pub const DEFAULT_REPEATS: usize = 5;
/// Seeds per cell for sweeps.
pub const DEFAULT_SWEEP_REPEATS: usize = 6;
/// Sinkhorn marginal tolerance used when none is given.
pub const DEFAULT_OT_TOL: f64 = 1e-4;

/// A scalar, an explicit list or an inclusive equispaced range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    One(f64),
    Many(Vec<f64>),
    Range { from: f64, to: f64, steps: usize },
}

impl Grid {
    pub fn values(&self) -> CliResult<Vec<f64>> {
        match self {
            Grid::One(x) => Ok(vec![*x]),
            Grid::Many(v) if !v.is_empty() => Ok(v.clone()),
            Grid::Many(_) => Err(usage("empty grid")),
            Grid::Range { from, to, steps } => match steps {
                0 => Err(usage("grid range needs at least one step")),
                1 => Ok(vec![*from]),
                s => Ok((0..*s)
                    .map(|i| from + (to - from) * i as f64 / (s - 1) as f64)
                    .collect()),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Counts {
    One(usize),
    Many(Vec<usize>),
}

impl Counts {
    fn values(&self) -> Vec<usize> {
        match self {
            Counts::One(n) => vec![*n],
            Counts::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    pub model: Option<String>,
    pub n: Option<Counts>,
    pub atoms: Option<usize>,
    pub sigma: Option<f64>,
    pub reads: Option<u64>,
    pub seed: Option<u64>,
    pub seeds: Option<Vec<u64>>,
    pub repeats: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub beta: Option<Grid>,
    pub h: Option<Grid>,
    pub knots: Option<usize>,
    pub mode: Option<Mode>,
    pub kernel: Option<String>,
    pub pin_ends: Option<bool>,
    pub refine: Option<bool>,
    pub epsilon: Option<f64>,
    pub max_iters: Option<usize>,
    /// Seconds.
    pub time_limit: Option<f64>,
    /// `exact` or `sinkhorn`.
    pub ot: Option<String>,
    pub reg: Option<f64>,
    pub ot_tol: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineSection {
    pub methods: Option<Vec<String>>,
    pub spectral_sigma: Option<Grid>,
}

/// Contents of a `--config` file; every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub dataset: DatasetSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub baseline: BaselineSection,
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| usage(format!("config: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ppc,
    Tsp,
    Spectral,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Ppc => "ppc",
            Method::Tsp => "tsp",
            Method::Spectral => "spectral",
        }
    }

    fn parse(s: &str) -> CliResult<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ppc" => Ok(Method::Ppc),
            "tsp" => Ok(Method::Tsp),
            "spectral" => Ok(Method::Spectral),
            other => Err(usage(format!("unknown method `{other}`"))),
        }
    }
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Ppc => Method::Ppc,
            MethodArg::Tsp => Method::Tsp,
            MethodArg::Spectral => Method::Spectral,
        }
    }
}

/// Fully resolved data settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DataPlan {
    pub model: CurveModel,
    pub n: Vec<usize>,
    pub atoms: usize,
    pub sigma: f64,
    pub reads: Option<u64>,
    pub seeds: Vec<u64>,
}

/// Fully resolved solver settings; `beta` and `h` may hold sweep grids.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverPlan {
    pub beta: Vec<f64>,
    pub h: Vec<f64>,
    pub base: SolverSpec,
    pub ot: OtMethod,
}

impl SolverPlan {
    /// Solver spec for one grid cell.
    pub fn spec(&self, beta: f64, h: f64) -> SolverSpec {
        SolverSpec {
            beta,
            h,
            ..self.base.clone()
        }
    }

    /// The single spec of a non-sweep command.
    pub fn single(&self) -> CliResult<SolverSpec> {
        Ok(self.spec(one(&self.beta, "--beta")?, one(&self.h, "--h")?))
    }

    pub fn wasserstein(&self) -> Wasserstein {
        Wasserstein {
            ot: self.ot,
            ..Wasserstein::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselinePlan {
    pub methods: Vec<Method>,
    pub spectral_sigma: Vec<f64>,
}

pub fn one<T: Copy>(v: &[T], name: &str) -> CliResult<T> {
    match v {
        [x] => Ok(*x),
        _ => Err(usage(format!("{name} takes exactly one value here"))),
    }
}

fn grid_or(flag: &[f64], cfg: &Option<Grid>, default: f64) -> CliResult<Vec<f64>> {
    if !flag.is_empty() {
        return Ok(flag.to_vec());
    }
    cfg.as_ref().map_or(Ok(vec![default]), Grid::values)
}

pub fn parse_model(s: &str) -> CliResult<CurveModel> {
    CurveModel::parse(s).map_err(|e| usage(e.to_string()))
}

pub fn parse_kernel(s: &str) -> CliResult<Kernel> {
    let s = s.trim();
    let nums = |body: &str| -> CliResult<Vec<f64>> {
        body.split(',')
            .map(|x| {
                x.trim()
                    .parse::<f64>()
                    .map_err(|_| usage(format!("bad kernel value `{x}`")))
            })
            .collect()
    };
    let kernel = match s.split_once(':') {
        None if s == "epanechnikov" => Kernel::default(),
        Some(("epanechnikov", body)) => match nums(body)?.as_slice() {
            [p, q] => Kernel::Epanechnikov { p: *p, q: *q },
            _ => return Err(usage("epanechnikov kernel takes `P,Q`")),
        },
        Some(("table", body)) => Kernel::Table(nums(body)?),
        _ => return Err(usage(format!("unknown kernel `{s}`"))),
    };
    kernel.validate().map_err(|e| usage(e.to_string()))?;
    Ok(kernel)
}

pub fn resolve_data(
    flags: &DataFlags,
    cfg: &ExperimentConfig,
    model_hint: Option<CurveModel>,
    repeats: usize,
) -> CliResult<DataPlan> {
    let d = &cfg.dataset;
    let model = match flags.model.as_deref().or(d.model.as_deref()) {
        Some(m) => parse_model(m)?,
        None => model_hint.unwrap_or(CurveModel::Dataset1),
    };
    let n = if !flags.n.is_empty() {
        flags.n.clone()
    } else {
        d.n.as_ref().map_or(vec![DEFAULT_N], Counts::values)
    };
    if n.is_empty() || n.contains(&0) {
        return Err(usage("--n must be positive"));
    }
    let atoms = flags.atoms.or(d.atoms).unwrap_or(DEFAULT_ATOMS);
    let default_sigma = if model == CurveModel::EuclideanLine {
        0.0
    } else {
        DEFAULT_DATA_SIGMA
    };
    let sigma = flags.sigma.or(d.sigma).unwrap_or(default_sigma);
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(usage("--sigma must be finite and nonnegative"));
    }
    let reads = flags.reads.or(d.reads);
    if reads == Some(0) {
        return Err(usage("--reads must be positive"));
    }
    if reads.is_some() && model == CurveModel::EuclideanLine {
        return Err(usage("--reads applies to measure-valued models only"));
    }
    if model != CurveModel::EuclideanLine {
        if let Some(&bad) = n.iter().find(|&&n| n > atoms) {
            return Err(usage(format!("N = {bad} exceeds the atom budget {atoms}")));
        }
    }
    let seeds = if !flags.seeds.is_empty() {
        flags.seeds.clone()
    } else if flags.seed.is_none() && flags.repeats.is_none() && d.seeds.is_some() {
        d.seeds.clone().unwrap_or_default()
    } else {
        let first = flags.seed.or(d.seed).unwrap_or(1);
        let count = flags.repeats.or(d.repeats).unwrap_or(repeats);
        (0..count as u64).map(|i| first + i).collect()
    };
    if seeds.is_empty() {
        return Err(usage("seed list is empty"));
    }
    Ok(DataPlan {
        model,
        n,
        atoms,
        sigma,
        reads,
        seeds,
    })
}

pub fn resolve_ot(flags: &OtFlags, cfg: &ExperimentConfig) -> CliResult<OtMethod> {
    let s = &cfg.solver;
    let kind = match (flags.ot, s.ot.as_deref()) {
        (Some(k), _) => k,
        (None, Some("exact")) | (None, None) => OtArg::Exact,
        (None, Some("sinkhorn")) => OtArg::Sinkhorn,
        (None, Some(other)) => return Err(usage(format!("unknown transport solver `{other}`"))),
    };
    let reg = flags.reg.or(s.reg);
    let tol = flags.ot_tol.or(s.ot_tol);
    match kind {
        OtArg::Exact => {
            if reg.is_some() {
                return Err(usage("--reg needs --ot sinkhorn"));
            }
            Ok(OtMethod::Exact)
        }
        OtArg::Sinkhorn => {
            let mut c = SinkhornConfig {
                tol: DEFAULT_OT_TOL,
                ..SinkhornConfig::default()
            };
            if let Some(r) = reg {
                c.reg = r;
            }
            if let Some(t) = tol {
                c.tol = t;
            }
            if !(c.reg > 0.0) || !(c.tol > 0.0) {
                return Err(usage("--reg and --ot-tol must be positive"));
            }
            Ok(OtMethod::Sinkhorn(c))
        }
    }
}

pub fn resolve_solver(
    flags: &SolverFlags,
    ot: &OtFlags,
    cfg: &ExperimentConfig,
    model: CurveModel,
) -> CliResult<SolverPlan> {
    let s = &cfg.solver;
    let defaults = ModelDefaults::for_model(model);
    let mut base = SolverSpec::for_model(model);
    let beta = grid_or(&flags.beta, &s.beta, defaults.beta)?;
    let h = grid_or(&flags.h, &s.h, defaults.h)?;
    if beta.iter().any(|b| !(*b > 0.0) || !b.is_finite()) {
        return Err(usage("--beta must be positive"));
    }
    if h.iter().any(|h| !(*h > 0.0 && *h <= 1.0)) {
        return Err(usage("--h must lie in (0, 1]"));
    }
    if let Some(k) = flags.knots.or(s.knots) {
        base.knots = Some(k);
    }
    if let Some(m) = flags.mode {
        base.mode = match m {
            ModeArg::Local => Mode::Local,
            ModeArg::Nonlocal => Mode::Nonlocal,
        };
    } else if let Some(m) = s.mode {
        base.mode = m;
    }
    if let Some(k) = flags.kernel.as_deref().or(s.kernel.as_deref()) {
        base.kernel = parse_kernel(k)?;
    }
    if let Some(p) = flags.pin_ends.or(s.pin_ends) {
        base.pin_ends = p;
    }
    if let Some(r) = flags.refine.or(s.refine) {
        base.refine = r;
    }
    if let Some(e) = flags.epsilon.or(s.epsilon) {
        if !(e > 0.0) {
            return Err(usage("--epsilon must be positive"));
        }
        base.epsilon = e;
    }
    if let Some(m) = flags.max_iters.or(s.max_iters) {
        base.max_outer_iters = m;
    }
    if let Some(t) = flags.time_limit.or(s.time_limit) {
        if !(t > 0.0) || !t.is_finite() {
            return Err(usage("--time-limit must be positive"));
        }
        base.time_limit = Some(Duration::from_secs_f64(t));
    }
    Ok(SolverPlan {
        beta,
        h,
        base,
        ot: resolve_ot(ot, cfg)?,
    })
}

pub fn resolve_baseline(flags: &BaselineFlags, cfg: &ExperimentConfig, model: CurveModel) -> CliResult<BaselinePlan> {
    let b = &cfg.baseline;
    let methods = if !flags.method.is_empty() {
        flags.method.iter().map(|&m| m.into()).collect()
    } else if let Some(ms) = &b.methods {
        ms.iter().map(|m| Method::parse(m)).collect::<CliResult<Vec<_>>>()?
    } else {
        vec![Method::Ppc, Method::Tsp, Method::Spectral]
    };
    let spectral_sigma = grid_or(
        &flags.spectral_sigma,
        &b.spectral_sigma,
        ModelDefaults::for_model(model).spectral_sigma,
    )?;
    if spectral_sigma.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
        return Err(usage("--spectral-sigma must be finite and nonnegative"));
    }
    Ok(BaselinePlan {
        methods,
        spectral_sigma,
    })
}
