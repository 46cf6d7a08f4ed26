//! The `gen`, `fit` and `seriate` subcommands.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use principal_curves::datagen::io::{read_atoms_csv, write_atoms_csv, Atoms};
use principal_curves::datagen::{
    apply_reads, gen_euclidean_line, gen_measure_dataset, read_dataset, simplex_embed, write_dataset,
};
use principal_curves::experiment::{run_baseline, run_ppc, Baseline, ResultRecord, SolverSpec};
use principal_curves::metric::{project, segment_lengths};
use principal_curves::seriation::{pairwise_matrix, pairwise_w2_matrix, ppc_seriation, projection_pseudotime, w2_tag};
use principal_curves::{
    AnyDataset, CurveModel, Dataset, DiscreteMeasure, DistanceMatrix, Euclidean, EuclideanPoint, GenOptions, KnotCurve,
    Metric, OtMethod, SeriationResult,
};
use serde::{Deserialize, Serialize};

use crate::args::{FitArgs, GenArgs, SeriateArgs};
use crate::config::{
    one, resolve_baseline, resolve_data, resolve_ot, resolve_solver, DataPlan, ExperimentConfig, Method,
};
use crate::error::{usage, CliError, CliResult};
use crate::output::{
    config_hash, dataset_hash, render_svg, sha256_hex, write_json, write_plot_csv, write_trace_csv, PlotCoords,
    PlotRow, FIT_FILE, KNOTS_FILE, METRICS_FILE, PLOT_FILE, PSEUDOTIMES_FILE, SVG_FILE, TIMING_FILE, TRACE_FILE,
};

/// Offset separating the read-noise stream from the sampling stream.
const READS_SEED_OFFSET: u64 = 0x5eed_0000;

/// Point types that can be stored as rows of weighted atoms.
pub trait Backend: Atoms + PlotCoords + Clone {
    fn from_atoms(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> principal_curves::Result<Self>;
}

impl Backend for EuclideanPoint {
    fn from_atoms(dim: usize, coords: Vec<f64>, _weights: Vec<f64>) -> principal_curves::Result<Self> {
        if coords.len() != dim {
            return Err(principal_curves::Error::Parse(
                "a Euclidean point holds exactly one atom".into(),
            ));
        }
        EuclideanPoint::new(coords)
    }
}

impl Backend for DiscreteMeasure {
    fn from_atoms(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> principal_curves::Result<Self> {
        DiscreteMeasure::from_flat(dim, coords, weights)
    }
}

/// Samples one dataset of the plan.
pub fn generate(plan: &DataPlan, n: usize, seed: u64) -> CliResult<AnyDataset> {
    Ok(match plan.model {
        CurveModel::EuclideanLine => AnyDataset::Euclidean(gen_euclidean_line(n, plan.sigma, seed)?),
        model => {
            let mut data = gen_measure_dataset(model, &GenOptions::new(n, plan.atoms, plan.sigma, seed))?;
            if let Some(r) = plan.reads {
                data = apply_reads(&simplex_embed(&data)?, r, seed.wrapping_add(READS_SEED_OFFSET))?;
            }
            AnyDataset::Measure(data)
        }
    })
}

pub fn save_dataset(dir: &Path, data: &AnyDataset) -> CliResult<()> {
    match data {
        AnyDataset::Euclidean(d) => write_dataset(dir, d)?,
        AnyDataset::Measure(d) => write_dataset(dir, d)?,
    }
    Ok(())
}

pub fn cmd_gen(args: &GenArgs) -> CliResult<PathBuf> {
    let cfg = ExperimentConfig::load(args.config.as_deref())?;
    let plan = resolve_data(&args.data, &cfg, None, 1)?;
    let n = one(&plan.n, "--n")?;
    let seed = one(&plan.seeds, "--seed")?;
    let out = args.out.clone().or(cfg.out).ok_or_else(|| usage("--out is required"))?;
    save_dataset(&out, &generate(&plan, n, seed)?)?;
    Ok(out)
}

fn load_dataset(dir: &Path) -> CliResult<AnyDataset> {
    if !dir.join(principal_curves::datagen::io::ATOMS_FILE).exists() {
        return Err(CliError::Io(format!("{} is not a dataset directory", dir.display())));
    }
    Ok(read_dataset(dir)?)
}

fn model_of(data: &AnyDataset) -> Option<CurveModel> {
    CurveModel::parse(&data.provenance().model).ok()
}

/// Settings and outcome of a fit, stored next to the knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitManifest {
    pub dataset_sha256: String,
    pub solver: SolverSpec,
    pub ot: OtMethod,
    pub seed: u64,
    pub knots: usize,
    pub pinned: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
    pub descent_violation: bool,
    pub timed_out: bool,
    pub local_fallback: bool,
    pub objective_final: Option<f64>,
    pub flags: Vec<String>,
}

/// What `fit` reports on success.
#[derive(Debug, Clone)]
pub struct FitSummary {
    pub out: PathBuf,
    pub manifest: FitManifest,
    pub record: ResultRecord,
}

pub fn cmd_fit(args: &FitArgs) -> CliResult<FitSummary> {
    let cfg = ExperimentConfig::load(args.config.as_deref())?;
    let data = load_dataset(&args.dataset)?;
    let model = model_of(&data).unwrap_or(CurveModel::Dataset1);
    let plan = resolve_solver(&args.solver, &args.ot, &cfg, model)?;
    let spec = plan.single()?;
    let out = args
        .out
        .clone()
        .or(cfg.out.clone())
        .unwrap_or_else(|| args.dataset.join("fit"));
    fs::create_dir_all(&out)?;
    let hash = dataset_hash(&args.dataset)?;
    let summary = match &data {
        AnyDataset::Euclidean(d) => fit_and_save(&Euclidean, d, &spec, plan.ot, &out, args.svg, hash)?,
        AnyDataset::Measure(d) => fit_and_save(&plan.wasserstein(), d, &spec, plan.ot, &out, args.svg, hash)?,
    };
    let m = &summary.manifest;
    if m.descent_violation || m.timed_out || !m.converged {
        return Err(CliError::NonConvergence(format!(
            "stopped after {} iterations (flags: {}); outputs written to {}",
            m.iterations,
            m.flags.join(","),
            out.display()
        )));
    }
    Ok(summary)
}

fn fit_and_save<M: Metric>(
    metric: &M,
    data: &Dataset<M::Point>,
    spec: &SolverSpec,
    ot: OtMethod,
    out: &Path,
    svg: bool,
    dataset_sha256: String,
) -> CliResult<FitSummary>
where
    M::Point: Backend,
{
    let seed = data.provenance.seed;
    let run = run_ppc(metric, data, spec, seed)?;
    let curve = &run.fit.curve;
    let trace = &run.fit.trace;
    write_atoms_csv(&out.join(KNOTS_FILE), "knot_index", curve.knots())?;
    write_trace_csv(&out.join(TRACE_FILE), trace)?;
    let rows = plot_rows(metric, data, curve, spec.refine)?;
    write_plot_csv(&out.join(PLOT_FILE), &rows)?;
    if svg {
        fs::write(out.join(SVG_FILE), render_svg(&rows))?;
    }
    let manifest = FitManifest {
        dataset_sha256,
        solver: spec.clone(),
        ot,
        seed,
        knots: curve.len(),
        pinned: curve.pinned().to_vec(),
        iterations: trace.records.len().saturating_sub(1),
        converged: trace.converged,
        descent_violation: trace.descent_violation,
        timed_out: trace.timed_out,
        local_fallback: trace.local_fallback,
        objective_final: trace.final_objective(),
        flags: run.record.flags.clone(),
    };
    write_json(&out.join(FIT_FILE), &manifest)?;
    Ok(FitSummary {
        out: out.to_path_buf(),
        manifest,
        record: run.record,
    })
}

/// Knot positions and per-batch projections for plotting.
pub fn plot_rows<M: Metric>(
    metric: &M,
    data: &Dataset<M::Point>,
    curve: &KnotCurve<M::Point>,
    refine: bool,
) -> CliResult<Vec<PlotRow>>
where
    M::Point: PlotCoords,
{
    let segs = segment_lengths(metric, curve)?;
    let total: f64 = segs.iter().sum();
    let mut cum = 0.0;
    let mut rows = Vec::with_capacity(curve.len() + data.len());
    for (k, g) in curve.knots().iter().enumerate() {
        let (x, y) = g.plot_xy();
        rows.push(PlotRow {
            kind: "knot",
            index: k,
            x,
            y,
            position: if total > 0.0 { cum / total } else { 0.0 },
            knot: k,
            true_time: None,
        });
        cum += segs.get(k).copied().unwrap_or(0.0);
    }
    let positions = projection_pseudotime(metric, data.batches(), curve, refine)?;
    for (i, b) in data.batches().iter().enumerate() {
        let (x, y) = b.plot_xy();
        rows.push(PlotRow {
            kind: "batch",
            index: i,
            x,
            y,
            position: positions.values[i],
            knot: project(metric, b, curve)?.knot_index,
            true_time: data.true_times().map(|t| t[i]),
        });
    }
    Ok(rows)
}

/// Deterministic outcome of `seriate`, written to `metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub method: String,
    pub params: String,
    pub model: String,
    pub n: usize,
    pub seed: u64,
    /// Whether the ends were fixed, so the raw error is the relevant one.
    pub oriented: bool,
    pub kendall_error: Option<f64>,
    pub kendall_error_raw: Option<f64>,
    pub kendall_error_up_to_reversal: Option<f64>,
    pub objective_final: Option<f64>,
    pub flags: Vec<String>,
    pub dataset_sha256: String,
    pub config_sha256: String,
    pub fit_sha256: Option<String>,
}

#[derive(Serialize)]
struct SeriateConfig<'a> {
    method: &'a str,
    params: &'a str,
    ot: Option<OtMethod>,
    oriented: bool,
    fit_sha256: Option<&'a str>,
}

#[derive(Debug, Clone)]
pub struct SeriateSummary {
    pub out: PathBuf,
    pub metrics: Metrics,
    pub record: ResultRecord,
}

pub fn cmd_seriate(args: &SeriateArgs) -> CliResult<SeriateSummary> {
    let cfg = ExperimentConfig::load(args.config.as_deref())?;
    let data = load_dataset(&args.dataset)?;
    let model = model_of(&data).unwrap_or(CurveModel::Dataset1);
    let plan = resolve_baseline(&args.baseline, &cfg, model)?;
    let method = one(&plan.methods, "--method")?;
    let out = args
        .out
        .clone()
        .or(cfg.out.clone())
        .unwrap_or_else(|| args.dataset.join(format!("seriate-{}", method.name())));
    let dataset_sha256 = dataset_hash(&args.dataset)?;
    let seed = data.provenance().seed;
    let (result, record, oriented, ot, fit_sha256) = match method {
        Method::Ppc => {
            let fit_dir = args.fit.clone().unwrap_or_else(|| args.dataset.join("fit"));
            let (knots_path, manifest_path) = (fit_dir.join(KNOTS_FILE), fit_dir.join(FIT_FILE));
            if !knots_path.exists() || !manifest_path.exists() {
                return Err(CliError::Io(format!(
                    "no fitted curve in {}; run `pcurve fit` first",
                    fit_dir.display()
                )));
            }
            let manifest: FitManifest = serde_json::from_str(&fs::read_to_string(&manifest_path)?)?;
            if manifest.dataset_sha256 != dataset_sha256 {
                return Err(usage(format!(
                    "{} was fitted to a different dataset",
                    fit_dir.display()
                )));
            }
            let start = Instant::now();
            let mut r = match &data {
                AnyDataset::Euclidean(d) => seriate_curve(&Euclidean, d, &knots_path, manifest.solver.refine)?,
                AnyDataset::Measure(d) => {
                    let metric = principal_curves::Wasserstein {
                        ot: manifest.ot,
                        ..Default::default()
                    };
                    seriate_curve(&metric, d, &knots_path, manifest.solver.refine)?
                }
            };
            let runtime = start.elapsed();
            if let Some(t) = data.true_times() {
                r.evaluate(t)?;
            }
            r.flags.extend(manifest.flags.iter().cloned());
            let record = ResultRecord {
                method: r.method.clone(),
                params: manifest.solver.describe(),
                seed,
                kendall_error_raw: r.error,
                kendall_error_up_to_reversal: r.error_up_to_reversal,
                runtime_ms: runtime.as_secs_f64() * 1e3,
                objective_final: manifest.objective_final,
                flags: r.flags.clone(),
            };
            let fit_hash = sha256_hex(&fs::read(&knots_path)?);
            (r, record, manifest.solver.pin_ends, Some(manifest.ot), Some(fit_hash))
        }
        Method::Tsp | Method::Spectral => {
            let baseline = match method {
                Method::Tsp => Baseline::Tsp,
                _ => Baseline::Spectral {
                    sigma: one(&plan.spectral_sigma, "--spectral-sigma")?,
                },
            };
            let ot = resolve_ot(&args.ot, &cfg)?;
            let (w, ot) = match &data {
                AnyDataset::Euclidean(d) => (pairwise_matrix(&Euclidean, d.batches(), "euclidean")?, None),
                AnyDataset::Measure(d) => {
                    let cache = args.dataset.join(format!("w_{}.csv", w2_tag(&ot)));
                    (pairwise_w2_matrix(d.batches(), ot, Some(&cache))?, Some(ot))
                }
            };
            let pin = method == Method::Tsp
                && args
                    .pin_ends
                    .or(cfg.solver.pin_ends)
                    .unwrap_or_else(|| SolverSpec::for_model(model).pin_ends);
            let ends = if pin { Some(extremes(&data)?) } else { None };
            let (r, record) = run_baseline(&w, baseline, data.true_times(), ends, seed)?;
            (r, record, pin, ot, None)
        }
    };
    fs::create_dir_all(&out)?;
    write_pseudotimes(&out.join(PSEUDOTIMES_FILE), &result)?;
    let config_sha256 = config_hash(&SeriateConfig {
        method: method.name(),
        params: &record.params,
        ot,
        oriented,
        fit_sha256: fit_sha256.as_deref(),
    })?;
    let metrics = Metrics {
        method: method.name().into(),
        params: record.params.clone(),
        model: data.provenance().model.clone(),
        n: data.len(),
        seed,
        oriented,
        kendall_error: record.headline_error(oriented),
        kendall_error_raw: record.kendall_error_raw,
        kendall_error_up_to_reversal: record.kendall_error_up_to_reversal,
        objective_final: record.objective_final,
        flags: record.flags.clone(),
        dataset_sha256,
        config_sha256,
        fit_sha256,
    };
    write_json(&out.join(METRICS_FILE), &metrics)?;
    write_json(
        &out.join(TIMING_FILE),
        &serde_json::json!({ "runtime_ms": record.runtime_ms }),
    )?;
    Ok(SeriateSummary { out, metrics, record })
}

fn extremes(data: &AnyDataset) -> CliResult<(usize, usize)> {
    let ends = match data {
        AnyDataset::Euclidean(d) => d.extreme_batches(),
        AnyDataset::Measure(d) => d.extreme_batches(),
    };
    ends.ok_or_else(|| usage("pinned ends need true times (truth.csv)"))
}

/// Reads a knots file written by `fit`.
pub fn read_knots<P: Backend>(path: &Path) -> CliResult<KnotCurve<P>> {
    let (dim, groups) = read_atoms_csv(path)?;
    let knots = groups
        .into_iter()
        .map(|(c, w)| P::from_atoms(dim, c, w))
        .collect::<principal_curves::Result<Vec<_>>>()?;
    Ok(KnotCurve::new(knots)?)
}

fn seriate_curve<M: Metric>(
    metric: &M,
    data: &Dataset<M::Point>,
    knots: &Path,
    refine: bool,
) -> CliResult<SeriationResult>
where
    M::Point: Backend,
{
    let curve = read_knots::<M::Point>(knots)?;
    Ok(ppc_seriation(metric, data.batches(), &curve, refine)?)
}

pub fn write_pseudotimes(path: &Path, r: &SeriationResult) -> CliResult<()> {
    let mut rank = vec![0usize; r.pseudotimes.len()];
    for (pos, &b) in r.permutation.iter().enumerate() {
        rank[b] = pos;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["batch_id", "pseudotime", "rank"])?;
    for (i, t) in r.pseudotimes.iter().enumerate() {
        w.write_record([i.to_string(), format!("{t}"), rank[i].to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Distance matrix of a dataset for the baselines.
pub fn baseline_matrix(data: &AnyDataset, ot: OtMethod) -> CliResult<DistanceMatrix> {
    Ok(match data {
        AnyDataset::Euclidean(d) => pairwise_matrix(&Euclidean, d.batches(), "euclidean")?,
        AnyDataset::Measure(d) => pairwise_w2_matrix(d.batches(), ot, None)?,
    })
}
