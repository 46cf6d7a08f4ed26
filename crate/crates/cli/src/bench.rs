//! Wall-clock timings of the main building blocks on generated data.

use std::path::PathBuf;
use std::time::Instant;

use principal_curves::experiment::{mean, run_baseline, run_ppc, Baseline};
use principal_curves::{AnyDataset, Euclidean, Metric};
use serde::Serialize;

use crate::args::BenchArgs;
use crate::commands::{baseline_matrix, generate};
use crate::config::{one, resolve_data, resolve_solver, ExperimentConfig};
use crate::error::CliResult;
use crate::output::write_json;

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub name: String,
    pub mean_ms: f64,
    pub runs: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub model: String,
    pub n: usize,
    pub atoms: usize,
    pub timings: Vec<Timing>,
}

fn time<T>(f: impl FnOnce() -> CliResult<T>) -> CliResult<(T, f64)> {
    let start = Instant::now();
    let v = f()?;
    Ok((v, start.elapsed().as_secs_f64() * 1e3))
}

pub fn cmd_bench(args: &BenchArgs) -> CliResult<BenchReport> {
    let cfg = ExperimentConfig::load(args.config.as_deref())?;
    let data_plan = resolve_data(&args.data, &cfg, None, 1)?;
    let n = one(&data_plan.n, "--n")?;
    let solver = resolve_solver(&args.solver, &args.ot, &cfg, data_plan.model)?;
    let spec = solver.single()?;
    let mut samples: Vec<(&'static str, Vec<f64>)> =
        ["generate", "distance_pair", "distance_matrix", "tsp", "spectral", "fit"]
            .map(|k| (k, Vec::new()))
            .into();
    let mut push = |name: &str, ms: f64| {
        if let Some(e) = samples.iter_mut().find(|e| e.0 == name) {
            e.1.push(ms);
        }
    };
    for &seed in &data_plan.seeds {
        let (data, ms) = time(|| generate(&data_plan, n, seed))?;
        push("generate", ms);
        let pair = match &data {
            AnyDataset::Euclidean(d) if d.len() > 1 => {
                Some(time(|| Ok(Euclidean.dist(&d.batches()[0], &d.batches()[1])?))?.1)
            }
            AnyDataset::Measure(d) if d.len() > 1 => {
                let w = solver.wasserstein();
                Some(time(|| Ok(w.dist(&d.batches()[0], &d.batches()[1])?))?.1)
            }
            _ => None,
        };
        if let Some(ms) = pair {
            push("distance_pair", ms);
        }
        let (w, ms) = time(|| baseline_matrix(&data, solver.ot))?;
        push("distance_matrix", ms);
        let truth = data.true_times();
        push(
            "tsp",
            time(|| Ok(run_baseline(&w, Baseline::Tsp, truth, None, seed)?))?.1,
        );
        let sigma = principal_curves::experiment::ModelDefaults::for_model(data_plan.model).spectral_sigma;
        push(
            "spectral",
            time(|| Ok(run_baseline(&w, Baseline::Spectral { sigma }, truth, None, seed)?))?.1,
        );
        let ms = match &data {
            AnyDataset::Euclidean(d) => time(|| Ok(run_ppc(&Euclidean, d, &spec, seed)?))?.1,
            AnyDataset::Measure(d) => time(|| Ok(run_ppc(&solver.wasserstein(), d, &spec, seed)?))?.1,
        };
        push("fit", ms);
    }
    let report = BenchReport {
        model: data_plan.model.name().to_string(),
        n,
        atoms: data_plan.atoms,
        timings: samples
            .into_iter()
            .filter(|(_, v)| !v.is_empty())
            .map(|(name, v)| Timing {
                name: name.to_string(),
                mean_ms: mean(&v).unwrap_or(0.0),
                runs: v.len(),
            })
            .collect(),
    };
    if let Some(dir) = args.out.clone().or(cfg.out) {
        std::fs::create_dir_all(&dir)?;
        write_json(&PathBuf::from(&dir).join("bench.json"), &report)?;
    }
    Ok(report)
}
