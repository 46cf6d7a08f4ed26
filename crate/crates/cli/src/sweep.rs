//! Parameter and budget sweeps run on a worker pool.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use principal_curves::experiment::{mean, run_baseline, run_ppc, Baseline, ResultRecord};
use principal_curves::{AnyDataset, DistanceMatrix, Euclidean};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::SweepArgs;
use crate::commands::{baseline_matrix, generate};
use crate::config::{
    resolve_baseline, resolve_data, resolve_solver, BaselinePlan, DataPlan, ExperimentConfig, Method, SolverPlan,
    DEFAULT_SWEEP_REPEATS,
};
use crate::error::{usage, CliError, CliResult};
use crate::output::{config_hash, fmt_opt, write_json, CELLS_FILE, RESULTS_FILE};

/// One grid cell: a method with its parameters at one dataset size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    pub n: usize,
    pub method: Method,
    pub beta: Option<f64>,
    pub h: Option<f64>,
    pub sigma: Option<f64>,
}

impl Cell {
    fn key(&self) -> (usize, &'static str, u64, u64, u64) {
        let bits = |x: Option<f64>| x.map_or(0, f64::to_bits);
        (
            self.n,
            self.method.name(),
            bits(self.beta),
            bits(self.h),
            bits(self.sigma),
        )
    }
}

/// Outcome of one cell on one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub cell: Cell,
    pub oriented: bool,
    pub record: Option<ResultRecord>,
    pub seed: u64,
    pub failure: Option<String>,
}

impl SweepRecord {
    pub fn headline_error(&self) -> Option<f64> {
        self.record.as_ref().and_then(|r| r.headline_error(self.oriented))
    }
}

/// Per-cell summary over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub cell: Cell,
    pub runs: usize,
    pub failures: usize,
    pub mean_error: Option<f64>,
    pub mean_error_raw: Option<f64>,
    pub mean_error_up_to_reversal: Option<f64>,
    pub mean_runtime_ms: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub out: PathBuf,
    pub records: Vec<SweepRecord>,
    pub cells: Vec<CellSummary>,
}

#[derive(Serialize)]
struct SweepPlan<'a> {
    data: &'a DataPlan,
    solver: &'a SolverPlan,
    baseline: &'a BaselinePlan,
}

pub fn cmd_sweep(args: &SweepArgs) -> CliResult<SweepOutcome> {
    let cfg = ExperimentConfig::load(args.config.as_deref())?;
    let data = resolve_data(&args.data, &cfg, None, DEFAULT_SWEEP_REPEATS)?;
    let solver = resolve_solver(&args.solver, &args.ot, &cfg, data.model)?;
    let baseline = resolve_baseline(&args.baseline, &cfg, data.model)?;
    let out = args
        .out
        .clone()
        .or(cfg.out.clone())
        .ok_or_else(|| usage("--out is required"))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(0))
        .build()
        .map_err(|e| usage(e.to_string()))?;
    fs::create_dir_all(&out)?;
    write_json(
        &out.join("sweep.json"),
        &serde_json::json!({
            "config_sha256": config_hash(&SweepPlan { data: &data, solver: &solver, baseline: &baseline })?,
            "data": &data,
            "solver": &solver,
            "baseline": &baseline,
        }),
    )?;
    let records = pool.install(|| run_sweep(&data, &solver, &baseline, &out.join(RESULTS_FILE)))?;
    let cells = summarize(&records);
    write_cells(&out.join(CELLS_FILE), &cells)?;
    Ok(SweepOutcome { out, records, cells })
}

/// Every cell of the grid for one dataset size.
pub fn cells_for(n: usize, solver: &SolverPlan, baseline: &BaselinePlan) -> Vec<Cell> {
    let mut cells = Vec::new();
    for &method in &baseline.methods {
        let base = Cell {
            n,
            method,
            beta: None,
            h: None,
            sigma: None,
        };
        match method {
            Method::Ppc => {
                for &beta in &solver.beta {
                    for &h in &solver.h {
                        cells.push(Cell {
                            beta: Some(beta),
                            h: Some(h),
                            ..base
                        });
                    }
                }
            }
            Method::Tsp => cells.push(base),
            Method::Spectral => {
                for &s in &baseline.spectral_sigma {
                    cells.push(Cell { sigma: Some(s), ..base });
                }
            }
        }
    }
    cells
}

struct Prepared {
    n: usize,
    seed: u64,
    data: AnyDataset,
    w: Option<DistanceMatrix>,
}

fn run_sweep(
    data: &DataPlan,
    solver: &SolverPlan,
    baseline: &BaselinePlan,
    results: &Path,
) -> CliResult<Vec<SweepRecord>> {
    let needs_w = baseline.methods.iter().any(|m| *m != Method::Ppc);
    let instances: Vec<(usize, u64)> = data
        .n
        .iter()
        .flat_map(|&n| data.seeds.iter().map(move |&s| (n, s)))
        .collect();
    let prepared: Vec<Result<Prepared, (usize, u64, String)>> = instances
        .par_iter()
        .map(|&(n, seed)| {
            let d = generate(data, n, seed).map_err(|e| (n, seed, e.to_string()))?;
            let w = if needs_w {
                Some(baseline_matrix(&d, solver.ot).map_err(|e| (n, seed, e.to_string()))?)
            } else {
                None
            };
            Ok(Prepared { n, seed, data: d, w })
        })
        .collect();

    let writer = Mutex::new(RecordWriter::create(results)?);
    let mut tasks: Vec<(&Prepared, Cell)> = Vec::new();
    let mut failed = Vec::new();
    for p in &prepared {
        match p {
            Ok(p) => tasks.extend(cells_for(p.n, solver, baseline).into_iter().map(|c| (p, c))),
            Err((n, seed, msg)) => {
                for cell in cells_for(*n, solver, baseline) {
                    failed.push(SweepRecord {
                        cell,
                        oriented: false,
                        record: None,
                        seed: *seed,
                        failure: Some(format!("dataset: {msg}")),
                    });
                }
            }
        }
    }
    for r in &failed {
        lock(&writer).append(r)?;
    }
    let mut records: Vec<SweepRecord> = tasks
        .par_iter()
        .map(|(p, cell)| {
            let rec = run_cell(p, *cell, solver);
            lock(&writer).append(&rec).map(|_| rec)
        })
        .collect::<CliResult<Vec<_>>>()?;
    lock(&writer).flush()?;
    records.extend(failed);
    Ok(records)
}

fn lock<T>(m: &Mutex<T>) -> std::sync::MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

fn run_cell(p: &Prepared, cell: Cell, solver: &SolverPlan) -> SweepRecord {
    let oriented = match cell.method {
        Method::Ppc | Method::Tsp => solver.base.pin_ends,
        Method::Spectral => false,
    };
    let outcome: CliResult<ResultRecord> = (|| match cell.method {
        Method::Ppc => {
            let spec = solver.spec(cell.beta.unwrap_or(0.0), cell.h.unwrap_or(0.0));
            Ok(match &p.data {
                AnyDataset::Euclidean(d) => run_ppc(&Euclidean, d, &spec, p.seed)?.record,
                AnyDataset::Measure(d) => run_ppc(&solver.wasserstein(), d, &spec, p.seed)?.record,
            })
        }
        Method::Tsp | Method::Spectral => {
            let w = p.w.as_ref().ok_or_else(|| usage("missing distance matrix"))?;
            let method = match cell.sigma {
                Some(sigma) => Baseline::Spectral { sigma },
                None => Baseline::Tsp,
            };
            let ends = if oriented {
                let e = match &p.data {
                    AnyDataset::Euclidean(d) => d.extreme_batches(),
                    AnyDataset::Measure(d) => d.extreme_batches(),
                };
                Some(e.ok_or_else(|| usage("pinned ends need true times"))?)
            } else {
                None
            };
            Ok(run_baseline(w, method, p.data.true_times(), ends, p.seed)?.1)
        }
    })();
    match outcome {
        Ok(record) => SweepRecord {
            cell,
            oriented,
            record: Some(record),
            seed: p.seed,
            failure: None,
        },
        Err(e) => SweepRecord {
            cell,
            oriented,
            record: None,
            seed: p.seed,
            failure: Some(e.to_string()),
        },
    }
}

/// Appends records to `results.csv` as they arrive.
struct RecordWriter {
    w: csv::Writer<fs::File>,
}

impl RecordWriter {
    fn create(path: &Path) -> CliResult<Self> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "n",
            "method",
            "beta",
            "h",
            "sigma",
            "seed",
            "oriented",
            "params",
            "kendall_error",
            "kendall_error_raw",
            "kendall_error_up_to_reversal",
            "runtime_ms",
            "objective_final",
            "flags",
            "failure",
        ])?;
        w.flush()?;
        Ok(Self { w })
    }

    fn append(&mut self, r: &SweepRecord) -> CliResult<()> {
        let c = &r.cell;
        let rec = r.record.as_ref();
        self.w.write_record([
            c.n.to_string(),
            c.method.name().to_string(),
            fmt_opt(c.beta),
            fmt_opt(c.h),
            fmt_opt(c.sigma),
            r.seed.to_string(),
            r.oriented.to_string(),
            rec.map_or(String::new(), |x| x.params.clone()),
            fmt_opt(r.headline_error()),
            fmt_opt(rec.and_then(|x| x.kendall_error_raw)),
            fmt_opt(rec.and_then(|x| x.kendall_error_up_to_reversal)),
            fmt_opt(rec.map(|x| x.runtime_ms)),
            fmt_opt(rec.and_then(|x| x.objective_final)),
            rec.map_or(String::new(), |x| x.flags.join(";")),
            r.failure.clone().unwrap_or_default(),
        ])?;
        self.w.flush()?;
        Ok(())
    }

    fn flush(&mut self) -> CliResult<()> {
        self.w.flush().map_err(CliError::from)
    }
}

/// Per-cell means over the seeds that succeeded, in grid order.
pub fn summarize(records: &[SweepRecord]) -> Vec<CellSummary> {
    let mut groups: BTreeMap<_, Vec<&SweepRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.cell.key()).or_default().push(r);
    }
    groups
        .into_values()
        .map(|rs| {
            let ok: Vec<&ResultRecord> = rs.iter().filter_map(|r| r.record.as_ref()).collect();
            let collect = |f: &dyn Fn(&SweepRecord) -> Option<f64>| -> Option<f64> {
                let v: Vec<f64> = rs.iter().filter_map(|r| f(r)).collect();
                (v.len() == ok.len()).then(|| mean(&v)).flatten()
            };
            CellSummary {
                cell: rs[0].cell,
                runs: rs.len(),
                failures: rs.len() - ok.len(),
                mean_error: collect(&|r| r.headline_error()),
                mean_error_raw: collect(&|r| r.record.as_ref().and_then(|x| x.kendall_error_raw)),
                mean_error_up_to_reversal: collect(&|r| r.record.as_ref().and_then(|x| x.kendall_error_up_to_reversal)),
                mean_runtime_ms: mean(&ok.iter().map(|r| r.runtime_ms).collect::<Vec<_>>()),
            }
        })
        .collect()
}

fn write_cells(path: &Path, cells: &[CellSummary]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "n",
        "method",
        "beta",
        "h",
        "sigma",
        "runs",
        "failures",
        "mean_error",
        "mean_error_raw",
        "mean_error_up_to_reversal",
        "mean_runtime_ms",
    ])?;
    for s in cells {
        let c = &s.cell;
        w.write_record([
            c.n.to_string(),
            c.method.name().to_string(),
            fmt_opt(c.beta),
            fmt_opt(c.h),
            fmt_opt(c.sigma),
            s.runs.to_string(),
            s.failures.to_string(),
            fmt_opt(s.mean_error),
            fmt_opt(s.mean_error_raw),
            fmt_opt(s.mean_error_up_to_reversal),
            fmt_opt(s.mean_runtime_ms),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use principal_curves::experiment::SolverSpec;
    use principal_curves::{CurveModel, OtMethod};

    fn plans() -> (SolverPlan, BaselinePlan) {
        let solver = SolverPlan {
            beta: vec![0.1, 0.2],
            h: vec![0.05, 0.1, 0.2],
            base: SolverSpec::for_model(CurveModel::EuclideanLine),
            ot: OtMethod::Exact,
        };
        let baseline = BaselinePlan {
            methods: vec![Method::Ppc, Method::Tsp, Method::Spectral],
            spectral_sigma: vec![0.5, 1.0],
        };
        (solver, baseline)
    }

    #[test]
    fn grid_cells() {
        let (solver, baseline) = plans();
        let cells = cells_for(10, &solver, &baseline);
        assert_eq!(cells.len(), 6 + 1 + 2);
        assert_eq!(cells.iter().filter(|c| c.method == Method::Ppc).count(), 6);
    }

    #[test]
    fn summary_counts_failures() {
        let cell = Cell {
            n: 5,
            method: Method::Tsp,
            beta: None,
            h: None,
            sigma: None,
        };
        let rec = |e: f64| ResultRecord {
            method: "tsp".into(),
            params: "tsp".into(),
            seed: 0,
            kendall_error_raw: Some(e),
            kendall_error_up_to_reversal: Some(e.min(1.0 - e)),
            runtime_ms: 1.0,
            objective_final: None,
            flags: vec![],
        };
        let records = vec![
            SweepRecord {
                cell,
                oriented: true,
                record: Some(rec(0.1)),
                seed: 1,
                failure: None,
            },
            SweepRecord {
                cell,
                oriented: true,
                record: Some(rec(0.3)),
                seed: 2,
                failure: None,
            },
            SweepRecord {
                cell,
                oriented: true,
                record: None,
                seed: 3,
                failure: Some("boom".into()),
            },
        ];
        let s = summarize(&records);
        assert_eq!(s.len(), 1);
        assert_eq!((s[0].runs, s[0].failures), (3, 1));
        assert!((s[0].mean_error.unwrap() - 0.2).abs() < 1e-12);
    }
}
