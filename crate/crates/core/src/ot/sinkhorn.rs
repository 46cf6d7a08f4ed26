//! Entropic optimal transport.
//!
//! Scaling iterations run on a kernel `exp((f_i + g_j - C_ij) / eps)` whose
//! dual potentials `f, g` absorb the scalings whenever they drift out of
//! range, and `eps` is decreased geometrically from the cost scale down to the
//! target regularization, warm-starting each stage from the previous
//! potentials. This reaches small `reg` without underflow.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::ot::exact::{cost_matrix, GroundCost};
use crate::ot::measure::DiscreteMeasure;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinkhornConfig {
    pub reg: f64,
    pub max_iter: usize,
    /// Stop when the L1 row-marginal error falls below this.
    pub tol: f64,
    /// Decrease `eps` geometrically towards `reg` instead of starting there.
    pub eps_scaling: bool,
}

impl Default for SinkhornConfig {
    fn default() -> Self {
        Self {
            reg: 1e-2,
            max_iter: 20_000,
            tol: 1e-10,
            eps_scaling: true,
        }
    }
}

impl SinkhornConfig {
    pub fn with_reg(reg: f64) -> Self {
        Self { reg, ..Self::default() }
    }
}

#[derive(Debug, Clone)]
pub struct SinkhornResult {
    /// `sqrt(<C, P>)` for the squared-Euclidean cost.
    pub value: f64,
    /// Transport cost `<C, P>` of the rounded plan.
    pub cost: f64,
    /// Entropic plan after rounding onto the exact coupling polytope.
    pub plan: Matrix,
    pub converged: bool,
    pub iterations: usize,
    /// L1 marginal error before rounding.
    pub marginal_error: f64,
}

const SCALING_BOUND: f64 = 1e30;

/// Entropic transport for an explicit cost matrix.
///
/// The returned plan is projected onto `Pi(a, b)` (row scaling, column
/// scaling, rank-one correction), so its cost is never below the exact
/// optimum.
pub fn sinkhorn_with_cost(a: &[f64], b: &[f64], cost: &Matrix, cfg: &SinkhornConfig) -> Result<SinkhornResult> {
    if !(cfg.reg > 0.0) || !cfg.reg.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "sinkhorn reg must be positive, got {}",
            cfg.reg
        )));
    }
    let (m0, n0) = (a.len(), b.len());
    if m0 == 0 || n0 == 0 {
        return Err(Error::Empty("transport marginals"));
    }
    // Zero-mass atoms carry no potential; solve on the positive support.
    let rows: Vec<usize> = (0..m0).filter(|&i| a[i] > 0.0).collect();
    let cols: Vec<usize> = (0..n0).filter(|&j| b[j] > 0.0).collect();
    let aa: Vec<f64> = rows.iter().map(|&i| a[i]).collect();
    let bb: Vec<f64> = cols.iter().map(|&j| b[j]).collect();
    let c = Matrix::from_fn(rows.len(), cols.len(), |i, j| cost[(rows[i], cols[j])]);

    let (p, converged, iterations, err) = solve_reduced(&aa, &bb, &c, cfg);
    let p = round_to_coupling(p, &aa, &bb);

    let mut plan = Matrix::zeros(m0, n0);
    let mut total = 0.0;
    for (ii, &i) in rows.iter().enumerate() {
        for (jj, &j) in cols.iter().enumerate() {
            let v = p[(ii, jj)];
            plan[(i, j)] = v;
            total += v * cost[(i, j)];
        }
    }
    let total = total.max(0.0);
    Ok(SinkhornResult {
        value: total.sqrt(),
        cost: total,
        plan,
        converged,
        iterations,
        marginal_error: err,
    })
}

/// Entropic 2-Wasserstein estimate between two measures.
pub fn w2_sinkhorn(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cfg: &SinkhornConfig) -> Result<SinkhornResult> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch {
            left: mu.dim(),
            right: nu.dim(),
        });
    }
    let c = cost_matrix(mu, nu, GroundCost::SquaredEuclidean);
    sinkhorn_with_cost(mu.weights(), nu.weights(), &c, cfg)
}

fn solve_reduced(a: &[f64], b: &[f64], c: &Matrix, cfg: &SinkhornConfig) -> (Matrix, bool, usize, f64) {
    let (m, n) = (a.len(), b.len());
    let cmax = c.max().max(0.0);
    if cmax == 0.0 || m == 1 || n == 1 {
        // Only one coupling is possible (or every coupling is optimal and
        // the entropic one is the product measure).
        let p = Matrix::from_fn(m, n, |i, j| a[i] * b[j]);
        return (p, true, 0, 0.0);
    }

    let mut f = vec![0.0; m];
    let mut g = vec![0.0; n];
    let mut u = vec![1.0; m];
    let mut v = vec![1.0; n];
    let mut kernel = Matrix::zeros(m, n);
    let mut kv = vec![0.0; m];
    let mut ktu = vec![0.0; n];

    let mut eps = if cfg.eps_scaling { cmax.max(cfg.reg) } else { cfg.reg };
    let mut iterations = 0usize;
    let mut err = f64::INFINITY;
    let mut converged = false;

    'stages: loop {
        let last_stage = eps <= cfg.reg;
        let stage_tol = if last_stage { cfg.tol } else { cfg.tol.max(1e-4) };
        build_kernel(&mut kernel, c, &f, &g, eps);
        u.iter_mut().for_each(|x| *x = 1.0);
        v.iter_mut().for_each(|x| *x = 1.0);

        loop {
            if iterations >= cfg.max_iter {
                absorb(&mut f, &mut g, &mut u, &mut v, eps);
                break 'stages;
            }
            iterations += 1;

            matvec(&kernel, &v, &mut kv);
            let mut bad = false;
            for i in 0..m {
                u[i] = a[i] / kv[i];
                bad |= !(u[i].is_finite() && u[i] > 0.0);
            }
            if !bad {
                matvec_t(&kernel, &u, &mut ktu);
                for j in 0..n {
                    v[j] = b[j] / ktu[j];
                    bad |= !(v[j].is_finite() && v[j] > 0.0);
                }
            }
            if bad {
                // The kernel underflowed on some row or column: refresh the
                // potentials with one exact log-domain sweep.
                log_domain_sweep(&mut f, &mut g, c, a, b, eps);
                build_kernel(&mut kernel, c, &f, &g, eps);
                u.iter_mut().for_each(|x| *x = 1.0);
                v.iter_mut().for_each(|x| *x = 1.0);
                continue;
            }
            let out_of_range = u
                .iter()
                .chain(&v)
                .any(|&x| !(1.0 / SCALING_BOUND..=SCALING_BOUND).contains(&x));
            if out_of_range {
                absorb(&mut f, &mut g, &mut u, &mut v, eps);
                build_kernel(&mut kernel, c, &f, &g, eps);
            }
            if iterations.is_multiple_of(5) || out_of_range {
                // Columns are exact after the v-update; measure the rows.
                matvec(&kernel, &v, &mut kv);
                err = (0..m).map(|i| (u[i] * kv[i] - a[i]).abs()).sum();
                if err < stage_tol {
                    absorb(&mut f, &mut g, &mut u, &mut v, eps);
                    if last_stage {
                        converged = true;
                        break 'stages;
                    }
                    break;
                }
            }
        }
        eps = (eps * 0.5).max(cfg.reg);
    }

    let mut p = Matrix::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            p[(i, j)] = ((f[i] + g[j] - c[(i, j)]) / eps).exp();
        }
    }
    (p, converged, iterations, err)
}

fn build_kernel(kernel: &mut Matrix, c: &Matrix, f: &[f64], g: &[f64], eps: f64) {
    let n = c.cols();
    for (i, fi) in f.iter().enumerate() {
        let crow = c.row(i);
        let krow = kernel.row_mut(i);
        for j in 0..n {
            krow[j] = ((fi + g[j] - crow[j]) / eps).exp();
        }
    }
}

fn absorb(f: &mut [f64], g: &mut [f64], u: &mut [f64], v: &mut [f64], eps: f64) {
    for (fi, ui) in f.iter_mut().zip(u.iter_mut()) {
        if ui.is_finite() && *ui > 0.0 {
            *fi += eps * ui.ln();
        }
        *ui = 1.0;
    }
    for (gj, vj) in g.iter_mut().zip(v.iter_mut()) {
        if vj.is_finite() && *vj > 0.0 {
            *gj += eps * vj.ln();
        }
        *vj = 1.0;
    }
}

fn log_domain_sweep(f: &mut [f64], g: &mut [f64], c: &Matrix, a: &[f64], b: &[f64], eps: f64) {
    let (m, n) = (a.len(), b.len());
    for i in 0..m {
        let row = c.row(i);
        let lse = log_sum_exp((0..n).map(|j| (g[j] - row[j]) / eps));
        f[i] = eps * (a[i].ln() - lse);
    }
    for j in 0..n {
        let lse = log_sum_exp((0..m).map(|i| (f[i] - c[(i, j)]) / eps));
        g[j] = eps * (b[j].ln() - lse);
    }
}

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let mx = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if !mx.is_finite() {
        return mx;
    }
    mx + xs.map(|x| (x - mx).exp()).sum::<f64>().ln()
}

#[inline]
fn matvec(k: &Matrix, v: &[f64], out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        *o = k.row(i).iter().zip(v).map(|(a, b)| a * b).sum();
    }
}

#[inline]
fn matvec_t(k: &Matrix, u: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    for (i, ui) in u.iter().enumerate() {
        for (o, kij) in out.iter_mut().zip(k.row(i)) {
            *o += ui * kij;
        }
    }
}

/// Projects a nonnegative matrix onto the couplings of `a` and `b`.
fn round_to_coupling(mut p: Matrix, a: &[f64], b: &[f64]) -> Matrix {
    let (m, n) = (a.len(), b.len());
    let r = p.row_sums();
    for i in 0..m {
        let x = if r[i] > a[i] { a[i] / r[i] } else { 1.0 };
        p.row_mut(i).iter_mut().for_each(|v| *v *= x);
    }
    let cs = p.col_sums();
    let y: Vec<f64> = (0..n).map(|j| if cs[j] > b[j] { b[j] / cs[j] } else { 1.0 }).collect();
    for i in 0..m {
        for (v, yj) in p.row_mut(i).iter_mut().zip(&y) {
            *v *= yj;
        }
    }
    let ea: Vec<f64> = a.iter().zip(p.row_sums()).map(|(ai, ri)| (ai - ri).max(0.0)).collect();
    let eb: Vec<f64> = b.iter().zip(p.col_sums()).map(|(bj, cj)| (bj - cj).max(0.0)).collect();
    let norm: f64 = ea.iter().sum();
    if norm > 0.0 {
        for (i, ei) in ea.iter().enumerate() {
            for (v, ej) in p.row_mut(i).iter_mut().zip(&eb) {
                *v += ei * ej / norm;
            }
        }
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ot::exact::w2_exact;

    fn line(points: &[f64]) -> DiscreteMeasure {
        let pts: Vec<Vec<f64>> = points.iter().map(|&p| vec![p]).collect();
        DiscreteMeasure::uniform(&pts).unwrap()
    }

    #[test]
    fn dirac_self_is_zero() {
        let d = DiscreteMeasure::dirac(&[0.3, -1.0]).unwrap();
        for reg in [1.0, 1e-2, 1e-4] {
            assert_eq!(w2_sinkhorn(&d, &d, &SinkhornConfig::with_reg(reg)).unwrap().value, 0.0);
        }
    }

    #[test]
    fn two_point_instance_close_to_exact() {
        let mu = line(&[0.0, 1.0]);
        let nu = line(&[2.0, 3.0]);
        let r = w2_sinkhorn(&mu, &nu, &SinkhornConfig::with_reg(1e-3)).unwrap();
        assert!(r.converged);
        assert!((r.value - 2.0).abs() < 1e-2, "{}", r.value);
        assert!(r.value >= 2.0 - 1e-12);
    }

    #[test]
    fn symmetric_in_arguments() {
        let mu = DiscreteMeasure::uniform(&[vec![0.0, 0.1], vec![0.7, 0.2], vec![0.3, 0.9]]).unwrap();
        let nu = DiscreteMeasure::new(&[vec![0.5, 0.5], vec![0.1, 0.8]], vec![0.3, 0.7]).unwrap();
        let cfg = SinkhornConfig::with_reg(1e-2);
        let x = w2_sinkhorn(&mu, &nu, &cfg).unwrap().value;
        let y = w2_sinkhorn(&nu, &mu, &cfg).unwrap().value;
        assert!((x - y).abs() < 1e-9, "{x} vs {y}");
    }

    #[test]
    fn plan_is_a_coupling() {
        let mu = line(&[0.0, 0.4, 1.0, 1.5]);
        let nu = DiscreteMeasure::new(&[vec![0.2], vec![2.0], vec![-1.0]], vec![0.5, 0.25, 0.25]).unwrap();
        let r = w2_sinkhorn(&mu, &nu, &SinkhornConfig::with_reg(1e-3)).unwrap();
        for (x, w) in r.plan.row_sums().iter().zip(mu.weights()) {
            assert!((x - w).abs() < 1e-12);
        }
        for (x, w) in r.plan.col_sums().iter().zip(nu.weights()) {
            assert!((x - w).abs() < 1e-12);
        }
        let exact = w2_exact(&mu, &nu).unwrap().0;
        assert!(r.value >= exact - 1e-12);
    }

    #[test]
    fn rejects_bad_reg() {
        let d = line(&[0.0]);
        assert!(w2_sinkhorn(&d, &d, &SinkhornConfig::with_reg(0.0)).is_err());
    }
}
