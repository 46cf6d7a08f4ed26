use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::matrix::Matrix;
use crate::metric::{cached_dist, DistanceCache, KnotCurve, Metric};
use crate::ppc::config::{Mode, PpcConfig};
use crate::ppc::objective::{evaluate, update_knots, Evaluation, Objective};
use crate::ppc::tsp::{solve_path_with, Dense, Lazy, PathCost, Window};

/// Step sizes tried along the geodesics from the old to the updated knots
/// when a full update increases the objective.
const DAMPING: [f64; 3] = [0.5, 0.25, 0.125];

/// D^2-weighted seeding over distinct batches; pins then replace the
/// selected knots nearest to them.
pub fn init_kmeanspp<M: Metric>(
    metric: &M,
    data: &[M::Point],
    k: usize,
    seed: u64,
    pins: &[(usize, M::Point)],
) -> Result<KnotCurve<M::Point>> {
    let n = data.len();
    if k == 0 || k > n {
        return Err(invalid(format!("need 1 <= K <= N, got K={k}, N={n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = vec![rng.random_range(0..n)];
    let mut taken = vec![false; n];
    taken[chosen[0]] = true;
    let mut d2: Vec<f64> = data
        .iter()
        .map(|x| metric.dist_sq(x, &data[chosen[0]]))
        .collect::<Result<_>>()?;
    while chosen.len() < k {
        let total: f64 = (0..n).filter(|&i| !taken[i]).map(|i| d2[i]).sum();
        let next = if total > 0.0 {
            let mut u = rng.random_range(0.0..total);
            let mut pick = None;
            for i in (0..n).filter(|&i| !taken[i]) {
                if d2[i] > 0.0 {
                    pick = Some(i);
                    if u < d2[i] {
                        break;
                    }
                    u -= d2[i];
                }
            }
            pick.expect("positive mass")
        } else {
            let free: Vec<usize> = (0..n).filter(|&i| !taken[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        taken[next] = true;
        chosen.push(next);
        for i in 0..n {
            d2[i] = d2[i].min(metric.dist_sq(&data[i], &data[next])?);
        }
    }
    let mut pool: Vec<M::Point> = chosen.iter().map(|&i| data[i].clone()).collect();
    let mut sorted_pins: Vec<&(usize, M::Point)> = pins.iter().collect();
    sorted_pins.sort_by_key(|p| p.0);
    for (_, p) in &sorted_pins {
        let mut best = (f64::INFINITY, 0);
        for (i, q) in pool.iter().enumerate() {
            let d = metric.dist(p, q)?;
            if d < best.0 {
                best = (d, i);
            }
        }
        pool.remove(best.1);
    }
    let mut knots = Vec::with_capacity(k);
    let mut pool = pool.into_iter();
    for idx in 0..k {
        match sorted_pins.iter().find(|p| p.0 == idx) {
            Some((_, p)) => knots.push(p.clone()),
            None => knots.push(pool.next().expect("pool sized to fill free slots")),
        }
    }
    KnotCurve::with_pinned(knots, sorted_pins.iter().map(|p| p.0).collect())
}

/// Reorders knots to (approximately) minimize the discrete length.
///
/// Pinned knots, and the two ends when `fixed_ends` is set, keep their
/// positions; the knots between consecutive anchors are ordered as
/// independent fixed-endpoint path problems.
pub fn tsp_order<M: Metric>(metric: &M, curve: &KnotCurve<M::Point>, fixed_ends: bool) -> Result<KnotCurve<M::Point>> {
    tsp_order_cached(metric, curve, fixed_ends, None)
}

pub(crate) fn tsp_order_cached<M: Metric>(
    metric: &M,
    curve: &KnotCurve<M::Point>,
    fixed_ends: bool,
    cache: Option<&DistanceCache>,
) -> Result<KnotCurve<M::Point>> {
    let k = curve.len();
    if k < 3 {
        return Ok(curve.clone());
    }
    let knots = curve.knots();
    let mut cost = Lazy::new(
        k,
        |i, j| metric.lower_bound(&knots[i], &knots[j]),
        |i, j| cached_dist(metric, cache, &knots[i], &knots[j]),
    );
    let mut anchors: Vec<usize> = curve.pinned().to_vec();
    if fixed_ends {
        anchors.extend([0, k - 1]);
        anchors.sort_unstable();
        anchors.dedup();
    }
    let order = order_with_anchors_with(&mut cost, &anchors);
    cost.finish()?;
    curve.permuted(&order)
}

/// Path order of all nodes of `dist` with the `anchors` held at their own positions.
pub fn order_with_anchors(dist: &Matrix, anchors: &[usize]) -> Vec<usize> {
    order_with_anchors_with(&mut Dense(dist), anchors)
}

/// [`order_with_anchors`] over any [`PathCost`].
pub fn order_with_anchors_with<C: PathCost + ?Sized>(cost: &mut C, anchors: &[usize]) -> Vec<usize> {
    let k = cost.size();
    let mut order: Vec<usize> = (0..k).collect();
    let mut bounds: Vec<(usize, usize, bool, bool)> = Vec::new();
    if anchors.is_empty() {
        bounds.push((0, k - 1, false, false));
    } else {
        if anchors[0] > 0 {
            bounds.push((0, anchors[0], false, true));
        }
        for w in anchors.windows(2) {
            bounds.push((w[0], w[1], true, true));
        }
        let last = *anchors.last().expect("nonempty");
        if last < k - 1 {
            bounds.push((last, k - 1, true, false));
        }
    }
    for (lo, hi, fix_lo, fix_hi) in bounds {
        let m = hi - lo + 1;
        if m < 3 {
            continue;
        }
        let mut sub = Window {
            inner: &mut *cost,
            lo,
            n: m,
        };
        let path = solve_path_with(&mut sub, fix_lo.then_some(0), fix_hi.then_some(m - 1));
        for (i, p) in path.into_iter().enumerate() {
            order[lo + i] = lo + p;
        }
    }
    order
}

/// One row of the fit trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub objective: f64,
    pub data_fit: f64,
    pub length: f64,
    /// Largest knot displacement in this iteration.
    pub movement: f64,
    pub elapsed_ms: f64,
}

/// Per-iteration history of a fit.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FitTrace {
    pub records: Vec<TraceRecord>,
    pub converged: bool,
    /// An update raised the objective even after damping; the fit stopped at the previous curve.
    pub descent_violation: bool,
    pub timed_out: bool,
    /// The nonlocal objective had to fall back to the local one at least once.
    pub local_fallback: bool,
}

impl FitTrace {
    pub fn objectives(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.objective).collect()
    }

    pub fn final_objective(&self) -> Option<f64> {
        self.records.last().map(|r| r.objective)
    }

    /// `obj[i+1] <= obj[i] + tol * (1 + |obj[i]|)` for every step.
    pub fn is_monotone(&self, tol: f64) -> bool {
        self.records
            .windows(2)
            .all(|w| w[1].objective <= w[0].objective + tol * (1.0 + w[0].objective.abs()))
    }
}

/// Fitted curve and its trace.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult<P> {
    pub curve: KnotCurve<P>,
    pub trace: FitTrace,
}

/// Tolerance used by the descent safeguard.
pub const DESCENT_TOL: f64 = 1e-9;

/// Coupled Lloyd iteration: reorder knots, assign Voronoi cells, update knots.
pub fn fit<M: Metric>(metric: &M, data: &[M::Point], config: &PpcConfig<M::Point>) -> Result<FitResult<M::Point>> {
    let init = init_kmeanspp(metric, data, config.k, config.seed, &config.pins)?;
    fit_from(metric, data, config, init)
}

/// [`fit`] from a given initial curve; the curve's pinned set is kept.
pub fn fit_from<M: Metric>(
    metric: &M,
    data: &[M::Point],
    config: &PpcConfig<M::Point>,
    init: KnotCurve<M::Point>,
) -> Result<FitResult<M::Point>> {
    config.validate()?;
    if data.is_empty() {
        return Err(crate::error::Error::Empty("dataset"));
    }
    for x in data {
        metric.validate(x)?;
    }
    let start = Instant::now();
    let cache = (config.use_cache && metric.cache_worthy()).then(DistanceCache::new);
    let cache = cache.as_ref();
    let nonlocal = (config.mode == Mode::Nonlocal).then_some((&config.kernel, &config.bandwidth));
    let eval = |c: &KnotCurve<M::Point>| evaluate(metric, data, c, config.beta, nonlocal, cache);

    let mut curve = init;
    let first = eval(&curve)?;
    let mut trace = FitTrace {
        local_fallback: first.objective.local_fallback,
        ..FitTrace::default()
    };
    let record = |it: usize, o: &Objective, movement: f64| TraceRecord {
        iteration: it,
        objective: o.total,
        data_fit: o.data_fit,
        length: o.length,
        movement,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    trace.records.push(record(0, &first.objective, 0.0));
    let mut prev = first.objective.total;

    for it in 1..=config.max_outer_iters {
        if config.time_limit.is_some_and(|t| start.elapsed() > t) {
            trace.timed_out = true;
            break;
        }
        let ordered = tsp_order_cached(metric, &curve, false, cache)?;
        let Evaluation { partition, weights, .. } = eval(&ordered)?;
        if let Some(c) = cache {
            c.clear();
        }
        let updated = update_knots(metric, data, &ordered, &partition, config.beta, weights.as_ref())?;
        let mut accepted = None;
        let full = eval(&updated)?;
        let bound = prev + DESCENT_TOL * (1.0 + prev.abs());
        if full.objective.total <= bound {
            accepted = Some((updated, full.objective));
        } else {
            for t in DAMPING {
                let cand = damped(metric, &ordered, &updated, t)?;
                let e = eval(&cand)?;
                if e.objective.total <= bound {
                    accepted = Some((cand, e.objective));
                    break;
                }
            }
        }
        let Some((next, obj)) = accepted else {
            trace.descent_violation = true;
            break;
        };
        let mut movement: f64 = 0.0;
        for (a, b) in ordered.knots().iter().zip(next.knots()) {
            movement = movement.max(cached_dist(metric, cache, a, b)?);
        }
        trace.local_fallback |= obj.local_fallback;
        trace.records.push(record(it, &obj, movement));
        let drop = prev - obj.total;
        curve = next;
        prev = obj.total;
        if drop < config.epsilon || movement < config.movement_tol {
            trace.converged = true;
            break;
        }
    }
    Ok(FitResult { curve, trace })
}

fn damped<M: Metric>(
    metric: &M,
    old: &KnotCurve<M::Point>,
    new: &KnotCurve<M::Point>,
    t: f64,
) -> Result<KnotCurve<M::Point>> {
    let mut out = old.clone();
    for k in 0..old.len() {
        if !old.is_pinned(k) {
            out.set_knot(k, metric.geodesic_point(old.knot(k), new.knot(k), t)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{discrete_length, Euclidean, EuclideanPoint};
    use crate::ppc::objective::{objective_ppc_k, voronoi_cells};
    use crate::ppc::tsp::held_karp;

    fn p(v: &[f64]) -> EuclideanPoint {
        EuclideanPoint::new(v.to_vec()).unwrap()
    }

    fn line(xs: &[f64]) -> Vec<EuclideanPoint> {
        xs.iter().map(|&x| p(&[x])).collect()
    }

    #[test]
    fn kmeanspp_basics() {
        let data = line(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        let c = init_kmeanspp(&Euclidean, &data, 5, 3, &[]).unwrap();
        let mut xs: Vec<f64> = c.knots().iter().map(|k| k.as_slice()[0]).collect();
        xs.sort_by(f64::total_cmp);
        assert_eq!(xs, vec![0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(init_kmeanspp(&Euclidean, &data, 1, 3, &[]).unwrap().len(), 1);
        assert!(init_kmeanspp(&Euclidean, &data, 6, 3, &[]).is_err());
        assert_eq!(
            init_kmeanspp(&Euclidean, &data, 3, 9, &[]).unwrap(),
            init_kmeanspp(&Euclidean, &data, 3, 9, &[]).unwrap()
        );
    }

    #[test]
    fn kmeanspp_separates_clusters() {
        let mut data = Vec::new();
        for i in 0..10 {
            data.push(p(&[0.01 * i as f64, 0.0]));
            data.push(p(&[100.0 + 0.01 * i as f64, 0.0]));
        }
        let hits = (0..200)
            .filter(|&s| {
                let c = init_kmeanspp(&Euclidean, &data, 2, s, &[]).unwrap();
                let a = c.knot(0).as_slice()[0] > 50.0;
                let b = c.knot(1).as_slice()[0] > 50.0;
                a != b
            })
            .count();
        assert!(hits as f64 >= 0.99 * 200.0, "{hits}");
    }

    #[test]
    fn kmeanspp_installs_pins() {
        let data = line(&[0.0, 1.0, 2.0, 3.0]);
        let pins = vec![(0, p(&[-1.0])), (3, p(&[5.0]))];
        let c = init_kmeanspp(&Euclidean, &data, 4, 1, &pins).unwrap();
        assert_eq!(c.knot(0), &p(&[-1.0]));
        assert_eq!(c.knot(3), &p(&[5.0]));
        assert_eq!(c.pinned(), &[0, 3]);
    }

    #[test]
    fn tsp_order_examples() {
        let c = KnotCurve::new(line(&[0.0, 2.0, 1.0, 3.0])).unwrap();
        let o = tsp_order(&Euclidean, &c, false).unwrap();
        assert_eq!(o.knots(), &line(&[0.0, 1.0, 2.0, 3.0])[..]);
        let c = KnotCurve::new(line(&[0.0, 1.0, 2.0, 3.0])).unwrap();
        assert_eq!(tsp_order(&Euclidean, &c, false).unwrap(), c);
        let c = KnotCurve::new(line(&[1.0, 0.0, 3.0, 2.0, 4.0])).unwrap();
        let o = tsp_order(&Euclidean, &c, true).unwrap();
        assert_eq!(o.knot(0), &p(&[1.0]));
        assert_eq!(o.knot(4), &p(&[4.0]));
        assert!(discrete_length(&Euclidean, &o).unwrap() <= discrete_length(&Euclidean, &c).unwrap());
    }

    #[test]
    fn tsp_order_respects_midpoint_pins() {
        let c = KnotCurve::with_pinned(line(&[0.0, 3.0, 5.0, 1.0, 4.0, 2.0, 6.0]), vec![0, 3, 6]).unwrap();
        let o = tsp_order(&Euclidean, &c, false).unwrap();
        for &i in &[0, 3, 6] {
            assert_eq!(o.knot(i), c.knot(i));
        }
        assert!(discrete_length(&Euclidean, &o).unwrap() <= discrete_length(&Euclidean, &c).unwrap());
    }

    #[test]
    fn tsp_order_matches_held_karp_on_small_instances() {
        let xs = [0.3, 2.5, -1.0, 4.2, 0.9, 3.3, -2.2, 1.7];
        let c = KnotCurve::new(line(&xs)).unwrap();
        let o = tsp_order(&Euclidean, &c, false).unwrap();
        let d = Matrix::from_fn(8, 8, |i, j| (xs[i] - xs[j]).abs());
        let hk = held_karp(&d, None, None);
        let hk_len: f64 = hk.windows(2).map(|w| d[(w[0], w[1])]).sum();
        assert!((discrete_length(&Euclidean, &o).unwrap() - hk_len).abs() < 1e-12);
    }

    #[test]
    fn fit_on_collinear_points() {
        let xs: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let data = line(&[3.0, 7.0, 0.0, 5.0, 1.0, 6.0, 2.0, 4.0]);
        let cfg: PpcConfig<EuclideanPoint> = PpcConfig::new(1e-3, 8);
        let r = fit(&Euclidean, &data, &cfg).unwrap();
        assert!(r.trace.is_monotone(DESCENT_TOL));
        let o = r.trace.final_objective().unwrap();
        assert!(o <= 1e-3 * 7.0 + 1e-12, "{o}");
        let mut k: Vec<f64> = r.curve.knots().iter().map(|k| k.as_slice()[0]).collect();
        if k[0] > k[7] {
            k.reverse();
        }
        for (a, b) in k.iter().zip(&xs) {
            assert!((a - b).abs() < 1e-2);
        }
    }

    #[test]
    fn fit_keeps_pins_bitwise() {
        let data = line(&[0.2, 0.5, 0.9, 1.4, 2.0, 2.2, 3.1]);
        let mut cfg: PpcConfig<EuclideanPoint> = PpcConfig::new(0.05, 4);
        cfg.pins = vec![(0, p(&[-0.5])), (3, p(&[3.5]))];
        let r = fit(&Euclidean, &data, &cfg).unwrap();
        assert_eq!(r.curve.knot(0), &p(&[-0.5]));
        assert_eq!(r.curve.knot(3), &p(&[3.5]));
        assert!(r.trace.is_monotone(DESCENT_TOL));
    }

    #[test]
    fn beta_zero_fixed_point_is_kmeans_stationary() {
        let data: Vec<EuclideanPoint> = (0..30)
            .map(|i| p(&[(i as f64 * 0.37).sin() * 3.0, (i as f64 * 0.91).cos()]))
            .collect();
        let mut cfg: PpcConfig<EuclideanPoint> = PpcConfig::new(0.0, 4);
        cfg.epsilon = 1e-14;
        cfg.max_outer_iters = 500;
        let r = fit(&Euclidean, &data, &cfg).unwrap();
        let part = voronoi_cells(&Euclidean, &data, &r.curve).unwrap();
        for (k, cell) in part.cells.iter().enumerate() {
            if cell.is_empty() {
                continue;
            }
            let mut mean = [0.0; 2];
            for &i in cell {
                mean[0] += data[i].as_slice()[0] / cell.len() as f64;
                mean[1] += data[i].as_slice()[1] / cell.len() as f64;
            }
            let knot = r.curve.knot(k).as_slice();
            assert!((knot[0] - mean[0]).abs() < 1e-6 && (knot[1] - mean[1]).abs() < 1e-6);
        }
    }

    #[test]
    fn large_beta_collapses_curve() {
        let data: Vec<EuclideanPoint> = (0..20).map(|i| p(&[i as f64 / 19.0, (i % 3) as f64 * 0.1])).collect();
        let cfg: PpcConfig<EuclideanPoint> = PpcConfig::new(10.0, 6);
        let r = fit(&Euclidean, &data, &cfg).unwrap();
        assert!(r.trace.is_monotone(DESCENT_TOL));
        let len = discrete_length(&Euclidean, &r.curve).unwrap();
        assert!(len < 1e-3, "{len}");
        let o = objective_ppc_k(&Euclidean, &data, &r.curve, 10.0).unwrap();
        assert!((o.total - r.trace.final_objective().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn nonlocal_fit_is_monotone() {
        let data: Vec<EuclideanPoint> = (0..60)
            .map(|i| {
                let t = i as f64 / 59.0;
                p(&[t, (3.0 * t).sin() * 0.3 + 0.02 * ((i * 7 % 5) as f64 - 2.0)])
            })
            .collect();
        let cfg: PpcConfig<EuclideanPoint> = PpcConfig::new(0.01, 12).nonlocal(0.1);
        let r = fit(&Euclidean, &data, &cfg).unwrap();
        assert!(r.trace.is_monotone(DESCENT_TOL));
        assert!(r.trace.records.len() > 2);
    }
}
