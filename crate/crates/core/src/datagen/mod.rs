//! Synthetic curves of measures, doubly empirical sampling and read noise.

pub mod io;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::metric::EuclideanPoint;
use crate::ot::measure::DiscreteMeasure;
use crate::ot::reads::{multinomial_reads, on_simplex};

pub use io::{read_dataset, write_dataset, AnyDataset};

/// Ground-truth curve models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveModel {
    /// Trunk from (0,1) to the origin, then two symmetric branches.
    Dataset1,
    /// Trunk, a fast horizontal jump, then two branches.
    Dataset2,
    /// Points `(t, 0)` on the unit segment.
    EuclideanLine,
}

impl CurveModel {
    pub fn name(&self) -> &'static str {
        match self {
            CurveModel::Dataset1 => "dataset1",
            CurveModel::Dataset2 => "dataset2",
            CurveModel::EuclideanLine => "euclidean_line",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "dataset1" => Ok(CurveModel::Dataset1),
            "dataset2" => Ok(CurveModel::Dataset2),
            "euclidean_line" | "line" => Ok(CurveModel::EuclideanLine),
            other => Err(invalid(format!("unknown model `{other}`"))),
        }
    }

    /// Time domain `[0, t_max]`.
    pub fn t_max(&self) -> f64 {
        match self {
            CurveModel::Dataset1 => 1.0 + std::f64::consts::SQRT_2,
            CurveModel::Dataset2 => 2.1,
            CurveModel::EuclideanLine => 1.0,
        }
    }

    /// Skeleton point at time `t`; `left` selects the branch where there are two.
    pub fn skeleton(&self, t: f64, left: bool) -> [f64; 2] {
        let s = if left { -1.0 } else { 1.0 };
        match self {
            CurveModel::Dataset1 => {
                if t <= 1.0 {
                    [0.0, 1.0 - t]
                } else {
                    let r = (t - 1.0) / std::f64::consts::SQRT_2;
                    [s * r, -r]
                }
            }
            CurveModel::Dataset2 => {
                if t <= 1.0 {
                    [0.0, 1.0 - t]
                } else if t <= 1.1 {
                    [(t - 1.0) / 0.1 * 1.5, 0.0]
                } else {
                    [(t - 1.1) * s + 1.5, t - 1.1]
                }
            }
            CurveModel::EuclideanLine => [t, 0.0],
        }
    }

    /// Whether `t` lies in a regime with two branches.
    pub fn is_branching(&self, t: f64) -> bool {
        match self {
            CurveModel::Dataset1 => t > 1.0,
            CurveModel::Dataset2 => t > 1.1,
            CurveModel::EuclideanLine => false,
        }
    }
}

/// How a dataset was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub model: String,
    pub seed: u64,
    #[serde(rename = "N")]
    pub n: usize,
    /// Atoms per batch.
    #[serde(rename = "M")]
    pub m: usize,
    pub sigma: f64,
    /// Reads per atom, if read noise was applied.
    #[serde(rename = "R")]
    pub reads: Option<u64>,
    /// `"euclidean"` or `"wasserstein"`.
    pub backend: String,
    /// Affine simplex embedding `(x - shift) / scale` plus a slack coordinate, if applied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<SimplexEmbedding>,
}

/// A list of batches with hidden true times.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<P> {
    batches: Vec<P>,
    truth: Option<Vec<f64>>,
    pub provenance: Provenance,
}

impl<P> Dataset<P> {
    pub fn new(batches: Vec<P>, truth: Option<Vec<f64>>, provenance: Provenance) -> Result<Self> {
        if batches.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        if let Some(t) = &truth {
            if t.len() != batches.len() {
                return Err(invalid("truth length differs from batch count"));
            }
            if t.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("true time"));
            }
        }
        Ok(Self {
            batches,
            truth,
            provenance,
        })
    }

    pub fn batches(&self) -> &[P] {
        &self.batches
    }

    pub fn len(&self) -> usize {
        self.batches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.batches.is_empty()
    }

    /// True time labels, for evaluation only.
    pub fn true_times(&self) -> Option<&[f64]> {
        self.truth.as_deref()
    }

    /// The same batches with the truth withheld.
    pub fn without_truth(&self) -> Self
    where
        P: Clone,
    {
        Self {
            batches: self.batches.clone(),
            truth: None,
            provenance: self.provenance.clone(),
        }
    }

    /// Indices of the batches with the smallest and largest true time.
    pub fn extreme_batches(&self) -> Option<(usize, usize)> {
        let t = self.truth.as_ref()?;
        let lo = (0..t.len()).min_by(|&a, &b| t[a].total_cmp(&t[b]))?;
        let hi = (0..t.len()).max_by(|&a, &b| t[a].total_cmp(&t[b]).then(b.cmp(&a)))?;
        Some((lo, hi))
    }
}

/// Sampling options for measure-valued models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenOptions {
    pub n: usize,
    pub atoms_total: usize,
    pub sigma: f64,
    pub seed: u64,
    /// Equispaced times instead of i.i.d. uniform ones.
    pub grid: bool,
}

impl GenOptions {
    pub fn new(n: usize, atoms_total: usize, sigma: f64, seed: u64) -> Self {
        Self {
            n,
            atoms_total,
            sigma,
            seed,
            grid: false,
        }
    }
}

/// `m` atoms of the model's measure at time `t`, blurred by `N(0, sigma^2 I)`.
pub fn sample_batch<R: Rng + ?Sized>(
    model: CurveModel,
    t: f64,
    m: usize,
    sigma: f64,
    rng: &mut R,
) -> Result<DiscreteMeasure> {
    let noise = Normal::new(0.0, sigma).map_err(|e| invalid(e.to_string()))?;
    let mut coords = Vec::with_capacity(2 * m);
    for _ in 0..m {
        let left = if model.is_branching(t) {
            rng.random_bool(0.5)
        } else {
            false
        };
        let p = model.skeleton(t, left);
        for x in p {
            coords.push(if sigma > 0.0 { x + noise.sample(rng) } else { x });
        }
    }
    DiscreteMeasure::uniform_flat(2, coords)
}

fn sample_times(model: CurveModel, n: usize, grid: bool, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let t_max = model.t_max();
    let mut times: Vec<f64> = if grid {
        (0..n).map(|i| t_max * i as f64 / (n - 1).max(1) as f64).collect()
    } else {
        (0..n).map(|_| rng.random_range(0.0..=t_max)).collect()
    };
    times.shuffle(rng);
    times
}

/// Doubly empirical sample of a measure-valued model.
pub fn gen_measure_dataset(model: CurveModel, opts: &GenOptions) -> Result<Dataset<DiscreteMeasure>> {
    if opts.n < 2 {
        return Err(invalid("need at least two batches"));
    }
    if opts.atoms_total < opts.n {
        return Err(invalid(format!(
            "atom budget {} is smaller than the batch count {}",
            opts.atoms_total, opts.n
        )));
    }
    if !(opts.sigma >= 0.0) || !opts.sigma.is_finite() {
        return Err(invalid("sigma must be finite and nonnegative"));
    }
    let m = opts.atoms_total / opts.n;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let times = sample_times(model, opts.n, opts.grid, &mut rng);
    let batches = times
        .iter()
        .map(|&t| sample_batch(model, t, m, opts.sigma, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(
        batches,
        Some(times),
        Provenance {
            model: model.name().into(),
            seed: opts.seed,
            n: opts.n,
            m,
            sigma: opts.sigma,
            reads: None,
            backend: "wasserstein".into(),
            embedding: None,
        },
    )
}

pub fn gen_dataset1(n: usize, atoms_total: usize, sigma: f64, seed: u64) -> Result<Dataset<DiscreteMeasure>> {
    gen_measure_dataset(CurveModel::Dataset1, &GenOptions::new(n, atoms_total, sigma, seed))
}

pub fn gen_dataset2(n: usize, atoms_total: usize, sigma: f64, seed: u64) -> Result<Dataset<DiscreteMeasure>> {
    gen_measure_dataset(CurveModel::Dataset2, &GenOptions::new(n, atoms_total, sigma, seed))
}

/// Points `(t, 0)` plus optional isotropic noise, at i.i.d. uniform `t`.
pub fn gen_euclidean_line(n: usize, noise: f64, seed: u64) -> Result<Dataset<EuclideanPoint>> {
    if n < 2 {
        return Err(invalid("need at least two points"));
    }
    let normal = Normal::new(0.0, noise).map_err(|e| invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let times = sample_times(CurveModel::EuclideanLine, n, false, &mut rng);
    let batches = times
        .iter()
        .map(|&t| {
            let mut p = CurveModel::EuclideanLine.skeleton(t, false);
            if noise > 0.0 {
                p.iter_mut().for_each(|x| *x += normal.sample(&mut rng));
            }
            EuclideanPoint::new(p.to_vec())
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(
        batches,
        Some(times),
        Provenance {
            model: CurveModel::EuclideanLine.name().into(),
            seed,
            n,
            m: 1,
            sigma: noise,
            reads: None,
            backend: "euclidean".into(),
            embedding: None,
        },
    )
}

/// Affine map of `R^d` into the probability simplex of `R^{d+1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexEmbedding {
    pub shift: Vec<f64>,
    pub scale: f64,
}

impl SimplexEmbedding {
    /// Smallest embedding (up to a margin) that keeps every atom on the simplex.
    pub fn fit(measures: &[DiscreteMeasure]) -> Result<Self> {
        let d = measures.first().ok_or(Error::Empty("dataset"))?.dim();
        let mut lo = vec![f64::INFINITY; d];
        for m in measures {
            for p in m.points() {
                lo.iter_mut().zip(p).for_each(|(l, x)| *l = l.min(*x));
            }
        }
        let mut scale: f64 = 0.0;
        for m in measures {
            for p in m.points() {
                scale = scale.max(p.iter().zip(&lo).map(|(x, l)| x - l).sum());
            }
        }
        Ok(Self {
            shift: lo,
            scale: if scale > 0.0 { scale * 1.01 } else { 1.0 },
        })
    }

    pub fn embed(&self, mu: &DiscreteMeasure) -> Result<DiscreteMeasure> {
        let d = mu.dim();
        if d != self.shift.len() {
            return Err(Error::DimensionMismatch {
                left: self.shift.len(),
                right: d,
            });
        }
        let mut coords = Vec::with_capacity(mu.len() * (d + 1));
        for p in mu.points() {
            let y: Vec<f64> = p
                .iter()
                .zip(&self.shift)
                .map(|(x, s)| ((x - s) / self.scale).max(0.0))
                .collect();
            let sum: f64 = y.iter().sum();
            if sum > 1.0 + 1e-12 {
                return Err(Error::NotOnSimplex);
            }
            coords.extend_from_slice(&y);
            coords.push((1.0 - sum).max(0.0));
        }
        DiscreteMeasure::from_flat(d + 1, coords, mu.weights().to_vec())
    }
}

/// Embeds every batch into the simplex with a shared embedding.
pub fn simplex_embed(data: &Dataset<DiscreteMeasure>) -> Result<Dataset<DiscreteMeasure>> {
    let emb = SimplexEmbedding::fit(&data.batches)?;
    let batches = data.batches.iter().map(|m| emb.embed(m)).collect::<Result<Vec<_>>>()?;
    let mut provenance = data.provenance.clone();
    provenance.embedding = Some(emb);
    Dataset::new(batches, data.truth.clone(), provenance)
}

/// Replaces every atom by the frequencies of `reads` multinomial draws.
pub fn apply_reads(data: &Dataset<DiscreteMeasure>, reads: u64, seed: u64) -> Result<Dataset<DiscreteMeasure>> {
    if data.batches.iter().any(|m| m.points().any(|p| !on_simplex(p))) {
        return Err(Error::NotOnSimplex);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let batches = data
        .batches
        .iter()
        .map(|m| multinomial_reads(m, reads, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let mut provenance = data.provenance.clone();
    provenance.reads = Some(reads);
    Dataset::new(batches, data.truth.clone(), provenance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ot::nested::{nested_w1, BaseMetric, NestedDataset};

    #[test]
    fn skeleton_formulas() {
        let d2 = CurveModel::Dataset2;
        let p = d2.skeleton(1.05, false);
        assert!((p[0] - 0.75).abs() < 1e-12 && p[1] == 0.0);
        let l = d2.skeleton(2.1, true);
        let r = d2.skeleton(2.1, false);
        assert!((l[0] - 0.5).abs() < 1e-12 && (l[1] - 1.0).abs() < 1e-12);
        assert!((r[0] - 2.5).abs() < 1e-12 && (r[1] - 1.0).abs() < 1e-12);
        assert_eq!(CurveModel::Dataset1.skeleton(0.0, true), [0.0, 1.0]);
        let tip = CurveModel::Dataset1.skeleton(CurveModel::Dataset1.t_max(), false);
        assert!((tip[0] - 1.0).abs() < 1e-12 && (tip[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn sizes_and_determinism() {
        let a = gen_dataset1(250, 10000, 0.1, 1).unwrap();
        assert_eq!(a.len(), 250);
        assert!(a.batches().iter().all(|m| m.len() == 40));
        assert_eq!(a, gen_dataset1(250, 10000, 0.1, 1).unwrap());
        assert_ne!(a, gen_dataset1(250, 10000, 0.1, 2).unwrap());
        assert!(gen_dataset1(10, 5, 0.1, 1).is_err());
        assert!(gen_dataset1(1, 5, 0.1, 1).is_err());
        let t = a.true_times().unwrap();
        assert!(t.iter().all(|&x| (0.0..=CurveModel::Dataset1.t_max()).contains(&x)));
    }

    #[test]
    fn noiseless_atoms_lie_on_skeleton() {
        let data = gen_dataset2(50, 500, 0.0, 3).unwrap();
        for (m, &t) in data.batches().iter().zip(data.true_times().unwrap()) {
            let (l, r) = (
                CurveModel::Dataset2.skeleton(t, true),
                CurveModel::Dataset2.skeleton(t, false),
            );
            for p in m.points() {
                assert!(p == l || p == r);
            }
        }
    }

    #[test]
    fn start_batch_mean_is_near_origin_of_trunk() {
        let m = 400;
        let sigma = 0.1;
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b = sample_batch(CurveModel::Dataset1, 0.0, m, sigma, &mut rng).unwrap();
            let mean = b.mean();
            let bound = 3.0 * sigma / (m as f64).sqrt() * 1.5;
            assert!(mean[0].abs() < bound && (mean[1] - 1.0).abs() < bound, "{mean:?}");
        }
    }

    #[test]
    fn jump_regime_frequency() {
        let mut count = 0usize;
        let mut total = 0usize;
        for seed in 0..20 {
            let d = gen_dataset2(210, 210, 0.1, seed).unwrap();
            count += d
                .true_times()
                .unwrap()
                .iter()
                .filter(|&&t| (1.0..=1.1).contains(&t))
                .count();
            total += d.len();
        }
        let frac = count as f64 / total as f64;
        let expect = 1.0 / 21.0;
        let se = (expect * (1.0 - expect) / total as f64).sqrt();
        assert!((frac - expect).abs() < 4.0 * se, "{frac}");
    }

    #[test]
    fn line_dataset() {
        let d = gen_euclidean_line(20, 0.0, 4).unwrap();
        for (p, &t) in d.batches().iter().zip(d.true_times().unwrap()) {
            assert_eq!(p.as_slice(), &[t, 0.0]);
        }
        assert_eq!(gen_euclidean_line(2, 0.0, 1).unwrap().len(), 2);
    }

    #[test]
    fn grid_times_are_equispaced() {
        let mut o = GenOptions::new(5, 50, 0.1, 1);
        o.grid = true;
        let d = gen_measure_dataset(CurveModel::Dataset2, &o).unwrap();
        let mut t = d.true_times().unwrap().to_vec();
        t.sort_by(f64::total_cmp);
        for (i, x) in t.iter().enumerate() {
            assert!((x - 2.1 * i as f64 / 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn reads_need_simplex_and_converge() {
        let d = gen_dataset1(6, 60, 0.1, 5).unwrap();
        assert!(matches!(apply_reads(&d, 10, 1), Err(Error::NotOnSimplex)));
        let e = simplex_embed(&d).unwrap();
        assert_eq!(e.batches()[0].dim(), 3);
        let r1 = apply_reads(&e, 1, 2).unwrap();
        for m in r1.batches() {
            for p in m.points() {
                assert_eq!(p.iter().filter(|&&x| x == 1.0).count(), 1);
            }
        }
        let big = apply_reads(&e, 1_000_000, 3).unwrap();
        assert_eq!(big.provenance.reads, Some(1_000_000));
        let a = NestedDataset::new(e.batches().to_vec()).unwrap();
        let b = NestedDataset::new(big.batches().to_vec()).unwrap();
        assert!(nested_w1(&a, &b, BaseMetric::W1).unwrap() < 1e-2);
    }

    #[test]
    fn extremes() {
        let d = gen_dataset1(30, 300, 0.1, 9).unwrap();
        let (lo, hi) = d.extreme_batches().unwrap();
        let t = d.true_times().unwrap();
        assert!(t.iter().all(|&x| x >= t[lo] && x <= t[hi]));
        assert!(d.without_truth().true_times().is_none());
    }
}
