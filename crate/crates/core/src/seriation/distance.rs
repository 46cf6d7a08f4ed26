use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::matrix::Matrix;
use crate::metric::{Metric, OtMethod, Wasserstein};
use crate::ot::DiscreteMeasure;

/// Symmetry tolerance for distance matrices.
pub const SYMMETRY_TOL: f64 = 1e-9;

/// Symmetric nonnegative matrix with zero diagonal, tagged with its metric.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    matrix: Matrix,
    metric: String,
}

impl DistanceMatrix {
    pub fn new(matrix: Matrix, metric: impl Into<String>) -> Result<Self> {
        let n = matrix.rows();
        if n != matrix.cols() {
            return Err(invalid("distance matrix must be square"));
        }
        for i in 0..n {
            if matrix[(i, i)] != 0.0 {
                return Err(invalid(format!("nonzero diagonal entry at {i}")));
            }
            for j in 0..n {
                let v = matrix[(i, j)];
                if !v.is_finite() || v < 0.0 {
                    return Err(invalid(format!("bad entry ({i}, {j}) = {v}")));
                }
                if (v - matrix[(j, i)]).abs() > SYMMETRY_TOL {
                    return Err(invalid(format!("asymmetric entries at ({i}, {j})")));
                }
            }
        }
        let metric = metric.into();
        if metric.contains(',') || metric.contains('\n') {
            return Err(invalid("metric tag may not contain commas or newlines"));
        }
        Ok(Self { matrix, metric })
    }

    pub fn len(&self) -> usize {
        self.matrix.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn metric(&self) -> &str {
        &self.metric
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    /// The same matrix with rows and columns relabelled: entry `(i, j)` of the
    /// result is entry `(perm[i], perm[j])` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.len();
        Self {
            matrix: Matrix::from_fn(n, n, |i, j| self.matrix[(perm[i], perm[j])]),
            metric: self.metric.clone(),
        }
    }

    /// Row-major CSV with header `n=<N>,metric=<tag>`.
    pub fn to_csv(&self) -> String {
        let n = self.len();
        let mut s = format!("n={n},metric={}\n", self.metric);
        for i in 0..n {
            let row: Vec<String> = self.matrix.row(i).iter().map(|x| format!("{x}")).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty distance file".into()))?;
        let (n_part, metric) = header
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("bad header `{header}`")))?;
        let n: usize = n_part
            .strip_prefix("n=")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad header `{header}`")))?;
        let metric = metric
            .strip_prefix("metric=")
            .ok_or_else(|| Error::Parse(format!("bad header `{header}`")))?;
        let mut data = Vec::with_capacity(n * n);
        for line in lines.by_ref().take(n) {
            for f in line.split(',') {
                data.push(
                    f.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad entry `{f}`")))?,
                );
            }
        }
        if data.len() != n * n {
            return Err(Error::Parse(format!("expected {n}x{n} entries, found {}", data.len())));
        }
        Self::new(Matrix::from_vec(n, n, data), metric)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_csv(&fs::read_to_string(path)?)
    }
}

/// All pairwise distances, computed in parallel over `i < j`.
pub fn pairwise_matrix<M: Metric>(metric: &M, data: &[M::Point], tag: &str) -> Result<DistanceMatrix> {
    let n = data.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let values = pairs
        .par_iter()
        .map(|&(i, j)| metric.dist(&data[i], &data[j]))
        .collect::<Result<Vec<f64>>>()?;
    let mut m = Matrix::zeros(n, n);
    for (&(i, j), v) in pairs.iter().zip(values) {
        m[(i, j)] = v;
        m[(j, i)] = v;
    }
    DistanceMatrix::new(m, tag)
}

/// Metric tag of a Wasserstein distance evaluator.
pub fn w2_tag(method: &OtMethod) -> String {
    match method {
        OtMethod::Exact => "w2-exact".into(),
        OtMethod::Sinkhorn(cfg) => format!("w2-sinkhorn-reg{}", cfg.reg),
    }
}

/// Pairwise `W2` matrix, reused from `cache` when it holds a matching matrix
/// and written there otherwise.
pub fn pairwise_w2_matrix(data: &[DiscreteMeasure], method: OtMethod, cache: Option<&Path>) -> Result<DistanceMatrix> {
    let tag = w2_tag(&method);
    if let Some(path) = cache {
        if path.exists() {
            if let Ok(m) = DistanceMatrix::load(path) {
                if m.len() == data.len() && m.metric() == tag {
                    return Ok(m);
                }
            }
        }
    }
    let metric = Wasserstein {
        ot: method,
        ..Wasserstein::default()
    };
    let m = pairwise_matrix(&metric, data, &tag)?;
    if let Some(path) = cache {
        m.save(path)?;
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ot::SinkhornConfig;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn validation() {
        assert!(DistanceMatrix::new(Matrix::from_vec(2, 2, vec![0.0, 1.0, 1.0, 0.0]), "x").is_ok());
        assert!(DistanceMatrix::new(Matrix::from_vec(2, 2, vec![0.0, 1.0, 2.0, 0.0]), "x").is_err());
        assert!(DistanceMatrix::new(Matrix::from_vec(2, 2, vec![1.0, 1.0, 1.0, 0.0]), "x").is_err());
        assert!(DistanceMatrix::new(Matrix::from_vec(2, 2, vec![0.0, 1.0, 1.0, 0.0]), "a,b").is_err());
    }

    #[test]
    fn csv_round_trip() {
        let m = DistanceMatrix::new(Matrix::from_vec(2, 2, vec![0.0, 0.1 + 0.2, 0.1 + 0.2, 0.0]), "w2-exact").unwrap();
        let text = m.to_csv();
        assert!(text.starts_with("n=2,metric=w2-exact\n"));
        let back = DistanceMatrix::from_csv(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_csv(), text);
        assert!(DistanceMatrix::from_csv("n=3,metric=x\n0,1\n").is_err());
    }

    #[test]
    fn w2_matrix_examples() {
        let same = vec![DiscreteMeasure::uniform(&[vec![0.0], vec![1.0]]).unwrap(); 3];
        let m = pairwise_w2_matrix(&same, OtMethod::Exact, None).unwrap();
        assert!(m.matrix().as_slice().iter().all(|&x| x == 0.0));
        let d = vec![
            DiscreteMeasure::dirac(&[0.0]).unwrap(),
            DiscreteMeasure::dirac(&[1.0]).unwrap(),
        ];
        let m = pairwise_w2_matrix(&d, OtMethod::Exact, None).unwrap();
        assert_eq!(m.matrix().as_slice(), &[0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn exact_and_sinkhorn_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data: Vec<DiscreteMeasure> = (0..5)
            .map(|_| {
                let pts: Vec<Vec<f64>> = (0..5).map(|_| vec![rng.random(), rng.random()]).collect();
                DiscreteMeasure::uniform(&pts).unwrap()
            })
            .collect();
        let e = pairwise_w2_matrix(&data, OtMethod::Exact, None).unwrap();
        let s = pairwise_w2_matrix(&data, OtMethod::Sinkhorn(SinkhornConfig::with_reg(1e-3)), None).unwrap();
        for (a, b) in e.matrix().as_slice().iter().zip(s.matrix().as_slice()) {
            assert!((a - b).abs() < 1e-2, "{a} {b}");
        }
    }

    #[test]
    fn disk_cache_is_reused() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.csv");
        let d = vec![
            DiscreteMeasure::dirac(&[0.0]).unwrap(),
            DiscreteMeasure::dirac(&[2.0]).unwrap(),
        ];
        let m = pairwise_w2_matrix(&d, OtMethod::Exact, Some(&path)).unwrap();
        assert!(path.exists());
        // A stale file with the right shape and tag is trusted.
        fs::write(&path, "n=2,metric=w2-exact\n0,5\n5,0\n").unwrap();
        let cached = pairwise_w2_matrix(&d, OtMethod::Exact, Some(&path)).unwrap();
        assert_eq!(cached.get(0, 1), 5.0);
        assert_eq!(m.get(0, 1), 2.0);
    }
}
