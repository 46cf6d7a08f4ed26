//! Dataset directories: `atoms.csv`, `truth.csv` and `provenance.json`.

use std::fs;
use std::path::Path;

use crate::datagen::{Dataset, Provenance};
use crate::error::{Error, Result};
use crate::metric::EuclideanPoint;
use crate::ot::measure::DiscreteMeasure;

pub const ATOMS_FILE: &str = "atoms.csv";
pub const TRUTH_FILE: &str = "truth.csv";
pub const PROVENANCE_FILE: &str = "provenance.json";

/// A dataset of either backend, as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyDataset {
    Euclidean(Dataset<EuclideanPoint>),
    Measure(Dataset<DiscreteMeasure>),
}

impl AnyDataset {
    pub fn provenance(&self) -> &Provenance {
        match self {
            AnyDataset::Euclidean(d) => &d.provenance,
            AnyDataset::Measure(d) => &d.provenance,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            AnyDataset::Euclidean(d) => d.len(),
            AnyDataset::Measure(d) => d.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn true_times(&self) -> Option<&[f64]> {
        match self {
            AnyDataset::Euclidean(d) => d.true_times(),
            AnyDataset::Measure(d) => d.true_times(),
        }
    }
}

/// Something that can be written as weighted atoms.
pub trait Atoms {
    fn dim(&self) -> usize;
    fn atoms(&self) -> Vec<(&[f64], f64)>;
}

impl Atoms for EuclideanPoint {
    fn dim(&self) -> usize {
        EuclideanPoint::dim(self)
    }

    fn atoms(&self) -> Vec<(&[f64], f64)> {
        vec![(self.as_slice(), 1.0)]
    }
}

impl Atoms for DiscreteMeasure {
    fn dim(&self) -> usize {
        DiscreteMeasure::dim(self)
    }

    fn atoms(&self) -> Vec<(&[f64], f64)> {
        self.points().zip(self.weights().iter().copied()).collect()
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("{other:?}")),
    }
}

/// Writes atoms under an id column named `id_name`, one row per atom.
pub fn write_atoms_csv<A: Atoms>(path: &Path, id_name: &str, items: &[A]) -> Result<()> {
    let dim = items.first().map(|a| a.dim()).unwrap_or(0);
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header = vec![id_name.to_string()];
    header.extend((1..=dim).map(|i| format!("x{i}")));
    header.push("weight".into());
    w.write_record(&header).map_err(csv_err)?;
    for (id, item) in items.iter().enumerate() {
        for (p, wt) in item.atoms() {
            let mut row = vec![id.to_string()];
            row.extend(p.iter().map(|x| format!("{x}")));
            row.push(format!("{wt}"));
            w.write_record(&row).map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Flat coordinates and weights of one batch.
pub type AtomGroup = (Vec<f64>, Vec<f64>);

/// Reads an atoms file into `(dim, groups)`.
pub fn read_atoms_csv(path: &Path) -> Result<(usize, Vec<AtomGroup>)> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let width = r.headers().map_err(csv_err)?.len();
    if width < 3 {
        return Err(Error::Parse(format!(
            "{}: expected id, coordinates and weight",
            path.display()
        )));
    }
    let dim = width - 2;
    let mut groups: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let id: usize = parse_field(&rec[0])?;
        if id == groups.len() {
            groups.push((Vec::new(), Vec::new()));
        } else if id + 1 != groups.len() {
            return Err(Error::Parse(format!(
                "{}: ids must be contiguous and sorted",
                path.display()
            )));
        }
        let g = groups.last_mut().expect("group exists");
        for f in rec.iter().skip(1).take(dim) {
            g.0.push(parse_field(f)?);
        }
        g.1.push(parse_field(&rec[width - 1])?);
    }
    Ok((dim, groups))
}

fn parse_field<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Parse(format!("bad field `{s}`")))
}

pub fn write_truth_csv(path: &Path, times: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["batch_id", "true_time"]).map_err(csv_err)?;
    for (i, t) in times.iter().enumerate() {
        w.write_record([i.to_string(), format!("{t}")]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_truth_csv(path: &Path) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let id: usize = parse_field(&rec[0])?;
        if id != out.len() {
            return Err(Error::Parse("truth ids must be 0..N in order".into()));
        }
        out.push(parse_field(&rec[1])?);
    }
    Ok(out)
}

/// Writes the three dataset files into `dir`.
pub fn write_dataset<A: Atoms>(dir: &Path, data: &Dataset<A>) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_atoms_csv(&dir.join(ATOMS_FILE), "batch_id", data.batches())?;
    if let Some(t) = data.true_times() {
        write_truth_csv(&dir.join(TRUTH_FILE), t)?;
    }
    let json = serde_json::to_string_pretty(&data.provenance).map_err(|e| Error::Parse(e.to_string()))?;
    fs::write(dir.join(PROVENANCE_FILE), json + "\n")?;
    Ok(())
}

/// Reads a dataset directory; `truth.csv` is optional.
pub fn read_dataset(dir: &Path) -> Result<AnyDataset> {
    let prov: Provenance = serde_json::from_str(&fs::read_to_string(dir.join(PROVENANCE_FILE))?)
        .map_err(|e| Error::Parse(format!("{}: {e}", PROVENANCE_FILE)))?;
    let (dim, groups) = read_atoms_csv(&dir.join(ATOMS_FILE))?;
    let truth_path = dir.join(TRUTH_FILE);
    let truth = if truth_path.exists() {
        Some(read_truth_csv(&truth_path)?)
    } else {
        None
    };
    if prov.backend == "euclidean" {
        let pts = groups
            .into_iter()
            .map(|(c, _)| {
                if c.len() != dim {
                    return Err(Error::Parse("euclidean batches hold exactly one atom".into()));
                }
                EuclideanPoint::new(c)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(AnyDataset::Euclidean(Dataset::new(pts, truth, prov)?))
    } else {
        let ms = groups
            .into_iter()
            .map(|(c, w)| DiscreteMeasure::from_flat(dim, c, w))
            .collect::<Result<Vec<_>>>()?;
        Ok(AnyDataset::Measure(Dataset::new(ms, truth, prov)?))
    }
}
