//! Files written by the subcommands and their provenance hashes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use principal_curves::datagen::io::{ATOMS_FILE, PROVENANCE_FILE, TRUTH_FILE};
use principal_curves::ppc::FitTrace;
use principal_curves::{DiscreteMeasure, EuclideanPoint};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const KNOTS_FILE: &str = "knots.csv";
pub const TRACE_FILE: &str = "trace.csv";
pub const PLOT_FILE: &str = "plot.csv";
pub const SVG_FILE: &str = "curve.svg";
pub const FIT_FILE: &str = "fit.json";
pub const PSEUDOTIMES_FILE: &str = "pseudotimes.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const TIMING_FILE: &str = "timing.json";
pub const RESULTS_FILE: &str = "results.csv";
pub const CELLS_FILE: &str = "cells.csv";

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(2 * bytes.len()), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

/// Hash of the files of a dataset directory, in a fixed order.
pub fn dataset_hash(dir: &Path) -> CliResult<String> {
    let mut h = Sha256::new();
    for name in [ATOMS_FILE, TRUTH_FILE, PROVENANCE_FILE] {
        let path = dir.join(name);
        if !path.exists() {
            continue;
        }
        let bytes = fs::read(&path)?;
        h.update(name.as_bytes());
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    Ok(hex(&h.finalize()))
}

/// Hash of the canonical JSON form of a configuration.
pub fn config_hash<T: Serialize>(cfg: &T) -> CliResult<String> {
    Ok(sha256_hex(serde_json::to_string(cfg)?.as_bytes()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map_or(String::new(), |v| format!("{v}"))
}

pub fn write_trace_csv(path: &Path, trace: &FitTrace) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["iteration", "objective", "data_fit", "length", "movement", "elapsed_ms"])?;
    for r in &trace.records {
        w.write_record([
            r.iteration.to_string(),
            format!("{}", r.objective),
            format!("{}", r.data_fit),
            format!("{}", r.length),
            format!("{}", r.movement),
            format!("{}", r.elapsed_ms),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Two plotting coordinates of a point: the point itself or a measure's mean.
pub trait PlotCoords {
    fn plot_xy(&self) -> (f64, f64);
}

fn first_two(v: &[f64]) -> (f64, f64) {
    (v.first().copied().unwrap_or(0.0), v.get(1).copied().unwrap_or(0.0))
}

impl PlotCoords for EuclideanPoint {
    fn plot_xy(&self) -> (f64, f64) {
        first_two(self.as_slice())
    }
}

impl PlotCoords for DiscreteMeasure {
    fn plot_xy(&self) -> (f64, f64) {
        first_two(&self.mean())
    }
}

/// One row of the curve overlay data.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotRow {
    pub kind: &'static str,
    pub index: usize,
    pub x: f64,
    pub y: f64,
    /// Normalized arc-length position.
    pub position: f64,
    /// Nearest knot (the knot itself for knot rows).
    pub knot: usize,
    pub true_time: Option<f64>,
}

pub fn write_plot_csv(path: &Path, rows: &[PlotRow]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["kind", "index", "x", "y", "position", "knot", "true_time"])?;
    for r in rows {
        w.write_record([
            r.kind.to_string(),
            r.index.to_string(),
            format!("{}", r.x),
            format!("{}", r.y),
            format!("{}", r.position),
            r.knot.to_string(),
            fmt_opt(r.true_time),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Static scatter of the batches coloured by true time (or position), with
/// the knots joined as a polyline.
pub fn render_svg(rows: &[PlotRow]) -> String {
    const SIZE: f64 = 480.0;
    const PAD: f64 = 20.0;
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for r in rows {
        x0 = x0.min(r.x);
        x1 = x1.max(r.x);
        y0 = y0.min(r.y);
        y1 = y1.max(r.y);
    }
    let span = (x1 - x0).max(y1 - y0).max(1e-12);
    let sx = |x: f64| PAD + (x - x0) / span * (SIZE - 2.0 * PAD);
    let sy = |y: f64| SIZE - PAD - (y - y0) / span * (SIZE - 2.0 * PAD);
    let colour_key = |r: &PlotRow| r.true_time.unwrap_or(r.position);
    let (c0, c1) = rows
        .iter()
        .filter(|r| r.kind == "batch")
        .map(colour_key)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let crange = (c1 - c0).max(1e-12);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
    for r in rows.iter().filter(|r| r.kind == "batch") {
        let f = (colour_key(r) - c0) / crange;
        let (red, blue) = ((255.0 * f).round() as u8, (255.0 * (1.0 - f)).round() as u8);
        let _ = writeln!(
            s,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"rgb({red},80,{blue})\" fill-opacity=\"0.7\"/>",
            sx(r.x),
            sy(r.y)
        );
    }
    let pts: Vec<String> = rows
        .iter()
        .filter(|r| r.kind == "knot")
        .map(|r| format!("{:.2},{:.2}", sx(r.x), sy(r.y)))
        .collect();
    let _ = writeln!(
        s,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"/>",
        pts.join(" ")
    );
    for p in &pts {
        let (x, y) = p.split_once(',').unwrap_or(("0", "0"));
        let _ = writeln!(s, "<circle cx=\"{x}\" cy=\"{y}\" r=\"3\" fill=\"black\"/>");
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_known_value() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn svg_has_every_point() {
        let rows = vec![
            PlotRow {
                kind: "batch",
                index: 0,
                x: 0.0,
                y: 0.0,
                position: 0.0,
                knot: 0,
                true_time: Some(0.0),
            },
            PlotRow {
                kind: "knot",
                index: 0,
                x: 1.0,
                y: 1.0,
                position: 0.0,
                knot: 0,
                true_time: None,
            },
        ];
        let svg = render_svg(&rows);
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(svg.contains("<polyline"));
    }
}
