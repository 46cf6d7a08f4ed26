//! Penalized principal curves in Euclidean space and in the 2-Wasserstein
//! space of discrete measures, with seriation baselines and synthetic data.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod datagen;
pub mod error;
pub mod experiment;
pub mod matrix;
pub mod metric;
pub mod ot;
pub mod ppc;
pub mod seriation;

#[cfg(test)]
mod properties;

pub use datagen::{AnyDataset, CurveModel, Dataset, GenOptions, Provenance};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use metric::{
    AnyMetric, DistanceCache, Euclidean, EuclideanPoint, KnotCurve, Metric, MetricElement, OtMethod, ProjectionResult,
    Wasserstein,
};
pub use ot::{DiscreteMeasure, NestedDataset, SinkhornConfig, TransportPlan};
pub use ppc::{FitResult, FitTrace, Mode, PpcConfig, VoronoiPartition};
pub use seriation::{DistanceMatrix, SeriationResult};
