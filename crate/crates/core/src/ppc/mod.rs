//! Penalized principal curves: objectives, Voronoi partitions, knot ordering
//! and the coupled Lloyd solver.

pub mod config;
pub mod lloyd;
pub mod objective;
pub mod tsp;

pub use config::{Bandwidth, Kernel, Mode, PpcConfig};
pub use lloyd::{
    fit, fit_from, init_kmeanspp, order_with_anchors, tsp_order, FitResult, FitTrace, TraceRecord, DESCENT_TOL,
};
pub use objective::{
    kernel_weights, objective_ppc_k, objective_ppc_kw, update_knots, voronoi_cells, voronoi_cells_cached, Objective,
    VoronoiPartition,
};
