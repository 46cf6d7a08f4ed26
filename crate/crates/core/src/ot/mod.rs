//! Discrete optimal transport: exact and entropic solvers, barycenters,
//! displacement interpolation, nested transport between sets of measures,
//! read-count noise and a kernel discrepancy.

pub mod assignment;
pub mod barycenter;
pub mod exact;
pub mod interp;
pub mod measure;
pub mod mmd;
pub mod nested;
pub mod reads;
pub mod simplex;
pub mod sinkhorn;

pub use barycenter::{barycenter, barycenter_from, Barycenter, BarycenterConfig};
pub use exact::{
    cost_matrix, transport_exact, transport_with_cost, w1_exact, w2_exact, w2_exact_capped, GroundCost, TransportPlan,
    DEFAULT_EXACT_CAP,
};
pub use interp::displacement_interpolate;
pub use measure::DiscreteMeasure;
pub use mmd::mmd_gaussian;
pub use nested::{nested_w1, BaseMetric, NestedDataset};
pub use reads::multinomial_reads;
pub use sinkhorn::{w2_sinkhorn, SinkhornConfig, SinkhornResult};
