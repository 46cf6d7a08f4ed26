//! Orderings from fitted curves and from pairwise distances, and their
//! evaluation against true times.

pub mod baselines;
pub mod distance;
pub mod kendall;
pub mod projection;
pub mod result;

pub use baselines::{spectral_seriation, tsp_seriation};
pub use distance::{pairwise_matrix, pairwise_w2_matrix, w2_tag, DistanceMatrix};
pub use kendall::{kendall_tau_error, kendall_tau_error_up_to_reversal};
pub use projection::{ppc_seriation, projection_pseudotime, ProjectionPseudotimes};
pub use result::{rank_labels, SeriationResult};
