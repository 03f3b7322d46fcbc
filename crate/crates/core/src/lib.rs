//! Approximation algorithms for TSP under L_p norms of the visit-time vector.
//!
//! Distances are exact integers in quantized units; see [`metric::Scale`].

pub mod analysis;
pub mod certify;
pub mod cover;
pub mod error;
pub mod exact;
pub mod instances;
pub mod ktree;
pub mod limits;
pub mod lp;
pub mod metric;
pub mod routes;
pub mod segmented;

pub use analysis::{allnorm_lower_bound, simple_lower_bound, NormGrid, RatioReport};
pub use cover::{all_norm_route, derandomized_best, lp_cover_route, CoverSchedule};
pub use error::{Error, Result};
pub use exact::{exact_line_lp_tsp, exact_lp_tsp, exact_multi_lp_tsp, min_k_path};
pub use ktree::{good_k_tree, KTree, TreeProvider};
pub use limits::Limits;
pub use metric::{generate_instance, InstanceKind, MetricInstance, Scale};
pub use routes::{visit_times, DelayVector, MultiRoute, Norm, Route};
pub use segmented::{reduce_lp_tsp, segmented_feasible, SegmentedSpec};

/// Seed for the `idx`-th independent sub-stream of `base` (splitmix64 finaliser).
pub fn derive_seed(base: u64, idx: u64) -> u64 {
    let mut z = base ^ idx.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
