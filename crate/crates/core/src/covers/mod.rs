//! Branched covers with exact preimage oracles, path lifting and
//! spot checks of their local structure.

mod catalog;
pub mod dsl;
mod lift;
mod local;
mod measure;
pub mod roots;

pub use catalog::{BranchValues, BranchedCover, CatalogMap, FiberPoint};
pub use dsl::MapSpec;
pub use lift::{lift_path, monodromy_check, uniform_times, LiftSettings, LiftedPath};
pub use local::{continuity_check, normal_neighbourhood_boundary, pseudomonotone_check};
pub use measure::{preimage_measure_check, PreimageMeasureSettings};
