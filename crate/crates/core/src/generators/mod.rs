//! Random and exhaustive sources of excursions.

mod brownian;
mod dyck;
mod offspring;
mod stable;
mod tree;
mod walk;

pub use brownian::{bridge_to_excursion, brownian_excursion};
pub use dyck::{catalan, enumerate_dyck, srw_excursion_tree_weight, DyckPaths, MAX_DYCK_HALF_LENGTH};
pub use offspring::{offspring_geometric, offspring_stable, OffspringLaw, STABLE_TABLE_LEN};
pub use stable::{
    calibrate_height_constant, height_constant, normalized_stable_excursion, rescale_stable, ExcursionSampler, LevyModel,
};
pub use tree::{gw_tree_conditioned, PlaneTree, DEFAULT_ATTEMPT_BUDGET};
pub use walk::{height_of_walk, WalkPath};
