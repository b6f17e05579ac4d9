//! Skew-adaptive sorted-set layouts and intersection kernels.

mod intersect;
mod oracle;
mod view;

pub use intersect::{
    intersect, intersect_bitset_bitset, intersect_uint_bitset, intersect_uint_uint,
    intersect_with_stats, Algorithm, IntersectStats, GALLOP_RATIO,
};
pub use oracle::{oracle_optimize, GranularityCost, OracleReport};
pub use view::{
    choose_layout, materialize_as, materialize_set, AssocValues, BitsetData, BlockData,
    CompositeBlock, Granularity, Layout, SetData, SetError, SetView, DEFAULT_BLOCK_BITS,
    LAYOUT_DENSITY_THRESHOLD,
};
