//! Event storage, cohort-relative time grids, and per-bucket snapshot views.

pub mod attrs;
pub mod events;
pub mod grid;
pub mod ids;
pub mod snapshot;

pub use attrs::{AttributeTable, CohortRecord, Dimension, SchoolCovariates, SchoolRecord};
pub use events::{EdgeEvent, TemporalEdgeList};
pub use grid::{day_from_date, date_from_day, Day, GridUnit, TimeGrid};
pub use ids::{CategoryDict, CohortKey, IdMap, NodeId, SchoolIdx, UNKNOWN_CATEGORY};
pub use snapshot::{
    new_edges_in, snapshot, LocalEdge, Membership, Scope, Snapshot, SnapshotChain, SnapshotView,
};
