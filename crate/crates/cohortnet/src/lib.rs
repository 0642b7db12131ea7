//! Temporal analytics for cohort friendship networks.
//!
//! The crate ingests timestamped friendship events plus node and school
//! attributes, materializes cohort-relative monthly or weekly snapshots, and
//! computes tie-formation, homophily, structural, centrality-stability, and
//! tie-persistence statistics over them. A configurable synthetic generator
//! produces multi-school scenario datasets in the same schemas.

pub mod dataset;
pub mod error;
pub mod graph;
pub mod homophily;
pub mod ingest;
pub mod formation;
pub mod persistence;
pub mod structure;
pub mod series;

#[doc(hidden)]
pub mod testutil;

pub use dataset::Dataset;
pub use error::{Error, Result};
