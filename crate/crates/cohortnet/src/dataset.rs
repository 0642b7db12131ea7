use crate::graph::{AttributeTable, IdMap, TemporalEdgeList};
use crate::persistence::ClosenessTable;

/// Everything a run operates on after ingest. Immutable once built and safe
/// to share across worker threads.
#[derive(Debug, Default, Clone)]
pub struct Dataset {
    pub events: TemporalEdgeList,
    pub attrs: AttributeTable,
    pub id_map: IdMap,
    pub closeness: Option<ClosenessTable>,
}

impl Dataset {
    pub fn node_count(&self) -> usize {
        self.attrs.node_count()
    }
}
