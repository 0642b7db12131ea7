use super::attrs::AttributeTable;
use super::events::{EdgeEvent, TemporalEdgeList};
use super::grid::{Day, TimeGrid};
use super::ids::{NodeId, SchoolIdx};
use crate::error::Result;

/// Which node set a snapshot is restricted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    /// One entry-year class; index into the cohort table.
    Cohort(u32),
    School(SchoolIdx),
}

/// Scope membership with a dense local index per member.
#[derive(Debug, Clone)]
pub struct Membership {
    /// Member nodes ascending; local id = position.
    nodes: Vec<NodeId>,
    /// Global node -> local id, `u32::MAX` when not a member.
    local: Vec<u32>,
}

const NOT_MEMBER: u32 = u32::MAX;

impl Membership {
    pub fn for_scope(attrs: &AttributeTable, scope: Scope) -> Self {
        let nodes = match scope {
            Scope::Cohort(c) => attrs.cohort(c).members.clone(),
            Scope::School(s) => attrs.schools[s.index()].members.clone(),
        };
        Self::from_nodes(nodes, attrs.node_count())
    }

    pub fn from_nodes(nodes: Vec<NodeId>, total: usize) -> Self {
        debug_assert!(nodes.windows(2).all(|w| w[0] < w[1]));
        let mut local = vec![NOT_MEMBER; total];
        for (i, n) in nodes.iter().enumerate() {
            local[n.index()] = i as u32;
        }
        Membership { nodes, local }
    }

    #[inline]
    pub fn local_of(&self, node: NodeId) -> Option<u32> {
        let l = self.local[node.index()];
        (l != NOT_MEMBER).then_some(l)
    }

    #[inline]
    pub fn global_of(&self, local: u32) -> NodeId {
        self.nodes[local as usize]
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// An in-scope edge event with local endpoint ids (`u < v`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalEdge {
    pub u: u32,
    pub v: u32,
    pub t: Day,
}

/// Immutable adjacency view of all in-scope edges with `t` at or before the
/// end of bucket `idx`. Neighbor lists are sorted ascending.
#[derive(Debug, Clone, Copy)]
pub struct SnapshotView<'a> {
    pub scope: Scope,
    pub idx: i32,
    adj: &'a [Vec<u32>],
    membership: &'a Membership,
    edge_count: usize,
}

impl<'a> SnapshotView<'a> {
    #[inline]
    pub fn neighbors(&self, local: u32) -> &'a [u32] {
        &self.adj[local as usize]
    }

    #[inline]
    pub fn degree(&self, local: u32) -> usize {
        self.adj[local as usize].len()
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn membership(&self) -> &'a Membership {
        self.membership
    }

    pub fn adjacency(&self) -> &'a [Vec<u32>] {
        self.adj
    }

    /// All edges as `(u, v)` local pairs with `u < v`, ascending.
    pub fn edge_pairs(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::with_capacity(self.edge_count);
        for (u, nbrs) in self.adj.iter().enumerate() {
            for &v in nbrs {
                if (u as u32) < v {
                    out.push((u as u32, v));
                }
            }
        }
        out
    }
}

/// Delta-constructed snapshot sequence for one scope: the adjacency for
/// bucket `idx + 1` extends the adjacency for `idx` by that bucket's edges
/// instead of being rebuilt.
#[derive(Debug, Clone)]
pub struct SnapshotChain {
    scope: Scope,
    grid: TimeGrid,
    membership: Membership,
    /// In-scope events ascending by `(t, u, v)`.
    edges: Vec<LocalEdge>,
    /// Range into `edges` per bucket, indexed by `idx - grid.first_index()`.
    bucket_ranges: Vec<(u32, u32)>,
    adj: Vec<Vec<u32>>,
    edge_count: usize,
    cursor: i32,
}

impl SnapshotChain {
    pub fn new(
        events: &TemporalEdgeList,
        attrs: &AttributeTable,
        grid: TimeGrid,
        scope: Scope,
    ) -> Self {
        let membership = Membership::for_scope(attrs, scope);
        Self::with_membership(events, membership, grid, scope)
    }

    pub fn with_membership(
        events: &TemporalEdgeList,
        membership: Membership,
        grid: TimeGrid,
        scope: Scope,
    ) -> Self {
        let mut edges = Vec::new();
        for e in events.iter() {
            let (Some(u), Some(v)) = (membership.local_of(e.u), membership.local_of(e.v)) else {
                continue;
            };
            if grid.raw_index_of(e.t) > grid.last_index() {
                // Beyond the observation window, outside every snapshot.
                continue;
            }
            edges.push(LocalEdge { u, v, t: e.t });
        }

        let n_buckets = grid.len();
        let mut bucket_ranges = vec![(0u32, 0u32); n_buckets];
        // Events are time sorted, so bucket ranges are contiguous slices.
        let mut pos = 0usize;
        // Edges from before the window sit ahead of the first bucket and are
        // folded into the initial adjacency below.
        while pos < edges.len() && grid.raw_index_of(edges[pos].t) < grid.first_index() {
            pos += 1;
        }
        let pre_window = pos;
        for (slot, ranges) in bucket_ranges.iter_mut().enumerate() {
            let idx = grid.first_index() + slot as i32;
            let begin = pos;
            while pos < edges.len() && grid.raw_index_of(edges[pos].t) == idx {
                pos += 1;
            }
            *ranges = (begin as u32, pos as u32);
        }
        debug_assert_eq!(pos, edges.len());

        let mut chain = SnapshotChain {
            scope,
            grid,
            adj: vec![Vec::new(); membership.len()],
            membership,
            edges,
            bucket_ranges,
            edge_count: 0,
            cursor: grid.first_index() - 1,
        };
        for i in 0..pre_window {
            let LocalEdge { u, v, .. } = chain.edges[i];
            chain.insert(u, v);
        }
        chain
    }

    fn insert(&mut self, u: u32, v: u32) {
        let pos = self.adj[u as usize].binary_search(&v).unwrap_err();
        self.adj[u as usize].insert(pos, v);
        let pos = self.adj[v as usize].binary_search(&u).unwrap_err();
        self.adj[v as usize].insert(pos, u);
        self.edge_count += 1;
    }

    pub fn grid(&self) -> &TimeGrid {
        self.grid_ref()
    }

    fn grid_ref(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn membership(&self) -> &Membership {
        &self.membership
    }

    /// Bucket index most recently applied; `first_index() - 1` right after
    /// construction.
    pub fn cursor(&self) -> i32 {
        self.cursor
    }

    /// Events falling inside bucket `idx`, independent of the cursor.
    pub fn bucket_edges(&self, idx: i32) -> Result<&[LocalEdge]> {
        self.grid.check_index(idx)?;
        let (a, b) = self.bucket_ranges[(idx - self.grid.first_index()) as usize];
        Ok(&self.edges[a as usize..b as usize])
    }

    /// Applies the next bucket. `on_insert` runs for every edge before it is
    /// inserted, seeing the adjacency as it stood at that point (earlier
    /// edges of the same bucket included).
    pub fn advance_with(&mut self, mut on_insert: impl FnMut(u32, u32, &[Vec<u32>])) {
        assert!(
            self.cursor < self.grid.last_index(),
            "chain already at the last bucket"
        );
        self.cursor += 1;
        let (a, b) = self.bucket_ranges[(self.cursor - self.grid.first_index()) as usize];
        for i in a..b {
            let LocalEdge { u, v, .. } = self.edges[i as usize];
            on_insert(u, v, &self.adj);
            self.insert(u, v);
        }
    }

    pub fn advance(&mut self) {
        self.advance_with(|_, _, _| {});
    }

    /// Advances until the cursor reaches `idx`.
    pub fn advance_to(&mut self, idx: i32) -> Result<()> {
        self.grid.check_index(idx)?;
        while self.cursor < idx {
            self.advance();
        }
        Ok(())
    }

    pub fn view(&self) -> SnapshotView<'_> {
        SnapshotView {
            scope: self.scope,
            idx: self.cursor,
            adj: &self.adj,
            membership: &self.membership,
            edge_count: self.edge_count,
        }
    }
}

/// Owned snapshot materialization for one `(scope, idx)`.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub scope: Scope,
    pub idx: i32,
    membership: Membership,
    adj: Vec<Vec<u32>>,
    edge_count: usize,
}

impl Snapshot {
    pub fn view(&self) -> SnapshotView<'_> {
        SnapshotView {
            scope: self.scope,
            idx: self.idx,
            adj: &self.adj,
            membership: &self.membership,
            edge_count: self.edge_count,
        }
    }
}

/// Materializes the snapshot at `idx`: every in-scope edge with `t` at or
/// before the bucket end.
pub fn snapshot(
    events: &TemporalEdgeList,
    attrs: &AttributeTable,
    grid: TimeGrid,
    idx: i32,
    scope: Scope,
) -> Result<Snapshot> {
    grid.check_index(idx)?;
    let mut chain = SnapshotChain::new(events, attrs, grid, scope);
    chain.advance_to(idx)?;
    Ok(Snapshot {
        scope,
        idx,
        membership: chain.membership,
        adj: chain.adj,
        edge_count: chain.edge_count,
    })
}

/// Events whose timestamp falls inside bucket `idx` with both endpoints in
/// scope, as global events.
pub fn new_edges_in(
    events: &TemporalEdgeList,
    attrs: &AttributeTable,
    grid: TimeGrid,
    idx: i32,
    scope: Scope,
) -> Result<Vec<EdgeEvent>> {
    let chain = SnapshotChain::new(events, attrs, grid, scope);
    let out = chain
        .bucket_edges(idx)?
        .iter()
        .map(|e| EdgeEvent {
            u: chain.membership.global_of(e.u),
            v: chain.membership.global_of(e.v),
            t: e.t,
        })
        .collect();
    Ok(out)
}
