//! Snapshot-level structural statistics: largest-component share, mean
//! ego-network clustering, greedy modularity maximization, and average
//! shortest path length with seeded source sampling on large components.

use std::collections::VecDeque;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::formation::sorted_intersection_count;
use crate::graph::{GridUnit, Scope, SnapshotChain, SnapshotView, TimeGrid};
use crate::series::MetricSeries;

/// Incremental connected components (union by size, path halving).
#[derive(Debug, Clone)]
pub struct Components {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl Components {
    pub fn new(n: usize) -> Self {
        Components {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            self.parent[x as usize] = self.parent[self.parent[x as usize] as usize];
            x = self.parent[x as usize];
        }
        x
    }

    pub fn union(&mut self, a: u32, b: u32) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra as usize] < self.size[rb as usize] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb as usize] = ra;
        self.size[ra as usize] += self.size[rb as usize];
    }

    /// Members of the largest component; ties break toward the component
    /// containing the smallest node id.
    pub fn largest_component(&mut self) -> Vec<u32> {
        let n = self.parent.len();
        if n == 0 {
            return Vec::new();
        }
        let mut best_root = 0u32;
        let mut best_size = 0u32;
        for v in 0..n as u32 {
            let r = self.find(v);
            // First occurrence in id order wins ties.
            if self.size[r as usize] > best_size {
                best_size = self.size[r as usize];
                best_root = r;
            }
        }
        (0..n as u32).filter(|&v| self.find(v) == best_root).collect()
    }

    pub fn largest_size(&mut self) -> u32 {
        let n = self.parent.len();
        (0..n as u32)
            .map(|v| {
                let r = self.find(v);
                self.size[r as usize]
            })
            .max()
            .unwrap_or(0)
    }
}

fn components_of(view: &SnapshotView<'_>) -> Components {
    let mut c = Components::new(view.node_count());
    for (u, v) in view.edge_pairs() {
        c.union(u, v);
    }
    c
}

/// Size of the largest connected component relative to `member_count`;
/// isolated members count in the denominator.
pub fn lcc_fraction(view: &SnapshotView<'_>, member_count: usize) -> Result<f64> {
    if member_count == 0 {
        return Err(Error::ZeroMembers);
    }
    Ok(components_of(view).largest_size() as f64 / member_count as f64)
}

/// Incremental per-node triangle counts, fed edge by edge.
#[derive(Debug, Clone)]
pub struct TriangleCounter {
    triangles: Vec<u64>,
}

impl TriangleCounter {
    pub fn new(n: usize) -> Self {
        TriangleCounter {
            triangles: vec![0; n],
        }
    }

    /// Must be called with the adjacency as it stood before inserting (u,v).
    pub fn on_insert(&mut self, u: u32, v: u32, adj_before: &[Vec<u32>]) {
        let (a, b) = (&adj_before[u as usize], &adj_before[v as usize]);
        let (mut i, mut j) = (0, 0);
        let mut common = 0u64;
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    self.triangles[a[i] as usize] += 1;
                    common += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        self.triangles[u as usize] += common;
        self.triangles[v as usize] += common;
    }

    pub fn counts(&self) -> &[u64] {
        &self.triangles
    }

    /// Mean local clustering over all nodes; degree < 2 contributes zero.
    pub fn avg_clustering(&self, view: &SnapshotView<'_>) -> Result<f64> {
        let n = view.node_count();
        if n == 0 {
            return Err(Error::EmptyCohort);
        }
        let mut total = 0.0;
        for v in 0..n as u32 {
            let d = view.degree(v) as f64;
            if d >= 2.0 {
                total += 2.0 * self.triangles[v as usize] as f64 / (d * (d - 1.0));
            }
        }
        Ok(total / n as f64)
    }
}

/// Mean ego-network clustering computed directly from a snapshot.
pub fn avg_clustering(view: &SnapshotView<'_>) -> Result<f64> {
    let n = view.node_count();
    if n == 0 {
        return Err(Error::EmptyCohort);
    }
    let mut total = 0.0;
    for v in 0..n as u32 {
        let nbrs = view.neighbors(v);
        let d = nbrs.len();
        if d < 2 {
            continue;
        }
        let mut closed = 0usize;
        for &w in nbrs {
            closed += sorted_intersection_count(nbrs, view.neighbors(w));
        }
        // Each closed wedge at v is counted twice (once per triangle edge).
        total += closed as f64 / (d * (d - 1)) as f64;
    }
    Ok(total / n as f64)
}

/// Modularity of a node-to-community assignment under the standard sum of
/// intra-edge share minus squared degree share.
pub fn modularity_of(view: &SnapshotView<'_>, community: &[u32]) -> f64 {
    let m = view.edge_count() as f64;
    if m == 0.0 {
        return 0.0;
    }
    use std::collections::HashMap;
    let mut intra: HashMap<u32, f64> = HashMap::new();
    let mut degree: HashMap<u32, f64> = HashMap::new();
    for (u, v) in view.edge_pairs() {
        if community[u as usize] == community[v as usize] {
            *intra.entry(community[u as usize]).or_default() += 1.0;
        }
    }
    for v in 0..view.node_count() as u32 {
        *degree.entry(community[v as usize]).or_default() += view.degree(v) as f64;
    }
    let mut q = 0.0;
    for (c, d) in &degree {
        let l = intra.get(c).copied().unwrap_or(0.0);
        q += l / m - (d / (2.0 * m)).powi(2);
    }
    q
}

#[derive(Debug, Clone)]
struct Community {
    rep: u32,
    degree: u64,
    stamp: u32,
    /// Neighboring community slot -> edge count between them.
    neighbors: std::collections::HashMap<u32, u32>,
    members: Vec<u32>,
}

#[derive(Debug, Clone, Copy)]
struct MergeCand {
    dq: f64,
    /// Representative pair (min, max) at push time, for deterministic ties.
    pair: (u32, u32),
    slots: (u32, u32),
    stamps: (u32, u32),
}

impl PartialEq for MergeCand {
    fn eq(&self, other: &Self) -> bool {
        self.dq == other.dq && self.pair == other.pair
    }
}
impl Eq for MergeCand {}
impl PartialOrd for MergeCand {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for MergeCand {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Max-heap: highest gain first, lowest representative pair on ties.
        self.dq
            .total_cmp(&other.dq)
            .then_with(|| other.pair.cmp(&self.pair))
    }
}

/// Greedy agglomerative modularity maximization: repeatedly merge the
/// connected community pair with the largest modularity gain, tracking the
/// best partition seen along the full merge path. Ties on the gain break
/// toward the lowest representative-id pair. Returns the best modularity
/// (recomputed from the partition) and the assignment, labeled by each
/// community's smallest node.
pub fn cnm_modularity(view: &SnapshotView<'_>) -> Option<(f64, Vec<u32>)> {
    let n = view.node_count();
    let m = view.edge_count() as f64;
    if view.edge_count() == 0 {
        return None;
    }

    let mut comms: Vec<Option<Community>> = (0..n as u32)
        .map(|v| {
            Some(Community {
                rep: v,
                degree: view.degree(v) as u64,
                stamp: 0,
                neighbors: std::collections::HashMap::new(),
                members: vec![v],
            })
        })
        .collect();
    for (u, v) in view.edge_pairs() {
        comms[u as usize]
            .as_mut()
            .unwrap()
            .neighbors
            .insert(v, 1);
        comms[v as usize]
            .as_mut()
            .unwrap()
            .neighbors
            .insert(u, 1);
    }

    let dq_of = |edges_between: u32, d_a: u64, d_b: u64| -> f64 {
        edges_between as f64 / m - (d_a as f64 * d_b as f64) / (2.0 * m * m)
    };

    let mut heap = std::collections::BinaryHeap::new();
    for (u, c) in comms.iter().enumerate() {
        let c = c.as_ref().unwrap();
        for (&v, &w) in &c.neighbors {
            if (u as u32) < v {
                let d_v = comms[v as usize].as_ref().unwrap().degree;
                heap.push(MergeCand {
                    dq: dq_of(w, c.degree, d_v),
                    pair: (u as u32, v),
                    slots: (u as u32, v),
                    stamps: (0, 0),
                });
            }
        }
    }

    // Q for the all-singletons start; updated by each merge's gain. The best
    // assignment along the merge path is kept because Q is not monotone.
    let mut q_current: f64 = (0..n as u32)
        .map(|v| {
            let d = view.degree(v) as f64;
            -(d / (2.0 * m)).powi(2)
        })
        .sum();
    let mut q_best = q_current;
    let mut best_assignment: Vec<u32> = (0..n as u32).collect();

    while let Some(cand) = heap.pop() {
        let (sa, sb) = cand.slots;
        let valid = match (&comms[sa as usize], &comms[sb as usize]) {
            (Some(a), Some(b)) => a.stamp == cand.stamps.0 && b.stamp == cand.stamps.1,
            _ => false,
        };
        if !valid {
            continue;
        }
        q_current += cand.dq;

        // Merge the smaller neighbor map into the larger slot.
        let (keep, gone) = {
            let a = comms[sa as usize].as_ref().unwrap();
            let b = comms[sb as usize].as_ref().unwrap();
            if a.neighbors.len() >= b.neighbors.len() {
                (sa, sb)
            } else {
                (sb, sa)
            }
        };
        let mut dead = comms[gone as usize].take().unwrap();
        let kept = comms[keep as usize].as_mut().unwrap();
        kept.rep = kept.rep.min(dead.rep);
        kept.degree += dead.degree;
        kept.stamp += 1;
        kept.neighbors.remove(&gone);
        kept.members.append(&mut dead.members);
        dead.neighbors.remove(&keep);
        let dead_neighbors: Vec<(u32, u32)> = dead.neighbors.into_iter().collect();
        for &(k, w) in &dead_neighbors {
            *comms[keep as usize]
                .as_mut()
                .unwrap()
                .neighbors
                .entry(k)
                .or_insert(0) += w;
            let kc = comms[k as usize].as_mut().unwrap();
            kc.neighbors.remove(&gone);
            *kc.neighbors.entry(keep).or_insert(0) += w;
        }

        // Refresh candidates for every pair touching the surviving slot.
        let kept = comms[keep as usize].as_ref().unwrap();
        let kept_deg = kept.degree;
        let kept_rep = kept.rep;
        let kept_stamp = kept.stamp;
        let pushes: Vec<MergeCand> = kept
            .neighbors
            .iter()
            .map(|(&k, &w)| {
                let kc = comms[k as usize].as_ref().unwrap();
                MergeCand {
                    dq: dq_of(w, kept_deg, kc.degree),
                    pair: (kept_rep.min(kc.rep), kept_rep.max(kc.rep)),
                    slots: (keep, k),
                    stamps: (kept_stamp, kc.stamp),
                }
            })
            .collect();
        for p in pushes {
            heap.push(p);
        }

        if q_current > q_best {
            q_best = q_current;
            for c in comms.iter().flatten() {
                for &v in &c.members {
                    best_assignment[v as usize] = c.rep;
                }
            }
        }
    }

    let q = modularity_of(view, &best_assignment);
    Some((q, best_assignment))
}

/// Breadth-first distances from `source`; returns (sum, reached) over targets
/// other than the source. `dist` is a scratch buffer reset via the touched
/// list to keep repeated calls cheap.
fn bfs_accumulate(
    adj: &[Vec<u32>],
    source: u32,
    dist: &mut [u32],
    queue: &mut VecDeque<u32>,
    touched: &mut Vec<u32>,
) -> (u64, u64) {
    const UNSEEN: u32 = u32::MAX;
    queue.clear();
    touched.clear();
    dist[source as usize] = 0;
    touched.push(source);
    queue.push_back(source);
    let mut sum = 0u64;
    let mut reached = 0u64;
    while let Some(u) = queue.pop_front() {
        let du = dist[u as usize];
        for &v in &adj[u as usize] {
            if dist[v as usize] == UNSEEN {
                dist[v as usize] = du + 1;
                touched.push(v);
                queue.push_back(v);
                sum += (du + 1) as u64;
                reached += 1;
            }
        }
    }
    for &v in touched.iter() {
        dist[v as usize] = UNSEEN;
    }
    (sum, reached)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathConfig {
    /// All-pairs BFS below this largest-component size.
    pub exact_threshold: usize,
    pub sample_sources: usize,
    pub seed: u64,
}

impl Default for PathConfig {
    fn default() -> Self {
        PathConfig {
            exact_threshold: 2000,
            sample_sources: 256,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathStats {
    pub value: Option<f64>,
    pub sampled: bool,
    pub seed: u64,
}

/// Mean BFS distance over connected ordered node pairs. Exact (sources =
/// every non-isolated node) while the largest component stays at or under
/// the exactness threshold; above it, distances from a seeded uniform sample
/// of non-isolated sources.
pub fn avg_shortest_path(view: &SnapshotView<'_>, config: &PathConfig) -> PathStats {
    let n = view.node_count();
    let non_isolated: Vec<u32> = (0..n as u32).filter(|&v| view.degree(v) > 0).collect();
    let lcc_size = if non_isolated.is_empty() {
        0
    } else {
        components_of(view).largest_size() as usize
    };
    if lcc_size < 2 {
        return PathStats {
            value: None,
            sampled: false,
            seed: config.seed,
        };
    }

    let sampled = lcc_size > config.exact_threshold;
    let sources: Vec<u32> = if sampled {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut pool = non_isolated.clone();
        let take = config.sample_sources.min(pool.len());
        // Partial Fisher-Yates keeps the draw uniform without replacement.
        for i in 0..take {
            let j = rng.random_range(i..pool.len());
            pool.swap(i, j);
        }
        pool.truncate(take);
        pool
    } else {
        non_isolated
    };

    let mut dist = vec![u32::MAX; n];
    let mut queue = VecDeque::new();
    let mut touched = Vec::new();
    let mut sum = 0u64;
    let mut pairs = 0u64;
    for &s in &sources {
        let (d, c) = bfs_accumulate(view.adjacency(), s, &mut dist, &mut queue, &mut touched);
        sum += d;
        pairs += c;
    }
    PathStats {
        value: (pairs > 0).then(|| sum as f64 / pairs as f64),
        sampled,
        seed: config.seed,
    }
}

/// One row of the structure output.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureRow {
    pub cohort: u32,
    pub idx: i32,
    pub lcc_fraction: f64,
    pub avg_clustering: f64,
    pub modularity: Option<f64>,
    pub avg_path: Option<f64>,
    pub path_sampled: bool,
    pub seed: u64,
}

/// Deterministic per-(cohort, idx) seed derived from the run seed.
pub fn derive_seed(root: u64, cohort: u32, idx: i32) -> u64 {
    let mut x = root
        ^ (cohort as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
        ^ ((idx as i64 as u64).wrapping_mul(0xbf58_476d_1ce4_e5b9));
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^= x >> 31;
    x
}

/// The four structural statistics for every bucket of the cohort grid,
/// computed along one delta-constructed snapshot chain.
pub fn structure_series(
    dataset: &Dataset,
    cohort: u32,
    unit: GridUnit,
    config: &PathConfig,
) -> Result<Vec<StructureRow>> {
    if cohort as usize >= dataset.attrs.cohorts.len() {
        return Err(Error::UnknownCohort(format!("#{cohort}")));
    }
    let grid = TimeGrid::with_unit(dataset.attrs.cohort(cohort).start_day, unit);
    let mut chain =
        SnapshotChain::new(&dataset.events, &dataset.attrs, grid, Scope::Cohort(cohort));
    let n = chain.membership().len();
    if n == 0 {
        return Err(Error::EmptyCohort);
    }
    let mut components = Components::new(n);
    let mut triangles = TriangleCounter::new(n);
    // Pre-window edges are already inside the initial adjacency.
    {
        let view = chain.view();
        for (u, v) in view.edge_pairs() {
            components.union(u, v);
        }
        let mut pre = TriangleCounter::new(n);
        let mut rebuilt: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (u, v) in view.edge_pairs() {
            pre.on_insert(u, v, &rebuilt);
            rebuilt[u as usize].push(v);
            rebuilt[v as usize].push(u);
            rebuilt[u as usize].sort_unstable();
            rebuilt[v as usize].sort_unstable();
        }
        triangles = pre;
    }

    let mut rows = Vec::with_capacity(grid.len());
    for idx in grid.indices() {
        let (comp, tri) = (&mut components, &mut triangles);
        chain.advance_with(|u, v, adj| {
            tri.on_insert(u, v, adj);
            comp.union(u, v);
        });
        let view = chain.view();
        let seed = derive_seed(config.seed, cohort, idx);
        let paths = avg_shortest_path(
            &view,
            &PathConfig {
                seed,
                ..*config
            },
        );
        rows.push(StructureRow {
            cohort,
            idx,
            lcc_fraction: components.largest_size() as f64 / n as f64,
            avg_clustering: triangles.avg_clustering(&view)?,
            modularity: cnm_modularity(&view).map(|(q, _)| q),
            avg_path: paths.value,
            path_sampled: paths.sampled,
            seed,
        });
    }
    Ok(rows)
}

/// Mean distance from sampled focal-cohort members to each counterpart
/// cohort of the same school, per bucket, over the school graph.
pub fn cross_cohort_path_series(
    dataset: &Dataset,
    cohort: u32,
    unit: GridUnit,
    config: &PathConfig,
) -> Result<Vec<(i32, MetricSeries)>> {
    let attrs = &dataset.attrs;
    if cohort as usize >= attrs.cohorts.len() {
        return Err(Error::UnknownCohort(format!("#{cohort}")));
    }
    let record = attrs.cohort(cohort);
    let school = record.key.school;
    let grid = TimeGrid::with_unit(record.start_day, unit);
    let mut chain = SnapshotChain::new(&dataset.events, attrs, grid, Scope::School(school));
    let membership = chain.membership().clone();

    // Counterpart cohort index per school-local node.
    let school_cohorts = &attrs.schools[school.index()].cohorts;
    let mut cohort_slot = vec![0usize; membership.len()];
    for (slot, &c) in school_cohorts.iter().enumerate() {
        for &node in &attrs.cohort(c).members {
            if let Some(local) = membership.local_of(node) {
                cohort_slot[local as usize] = slot;
            }
        }
    }
    let focal_members: Vec<u32> = attrs
        .cohort(cohort)
        .members
        .iter()
        .filter_map(|&node| membership.local_of(node))
        .collect();

    let mut sums = vec![vec![(0u64, 0u64); grid.len()]; school_cohorts.len()];
    let mut dist = vec![u32::MAX; membership.len()];
    let mut queue = VecDeque::new();
    let mut touched = Vec::new();

    for idx in grid.indices() {
        chain.advance();
        let view = chain.view();
        let seed = derive_seed(config.seed, cohort, idx);
        let sources: Vec<u32> = if focal_members.len() > config.sample_sources {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut pool = focal_members.clone();
            for i in 0..config.sample_sources {
                let j = rng.random_range(i..pool.len());
                pool.swap(i, j);
            }
            pool.truncate(config.sample_sources);
            pool
        } else {
            focal_members.clone()
        };
        let slot_idx = (idx - grid.first_index()) as usize;
        for &s in &sources {
            queue.clear();
            touched.clear();
            dist[s as usize] = 0;
            touched.push(s);
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                let du = dist[u as usize];
                for &v in view.neighbors(u) {
                    if dist[v as usize] == u32::MAX {
                        dist[v as usize] = du + 1;
                        touched.push(v);
                        queue.push_back(v);
                        let cell = &mut sums[cohort_slot[v as usize]][slot_idx];
                        cell.0 += (du + 1) as u64;
                        cell.1 += 1;
                    }
                }
            }
            for &v in &touched {
                dist[v as usize] = u32::MAX;
            }
        }
    }

    let mut out = Vec::new();
    for (slot, &c) in school_cohorts.iter().enumerate() {
        let year = attrs.cohort(c).key.entry_year;
        let mut series = MetricSeries::new(cohort, format!("cross_cohort_path:{year}"), unit);
        for idx in grid.indices() {
            let (sum, count) = sums[slot][(idx - grid.first_index()) as usize];
            series.push(
                idx,
                (count > 0).then(|| sum as f64 / count as f64),
                count,
            );
        }
        out.push((year, series));
    }
    out.sort_by_key(|(year, _)| *year);
    Ok(out)
}
