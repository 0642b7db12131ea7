//! Tie-formation metrics per time bucket: edge volume, cross-cohort
//! friending, degree percentiles, and triadic closure of new edges.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::graph::{
    GridUnit, LocalEdge, Membership, Scope, SnapshotChain, SnapshotView, TimeGrid,
};
use crate::series::MetricSeries;

/// Number of common neighbors between two sorted adjacency lists.
pub fn sorted_intersection_count(a: &[u32], b: &[u32]) -> usize {
    let mut count = 0;
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

fn check_cohort(dataset: &Dataset, cohort: u32) -> Result<()> {
    if (cohort as usize) < dataset.attrs.cohorts.len() {
        Ok(())
    } else {
        Err(Error::UnknownCohort(format!("#{cohort}")))
    }
}

fn cohort_grid(dataset: &Dataset, cohort: u32, unit: GridUnit) -> TimeGrid {
    TimeGrid::with_unit(dataset.attrs.cohort(cohort).start_day, unit)
}

/// New within-cohort edges per bucket. The value at an index is a plain
/// count, so zero is a value, not an absent point.
pub fn edge_volume(dataset: &Dataset, cohort: u32, unit: GridUnit) -> Result<MetricSeries> {
    check_cohort(dataset, cohort)?;
    let grid = cohort_grid(dataset, cohort, unit);
    let chain = SnapshotChain::new(&dataset.events, &dataset.attrs, grid, Scope::Cohort(cohort));
    let mut series = MetricSeries::new(cohort, "edge_volume", unit);
    for idx in grid.indices() {
        let n = chain.bucket_edges(idx)?.len();
        series.push(idx, Some(n as f64), 1);
    }
    Ok(series)
}

/// School-scope friending volume involving the focal cohort, split by the
/// counterpart's entry year. Per bucket, the per-year values sum to the
/// number of school edges touching the cohort.
pub fn cross_cohort_volume(
    dataset: &Dataset,
    cohort: u32,
    unit: GridUnit,
) -> Result<Vec<(i32, MetricSeries)>> {
    check_cohort(dataset, cohort)?;
    let attrs = &dataset.attrs;
    let grid = cohort_grid(dataset, cohort, unit);
    let school = attrs.cohort(cohort).key.school;
    let chain = SnapshotChain::new(&dataset.events, attrs, grid, Scope::School(school));
    let membership = chain.membership();

    let mut years: Vec<i32> = attrs.schools[school.index()]
        .cohorts
        .iter()
        .map(|&c| attrs.cohort(c).key.entry_year)
        .collect();
    years.sort_unstable();
    let focal_year = attrs.cohort(cohort).key.entry_year;

    let mut counts: std::collections::BTreeMap<i32, Vec<u64>> = years
        .iter()
        .map(|&y| (y, vec![0u64; grid.len()]))
        .collect();
    for idx in grid.indices() {
        let slot = (idx - grid.first_index()) as usize;
        for e in chain.bucket_edges(idx)? {
            let (gu, gv) = (membership.global_of(e.u), membership.global_of(e.v));
            let (yu, yv) = (
                attrs.entry_year[gu.index()],
                attrs.entry_year[gv.index()],
            );
            let counterpart = match (yu == focal_year, yv == focal_year) {
                (true, true) => focal_year,
                (true, false) => yv,
                (false, true) => yu,
                (false, false) => continue,
            };
            counts.get_mut(&counterpart).unwrap()[slot] += 1;
        }
    }

    Ok(counts
        .into_iter()
        .map(|(year, per_bucket)| {
            let mut s = MetricSeries::new(cohort, format!("cross_cohort_volume:{year}"), unit);
            for idx in grid.indices() {
                let slot = (idx - grid.first_index()) as usize;
                s.push(idx, Some(per_bucket[slot] as f64), 1);
            }
            (year, s)
        })
        .collect())
}

/// Nearest-rank percentile of an ascending slice: the value at ordinal rank
/// `ceil(p/100 * n)`, 1-indexed.
pub fn nearest_rank_percentile(sorted: &[u32], p: u8) -> f64 {
    assert!(!sorted.is_empty());
    let rank = ((p as f64 / 100.0) * sorted.len() as f64).ceil().max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1] as f64
}

/// Nearest-rank percentile over cumulative within-cohort degrees of all
/// cohort members, isolates included.
pub fn degree_percentiles(
    dataset: &Dataset,
    cohort: u32,
    unit: GridUnit,
    percentiles: &[u8],
) -> Result<Vec<MetricSeries>> {
    check_cohort(dataset, cohort)?;
    let grid = cohort_grid(dataset, cohort, unit);
    let mut chain =
        SnapshotChain::new(&dataset.events, &dataset.attrs, grid, Scope::Cohort(cohort));
    let n = chain.membership().len();
    if n == 0 {
        return Err(Error::EmptyCohort);
    }
    let mut out: Vec<MetricSeries> = percentiles
        .iter()
        .map(|p| MetricSeries::new(cohort, format!("degree_p{p}"), unit))
        .collect();
    let mut degrees = vec![0u32; n];
    for idx in grid.indices() {
        chain.advance_with(|u, v, _| {
            degrees[u as usize] += 1;
            degrees[v as usize] += 1;
        });
        let mut sorted = degrees.clone();
        sorted.sort_unstable();
        for (series, &p) in out.iter_mut().zip(percentiles) {
            series.push(idx, Some(nearest_rank_percentile(&sorted, p)), n as u64);
        }
    }
    Ok(out)
}

/// Which graph the common-neighbor test runs against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosureScope {
    /// Within-cohort edges against the cohort graph.
    Cohort,
    /// School edges touching the cohort against the school graph.
    School,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosureStats {
    pub idx: i32,
    /// Fraction of new edges with at least one prior common neighbor.
    pub share_closing: Option<f64>,
    /// Mean number of prior common neighbors over new edges.
    pub mean_triangles_closed: Option<f64>,
    pub new_edge_count: u64,
}

/// Closure stats for one bucket of new edges against the snapshot at the end
/// of the previous bucket. Edges arriving within the same bucket do not count
/// toward each other's common neighbors.
pub fn closure_stats_for_bucket(
    prior: &SnapshotView<'_>,
    bucket: &[LocalEdge],
    idx: i32,
) -> ClosureStats {
    let mut closing = 0u64;
    let mut triangles = 0u64;
    for e in bucket {
        let common = sorted_intersection_count(prior.neighbors(e.u), prior.neighbors(e.v));
        if common > 0 {
            closing += 1;
        }
        triangles += common as u64;
    }
    let n = bucket.len() as u64;
    ClosureStats {
        idx,
        share_closing: (n > 0).then(|| closing as f64 / n as f64),
        mean_triangles_closed: (n > 0).then(|| triangles as f64 / n as f64),
        new_edge_count: n,
    }
}

fn closure_chain(
    dataset: &Dataset,
    cohort: u32,
    unit: GridUnit,
    scope: ClosureScope,
) -> Result<(SnapshotChain, Option<Vec<bool>>, TimeGrid)> {
    check_cohort(dataset, cohort)?;
    let grid = cohort_grid(dataset, cohort, unit);
    match scope {
        ClosureScope::Cohort => {
            let chain =
                SnapshotChain::new(&dataset.events, &dataset.attrs, grid, Scope::Cohort(cohort));
            Ok((chain, None, grid))
        }
        ClosureScope::School => {
            let school = dataset.attrs.cohort(cohort).key.school;
            let chain =
                SnapshotChain::new(&dataset.events, &dataset.attrs, grid, Scope::School(school));
            let in_cohort = cohort_flags(chain.membership(), dataset, cohort);
            Ok((chain, Some(in_cohort), grid))
        }
    }
}

fn cohort_flags(membership: &Membership, dataset: &Dataset, cohort: u32) -> Vec<bool> {
    let mut flags = vec![false; membership.len()];
    for &m in &dataset.attrs.cohort(cohort).members {
        if let Some(local) = membership.local_of(m) {
            flags[local as usize] = true;
        }
    }
    flags
}

fn retain_cohort_edges(bucket: &[LocalEdge], flags: Option<&Vec<bool>>) -> Vec<LocalEdge> {
    match flags {
        None => bucket.to_vec(),
        Some(f) => bucket
            .iter()
            .filter(|e| f[e.u as usize] || f[e.v as usize])
            .copied()
            .collect(),
    }
}

/// Closure stats for a single bucket.
pub fn triadic_closure(
    dataset: &Dataset,
    cohort: u32,
    unit: GridUnit,
    idx: i32,
    scope: ClosureScope,
) -> Result<ClosureStats> {
    let (mut chain, flags, grid) = closure_chain(dataset, cohort, unit, scope)?;
    grid.check_index(idx)?;
    if idx > grid.first_index() {
        chain.advance_to(idx - 1)?;
    }
    let bucket = retain_cohort_edges(chain.bucket_edges(idx)?, flags.as_ref());
    Ok(closure_stats_for_bucket(&chain.view(), &bucket, idx))
}

/// Closure stats for every bucket in the grid.
pub fn closure_series(
    dataset: &Dataset,
    cohort: u32,
    unit: GridUnit,
    scope: ClosureScope,
) -> Result<Vec<ClosureStats>> {
    let (mut chain, flags, grid) = closure_chain(dataset, cohort, unit, scope)?;
    let mut out = Vec::with_capacity(grid.len());
    for idx in grid.indices() {
        let bucket = retain_cohort_edges(chain.bucket_edges(idx)?, flags.as_ref());
        out.push(closure_stats_for_bucket(&chain.view(), &bucket, idx));
        chain.advance();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::DatasetBuilder;
    use proptest::prelude::*;

    fn one_cohort(n: u32) -> DatasetBuilder {
        let mut b = DatasetBuilder::new();
        b.school("u1");
        b.cohort("u1", 2010, "2010-09-01", n);
        b
    }

    #[test]
    fn volume_of_empty_cohort_is_all_zero() {
        let d = one_cohort(4).build();
        let s = edge_volume(&d, 0, GridUnit::Month).unwrap();
        assert_eq!(s.points.len(), 72);
        assert!(s.points.iter().all(|p| p.value == Some(0.0)));
    }

    #[test]
    fn volume_sums_to_total_in_scope_events() {
        let mut b = one_cohort(6);
        b.edge(0, 1, "2010-09-05");
        b.edge(0, 2, "2010-09-25");
        b.edge(1, 2, "2011-02-14");
        b.edge(3, 4, "2012-11-01");
        let d = b.build();
        let s = edge_volume(&d, 0, GridUnit::Month).unwrap();
        assert_eq!(s.sum(), 4.0);
        assert_eq!(s.value_at(0), Some(2.0));
    }

    #[test]
    fn unknown_cohort_is_a_lookup_error() {
        let d = one_cohort(3).build();
        assert!(matches!(
            edge_volume(&d, 9, GridUnit::Month),
            Err(Error::UnknownCohort(_))
        ));
    }

    #[test]
    fn single_cohort_school_has_only_same_year_volume() {
        let mut b = one_cohort(4);
        b.edge(0, 1, "2010-09-05");
        b.edge(2, 3, "2010-10-05");
        let d = b.build();
        let fam = cross_cohort_volume(&d, 0, GridUnit::Month).unwrap();
        assert_eq!(fam.len(), 1);
        assert_eq!(fam[0].0, 2010);
        assert_eq!(fam[0].1.sum(), 2.0);
    }

    #[test]
    fn cross_cohort_mix_matches_direct_count() {
        let mut b = DatasetBuilder::new();
        b.school("u1");
        b.cohort("u1", 2010, "2010-09-01", 4); // nodes 0..4
        b.cohort("u1", 2011, "2011-09-01", 4); // nodes 4..8
        // Within 2010: 2 edges; 2010-2011: 3 edges; within 2011: 1 edge.
        b.edge(0, 1, "2011-09-10");
        b.edge(2, 3, "2011-09-11");
        b.edge(0, 4, "2011-09-12");
        b.edge(1, 5, "2011-09-13");
        b.edge(2, 6, "2011-09-14");
        b.edge(6, 7, "2011-09-15");
        let d = b.build();
        let fam = cross_cohort_volume(&d, 0, GridUnit::Month).unwrap();
        let by_year: std::collections::HashMap<i32, f64> =
            fam.iter().map(|(y, s)| (*y, s.sum())).collect();
        assert_eq!(by_year[&2010], 2.0);
        assert_eq!(by_year[&2011], 3.0);
        // Partition: groups sum to the school volume involving the cohort.
        let total: f64 = fam.iter().map(|(_, s)| s.sum()).sum();
        assert_eq!(total, 5.0);
    }

    #[test]
    fn median_of_degrees_one_two_three() {
        assert_eq!(nearest_rank_percentile(&[1, 2, 3], 50), 2.0);
        assert_eq!(nearest_rank_percentile(&[1, 2, 3], 25), 1.0);
        assert_eq!(nearest_rank_percentile(&[1, 2, 3], 75), 3.0);
    }

    #[test]
    fn percentiles_over_a_small_graph() {
        let mut b = one_cohort(4);
        b.edge(0, 2, "2010-09-02");
        b.edge(1, 2, "2010-09-03");
        b.edge(2, 3, "2010-09-04");
        b.edge(1, 3, "2010-09-05");
        let d = b.build();
        let out = degree_percentiles(&d, 0, GridUnit::Month, &[25, 50, 75]).unwrap();
        // Degrees sorted: [1, 2, 2, 3]; nearest rank picks positions 1, 2, 3.
        assert_eq!(out[0].value_at(0), Some(1.0));
        assert_eq!(out[1].value_at(0), Some(2.0));
        assert_eq!(out[2].value_at(0), Some(2.0));
    }

    #[test]
    fn all_isolated_members_have_zero_percentiles() {
        let d = one_cohort(5).build();
        let out = degree_percentiles(&d, 0, GridUnit::Month, &[25, 50, 75]).unwrap();
        for series in &out {
            assert!(series.points.iter().all(|p| p.value == Some(0.0)));
        }
    }

    #[test]
    fn empty_cohort_percentiles_error() {
        let mut b = DatasetBuilder::new();
        b.school("u1");
        b.cohort("u1", 2010, "2010-09-01", 0);
        let d = b.build();
        assert!(matches!(
            degree_percentiles(&d, 0, GridUnit::Month, &[50]),
            Err(Error::EmptyCohort)
        ));
    }

    /// Independent nearest-rank oracle: smallest degree x with
    /// #{d <= x} >= ceil(p*n/100), found by counting rather than sorting.
    fn percentile_oracle(degrees: &[u32], p: u8) -> f64 {
        let n = degrees.len();
        let need = ((p as f64 / 100.0) * n as f64).ceil().max(1.0) as usize;
        let mut x = 0u32;
        loop {
            let at_most = degrees.iter().filter(|&&d| d <= x).count();
            if at_most >= need {
                return x as f64;
            }
            x += 1;
        }
    }

    proptest! {
        #[test]
        fn percentiles_match_counting_oracle_and_are_monotone(
            edges in proptest::collection::vec((0u32..100, 0u32..100), 0..300),
        ) {
            let mut b = one_cohort(100);
            for (k, &(u, v)) in edges.iter().enumerate() {
                if u != v {
                    // Spread over the first twelve months.
                    b.edge_day(u, v, crate::testutil::parse_day("2010-09-01") + (k as i32 % 360));
                }
            }
            let d = b.build();
            let out = degree_percentiles(&d, 0, GridUnit::Month, &[25, 50, 75]).unwrap();

            // Degrees at month 11 (all edges applied).
            let snap = crate::graph::snapshot(
                &d.events, &d.attrs,
                TimeGrid::monthly(d.attrs.cohort(0).start_day), 11, Scope::Cohort(0),
            ).unwrap();
            let degrees: Vec<u32> =
                (0..100u32).map(|i| snap.view().degree(i) as u32).collect();
            for (series, p) in out.iter().zip([25u8, 50, 75]) {
                prop_assert_eq!(series.value_at(11).unwrap(), percentile_oracle(&degrees, p));
                // Non-decreasing in idx: degrees only accumulate.
                let vals: Vec<f64> = series.points.iter().map(|q| q.value.unwrap()).collect();
                prop_assert!(vals.windows(2).all(|w| w[0] <= w[1]));
            }
        }
    }

    #[test]
    fn closure_worked_example() {
        // Prior edges {(1,2),(2,3)}; new edges {(1,3),(1,4)}.
        let mut b = one_cohort(5);
        b.edge(1, 2, "2010-09-02");
        b.edge(2, 3, "2010-09-03");
        b.edge(1, 3, "2010-10-02");
        b.edge(1, 4, "2010-10-03");
        let d = b.build();
        let stats = triadic_closure(&d, 0, GridUnit::Month, 1, ClosureScope::Cohort).unwrap();
        assert_eq!(stats.new_edge_count, 2);
        assert_eq!(stats.share_closing, Some(0.5));
        assert_eq!(stats.mean_triangles_closed, Some(0.5));
    }

    #[test]
    fn new_edge_in_empty_prior_graph_closes_nothing() {
        let mut b = one_cohort(3);
        b.edge(0, 1, "2010-10-02");
        let d = b.build();
        let stats = triadic_closure(&d, 0, GridUnit::Month, 1, ClosureScope::Cohort).unwrap();
        assert_eq!(stats.share_closing, Some(0.0));
        assert_eq!(stats.mean_triangles_closed, Some(0.0));
    }

    #[test]
    fn bucket_without_new_edges_has_absent_fractions() {
        let d = one_cohort(3).build();
        let stats = triadic_closure(&d, 0, GridUnit::Month, 1, ClosureScope::Cohort).unwrap();
        assert_eq!(stats.new_edge_count, 0);
        assert_eq!(stats.share_closing, None);
        assert_eq!(stats.mean_triangles_closed, None);
    }

    #[test]
    fn edge_inside_prior_clique_closes_k_minus_two() {
        for k in [3u32, 4, 5, 6] {
            let mut b = one_cohort(k);
            // Clique on k nodes minus edge (0,1), built one month earlier.
            for i in 0..k {
                for j in (i + 1)..k {
                    if !(i == 0 && j == 1) {
                        b.edge(i, j, "2010-09-05");
                    }
                }
            }
            b.edge(0, 1, "2010-10-10");
            let d = b.build();
            let stats = triadic_closure(&d, 0, GridUnit::Month, 1, ClosureScope::Cohort).unwrap();
            assert_eq!(stats.mean_triangles_closed, Some((k - 2) as f64));
            assert_eq!(stats.share_closing, Some(1.0));
        }
    }

    #[test]
    fn same_bucket_edges_do_not_count_toward_each_other() {
        // Wedge 0-1, 1-2 and closing edge 0-2 all arrive in the same bucket:
        // nothing pre-dates the bucket, so no edge closes a triangle.
        let mut b = one_cohort(3);
        b.edge(0, 1, "2010-10-02");
        b.edge(1, 2, "2010-10-03");
        b.edge(0, 2, "2010-10-04");
        let d = b.build();
        let stats = triadic_closure(&d, 0, GridUnit::Month, 1, ClosureScope::Cohort).unwrap();
        assert_eq!(stats.share_closing, Some(0.0));
    }

    #[test]
    fn school_scope_counts_cross_cohort_neighbors() {
        let mut b = DatasetBuilder::new();
        b.school("u1");
        b.cohort("u1", 2010, "2010-09-01", 3); // 0,1,2
        b.cohort("u1", 2011, "2011-09-01", 3); // 3,4,5
        // Prior wedge through an out-of-cohort node: 0-3, 1-3.
        b.edge(0, 3, "2010-09-10");
        b.edge(1, 3, "2010-09-11");
        // New within-cohort edge 0-1 closes via node 3 only in school scope.
        b.edge(0, 1, "2010-10-05");
        let d = b.build();
        let school = triadic_closure(&d, 0, GridUnit::Month, 1, ClosureScope::School).unwrap();
        assert_eq!(school.share_closing, Some(1.0));
        assert_eq!(school.mean_triangles_closed, Some(1.0));
        let cohort = triadic_closure(&d, 0, GridUnit::Month, 1, ClosureScope::Cohort).unwrap();
        assert_eq!(cohort.share_closing, Some(0.0));
    }

    proptest! {
        /// Common-neighbor counting agrees with a brute-force O(d_u * d_v)
        /// membership scan, and share/mean stay coherent.
        #[test]
        fn closure_matches_brute_force_scan(
            prior in proptest::collection::vec((0u32..30, 0u32..30), 0..160),
            fresh in proptest::collection::vec((0u32..30, 0u32..30), 1..20),
        ) {
            let mut b = one_cohort(30);
            let mut seen = std::collections::HashSet::new();
            for &(u, v) in &prior {
                if u != v && seen.insert((u.min(v), u.max(v))) {
                    b.edge(u, v, "2010-09-10");
                }
            }
            let mut fresh_kept = Vec::new();
            for &(u, v) in &fresh {
                if u != v && seen.insert((u.min(v), u.max(v))) {
                    b.edge(u, v, "2010-10-10");
                    fresh_kept.push((u.min(v), u.max(v)));
                }
            }
            prop_assume!(!fresh_kept.is_empty());
            let d = b.build();
            let stats = triadic_closure(&d, 0, GridUnit::Month, 1, ClosureScope::Cohort).unwrap();

            // Brute force against the prior snapshot.
            let snap = crate::graph::snapshot(
                &d.events, &d.attrs,
                TimeGrid::monthly(d.attrs.cohort(0).start_day), 0, Scope::Cohort(0),
            ).unwrap();
            let view = snap.view();
            let mut total = 0usize;
            let mut closing = 0usize;
            for &(u, v) in &fresh_kept {
                let mut common = 0usize;
                for &x in view.neighbors(u) {
                    for &y in view.neighbors(v) {
                        if x == y {
                            common += 1;
                        }
                    }
                }
                total += common;
                closing += usize::from(common > 0);
            }
            let n = fresh_kept.len() as f64;
            prop_assert_eq!(stats.new_edge_count, fresh_kept.len() as u64);
            prop_assert!((stats.share_closing.unwrap() - closing as f64 / n).abs() < 1e-15);
            prop_assert!((stats.mean_triangles_closed.unwrap() - total as f64 / n).abs() < 1e-15);
            // mean > 0 implies share > 0.
            if stats.mean_triangles_closed.unwrap() > 0.0 {
                prop_assert!(stats.share_closing.unwrap() > 0.0);
            }
        }
    }
}
