//! Availability-adjusted homophily of new and cumulative ties.
//!
//! For a focal cohort and time slice, every school edge with both endpoints
//! declaring the dimension is eligible. Each eligible edge contributes one
//! incidence per cohort-member endpoint (an intra-cohort edge contributes
//! two, one per orientation). With e_ii the share of incidences where both
//! sides carry feature i, a_i the share where the member side carries i, and
//! b_i the share of eligible school edges where either node carries i, the
//! coefficient is
//!
//!     H = (sum_i e_ii - sum_i a_i * b_i) / (1 - sum_i a_i * b_i)
//!
//! and is absent when there are no incidences or the expected term saturates
//! at one.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::graph::{AttributeTable, Dimension, EdgeEvent, GridUnit, NodeId, SchoolIdx, TimeGrid};
use crate::series::MetricSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HomophilyMode {
    /// Edges formed inside the bucket.
    New,
    /// All edges formed up to the bucket end.
    Cumulative,
}

impl HomophilyMode {
    pub fn as_str(self) -> &'static str {
        match self {
            HomophilyMode::New => "new",
            HomophilyMode::Cumulative => "cumulative",
        }
    }
}

/// What the availability shares b_i are computed over. `Edges` is the
/// primary definition; the others exist because the wording "share of all
/// edges where either node has feature i" admits an incidence reading, and
/// the endpoint-share form is the classical assortativity marginal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BShareBasis {
    #[default]
    Edges,
    Incidences,
    EndpointShare,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomophilyCoefficient {
    pub cohort: u32,
    pub dimension: Dimension,
    pub mode: HomophilyMode,
    pub idx: i32,
    pub e_sum: Option<f64>,
    pub expected: Option<f64>,
    pub h: Option<f64>,
    pub n_incidences: u64,
}

/// Count state for one (dimension, mode); supports both per-bucket resets
/// (new) and running totals (cumulative).
#[derive(Debug, Clone)]
struct Accum {
    incidences: u64,
    same: u64,
    member: Vec<u64>,
    inc_either: Vec<u64>,
    edges: u64,
    edge_either: Vec<u64>,
    endpoints: Vec<u64>,
}

impl Accum {
    fn new(categories: usize) -> Self {
        Accum {
            incidences: 0,
            same: 0,
            member: vec![0; categories],
            inc_either: vec![0; categories],
            edges: 0,
            edge_either: vec![0; categories],
            endpoints: vec![0; categories],
        }
    }

    fn reset(&mut self) {
        self.incidences = 0;
        self.same = 0;
        self.member.fill(0);
        self.inc_either.fill(0);
        self.edges = 0;
        self.edge_either.fill(0);
        self.endpoints.fill(0);
    }

    #[inline]
    fn add_incidence(&mut self, member: u32, other: u32) {
        self.incidences += 1;
        if member == other {
            self.same += 1;
        }
        self.member[member as usize] += 1;
        self.inc_either[member as usize] += 1;
        if other != member {
            self.inc_either[other as usize] += 1;
        }
    }

    /// Adds an eligible school edge; the flags say which endpoints belong to
    /// the focal cohort.
    #[inline]
    fn add_edge(&mut self, fu: u32, fv: u32, u_in: bool, v_in: bool) {
        self.edges += 1;
        self.edge_either[fu as usize] += 1;
        if fv != fu {
            self.edge_either[fv as usize] += 1;
        }
        self.endpoints[fu as usize] += 1;
        self.endpoints[fv as usize] += 1;
        if u_in {
            self.add_incidence(fu, fv);
        }
        if v_in {
            self.add_incidence(fv, fu);
        }
    }

    fn finalize(
        &self,
        cohort: u32,
        dimension: Dimension,
        mode: HomophilyMode,
        idx: i32,
        basis: BShareBasis,
    ) -> HomophilyCoefficient {
        if self.incidences == 0 {
            return HomophilyCoefficient {
                cohort,
                dimension,
                mode,
                idx,
                e_sum: None,
                expected: None,
                h: None,
                n_incidences: 0,
            };
        }
        let n = self.incidences as f64;
        let e_sum = self.same as f64 / n;
        let (b_num, b_den): (&[u64], u64) = match basis {
            BShareBasis::Edges => (&self.edge_either, self.edges),
            BShareBasis::Incidences => (&self.inc_either, self.incidences),
            BShareBasis::EndpointShare => (&self.endpoints, 2 * self.edges),
        };
        // Expected saturates at exactly 1 iff every category carrying
        // incidences has a full availability share; checked on the integer
        // counts so float rounding cannot manufacture a denominator.
        let degenerate = self
            .member
            .iter()
            .zip(b_num)
            .all(|(&m, &b)| m == 0 || b == b_den);
        let mut expected = 0.0;
        for (i, &m) in self.member.iter().enumerate() {
            if m > 0 {
                expected += (m as f64 / n) * (b_num[i] as f64 / b_den as f64);
            }
        }
        let h = (!degenerate && expected < 1.0).then(|| (e_sum - expected) / (1.0 - expected));
        HomophilyCoefficient {
            cohort,
            dimension,
            mode,
            idx,
            e_sum: Some(e_sum),
            expected: Some(expected),
            h,
            n_incidences: self.incidences,
        }
    }
}

fn base_year(attrs: &AttributeTable) -> i32 {
    attrs
        .cohorts
        .iter()
        .map(|c| c.key.entry_year)
        .min()
        .unwrap_or(0)
}

fn category_count(attrs: &AttributeTable, dim: Dimension) -> usize {
    match dim {
        Dimension::Gender => attrs.gender_dict.len(),
        Dimension::Major => attrs.major_dict.len(),
        Dimension::Hometown => attrs.hometown_dict.len(),
        Dimension::EntryYear => {
            let min = base_year(attrs);
            let max = attrs
                .cohorts
                .iter()
                .map(|c| c.key.entry_year)
                .max()
                .unwrap_or(0);
            (max - min + 1) as usize
        }
    }
}

#[inline]
fn dense_feature(attrs: &AttributeTable, node: NodeId, dim: Dimension, base: i32) -> Option<u32> {
    if !attrs.has_feature(node, dim) {
        return None;
    }
    Some(match dim {
        Dimension::EntryYear => (attrs.entry_year[node.index()] - base) as u32,
        _ => attrs.feature(node, dim),
    })
}

/// All events with both endpoints at the school, time order preserved.
pub fn school_events(dataset: &Dataset, school: SchoolIdx) -> Vec<EdgeEvent> {
    dataset
        .events
        .iter()
        .filter(|e| {
            dataset.attrs.school[e.u.index()] == school
                && dataset.attrs.school[e.v.index()] == school
        })
        .copied()
        .collect()
}

/// Per-bucket coefficients for every dimension and both modes for one
/// cohort. `events` must be the cohort's school event list in time order.
pub fn homophily_rows(
    dataset: &Dataset,
    events: &[EdgeEvent],
    cohort: u32,
    unit: GridUnit,
    basis: BShareBasis,
) -> Result<Vec<HomophilyCoefficient>> {
    let attrs = &dataset.attrs;
    if cohort as usize >= attrs.cohorts.len() {
        return Err(Error::UnknownCohort(format!("#{cohort}")));
    }
    let record = attrs.cohort(cohort);
    let grid = TimeGrid::with_unit(record.start_day, unit);
    let base = base_year(attrs);
    let dims = crate::graph::attrs::ALL_DIMENSIONS;

    let mut fresh: Vec<Accum> = dims
        .iter()
        .map(|&d| Accum::new(category_count(attrs, d)))
        .collect();
    let mut cumulative = fresh.clone();

    let mut rows = Vec::new();
    let mut pos = 0usize;

    // Events before the window only feed the cumulative counts.
    while pos < events.len() && grid.raw_index_of(events[pos].t) < grid.first_index() {
        let e = events[pos];
        add_event(attrs, cohort, base, &dims, e, &mut [], &mut cumulative);
        pos += 1;
    }

    for idx in grid.indices() {
        for acc in &mut fresh {
            acc.reset();
        }
        while pos < events.len() && grid.raw_index_of(events[pos].t) == idx {
            let e = events[pos];
            add_event(attrs, cohort, base, &dims, e, &mut fresh, &mut cumulative);
            pos += 1;
        }
        for (d, &dim) in dims.iter().enumerate() {
            rows.push(fresh[d].finalize(cohort, dim, HomophilyMode::New, idx, basis));
            rows.push(cumulative[d].finalize(cohort, dim, HomophilyMode::Cumulative, idx, basis));
        }
    }
    Ok(rows)
}

#[inline]
fn add_event(
    attrs: &AttributeTable,
    cohort: u32,
    base: i32,
    dims: &[Dimension; 4],
    e: EdgeEvent,
    fresh: &mut [Accum],
    cumulative: &mut [Accum],
) {
    let u_in = attrs.cohort_of[e.u.index()] == cohort;
    let v_in = attrs.cohort_of[e.v.index()] == cohort;
    for (d, &dim) in dims.iter().enumerate() {
        let (Some(fu), Some(fv)) = (
            dense_feature(attrs, e.u, dim, base),
            dense_feature(attrs, e.v, dim, base),
        ) else {
            continue;
        };
        if let Some(acc) = fresh.get_mut(d) {
            acc.add_edge(fu, fv, u_in, v_in);
        }
        cumulative[d].add_edge(fu, fv, u_in, v_in);
    }
}

/// Coefficient for a single bucket.
pub fn homophily_coefficient(
    dataset: &Dataset,
    cohort: u32,
    dimension: Dimension,
    unit: GridUnit,
    idx: i32,
    mode: HomophilyMode,
    basis: BShareBasis,
) -> Result<HomophilyCoefficient> {
    if cohort as usize >= dataset.attrs.cohorts.len() {
        return Err(Error::UnknownCohort(format!("#{cohort}")));
    }
    let grid = TimeGrid::with_unit(dataset.attrs.cohort(cohort).start_day, unit);
    grid.check_index(idx)?;
    let events = school_events(dataset, dataset.attrs.cohort(cohort).key.school);
    let rows = homophily_rows(dataset, &events, cohort, unit, basis)?;
    Ok(rows
        .into_iter()
        .find(|r| r.idx == idx && r.dimension == dimension && r.mode == mode)
        .expect("grid index present"))
}

/// Coefficient series over the grid for one dimension and mode.
pub fn homophily_series(
    dataset: &Dataset,
    cohort: u32,
    dimension: Dimension,
    unit: GridUnit,
    mode: HomophilyMode,
    basis: BShareBasis,
) -> Result<MetricSeries> {
    if cohort as usize >= dataset.attrs.cohorts.len() {
        return Err(Error::UnknownCohort(format!("#{cohort}")));
    }
    let events = school_events(dataset, dataset.attrs.cohort(cohort).key.school);
    let rows = homophily_rows(dataset, &events, cohort, unit, basis)?;
    let mut series = MetricSeries::new(
        cohort,
        format!("homophily_{}_{}", dimension.as_str(), mode.as_str()),
        unit,
    );
    for r in rows {
        if r.dimension == dimension && r.mode == mode {
            series.push(r.idx, r.h, r.n_incidences);
        }
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::DatasetBuilder;
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    /// The four-incidence worked instance: member genders F,F,M,F against
    /// others F,M,M,F, each incidence from its own edge.
    fn worked_instance() -> Dataset {
        let mut b = DatasetBuilder::new();
        b.school("u");
        b.cohort("u", 2010, "2010-09-01", 2); // members: 0=F, 1=M
        b.cohort("u", 2011, "2011-09-01", 3); // others: 2=F, 3=M, 4=F
        for (n, g) in [(0, "F"), (1, "M"), (2, "F"), (3, "M"), (4, "F")] {
            b.set_gender(n, g);
        }
        b.edge(0, 2, "2010-09-05"); // (F,F)
        b.edge(0, 3, "2010-09-06"); // (F,M)
        b.edge(1, 3, "2010-09-07"); // (M,M)
        b.edge(0, 4, "2010-09-08"); // (F,F)
        b.build()
    }

    #[test]
    fn worked_example_is_exact() {
        let d = worked_instance();
        let c = homophily_coefficient(
            &d,
            0,
            Dimension::Gender,
            GridUnit::Month,
            0,
            HomophilyMode::New,
            BShareBasis::Edges,
        )
        .unwrap();
        assert_eq!(c.n_incidences, 4);
        assert!((c.e_sum.unwrap() - 0.75).abs() < 1e-15);
        assert!((c.expected.unwrap() - 0.6875).abs() < 1e-15);
        assert!((c.h.unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn all_same_feature_with_expected_below_one_gives_one() {
        let mut b = DatasetBuilder::new();
        b.school("u");
        b.cohort("u", 2010, "2010-09-01", 1);
        b.cohort("u", 2011, "2011-09-01", 4);
        for (n, g) in [(0, "F"), (1, "F"), (2, "M"), (3, "M"), (4, "M")] {
            b.set_gender(n, g);
        }
        b.edge(0, 1, "2010-09-05"); // member edge, (F,F)
        b.edge(2, 3, "2010-09-06"); // background school edges keep b_F < 1
        b.edge(3, 4, "2010-09-07");
        let d = b.build();
        let c = homophily_coefficient(
            &d,
            0,
            Dimension::Gender,
            GridUnit::Month,
            0,
            HomophilyMode::New,
            BShareBasis::Edges,
        )
        .unwrap();
        assert_eq!(c.h, Some(1.0));
    }

    #[test]
    fn observed_equal_to_expected_gives_zero() {
        // Member a1 (F): edges (F,F) and (F,M); background (M,M) twice.
        // e = 1/2, a_F = 1, b_F = 2/4, so expected = 1/2 and H = 0.
        let mut b = DatasetBuilder::new();
        b.school("u");
        b.cohort("u", 2010, "2010-09-01", 1);
        b.cohort("u", 2011, "2011-09-01", 5);
        for (n, g) in [(0, "F"), (1, "F"), (2, "M"), (3, "M"), (4, "M"), (5, "M")] {
            b.set_gender(n, g);
        }
        b.edge(0, 1, "2010-09-05");
        b.edge(0, 2, "2010-09-06");
        b.edge(3, 4, "2010-09-07");
        b.edge(3, 5, "2010-09-08");
        let d = b.build();
        let c = homophily_coefficient(
            &d,
            0,
            Dimension::Gender,
            GridUnit::Month,
            0,
            HomophilyMode::New,
            BShareBasis::Edges,
        )
        .unwrap();
        assert!((c.h.unwrap() - 0.0).abs() < 1e-15);
    }

    #[test]
    fn single_gender_school_is_absent_everywhere() {
        let mut b = DatasetBuilder::new();
        b.school("u");
        let members = b.cohort("u", 2010, "2010-09-01", 4);
        for n in members {
            b.set_gender(n, "F");
        }
        b.edge(0, 1, "2010-09-05");
        b.edge(1, 2, "2010-11-05");
        b.edge(2, 3, "2011-02-05");
        let d = b.build();
        for mode in [HomophilyMode::New, HomophilyMode::Cumulative] {
            let rows = homophily_rows(
                &d,
                &school_events(&d, crate::graph::SchoolIdx(0)),
                0,
                GridUnit::Month,
                BShareBasis::Edges,
            )
            .unwrap();
            for r in rows
                .iter()
                .filter(|r| r.dimension == Dimension::Gender && r.mode == mode)
            {
                assert_eq!(r.h, None, "idx {} should be degenerate", r.idx);
            }
        }
    }

    #[test]
    fn same_year_only_two_cohort_school_has_unit_year_homophily() {
        let mut b = DatasetBuilder::new();
        b.school("u");
        b.cohort("u", 2010, "2010-09-01", 3);
        b.cohort("u", 2011, "2011-09-01", 3);
        b.edge(0, 1, "2010-09-05");
        b.edge(1, 2, "2010-10-05");
        b.edge(3, 4, "2010-09-06");
        b.edge(4, 5, "2010-10-06");
        let d = b.build();
        let s = homophily_series(
            &d,
            0,
            Dimension::EntryYear,
            GridUnit::Month,
            HomophilyMode::New,
            BShareBasis::Edges,
        )
        .unwrap();
        let populated: Vec<f64> = s.points.iter().filter_map(|p| p.value).collect();
        assert_eq!(populated.len(), 2);
        assert!(populated.iter().all(|&h| (h - 1.0).abs() < 1e-12));
    }

    #[test]
    fn cumulative_equals_recomputation_over_union() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut b = DatasetBuilder::new();
        b.school("u");
        b.cohort("u", 2010, "2010-09-01", 12);
        for n in 0..12 {
            b.set_gender(n, if rng.random_bool(0.5) { "F" } else { "M" });
        }
        let days = ["2010-07-03", "2010-09-10", "2010-11-20", "2011-02-05"];
        let mut seen = std::collections::HashSet::new();
        for _ in 0..40 {
            let u = rng.random_range(0..12u32);
            let v = rng.random_range(0..12u32);
            if u != v && seen.insert((u.min(v), u.max(v))) {
                b.edge(u, v, days[rng.random_range(0..days.len())]);
            }
        }
        let d = b.build();
        let events = school_events(&d, crate::graph::SchoolIdx(0));
        let rows =
            homophily_rows(&d, &events, 0, GridUnit::Month, BShareBasis::Edges).unwrap();
        let cum_at_5 = rows
            .iter()
            .find(|r| {
                r.idx == 5 && r.dimension == Dimension::Gender && r.mode == HomophilyMode::Cumulative
            })
            .unwrap();

        // Oracle: recompute from scratch over all events with t <= bucket end.
        let grid = TimeGrid::monthly(d.attrs.cohort(0).start_day);
        let cutoff = grid.bucket_end(5);
        let subset: Vec<EdgeEvent> = events.iter().filter(|e| e.t <= cutoff).copied().collect();
        let oracle = brute_force_h(&d, &subset, 0, Dimension::Gender);
        assert!((cum_at_5.h.unwrap() - oracle.unwrap()).abs() < 1e-12);
    }

    /// Independent term-by-term evaluation of the formula from raw pairs.
    fn brute_force_h(
        d: &Dataset,
        events: &[EdgeEvent],
        cohort: u32,
        dim: Dimension,
    ) -> Option<f64> {
        let attrs = &d.attrs;
        let mut incid: Vec<(u32, u32)> = Vec::new();
        let mut edges: Vec<(u32, u32)> = Vec::new();
        for e in events {
            if !attrs.has_feature(e.u, dim) || !attrs.has_feature(e.v, dim) {
                continue;
            }
            let (fu, fv) = (attrs.feature(e.u, dim), attrs.feature(e.v, dim));
            edges.push((fu, fv));
            if attrs.cohort_of[e.u.index()] == cohort {
                incid.push((fu, fv));
            }
            if attrs.cohort_of[e.v.index()] == cohort {
                incid.push((fv, fu));
            }
        }
        if incid.is_empty() {
            return None;
        }
        let cats: std::collections::BTreeSet<u32> = incid
            .iter()
            .flat_map(|&(a, b)| [a, b])
            .chain(edges.iter().flat_map(|&(a, b)| [a, b]))
            .collect();
        let n = incid.len() as f64;
        let m = edges.len() as f64;
        let mut e_sum = 0.0;
        let mut expected = 0.0;
        for &i in &cats {
            let e_ii = incid.iter().filter(|&&(a, b)| a == i && b == i).count() as f64 / n;
            let a_i = incid.iter().filter(|&&(a, _)| a == i).count() as f64 / n;
            let b_i = edges.iter().filter(|&&(a, b)| a == i || b == i).count() as f64 / m;
            e_sum += e_ii;
            expected += a_i * b_i;
        }
        (expected < 1.0 - 1e-12).then(|| (e_sum - expected) / (1.0 - expected))
    }

    /// 100 random instances against the brute-force oracle at 1e-12.
    #[test]
    fn matches_term_by_term_oracle_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for round in 0..100 {
            let n_focal = rng.random_range(2..20u32);
            let n_other = rng.random_range(2..20u32);
            let mut b = DatasetBuilder::new();
            b.school("u");
            b.cohort("u", 2010, "2010-09-01", n_focal);
            b.cohort("u", 2011, "2011-09-01", n_other);
            let total = n_focal + n_other;
            let k = rng.random_range(2..6usize);
            for n in 0..total {
                let g = format!("g{}", rng.random_range(0..k));
                b.set_gender(n, &g);
            }
            let mut seen = std::collections::HashSet::new();
            let n_edges = rng.random_range(1..500usize);
            for _ in 0..n_edges {
                let u = rng.random_range(0..total);
                let v = rng.random_range(0..total);
                if u != v && seen.insert((u.min(v), u.max(v))) {
                    b.edge(u, v, "2010-09-10");
                }
            }
            let d = b.build();
            let events = school_events(&d, crate::graph::SchoolIdx(0));
            let got = homophily_coefficient(
                &d,
                0,
                Dimension::Gender,
                GridUnit::Month,
                0,
                HomophilyMode::New,
                BShareBasis::Edges,
            )
            .unwrap();
            let oracle = brute_force_h(&d, &events, 0, Dimension::Gender);
            match (got.h, oracle) {
                (Some(a), Some(b)) => {
                    assert!((a - b).abs() < 1e-12, "round {round}: {a} vs {b}")
                }
                (a, b) => assert_eq!(a, b, "round {round}"),
            }
            if let Some(h) = got.h {
                assert!(h <= 1.0 + 1e-15);
            }
        }
    }

    proptest! {
        /// Permuting category labels uniformly leaves H unchanged.
        #[test]
        fn label_permutation_invariance(
            genders in proptest::collection::vec(0u8..4, 8..24),
            edges in proptest::collection::vec((0u32..24, 0u32..24), 1..80),
            swap_a in 0u8..4,
            swap_b in 0u8..4,
        ) {
            let n = genders.len() as u32;
            let build = |relabel: &dyn Fn(u8) -> u8| {
                let mut b = DatasetBuilder::new();
                b.school("u");
                b.cohort("u", 2010, "2010-09-01", n);
                for (i, &g) in genders.iter().enumerate() {
                    b.set_gender(i as u32, &format!("g{}", relabel(g)));
                }
                let mut seen = std::collections::HashSet::new();
                for &(u, v) in &edges {
                    let (u, v) = (u % n, v % n);
                    if u != v && seen.insert((u.min(v), u.max(v))) {
                        b.edge(u, v, "2010-09-10");
                    }
                }
                b.build()
            };
            let id = build(&|g| g);
            let perm = build(&|g| {
                if g == swap_a { swap_b } else if g == swap_b { swap_a } else { g }
            });
            let h = |d: &Dataset| {
                homophily_coefficient(
                    d, 0, Dimension::Gender, GridUnit::Month, 0,
                    HomophilyMode::New, BShareBasis::Edges,
                ).unwrap().h
            };
            match (h(&id), h(&perm)) {
                (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-12),
                (a, b) => prop_assert_eq!(a, b),
            }
        }
    }

    /// Under iid features and uniform edges the estimator concentrates at
    /// -1/(K-1): availability b_i counts either-endpoint edges, so the
    /// expected term sums to 2*sum(p^2) - sum(p^3) rather than sum(p^2).
    #[test]
    fn null_mixing_concentrates_at_derived_value() {
        for (k, tol) in [(2usize, 0.03), (10, 0.03)] {
            let mut rng = ChaCha8Rng::seed_from_u64(99 + k as u64);
            let mut hs = Vec::new();
            for _ in 0..50 {
                let n_nodes = 300u32;
                let mut b = DatasetBuilder::new();
                b.school("u");
                b.cohort("u", 2010, "2010-09-01", n_nodes);
                for i in 0..n_nodes {
                    b.set_gender(i, &format!("g{}", rng.random_range(0..k)));
                }
                let mut seen = std::collections::HashSet::new();
                for _ in 0..4000 {
                    let u = rng.random_range(0..n_nodes);
                    let v = rng.random_range(0..n_nodes);
                    if u != v && seen.insert((u.min(v), u.max(v))) {
                        b.edge(u, v, "2010-09-10");
                    }
                }
                let d = b.build();
                let c = homophily_coefficient(
                    &d,
                    0,
                    Dimension::Gender,
                    GridUnit::Month,
                    0,
                    HomophilyMode::New,
                    BShareBasis::Edges,
                )
                .unwrap();
                hs.push(c.h.unwrap());
            }
            let mean = hs.iter().sum::<f64>() / hs.len() as f64;
            let null = -1.0 / (k as f64 - 1.0);
            assert!(
                (mean - null).abs() < tol,
                "K={k}: mean {mean} vs derived null {null}"
            );
        }
    }

    /// The endpoint-share basis is the classical marginal and is centered at
    /// zero under the same null.
    #[test]
    fn endpoint_share_basis_is_null_centered() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut hs = Vec::new();
        for _ in 0..50 {
            let n_nodes = 60u32;
            let mut b = DatasetBuilder::new();
            b.school("u");
            b.cohort("u", 2010, "2010-09-01", n_nodes);
            for i in 0..n_nodes {
                b.set_gender(i, if rng.random_bool(0.5) { "F" } else { "M" });
            }
            let mut seen = std::collections::HashSet::new();
            for _ in 0..600 {
                let u = rng.random_range(0..n_nodes);
                let v = rng.random_range(0..n_nodes);
                if u != v && seen.insert((u.min(v), u.max(v))) {
                    b.edge(u, v, "2010-09-10");
                }
            }
            let d = b.build();
            let c = homophily_coefficient(
                &d,
                0,
                Dimension::Gender,
                GridUnit::Month,
                0,
                HomophilyMode::New,
                BShareBasis::EndpointShare,
            )
            .unwrap();
            hs.push(c.h.unwrap());
        }
        let mean = hs.iter().sum::<f64>() / hs.len() as f64;
        let sd = (hs.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / (hs.len() - 1) as f64)
            .sqrt();
        let se = sd / (hs.len() as f64).sqrt();
        assert!(
            mean.abs() < 3.0 * se + 0.02,
            "mean {mean}, se {se}: endpoint-share basis should be null centered"
        );
    }

    #[test]
    fn unknown_features_are_excluded() {
        let mut b = DatasetBuilder::new();
        b.school("u");
        b.cohort("u", 2010, "2010-09-01", 4);
        b.set_gender(0, "F");
        b.set_gender(1, "F");
        // Nodes 2 and 3 keep unknown gender.
        b.edge(0, 1, "2010-09-05");
        b.edge(0, 2, "2010-09-06");
        b.edge(2, 3, "2010-09-07");
        let d = b.build();
        let c = homophily_coefficient(
            &d,
            0,
            Dimension::Gender,
            GridUnit::Month,
            0,
            HomophilyMode::New,
            BShareBasis::Edges,
        )
        .unwrap();
        // Only the (0,1) edge is eligible: two incidences.
        assert_eq!(c.n_incidences, 2);
    }
}
