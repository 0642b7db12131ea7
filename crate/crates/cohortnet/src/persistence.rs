//! Tie persistence: which college friendships are still close today,
//! measured against an externally supplied per-ego closeness ranking.

use std::collections::{BTreeMap, HashMap};

use crate::dataset::Dataset;
use crate::graph::{NodeId, TimeGrid, UNKNOWN_CATEGORY};

pub const DEFAULT_TOP_K: u32 = 200;

/// Per-ego ranking of alters by present-day closeness, rank 1 closest.
/// Ranks need not be contiguous: alters outside this table simply rank
/// beyond everything listed.
#[derive(Debug, Default, Clone)]
pub struct ClosenessTable {
    by_ego: HashMap<u32, Vec<(u32, u32)>>,
}

impl ClosenessTable {
    pub fn from_ranks(rows: impl IntoIterator<Item = (NodeId, NodeId, u32)>) -> Self {
        let mut by_ego: HashMap<u32, Vec<(u32, u32)>> = HashMap::new();
        for (ego, alter, rank) in rows {
            by_ego.entry(ego.0).or_default().push((alter.0, rank));
        }
        for alters in by_ego.values_mut() {
            alters.sort_unstable();
        }
        ClosenessTable { by_ego }
    }

    pub fn contains_ego(&self, ego: NodeId) -> bool {
        self.by_ego.contains_key(&ego.0)
    }

    pub fn rank_of(&self, ego: NodeId, alter: NodeId) -> Option<u32> {
        let alters = self.by_ego.get(&ego.0)?;
        let pos = alters.binary_search_by_key(&alter.0, |&(a, _)| a).ok()?;
        Some(alters[pos].1)
    }

    pub fn ego_count(&self) -> usize {
        self.by_ego.len()
    }

    /// Rows as `(ego, alter, rank)`, sorted, for serialization.
    pub fn rows(&self) -> Vec<(NodeId, NodeId, u32)> {
        let mut out: Vec<(NodeId, NodeId, u32)> = self
            .by_ego
            .iter()
            .flat_map(|(&e, alters)| {
                alters
                    .iter()
                    .map(move |&(a, r)| (NodeId(e), NodeId(a), r))
            })
            .collect();
        out.sort_unstable();
        out
    }
}

/// Ranks a set of scored alters against `externals`, the scores of the ego's
/// friends outside the dataset. Higher score means closer. Ties between
/// alters break by id; an external tied with an alter ranks below it.
pub fn ranks_from_scores(scored: &[(u32, f64)], externals: &[f64]) -> Vec<(u32, u32)> {
    let mut by_score: Vec<(u32, f64)> = scored.to_vec();
    by_score.sort_unstable_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut ext = externals.to_vec();
    ext.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut out = Vec::with_capacity(by_score.len());
    for (i, &(alter, score)) in by_score.iter().enumerate() {
        let above = ext.partition_point(|&e| e > score);
        out.push((alter, (i + above + 1) as u32));
    }
    out.sort_unstable();
    out
}

/// Whether `alter` is within the ego's top `k`. `None` when the ego is not
/// covered by the table at all; such evaluations are excluded from shares
/// and surface in the coverage report.
pub fn is_cff(ego: NodeId, alter: NodeId, closeness: &ClosenessTable, k: u32) -> Option<bool> {
    if !closeness.contains_ego(ego) {
        return None;
    }
    Some(closeness.rank_of(ego, alter).is_some_and(|r| r <= k))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grouping {
    FormationWeek,
    GenderPair,
    Cohort,
    School,
}

impl Grouping {
    pub fn as_str(self) -> &'static str {
        match self {
            Grouping::FormationWeek => "formation_week",
            Grouping::GenderPair => "gender_pair",
            Grouping::Cohort => "cohort",
            Grouping::School => "school",
        }
    }
}

/// Directed evaluates every tie from both endpoints' perspectives; the
/// undirected variant scores a tie once, close if either endpoint holds the
/// other in its top k.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieEvaluation {
    #[default]
    Directed,
    Undirected,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceCell {
    pub key: String,
    pub share_cff: Option<f64>,
    pub n_ties: u64,
    cff: u64,
}

impl PersistenceCell {
    pub fn cff_count(&self) -> u64 {
        self.cff
    }
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct CoverageReport {
    pub evaluated: u64,
    pub missing_ego: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct PersistenceParams {
    pub k: u32,
    pub evaluation: TieEvaluation,
}

impl Default for PersistenceParams {
    fn default() -> Self {
        PersistenceParams {
            k: DEFAULT_TOP_K,
            evaluation: TieEvaluation::Directed,
        }
    }
}

/// Sort keys: numeric groupings order numerically, the rest alphabetically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum CellKey {
    Num(i64),
    Text(String),
}

impl CellKey {
    fn to_string(&self) -> String {
        match self {
            CellKey::Num(n) => n.to_string(),
            CellKey::Text(s) => s.clone(),
        }
    }
}

/// Shares of close ties grouped by formation time, gender pair, cohort, or
/// school. Ties are same-school edges; each directed evaluation is attributed
/// to the ego's cohort (its grid, entry year, school).
pub fn share_cff_by(
    grouping: Grouping,
    dataset: &Dataset,
    closeness: &ClosenessTable,
    params: PersistenceParams,
) -> (Vec<PersistenceCell>, CoverageReport) {
    let attrs = &dataset.attrs;
    let mut cells: BTreeMap<CellKey, (u64, u64)> = BTreeMap::new();
    let mut coverage = CoverageReport::default();

    // Weekly grids per cohort for formation-time keys.
    let grids: Vec<TimeGrid> = attrs
        .cohorts
        .iter()
        .map(|c| TimeGrid::weekly(c.start_day))
        .collect();

    let mut tally = |ego: NodeId, alter: NodeId, t: crate::graph::Day, cff: Option<bool>| {
        let Some(cff) = cff else {
            coverage.missing_ego += 1;
            return;
        };
        let key = match grouping {
            Grouping::FormationWeek => {
                let grid = &grids[attrs.cohort_of[ego.index()] as usize];
                CellKey::Num(grid.raw_index_of(t) as i64)
            }
            Grouping::GenderPair => {
                let (a, b) = (
                    attrs.gender[ego.index()],
                    attrs.gender[alter.index()],
                );
                if a == UNKNOWN_CATEGORY || b == UNKNOWN_CATEGORY {
                    return;
                }
                let (x, y) = (
                    attrs.gender_dict.name(a.min(b)),
                    attrs.gender_dict.name(a.max(b)),
                );
                CellKey::Text(format!("{x}|{y}"))
            }
            Grouping::Cohort => {
                CellKey::Text(attrs.cohort_label(attrs.cohort_of[ego.index()]))
            }
            Grouping::School => CellKey::Text(
                attrs.schools[attrs.school[ego.index()].index()]
                    .raw_id
                    .clone(),
            ),
        };
        let cell = cells.entry(key).or_insert((0, 0));
        cell.0 += 1;
        cell.1 += u64::from(cff);
        coverage.evaluated += 1;
    };

    for e in dataset.events.iter() {
        if attrs.school[e.u.index()] != attrs.school[e.v.index()] {
            continue;
        }
        match params.evaluation {
            TieEvaluation::Directed => {
                tally(e.u, e.v, e.t, is_cff(e.u, e.v, closeness, params.k));
                tally(e.v, e.u, e.t, is_cff(e.v, e.u, closeness, params.k));
            }
            TieEvaluation::Undirected => {
                let a = is_cff(e.u, e.v, closeness, params.k);
                let b = is_cff(e.v, e.u, closeness, params.k);
                let merged = match (a, b) {
                    (None, None) => None,
                    _ => Some(a.unwrap_or(false) || b.unwrap_or(false)),
                };
                tally(e.u, e.v, e.t, merged);
            }
        }
    }

    let cells = cells
        .into_iter()
        .map(|(key, (n, cff))| PersistenceCell {
            key: key.to_string(),
            share_cff: (n > 0).then(|| cff as f64 / n as f64),
            n_ties: n,
            cff,
        })
        .collect();
    (cells, coverage)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchoolPoint {
    pub school: String,
    /// Mean same-school degree over class members.
    pub mean_college_friends: f64,
    /// Mean count of close college friends per member.
    pub mean_cff: f64,
    pub share_cff: Option<f64>,
    pub n_evaluations: u64,
    pub n_members: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchoolScatter {
    pub entry_year: i32,
    pub points: Vec<SchoolPoint>,
    /// Correlation of mean friend count with mean close-friend count.
    pub corr_friends_cff: Option<Correlation>,
    /// Correlation of mean friend count with the share of ties staying close.
    pub corr_friends_share: Option<Correlation>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub rho: f64,
    pub t_stat: f64,
    pub n: usize,
}

/// Pearson correlation with observation weights; `None` when either variable
/// has no variance. The t statistic uses the number of points.
pub fn weighted_correlation(x: &[f64], y: &[f64], w: &[f64]) -> Option<Correlation> {
    assert_eq!(x.len(), y.len());
    assert_eq!(x.len(), w.len());
    let total: f64 = w.iter().sum();
    if x.len() < 2 || total <= 0.0 {
        return None;
    }
    let mx = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / total;
    let my = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / total;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for i in 0..x.len() {
        let (dx, dy) = (x[i] - mx, y[i] - my);
        sxx += w[i] * dx * dx;
        syy += w[i] * dy * dy;
        sxy += w[i] * dx * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    let rho = sxy / (sxx * syy).sqrt();
    let n = x.len();
    let denom = 1.0 - rho * rho;
    let t_stat = if denom < 1e-15 {
        f64::INFINITY * rho.signum()
    } else {
        rho * ((n as f64 - 2.0) / denom).sqrt()
    };
    Some(Correlation { rho, t_stat, n })
}

/// Per-school per-member friend counts and close-tie shares for one entry
/// class, plus school-level correlations weighted by evaluation counts.
pub fn school_scatter(
    entry_year: i32,
    dataset: &Dataset,
    closeness: &ClosenessTable,
    k: u32,
) -> SchoolScatter {
    let attrs = &dataset.attrs;

    // Same-school degree and close-friend count per node.
    let n = attrs.node_count();
    let mut degree = vec![0u32; n];
    let mut cff = vec![0u32; n];
    for e in dataset.events.iter() {
        if attrs.school[e.u.index()] != attrs.school[e.v.index()] {
            continue;
        }
        degree[e.u.index()] += 1;
        degree[e.v.index()] += 1;
        if is_cff(e.u, e.v, closeness, k) == Some(true) {
            cff[e.u.index()] += 1;
        }
        if is_cff(e.v, e.u, closeness, k) == Some(true) {
            cff[e.v.index()] += 1;
        }
    }

    let mut points = Vec::new();
    for school in &attrs.schools {
        let Some(cohort) = school
            .cohorts
            .iter()
            .map(|&c| attrs.cohort(c))
            .find(|c| c.key.entry_year == entry_year)
        else {
            continue;
        };
        if cohort.members.is_empty() {
            continue;
        }
        let mut friends = 0u64;
        let mut close = 0u64;
        let mut evals = 0u64;
        for &m in &cohort.members {
            friends += degree[m.index()] as u64;
            close += cff[m.index()] as u64;
            if closeness.contains_ego(m) {
                evals += degree[m.index()] as u64;
            }
        }
        let n_members = cohort.members.len() as u64;
        points.push(SchoolPoint {
            school: school.raw_id.clone(),
            mean_college_friends: friends as f64 / n_members as f64,
            mean_cff: close as f64 / n_members as f64,
            share_cff: (evals > 0).then(|| close as f64 / evals as f64),
            n_evaluations: evals,
            n_members,
        });
    }

    let usable: Vec<&SchoolPoint> = points
        .iter()
        .filter(|p| p.share_cff.is_some() && p.n_evaluations > 0)
        .collect();
    let (corr_friends_cff, corr_friends_share) = if usable.len() >= 2 {
        let x: Vec<f64> = usable.iter().map(|p| p.mean_college_friends).collect();
        let w: Vec<f64> = usable.iter().map(|p| p.n_evaluations as f64).collect();
        let y1: Vec<f64> = usable.iter().map(|p| p.mean_cff).collect();
        let y2: Vec<f64> = usable.iter().map(|p| p.share_cff.unwrap()).collect();
        (
            weighted_correlation(&x, &y1, &w),
            weighted_correlation(&x, &y2, &w),
        )
    } else {
        (None, None)
    };

    SchoolScatter {
        entry_year,
        points,
        corr_friends_cff,
        corr_friends_share,
    }
}
