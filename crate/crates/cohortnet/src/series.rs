use crate::graph::GridUnit;

/// One observation of a metric at a grid index. `value` is absent (never
/// zero) when nothing was measurable, in which case `n` says why: it counts
/// the units the value would have been computed over.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricPoint {
    pub idx: i32,
    pub value: Option<f64>,
    pub n: u64,
}

/// A (time index, value) sequence for one metric on one cohort.
#[derive(Debug, Clone)]
pub struct MetricSeries {
    /// Index into the dataset cohort table.
    pub cohort: u32,
    pub metric: String,
    pub unit: GridUnit,
    /// Points ascending by `idx`.
    pub points: Vec<MetricPoint>,
}

impl MetricSeries {
    pub fn new(cohort: u32, metric: impl Into<String>, unit: GridUnit) -> Self {
        MetricSeries {
            cohort,
            metric: metric.into(),
            unit,
            points: Vec::new(),
        }
    }

    pub fn push(&mut self, idx: i32, value: Option<f64>, n: u64) {
        debug_assert!(
            self.points.last().map_or(true, |p| p.idx < idx),
            "indices must be strictly increasing"
        );
        debug_assert!(value.is_some() || n == 0 || self.metric.starts_with("churn"));
        self.points.push(MetricPoint { idx, value, n });
    }

    pub fn value_at(&self, idx: i32) -> Option<f64> {
        self.points
            .iter()
            .find(|p| p.idx == idx)
            .and_then(|p| p.value)
    }

    pub fn sum(&self) -> f64 {
        self.points.iter().filter_map(|p| p.value).sum()
    }
}

/// How multi-cohort averages weight each cohort.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregation {
    /// Every cohort counts once (plain mean of cohort values).
    CohortWeighted,
    /// Cohorts weighted by their per-point sample counts.
    SampleWeighted,
}

/// Averages several cohort series point-wise. Points with fewer than `min_n`
/// samples are left out of the average; indices where no cohort qualifies
/// come back absent.
pub fn average_series(
    series: &[&MetricSeries],
    min_n: u64,
    aggregation: Aggregation,
) -> Vec<MetricPoint> {
    use std::collections::BTreeMap;
    let mut acc: BTreeMap<i32, (f64, f64, u64)> = BTreeMap::new();
    for s in series {
        for p in &s.points {
            let entry = acc.entry(p.idx).or_insert((0.0, 0.0, 0));
            if let Some(v) = p.value {
                if p.n >= min_n {
                    let w = match aggregation {
                        Aggregation::CohortWeighted => 1.0,
                        Aggregation::SampleWeighted => p.n as f64,
                    };
                    entry.0 += w * v;
                    entry.1 += w;
                    entry.2 += p.n;
                }
            }
        }
    }
    acc.into_iter()
        .map(|(idx, (sum, weight, n))| MetricPoint {
            idx,
            value: (weight > 0.0).then(|| sum / weight),
            n,
        })
        .collect()
}
