//! Small in-memory dataset builder for tests.

use chrono::NaiveDate;

use crate::dataset::Dataset;
use crate::graph::{
    day_from_date, AttributeTable, CohortKey, CohortRecord, Day, EdgeEvent, NodeId,
    SchoolCovariates, SchoolIdx, SchoolRecord, TemporalEdgeList,
};

pub fn parse_day(s: &str) -> Day {
    day_from_date(NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap())
}

pub fn default_covariates() -> SchoolCovariates {
    SchoolCovariates {
        is_private: false,
        is_hbcu: false,
        is_womens: false,
        is_hispanic_serving: false,
        is_religious: false,
        is_commuter: false,
        greek_rate: 0.1,
        class_size: 100,
        grad_rate: 0.6,
    }
}

#[derive(Default)]
pub struct DatasetBuilder {
    attrs: AttributeTable,
    events: Vec<EdgeEvent>,
}

impl DatasetBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn school(&mut self, raw_id: &str) -> SchoolIdx {
        self.school_with(raw_id, default_covariates())
    }

    pub fn school_with(&mut self, raw_id: &str, covariates: SchoolCovariates) -> SchoolIdx {
        let idx = SchoolIdx(self.attrs.schools.len() as u16);
        self.attrs.schools.push(SchoolRecord {
            raw_id: raw_id.to_owned(),
            covariates,
            cohorts: Vec::new(),
            members: Vec::new(),
        });
        idx
    }

    /// Adds `n` members with undeclared gender/major/hometown; returns their
    /// node id range.
    pub fn cohort(&mut self, school: &str, year: i32, start: &str, n: u32) -> std::ops::Range<u32> {
        let first = self.attrs.node_count() as u32;
        let school_idx = self
            .attrs
            .school_index(school)
            .expect("school must be added first");
        let start_day = parse_day(start);
        let cohort_idx = self.attrs.cohorts.len() as u32;
        self.attrs.cohorts.push(CohortRecord {
            key: CohortKey {
                school: school_idx,
                entry_year: year,
            },
            start_day,
            members: Vec::new(),
        });
        self.attrs.schools[school_idx.index()]
            .cohorts
            .push(cohort_idx);
        for _ in 0..n {
            let node = NodeId(self.attrs.node_count() as u32);
            self.attrs.school.push(school_idx);
            self.attrs.entry_year.push(year);
            self.attrs.gender.push(0);
            self.attrs.major.push(0);
            self.attrs.hometown.push(0);
            self.attrs.start_day.push(start_day);
            self.attrs.cohort_of.push(cohort_idx);
            self.attrs.cohorts[cohort_idx as usize].members.push(node);
            self.attrs.schools[school_idx.index()].members.push(node);
        }
        first..self.attrs.node_count() as u32
    }

    pub fn set_gender(&mut self, node: u32, gender: &str) {
        let g = self.attrs.gender_dict.intern(gender);
        self.attrs.gender[node as usize] = g;
    }

    pub fn set_major(&mut self, node: u32, major: &str) {
        let m = self.attrs.major_dict.intern(major);
        self.attrs.major[node as usize] = m;
    }

    pub fn set_hometown(&mut self, node: u32, hometown: &str) {
        let h = self.attrs.hometown_dict.intern(hometown);
        self.attrs.hometown[node as usize] = h;
    }

    pub fn edge(&mut self, u: u32, v: u32, date: &str) {
        self.edge_day(u, v, parse_day(date));
    }

    pub fn edge_day(&mut self, u: u32, v: u32, t: Day) {
        let e = EdgeEvent::new(NodeId(u), NodeId(v), t).expect("self-loop in test fixture");
        self.events.push(e);
    }

    pub fn build(mut self) -> Dataset {
        for s in &mut self.attrs.schools {
            s.members.sort_unstable();
        }
        for c in &mut self.attrs.cohorts {
            c.members.sort_unstable();
        }
        let mut id_map = crate::graph::IdMap::new();
        for i in 0..self.attrs.node_count() {
            id_map.intern(&i.to_string());
        }
        Dataset {
            events: TemporalEdgeList::from_events(self.events),
            attrs: self.attrs,
            id_map,
            closeness: None,
        }
    }
}
