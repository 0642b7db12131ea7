use serde::{Deserialize, Serialize};

use super::grid::Day;
use super::ids::{CategoryDict, CohortKey, NodeId, SchoolIdx, UNKNOWN_CATEGORY};

/// Demographic dimensions homophily is measured over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Gender,
    EntryYear,
    Major,
    Hometown,
}

pub const ALL_DIMENSIONS: [Dimension; 4] = [
    Dimension::Gender,
    Dimension::EntryYear,
    Dimension::Major,
    Dimension::Hometown,
];

impl Dimension {
    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::Gender => "gender",
            Dimension::EntryYear => "entry_year",
            Dimension::Major => "major",
            Dimension::Hometown => "hometown",
        }
    }
}

/// Institution-level covariates, one record per school.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchoolCovariates {
    pub is_private: bool,
    pub is_hbcu: bool,
    pub is_womens: bool,
    pub is_hispanic_serving: bool,
    pub is_religious: bool,
    pub is_commuter: bool,
    pub greek_rate: f64,
    pub class_size: u32,
    pub grad_rate: f64,
}

impl SchoolCovariates {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.greek_rate) {
            return Err(format!("greek_rate {} outside [0,1]", self.greek_rate));
        }
        if !(0.0..=1.0).contains(&self.grad_rate) {
            return Err(format!("grad_rate {} outside [0,1]", self.grad_rate));
        }
        if self.class_size == 0 {
            return Err("class_size must be positive".to_owned());
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SchoolRecord {
    pub raw_id: String,
    pub covariates: SchoolCovariates,
    /// Cohort table indices for this school, ascending by entry year.
    pub cohorts: Vec<u32>,
    /// All member nodes across cohorts, ascending.
    pub members: Vec<NodeId>,
}

#[derive(Debug, Clone)]
pub struct CohortRecord {
    pub key: CohortKey,
    pub start_day: Day,
    /// Member nodes, ascending.
    pub members: Vec<NodeId>,
}

/// Per-node attribute columns plus cohort/school membership tables.
#[derive(Debug, Clone, Default)]
pub struct AttributeTable {
    pub school: Vec<SchoolIdx>,
    pub entry_year: Vec<i32>,
    pub gender: Vec<u32>,
    pub major: Vec<u32>,
    pub hometown: Vec<u32>,
    pub start_day: Vec<Day>,
    /// Index into `cohorts` per node.
    pub cohort_of: Vec<u32>,

    pub cohorts: Vec<CohortRecord>,
    pub schools: Vec<SchoolRecord>,

    pub gender_dict: CategoryDict,
    pub major_dict: CategoryDict,
    pub hometown_dict: CategoryDict,
}

impl AttributeTable {
    pub fn node_count(&self) -> usize {
        self.school.len()
    }

    /// Categorical feature value of a node on a dimension. Entry years are
    /// their own category space and are always known.
    #[inline]
    pub fn feature(&self, node: NodeId, dim: Dimension) -> u32 {
        let i = node.index();
        match dim {
            Dimension::Gender => self.gender[i],
            Dimension::EntryYear => self.entry_year[i] as u32,
            Dimension::Major => self.major[i],
            Dimension::Hometown => self.hometown[i],
        }
    }

    /// Whether the node declared a value on the dimension.
    #[inline]
    pub fn has_feature(&self, node: NodeId, dim: Dimension) -> bool {
        match dim {
            Dimension::EntryYear => true,
            _ => self.feature(node, dim) != UNKNOWN_CATEGORY,
        }
    }

    pub fn cohort_index(&self, key: CohortKey) -> Option<u32> {
        self.cohorts
            .iter()
            .position(|c| c.key == key)
            .map(|i| i as u32)
    }

    pub fn cohort(&self, idx: u32) -> &CohortRecord {
        &self.cohorts[idx as usize]
    }

    pub fn school_index(&self, raw: &str) -> Option<SchoolIdx> {
        self.schools
            .iter()
            .position(|s| s.raw_id == raw)
            .map(|i| SchoolIdx(i as u16))
    }

    /// "school:entry_year" label used in output files.
    pub fn cohort_label(&self, idx: u32) -> String {
        let c = self.cohort(idx);
        format!(
            "{}:{}",
            self.schools[c.key.school.index()].raw_id,
            c.key.entry_year
        )
    }
}
