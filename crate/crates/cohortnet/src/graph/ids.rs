use std::collections::HashMap;

/// Dense node identifier, contiguous `0..N` within a loaded dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Dense school index into the school table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SchoolIdx(pub u16);

impl SchoolIdx {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A cohort is one entry-year class at one school.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CohortKey {
    pub school: SchoolIdx,
    pub entry_year: i32,
}

/// Bijection between source identifiers and dense [`NodeId`]s, assigned in
/// order of first appearance so reloading the same files reproduces it.
#[derive(Debug, Default, Clone)]
pub struct IdMap {
    to_dense: HashMap<String, NodeId>,
    to_raw: Vec<String>,
}

impl IdMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, raw: &str) -> NodeId {
        if let Some(&id) = self.to_dense.get(raw) {
            return id;
        }
        let id = NodeId(self.to_raw.len() as u32);
        self.to_dense.insert(raw.to_owned(), id);
        self.to_raw.push(raw.to_owned());
        id
    }

    pub fn get(&self, raw: &str) -> Option<NodeId> {
        self.to_dense.get(raw).copied()
    }

    pub fn raw(&self, id: NodeId) -> &str {
        &self.to_raw[id.index()]
    }

    pub fn len(&self) -> usize {
        self.to_raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.to_raw.is_empty()
    }

    /// Raw identifiers in dense-id order.
    pub fn raw_ids(&self) -> &[String] {
        &self.to_raw
    }
}

/// String table for one categorical dimension. Slot 0 is always the
/// "unknown" category.
#[derive(Debug, Clone)]
pub struct CategoryDict {
    values: Vec<String>,
    lookup: HashMap<String, u32>,
}

pub const UNKNOWN_CATEGORY: u32 = 0;

impl Default for CategoryDict {
    fn default() -> Self {
        let mut dict = CategoryDict {
            values: Vec::new(),
            lookup: HashMap::new(),
        };
        dict.values.push("unknown".to_owned());
        dict.lookup.insert("unknown".to_owned(), UNKNOWN_CATEGORY);
        dict
    }
}

impl CategoryDict {
    pub fn new() -> Self {
        Self::default()
    }

    /// Interns a value; empty strings and the literal "unknown" map to the
    /// unknown slot.
    pub fn intern(&mut self, raw: &str) -> u32 {
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            return UNKNOWN_CATEGORY;
        }
        if let Some(&v) = self.lookup.get(trimmed) {
            return v;
        }
        let v = self.values.len() as u32;
        self.lookup.insert(trimmed.to_owned(), v);
        self.values.push(trimmed.to_owned());
        v
    }

    pub fn get(&self, raw: &str) -> Option<u32> {
        self.lookup.get(raw.trim()).copied()
    }

    pub fn name(&self, v: u32) -> &str {
        &self.values[v as usize]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}
