//! Partitions of a region into districts.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::RegionModel;

/// Assignment of every unit to one of `k` districts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    k: usize,
    assignment: Vec<usize>,
}

impl Solution {
    /// `assignment[u]` is the district of unit `u`; every index must be below `k`.
    pub fn new(k: usize, assignment: Vec<usize>) -> Result<Self> {
        if let Some((u, &d)) = assignment.iter().enumerate().find(|(_, &d)| d >= k) {
            return Err(Error::validation(
                "solution",
                format!("unit {u} assigned to district {d} but k = {k}"),
            ));
        }
        Ok(Self { k, assignment })
    }

    /// Build from member lists; district `i` is `districts[i]`.
    pub fn from_districts(n: usize, districts: &[Vec<usize>]) -> Result<Self> {
        let mut assignment = vec![usize::MAX; n];
        for (d, members) in districts.iter().enumerate() {
            for &u in members {
                if u >= n {
                    return Err(Error::UnknownUnit(u));
                }
                if assignment[u] != usize::MAX {
                    return Err(Error::validation("solution", format!("unit {u} appears in two districts")));
                }
                assignment[u] = d;
            }
        }
        if let Some(u) = assignment.iter().position(|&d| d == usize::MAX) {
            return Err(Error::validation("solution", format!("unit {u} is unassigned")));
        }
        Ok(Self {
            k: districts.len(),
            assignment,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn district_of(&self, u: usize) -> usize {
        self.assignment[u]
    }

    /// Reassign `u`; the caller keeps the partition meaningful.
    pub fn set(&mut self, u: usize, d: usize) {
        debug_assert!(d < self.k);
        self.assignment[u] = d;
    }

    /// Sorted member lists indexed by district.
    pub fn districts(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (u, &d) in self.assignment.iter().enumerate() {
            out[d].push(u);
        }
        out
    }

    /// Check cover, `k` nonempty districts and connectivity (no size bounds).
    pub fn check_partition(&self, region: &RegionModel) -> Result<()> {
        if self.assignment.len() != region.len() {
            return Err(Error::validation(
                "solution",
                format!("{} units assigned but region has {}", self.assignment.len(), region.len()),
            ));
        }
        for (d, members) in self.districts().iter().enumerate() {
            if members.is_empty() {
                return Err(Error::validation("solution", format!("district {d} is empty")));
            }
            if !region.is_connected(members) {
                return Err(Error::validation("solution", format!("district {d} is not connected")));
            }
        }
        Ok(())
    }

    pub fn to_doc(&self, meta: serde_json::Value) -> SolutionFile {
        SolutionFile {
            k: self.k,
            assignment: self.assignment.iter().copied().enumerate().collect(),
            meta,
        }
    }

    pub fn from_doc(doc: &SolutionFile) -> Result<Self> {
        let n = doc.assignment.len();
        let mut assignment = vec![0; n];
        for (i, (&u, &d)) in doc.assignment.iter().enumerate() {
            if u != i {
                return Err(Error::validation("solution", format!("unit ids must be 0..{n}, missing {i}")));
            }
            assignment[u] = d;
        }
        Self::new(doc.k, assignment)
    }

    pub fn save(&self, path: impl AsRef<Path>, meta: serde_json::Value) -> Result<()> {
        let mut text = serde_json::to_string_pretty(&self.to_doc(meta))?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(Self, serde_json::Value)> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let doc: SolutionFile = serde_json::from_str(&text).map_err(|e| Error::parse(&path.display().to_string(), &e))?;
        Ok((Self::from_doc(&doc)?, doc.meta))
    }
}

/// On-disk solution: `{"k", "assignment": {unit: district}, "meta"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionFile {
    pub k: usize,
    pub assignment: BTreeMap<usize, usize>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub meta: serde_json::Value,
}
