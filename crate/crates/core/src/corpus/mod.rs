//! Project records: ingestion, exclusion filters, label merging and a
//! synthetic corpus generator.

mod filter;
mod io;
mod labels;
mod synth;

use std::collections::HashSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::{Class, Error, Result};

pub use filter::{apply_filters, ExclusionReason, ExclusionReport, FilterConfig, RemovedRule};
pub use io::{parse_projects, write_projects, ColumnMap, Field, Format};
pub use labels::{merge_labels, read_label_records, LabelRecord, LabelStore, MergeReport};
pub use synth::{generate_synthetic_corpus, CountDistributions, SynthSpec};

/// One repository's metadata as ingested.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectRecord {
    pub project_id: String,
    pub owner: String,
    pub name: String,
    /// Repository URL or `owner/name` path.
    pub url: String,
    pub description: Option<String>,
    pub language: Option<String>,
    pub star_count: u64,
    pub watcher_count: u64,
    pub committer_count: u64,
    pub community_count: u64,
    pub is_fork: bool,
    pub created_at: Option<DateTime<Utc>>,
    /// Ground truth; `True` means public development project.
    pub label: Option<Class>,
}

impl ProjectRecord {
    /// A record with the given id and every other field empty or zero.
    pub fn bare(project_id: impl Into<String>) -> Self {
        let project_id = project_id.into();
        ProjectRecord {
            url: project_id.clone(),
            project_id,
            owner: String::new(),
            name: String::new(),
            description: None,
            language: None,
            star_count: 0,
            watcher_count: 0,
            committer_count: 0,
            community_count: 0,
            is_fork: false,
            created_at: None,
            label: None,
        }
    }
}

/// An ordered, id-unique collection of records.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LabeledDataset {
    records: Vec<ProjectRecord>,
    pub provenance: String,
}

impl LabeledDataset {
    pub fn new(records: Vec<ProjectRecord>, provenance: impl Into<String>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if r.project_id.is_empty() {
                return Err(Error::input("empty project_id"));
            }
            if !seen.insert(r.project_id.as_str()) {
                return Err(Error::DuplicateId(r.project_id.clone()));
            }
        }
        Ok(LabeledDataset {
            records,
            provenance: provenance.into(),
        })
    }

    pub fn records(&self) -> &[ProjectRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<ProjectRecord> {
        self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, project_id: &str) -> Option<&ProjectRecord> {
        self.records.iter().find(|r| r.project_id == project_id)
    }

    pub fn labels(&self) -> Vec<Option<Class>> {
        self.records.iter().map(|r| r.label).collect()
    }

    /// Labels for every record, or an error naming the first unlabeled one.
    pub fn require_labels(&self) -> Result<Vec<Class>> {
        self.records
            .iter()
            .map(|r| {
                r.label
                    .ok_or_else(|| Error::MissingLabel(r.project_id.clone()))
            })
            .collect()
    }

    pub(crate) fn records_mut(&mut self) -> &mut [ProjectRecord] {
        &mut self.records
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicate_and_empty_ids() {
        let a = ProjectRecord::bare("1");
        let err = LabeledDataset::new(vec![a.clone(), a.clone()], "t").unwrap_err();
        assert!(matches!(err, Error::DuplicateId(id) if id == "1"));
        assert!(LabeledDataset::new(vec![ProjectRecord::bare("")], "t").is_err());
    }

    #[test]
    fn require_labels_names_missing_record() {
        let mut a = ProjectRecord::bare("a");
        a.label = Some(Class::True);
        let ds = LabeledDataset::new(vec![a, ProjectRecord::bare("b")], "t").unwrap();
        assert!(matches!(ds.require_labels(), Err(Error::MissingLabel(id)) if id == "b"));
    }
}
