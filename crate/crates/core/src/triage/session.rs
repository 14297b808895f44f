use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{partition, AutoItem, FlagSet, QueueItem, DEFAULT_CRITERIA};
use crate::corpus::{LabelRecord, LabelStore, LabeledDataset};
use crate::eval::{precision_recall, ConfusionMatrix, EvalReport};
use crate::features::FeatureVector;
use crate::tree::{load_tree, save_tree, DecisionTree};
use crate::{Class, Decision, Error, Result};

const SESSION_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ItemStatus {
    Pending,
    Decided,
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionEntry {
    pub decision: Decision,
    pub timestamp: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub total: usize,
    pub pending: usize,
    pub decided: usize,
    pub undecided: usize,
    pub effort: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinedMetrics {
    pub report: EvalReport,
    pub effort: f64,
    pub pending: usize,
    pub undecided: usize,
    /// Records left out because no truth label was available.
    pub unlabeled: usize,
}

#[derive(Serialize, Deserialize)]
struct SessionFile {
    format_version: u32,
    session_id: String,
    tree: serde_json::Value,
    flag_set: FlagSet,
    criteria_text: String,
    auto: Vec<AutoItem>,
    queue: Vec<QueueItem>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    truth: Option<BTreeMap<String, Class>>,
}

/// Review queue plus the decisions replayed from its label store.
#[derive(Debug)]
pub struct TriageSession {
    session_id: String,
    tree: DecisionTree,
    flag_set: FlagSet,
    criteria_text: String,
    auto: Vec<AutoItem>,
    queue: Vec<QueueItem>,
    index: HashMap<String, usize>,
    truth: Option<BTreeMap<String, Class>>,
    decisions: BTreeMap<String, DecisionEntry>,
    store: Option<LabelStore>,
}

impl TriageSession {
    /// Builds a session by partitioning `ds`. Labels present in `ds` are kept
    /// as truth for [`TriageSession::metrics`].
    pub fn prepare(
        session_id: impl Into<String>,
        tree: DecisionTree,
        flag_set: FlagSet,
        ds: &LabeledDataset,
        matrix: &[FeatureVector],
    ) -> Result<TriageSession> {
        let (auto, queue) = partition(&tree, &flag_set, ds, matrix)?;
        let truth: BTreeMap<String, Class> = ds
            .records()
            .iter()
            .filter_map(|r| r.label.map(|l| (r.project_id.clone(), l)))
            .collect();
        Self::assemble(
            session_id.into(),
            tree,
            flag_set,
            DEFAULT_CRITERIA.to_owned(),
            auto,
            queue,
            (!truth.is_empty()).then_some(truth),
        )
    }

    fn assemble(
        session_id: String,
        tree: DecisionTree,
        flag_set: FlagSet,
        criteria_text: String,
        auto: Vec<AutoItem>,
        queue: Vec<QueueItem>,
        truth: Option<BTreeMap<String, Class>>,
    ) -> Result<TriageSession> {
        let mut index = HashMap::with_capacity(queue.len());
        for (i, item) in queue.iter().enumerate() {
            if index.insert(item.record.project_id.clone(), i).is_some() {
                return Err(Error::Session(format!(
                    "project {} queued twice",
                    item.record.project_id
                )));
            }
        }
        if let Some(a) = auto.iter().find(|a| index.contains_key(&a.project_id)) {
            return Err(Error::Session(format!(
                "project {} is both queued and auto",
                a.project_id
            )));
        }
        Ok(TriageSession {
            session_id,
            tree,
            flag_set,
            criteria_text,
            auto,
            queue,
            index,
            truth,
            decisions: BTreeMap::new(),
            store: None,
        })
    }

    pub fn with_criteria(mut self, text: impl Into<String>) -> Self {
        self.criteria_text = text.into();
        self
    }

    pub fn to_json(&self) -> Vec<u8> {
        let tree = serde_json::from_slice(&save_tree(&self.tree)).expect("tree serializes to JSON");
        let file = SessionFile {
            format_version: SESSION_FORMAT_VERSION,
            session_id: self.session_id.clone(),
            tree,
            flag_set: self.flag_set.clone(),
            criteria_text: self.criteria_text.clone(),
            auto: self.auto.clone(),
            queue: self.queue.clone(),
            truth: self.truth.clone(),
        };
        let mut out = serde_json::to_vec_pretty(&file).expect("session serializes");
        out.push(b'\n');
        out
    }

    /// Loads a session file. Decisions come from the label store, see
    /// [`TriageSession::attach_store`].
    pub fn from_json(bytes: &[u8]) -> Result<TriageSession> {
        let file: SessionFile = serde_json::from_slice(bytes)
            .map_err(|e| Error::Session(format!("bad session file: {e}")))?;
        if file.format_version != SESSION_FORMAT_VERSION {
            return Err(Error::Session(format!(
                "unsupported session format version {}",
                file.format_version
            )));
        }
        let tree_bytes = serde_json::to_vec(&file.tree).map_err(std::io::Error::from)?;
        let tree = load_tree(&tree_bytes)?;
        Self::assemble(
            file.session_id,
            tree,
            file.flag_set,
            file.criteria_text,
            file.auto,
            file.queue,
            file.truth,
        )
    }

    /// Opens the label store at `path` and replays it, last write winning.
    /// Records for ids outside the queue are skipped with a warning.
    pub fn attach_store(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let (store, existing) = LabelStore::open(path)?;
        self.decisions.clear();
        for rec in existing {
            if !self.index.contains_key(&rec.project_id) {
                log::warn!(
                    "label store: {} is not queued in this session",
                    rec.project_id
                );
                continue;
            }
            self.decisions.insert(
                rec.project_id,
                DecisionEntry {
                    decision: rec.decision,
                    timestamp: rec.timestamp,
                    note: rec.note,
                },
            );
        }
        self.store = Some(store);
        Ok(())
    }

    /// Stores a decision for a queued project. The label store is synced
    /// before this returns.
    pub fn record_decision(
        &mut self,
        project_id: &str,
        decision: Decision,
        note: Option<String>,
    ) -> Result<&DecisionEntry> {
        if !self.index.contains_key(project_id) {
            return Err(Error::NotQueued(project_id.to_owned()));
        }
        let store = self
            .store
            .as_mut()
            .ok_or_else(|| Error::Session("no label store attached".into()))?;
        let timestamp = store.next_timestamp();
        let record = LabelRecord {
            project_id: project_id.to_owned(),
            decision,
            source: format!("triage:{}", self.session_id),
            timestamp,
            note: note.clone(),
        };
        store.append(&record)?;
        let entry = DecisionEntry {
            decision,
            timestamp,
            note,
        };
        self.decisions.insert(project_id.to_owned(), entry);
        Ok(&self.decisions[project_id])
    }

    pub fn sync(&mut self) -> Result<()> {
        match self.store.as_mut() {
            Some(s) => s.sync(),
            None => Ok(()),
        }
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn tree(&self) -> &DecisionTree {
        &self.tree
    }

    pub fn flag_set(&self) -> &FlagSet {
        &self.flag_set
    }

    pub fn criteria_text(&self) -> &str {
        &self.criteria_text
    }

    pub fn queue(&self) -> &[QueueItem] {
        &self.queue
    }

    pub fn auto(&self) -> &[AutoItem] {
        &self.auto
    }

    pub fn decisions(&self) -> &BTreeMap<String, DecisionEntry> {
        &self.decisions
    }

    pub fn has_truth(&self) -> bool {
        self.truth.is_some()
    }

    pub fn item(&self, project_id: &str) -> Option<&QueueItem> {
        self.index.get(project_id).map(|&i| &self.queue[i])
    }

    pub fn status(&self, project_id: &str) -> Option<ItemStatus> {
        self.index.get(project_id)?;
        Some(match self.decisions.get(project_id).map(|d| d.decision) {
            None => ItemStatus::Pending,
            Some(Decision::Undecided) => ItemStatus::Undecided,
            Some(_) => ItemStatus::Decided,
        })
    }

    /// First pending item in queue order.
    pub fn next_pending(&self) -> Option<&QueueItem> {
        self.queue
            .iter()
            .find(|q| !self.decisions.contains_key(&q.record.project_id))
    }

    pub fn effort(&self) -> f64 {
        let n = self.queue.len() + self.auto.len();
        if n == 0 {
            0.0
        } else {
            self.queue.len() as f64 / n as f64
        }
    }

    pub fn summary(&self) -> SessionSummary {
        let (mut decided, mut undecided) = (0, 0);
        for q in &self.queue {
            match self.decisions.get(&q.record.project_id).map(|d| d.decision) {
                Some(Decision::Undecided) => undecided += 1,
                Some(_) => decided += 1,
                None => {}
            }
        }
        SessionSummary {
            session_id: self.session_id.clone(),
            total: self.queue.len(),
            pending: self.queue.len() - decided - undecided,
            decided,
            undecided,
            effort: self.effort(),
        }
    }

    /// Combined metrics against the truth labels captured at prepare time.
    pub fn metrics(&self) -> Option<CombinedMetrics> {
        self.truth.as_ref().map(|t| self.combined_metrics(t))
    }

    /// Tree class for auto items, the human decision for decided queue items.
    /// Pending and undecided items are left out and counted.
    pub fn combined_metrics(&self, truth: &BTreeMap<String, Class>) -> CombinedMetrics {
        let mut m = ConfusionMatrix::default();
        let mut unlabeled = 0;
        let mut score = |id: &str, predicted: Class| match truth.get(id) {
            Some(&t) => m.record(predicted, t),
            None => unlabeled += 1,
        };
        for a in &self.auto {
            score(&a.project_id, a.class);
        }
        let (mut pending, mut undecided) = (0, 0);
        for q in &self.queue {
            let id = q.record.project_id.as_str();
            match self.decisions.get(id).map(|d| d.decision) {
                None => pending += 1,
                Some(Decision::Undecided) => undecided += 1,
                Some(d) => score(id, d.class().expect("decided")),
            }
        }
        CombinedMetrics {
            report: precision_recall(&m, "triage combined"),
            effort: self.effort(),
            pending,
            undecided,
            unlabeled,
        }
    }

    /// Latest decision per queued project, in queue order.
    pub fn export_records(&self) -> Vec<LabelRecord> {
        self.queue
            .iter()
            .filter_map(|q| {
                let id = &q.record.project_id;
                self.decisions.get(id).map(|d| LabelRecord {
                    project_id: id.clone(),
                    decision: d.decision,
                    source: format!("triage:{}", self.session_id),
                    timestamp: d.timestamp,
                    note: d.note.clone(),
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ProjectRecord;
    use crate::features::{featurize_dataset, FeatureSchema};
    use crate::par::Execution;
    use crate::tree::{TrainParams, TreeNode};
    use crate::triage::{flag_leaves_explicit, leaf_statistics};

    fn session(dir: &Path) -> TriageSession {
        let schema = FeatureSchema::default_schema();
        let recs = (0..6)
            .map(|i| {
                let mut r = ProjectRecord::bare(format!("p{i}"));
                r.description = Some(if i % 2 == 0 { "a demo" } else { "a library" }.into());
                r.label = Some(Class::from(i % 3 != 0));
                r
            })
            .collect();
        let ds = LabeledDataset::new(recs, "t").unwrap();
        let (m, l) = featurize_dataset(&ds, &schema, Execution::Sequential);
        let tree = DecisionTree::with_numbered_leaves(
            TreeNode::boolean(
                "demo",
                TreeNode::leaf(Class::True),
                TreeNode::leaf(Class::False),
            ),
            schema.fingerprint(),
            TrainParams::default(),
        )
        .unwrap();
        let stats = leaf_statistics(&tree, &m, &l).unwrap();
        let flags = flag_leaves_explicit(&stats, &[1], ds.len()).unwrap();
        let mut s = TriageSession::prepare("s1", tree, flags, &ds, &m).unwrap();
        s.attach_store(dir.join("labels.ndjson")).unwrap();
        s
    }

    #[test]
    fn queue_holds_flagged_leaf_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let s = session(dir.path());
        let ids: Vec<&str> = s
            .queue()
            .iter()
            .map(|q| q.record.project_id.as_str())
            .collect();
        assert_eq!(ids, ["p0", "p2", "p4"]);
        assert_eq!(s.effort(), 0.5);
        assert_eq!(s.next_pending().unwrap().record.project_id, "p0");
    }

    #[test]
    fn last_write_wins_and_unqueued_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = session(dir.path());
        s.record_decision("p2", Decision::True, None).unwrap();
        s.record_decision("p2", Decision::False, Some("looks personal".into()))
            .unwrap();
        assert_eq!(s.decisions()["p2"].decision, Decision::False);
        assert!(matches!(
            s.record_decision("p1", Decision::True, None),
            Err(Error::NotQueued(_))
        ));
        s.record_decision("p0", Decision::Undecided, None).unwrap();
        assert_eq!(s.status("p0"), Some(ItemStatus::Undecided));
        assert_eq!(s.status("p4"), Some(ItemStatus::Pending));
        let sum = s.summary();
        assert_eq!((sum.pending, sum.decided, sum.undecided), (1, 1, 1));
        let m = s.metrics().unwrap();
        assert_eq!((m.pending, m.undecided), (1, 1));
        assert_eq!(m.report.matrix.total(), 4);
    }

    #[test]
    fn reload_reconstructs_state() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = session(dir.path());
        s.record_decision("p0", Decision::False, None).unwrap();
        s.record_decision("p4", Decision::True, Some("x".into()))
            .unwrap();
        s.record_decision("p0", Decision::True, None).unwrap();
        let bytes = s.to_json();
        drop(s);
        let mut r = TriageSession::from_json(&bytes).unwrap();
        r.attach_store(dir.path().join("labels.ndjson")).unwrap();
        let fresh = session(dir.path());
        assert_eq!(r.decisions(), fresh.decisions());
        assert_eq!(r.decisions()["p0"].decision, Decision::True);
        assert_eq!(r.summary(), fresh.summary());
        assert_eq!(r.export_records().len(), 2);
    }

    #[test]
    fn perfect_decisions_do_not_lower_metrics() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = session(dir.path());
        let truth = s.truth.clone().unwrap();
        let before = s.combined_metrics(&truth);
        let before_queue = s.queue().to_vec();
        for q in before_queue {
            let t = truth[&q.record.project_id];
            s.record_decision(&q.record.project_id, t.into(), None)
                .unwrap();
        }
        let m = s.metrics().unwrap();
        assert_eq!(m.pending, 0);
        // the auto leaf keeps its own false positive
        assert_eq!(m.report.matrix.fp, 1);
        assert!(m.report.precision >= before.report.precision);
        assert!(m.report.recall >= before.report.recall);
    }
}
