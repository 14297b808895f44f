//! Human-in-the-loop review of the records that land on error-prone leaves.

mod session;

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::{LabeledDataset, ProjectRecord};
use crate::features::FeatureVector;
use crate::par::Execution;
use crate::tree::DecisionTree;
use crate::{Class, Error, Result};

pub use session::{CombinedMetrics, DecisionEntry, ItemStatus, SessionSummary, TriageSession};

/// Reviewer guidance shown next to every queued project.
pub const DEFAULT_CRITERIA: &str = "\
TRUE when both hold:
- Public: nothing in the description or readme says the repository exists only for its owner's own use.
- Software development: the repository holds material for building software, e.g. a library, plugin, framework, extension or tool.
FALSE otherwise. Use UNDECIDED when the available text does not settle it.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeafStats {
    pub leaf_id: usize,
    pub predicted_class: Class,
    pub n_routed: u64,
    pub n_correct: u64,
    pub n_incorrect: u64,
}

/// Per-leaf routing counts, one entry per reached leaf in leaf-id order.
/// Unlabeled rows count as routed only.
pub fn leaf_statistics(
    tree: &DecisionTree,
    matrix: &[FeatureVector],
    labels: &[Option<Class>],
) -> Result<Vec<LeafStats>> {
    if matrix.len() != labels.len() {
        return Err(Error::input("matrix and labels differ in length"));
    }
    let predictions = tree.classify_all(matrix, Execution::default())?;
    let mut by_leaf: HashMap<usize, LeafStats> = HashMap::new();
    for (p, label) in predictions.iter().zip(labels) {
        let s = by_leaf.entry(p.leaf_id).or_insert(LeafStats {
            leaf_id: p.leaf_id,
            predicted_class: p.class,
            n_routed: 0,
            n_correct: 0,
            n_incorrect: 0,
        });
        s.n_routed += 1;
        match label {
            Some(t) if *t == p.class => s.n_correct += 1,
            Some(_) => s.n_incorrect += 1,
            None => {}
        }
    }
    let mut out: Vec<LeafStats> = by_leaf.into_values().collect();
    out.sort_by_key(|s| s.leaf_id);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlagSet {
    pub flagged_leaf_ids: BTreeSet<usize>,
    /// Share of all misclassifications that sit on flagged leaves.
    pub coverage: f64,
    /// Share of the dataset routed to flagged leaves.
    pub effort: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl FlagSet {
    pub fn empty() -> FlagSet {
        FlagSet {
            flagged_leaf_ids: BTreeSet::new(),
            coverage: 0.0,
            effort: 0.0,
            diagnostic: None,
        }
    }

    pub fn contains(&self, leaf_id: usize) -> bool {
        self.flagged_leaf_ids.contains(&leaf_id)
    }

    fn measure(stats: &[LeafStats], ids: BTreeSet<usize>, n_total: usize) -> FlagSet {
        let total_wrong: u64 = stats.iter().map(|s| s.n_incorrect).sum();
        let (mut wrong, mut routed) = (0u64, 0u64);
        for s in stats.iter().filter(|s| ids.contains(&s.leaf_id)) {
            wrong += s.n_incorrect;
            routed += s.n_routed;
        }
        FlagSet {
            flagged_leaf_ids: ids,
            coverage: if total_wrong == 0 {
                1.0
            } else {
                wrong as f64 / total_wrong as f64
            },
            effort: if n_total == 0 {
                0.0
            } else {
                routed as f64 / n_total as f64
            },
            diagnostic: None,
        }
    }
}

fn check_fraction(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(Error::param(format!("{name} {v} outside (0, 1]")))
    }
}

/// Greedy selection: leaves in descending `n_incorrect` order (ties by id)
/// until `coverage_target` is reached or the next leaf would push effort past
/// `effort_budget`.
pub fn select_flag_leaves(
    stats: &[LeafStats],
    coverage_target: f64,
    effort_budget: f64,
    n_total: usize,
) -> Result<FlagSet> {
    check_fraction("coverage target", coverage_target)?;
    check_fraction("effort budget", effort_budget)?;
    let routed: u64 = stats.iter().map(|s| s.n_routed).sum();
    if (routed as usize) > n_total {
        return Err(Error::input(format!(
            "{routed} routed records exceed n_total {n_total}"
        )));
    }
    let total_wrong: u64 = stats.iter().map(|s| s.n_incorrect).sum();
    let mut order: Vec<&LeafStats> = stats.iter().filter(|s| s.n_incorrect > 0).collect();
    order.sort_by(|a, b| {
        b.n_incorrect
            .cmp(&a.n_incorrect)
            .then(a.leaf_id.cmp(&b.leaf_id))
    });

    let n = n_total.max(1) as f64;
    let (mut ids, mut wrong, mut effort) = (BTreeSet::new(), 0u64, 0u64);
    for s in order {
        if total_wrong == 0 || wrong as f64 / total_wrong as f64 >= coverage_target {
            break;
        }
        if (effort + s.n_routed) as f64 / n > effort_budget + 1e-12 {
            break;
        }
        ids.insert(s.leaf_id);
        wrong += s.n_incorrect;
        effort += s.n_routed;
    }
    let mut set = FlagSet::measure(stats, ids, n_total);
    if set.flagged_leaf_ids.is_empty() && total_wrong > 0 {
        set.diagnostic = Some(format!(
            "no leaf fits an effort budget of {effort_budget}; the most error-prone leaf needs more"
        ));
    } else if set.coverage < coverage_target {
        set.diagnostic = Some(format!(
            "coverage {:.3} is below the target {coverage_target} within the effort budget",
            set.coverage
        ));
    }
    Ok(set)
}

/// Flags exactly `ids`. Every id must be a reached leaf in `stats`.
pub fn flag_leaves_explicit(stats: &[LeafStats], ids: &[usize], n_total: usize) -> Result<FlagSet> {
    for id in ids {
        if !stats.iter().any(|s| s.leaf_id == *id) {
            return Err(Error::param(format!("leaf {id} receives no records")));
        }
    }
    Ok(FlagSet::measure(
        stats,
        ids.iter().copied().collect(),
        n_total,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoItem {
    pub project_id: String,
    pub class: Class,
    pub leaf_id: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueItem {
    pub record: ProjectRecord,
    pub auto_class: Class,
    pub leaf_id: usize,
}

/// Splits the dataset into auto-classified items and the review queue, both
/// in dataset order.
pub fn partition(
    tree: &DecisionTree,
    flags: &FlagSet,
    ds: &LabeledDataset,
    matrix: &[FeatureVector],
) -> Result<(Vec<AutoItem>, Vec<QueueItem>)> {
    if matrix.len() != ds.len() {
        return Err(Error::input("matrix and dataset differ in length"));
    }
    let predictions = tree.classify_all(matrix, Execution::default())?;
    let (mut auto, mut queue) = (Vec::new(), Vec::new());
    for (rec, p) in ds.records().iter().zip(predictions) {
        if flags.contains(p.leaf_id) {
            queue.push(QueueItem {
                record: rec.clone(),
                auto_class: p.class,
                leaf_id: p.leaf_id,
            });
        } else {
            auto.push(AutoItem {
                project_id: rec.project_id.clone(),
                class: p.class,
                leaf_id: p.leaf_id,
            });
        }
    }
    Ok((auto, queue))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(leaf_id: usize, correct: u64, incorrect: u64) -> LeafStats {
        LeafStats {
            leaf_id,
            predicted_class: Class::True,
            n_routed: correct + incorrect,
            n_correct: correct,
            n_incorrect: incorrect,
        }
    }

    #[test]
    fn single_impure_leaf_is_flagged() {
        let stats = [st(0, 50, 0), st(1, 30, 10), st(2, 10, 0)];
        let f = select_flag_leaves(&stats, 0.9, 1.0, 100).unwrap();
        assert_eq!(f.flagged_leaf_ids, BTreeSet::from([1]));
        assert_eq!(f.coverage, 1.0);
        assert!((f.effort - 0.4).abs() < 1e-12);
        assert!(f.diagnostic.is_none());
    }

    #[test]
    fn tight_budget_gives_empty_set_with_diagnostic() {
        let stats = [st(0, 30, 10)];
        let f = select_flag_leaves(&stats, 0.5, 0.1, 40).unwrap();
        assert!(f.flagged_leaf_ids.is_empty());
        assert!(f.diagnostic.is_some());
        assert!(select_flag_leaves(&stats, 0.0, 0.1, 40).is_err());
    }

    #[test]
    fn reference_effort_from_explicit_leaves() {
        let stats = [
            st(3, 1467, 355),
            st(7, 538, 113),
            st(1, 2216, 354),
            st(0, 1478, 194),
        ];
        let f = flag_leaves_explicit(&stats, &[3, 7], 6715).unwrap();
        assert!((f.effort - 2473.0 / 6715.0).abs() < 1e-12);
        assert_eq!(format!("{:.3}", f.effort), "0.368");
        assert!(flag_leaves_explicit(&stats, &[99], 6715).is_err());
    }

    #[test]
    fn greedy_ties_by_leaf_id() {
        let stats = [st(5, 0, 4), st(2, 0, 4), st(9, 0, 2)];
        let f = select_flag_leaves(&stats, 0.4, 1.0, 10).unwrap();
        assert_eq!(f.flagged_leaf_ids, BTreeSet::from([2]));
    }
}
