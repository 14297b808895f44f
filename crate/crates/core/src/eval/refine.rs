use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::LabeledDataset;
use crate::features::{normalize_text, FeatureSchema, FeatureVector};
use crate::par::Execution;
use crate::tree::DecisionTree;
use crate::{Class, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefineConfig {
    pub misclassification_threshold: f64,
    pub top_ngrams: usize,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            misclassification_threshold: 0.15,
            top_ngrams: 30,
        }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        let t = self.misclassification_threshold;
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::param(format!(
                "misclassification threshold {t} outside (0, 1)"
            )));
        }
        if self.top_ngrams == 0 {
            return Err(Error::param("top_ngrams must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Misclassified {
    pub project_id: String,
    pub description: Option<String>,
    pub predicted: Class,
    pub truth: Class,
    pub leaf_id: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NgramCount {
    pub ngram: String,
    /// Number of misclassified descriptions containing the n-gram.
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MisclassificationReport {
    pub n_total: usize,
    pub n_misclassified: usize,
    pub rate: f64,
    pub threshold: f64,
    pub threshold_exceeded: bool,
    pub items: Vec<Misclassified>,
    pub candidates: Vec<NgramCount>,
}

const STOPWORDS: &[&str] = &[
    "a", "about", "all", "an", "and", "are", "as", "at", "be", "by", "can", "for", "from", "has",
    "have", "i", "in", "is", "it", "its", "me", "of", "on", "or", "so", "that", "the", "this",
    "to", "use", "using", "was", "we", "which", "will", "with", "you", "your",
];

fn tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Distinct unigrams and bigrams of one description. Stopword unigrams are
/// dropped, as are bigrams made only of stopwords.
fn ngrams(text: &str) -> HashSet<String> {
    let toks = tokens(text);
    let stop = |t: &str| STOPWORDS.contains(&t) || t.len() < 2;
    let mut out = HashSet::new();
    for t in &toks {
        if !stop(t) {
            out.insert(t.clone());
        }
    }
    for w in toks.windows(2) {
        if !(stop(&w[0]) && stop(&w[1])) {
            out.insert(format!("{} {}", w[0], w[1]));
        }
    }
    out
}

/// Lists every misclassified record and suggests description n-grams that
/// are not yet lexicon patterns, ranked by how many misclassified
/// descriptions contain them (ties alphabetical).
pub fn misclassification_report(
    tree: &DecisionTree,
    matrix: &[FeatureVector],
    labels: &[Option<Class>],
    ds: &LabeledDataset,
    schema: &FeatureSchema,
    cfg: &RefineConfig,
) -> Result<MisclassificationReport> {
    cfg.validate()?;
    if matrix.len() != ds.len() || labels.len() != ds.len() {
        return Err(Error::input("matrix, labels and dataset differ in length"));
    }
    let predictions = tree.classify_all(matrix, Execution::default())?;
    let mut items = Vec::new();
    for ((rec, pred), label) in ds.records().iter().zip(&predictions).zip(labels) {
        let truth = label.ok_or_else(|| Error::MissingLabel(rec.project_id.clone()))?;
        if pred.class != truth {
            items.push(Misclassified {
                project_id: rec.project_id.clone(),
                description: rec.description.clone(),
                predicted: pred.class,
                truth,
                leaf_id: pred.leaf_id,
            });
        }
    }

    let known: HashSet<String> = schema
        .description_keywords()
        .iter()
        .chain(schema.url_keywords())
        .map(|k| normalize_text(&k.pattern))
        .collect();
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for item in &items {
        if let Some(d) = &item.description {
            for g in ngrams(d) {
                if !known.contains(&g) {
                    *counts.entry(g).or_default() += 1;
                }
            }
        }
    }
    let mut candidates: Vec<NgramCount> = counts
        .into_iter()
        .map(|(ngram, count)| NgramCount { ngram, count })
        .collect();
    candidates.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.ngram.cmp(&b.ngram)));
    candidates.truncate(cfg.top_ngrams);

    let n_total = ds.len();
    let rate = if n_total == 0 {
        0.0
    } else {
        items.len() as f64 / n_total as f64
    };
    Ok(MisclassificationReport {
        n_total,
        n_misclassified: items.len(),
        rate,
        threshold: cfg.misclassification_threshold,
        threshold_exceeded: rate > cfg.misclassification_threshold,
        items,
        candidates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ProjectRecord;
    use crate::features::featurize_dataset;
    use crate::tree::{TrainParams, TreeNode};

    fn fixture(
        n: usize,
        wrong: usize,
    ) -> (
        DecisionTree,
        Vec<FeatureVector>,
        Vec<Option<Class>>,
        LabeledDataset,
    ) {
        let schema = FeatureSchema::default_schema();
        let recs = (0..n)
            .map(|i| {
                let mut r = ProjectRecord::bare(format!("p{i:03}"));
                if i < wrong {
                    r.description = Some(format!("Homework assignment number {i}"));
                    r.label = Some(Class::False);
                } else {
                    r.description = Some("a web server".into());
                    r.label = Some(Class::True);
                }
                r
            })
            .collect();
        let ds = LabeledDataset::new(recs, "t").unwrap();
        let (matrix, labels) = featurize_dataset(&ds, &schema, Execution::Sequential);
        let tree = DecisionTree::with_numbered_leaves(
            TreeNode::leaf(Class::True),
            schema.fingerprint(),
            TrainParams::default(),
        )
        .unwrap();
        (tree, matrix, labels, ds)
    }

    #[test]
    fn perfect_classifier_reports_nothing() {
        let (t, m, l, ds) = fixture(10, 0);
        let r = misclassification_report(
            &t,
            &m,
            &l,
            &ds,
            &FeatureSchema::default_schema(),
            &RefineConfig::default(),
        )
        .unwrap();
        assert!(r.items.is_empty());
        assert!(!r.threshold_exceeded);
        assert!(r.candidates.is_empty());
    }

    #[test]
    fn threshold_and_candidates() {
        let (t, m, l, ds) = fixture(100, 20);
        let r = misclassification_report(
            &t,
            &m,
            &l,
            &ds,
            &FeatureSchema::default_schema(),
            &RefineConfig::default(),
        )
        .unwrap();
        assert_eq!(r.n_misclassified, 20);
        assert!(r.threshold_exceeded);
        assert_eq!(r.items[0].leaf_id, 0);
        let top: Vec<&str> = r
            .candidates
            .iter()
            .take(4)
            .map(|c| c.ngram.as_str())
            .collect();
        // every wrong description shares these, alphabetical among equals
        assert_eq!(
            top,
            [
                "assignment",
                "assignment number",
                "homework",
                "homework assignment"
            ]
        );
        assert_eq!(r.candidates[0].count, 20);
    }

    #[test]
    fn lexicon_patterns_are_not_candidates() {
        let g = ngrams("A simple tutorial for the demo");
        assert!(g.contains("tutorial"));
        assert!(!g.contains("the"));
        let (t, m, l, mut ds) = fixture(5, 5);
        for r in ds.records_mut() {
            r.description = Some("simple tutorial".into());
        }
        let r = misclassification_report(
            &t,
            &m,
            &l,
            &ds,
            &FeatureSchema::default_schema(),
            &RefineConfig::default(),
        )
        .unwrap();
        let names: Vec<&str> = r.candidates.iter().map(|c| c.ngram.as_str()).collect();
        assert_eq!(names, ["simple tutorial"]);
    }

    #[test]
    fn config_validation() {
        let bad = RefineConfig {
            misclassification_threshold: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
