use std::sync::Arc;

use super::{FeatureSchema, FeatureVector, KeywordFeature, MatchMode};
use crate::corpus::{LabeledDataset, ProjectRecord};
use crate::par::{self, Execution};
use crate::Class;

/// Lowercases and collapses whitespace runs to single spaces.
pub fn normalize_text(s: &str) -> String {
    s.to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

fn matches(haystack: &str, needle: &str, mode: MatchMode) -> bool {
    match mode {
        MatchMode::Substring => haystack.contains(needle),
        MatchMode::Word => haystack.match_indices(needle).any(|(i, m)| {
            let before = haystack[..i].chars().next_back();
            let after = haystack[i + m.len()..].chars().next();
            !before.is_some_and(char::is_alphanumeric) && !after.is_some_and(char::is_alphanumeric)
        }),
    }
}

impl FeatureSchema {
    /// Feature vector for one record. Total over valid records.
    pub fn extract(&self, rec: &ProjectRecord) -> FeatureVector {
        let mut values = Vec::with_capacity(self.layout.len());
        let description = rec
            .description
            .as_deref()
            .map(normalize_text)
            .filter(|d| !d.is_empty());
        let url = normalize_text(&rec.url);

        let mut keyword_group =
            |text: Option<&str>, group: &[KeywordFeature], needles: &[String]| {
                for (k, needle) in group.iter().zip(needles) {
                    let hit = text.is_some_and(|t| matches(t, needle, k.mode));
                    values.push(u64::from(hit));
                }
            };
        keyword_group(
            description.as_deref(),
            &self.description,
            &self.description_needles,
        );
        keyword_group(Some(&url), &self.url, &self.url_needles);

        values.push(u64::from(rec.language.is_some()));
        values.push(u64::from(description.is_none()));
        values.extend([
            rec.star_count,
            rec.watcher_count,
            rec.community_count,
            rec.committer_count,
        ]);

        FeatureVector {
            layout: Arc::clone(&self.layout),
            values,
        }
    }
}

/// Feature vectors and labels for every record, in dataset order.
pub fn featurize_dataset(
    ds: &LabeledDataset,
    schema: &FeatureSchema,
    exec: Execution,
) -> (Vec<FeatureVector>, Vec<Option<Class>>) {
    let matrix = par::map(exec, ds.records(), |r| schema.extract(r));
    (matrix, ds.labels())
}
