use serde::{Deserialize, Serialize};

use super::{Field, LabeledDataset, ProjectRecord};
use crate::{Error, Result};

/// When a record counts as a deleted repository whose metadata was stripped.
///
/// Fires when every field in `require_missing` is absent and, if
/// `require_zero_counts` is set, all four counts are zero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemovedRule {
    pub require_missing: Vec<Field>,
    pub require_zero_counts: bool,
}

impl Default for RemovedRule {
    fn default() -> Self {
        RemovedRule {
            require_missing: vec![Field::Description, Field::Language],
            require_zero_counts: true,
        }
    }
}

impl RemovedRule {
    pub fn matches(&self, r: &ProjectRecord) -> bool {
        let missing = self.require_missing.iter().all(|f| match f {
            Field::Description => r.description.is_none(),
            Field::Language => r.language.is_none(),
            Field::CreatedAt => r.created_at.is_none(),
            Field::Label => r.label.is_none(),
            Field::Owner => r.owner.is_empty(),
            Field::Name => r.name.is_empty(),
            Field::Url => r.url.is_empty(),
            Field::StarCount => r.star_count == 0,
            Field::WatcherCount => r.watcher_count == 0,
            Field::CommitterCount => r.committer_count == 0,
            Field::CommunityCount => r.community_count == 0,
            Field::ProjectId | Field::IsFork => false,
        });
        let zero = !self.require_zero_counts
            || (r.star_count == 0
                && r.watcher_count == 0
                && r.committer_count == 0
                && r.community_count == 0);
        missing && zero
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub drop_forks: bool,
    pub drop_removed: bool,
    pub drop_non_english: bool,
    /// Minimum share of ASCII letters among all letters for a description to
    /// count as English.
    pub english_ascii_letter_ratio: f64,
    pub removed_rule: RemovedRule,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            drop_forks: true,
            drop_removed: true,
            drop_non_english: false,
            english_ascii_letter_ratio: 0.8,
            removed_rule: RemovedRule::default(),
        }
    }
}

impl FilterConfig {
    pub fn disabled() -> Self {
        FilterConfig {
            drop_forks: false,
            drop_removed: false,
            drop_non_english: false,
            ..FilterConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.english_ascii_letter_ratio) {
            return Err(Error::param(format!(
                "english_ascii_letter_ratio {} outside [0, 1]",
                self.english_ascii_letter_ratio
            )));
        }
        Ok(())
    }

    /// First enabled filter the record fails, in the fixed order fork, removed, non-English.
    pub fn exclusion(&self, r: &ProjectRecord) -> Option<ExclusionReason> {
        if self.drop_forks && r.is_fork {
            return Some(ExclusionReason::Fork);
        }
        if self.drop_removed && self.removed_rule.matches(r) {
            return Some(ExclusionReason::Removed);
        }
        if self.drop_non_english
            && !is_english(r.description.as_deref(), self.english_ascii_letter_ratio)
        {
            return Some(ExclusionReason::NonEnglish);
        }
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    Fork,
    Removed,
    NonEnglish,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExclusionReport {
    pub fork: usize,
    pub removed: usize,
    pub non_english: usize,
}

impl ExclusionReport {
    pub fn total(&self) -> usize {
        self.fork + self.removed + self.non_english
    }

    fn bump(&mut self, reason: ExclusionReason) {
        match reason {
            ExclusionReason::Fork => self.fork += 1,
            ExclusionReason::Removed => self.removed += 1,
            ExclusionReason::NonEnglish => self.non_english += 1,
        }
    }
}

/// Descriptions without letters (or absent) are not judged non-English.
fn is_english(description: Option<&str>, min_ratio: f64) -> bool {
    let Some(text) = description else {
        return true;
    };
    let (mut letters, mut ascii) = (0usize, 0usize);
    for c in text.chars().filter(|c| c.is_alphabetic()) {
        letters += 1;
        if c.is_ascii_alphabetic() {
            ascii += 1;
        }
    }
    letters == 0 || ascii as f64 / letters as f64 >= min_ratio
}

pub fn apply_filters(
    ds: &LabeledDataset,
    cfg: &FilterConfig,
) -> Result<(LabeledDataset, ExclusionReport)> {
    cfg.validate()?;
    let mut report = ExclusionReport::default();
    let mut kept = Vec::with_capacity(ds.len());
    for r in ds.records() {
        match cfg.exclusion(r) {
            Some(reason) => report.bump(reason),
            None => kept.push(r.clone()),
        }
    }
    let kept = LabeledDataset::new(kept, ds.provenance.clone())?;
    Ok((kept, report))
}
