//! Keyword lexicon and per-record feature extraction.
//!
//! A [`FeatureSchema`] fixes the feature layout: description keywords, URL
//! keywords, the derived flags `have_language` and `is_null`, then the four
//! counts. Every [`FeatureVector`] produced under a schema shares its
//! [`Layout`], and the layout fingerprint ties trees to the schema they were
//! fit with.

mod extract;
mod lexicon;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use extract::{featurize_dataset, normalize_text};
pub use lexicon::{canonical_feature_name, load_lexicon, DEFAULT_LEXICON};

pub const HAVE_LANGUAGE: &str = "have_language";
pub const IS_NULL: &str = "is_null";
pub const NUMERIC_FEATURES: [&str; 4] = ["star", "watcher", "community", "committer"];
pub const DERIVED_FLAGS: [&str; 2] = [HAVE_LANGUAGE, IS_NULL];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    Substring,
    Word,
}

impl MatchMode {
    /// Short patterns collide with unrelated words ("my" in "mysql"), so they
    /// default to word matching.
    pub fn default_for(pattern: &str) -> MatchMode {
        if pattern.chars().count() <= 4 || pattern == "my" {
            MatchMode::Word
        } else {
            MatchMode::Substring
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MatchMode::Substring => "substring",
            MatchMode::Word => "word",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordFeature {
    pub name: String,
    pub pattern: String,
    pub mode: MatchMode,
}

impl KeywordFeature {
    pub fn new(name: impl Into<String>, pattern: impl Into<String>, mode: MatchMode) -> Self {
        KeywordFeature {
            name: name.into(),
            pattern: pattern.into(),
            mode,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Boolean,
    Numeric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureGroup {
    Description,
    Url,
    Derived,
    Numeric,
}

/// Ordered feature names and kinds shared by a schema and its vectors.
#[derive(Debug)]
pub struct Layout {
    names: Vec<String>,
    kinds: Vec<FeatureKind>,
    groups: Vec<FeatureGroup>,
    index: HashMap<String, usize>,
    fingerprint: String,
}

impl Layout {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn kind(&self, i: usize) -> FeatureKind {
        self.kinds[i]
    }

    pub fn group(&self, i: usize) -> FeatureGroup {
        self.groups[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }
}

/// The active lexicon plus the fixed derived and numeric features.
#[derive(Debug, Clone)]
pub struct FeatureSchema {
    description: Vec<KeywordFeature>,
    url: Vec<KeywordFeature>,
    layout: Arc<Layout>,
    // patterns after normalize_text, aligned with description/url
    description_needles: Vec<String>,
    url_needles: Vec<String>,
}

impl PartialEq for FeatureSchema {
    fn eq(&self, other: &Self) -> bool {
        self.description == other.description && self.url == other.url
    }
}

impl FeatureSchema {
    pub fn new(description: Vec<KeywordFeature>, url: Vec<KeywordFeature>) -> Result<Self> {
        let mut names = Vec::new();
        let mut kinds = Vec::new();
        let mut groups = Vec::new();
        let mut index = HashMap::new();
        let mut push = |name: &str, kind, group| -> Result<()> {
            if name.trim().is_empty() {
                return Err(Error::Lexicon("empty feature name".into()));
            }
            if index.insert(name.to_string(), names.len()).is_some() {
                return Err(Error::Lexicon(format!("duplicate feature name `{name}`")));
            }
            names.push(name.to_string());
            kinds.push(kind);
            groups.push(group);
            Ok(())
        };
        for k in &description {
            push(&k.name, FeatureKind::Boolean, FeatureGroup::Description)?;
        }
        for k in &url {
            push(&k.name, FeatureKind::Boolean, FeatureGroup::Url)?;
        }
        for d in DERIVED_FLAGS {
            push(d, FeatureKind::Boolean, FeatureGroup::Derived)?;
        }
        for n in NUMERIC_FEATURES {
            push(n, FeatureKind::Numeric, FeatureGroup::Numeric)?;
        }

        let needles = |group: &[KeywordFeature]| -> Result<Vec<String>> {
            group
                .iter()
                .map(|k| {
                    let n = normalize_text(&k.pattern);
                    if n.is_empty() {
                        Err(Error::Lexicon(format!("empty pattern for `{}`", k.name)))
                    } else {
                        Ok(n)
                    }
                })
                .collect()
        };
        let description_needles = needles(&description)?;
        let url_needles = needles(&url)?;
        let fingerprint = fingerprint(&description, &url);

        Ok(FeatureSchema {
            layout: Arc::new(Layout {
                names,
                kinds,
                groups,
                index,
                fingerprint,
            }),
            description,
            url,
            description_needles,
            url_needles,
        })
    }

    /// The built-in lexicon.
    pub fn default_schema() -> FeatureSchema {
        static DEFAULT: std::sync::OnceLock<FeatureSchema> = std::sync::OnceLock::new();
        DEFAULT
            .get_or_init(|| load_lexicon(None).expect("built-in lexicon parses"))
            .clone()
    }

    pub fn description_keywords(&self) -> &[KeywordFeature] {
        &self.description
    }

    pub fn url_keywords(&self) -> &[KeywordFeature] {
        &self.url
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn fingerprint(&self) -> &str {
        self.layout.fingerprint()
    }

    pub fn feature_names(&self) -> &[String] {
        self.layout.names()
    }

    /// Builds a vector from raw values in layout order. Boolean slots must be 0 or 1.
    pub fn vector_from_values(&self, values: Vec<u64>) -> Result<FeatureVector> {
        if values.len() != self.layout.len() {
            return Err(Error::SchemaMismatch(format!(
                "expected {} values, got {}",
                self.layout.len(),
                values.len()
            )));
        }
        for (i, &v) in values.iter().enumerate() {
            if self.layout.kind(i) == FeatureKind::Boolean && v > 1 {
                return Err(Error::input(format!(
                    "boolean feature `{}` has value {v}",
                    self.layout.name(i)
                )));
            }
        }
        Ok(FeatureVector {
            layout: Arc::clone(&self.layout),
            values,
        })
    }

    /// Vector with every feature zero except the named assignments.
    pub fn vector_with(&self, assignments: &[(&str, u64)]) -> Result<FeatureVector> {
        let mut values = vec![0; self.layout.len()];
        for (name, v) in assignments {
            let i = self
                .layout
                .index_of(name)
                .ok_or_else(|| Error::SchemaMismatch(format!("no feature `{name}`")))?;
            values[i] = *v;
        }
        self.vector_from_values(values)
    }
}

fn fingerprint(description: &[KeywordFeature], url: &[KeywordFeature]) -> String {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    for (group, list) in [("description", description), ("url", url)] {
        for k in list {
            h.update(format!(
                "{group}\t{}\t{}\t{}\n",
                k.name,
                k.pattern,
                k.mode.as_str()
            ));
        }
    }
    for name in DERIVED_FLAGS.iter().chain(NUMERIC_FEATURES.iter()) {
        h.update(format!("fixed\t{name}\n"));
    }
    let digest = h.finalize();
    digest[..16].iter().map(|b| format!("{b:02x}")).collect()
}

/// One record's feature values, in the order of its schema's [`Layout`].
#[derive(Clone)]
pub struct FeatureVector {
    layout: Arc<Layout>,
    values: Vec<u64>,
}

impl PartialEq for FeatureVector {
    fn eq(&self, other: &Self) -> bool {
        self.layout.fingerprint == other.layout.fingerprint && self.values == other.values
    }
}

impl Eq for FeatureVector {}

impl fmt::Debug for FeatureVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let set: Vec<String> = self
            .layout
            .names
            .iter()
            .zip(&self.values)
            .filter(|(_, &v)| v != 0)
            .map(|(n, v)| format!("{n}={v}"))
            .collect();
        write!(f, "FeatureVector({})", set.join(", "))
    }
}

impl FeatureVector {
    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn fingerprint(&self) -> &str {
        self.layout.fingerprint()
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn value(&self, i: usize) -> u64 {
        self.values[i]
    }

    pub fn get(&self, name: &str) -> Option<u64> {
        self.layout.index_of(name).map(|i| self.values[i])
    }

    /// Boolean features as (name, 0/1) pairs in layout order.
    pub fn booleans(&self) -> impl Iterator<Item = (&str, u64)> {
        self.pairs()
            .filter(|(n, _)| self.layout.kinds[self.layout.index[*n]] == FeatureKind::Boolean)
    }

    pub fn numerics(&self) -> impl Iterator<Item = (&str, u64)> {
        self.pairs()
            .filter(|(n, _)| self.layout.kinds[self.layout.index[*n]] == FeatureKind::Numeric)
    }

    fn pairs(&self) -> impl Iterator<Item = (&str, u64)> {
        self.layout
            .names
            .iter()
            .map(String::as_str)
            .zip(self.values.iter().copied())
    }
}
