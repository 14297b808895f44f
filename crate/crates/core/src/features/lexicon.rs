use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Deserialize;

use super::{FeatureSchema, KeywordFeature, MatchMode};
use crate::{Error, Result};

/// The shipped lexicon file. The built-in schema is parsed from it.
pub const DEFAULT_LEXICON: &str = include_str!("../../assets/lexicon.toml");

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LexiconFile {
    #[serde(default)]
    base: Base,
    #[serde(default)]
    description: Vec<Entry>,
    #[serde(default)]
    url: Vec<Entry>,
    #[serde(default)]
    modes: BTreeMap<String, MatchMode>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Base {
    #[default]
    Default,
    Empty,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Entry {
    name: Option<String>,
    pattern: String,
    mode: Option<MatchMode>,
}

/// Parses a lexicon file. `None` or blank text yields the built-in lexicon.
pub fn load_lexicon(text: Option<&str>) -> Result<FeatureSchema> {
    match text {
        None => parse(DEFAULT_LEXICON),
        Some(t) if t.trim().is_empty() => parse(DEFAULT_LEXICON),
        Some(t) => parse(t),
    }
}

fn parse(text: &str) -> Result<FeatureSchema> {
    let file: LexiconFile = toml::from_str(text).map_err(|e| Error::Lexicon(e.to_string()))?;
    let (mut description, mut url) = match file.base {
        Base::Empty => (Vec::new(), Vec::new()),
        Base::Default => {
            let d = FeatureSchema::default_schema();
            (d.description.clone(), d.url.clone())
        }
    };
    for e in file.description {
        description.push(entry(e, None)?);
    }
    for e in file.url {
        url.push(entry(e, Some("url_"))?);
    }
    for (name, mode) in file.modes {
        let target = description
            .iter_mut()
            .chain(url.iter_mut())
            .find(|k| k.name == name)
            .ok_or_else(|| Error::Lexicon(format!("mode override for unknown feature `{name}`")))?;
        target.mode = mode;
    }
    FeatureSchema::new(description, url)
}

fn entry(e: Entry, prefix: Option<&str>) -> Result<KeywordFeature> {
    if e.pattern.trim().is_empty() {
        return Err(Error::Lexicon(format!(
            "empty pattern{}",
            e.name.map(|n| format!(" for `{n}`")).unwrap_or_default()
        )));
    }
    let name = match e.name {
        Some(n) => n,
        None => format!(
            "{}{}",
            prefix.unwrap_or(""),
            canonical_feature_name(&e.pattern)
        ),
    };
    let mode = e.mode.unwrap_or(match prefix {
        Some(_) => MatchMode::Substring,
        None => MatchMode::default_for(&e.pattern),
    });
    Ok(KeywordFeature::new(name, e.pattern, mode))
}

impl FeatureSchema {
    /// Serializes the schema as a self-contained lexicon file.
    pub fn to_lexicon(&self) -> String {
        let mut out = String::from("base = \"empty\"\n");
        for (group, list) in [("description", &self.description), ("url", &self.url)] {
            for k in list.iter() {
                let _ = write!(
                    out,
                    "\n[[{group}]]\nname = {}\npattern = {}\nmode = \"{}\"\n",
                    toml_str(&k.name),
                    toml_str(&k.pattern),
                    k.mode.as_str()
                );
            }
        }
        out
    }
}

fn toml_str(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

/// Maps a feature identifier as printed in tree listings to a schema name.
///
/// Lowercases, turns whitespace into `_`, then resolves run-together forms
/// such as `collectionof` or `url_dot`-style spellings.
pub fn canonical_feature_name(raw: &str) -> String {
    let lowered = raw.trim().to_lowercase();
    let joined = lowered.split_whitespace().collect::<Vec<_>>().join("_");
    let alias = match joined.as_str() {
        "collectionof" => "collection_of",
        "listof" => "list_of",
        "havelanguage" | "have_lang" => "have_language",
        "isnull" => "is_null",
        "urldot" => "url_dot",
        "urlconfig" => "url_config",
        "urldoc" => "url_doc",
        "star_number" | "stars" => "star",
        "watcher_number" | "watchers" => "watcher",
        "committer_number" | "committers" => "committer",
        "community_member_number" | "community_member" | "community_members" => "community",
        _ => return joined,
    };
    alias.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureKind;

    #[test]
    fn default_schema_matches_shipped_lexicon() {
        let s = load_lexicon(None).unwrap();
        assert_eq!(s.description_keywords().len(), 59);
        let url: Vec<_> = s
            .url_keywords()
            .iter()
            .map(|k| k.pattern.as_str())
            .collect();
        assert_eq!(url, ["dot", "config", "doc"]);
        assert_eq!(s.feature_names().len(), 59 + 3 + 2 + 4);
        let i = s.layout().index_of("committer").unwrap();
        assert_eq!(s.layout().kind(i), FeatureKind::Numeric);
        let names: Vec<_> = s
            .description_keywords()
            .iter()
            .map(|k| k.name.as_str())
            .collect();
        assert!(names.contains(&"list_of") && names.contains(&"collection_of"));
    }

    #[test]
    fn short_patterns_default_to_word_mode() {
        let s = FeatureSchema::default_schema();
        let mode = |n: &str| {
            s.description_keywords()
                .iter()
                .find(|k| k.name == n)
                .unwrap()
                .mode
        };
        assert_eq!(mode("my"), MatchMode::Word);
        assert_eq!(mode("dot"), MatchMode::Word);
        assert_eq!(mode("mirror"), MatchMode::Substring);
        assert_eq!(mode("list_of"), MatchMode::Substring);
    }

    #[test]
    fn adding_an_entry_extends_the_default() {
        let s = load_lexicon(Some(
            "[[description]]\nname = \"homework\"\npattern = \"homework\"\nmode = \"substring\"\n",
        ))
        .unwrap();
        assert_eq!(s.description_keywords().len(), 60);
        assert_eq!(s.description_keywords().last().unwrap().name, "homework");
    }

    #[test]
    fn duplicate_names_rejected() {
        let text = "base = \"empty\"\n[[description]]\nname = \"mirror\"\npattern = \"mirror\"\n[[description]]\nname = \"mirror\"\npattern = \"mirrored\"\n";
        assert!(
            matches!(load_lexicon(Some(text)), Err(Error::Lexicon(m)) if m.contains("duplicate"))
        );
        // also against the inherited default entries
        let text = "[[description]]\npattern = \"mirror\"\n";
        assert!(load_lexicon(Some(text)).is_err());
    }

    #[test]
    fn empty_pattern_rejected() {
        let text = "[[description]]\nname = \"blank\"\npattern = \"   \"\n";
        assert!(
            matches!(load_lexicon(Some(text)), Err(Error::Lexicon(m)) if m.contains("empty pattern"))
        );
    }

    #[test]
    fn mode_overrides_apply() {
        let s = load_lexicon(Some("[modes]\ntool = \"substring\"\n")).unwrap();
        let tool = s
            .description_keywords()
            .iter()
            .find(|k| k.name == "tool")
            .unwrap();
        assert_eq!(tool.mode, MatchMode::Substring);
        assert!(load_lexicon(Some("[modes]\nnope = \"word\"\n")).is_err());
    }

    #[test]
    fn save_then_load_is_identity() {
        let s = load_lexicon(Some("[[description]]\npattern = \"say \\\"hi\\\"\"\n")).unwrap();
        let back = load_lexicon(Some(&s.to_lexicon())).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.fingerprint(), s.fingerprint());
    }

    #[test]
    fn aliases_resolve_listing_names() {
        assert_eq!(canonical_feature_name("collectionof"), "collection_of");
        assert_eq!(canonical_feature_name("Tutorial"), "tutorial");
        assert_eq!(canonical_feature_name("url_dot"), "url_dot");
        assert_eq!(canonical_feature_name("list of"), "list_of");
    }
}
