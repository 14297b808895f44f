use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;

use chrono::{DateTime, NaiveDateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::filter::RemovedRule;
use super::{LabeledDataset, ProjectRecord};
use crate::{Class, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Ndjson,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "ndjson" | "jsonl" => Ok(Format::Ndjson),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

impl Format {
    /// Guess from a file extension, defaulting to CSV.
    pub fn from_path(path: &std::path::Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("ndjson") | Some("jsonl") => Format::Ndjson,
            _ => Format::Csv,
        }
    }
}

/// Record fields addressable through a [`ColumnMap`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    ProjectId,
    Owner,
    Name,
    Url,
    Description,
    Language,
    StarCount,
    WatcherCount,
    CommitterCount,
    CommunityCount,
    IsFork,
    CreatedAt,
    Label,
}

impl Field {
    pub const ALL: [Field; 13] = [
        Field::ProjectId,
        Field::Owner,
        Field::Name,
        Field::Url,
        Field::Description,
        Field::Language,
        Field::StarCount,
        Field::WatcherCount,
        Field::CommitterCount,
        Field::CommunityCount,
        Field::IsFork,
        Field::CreatedAt,
        Field::Label,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Field::ProjectId => "project_id",
            Field::Owner => "owner",
            Field::Name => "name",
            Field::Url => "url",
            Field::Description => "description",
            Field::Language => "language",
            Field::StarCount => "star_count",
            Field::WatcherCount => "watcher_count",
            Field::CommitterCount => "committer_count",
            Field::CommunityCount => "community_count",
            Field::IsFork => "is_fork",
            Field::CreatedAt => "created_at",
            Field::Label => "label",
        }
    }

    pub fn is_required(self) -> bool {
        !matches!(
            self,
            Field::Description | Field::Language | Field::CreatedAt | Field::Label
        )
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Binds record fields to input column names (CSV header cells or NDJSON keys).
///
/// Loaded from TOML:
///
/// ```toml
/// null_token = "\\N"          # optional: cell text meaning "absent"
///
/// [columns]
/// project_id = "id"
/// star_count = "stars"
///
/// [removed]
/// require_missing = ["description", "language"]
/// require_zero_counts = true
/// ```
///
/// Unlisted fields keep their canonical name.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnMap {
    #[serde(default)]
    pub columns: BTreeMap<Field, String>,
    #[serde(default)]
    pub null_token: Option<String>,
    #[serde(default)]
    pub removed: RemovedRule,
}

impl ColumnMap {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::ColumnMap(e.to_string()))
    }

    pub fn column(&self, field: Field) -> &str {
        self.columns
            .get(&field)
            .map(String::as_str)
            .unwrap_or(field.as_str())
    }
}

pub fn parse_projects<R: Read>(
    source: R,
    format: Format,
    map: &ColumnMap,
) -> Result<LabeledDataset> {
    let records = match format {
        Format::Csv => parse_csv(source, map)?,
        Format::Ndjson => parse_ndjson(source, map)?,
    };
    let provenance = match format {
        Format::Csv => "csv",
        Format::Ndjson => "ndjson",
    };
    LabeledDataset::new(records, provenance)
}

fn parse_csv<R: Read>(source: R, map: &ColumnMap) -> Result<Vec<ProjectRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(source);
    let headers = reader
        .headers()
        .map_err(|e| Error::ColumnMap(format!("unreadable header: {e}")))?
        .clone();
    let index: HashMap<&str, usize> = headers
        .iter()
        .enumerate()
        .map(|(i, h)| (h.trim(), i))
        .collect();

    let mut columns = HashMap::new();
    for field in Field::ALL {
        match index.get(map.column(field)) {
            Some(&i) => {
                columns.insert(field, i);
            }
            None if field.is_required() => {
                return Err(Error::ColumnMap(format!(
                    "required field {field} has no column `{}`",
                    map.column(field)
                )))
            }
            None => {}
        }
    }

    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 1;
        let row = row.map_err(|e| Error::Row {
            row: row_no,
            field: "record".into(),
            message: e.to_string(),
        })?;
        let cell = |f: Field| -> Option<&str> {
            let v = columns.get(&f).and_then(|&c| row.get(c))?;
            if map.null_token.as_deref() == Some(v) {
                None
            } else {
                Some(v)
            }
        };
        out.push(build_record(row_no, |f| cell(f).map(Cell::Text))?);
    }
    Ok(out)
}

fn parse_ndjson<R: Read>(source: R, map: &ColumnMap) -> Result<Vec<ProjectRecord>> {
    let reader = BufReader::new(source);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let row_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let obj: Map<String, Value> = serde_json::from_str(&line).map_err(|e| Error::Row {
            row: row_no,
            field: "record".into(),
            message: format!("not a JSON object: {e}"),
        })?;
        let cell = |f: Field| -> Option<Cell<'_>> {
            match obj.get(map.column(f))? {
                Value::Null => None,
                Value::String(s) if map.null_token.as_deref() == Some(s.as_str()) => None,
                Value::String(s) => Some(Cell::Text(s)),
                Value::Bool(b) => Some(Cell::Bool(*b)),
                Value::Number(n) => Some(Cell::Number(n.clone())),
                other => Some(Cell::Other(other.to_string())),
            }
        };
        out.push(build_record(row_no, cell)?);
    }
    Ok(out)
}

enum Cell<'a> {
    Text(&'a str),
    Bool(bool),
    Number(serde_json::Number),
    Other(String),
}

impl Cell<'_> {
    fn text(&self) -> String {
        match self {
            Cell::Text(s) => (*s).to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Number(n) => n.to_string(),
            Cell::Other(s) => s.clone(),
        }
    }
}

fn build_record<'a>(row: usize, cell: impl Fn(Field) -> Option<Cell<'a>>) -> Result<ProjectRecord> {
    let err = |field: Field, message: &str| Error::Row {
        row,
        field: field.as_str().to_string(),
        message: message.to_string(),
    };
    let required_text = |f: Field| -> Result<String> {
        cell(f)
            .map(|c| c.text())
            .ok_or_else(|| err(f, "is missing"))
    };
    let optional_text =
        |f: Field| -> Option<String> { cell(f).map(|c| c.text()).filter(|s| !s.is_empty()) };
    let count = |f: Field| -> Result<u64> {
        match cell(f) {
            None => Err(err(f, "is missing")),
            Some(Cell::Number(n)) => n
                .as_u64()
                .ok_or_else(|| err(f, "not a non-negative integer")),
            Some(c) => {
                let t = c.text();
                let t = t.trim();
                if let Ok(v) = t.parse::<u64>() {
                    Ok(v)
                } else if t.parse::<i64>().is_ok() {
                    Err(err(f, "not a non-negative integer"))
                } else {
                    Err(err(f, "not an integer"))
                }
            }
        }
    };

    let project_id = required_text(Field::ProjectId)?;
    if project_id.is_empty() {
        return Err(err(Field::ProjectId, "is empty"));
    }
    let is_fork = match cell(Field::IsFork) {
        None => return Err(err(Field::IsFork, "is missing")),
        Some(Cell::Bool(b)) => b,
        Some(c) => parse_bool(&c.text()).ok_or_else(|| err(Field::IsFork, "not a boolean"))?,
    };
    let created_at = match optional_text(Field::CreatedAt) {
        None => None,
        Some(t) => {
            Some(parse_timestamp(&t).ok_or_else(|| err(Field::CreatedAt, "not a timestamp"))?)
        }
    };
    let label = match cell(Field::Label) {
        None => None,
        Some(Cell::Bool(b)) => Some(Class::from(b)),
        Some(c) => {
            let t = c.text();
            if t.trim().is_empty() {
                None
            } else {
                Some(
                    t.parse::<Class>()
                        .map_err(|_| err(Field::Label, "not TRUE or FALSE"))?,
                )
            }
        }
    };

    Ok(ProjectRecord {
        project_id,
        owner: required_text(Field::Owner)?,
        name: required_text(Field::Name)?,
        url: required_text(Field::Url)?,
        description: optional_text(Field::Description),
        language: optional_text(Field::Language),
        star_count: count(Field::StarCount)?,
        watcher_count: count(Field::WatcherCount)?,
        committer_count: count(Field::CommitterCount)?,
        community_count: count(Field::CommunityCount)?,
        is_fork,
        created_at,
        label,
    })
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "t" | "1" | "yes" => Some(true),
        "false" | "f" | "0" | "no" => Some(false),
        _ => None,
    }
}

fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S")
        .ok()
        .map(|t| t.and_utc())
}

fn format_timestamp(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

/// Writes records with canonical column names; `parse_projects` with the
/// default [`ColumnMap`] reads the output back unchanged.
pub fn write_projects<W: Write>(ds: &LabeledDataset, sink: W, format: Format) -> Result<()> {
    match format {
        Format::Csv => write_csv(ds, sink),
        Format::Ndjson => write_ndjson(ds, sink),
    }
}

fn write_csv<W: Write>(ds: &LabeledDataset, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(Field::ALL.iter().map(|f| f.as_str()))
        .map_err(csv_io)?;
    for r in ds.records() {
        let row = [
            r.project_id.clone(),
            r.owner.clone(),
            r.name.clone(),
            r.url.clone(),
            r.description.clone().unwrap_or_default(),
            r.language.clone().unwrap_or_default(),
            r.star_count.to_string(),
            r.watcher_count.to_string(),
            r.committer_count.to_string(),
            r.community_count.to_string(),
            r.is_fork.to_string(),
            r.created_at
                .as_ref()
                .map(format_timestamp)
                .unwrap_or_default(),
            r.label.map(|c| c.to_string()).unwrap_or_default(),
        ];
        w.write_record(&row).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn write_ndjson<W: Write>(ds: &LabeledDataset, mut sink: W) -> Result<()> {
    for r in ds.records() {
        let mut obj = Map::new();
        obj.insert("project_id".into(), r.project_id.clone().into());
        obj.insert("owner".into(), r.owner.clone().into());
        obj.insert("name".into(), r.name.clone().into());
        obj.insert("url".into(), r.url.clone().into());
        if let Some(d) = &r.description {
            obj.insert("description".into(), d.clone().into());
        }
        if let Some(l) = &r.language {
            obj.insert("language".into(), l.clone().into());
        }
        obj.insert("star_count".into(), r.star_count.into());
        obj.insert("watcher_count".into(), r.watcher_count.into());
        obj.insert("committer_count".into(), r.committer_count.into());
        obj.insert("community_count".into(), r.community_count.into());
        obj.insert("is_fork".into(), r.is_fork.into());
        if let Some(t) = &r.created_at {
            obj.insert("created_at".into(), format_timestamp(t).into());
        }
        if let Some(c) = r.label {
            obj.insert("label".into(), c.as_str().into());
        }
        serde_json::to_writer(&mut sink, &obj).map_err(std::io::Error::from)?;
        sink.write_all(b"\n")?;
    }
    sink.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "project_id,owner,name,url,description,language,star_count,watcher_count,committer_count,community_count,is_fork\n";

    fn csv(body: &str) -> Result<LabeledDataset> {
        parse_projects(
            format!("{HEADER}{body}").as_bytes(),
            Format::Csv,
            &ColumnMap::default(),
        )
    }

    #[test]
    fn csv_row_maps_fields() {
        let ds = csv("42,octo,web,octo/web,\"a web framework\",Ruby,5,7,2,3,false\n").unwrap();
        let r = &ds.records()[0];
        assert_eq!(r.project_id, "42");
        assert_eq!(r.star_count, 5);
        assert_eq!(r.watcher_count, 7);
        assert_eq!(r.committer_count, 2);
        assert_eq!(r.community_count, 3);
        assert_eq!(r.description.as_deref(), Some("a web framework"));
        assert_eq!(r.language.as_deref(), Some("Ruby"));
        assert!(!r.is_fork);
        assert_eq!(r.label, None);
    }

    #[test]
    fn bad_count_names_row_and_field() {
        let body = "1,a,b,a/b,x,Go,1,1,1,1,false\n2,a,c,a/c,x,Go,1,1,1,1,false\n3,a,d,a/d,x,Go,abc,1,1,1,false\n";
        let err = csv(body).unwrap_err();
        assert_eq!(err.to_string(), "row 3: star_count not an integer");
    }

    #[test]
    fn duplicate_id_is_an_error() {
        let body = "1,a,b,a/b,x,Go,1,1,1,1,false\n1,a,c,a/c,x,Go,1,1,1,1,false\n";
        assert!(matches!(csv(body), Err(Error::DuplicateId(_))));
    }

    #[test]
    fn unknown_format_tag() {
        assert!(matches!(
            "xml".parse::<Format>(),
            Err(Error::UnknownFormat(_))
        ));
    }

    #[test]
    fn ndjson_absent_description_is_missing() {
        let line = r#"{"project_id":"7","owner":"o","name":"n","url":"o/n","language":"C","star_count":1,"watcher_count":2,"committer_count":3,"community_count":4,"is_fork":false}"#;
        let ds = parse_projects(line.as_bytes(), Format::Ndjson, &ColumnMap::default()).unwrap();
        assert_eq!(ds.records()[0].description, None);
        assert_eq!(ds.records()[0].community_count, 4);
    }

    #[test]
    fn column_map_renames_and_null_token() {
        let map = ColumnMap::from_toml(
            "null_token = '\\N'\n[columns]\nproject_id = 'id'\nstar_count = 'stars'\n",
        )
        .unwrap();
        let text = "id,owner,name,url,description,language,stars,watcher_count,committer_count,community_count,is_fork\n9,o,n,o/n,\\N,\\N,4,0,0,0,0\n";
        let ds = parse_projects(text.as_bytes(), Format::Csv, &map).unwrap();
        let r = &ds.records()[0];
        assert_eq!((r.project_id.as_str(), r.star_count), ("9", 4));
        assert_eq!((r.description.clone(), r.language.clone()), (None, None));
    }

    #[test]
    fn missing_required_column_is_reported() {
        let text = "project_id,owner\n1,a\n";
        assert!(matches!(
            parse_projects(text.as_bytes(), Format::Csv, &ColumnMap::default()),
            Err(Error::ColumnMap(_))
        ));
    }

    #[test]
    fn ghtorrent_timestamp_and_labels() {
        let text = "project_id,owner,name,url,description,language,star_count,watcher_count,committer_count,community_count,is_fork,created_at,label\n1,o,n,o/n,d,,0,0,0,0,0,2012-01-03 10:11:12,TRUE\n";
        let ds = parse_projects(text.as_bytes(), Format::Csv, &ColumnMap::default()).unwrap();
        let r = &ds.records()[0];
        assert_eq!(r.label, Some(Class::True));
        assert_eq!(r.language, None);
        assert_eq!(
            format_timestamp(r.created_at.as_ref().unwrap()),
            "2012-01-03T10:11:12Z"
        );
    }
}
