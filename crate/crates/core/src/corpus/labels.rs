use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use super::LabeledDataset;
use crate::{Decision, Error, Result};

/// One line of the append-only label store.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub project_id: String,
    pub decision: Decision,
    pub source: String,
    pub timestamp: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Reads line-delimited label records. A torn final line (no trailing newline,
/// not valid JSON) is dropped with a warning; any other bad line is an error.
pub fn read_label_records<R: Read>(source: R) -> Result<Vec<LabelRecord>> {
    let mut text = String::new();
    BufReader::new(source).read_to_string(&mut text)?;
    let complete = text.ends_with('\n');
    let lines: Vec<&str> = text.lines().collect();
    let mut out = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<LabelRecord>(line) {
            Ok(r) => out.push(r),
            Err(e) if i + 1 == lines.len() && !complete => {
                log::warn!("label store: dropping torn final line {}: {e}", i + 1);
            }
            Err(e) => {
                return Err(Error::LabelStore {
                    line: i + 1,
                    message: e.to_string(),
                })
            }
        }
    }
    Ok(out)
}

/// Append-only file of [`LabelRecord`]s. Every append is flushed and synced
/// before returning.
#[derive(Debug)]
pub struct LabelStore {
    path: PathBuf,
    file: File,
    last_timestamp: Option<DateTime<Utc>>,
}

impl LabelStore {
    /// Opens (creating if needed) the store and returns it with its current contents.
    pub fn open(path: impl AsRef<Path>) -> Result<(Self, Vec<LabelRecord>)> {
        let path = path.as_ref().to_path_buf();
        let existing = match File::open(&path) {
            Ok(f) => read_label_records(f)?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(e.into()),
        };
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        let last_timestamp = existing.iter().map(|r| r.timestamp).max();
        let mut store = LabelStore {
            path,
            file,
            last_timestamp,
        };
        store.repair_torn_tail()?;
        Ok((store, existing))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// A timestamp strictly after every one this store has handed out or read.
    pub fn next_timestamp(&mut self) -> DateTime<Utc> {
        let now = Utc::now();
        let t = match self.last_timestamp {
            Some(last) if now <= last => last + Duration::microseconds(1),
            _ => now,
        };
        self.last_timestamp = Some(t);
        t
    }

    pub fn append(&mut self, record: &LabelRecord) -> Result<()> {
        let mut line = serde_json::to_vec(record).map_err(std::io::Error::from)?;
        line.push(b'\n');
        self.file.write_all(&line)?;
        self.file.flush()?;
        self.file.sync_data()?;
        if self.last_timestamp.is_none_or(|t| t < record.timestamp) {
            self.last_timestamp = Some(record.timestamp);
        }
        Ok(())
    }

    pub fn sync(&mut self) -> Result<()> {
        self.file.flush()?;
        self.file.sync_all()?;
        Ok(())
    }

    // A crash mid-append can leave a partial final line; cut it off.
    fn repair_torn_tail(&mut self) -> Result<()> {
        let bytes = std::fs::read(&self.path)?;
        if bytes.last().is_some_and(|&b| b != b'\n') {
            let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
            OpenOptions::new()
                .write(true)
                .open(&self.path)?
                .set_len(keep as u64)?;
            self.file.sync_data()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeReport {
    /// Records whose final label is TRUE or FALSE.
    pub labeled: usize,
    /// Records whose final decision was UNDECIDED (label cleared).
    pub undecided: usize,
    pub warnings: Vec<String>,
}

/// Applies label records to a dataset, last write wins per project id.
pub fn merge_labels(ds: &LabeledDataset, labels: &[LabelRecord]) -> (LabeledDataset, MergeReport) {
    let index: HashMap<&str, usize> = ds
        .records()
        .iter()
        .enumerate()
        .map(|(i, r)| (r.project_id.as_str(), i))
        .collect();
    let mut last: HashMap<usize, Decision> = HashMap::new();
    let mut report = MergeReport::default();
    for rec in labels {
        match index.get(rec.project_id.as_str()) {
            Some(&i) => {
                last.insert(i, rec.decision);
            }
            None => report
                .warnings
                .push(format!("label for unknown project_id `{}`", rec.project_id)),
        }
    }
    let mut out = ds.clone();
    let records = out.records_mut();
    for (i, decision) in last {
        records[i].label = decision.class();
        match decision {
            Decision::Undecided => report.undecided += 1,
            _ => report.labeled += 1,
        }
    }
    (out, report)
}
