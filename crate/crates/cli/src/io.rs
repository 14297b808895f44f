use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use pubdev_core::corpus::{
    merge_labels, parse_projects, read_label_records, ColumnMap, Format, LabeledDataset,
};
use pubdev_core::features::{load_lexicon, FeatureSchema};
use pubdev_core::tree::{load_tree, simple_tree, DecisionTree};

use crate::args::DataArgs;

pub fn format_of(path: &Path, explicit: Option<&str>) -> Result<Format> {
    match explicit {
        Some(tag) => Ok(tag.parse()?),
        None => Ok(Format::from_path(path)),
    }
}

pub fn load_schema(path: Option<&PathBuf>) -> Result<FeatureSchema> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("reading lexicon {}", p.display()))?;
            Ok(load_lexicon(Some(&text)).with_context(|| format!("lexicon {}", p.display()))?)
        }
        None => Ok(FeatureSchema::default_schema()),
    }
}

pub fn load_dataset(args: &DataArgs) -> Result<LabeledDataset> {
    let map = match &args.columns {
        Some(p) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("reading column map {}", p.display()))?;
            ColumnMap::from_toml(&text).with_context(|| format!("column map {}", p.display()))?
        }
        None => ColumnMap::default(),
    };
    let format = format_of(&args.input, args.format.as_deref())?;
    let file =
        File::open(&args.input).with_context(|| format!("opening {}", args.input.display()))?;
    let ds = parse_projects(file, format, &map)
        .with_context(|| format!("parsing {}", args.input.display()))?;
    log::info!("read {} records from {}", ds.len(), args.input.display());
    let Some(labels_path) = &args.labels else {
        return Ok(ds);
    };
    let file =
        File::open(labels_path).with_context(|| format!("opening {}", labels_path.display()))?;
    let records =
        read_label_records(file).with_context(|| format!("reading {}", labels_path.display()))?;
    let (merged, report) = merge_labels(&ds, &records);
    for w in &report.warnings {
        log::warn!("{w}");
    }
    log::info!(
        "merged labels: {} labeled, {} undecided",
        report.labeled,
        report.undecided
    );
    Ok(merged)
}

/// `simple` or a tree file, bound to `schema`.
pub fn load_model(name: &str, schema: &FeatureSchema) -> Result<DecisionTree> {
    let tree = if name == "simple" {
        simple_tree()
    } else {
        let bytes = fs::read(name).with_context(|| format!("reading model {name}"))?;
        load_tree(&bytes).with_context(|| format!("model {name}"))?
    };
    if tree.schema_fingerprint() == schema.fingerprint() {
        return Ok(tree);
    }
    log::info!("model {name} was built for another lexicon; rebinding by feature name");
    tree.rebind(schema)
        .with_context(|| format!("model {name} does not fit the lexicon"))
}

/// Writes `bytes` to `path` through a temporary file in the same directory,
/// or to stdout when `path` is `None`.
pub fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    let Some(path) = path else {
        let mut out = io::stdout().lock();
        out.write_all(bytes)?;
        return Ok(out.flush()?);
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn csv_bytes<F>(fill: F) -> Result<Vec<u8>>
where
    F: FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> csv::Result<()>,
{
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        fill(&mut w)?;
        w.flush()?;
    }
    Ok(buf)
}
