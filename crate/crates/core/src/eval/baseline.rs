use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{precision_recall, ConfusionMatrix, EvalReport};
use crate::corpus::{LabeledDataset, ProjectRecord};
use crate::{Class, Error, Result};

/// Count used to rank projects in the baseline strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Committer,
    Community,
    Star,
    Watcher,
}

impl Dimension {
    pub const ALL: [Dimension; 4] = [
        Dimension::Committer,
        Dimension::Community,
        Dimension::Star,
        Dimension::Watcher,
    ];

    pub fn value(self, r: &ProjectRecord) -> u64 {
        match self {
            Dimension::Committer => r.committer_count,
            Dimension::Community => r.community_count,
            Dimension::Star => r.star_count,
            Dimension::Watcher => r.watcher_count,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::Committer => "committer",
            Dimension::Community => "community",
            Dimension::Star => "star",
            Dimension::Watcher => "watcher",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dimension {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "committer" | "committers" => Ok(Dimension::Committer),
            "community" | "community_member" => Ok(Dimension::Community),
            "star" | "stars" => Ok(Dimension::Star),
            "watcher" | "watchers" => Ok(Dimension::Watcher),
            other => Err(Error::param(format!("unknown dimension `{other}`"))),
        }
    }
}

/// Number of records a fraction selects: `ceil(p * n)`, computed so that
/// values like `0.15 * 100` land on 15 rather than 16.
pub fn selection_size(p: f64, n: usize) -> usize {
    let raw = p * n as f64;
    let rounded = raw.round();
    let size = if (raw - rounded).abs() < 1e-9 {
        rounded
    } else {
        raw.ceil()
    };
    (size.max(0.0) as usize).min(n)
}

fn check_fraction(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::param(format!("fraction {p} outside [0, 1]")))
    }
}

/// Rank order: by `dimension`, ties by ascending project id.
fn ranked(ds: &LabeledDataset, dimension: Dimension, descending: bool) -> Vec<usize> {
    let recs = ds.records();
    let mut order: Vec<usize> = (0..recs.len()).collect();
    order.sort_by(|&a, &b| {
        let (va, vb) = (dimension.value(&recs[a]), dimension.value(&recs[b]));
        let by_value = if descending { vb.cmp(&va) } else { va.cmp(&vb) };
        by_value.then_with(|| recs[a].project_id.cmp(&recs[b].project_id))
    });
    order
}

fn report(ds: &LabeledDataset, predicted_true: &[bool], strategy: String) -> Result<EvalReport> {
    let truth = ds.require_labels()?;
    let mut m = ConfusionMatrix::default();
    for (&p, &t) in predicted_true.iter().zip(&truth) {
        m.record(Class::from(p), t);
    }
    Ok(precision_recall(&m, strategy))
}

/// Predicts TRUE for the top `ceil(p * n)` projects by `dimension`.
pub fn baseline_top(ds: &LabeledDataset, dimension: Dimension, p: f64) -> Result<EvalReport> {
    check_fraction(p)?;
    let take = selection_size(p, ds.len());
    let mut predicted = vec![false; ds.len()];
    for &i in ranked(ds, dimension, true).iter().take(take) {
        predicted[i] = true;
    }
    report(ds, &predicted, format!("top {} {dimension}", percent(p)))
}

/// Predicts FALSE for the bottom `ceil(p * n)` projects by `dimension` and
/// TRUE for the rest.
pub fn baseline_bottom(ds: &LabeledDataset, dimension: Dimension, p: f64) -> Result<EvalReport> {
    check_fraction(p)?;
    let drop = selection_size(p, ds.len());
    let mut predicted = vec![true; ds.len()];
    for &i in ranked(ds, dimension, false).iter().take(drop) {
        predicted[i] = false;
    }
    report(ds, &predicted, format!("bottom {} {dimension}", percent(p)))
}

fn percent(p: f64) -> String {
    let v = p * 100.0;
    if (v - v.round()).abs() < 1e-9 {
        format!("{}%", v.round() as i64)
    } else {
        format!("{v}%")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(rows: &[(&str, u64, bool)]) -> LabeledDataset {
        let recs = rows
            .iter()
            .map(|(id, stars, label)| {
                let mut r = ProjectRecord::bare(*id);
                r.star_count = *stars;
                r.label = Some(Class::from(*label));
                r
            })
            .collect();
        LabeledDataset::new(recs, "t").unwrap()
    }

    #[test]
    fn selection_size_rounding() {
        assert_eq!(selection_size(0.15, 100), 15);
        assert_eq!(selection_size(0.01, 6715), 68);
        assert_eq!(selection_size(0.0, 10), 0);
        assert_eq!(selection_size(1.0, 10), 10);
        assert_eq!(selection_size(0.3, 7), 3);
    }

    #[test]
    fn top_full_fraction_is_base_rate() {
        let d = ds(&[
            ("a", 1, true),
            ("b", 5, false),
            ("c", 3, true),
            ("d", 0, true),
        ]);
        let r = baseline_top(&d, Dimension::Star, 1.0).unwrap();
        assert_eq!(r.precision, Some(0.75));
        assert_eq!(r.recall, Some(1.0));
    }

    #[test]
    fn bottom_zero_fraction_keeps_everything() {
        let d = ds(&[("a", 1, true), ("b", 5, false), ("c", 3, true)]);
        let r = baseline_bottom(&d, Dimension::Star, 0.0).unwrap();
        assert_eq!(r.recall, Some(1.0));
        assert_eq!(r.precision, Some(2.0 / 3.0));
    }

    #[test]
    fn ties_broken_by_project_id() {
        // equal stars: "a" ranks before "b" in both directions
        let d = ds(&[("b", 2, false), ("a", 2, true), ("c", 0, false)]);
        let top = baseline_top(&d, Dimension::Star, 0.3).unwrap();
        assert_eq!(
            top.matrix,
            ConfusionMatrix {
                tp: 1,
                fp: 0,
                fn_: 0,
                tn: 2
            }
        );
        let bottom = baseline_bottom(&d, Dimension::Star, 0.5).unwrap();
        // drops "c" then "a"
        assert_eq!(
            bottom.matrix,
            ConfusionMatrix {
                tp: 0,
                fp: 1,
                fn_: 1,
                tn: 1
            }
        );
        assert_eq!(top.strategy, "top 30% star");
    }

    #[test]
    fn unlabeled_record_is_an_error() {
        let mut d = ds(&[("a", 1, true)]).into_records();
        d.push(ProjectRecord::bare("z"));
        let d = LabeledDataset::new(d, "t").unwrap();
        assert!(matches!(
            baseline_top(&d, Dimension::Star, 0.5),
            Err(Error::MissingLabel(_))
        ));
        assert!(baseline_top(&ds(&[("a", 1, true)]), Dimension::Star, 1.5).is_err());
    }

    #[test]
    fn dimension_parsing() {
        assert_eq!("Stars".parse::<Dimension>().unwrap(), Dimension::Star);
        assert!("forks".parse::<Dimension>().is_err());
    }
}
