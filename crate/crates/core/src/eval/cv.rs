use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{precision_recall, ConfusionMatrix, EvalReport};
use crate::features::FeatureVector;
use crate::par::{self, Execution};
use crate::tree::{train, TrainParams};
use crate::{Class, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub k: usize,
    pub seed: u64,
    /// Fold index of every row, in input order.
    pub fold_of: Vec<usize>,
    pub per_fold: Vec<EvalReport>,
    /// Metrics over the confusion matrix summed across folds.
    pub pooled: EvalReport,
    pub precision_mean: Option<f64>,
    pub precision_stddev: Option<f64>,
    pub recall_mean: Option<f64>,
    pub recall_stddev: Option<f64>,
}

/// Stratified fold assignment.
///
/// Rows of each class (TRUE first, then FALSE) are shuffled with a seeded
/// ChaCha8 generator and dealt round-robin across folds, the deal continuing
/// from one class to the next. Each fold therefore holds the floor or ceiling
/// of its class share and fold sizes differ by at most one.
pub fn stratified_folds(labels: &[Class], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::param(format!("fold count {k} must be at least 2")));
    }
    if k > labels.len() {
        return Err(Error::param(format!(
            "fold count {k} exceeds dataset size {}",
            labels.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0; labels.len()];
    let mut next = 0usize;
    for class in [Class::True, Class::False] {
        let mut rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        rows.shuffle(&mut rng);
        for r in rows {
            fold_of[r] = next % k;
            next += 1;
        }
    }
    Ok(fold_of)
}

/// k-fold cross-validation of [`train`] at `params`. Folds train in parallel
/// under [`Execution::Parallel`]; results do not depend on the execution mode.
pub fn cross_validate(
    matrix: &[FeatureVector],
    labels: &[Option<Class>],
    k: usize,
    params: &TrainParams,
    seed: u64,
    exec: Execution,
) -> Result<CvReport> {
    params.validate()?;
    if matrix.len() != labels.len() {
        return Err(Error::input("matrix and labels differ in length"));
    }
    let truth: Vec<Class> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| l.ok_or_else(|| Error::MissingLabel(format!("row {}", i + 1))))
        .collect::<Result<_>>()?;
    let fold_of = stratified_folds(&truth, k, seed)?;

    let fold_results: Vec<Result<ConfusionMatrix>> = par::map_range(exec, k, |fold| {
        let (mut train_x, mut train_y) = (Vec::new(), Vec::new());
        let mut test_rows = Vec::new();
        for (i, &f) in fold_of.iter().enumerate() {
            if f == fold {
                test_rows.push(i);
            } else {
                train_x.push(matrix[i].clone());
                train_y.push(Some(truth[i]));
            }
        }
        let tree = train(&train_x, &train_y, params)?;
        let mut m = ConfusionMatrix::default();
        for i in test_rows {
            m.record(tree.classify(&matrix[i])?.class, truth[i]);
        }
        Ok(m)
    });

    let mut pooled = ConfusionMatrix::default();
    let mut per_fold = Vec::with_capacity(k);
    for (fold, m) in fold_results.into_iter().enumerate() {
        let m = m?;
        pooled.merge(&m);
        per_fold.push(precision_recall(&m, format!("fold {}", fold + 1)));
    }
    let (precision_mean, precision_stddev) = mean_std(per_fold.iter().filter_map(|r| r.precision));
    let (recall_mean, recall_stddev) = mean_std(per_fold.iter().filter_map(|r| r.recall));
    Ok(CvReport {
        k,
        seed,
        fold_of,
        pooled: precision_recall(&pooled, format!("{k}-fold cv pooled")),
        per_fold,
        precision_mean,
        precision_stddev,
        recall_mean,
        recall_stddev,
    })
}

/// Mean and sample standard deviation; the deviation needs two values.
fn mean_std(values: impl Iterator<Item = f64>) -> (Option<f64>, Option<f64>) {
    let v: Vec<f64> = values.collect();
    if v.is_empty() {
        return (None, None);
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    if v.len() < 2 {
        return (Some(mean), None);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
    (Some(mean), Some(var.sqrt()))
}
