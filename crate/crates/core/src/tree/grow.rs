use super::split::{quality_unchecked, SplitQuality};
use super::{
    majority, training_labels, DecisionTree, Leaf, Split, SplitTest, TrainParams, TreeNode,
};
use crate::features::{FeatureKind, FeatureVector, Layout};
use crate::{Class, Result};

const EPS: f64 = 1e-12;

/// Grows and prunes a tree at `params.confidence_factor`.
pub fn train(
    matrix: &[FeatureVector],
    labels: &[Option<Class>],
    params: &TrainParams,
) -> Result<DecisionTree> {
    let grown = grow(matrix, labels, params)?;
    super::prune(&grown, params.confidence_factor, matrix, labels)
}

/// Top-down induction without pruning.
///
/// At each node every feature proposes its best binary partition (for counts,
/// the midpoint threshold with the highest information gain). Among proposals
/// with positive gain at least the mean gain, the highest gain ratio wins;
/// earlier features win ties. Growth stops at pure nodes, nodes too small to
/// give both children `min_leaf` rows, `max_depth`, or when nothing qualifies.
pub fn grow(
    matrix: &[FeatureVector],
    labels: &[Option<Class>],
    params: &TrainParams,
) -> Result<DecisionTree> {
    params.validate()?;
    let labels = training_labels(matrix, labels)?;
    let layout = matrix[0].layout().clone();
    let ctx = Ctx {
        matrix,
        labels: &labels,
        params,
        layout: &layout,
    };
    let rows: Vec<usize> = (0..matrix.len()).collect();
    let root = ctx.build(rows, 0, Class::False);
    DecisionTree::with_numbered_leaves(root, layout.fingerprint(), *params)
}

struct Ctx<'a> {
    matrix: &'a [FeatureVector],
    labels: &'a [Class],
    params: &'a TrainParams,
    layout: &'a Layout,
}

struct Candidate {
    feature: usize,
    test: SplitTest,
    quality: SplitQuality,
}

impl Ctx<'_> {
    fn counts(&self, rows: &[usize]) -> (u64, u64) {
        let t = rows
            .iter()
            .filter(|&&r| self.labels[r] == Class::True)
            .count() as u64;
        (t, rows.len() as u64 - t)
    }

    fn build(&self, rows: Vec<usize>, depth: usize, fallback: Class) -> TreeNode {
        let (n_true, n_false) = self.counts(&rows);
        let class = majority(n_true, n_false, fallback);
        let leaf = TreeNode::Leaf(Leaf {
            id: 0,
            class,
            n_true,
            n_false,
        });
        let min_leaf = self.params.min_leaf;
        if n_true == 0
            || n_false == 0
            || rows.len() < 2 * min_leaf
            || self.params.max_depth.is_some_and(|d| depth >= d)
        {
            return leaf;
        }
        let Some(best) = self.best_split(&rows, [n_true as f64, n_false as f64]) else {
            return leaf;
        };
        let (left, right): (Vec<usize>, Vec<usize>) = rows
            .into_iter()
            .partition(|&r| best.test.goes_left(self.matrix[r].value(best.feature)));
        TreeNode::Split(Split {
            feature: self.layout.name(best.feature).to_string(),
            test: best.test,
            left: Box::new(self.build(left, depth + 1, class)),
            right: Box::new(self.build(right, depth + 1, class)),
        })
    }

    fn best_split(&self, rows: &[usize], parent: [f64; 2]) -> Option<Candidate> {
        let candidates: Vec<Candidate> = (0..self.layout.len())
            .filter_map(|f| self.best_for_feature(rows, f, parent))
            .filter(|c| c.quality.info_gain > EPS)
            .collect();
        if candidates.is_empty() {
            return None;
        }
        let mean =
            candidates.iter().map(|c| c.quality.info_gain).sum::<f64>() / candidates.len() as f64;
        let mut best: Option<Candidate> = None;
        for c in candidates {
            if c.quality.info_gain < mean - EPS {
                continue;
            }
            if best
                .as_ref()
                .is_none_or(|b| c.quality.gain_ratio > b.quality.gain_ratio + EPS)
            {
                best = Some(c);
            }
        }
        best
    }

    fn best_for_feature(
        &self,
        rows: &[usize],
        feature: usize,
        parent: [f64; 2],
    ) -> Option<Candidate> {
        let min_leaf = self.params.min_leaf as f64;
        let mut pairs: Vec<(u64, Class)> = rows
            .iter()
            .map(|&r| (self.matrix[r].value(feature), self.labels[r]))
            .collect();
        pairs.sort_unstable_by_key(|p| p.0);

        let mut left = [0.0f64; 2];
        let mut best: Option<(f64, SplitQuality)> = None;
        for i in 0..pairs.len() - 1 {
            left[class_slot(pairs[i].1)] += 1.0;
            let (lo, hi) = (pairs[i].0, pairs[i + 1].0);
            if lo == hi {
                continue;
            }
            let right = [parent[0] - left[0], parent[1] - left[1]];
            let (nl, nr) = (left[0] + left[1], right[0] + right[1]);
            if nl < min_leaf || nr < min_leaf {
                continue;
            }
            let q = quality_unchecked(&parent, &[&left, &right]);
            if best
                .as_ref()
                .is_none_or(|(_, b)| q.info_gain > b.info_gain + EPS)
            {
                best = Some(((lo as f64 + hi as f64) / 2.0, q));
            }
        }
        let (threshold, quality) = best?;
        let test = match self.layout.kind(feature) {
            FeatureKind::Boolean => SplitTest::Boolean,
            FeatureKind::Numeric => SplitTest::Numeric { threshold },
        };
        Some(Candidate {
            feature,
            test,
            quality,
        })
    }
}

fn class_slot(c: Class) -> usize {
    match c {
        Class::True => 0,
        Class::False => 1,
    }
}
