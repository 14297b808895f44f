//! C4.5-style binary decision trees over keyword feature vectors.
//!
//! Trees are grown top-down by gain ratio ([`grow`]), pruned bottom-up by
//! pessimistic error estimates at a confidence factor ([`prune`]), and stored
//! as versioned JSON ([`save_tree`] / [`load_tree`]). [`simple_tree`]
//! returns the shipped compact model.

mod format;
mod grow;
mod prune;
mod simple;
mod split;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::features::{FeatureKind, FeatureSchema, FeatureVector, Layout};
use crate::par::{self, Execution};
use crate::{Class, Error, Result};

pub use format::{load_tree, render_text, save_tree, TREE_FORMAT_VERSION};
pub use grow::{grow, train};
pub use prune::{pessimistic_extra_errors, prune};
pub use simple::{simple_tree, SIMPLE_TREE_FILE, SIMPLE_TREE_LISTING};
pub use split::{entropy, split_quality, SplitQuality};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainParams {
    /// Pruning confidence in (0, 0.5]; smaller prunes harder.
    pub confidence_factor: f64,
    /// Minimum training instances on each side of a split.
    pub min_leaf: usize,
    #[serde(default)]
    pub max_depth: Option<usize>,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            confidence_factor: 0.25,
            min_leaf: 2,
            max_depth: None,
        }
    }
}

impl TrainParams {
    pub fn with_cf(confidence_factor: f64) -> Self {
        TrainParams {
            confidence_factor,
            ..TrainParams::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_cf(self.confidence_factor)?;
        if self.min_leaf == 0 {
            return Err(Error::param("min_leaf must be positive"));
        }
        if self.max_depth == Some(0) {
            return Err(Error::param("max_depth must be positive"));
        }
        Ok(())
    }
}

pub(crate) fn validate_cf(cf: f64) -> Result<()> {
    if cf > 0.0 && cf <= 0.5 {
        Ok(())
    } else {
        Err(Error::param(format!(
            "confidence factor {cf} outside (0, 0.5]"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitTest {
    /// Left branch when the feature is 0.
    Boolean,
    /// Left branch when the feature is `<= threshold`.
    Numeric { threshold: f64 },
}

impl SplitTest {
    fn goes_left(self, value: u64) -> bool {
        match self {
            SplitTest::Boolean => value == 0,
            SplitTest::Numeric { threshold } => (value as f64) <= threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub feature: String,
    pub test: SplitTest,
    pub left: Box<TreeNode>,
    pub right: Box<TreeNode>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Leaf {
    pub id: usize,
    pub class: Class,
    pub n_true: u64,
    pub n_false: u64,
}

impl Leaf {
    /// Majority share of the training counts; 1.0 for count-free leaves.
    pub fn confidence(&self) -> f64 {
        let n = self.n_true + self.n_false;
        if n == 0 {
            return 1.0;
        }
        let majority = match self.class {
            Class::True => self.n_true,
            Class::False => self.n_false,
        };
        majority as f64 / n as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Split(Split),
    Leaf(Leaf),
}

impl TreeNode {
    pub fn leaf(class: Class) -> TreeNode {
        TreeNode::Leaf(Leaf {
            id: 0,
            class,
            n_true: 0,
            n_false: 0,
        })
    }

    pub fn boolean(feature: impl Into<String>, left: TreeNode, right: TreeNode) -> TreeNode {
        TreeNode::Split(Split {
            feature: feature.into(),
            test: SplitTest::Boolean,
            left: Box::new(left),
            right: Box::new(right),
        })
    }

    pub fn numeric(
        feature: impl Into<String>,
        threshold: f64,
        left: TreeNode,
        right: TreeNode,
    ) -> TreeNode {
        TreeNode::Split(Split {
            feature: feature.into(),
            test: SplitTest::Numeric { threshold },
            left: Box::new(left),
            right: Box::new(right),
        })
    }

    fn count(&self) -> usize {
        match self {
            TreeNode::Leaf(_) => 1,
            TreeNode::Split(s) => 1 + s.left.count() + s.right.count(),
        }
    }

    fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf(_) => 0,
            TreeNode::Split(s) => 1 + s.left.depth().max(s.right.depth()),
        }
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a Leaf>) {
        match self {
            TreeNode::Leaf(l) => out.push(l),
            TreeNode::Split(s) => {
                s.left.collect_leaves(out);
                s.right.collect_leaves(out);
            }
        }
    }

    fn number_leaves(&mut self, next: &mut usize) {
        match self {
            TreeNode::Leaf(l) => {
                l.id = *next;
                *next += 1;
            }
            TreeNode::Split(s) => {
                s.left.number_leaves(next);
                s.right.number_leaves(next);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub class: Class,
    pub leaf_id: usize,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    root: TreeNode,
    schema_fingerprint: String,
    params: TrainParams,
}

impl DecisionTree {
    /// Checks structural invariants: unique leaf ids and finite thresholds.
    pub fn new(
        root: TreeNode,
        schema_fingerprint: impl Into<String>,
        params: TrainParams,
    ) -> Result<Self> {
        fn check(node: &TreeNode, ids: &mut HashSet<usize>) -> Result<()> {
            match node {
                TreeNode::Leaf(l) => {
                    if !ids.insert(l.id) {
                        return Err(Error::input(format!("duplicate leaf id {}", l.id)));
                    }
                }
                TreeNode::Split(s) => {
                    if let SplitTest::Numeric { threshold } = s.test {
                        if !threshold.is_finite() {
                            return Err(Error::input(format!(
                                "non-finite threshold on `{}`",
                                s.feature
                            )));
                        }
                    }
                    check(&s.left, ids)?;
                    check(&s.right, ids)?;
                }
            }
            Ok(())
        }
        check(&root, &mut HashSet::new())?;
        Ok(DecisionTree {
            root,
            schema_fingerprint: schema_fingerprint.into(),
            params,
        })
    }

    /// Like [`DecisionTree::new`] but assigns leaf ids in depth-first order first.
    pub fn with_numbered_leaves(
        mut root: TreeNode,
        schema_fingerprint: impl Into<String>,
        params: TrainParams,
    ) -> Result<Self> {
        root.number_leaves(&mut 0);
        DecisionTree::new(root, schema_fingerprint, params)
    }

    pub fn root(&self) -> &TreeNode {
        &self.root
    }

    pub fn schema_fingerprint(&self) -> &str {
        &self.schema_fingerprint
    }

    pub fn params(&self) -> &TrainParams {
        &self.params
    }

    pub fn node_count(&self) -> usize {
        self.root.count()
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    /// Leaves in depth-first, left-to-right order.
    pub fn leaves(&self) -> Vec<&Leaf> {
        let mut out = Vec::new();
        self.root.collect_leaves(&mut out);
        out
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves().len()
    }

    /// Verifies every tested feature exists in `layout` with a compatible kind.
    pub fn check_layout(&self, layout: &Layout) -> Result<()> {
        fn walk(node: &TreeNode, layout: &Layout) -> Result<()> {
            if let TreeNode::Split(s) = node {
                let i = layout.index_of(&s.feature).ok_or_else(|| {
                    Error::SchemaMismatch(format!("tree tests unknown feature `{}`", s.feature))
                })?;
                if s.test == SplitTest::Boolean && layout.kind(i) != FeatureKind::Boolean {
                    return Err(Error::SchemaMismatch(format!(
                        "boolean test on numeric feature `{}`",
                        s.feature
                    )));
                }
                walk(&s.left, layout)?;
                walk(&s.right, layout)?;
            }
            Ok(())
        }
        walk(&self.root, layout)
    }

    /// The same tree bound to another schema that provides every tested feature.
    pub fn rebind(&self, schema: &FeatureSchema) -> Result<DecisionTree> {
        self.check_layout(schema.layout())?;
        let mut t = self.clone();
        t.schema_fingerprint = schema.fingerprint().to_string();
        Ok(t)
    }

    pub fn classify(&self, fv: &FeatureVector) -> Result<Prediction> {
        if fv.fingerprint() != self.schema_fingerprint {
            return Err(Error::SchemaMismatch(format!(
                "vector schema {} does not match tree schema {}",
                fv.fingerprint(),
                self.schema_fingerprint
            )));
        }
        let layout = fv.layout();
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf(l) => {
                    return Ok(Prediction {
                        class: l.class,
                        leaf_id: l.id,
                        confidence: l.confidence(),
                    })
                }
                TreeNode::Split(s) => {
                    let i = layout.index_of(&s.feature).ok_or_else(|| {
                        Error::SchemaMismatch(format!("tree tests unknown feature `{}`", s.feature))
                    })?;
                    node = if s.test.goes_left(fv.value(i)) {
                        &s.left
                    } else {
                        &s.right
                    };
                }
            }
        }
    }

    pub fn classify_all(
        &self,
        matrix: &[FeatureVector],
        exec: Execution,
    ) -> Result<Vec<Prediction>> {
        par::try_map(exec, matrix, |fv| self.classify(fv))
    }
}

/// Validates aligned training inputs and resolves labels.
pub(crate) fn training_labels(
    matrix: &[FeatureVector],
    labels: &[Option<Class>],
) -> Result<Vec<Class>> {
    if matrix.is_empty() {
        return Err(Error::input("empty training set"));
    }
    if matrix.len() != labels.len() {
        return Err(Error::input(format!(
            "{} vectors but {} labels",
            matrix.len(),
            labels.len()
        )));
    }
    let fp = matrix[0].fingerprint();
    if let Some(i) = matrix.iter().position(|v| v.fingerprint() != fp) {
        return Err(Error::SchemaMismatch(format!(
            "row {} uses a different schema",
            i + 1
        )));
    }
    labels
        .iter()
        .enumerate()
        .map(|(i, l)| l.ok_or_else(|| Error::MissingLabel(format!("row {}", i + 1))))
        .collect()
}

/// Majority class; ties go to `fallback`.
pub(crate) fn majority(n_true: u64, n_false: u64, fallback: Class) -> Class {
    match n_true.cmp(&n_false) {
        std::cmp::Ordering::Greater => Class::True,
        std::cmp::Ordering::Less => Class::False,
        std::cmp::Ordering::Equal => fallback,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> (FeatureSchema, DecisionTree) {
        let s = FeatureSchema::default_schema();
        let root = TreeNode::boolean(
            "mirror",
            TreeNode::numeric(
                "star",
                4.5,
                TreeNode::leaf(Class::False),
                TreeNode::leaf(Class::True),
            ),
            TreeNode::leaf(Class::False),
        );
        let t = DecisionTree::with_numbered_leaves(root, s.fingerprint(), TrainParams::default())
            .unwrap();
        (s, t)
    }

    #[test]
    fn routes_left_on_zero_and_le() {
        let (s, t) = tiny();
        let p = t.classify(&s.vector_with(&[("star", 4)]).unwrap()).unwrap();
        assert_eq!((p.class, p.leaf_id, p.confidence), (Class::False, 0, 1.0));
        let p = t.classify(&s.vector_with(&[("star", 5)]).unwrap()).unwrap();
        assert_eq!((p.class, p.leaf_id), (Class::True, 1));
        let p = t
            .classify(&s.vector_with(&[("mirror", 1), ("star", 50)]).unwrap())
            .unwrap();
        assert_eq!((p.class, p.leaf_id), (Class::False, 2));
    }

    #[test]
    fn schema_mismatch_is_an_error() {
        let (_, t) = tiny();
        let other =
            crate::features::load_lexicon(Some("[[description]]\npattern = \"homework\"\n"))
                .unwrap();
        let v = other.vector_with(&[]).unwrap();
        assert!(matches!(t.classify(&v), Err(Error::SchemaMismatch(_))));
        let rebound = t.rebind(&other).unwrap();
        assert!(rebound.classify(&v).is_ok());
    }

    #[test]
    fn rejects_duplicate_leaf_ids_and_bad_thresholds() {
        let root = TreeNode::boolean(
            "mirror",
            TreeNode::leaf(Class::True),
            TreeNode::leaf(Class::False),
        );
        assert!(DecisionTree::new(root, "x", TrainParams::default()).is_err());
        let root = TreeNode::numeric(
            "star",
            f64::NAN,
            TreeNode::leaf(Class::True),
            TreeNode::leaf(Class::False),
        );
        assert!(DecisionTree::with_numbered_leaves(root, "x", TrainParams::default()).is_err());
    }

    #[test]
    fn leaf_confidence_uses_counts() {
        let l = Leaf {
            id: 0,
            class: Class::True,
            n_true: 3,
            n_false: 1,
        };
        assert_eq!(l.confidence(), 0.75);
    }

    #[test]
    fn params_validation() {
        assert!(TrainParams::with_cf(0.5).validate().is_ok());
        assert!(TrainParams::with_cf(0.0).validate().is_err());
        assert!(TrainParams::with_cf(0.6).validate().is_err());
        let p = TrainParams {
            min_leaf: 0,
            ..TrainParams::default()
        };
        assert!(p.validate().is_err());
    }
}
