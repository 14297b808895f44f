use statrs::distribution::{ContinuousCDF, Normal};

use super::{majority, training_labels, validate_cf, DecisionTree, Leaf, TreeNode};
use crate::features::FeatureVector;
use crate::{Class, Error, Result};

/// Extra errors C4.5 adds to `errors` observed among `n` instances: the
/// normal-approximation upper confidence bound of the binomial error rate at
/// confidence `cf` (with continuity correction), times `n`, minus `errors`.
///
/// The same bound is used for every error count. Weka switches to an exact
/// bound below one error, which makes a zero-error leaf look worse than its
/// one-error neighbours and lets a smaller cf keep a split a larger cf pruned.
pub fn pessimistic_extra_errors(n: f64, errors: f64, cf: f64) -> f64 {
    if n <= 0.0 {
        return 0.0;
    }
    if errors + 0.5 >= n {
        return (n - errors).max(0.0);
    }
    let z = Normal::standard().inverse_cdf(1.0 - cf);
    let f = (errors + 0.5) / n;
    let r = (f + z * z / (2.0 * n) + z * (f / n - f * f / n + z * z / (4.0 * n * n)).sqrt())
        / (1.0 + z * z / n);
    r * n - errors
}

fn estimate(n: u64, errors: u64, cf: f64) -> f64 {
    errors as f64 + pessimistic_extra_errors(n as f64, errors as f64, cf)
}

/// Bottom-up subtree replacement.
///
/// Training rows are routed through `t`; every split whose majority-class
/// leaf would have a pessimistic error estimate no larger than the summed
/// estimates of its (already pruned) children is collapsed into that leaf.
/// Leaf counts are refreshed from the routed rows and leaf ids renumbered.
pub fn prune(
    t: &DecisionTree,
    cf: f64,
    matrix: &[FeatureVector],
    labels: &[Option<Class>],
) -> Result<DecisionTree> {
    validate_cf(cf)?;
    let labels = training_labels(matrix, labels)?;
    if matrix[0].fingerprint() != t.schema_fingerprint() {
        return Err(Error::SchemaMismatch(
            "pruning data uses a different schema than the tree".into(),
        ));
    }
    t.check_layout(matrix[0].layout())?;
    let ctx = Ctx {
        matrix,
        labels: &labels,
        cf,
    };
    let rows: Vec<usize> = (0..matrix.len()).collect();
    let (root, _) = ctx.prune_node(t.root(), rows, Class::False);
    let mut params = *t.params();
    params.confidence_factor = cf;
    DecisionTree::with_numbered_leaves(root, t.schema_fingerprint(), params)
}

struct Ctx<'a> {
    matrix: &'a [FeatureVector],
    labels: &'a [Class],
    cf: f64,
}

impl Ctx<'_> {
    fn prune_node(&self, node: &TreeNode, rows: Vec<usize>, fallback: Class) -> (TreeNode, f64) {
        let n_true = rows
            .iter()
            .filter(|&&r| self.labels[r] == Class::True)
            .count() as u64;
        let n_false = rows.len() as u64 - n_true;
        let n = n_true + n_false;
        match node {
            TreeNode::Leaf(l) => {
                let errors = match l.class {
                    Class::True => n_false,
                    Class::False => n_true,
                };
                let leaf = Leaf {
                    id: l.id,
                    class: l.class,
                    n_true,
                    n_false,
                };
                (TreeNode::Leaf(leaf), estimate(n, errors, self.cf))
            }
            TreeNode::Split(s) => {
                let class = majority(n_true, n_false, fallback);
                let layout = self.matrix[0].layout();
                let feature = layout
                    .index_of(&s.feature)
                    .expect("layout checked before pruning");
                let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
                    .into_iter()
                    .partition(|&r| s.test.goes_left(self.matrix[r].value(feature)));
                let (left, left_est) = self.prune_node(&s.left, left_rows, class);
                let (right, right_est) = self.prune_node(&s.right, right_rows, class);
                let subtree_est = left_est + right_est;

                let leaf_errors = n - n_true.max(n_false);
                let leaf_est = estimate(n, leaf_errors, self.cf);
                if leaf_est <= subtree_est + 1e-9 {
                    let leaf = Leaf {
                        id: 0,
                        class,
                        n_true,
                        n_false,
                    };
                    (TreeNode::Leaf(leaf), leaf_est)
                } else {
                    let mut split = s.clone();
                    split.left = Box::new(left);
                    split.right = Box::new(right);
                    (TreeNode::Split(split), subtree_est)
                }
            }
        }
    }
}
