use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{DecisionTree, Leaf, Split, SplitTest, TrainParams, TreeNode};
use crate::features::{canonical_feature_name, FeatureKind};
use crate::{Class, Error, Result};

pub const TREE_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeFile {
    format_version: u32,
    schema_fingerprint: String,
    params: TrainParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    note: Option<String>,
    root: NodeFile,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
enum NodeFile {
    Split {
        feature: String,
        kind: FeatureKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        threshold: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        note: Option<String>,
        left: Box<NodeFile>,
        right: Box<NodeFile>,
    },
    Leaf {
        id: usize,
        class: Class,
        #[serde(default)]
        n_true: u64,
        #[serde(default)]
        n_false: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        note: Option<String>,
    },
}

impl NodeFile {
    fn from_node(node: &TreeNode) -> NodeFile {
        match node {
            TreeNode::Leaf(l) => NodeFile::Leaf {
                id: l.id,
                class: l.class,
                n_true: l.n_true,
                n_false: l.n_false,
                note: None,
            },
            TreeNode::Split(s) => {
                let (kind, threshold) = match s.test {
                    SplitTest::Boolean => (FeatureKind::Boolean, None),
                    SplitTest::Numeric { threshold } => (FeatureKind::Numeric, Some(threshold)),
                };
                NodeFile::Split {
                    feature: s.feature.clone(),
                    kind,
                    threshold,
                    note: None,
                    left: Box::new(NodeFile::from_node(&s.left)),
                    right: Box::new(NodeFile::from_node(&s.right)),
                }
            }
        }
    }

    fn into_node(self) -> std::result::Result<TreeNode, String> {
        match self {
            NodeFile::Leaf {
                id,
                class,
                n_true,
                n_false,
                ..
            } => Ok(TreeNode::Leaf(Leaf {
                id,
                class,
                n_true,
                n_false,
            })),
            NodeFile::Split {
                feature,
                kind,
                threshold,
                left,
                right,
                ..
            } => {
                let test = match (kind, threshold) {
                    (FeatureKind::Boolean, None) => SplitTest::Boolean,
                    (FeatureKind::Numeric, Some(t)) => SplitTest::Numeric { threshold: t },
                    (FeatureKind::Boolean, Some(_)) => {
                        return Err(format!("boolean split on `{feature}` carries a threshold"))
                    }
                    (FeatureKind::Numeric, None) => {
                        return Err(format!("numeric split on `{feature}` lacks a threshold"))
                    }
                };
                Ok(TreeNode::Split(Split {
                    feature: canonical_feature_name(&feature),
                    test,
                    left: Box::new(left.into_node()?),
                    right: Box::new(right.into_node()?),
                }))
            }
        }
    }
}

/// Serializes a tree as pretty-printed JSON with a format version.
pub fn save_tree(t: &DecisionTree) -> Vec<u8> {
    let file = TreeFile {
        format_version: TREE_FORMAT_VERSION,
        schema_fingerprint: t.schema_fingerprint.clone(),
        params: t.params,
        note: None,
        root: NodeFile::from_node(&t.root),
    };
    let mut out = serde_json::to_vec_pretty(&file).expect("tree serializes");
    out.push(b'\n');
    out
}

/// Parses a tree file. Feature names are normalized through
/// [`canonical_feature_name`]; `note` fields are accepted and dropped.
pub fn load_tree(bytes: &[u8]) -> Result<DecisionTree> {
    let file: TreeFile = serde_json::from_slice(bytes).map_err(|e| Error::TreeFormat {
        offset: byte_offset(bytes, e.line(), e.column()),
        message: e.to_string(),
    })?;
    let semantic = |message: String| Error::TreeFormat { offset: 0, message };
    if file.format_version != TREE_FORMAT_VERSION {
        return Err(semantic(format!(
            "unsupported format_version {}",
            file.format_version
        )));
    }
    let root = file.root.into_node().map_err(semantic)?;
    DecisionTree::new(root, file.schema_fingerprint, file.params)
        .map_err(|e| semantic(e.to_string()))
}

fn byte_offset(bytes: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let line_start = bytes
        .iter()
        .enumerate()
        .filter(|(_, &b)| b == b'\n')
        .nth(line.saturating_sub(2))
        .map_or(0, |(i, _)| if line >= 2 { i + 1 } else { 0 });
    (line_start + column.saturating_sub(1)).min(bytes.len())
}

/// Indented text listing: one line per branch, two spaces per level, leaves
/// suffixed with `: TRUE` or `: FALSE`.
pub fn render_text(t: &DecisionTree) -> String {
    let mut out = String::new();
    match &t.root {
        TreeNode::Leaf(l) => {
            let _ = writeln!(out, ": {}", l.class);
        }
        TreeNode::Split(s) => render_split(s, 0, &mut out),
    }
    out
}

fn render_split(s: &Split, depth: usize, out: &mut String) {
    let (left, right) = match s.test {
        SplitTest::Boolean => (format!("{} = 0", s.feature), format!("{} = 1", s.feature)),
        SplitTest::Numeric { threshold } => {
            let t = format_threshold(threshold);
            (
                format!("{} <= {t}", s.feature),
                format!("{} > {t}", s.feature),
            )
        }
    };
    for (edge, child) in [(left, &s.left), (right, &s.right)] {
        let indent = "  ".repeat(depth);
        match child.as_ref() {
            TreeNode::Leaf(l) => {
                let _ = writeln!(out, "{indent}{edge}: {}", l.class);
            }
            TreeNode::Split(inner) => {
                let _ = writeln!(out, "{indent}{edge}");
                render_split(inner, depth + 1, out);
            }
        }
    }
}

fn format_threshold(t: f64) -> String {
    if t.fract() == 0.0 && t.abs() < 1e15 {
        format!("{}", t as i64)
    } else {
        format!("{t}")
    }
}
