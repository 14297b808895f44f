use super::{load_tree, DecisionTree};

/// The shipped compact model, bound to the built-in lexicon.
pub const SIMPLE_TREE_FILE: &str = include_str!("../../assets/simple.tree");

/// Text listing of the shipped compact model, as produced by [`super::render_text`].
pub const SIMPLE_TREE_LISTING: &str = include_str!("../../assets/simple.txt");

/// The compact 31-leaf model. Its leaves carry no counts, so every
/// prediction reports confidence 1.0.
pub fn simple_tree() -> DecisionTree {
    load_tree(SIMPLE_TREE_FILE.as_bytes()).expect("shipped tree file is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureSchema;
    use crate::tree::{render_text, TreeNode};
    use crate::Class;

    #[test]
    fn bound_to_default_schema() {
        let t = simple_tree();
        let s = FeatureSchema::default_schema();
        assert_eq!(t.schema_fingerprint(), s.fingerprint());
        t.check_layout(s.layout()).unwrap();
    }

    #[test]
    fn shape() {
        let t = simple_tree();
        assert_eq!(t.leaf_count(), 31);
        assert_eq!(t.node_count(), 61);
        assert!(matches!(t.root(), TreeNode::Split(s) if s.feature == "simple"));
        assert_eq!(t.params().confidence_factor, 0.05);
    }

    #[test]
    fn render_matches_listing() {
        let text = render_text(&simple_tree());
        assert_eq!(text, SIMPLE_TREE_LISTING);
        assert!(text.lines().any(|l| l.trim() == "mirror = 1: FALSE"));
        assert!(text.lines().any(|l| l.trim() == "committer <= 1: TRUE"));
    }

    #[test]
    fn headline_paths() {
        let t = simple_tree();
        let s = FeatureSchema::default_schema();
        let class = |a: &[(&str, u64)]| t.classify(&s.vector_with(a).unwrap()).unwrap().class;
        assert_eq!(class(&[("simple", 1)]), Class::False);
        assert_eq!(class(&[]), Class::False);
        assert_eq!(class(&[("have_language", 1)]), Class::True);
        assert_eq!(
            class(&[("have_language", 1), ("blog", 1), ("community", 30)]),
            Class::True
        );
        assert_eq!(
            class(&[
                ("have_language", 1),
                ("blog", 1),
                ("community", 3),
                ("star", 2),
                ("committer", 1)
            ]),
            Class::True
        );
        assert_eq!(
            class(&[
                ("have_language", 1),
                ("blog", 1),
                ("community", 3),
                ("star", 2),
                ("committer", 2)
            ]),
            Class::False
        );
    }
}
