use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{LabeledDataset, ProjectRecord};
use crate::features::{FeatureSchema, HAVE_LANGUAGE, IS_NULL};
use crate::tree::DecisionTree;
use crate::{Error, Result};

const FILLER: [&str; 14] = [
    "alpha", "quartz", "lumen", "vector", "harbor", "willow", "ember", "cobalt", "prairie",
    "zephyr", "orbit", "nimbus", "granite", "velvet",
];
const SYLLABLES: [&str; 10] = [
    "ka", "ri", "mu", "zen", "lap", "ter", "vis", "qua", "bel", "nix",
];
const LANGUAGES: [&str; 8] = [
    "Ruby",
    "Python",
    "JavaScript",
    "Java",
    "C",
    "Go",
    "Shell",
    "PHP",
];

/// Success probability of a geometric distribution (failures before the first
/// success) per count field; mean is `(1 - p) / p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountDistributions {
    pub star: f64,
    pub watcher: f64,
    pub community: f64,
    pub committer: f64,
}

impl Default for CountDistributions {
    fn default() -> Self {
        CountDistributions {
            star: 0.2,
            watcher: 0.15,
            community: 0.08,
            committer: 0.45,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_records: usize,
    /// Per-feature probability: keyword features are injected into the
    /// description or URL, `have_language` sets a language, `is_null` drops
    /// the description.
    pub keyword_injection_rates: BTreeMap<String, f64>,
    /// Rate for keyword features absent from `keyword_injection_rates`.
    pub default_keyword_rate: f64,
    pub counts: CountDistributions,
    pub label_noise: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn new(n_records: usize, seed: u64) -> Self {
        let keyword_injection_rates = [
            (HAVE_LANGUAGE.to_string(), 0.85),
            (IS_NULL.to_string(), 0.08),
        ]
        .into_iter()
        .collect();
        SynthSpec {
            n_records,
            keyword_injection_rates,
            default_keyword_rate: 0.02,
            counts: CountDistributions::default(),
            label_noise: 0.0,
            seed,
        }
    }

    pub fn with_noise(mut self, label_noise: f64) -> Self {
        self.label_noise = label_noise;
        self
    }

    fn rate(&self, name: &str) -> f64 {
        self.keyword_injection_rates
            .get(name)
            .copied()
            .unwrap_or(self.default_keyword_rate)
    }

    fn validate(&self, schema: &FeatureSchema) -> Result<()> {
        if self.n_records == 0 {
            return Err(Error::param("n_records must be at least 1"));
        }
        let prob = |name: &str, p: f64| -> Result<()> {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::param(format!(
                    "{name} probability {p} outside [0, 1]"
                )))
            }
        };
        prob("label_noise", self.label_noise)?;
        prob("default_keyword_rate", self.default_keyword_rate)?;
        for (name, &p) in &self.keyword_injection_rates {
            prob(name, p)?;
            let known = schema
                .layout()
                .index_of(name)
                .is_some_and(|i| schema.layout().kind(i) == crate::features::FeatureKind::Boolean);
            if !known {
                return Err(Error::param(format!(
                    "injection rate for unknown flag `{name}`"
                )));
            }
        }
        let c = &self.counts;
        for (name, p) in [
            ("star", c.star),
            ("watcher", c.watcher),
            ("community", c.community),
            ("committer", c.committer),
        ] {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::param(format!(
                    "{name} geometric parameter {p} outside (0, 1]"
                )));
            }
        }
        Ok(())
    }
}

fn geometric(rng: &mut ChaCha8Rng, p: f64) -> u64 {
    if p >= 1.0 {
        return 0;
    }
    let u: f64 = rng.random();
    ((1.0 - u).ln() / (1.0 - p).ln()).floor() as u64
}

/// Generates a labeled corpus whose labels come from `generator_tree`
/// applied to each record's own extracted features, flipped with
/// probability `label_noise`. Deterministic for a fixed spec.
pub fn generate_synthetic_corpus(
    spec: &SynthSpec,
    generator_tree: &DecisionTree,
    schema: &FeatureSchema,
) -> Result<LabeledDataset> {
    spec.validate(schema)?;
    let tree = generator_tree.rebind(schema)?;
    let filler: Vec<&str> = FILLER
        .iter()
        .copied()
        .filter(|w| {
            let mut probe = ProjectRecord::bare("probe");
            probe.description = Some((*w).to_string());
            let v = schema.extract(&probe);
            schema
                .description_keywords()
                .iter()
                .all(|k| v.get(&k.name) == Some(0))
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut records = Vec::with_capacity(spec.n_records);
    for i in 0..spec.n_records {
        let mut words: Vec<String> = schema
            .description_keywords()
            .iter()
            .filter(|k| rng.random_bool(spec.rate(&k.name)))
            .map(|k| k.pattern.clone())
            .collect();
        let n_filler = rng.random_range(1..=4);
        for _ in 0..n_filler {
            if let Some(w) = filler.get(rng.random_range(0..filler.len().max(1))) {
                words.push((*w).to_string());
            }
        }
        words.shuffle(&mut rng);
        let description = if rng.random_bool(spec.rate(IS_NULL)) {
            None
        } else {
            Some(words.join(" "))
        };

        let owner = format!("user{}", rng.random_range(0..100_000));
        let mut name: String = (0..rng.random_range(2..=3))
            .map(|_| SYLLABLES[rng.random_range(0..SYLLABLES.len())])
            .collect();
        for k in schema.url_keywords() {
            if rng.random_bool(spec.rate(&k.name)) {
                name.push('-');
                name.push_str(&k.pattern);
            }
        }
        let language = rng
            .random_bool(spec.rate(HAVE_LANGUAGE))
            .then(|| LANGUAGES[rng.random_range(0..LANGUAGES.len())].to_string());

        let mut r = ProjectRecord::bare(format!("synth-{i:06}"));
        r.url = format!("{owner}/{name}");
        r.owner = owner;
        r.name = name;
        r.description = description;
        r.language = language;
        r.star_count = geometric(&mut rng, spec.counts.star);
        r.watcher_count = geometric(&mut rng, spec.counts.watcher);
        r.community_count = geometric(&mut rng, spec.counts.community);
        r.committer_count = geometric(&mut rng, spec.counts.committer);

        let class = tree.classify(&schema.extract(&r))?.class;
        let flip = rng.random_bool(spec.label_noise);
        r.label = Some(if flip { class.flip() } else { class });
        records.push(r);
    }
    LabeledDataset::new(
        records,
        format!("synthetic n={} seed={}", spec.n_records, spec.seed),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{write_projects, Format};
    use crate::tree::{simple_tree, DecisionTree, TrainParams, TreeNode};
    use crate::Class;

    fn bytes(ds: &LabeledDataset) -> Vec<u8> {
        let mut out = Vec::new();
        write_projects(ds, &mut out, Format::Ndjson).unwrap();
        out
    }

    #[test]
    fn same_seed_same_bytes() {
        let s = FeatureSchema::default_schema();
        let spec = SynthSpec::new(300, 7).with_noise(0.1);
        let a = generate_synthetic_corpus(&spec, &simple_tree(), &s).unwrap();
        let b = generate_synthetic_corpus(&spec, &simple_tree(), &s).unwrap();
        assert_eq!(bytes(&a), bytes(&b));
        let c = generate_synthetic_corpus(&SynthSpec::new(300, 8), &simple_tree(), &s).unwrap();
        assert_ne!(bytes(&a), bytes(&c));
    }

    #[test]
    fn noiseless_labels_match_generator() {
        let s = FeatureSchema::default_schema();
        let t = simple_tree();
        let ds = generate_synthetic_corpus(&SynthSpec::new(2_000, 3), &t, &s).unwrap();
        for r in ds.records() {
            let oracle = t.classify(&s.extract(r)).unwrap().class;
            assert_eq!(r.label, Some(oracle), "{}", r.project_id);
        }
        let positives = ds
            .records()
            .iter()
            .filter(|r| r.label == Some(Class::True))
            .count();
        assert!(positives > 200 && positives < 1_800, "{positives}");
    }

    #[test]
    fn noise_flips_about_the_requested_share() {
        let s = FeatureSchema::default_schema();
        let t = simple_tree();
        let ds =
            generate_synthetic_corpus(&SynthSpec::new(4_000, 5).with_noise(0.2), &t, &s).unwrap();
        let flipped = ds
            .records()
            .iter()
            .filter(|r| r.label != Some(t.classify(&s.extract(r)).unwrap().class))
            .count();
        assert!((600..1_000).contains(&flipped), "{flipped}");
    }

    #[test]
    fn invalid_specs() {
        let s = FeatureSchema::default_schema();
        let t = simple_tree();
        assert!(generate_synthetic_corpus(&SynthSpec::new(0, 1), &t, &s).is_err());
        assert!(generate_synthetic_corpus(&SynthSpec::new(5, 1).with_noise(1.5), &t, &s).is_err());
        let foreign = DecisionTree::with_numbered_leaves(
            TreeNode::boolean(
                "homework",
                TreeNode::leaf(Class::True),
                TreeNode::leaf(Class::False),
            ),
            "x",
            TrainParams::default(),
        )
        .unwrap();
        assert!(generate_synthetic_corpus(&SynthSpec::new(5, 1), &foreign, &s).is_err());
    }
}
