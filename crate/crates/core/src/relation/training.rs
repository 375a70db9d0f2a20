use std::io::Write;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, RelationStatement};
use crate::error::{Error, Result};
use crate::taxonomy::Taxonomy;

use super::RelationClass;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledStatement {
    pub statement: RelationStatement,
    pub label: RelationClass,
}

impl LabeledStatement {
    /// Swaps the pair order and the directional label.
    pub fn reversed(&self) -> Self {
        LabeledStatement {
            statement: self.statement.reversed(),
            label: self.label.reversed(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSetConfig {
    /// Statements kept per term pair.
    pub cap: usize,
    /// Random negative sentences; `None` matches the number of positives.
    pub random_negatives: Option<usize>,
    pub seed: u64,
}

impl Default for TrainingSetConfig {
    fn default() -> Self {
        TrainingSetConfig {
            cap: 200,
            random_negatives: None,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingSet {
    /// Original and reversed samples, interleaved.
    pub samples: Vec<LabeledStatement>,
    pub positives: usize,
    pub sibling_negatives: usize,
    pub random_negatives: usize,
    /// Seed pairs that contributed nothing, with the reason.
    pub warnings: Vec<String>,
}

/// Seed edges become `Forward` samples ordered (parent, child); sibling pairs
/// and random sentences become `None`. Every sample is followed by its
/// reversal.
pub fn build_training_set(
    taxonomy: &Taxonomy,
    corpus: &Corpus,
    config: &TrainingSetConfig,
) -> Result<TrainingSet> {
    let edges = taxonomy.edges();
    if edges.is_empty() {
        return Err(Error::Precondition("seed taxonomy has no edges".into()));
    }
    let mut set = TrainingSet::default();
    let vocab = corpus.vocab();

    let pair_statements = |a: &str, b: &str, set: &mut TrainingSet| -> Result<Vec<RelationStatement>> {
        let (Some(ia), Some(ib)) = (vocab.id(a), vocab.id(b)) else {
            set.warnings.push(format!("{a} / {b}: term not in vocabulary"));
            return Ok(Vec::new());
        };
        let found = corpus.relation_statements(ia, ib, config.cap)?;
        if found.is_empty() {
            set.warnings.push(format!("{a} / {b}: no co-occurring sentence"));
        }
        Ok(found)
    };

    let mut originals = Vec::new();
    for (p, c) in &edges {
        for s in pair_statements(taxonomy.name(*p), taxonomy.name(*c), &mut set)? {
            originals.push(LabeledStatement {
                statement: s,
                label: RelationClass::Forward,
            });
            set.positives += 1;
        }
    }

    let mut groups: Vec<Vec<_>> = vec![taxonomy.roots().to_vec()];
    groups.extend(taxonomy.ids().map(|id| taxonomy.children(id).to_vec()));
    for group in groups {
        for (i, &x) in group.iter().enumerate() {
            for &y in &group[i + 1..] {
                for s in pair_statements(taxonomy.name(x), taxonomy.name(y), &mut set)? {
                    originals.push(LabeledStatement {
                        statement: s,
                        label: RelationClass::None,
                    });
                    set.sibling_negatives += 1;
                }
            }
        }
    }

    let n_random = config.random_negatives.unwrap_or(set.positives);
    for s in corpus.sample_negative_sentences(n_random, config.seed)? {
        originals.push(LabeledStatement {
            statement: s,
            label: RelationClass::None,
        });
        set.random_negatives += 1;
    }

    for w in &set.warnings {
        warn!("training set: {w}");
    }
    set.samples = originals
        .into_iter()
        .flat_map(|s| {
            let r = s.reversed();
            [s, r]
        })
        .collect();
    Ok(set)
}

#[derive(Serialize)]
struct SampleLine<'a> {
    tokens: Vec<&'a str>,
    pos_a: usize,
    pos_b: usize,
    label: RelationClass,
}

/// One JSON object per line: `{"tokens":[..],"pos_a":i,"pos_b":j,"label":"forward"}`.
pub fn write_samples_jsonl<W: Write>(corpus: &Corpus, samples: &[LabeledStatement], mut out: W) -> Result<()> {
    for s in samples {
        let line = SampleLine {
            tokens: corpus.tokens_str(&s.statement.tokens),
            pos_a: s.statement.pos_a,
            pos_b: s.statement.pos_b,
            label: s.label,
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> (Corpus, Taxonomy) {
        let text = "food such_as dessert here.\nfood like dessert.\ndessert is a food.\n\
                    dessert and seafood.\nseafood or dessert.\nsome filler words here.";
        let corpus = Corpus::ingest_str(text, 1).unwrap();
        let tax = Taxonomy::load(b"food\tdessert\nfood\tseafood\n").unwrap();
        (corpus, tax)
    }

    #[test]
    fn counts_match_worked_example() {
        let (corpus, tax) = fixture();
        let cfg = TrainingSetConfig {
            random_negatives: Some(2),
            ..Default::default()
        };
        let set = build_training_set(&tax, &corpus, &cfg).unwrap();
        assert_eq!(set.positives, 3);
        assert_eq!(set.sibling_negatives, 2);
        assert_eq!(set.random_negatives, 2);
        assert_eq!(set.samples.len(), 14);
        // (food, seafood) never co-occur.
        assert_eq!(set.warnings.len(), 1);
    }

    #[test]
    fn samples_come_in_reversed_pairs() {
        let (corpus, tax) = fixture();
        let set = build_training_set(&tax, &corpus, &TrainingSetConfig::default()).unwrap();
        for pair in set.samples.chunks(2) {
            assert_eq!(pair[0].reversed(), pair[1]);
            assert_eq!(pair[1].reversed(), pair[0]);
        }
        let first = &set.samples[0];
        assert_eq!(first.label, RelationClass::Forward);
        assert_eq!(corpus.term_str(first.statement.term_a()), "food");
        assert_eq!(set.samples[1].label, RelationClass::Backward);
    }

    #[test]
    fn deterministic_per_seed() {
        let (corpus, tax) = fixture();
        let cfg = TrainingSetConfig::default();
        assert_eq!(
            build_training_set(&tax, &corpus, &cfg).unwrap(),
            build_training_set(&tax, &corpus, &cfg).unwrap()
        );
    }

    #[test]
    fn edgeless_seed_is_rejected() {
        let (corpus, _) = fixture();
        let tax = Taxonomy::load(b"{\"name\":\"food\"}").unwrap();
        assert!(build_training_set(&tax, &corpus, &TrainingSetConfig::default()).is_err());
    }

    #[test]
    fn jsonl_lines_parse() {
        let (corpus, tax) = fixture();
        let set = build_training_set(&tax, &corpus, &TrainingSetConfig::default()).unwrap();
        let mut buf = Vec::new();
        write_samples_jsonl(&corpus, &set.samples, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), set.samples.len());
        let v: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(v["label"], "forward");
        assert_eq!(v["tokens"][v["pos_a"].as_u64().unwrap() as usize], "food");
    }
}
