//! Planted-taxonomy corpus generator.
//!
//! Produces a small pre-phrased corpus whose hypernym patterns encode a known
//! three-level food taxonomy (one root, five topics, fifteen subtopics, two
//! extra cluster terms per subtopic), together with the seed, an oracle
//! relation table and the gold ancestor pairs.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eval::AncestorPairSet;
use crate::relation::{OracleScorer, RelationClass};

/// Subtopic head, its two cluster terms, and three descriptive words that
/// only appear around this subtopic.
type Subtopic = (&'static str, [&'static str; 2], [&'static str; 3]);

/// Topic, descriptive words shared by its subtopics, and the subtopics.
type Topic = (&'static str, [&'static str; 3], [Subtopic; 3]);

pub const ROOT: &str = "food";

pub const PLANTED: [Topic; 5] = [
    (
        "meat",
        ["grilled", "butcher", "roasted"],
        [
            ("beef", ["steak", "brisket"], ["angus", "ribeye", "marbled"]),
            ("pork", ["bacon", "ham"], ["cured", "hog", "smoky"]),
            ("chicken", ["wings", "drumstick"], ["poultry", "crispy", "breast"]),
        ],
    ),
    (
        "seafood",
        ["ocean", "fresh_catch", "harbor"],
        [
            ("fish", ["salmon", "tuna"], ["fillet", "scales", "sashimi"]),
            ("crab", ["king_crab", "snow_crab"], ["claws", "shell", "legs"]),
            ("shrimp", ["prawn", "scampi"], ["peeled", "cocktail", "tails"]),
        ],
    ),
    (
        "dessert",
        ["sweet", "sugary", "pastry_chef"],
        [
            ("cake", ["cheesecake", "cupcake"], ["frosting", "layers", "candles"]),
            ("pie", ["apple_pie", "tart"], ["crust", "filling", "lattice"]),
            ("cookie", ["biscuit", "macaron"], ["chewy", "dough", "chips"]),
        ],
    ),
    (
        "bread",
        ["baked", "loaf", "bakery"],
        [
            ("baguette", ["ficelle", "batard"], ["french", "crusty", "long"]),
            ("bagel", ["bialy", "pretzel"], ["boiled", "sesame", "ring"]),
            ("croissant", ["brioche", "danish"], ["buttery", "flaky", "laminated"]),
        ],
    ),
    (
        "drink",
        ["cup", "sip", "beverage_menu"],
        [
            ("coffee", ["espresso", "latte"], ["roast", "beans", "barista"]),
            ("tea", ["matcha", "chai"], ["leaves", "steeped", "kettle"]),
            ("juice", ["lemonade", "smoothie"], ["squeezed", "citrus", "blender"]),
        ],
    ),
];

const FILLER: [&str; 12] = [
    "we", "went", "there", "yesterday", "friends", "table", "evening", "visit", "nice", "place",
    "waited", "again",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticConfig {
    pub seed: u64,
    /// Descriptive sentences per subtopic term.
    pub context_sentences: usize,
    pub filler_sentences: usize,
    /// Sentences per document.
    pub doc_len: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            seed: 7,
            context_sentences: 3,
            filler_sentences: 30,
            doc_len: 4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    /// One document per line.
    pub text: String,
    /// Seed taxonomy JSON: two topics with one subtopic each, no root.
    pub seed: String,
    /// Full planted tree as JSON, cluster terms included.
    pub planted: String,
    pub oracle: OracleScorer,
    /// Ancestor pairs among planted concept nodes.
    pub gold: AncestorPairSet,
    pub n_sentences: usize,
}

fn parent_first(rng: &mut ChaCha8Rng, parent: &str, child: &str) -> String {
    let forms = ["{p} such_as {c}", "{p} including {c}", "{p} like {c}", "{p} especially {c}"];
    forms.choose(rng).expect("non-empty").replace("{p}", parent).replace("{c}", child)
}

fn child_first(rng: &mut ChaCha8Rng, parent: &str, child: &str) -> String {
    let forms = ["{c} is a kind of {p}", "{c} and other {p}", "{c} is a type of {p}"];
    forms.choose(rng).expect("non-empty").replace("{p}", parent).replace("{c}", child)
}

fn pattern(rng: &mut ChaCha8Rng, parent: &str, child: &str, i: usize) -> String {
    if i % 2 == 0 {
        parent_first(rng, parent, child)
    } else {
        child_first(rng, parent, child)
    }
}

/// Writes the planted corpus. Each subtopic gets its own documents so that
/// document context separates subtopics as well as local windows do.
pub fn generate(config: &SyntheticConfig) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut groups: Vec<Vec<String>> = Vec::new();

    let mut root_group = Vec::new();
    for (topic, _, _) in &PLANTED {
        for i in 0..4 {
            root_group.push(pattern(&mut rng, ROOT, topic, i));
        }
    }
    groups.push(root_group);

    for (topic, type_words, subs) in &PLANTED {
        for (head, members, desc) in subs {
            let mut g = Vec::new();
            for i in 0..4 {
                g.push(pattern(&mut rng, topic, head, i));
            }
            for m in members {
                for i in 0..3 {
                    g.push(pattern(&mut rng, topic, m, i + 1));
                    g.push(pattern(&mut rng, head, m, i));
                }
            }
            for term in std::iter::once(head).chain(members.iter()) {
                for _ in 0..config.context_sentences {
                    let d1 = desc[rng.gen_range(0..3)];
                    let d2 = desc[rng.gen_range(0..3)];
                    let t = type_words[rng.gen_range(0..3)];
                    let s = match rng.gen_range(0..3) {
                        0 => format!("{term} {d1} {t} {d2}"),
                        1 => format!("{t} {term} with {d1} {d2}"),
                        _ => format!("{d1} {term} {t} {d2}"),
                    };
                    g.push(s);
                }
            }
            groups.push(g);
        }
        let heads: Vec<&str> = subs.iter().map(|s| s.0).collect();
        let mut g = Vec::new();
        for i in 0..heads.len() {
            for j in i + 1..heads.len() {
                g.push(format!("{} and {} on the menu", heads[i], heads[j]));
            }
        }
        groups.push(g);
    }

    let mut filler = Vec::new();
    for _ in 0..config.filler_sentences {
        let n = rng.gen_range(3..6);
        let words: Vec<&str> = (0..n).map(|_| *FILLER.choose(&mut rng).expect("non-empty")).collect();
        filler.push(words.join(" "));
    }
    groups.push(filler);

    let mut text = String::new();
    let mut n_sentences = 0;
    for mut g in groups {
        g.shuffle(&mut rng);
        n_sentences += g.len();
        for doc in g.chunks(config.doc_len.max(1)) {
            let line: Vec<String> = doc.iter().map(|s| format!("{s}.")).collect();
            let _ = writeln!(text, "{}", line.join(" "));
        }
    }

    let mut oracle = OracleScorer::default();
    let mut gold = Vec::new();
    for (topic, _, subs) in &PLANTED {
        oracle.insert(ROOT, topic, RelationClass::Forward);
        gold.push((ROOT.to_string(), topic.to_string()));
        for (head, members, _) in subs {
            oracle.insert(ROOT, head, RelationClass::Forward);
            oracle.insert(topic, head, RelationClass::Forward);
            gold.push((ROOT.to_string(), head.to_string()));
            gold.push((topic.to_string(), head.to_string()));
            for m in members {
                oracle.insert(ROOT, m, RelationClass::Forward);
                oracle.insert(topic, m, RelationClass::Forward);
                oracle.insert(head, m, RelationClass::Forward);
            }
        }
    }

    let seed = serde_json::json!([
        {"name": PLANTED[0].0, "children": [{"name": PLANTED[0].2[0].0}]},
        {"name": PLANTED[1].0, "children": [{"name": PLANTED[1].2[0].0}]},
    ]);
    let planted = serde_json::json!({
        "name": ROOT,
        "children": PLANTED.iter().map(|(t, _, subs)| serde_json::json!({
            "name": t,
            "children": subs.iter().map(|(h, m, _)| serde_json::json!({
                "name": h,
                "cluster": [h, m[0], m[1]],
            })).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
    });

    SyntheticCorpus {
        text,
        seed: serde_json::to_string_pretty(&seed).expect("json") + "\n",
        planted: serde_json::to_string_pretty(&planted).expect("json") + "\n",
        oracle,
        gold: AncestorPairSet::from_pairs(gold),
        n_sentences,
    }
}

/// Two-concept toy corpus: twenty words split into two themes that never
/// share a sentence. Returns the text and the two concept names.
pub fn two_concept_toy(seed: u64) -> (String, [&'static str; 2]) {
    const A: [&str; 10] = ["sun", "sand", "beach", "wave", "surf", "shell", "tide", "coast", "swim", "reef"];
    const B: [&str; 10] = ["snow", "ice", "ski", "frost", "glacier", "sled", "parka", "slope", "cold", "blizzard"];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut text = String::new();
    for doc in 0..40 {
        let theme = if doc % 2 == 0 { &A } else { &B };
        let mut line = Vec::new();
        for _ in 0..4 {
            let words: Vec<&str> = (0..6).map(|_| theme[rng.gen_range(0..10)]).collect();
            line.push(format!("{}.", words.join(" ")));
        }
        let _ = writeln!(text, "{}", line.join(" "));
    }
    (text, [A[0], B[0]])
}
