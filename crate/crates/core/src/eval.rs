//! Automatic taxonomy metrics: relation F1 over ancestor pairs, sibling
//! distinctiveness, and an NPMI coherence proxy.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;

use serde::Serialize;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::taxonomy::Taxonomy;

/// Which node pairs count as related.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PairMode {
    /// Every (ancestor, descendant) pair.
    #[default]
    Transitive,
    /// Only (parent, child) edges.
    Direct,
}

/// Maps alternative concept names onto canonical ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SynonymMap(HashMap<String, String>);

impl SynonymMap {
    /// Lines `alias<TAB>canonical`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (a, c) = line.split_once('\t').ok_or_else(|| Error::Parse {
                what: "synonym map",
                line: i + 1,
                message: "expected `alias<TAB>canonical`".into(),
            })?;
            map.insert(a.trim().to_lowercase(), c.trim().to_lowercase());
        }
        Ok(SynonymMap(map))
    }

    pub fn canonical<'a>(&'a self, name: &'a str) -> &'a str {
        self.0.get(name).map_or(name, String::as_str)
    }
}

/// Set of (ancestor, descendant) concept keys.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AncestorPairSet(pub BTreeSet<(String, String)>);

impl AncestorPairSet {
    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, S)>,
        S: Into<String>,
    {
        AncestorPairSet(pairs.into_iter().map(|(a, b)| (a.into(), b.into())).collect())
    }

    pub fn from_taxonomy(tax: &Taxonomy, mode: PairMode, synonyms: &SynonymMap) -> Self {
        let key = |id| synonyms.canonical(tax.name(id)).to_string();
        let mut set = BTreeSet::new();
        for id in tax.ids() {
            match mode {
                PairMode::Direct => {
                    if let Some(p) = tax.parent(id) {
                        set.insert((key(p), key(id)));
                    }
                }
                PairMode::Transitive => {
                    for a in tax.ancestors(id) {
                        set.insert((key(a), key(id)));
                    }
                }
            }
        }
        set.retain(|(a, b)| a != b);
        AncestorPairSet(set)
    }

    /// Lines `ancestor<TAB>descendant`.
    pub fn parse(text: &str, synonyms: &SynonymMap) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (a, d) = line.split_once('\t').ok_or_else(|| Error::Parse {
                what: "gold pair file",
                line: i + 1,
                message: "expected `ancestor<TAB>descendant`".into(),
            })?;
            let (a, d) = (a.trim().to_lowercase(), d.trim().to_lowercase());
            if a == d {
                return Err(Error::Parse {
                    what: "gold pair file",
                    line: i + 1,
                    message: format!("`{a}` is its own ancestor"),
                });
            }
            set.insert((synonyms.canonical(&a).to_string(), synonyms.canonical(&d).to_string()));
        }
        Ok(AncestorPairSet(set))
    }

    pub fn to_text(&self) -> String {
        self.0.iter().map(|(a, d)| format!("{a}\t{d}\n")).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct F1Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn relation_f1(pred: &AncestorPairSet, gold: &AncestorPairSet) -> Result<F1Scores> {
    if gold.is_empty() {
        return Err(Error::Eval("gold pair set is empty".into()));
    }
    // each value is one division of integer counts, so it is the correctly
    // rounded exact fraction; 2PR/(P+R) = 2h/(|pred|+|gold|)
    let hits = pred.0.intersection(&gold.0).count();
    let precision = if pred.is_empty() { 0.0 } else { hits as f64 / pred.len() as f64 };
    let recall = hits as f64 / gold.len() as f64;
    let f1 = (2 * hits) as f64 / (pred.len() + gold.len()) as f64;
    Ok(F1Scores { precision, recall, f1 })
}

/// `1 - jaccard(a, b)` as `|a △ b| / |a ∪ b|`, with two empty sets apart.
fn jaccard_distance(a: &HashSet<&str>, b: &HashSet<&str>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    (union - a.intersection(b).count()) as f64 / union as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeScores {
    pub per_node: Vec<(String, f64)>,
    pub mean: f64,
}

/// Per-member distinctiveness within one sibling group: `1 − max Jaccard`
/// between a member's top-`k` terms and every other member's. A group of
/// one scores 1.
pub fn sibling_group_distinctiveness<S: AsRef<str>>(group: &[Vec<S>], k: usize) -> Vec<f64> {
    let tops: Vec<HashSet<&str>> = group
        .iter()
        .map(|c| c.iter().take(k).map(AsRef::as_ref).collect())
        .collect();
    (0..tops.len())
        .map(|i| {
            (0..tops.len())
                .filter(|&j| j != i)
                .map(|j| jaccard_distance(&tops[i], &tops[j]))
                .fold(1.0, f64::min)
        })
        .collect()
}

/// Sibling distinctiveness of every node. The mean covers non-root nodes
/// (all nodes when there are only roots).
pub fn sibling_distinctiveness(tax: &Taxonomy, k: usize) -> NodeScores {
    let mut sd = HashMap::new();
    let mut groups: Vec<Vec<_>> = vec![tax.roots().to_vec()];
    groups.extend(tax.ids().map(|id| tax.children(id).to_vec()));
    for group in groups.into_iter().filter(|g| !g.is_empty()) {
        let clusters: Vec<Vec<&str>> = group
            .iter()
            .map(|&id| tax.node(id).cluster.iter().map(String::as_str).collect())
            .collect();
        for (id, v) in group.iter().zip(sibling_group_distinctiveness(&clusters, k)) {
            sd.insert(*id, v);
        }
    }
    let mut per_node = Vec::with_capacity(tax.len());
    let mut non_root = Vec::new();
    for id in tax.preorder() {
        let v = sd[&id];
        per_node.push((tax.name(id).to_string(), v));
        if tax.parent(id).is_some() {
            non_root.push(v);
        }
    }
    let pool: Vec<f64> = if non_root.is_empty() {
        per_node.iter().map(|(_, s)| *s).collect()
    } else {
        non_root
    };
    let mean = if pool.is_empty() { 1.0 } else { pool.iter().sum::<f64>() / pool.len() as f64 };
    NodeScores { per_node, mean }
}

/// Normalised PMI from sentence counts. Never co-occurring pairs score −1,
/// pairs present in every sentence score 1.
pub fn npmi(n_x: usize, n_y: usize, n_xy: usize, n: usize) -> f64 {
    if n_xy == 0 || n == 0 {
        return -1.0;
    }
    let (px, py, pxy) = (n_x as f64 / n as f64, n_y as f64 / n as f64, n_xy as f64 / n as f64);
    if pxy >= 1.0 {
        return 1.0;
    }
    (pxy / (px * py)).ln() / -pxy.ln()
}

/// Mean pairwise NPMI of each node's top-`k` cluster terms; nodes with
/// fewer than two terms are left out of the mean.
pub fn coherence_proxy(tax: &Taxonomy, corpus: &Corpus, k: usize) -> NodeScores {
    let n = corpus.sentences().len();
    let index = corpus.index();
    let mut per_node = Vec::new();
    for id in tax.preorder() {
        let terms: Vec<_> = tax.node(id).cluster.iter().take(k).map(|t| corpus.vocab().id(t)).collect();
        let mut sum = 0.0;
        let mut pairs = 0;
        for i in 0..terms.len() {
            for j in i + 1..terms.len() {
                sum += match (terms[i], terms[j]) {
                    (Some(a), Some(b)) => npmi(
                        index.postings(a).len(),
                        index.postings(b).len(),
                        index.cooccurrence_count(a, b),
                        n,
                    ),
                    _ => -1.0,
                };
                pairs += 1;
            }
        }
        if pairs > 0 {
            per_node.push((tax.name(id).to_string(), sum / pairs as f64));
        }
    }
    let mean = if per_node.is_empty() {
        0.0
    } else {
        per_node.iter().map(|(_, s)| s).sum::<f64>() / per_node.len() as f64
    };
    NodeScores { per_node, mean }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub f1: Option<F1Scores>,
    pub sibling_distinctiveness: NodeScores,
    pub coherence: Option<NodeScores>,
}

impl MetricReport {
    /// `key=value` lines.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        if let Some(f) = &self.f1 {
            let _ = writeln!(out, "relation_precision={:.6}", f.precision);
            let _ = writeln!(out, "relation_recall={:.6}", f.recall);
            let _ = writeln!(out, "relation_f1={:.6}", f.f1);
        }
        let _ = writeln!(out, "sibling_distinctiveness={:.6}", self.sibling_distinctiveness.mean);
        if let Some(c) = &self.coherence {
            let _ = writeln!(out, "coherence_npmi={:.6}", c.mean);
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<28}{:>10}", "metric", "value");
        if let Some(f) = &self.f1 {
            let _ = writeln!(out, "{:<28}{:>10.4}", "relation precision", f.precision);
            let _ = writeln!(out, "{:<28}{:>10.4}", "relation recall", f.recall);
            let _ = writeln!(out, "{:<28}{:>10.4}", "relation F1", f.f1);
        }
        let _ = writeln!(out, "{:<28}{:>10.4}", "sibling distinctiveness", self.sibling_distinctiveness.mean);
        if let Some(c) = &self.coherence {
            let _ = writeln!(out, "{:<28}{:>10.4}", "coherence (NPMI)", c.mean);
        }
        let _ = writeln!(out, "\n{:<28}{:>10}", "node", "SD");
        for (name, sd) in &self.sibling_distinctiveness.per_node {
            let _ = writeln!(out, "{name:<28}{sd:>10.4}");
        }
        out
    }
}
