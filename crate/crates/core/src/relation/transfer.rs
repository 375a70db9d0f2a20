use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use log::{debug, warn};
use rayon::prelude::*;

use crate::corpus::{Corpus, RelationStatement, TermId};
use crate::error::{Error, Result};

use super::{ConfidenceFilter, RelationClass, RelationScorer, StatementText};

/// Terms with their aggregated directional scores, best first.
pub type ScoredTerms = Vec<(TermId, f64)>;

/// Confident-vote tallies for an unordered pair, oriented from the lower
/// term id to the higher one.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct PairVotes {
    forward: usize,
    backward: usize,
    confident: usize,
}

impl PairVotes {
    fn score(&self, src_is_low: bool) -> Option<f64> {
        if self.confident == 0 {
            return None;
        }
        let hits = if src_is_low { self.forward } else { self.backward };
        Some(hits as f64 / self.confident as f64)
    }
}

fn statement_text(corpus: &Corpus, s: &RelationStatement) -> StatementText {
    StatementText {
        tokens: corpus.tokens_str(&s.tokens).into_iter().map(str::to_string).collect(),
        pos_a: s.pos_a,
        pos_b: s.pos_b,
    }
}

fn tally(
    scorer: &dyn RelationScorer,
    corpus: &Corpus,
    lo: TermId,
    hi: TermId,
    filter: &ConfidenceFilter,
    cap: usize,
) -> Result<PairVotes> {
    let statements = corpus.relation_statements(lo, hi, cap)?;
    if statements.is_empty() {
        return Ok(PairVotes::default());
    }
    let texts: Vec<StatementText> = statements.iter().map(|s| statement_text(corpus, s)).collect();
    let dists = scorer.score_batch(&texts)?;
    if dists.len() != texts.len() {
        return Err(Error::Protocol {
            code: 0,
            message: format!("scorer returned {} results for {} statements", dists.len(), texts.len()),
        });
    }
    let mut votes = PairVotes::default();
    for d in dists.iter().filter(|d| filter.is_confident(d)) {
        votes.confident += 1;
        match d.argmax() {
            RelationClass::Forward => votes.forward += 1,
            RelationClass::Backward => votes.backward += 1,
            RelationClass::None => {}
        }
    }
    Ok(votes)
}

/// Fraction of confident statements about `(src, dst)` that predict `src` as
/// the parent of `dst`. `None` when no statement is confident.
pub fn directional_score(
    scorer: &dyn RelationScorer,
    corpus: &Corpus,
    src: TermId,
    dst: TermId,
    filter: &ConfidenceFilter,
    cap: usize,
) -> Result<Option<f64>> {
    if src == dst {
        return Err(Error::Precondition("directional score needs two distinct terms".into()));
    }
    let (lo, hi) = (src.min(dst), src.max(dst));
    Ok(tally(scorer, corpus, lo, hi, filter, cap)?.score(src == lo))
}

/// Shared state for relation transfer: scorer, thresholds and a pair cache
/// so that each corpus pair is scored once per run.
pub struct TransferContext<'a> {
    pub corpus: &'a Corpus,
    pub scorer: &'a dyn RelationScorer,
    pub filter: ConfidenceFilter,
    /// Relation score threshold, compared strictly.
    pub gamma: f64,
    pub cap: usize,
    pub min_cooccur: usize,
    pub max_roots: usize,
    /// Score a pair as undefined instead of failing when the scorer is
    /// unreachable after its retries.
    pub undefined_on_transport: bool,
    cache: Mutex<HashMap<(TermId, TermId), PairVotes>>,
    transport_failures: AtomicUsize,
    scored_statements: AtomicUsize,
}

impl<'a> TransferContext<'a> {
    pub fn new(corpus: &'a Corpus, scorer: &'a dyn RelationScorer) -> Self {
        TransferContext {
            corpus,
            scorer,
            filter: ConfidenceFilter::default(),
            gamma: 0.7,
            cap: 200,
            min_cooccur: 3,
            max_roots: 3,
            undefined_on_transport: false,
            cache: Mutex::new(HashMap::new()),
            transport_failures: AtomicUsize::new(0),
            scored_statements: AtomicUsize::new(0),
        }
    }

    pub fn transport_failures(&self) -> usize {
        self.transport_failures.load(Ordering::Relaxed)
    }

    pub fn scored_pairs(&self) -> usize {
        self.cache.lock().expect("cache").len()
    }

    pub fn scored_statements(&self) -> usize {
        self.scored_statements.load(Ordering::Relaxed)
    }

    /// Scores every uncached pair, fanning out across the worker pool.
    fn prefetch(&self, pairs: &[(TermId, TermId)]) -> Result<()> {
        let todo: Vec<(TermId, TermId)> = {
            let cache = self.cache.lock().expect("cache");
            let mut seen = HashSet::new();
            pairs
                .iter()
                .filter(|(a, b)| a != b)
                .map(|&(a, b)| (a.min(b), a.max(b)))
                .filter(|k| !cache.contains_key(k) && seen.insert(*k))
                .collect()
        };
        let results: Vec<Result<((TermId, TermId), PairVotes)>> = todo
            .par_iter()
            .map(|&(lo, hi)| {
                let n = self.corpus.index().cooccurrence_count(lo, hi).min(self.cap);
                self.scored_statements.fetch_add(n, Ordering::Relaxed);
                match tally(self.scorer, self.corpus, lo, hi, &self.filter, self.cap) {
                    Ok(v) => Ok(((lo, hi), v)),
                    Err(e @ Error::Transport { .. }) if self.undefined_on_transport => {
                        warn!(
                            "scoring ({}, {}) failed, treating as undefined: {e}",
                            self.corpus.term_str(lo),
                            self.corpus.term_str(hi)
                        );
                        self.transport_failures.fetch_add(1, Ordering::Relaxed);
                        Ok(((lo, hi), PairVotes::default()))
                    }
                    Err(e) => Err(e),
                }
            })
            .collect();
        let mut cache = self.cache.lock().expect("cache");
        for r in results {
            let (k, v) = r?;
            cache.insert(k, v);
        }
        Ok(())
    }

    /// Directional score of `src → dst`.
    pub fn score(&self, src: TermId, dst: TermId) -> Result<Option<f64>> {
        if src == dst {
            return Err(Error::Precondition("directional score needs two distinct terms".into()));
        }
        self.prefetch(&[(src, dst)])?;
        let key = (src.min(dst), src.max(dst));
        Ok(self.cache.lock().expect("cache")[&key].score(src == key.0))
    }

    fn scores(&self, pairs: &[(TermId, TermId)]) -> Result<Vec<Option<f64>>> {
        self.prefetch(pairs)?;
        let cache = self.cache.lock().expect("cache");
        Ok(pairs
            .iter()
            .map(|&(s, d)| {
                let key = (s.min(d), s.max(d));
                cache.get(&key).and_then(|v| v.score(s == key.0))
            })
            .collect())
    }
}

fn sort_scored(v: &mut ScoredTerms) {
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
}

/// Common parents of all seed topics.
#[derive(Debug, Clone, PartialEq)]
pub struct RootDiscovery {
    /// Mean parent score over topics, best first, capped at `max_roots`.
    pub roots: ScoredTerms,
    /// Per topic, every candidate whose score exceeded the threshold.
    pub parent_lists: Vec<(TermId, ScoredTerms)>,
}

/// Finds terms that score as parents of every topic.
pub fn discover_roots(ctx: &TransferContext, topics: &[TermId]) -> Result<RootDiscovery> {
    if topics.len() < 2 {
        return Err(Error::Precondition(format!(
            "root discovery needs at least 2 seed topics, got {}",
            topics.len()
        )));
    }
    let mut parent_lists = Vec::with_capacity(topics.len());
    for &topic in topics {
        let cands: Vec<TermId> = ctx
            .corpus
            .candidate_terms(topic, ctx.min_cooccur)?
            .into_iter()
            .filter(|c| !topics.contains(c))
            .collect();
        let pairs: Vec<_> = cands.iter().map(|&w| (w, topic)).collect();
        let mut parents: ScoredTerms = cands
            .iter()
            .zip(ctx.scores(&pairs)?)
            .filter_map(|(&w, s)| s.filter(|&s| s > ctx.gamma).map(|s| (w, s)))
            .collect();
        sort_scored(&mut parents);
        debug!("topic {}: {} parent candidates", ctx.corpus.term_str(topic), parents.len());
        parent_lists.push((topic, parents));
    }

    let mut common: BTreeMap<TermId, f64> = parent_lists[0].1.iter().copied().collect();
    for (_, list) in &parent_lists[1..] {
        let here: HashMap<TermId, f64> = list.iter().copied().collect();
        common = common
            .into_iter()
            .filter_map(|(w, s)| here.get(&w).map(|t| (w, s + t)))
            .collect();
    }
    if common.is_empty() {
        let detail = parent_lists
            .iter()
            .map(|(t, list)| {
                let names: Vec<&str> = list.iter().map(|(w, _)| ctx.corpus.term_str(*w)).collect();
                format!("{}: [{}]", ctx.corpus.term_str(*t), names.join(", "))
            })
            .collect::<Vec<_>>()
            .join("; ");
        return Err(Error::NoCommonRoot(detail));
    }
    let n = topics.len() as f64;
    let mut roots: ScoredTerms = common.into_iter().map(|(w, s)| (w, s / n)).collect();
    sort_scored(&mut roots);
    roots.truncate(ctx.max_roots.max(1));
    Ok(RootDiscovery { roots, parent_lists })
}

/// Candidates whose mean score as a child of the roots (undefined counted
/// as 0) exceeds the threshold.
pub fn expand_first_layer(
    ctx: &TransferContext,
    roots: &[TermId],
    candidates: &[TermId],
    exclude: &HashSet<TermId>,
) -> Result<ScoredTerms> {
    if roots.is_empty() {
        return Err(Error::Precondition("first-layer expansion needs at least one root".into()));
    }
    let cands: Vec<TermId> = candidates
        .iter()
        .copied()
        .filter(|w| !exclude.contains(w) && !roots.contains(w))
        .collect();
    let pairs: Vec<_> = cands
        .iter()
        .flat_map(|&w| roots.iter().map(move |&r| (r, w)))
        .collect();
    let scores = ctx.scores(&pairs)?;
    let mut kept: ScoredTerms = cands
        .iter()
        .zip(scores.chunks(roots.len()))
        .map(|(&w, s)| (w, s.iter().map(|x| x.unwrap_or(0.0)).sum::<f64>() / roots.len() as f64))
        .filter(|&(_, s)| s > ctx.gamma)
        .collect();
    sort_scored(&mut kept);
    Ok(kept)
}

/// Co-occurring terms that score as children of `topic`.
pub fn subtopic_candidates(
    ctx: &TransferContext,
    topic: TermId,
    exclude: &HashSet<TermId>,
) -> Result<ScoredTerms> {
    let cands: Vec<TermId> = ctx
        .corpus
        .candidate_terms(topic, ctx.min_cooccur)?
        .into_iter()
        .filter(|w| !exclude.contains(w))
        .collect();
    let pairs: Vec<_> = cands.iter().map(|&w| (topic, w)).collect();
    let mut kept: ScoredTerms = cands
        .iter()
        .zip(ctx.scores(&pairs)?)
        .filter_map(|(&w, s)| s.filter(|&s| s > ctx.gamma).map(|s| (w, s)))
        .collect();
    sort_scored(&mut kept);
    Ok(kept)
}
