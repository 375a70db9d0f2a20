use std::collections::HashSet;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

use log::{debug, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, TermId};
use crate::error::{Error, Result};
use crate::taxonomy::{NodeId, Taxonomy};

use super::objective::logistic_terms;
use super::{cosine, Block, EmbeddingTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub dim: usize,
    /// Local context window h on each side of the center word.
    pub window: usize,
    pub lambda_local: f64,
    pub lambda_doc: f64,
    pub lambda_prox: f64,
    /// Sampled negatives per positive (K).
    pub negatives: usize,
    pub lr_start: f64,
    pub lr_end: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Single-threaded, bit-reproducible training.
    pub deterministic: bool,
    /// Workers for lock-free updates when not deterministic.
    pub threads: usize,
    /// Distinctiveness margin over the runner-up concept.
    pub margin: f64,
    pub grow_clusters: bool,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            dim: 100,
            window: 5,
            lambda_local: 1.0,
            lambda_doc: 1.5,
            lambda_prox: 1.0,
            negatives: 5,
            lr_start: 0.025,
            lr_end: 0.0001,
            epochs: 10,
            seed: 1,
            deterministic: true,
            threads: 4,
            margin: 0.05,
            grow_clusters: true,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("embedding: {m}")));
        if self.dim == 0 {
            return bad("dim must be at least 1");
        }
        if self.window == 0 {
            return bad("window must be at least 1");
        }
        if self.negatives == 0 {
            return bad("negatives must be at least 1");
        }
        if [self.lambda_local, self.lambda_doc, self.lambda_prox]
            .iter()
            .any(|l| !(l.is_finite() && *l >= 0.0))
        {
            return bad("loss weights must be finite and non-negative");
        }
        if !(self.lr_start > 0.0 && self.lr_end >= 0.0 && self.lr_end <= self.lr_start) {
            return bad("learning rate must decay from a positive start");
        }
        if !self.margin.is_finite() || self.margin < 0.0 {
            return bad("margin must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub updates: usize,
    pub learning_rate: f64,
    pub grown: usize,
}

#[derive(Debug, Clone)]
pub struct TrainedEmbedding {
    pub table: EmbeddingTable,
    /// Per concept row: the cluster after training, name first.
    pub clusters: Vec<Vec<TermId>>,
    pub history: Vec<EpochStats>,
}

/// Row access shared by the sequential and lock-free training paths.
trait Params {
    fn load(&self, block: Block, row: usize, out: &mut [f64]);
    fn axpy(&mut self, block: Block, row: usize, alpha: f64, x: &[f64]);
}

impl Params for EmbeddingTable {
    fn load(&self, block: Block, row: usize, out: &mut [f64]) {
        out.copy_from_slice(self.row(block, row).expect("row in range"));
    }

    fn axpy(&mut self, block: Block, row: usize, alpha: f64, x: &[f64]) {
        for (p, xi) in self.row_mut(block, row).expect("row in range").iter_mut().zip(x) {
            *p += alpha * xi;
        }
    }
}

const _: () = assert!(std::mem::align_of::<AtomicU64>() == std::mem::align_of::<f64>());
const _: () = assert!(std::mem::size_of::<AtomicU64>() == std::mem::size_of::<f64>());

fn as_atomic(slice: &mut [f64]) -> &[AtomicU64] {
    // SAFETY: AtomicU64 has the size and alignment of f64 (checked above) and
    // the exclusive borrow guarantees no non-atomic access while the view lives.
    unsafe { &*(slice as *mut [f64] as *const [AtomicU64]) }
}

/// Hogwild view: relaxed atomic loads and stores, no read-modify-write
/// guarantee between workers.
#[derive(Clone, Copy)]
struct SharedParams<'a> {
    dim: usize,
    blocks: [&'a [AtomicU64]; 4],
}

impl SharedParams<'_> {
    fn slot(&self, block: Block, row: usize) -> &[AtomicU64] {
        let b = match block {
            Block::Word => 0,
            Block::Context => 1,
            Block::Doc => 2,
            Block::Concept => 3,
        };
        &self.blocks[b][row * self.dim..(row + 1) * self.dim]
    }
}

impl Params for SharedParams<'_> {
    fn load(&self, block: Block, row: usize, out: &mut [f64]) {
        for (o, a) in out.iter_mut().zip(self.slot(block, row)) {
            *o = f64::from_bits(a.load(Ordering::Relaxed));
        }
    }

    fn axpy(&mut self, block: Block, row: usize, alpha: f64, x: &[f64]) {
        for (a, xi) in self.slot(block, row).iter().zip(x) {
            let v = f64::from_bits(a.load(Ordering::Relaxed)) + alpha * xi;
            a.store(v.to_bits(), Ordering::Relaxed);
        }
    }
}

/// Cumulative unigram^0.75 table.
struct NoiseSampler {
    cumulative: Vec<f64>,
}

impl NoiseSampler {
    fn new(corpus: &Corpus) -> Self {
        let mut acc = 0.0;
        let cumulative = corpus
            .vocab()
            .iter()
            .map(|(_, _, c)| {
                acc += (c as f64).powf(0.75);
                acc
            })
            .collect();
        NoiseSampler { cumulative }
    }

    fn sample(&self, rng: &mut impl Rng) -> usize {
        let total = *self.cumulative.last().expect("non-empty vocabulary");
        let x = rng.gen::<f64>() * total;
        self.cumulative
            .partition_point(|&c| c <= x)
            .min(self.cumulative.len() - 1)
    }
}

fn uniform_excluding(rng: &mut impl Rng, n: usize, exclude: usize) -> usize {
    let r = rng.gen_range(0..n - 1);
    if r >= exclude {
        r + 1
    } else {
        r
    }
}

struct Scratch {
    input: Vec<f64>,
    targets: Vec<Vec<f64>>,
    coeffs: Vec<f64>,
    grad: Vec<f64>,
    rows: Vec<usize>,
}

impl Scratch {
    fn new(dim: usize, max_targets: usize) -> Self {
        Scratch {
            input: vec![0.0; dim],
            targets: vec![vec![0.0; dim]; max_targets],
            coeffs: Vec::with_capacity(max_targets),
            grad: vec![0.0; dim],
            rows: Vec::with_capacity(max_targets),
        }
    }
}

/// One SGD step on a logistic group whose target rows are `scratch.rows`
/// (positive first). Uses the same coefficients as `loss_and_grad`.
fn sgd_group<P: Params>(params: &mut P, s: &mut Scratch, input: (Block, usize), tblock: Block, weight: f64, lr: f64) -> f64 {
    params.load(input.0, input.1, &mut s.input);
    let n = s.rows.len();
    for (k, &r) in s.rows.iter().enumerate() {
        params.load(tblock, r, &mut s.targets[k]);
    }
    let loss = logistic_terms(
        &s.input,
        &s.targets[0],
        s.targets[1..n].iter().map(Vec::as_slice),
        weight,
        &mut s.coeffs,
    );
    s.grad.iter_mut().for_each(|g| *g = 0.0);
    for k in 0..n {
        for (g, t) in s.grad.iter_mut().zip(&s.targets[k]) {
            *g += s.coeffs[k] * t;
        }
    }
    for k in 0..n {
        params.axpy(tblock, s.rows[k], -lr * s.coeffs[k], &s.input);
    }
    params.axpy(input.0, input.1, -lr, &s.grad);
    loss
}

struct Context<'a> {
    docs: &'a [Vec<TermId>],
    concept_of: &'a [Option<usize>],
    n_concepts: usize,
    sampler: &'a NoiseSampler,
    config: &'a TrainingConfig,
    total_updates: usize,
}

impl Context<'_> {
    fn learning_rate(&self, done: usize) -> f64 {
        let c = self.config;
        let frac = (done as f64 / self.total_updates.max(1) as f64).min(1.0);
        c.lr_start - (c.lr_start - c.lr_end) * frac
    }
}

fn run_docs<P: Params>(
    params: &mut P,
    ctx: &Context<'_>,
    docs: std::ops::Range<usize>,
    rng: &mut ChaCha8Rng,
    progress: &AtomicUsize,
) -> f64 {
    let cfg = ctx.config;
    let n_docs = ctx.docs.len();
    let mut s = Scratch::new(cfg.dim, cfg.negatives + 1);
    let mut loss = 0.0;
    for d in docs {
        let tokens = &ctx.docs[d];
        for i in 0..tokens.len() {
            let w = tokens[i];
            let lr = ctx.learning_rate(progress.fetch_add(1, Ordering::Relaxed));
            if cfg.lambda_local > 0.0 {
                let lo = i.saturating_sub(cfg.window);
                let hi = (i + cfg.window).min(tokens.len() - 1);
                for j in lo..=hi {
                    if j == i {
                        continue;
                    }
                    let context = tokens[j];
                    s.rows.clear();
                    s.rows.push(context.index());
                    for _ in 0..cfg.negatives {
                        let neg = ctx.sampler.sample(rng);
                        if neg != context.index() {
                            s.rows.push(neg);
                        }
                    }
                    loss += sgd_group(params, &mut s, (Block::Word, w.index()), Block::Context, cfg.lambda_local, lr);
                }
            }
            if cfg.lambda_doc > 0.0 {
                s.rows.clear();
                s.rows.push(d);
                if n_docs > 1 {
                    for _ in 0..cfg.negatives {
                        s.rows.push(uniform_excluding(rng, n_docs, d));
                    }
                }
                loss += sgd_group(params, &mut s, (Block::Word, w.index()), Block::Doc, cfg.lambda_doc, lr);
            }
            if cfg.lambda_prox > 0.0 {
                if let Some(e) = ctx.concept_of[w.index()] {
                    s.rows.clear();
                    s.rows.push(e);
                    if ctx.n_concepts > 1 {
                        for _ in 0..cfg.negatives {
                            s.rows.push(uniform_excluding(rng, ctx.n_concepts, e));
                        }
                    }
                    loss += sgd_group(params, &mut s, (Block::Word, w.index()), Block::Concept, cfg.lambda_prox, lr);
                }
            }
        }
    }
    loss
}

fn membership(n_words: usize, clusters: &[Vec<TermId>]) -> Vec<Option<usize>> {
    let mut of = vec![None; n_words];
    for (e, cluster) in clusters.iter().enumerate() {
        for t in cluster {
            of[t.index()] = Some(e);
        }
    }
    of
}

/// Trains the joint embedding. `clusters[e]` seeds concept row `e` (its name
/// first); after every epoch each concept may gain one distinctive word.
pub fn train(corpus: &Corpus, clusters: Vec<Vec<TermId>>, config: &TrainingConfig) -> Result<TrainedEmbedding> {
    config.validate()?;
    let n_words = corpus.vocab().len();
    let n_docs = corpus.documents().len();
    let mut clusters = clusters;
    let mut seen = HashSet::new();
    for cluster in &clusters {
        for t in cluster {
            if t.index() >= n_words {
                return Err(Error::UnknownTerm(format!("#{}", t.0)));
            }
            if !seen.insert(*t) {
                return Err(Error::Embedding(format!(
                    "term `{}` appears in two concept clusters",
                    corpus.term_str(*t)
                )));
            }
        }
    }
    let mut table = EmbeddingTable::init(n_words, n_docs.max(1), clusters.len().max(1), config.dim, config.seed)?;
    let docs: Vec<Vec<TermId>> = (0..n_docs as u32).map(|d| corpus.document_tokens(d).collect()).collect();
    let tokens_per_epoch: usize = docs.iter().map(Vec::len).sum();
    let sampler = NoiseSampler::new(corpus);
    let progress = AtomicUsize::new(0);
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let concept_of = membership(n_words, &clusters);
        let ctx = Context {
            docs: &docs,
            concept_of: &concept_of,
            n_concepts: clusters.len(),
            sampler: &sampler,
            config,
            total_updates: tokens_per_epoch * config.epochs,
        };
        let before = progress.load(Ordering::Relaxed);
        let loss = if config.deterministic || config.threads <= 1 {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ ((epoch as u64 + 1) << 32));
            run_docs(&mut table, &ctx, 0..docs.len(), &mut rng, &progress)
        } else {
            run_hogwild(&mut table, &ctx, epoch, &progress)
        };
        if !table.is_finite() {
            return Err(Error::Embedding(format!("non-finite parameters after epoch {epoch}")));
        }
        let grown = if config.grow_clusters {
            grow_clusters(&table, &mut clusters, config.margin)
                .iter()
                .filter(|g| g.is_some())
                .count()
        } else {
            0
        };
        let updates = progress.load(Ordering::Relaxed) - before;
        let stats = EpochStats {
            epoch,
            loss,
            updates,
            learning_rate: ctx.learning_rate(progress.load(Ordering::Relaxed)),
            grown,
        };
        debug!("epoch {epoch}: loss {loss:.4} over {updates} tokens, {grown} cluster terms added");
        history.push(stats);
    }
    Ok(TrainedEmbedding {
        table,
        clusters,
        history,
    })
}

fn run_hogwild(table: &mut EmbeddingTable, ctx: &Context<'_>, epoch: usize, progress: &AtomicUsize) -> f64 {
    let dim = table.dim;
    let shared = SharedParams {
        dim,
        blocks: [
            as_atomic(&mut table.u_word),
            as_atomic(&mut table.v_word),
            as_atomic(&mut table.u_doc),
            as_atomic(&mut table.u_concept),
        ],
    };
    let workers = ctx.config.threads.min(ctx.docs.len()).max(1);
    let chunk = ctx.docs.len().div_ceil(workers);
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let mut params = shared;
                let range = (w * chunk).min(ctx.docs.len())..((w + 1) * chunk).min(ctx.docs.len());
                let seed = ctx.config.seed ^ ((epoch as u64 + 1) << 32) ^ (w as u64 + 1);
                scope.spawn(move || {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    run_docs(&mut params, ctx, range, &mut rng, progress)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).sum()
    })
}

/// Adds at most one unassigned word to every concept: the word with the
/// highest cosine to that concept among words whose cosine to it beats every
/// other concept by more than `margin`. Returns the word added per concept.
pub fn grow_clusters(table: &EmbeddingTable, clusters: &mut [Vec<TermId>], margin: f64) -> Vec<Option<TermId>> {
    let n_concepts = clusters.len();
    let assigned: HashSet<TermId> = clusters.iter().flatten().copied().collect();
    let mut best: Vec<Option<(f64, TermId)>> = vec![None; n_concepts];
    let concepts: Vec<&[f64]> = (0..n_concepts)
        .map(|e| table.concept(e).expect("concept row per cluster"))
        .collect();
    let mut cos = vec![0.0; n_concepts];
    for w in 0..table.n_words() {
        let t = TermId(w as u32);
        if assigned.contains(&t) {
            continue;
        }
        let u = table.word(t);
        for (c, v) in cos.iter_mut().zip(&concepts) {
            *c = cosine(u, v);
        }
        let mut top = 0;
        for e in 1..n_concepts {
            if cos[e] > cos[top] {
                top = e;
            }
        }
        let runner_up = (0..n_concepts)
            .filter(|&e| e != top)
            .map(|e| cos[e])
            .fold(f64::NEG_INFINITY, f64::max);
        if cos[top] - runner_up <= margin {
            continue;
        }
        match best[top] {
            Some((score, _)) if score >= cos[top] => {}
            _ => best[top] = Some((cos[top], t)),
        }
    }
    best.iter()
        .zip(clusters.iter_mut())
        .map(|(b, cluster)| {
            b.map(|(_, t)| {
                cluster.push(t);
                t
            })
        })
        .collect()
}

/// A concept's cluster terms by cosine to the concept vector, ties by id.
pub fn top_terms(table: &EmbeddingTable, concept: usize, cluster: &[TermId], k: usize) -> Result<Vec<TermId>> {
    let c = table
        .concept(concept)
        .ok_or_else(|| Error::UnknownNode(format!("concept row {concept}")))?;
    let mut scored: Vec<(f64, TermId)> = cluster.iter().map(|&t| (cosine(table.word(t), c), t)).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    Ok(scored.into_iter().take(k).map(|(_, t)| t).collect())
}

/// Trains with one concept row per taxonomy node (row index = node id) and
/// writes grown clusters back into the taxonomy.
pub fn train_on_taxonomy(corpus: &Corpus, taxonomy: &mut Taxonomy, config: &TrainingConfig) -> Result<TrainedEmbedding> {
    let vocab = corpus.vocab();
    let mut clusters = Vec::with_capacity(taxonomy.len());
    for id in taxonomy.ids() {
        let node = taxonomy.node(id);
        let mut cluster = vec![vocab.require(&node.name)?];
        for term in node.cluster.iter().filter(|t| **t != node.name) {
            match vocab.id(term) {
                Some(t) => cluster.push(t),
                None => warn!("cluster term `{term}` of `{}` not in vocabulary; ignored", node.name),
            }
        }
        clusters.push(cluster);
    }
    let trained = train(corpus, clusters, config)?;
    for (i, cluster) in trained.clusters.iter().enumerate() {
        let id = NodeId(i as u32);
        for &t in cluster {
            taxonomy.add_cluster_term(id, vocab.term(t));
        }
    }
    Ok(trained)
}
