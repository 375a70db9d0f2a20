//! End-to-end construction run.
//!
//! Stages run in a fixed order; each stage records counters and notes in the
//! [`RunReport`] and writes its artifacts into the output directory as soon as
//! it finishes, so a failing run leaves everything produced so far in place.
//!
//! | stage            | artifacts                            |
//! |------------------|--------------------------------------|
//! | ingest           | `corpus.bin`                         |
//! | build-relset     | `relset.jsonl`                       |
//! | train-scorer     | (external model)                     |
//! | discover-roots   | `roots.tsv`                          |
//! | expand           | `expanded.json`                      |
//! | train-embed      | `candidates.tsv`, `embeddings.*`     |
//! | cluster          | `matrices/<topic>.tsv`               |
//! | export           | `taxonomy.json`, `metrics.txt`       |
//!
//! `report.json` and `report.txt` are written after every run, failed or not.

mod config;
mod report;

pub use config::{ClusteringSection, RelationSection, RunConfig, RunSection, ScorerSection, Thresholds, SCORER_URL_ENV};
pub use report::{Dropped, Failure, RunReport, StageRecord};

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::Command;

use log::info;
use rayon::prelude::*;

use crate::clustering::{
    build_topic_type_matrix, cocluster, consistency, default_k, ApParams, BiclusterAssignment, TopicTypeMatrix,
};
use crate::corpus::{Corpus, TermId};
use crate::embedding::{cosine, train_on_taxonomy, EmbeddingTable};
use crate::error::{Error, Result};
use crate::eval::{
    coherence_proxy, relation_f1, sibling_distinctiveness, AncestorPairSet, MetricReport, PairMode, SynonymMap,
};
use crate::relation::{
    build_training_set, discover_roots, expand_first_layer, subtopic_candidates, write_samples_jsonl,
    ConfidenceFilter, Mention, RelationScorer, RemoteScorer, ScorerBackend, TrainingSetConfig, TransferContext,
};
use crate::taxonomy::{NodeId, Taxonomy};

/// Pipeline stages in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Ingest,
    BuildRelset,
    TrainScorer,
    DiscoverRoots,
    Expand,
    TrainEmbed,
    Cluster,
    Export,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Ingest,
        Stage::BuildRelset,
        Stage::TrainScorer,
        Stage::DiscoverRoots,
        Stage::Expand,
        Stage::TrainEmbed,
        Stage::Cluster,
        Stage::Export,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::BuildRelset => "build-relset",
            Stage::TrainScorer => "train-scorer",
            Stage::DiscoverRoots => "discover-roots",
            Stage::Expand => "expand",
            Stage::TrainEmbed => "train-embed",
            Stage::Cluster => "cluster",
            Stage::Export => "export",
        }
    }
}

/// Everything a run produced.
#[derive(Debug)]
pub struct RunOutput {
    pub corpus: Corpus,
    pub taxonomy: Taxonomy,
    pub table: Option<EmbeddingTable>,
    /// Topical export JSON, present when the export stage ran.
    pub export: Option<String>,
    pub report: RunReport,
}

/// Full run with the configured scorer.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    run_until(config, Stage::Export)
}

/// Runs every stage up to and including `until`.
pub fn run_until(config: &RunConfig, until: Stage) -> Result<RunOutput> {
    Runner::new(config, None).execute(until)
}

/// Like [`run_until`] with a caller-supplied scorer in place of the
/// configured backend.
pub fn run_with_scorer(config: &RunConfig, scorer: Box<dyn RelationScorer>, until: Stage) -> Result<RunOutput> {
    Runner::new(config, Some(scorer)).execute(until)
}

struct Runner<'a> {
    cfg: &'a RunConfig,
    out: PathBuf,
    injected: Option<Box<dyn RelationScorer>>,
    report: RunReport,
}

/// Items clustered under one parent: existing children first.
struct TopicPlan {
    parent: NodeId,
    items: Vec<TermId>,
    existing: usize,
}

struct TopicClusters {
    matrix: TopicTypeMatrix,
    assignment: BiclusterAssignment,
    scores: Vec<Option<f64>>,
}

impl<'a> Runner<'a> {
    fn new(cfg: &'a RunConfig, injected: Option<Box<dyn RelationScorer>>) -> Self {
        Runner {
            cfg,
            out: cfg.run.output.clone(),
            injected,
            report: RunReport::default(),
        }
    }

    fn execute(mut self, until: Stage) -> Result<RunOutput> {
        if let Err(e) = fs::create_dir_all(&self.out) {
            return Err(Error::Config(format!("cannot create output {}: {e}", self.out.display())));
        }
        let result = self.stages(until);
        if let Err(e) = &result {
            let stage = match e {
                Error::Stage { stage, .. } => stage.to_string(),
                _ => "setup".to_string(),
            };
            self.report.failure = Some(Failure {
                stage,
                error: e.to_string(),
            });
        }
        // The report is best effort on failure; the stage error wins.
        let written = self.write_report();
        match result {
            Ok(mut output) => {
                written?;
                output.report = self.report;
                Ok(output)
            }
            Err(e) => Err(e),
        }
    }

    fn write_report(&self) -> Result<()> {
        fs::write(self.out.join("report.json"), self.report.to_json())?;
        fs::write(self.out.join("report.txt"), self.report.to_text())?;
        Ok(())
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn stages(&mut self, until: Stage) -> Result<RunOutput> {
        let cfg = self.cfg;

        self.report.begin(Stage::Ingest.name());
        let (corpus, mut tax) = self.ingest().map_err(|e| e.in_stage(Stage::Ingest.name()))?;
        let done = |tax: Taxonomy, corpus: Corpus, table: Option<EmbeddingTable>| RunOutput {
            corpus,
            taxonomy: tax,
            table,
            export: None,
            report: RunReport::default(),
        };
        if until == Stage::Ingest {
            return Ok(done(tax, corpus, None));
        }

        self.report.begin(Stage::BuildRelset.name());
        self.build_relset(&corpus, &tax).map_err(|e| e.in_stage(Stage::BuildRelset.name()))?;
        if until == Stage::BuildRelset {
            return Ok(done(tax, corpus, None));
        }

        self.report.begin(Stage::TrainScorer.name());
        let scorer = self.train_scorer().map_err(|e| e.in_stage(Stage::TrainScorer.name()))?;
        if until == Stage::TrainScorer {
            return Ok(done(tax, corpus, None));
        }

        let mut ctx = TransferContext::new(&corpus, scorer.as_ref());
        ctx.filter = ConfidenceFilter::new(cfg.thresholds.delta)?;
        ctx.gamma = cfg.thresholds.gamma;
        ctx.cap = cfg.run.statement_cap;
        ctx.min_cooccur = cfg.relation.min_cooccur;
        ctx.max_roots = cfg.relation.max_roots;
        ctx.undefined_on_transport = matches!(cfg.scorer.backend, ScorerBackend::Remote { .. }) && self.injected.is_none();

        self.report.begin(Stage::DiscoverRoots.name());
        let roots = self
            .discover(&ctx, &mut tax)
            .map_err(|e| e.in_stage(Stage::DiscoverRoots.name()))?;
        if until == Stage::DiscoverRoots {
            return Ok(done(tax, corpus, None));
        }

        self.report.begin(Stage::Expand.name());
        self.expand(&ctx, &mut tax, &roots).map_err(|e| e.in_stage(Stage::Expand.name()))?;
        if until == Stage::Expand {
            return Ok(done(tax, corpus, None));
        }

        let mut table = None;
        let mut candidate_lines = String::from("depth\ttopic\tterm\tscore\n");
        for depth in 1..cfg.run.layers {
            let parents: Vec<NodeId> = tax.ids().filter(|&id| tax.node(id).depth == depth).collect();
            if parents.is_empty() {
                self.report.note(format!("no nodes at depth {depth}; deepening stops"));
                break;
            }

            self.report.begin(Stage::TrainEmbed.name());
            self.report.count("layer", depth as f64);
            let (plans, trained) = self
                .candidates_and_embedding(&ctx, &mut tax, &parents, &mut candidate_lines)
                .map_err(|e| e.in_stage(Stage::TrainEmbed.name()))?;
            fs::write(self.path("candidates.tsv"), &candidate_lines).map_err(|e| Error::from(e).in_stage("train-embed"))?;
            if until == Stage::TrainEmbed {
                return Ok(done(tax, corpus, Some(trained)));
            }

            self.report.begin(Stage::Cluster.name());
            self.report.count("layer", depth as f64);
            let trained = self
                .cluster(&ctx, &mut tax, plans, trained)
                .map_err(|e| e.in_stage(Stage::Cluster.name()))?;
            table = Some(trained);
        }
        if until < Stage::Export {
            return Ok(done(tax, corpus, table));
        }

        self.report.begin(Stage::Export.name());
        let (table, export) = self
            .export(&corpus, &mut tax, table)
            .map_err(|e| e.in_stage(Stage::Export.name()))?;
        let mut out = done(tax, corpus, Some(table));
        out.export = Some(export);
        Ok(out)
    }

    fn ingest(&mut self) -> Result<(Corpus, Taxonomy)> {
        let file = fs::File::open(&self.cfg.run.corpus)?;
        let corpus = Corpus::ingest(BufReader::new(file), self.cfg.run.min_count)?;
        let tax = Taxonomy::load(&fs::read(&self.cfg.run.seed)?)?;
        for id in tax.ids() {
            for term in &tax.node(id).cluster {
                if corpus.vocab().id(term).is_none() {
                    return Err(Error::UnknownTerm(format!(
                        "seed term `{term}` (node `{}`) is not in the corpus vocabulary",
                        tax.name(id)
                    )));
                }
            }
        }
        corpus.write_binary(BufWriter::new(fs::File::create(self.path("corpus.bin"))?))?;
        let r = &mut self.report;
        r.count("documents", corpus.documents().len() as f64);
        r.count("sentences", corpus.sentences().len() as f64);
        r.count("vocabulary", corpus.vocab().len() as f64);
        r.count("seed_nodes", tax.len() as f64);
        r.count("seed_roots", tax.roots().len() as f64);
        info!("ingested {} sentences, {} terms", corpus.sentences().len(), corpus.vocab().len());
        Ok((corpus, tax))
    }

    fn build_relset(&mut self, corpus: &Corpus, tax: &Taxonomy) -> Result<()> {
        let cfg = TrainingSetConfig {
            cap: self.cfg.run.statement_cap,
            random_negatives: self.cfg.relation.random_negatives,
            seed: self.cfg.run.rng_seed,
        };
        let out = BufWriter::new(fs::File::create(self.path("relset.jsonl"))?);
        match build_training_set(tax, corpus, &cfg) {
            Ok(set) => {
                write_samples_jsonl(corpus, &set.samples, out)?;
                let r = &mut self.report;
                r.count("samples", set.samples.len() as f64);
                r.count("positives", set.positives as f64);
                r.count("sibling_negatives", set.sibling_negatives as f64);
                r.count("random_negatives", set.random_negatives as f64);
                for w in set.warnings {
                    r.note(w);
                }
            }
            // A seed of bare topics teaches nothing but can still be expanded
            // by a pre-trained or rule-based scorer.
            Err(Error::Precondition(m)) => {
                self.report.count("samples", 0.0);
                self.report.note(format!("{m}; training set left empty"));
            }
            Err(e) => return Err(e),
        }
        Ok(())
    }

    fn train_scorer(&mut self) -> Result<Box<dyn RelationScorer>> {
        if let Some(s) = self.injected.take() {
            self.report.note(format!("caller-supplied scorer: {}", s.describe()));
            return Ok(s);
        }
        let section = &self.cfg.scorer;
        match &section.backend {
            ScorerBackend::Remote { url } => {
                if let Some(cmd) = &section.train_command {
                    let status = Command::new("sh")
                        .arg("-c")
                        .arg(cmd)
                        .env("TAXOFORGE_RELSET", self.path("relset.jsonl"))
                        .status()?;
                    if !status.success() {
                        return Err(Error::Precondition(format!("train command `{cmd}` failed: {status}")));
                    }
                    self.report.note(format!("ran train command `{cmd}`"));
                } else {
                    self.report.note("no train_command; using the service as deployed");
                }
                let remote = RemoteScorer::new(url);
                let health = remote.health()?;
                self.report.count("embedding_dim", health.dim as f64);
                self.report.note(format!("service model `{}`", health.model));
                Ok(Box::new(remote))
            }
            other => {
                let scorer = other.connect()?;
                self.report.note(format!("{} needs no training", scorer.describe()));
                Ok(scorer)
            }
        }
    }

    /// Returns the term ids of the root set.
    fn discover(&mut self, ctx: &TransferContext, tax: &mut Taxonomy) -> Result<Vec<TermId>> {
        let vocab = ctx.corpus.vocab();
        let roots: Vec<TermId> = if tax.roots().len() == 1 {
            let root = tax.roots()[0];
            self.report.note(format!("single seed root `{}`; discovery skipped", tax.name(root)));
            vec![vocab.require(tax.name(root))?]
        } else {
            let topics: Vec<TermId> = tax
                .roots()
                .iter()
                .map(|&r| vocab.require(tax.name(r)))
                .collect::<Result<_>>()?;
            let found = discover_roots(ctx, &topics)?;
            for (topic, list) in &found.parent_lists {
                self.report
                    .count(&format!("parents.{}", vocab.term(*topic)), list.len() as f64);
            }
            let best = vocab.term(found.roots[0].0);
            let root = tax.reroot(best)?;
            for &(w, _) in &found.roots[1..] {
                if !tax.add_cluster_term(root, vocab.term(w)) {
                    self.report.drop_item(vocab.term(w), "secondary root already owned by another node");
                }
            }
            for (w, s) in &found.roots {
                self.report.note(format!("root `{}` mean score {s:.4}", vocab.term(*w)));
            }
            found.roots.iter().map(|&(w, _)| w).collect()
        };
        self.report.count("roots_found", roots.len() as f64);
        let mut tsv = String::new();
        for &r in &roots {
            let _ = writeln!(tsv, "{}", vocab.term(r));
        }
        fs::write(self.path("roots.tsv"), tsv)?;
        Ok(roots)
    }

    fn expand(&mut self, ctx: &TransferContext, tax: &mut Taxonomy, roots: &[TermId]) -> Result<()> {
        let vocab = ctx.corpus.vocab();
        let mut pool = Vec::new();
        for &r in roots {
            pool.extend(ctx.corpus.candidate_terms(r, ctx.min_cooccur)?);
        }
        pool.sort_unstable();
        pool.dedup();
        let exclude = claimed_terms(tax, ctx.corpus);
        let kept = expand_first_layer(ctx, roots, &pool, &exclude)?;
        let root = tax.roots()[0];
        for &(w, s) in &kept {
            tax.attach(root, vocab.term(w))?;
            self.report.note(format!("topic `{}` score {s:.4}", vocab.term(w)));
        }
        self.report.count("candidates", pool.iter().filter(|w| !exclude.contains(w)).count() as f64);
        self.report.count("topics_attached", kept.len() as f64);
        self.report.count("scored_pairs", ctx.scored_pairs() as f64);
        self.report.count("transport_failures", ctx.transport_failures() as f64);
        fs::write(self.path("expanded.json"), tax.to_json()?)?;
        Ok(())
    }

    fn candidates_and_embedding(
        &mut self,
        ctx: &TransferContext,
        tax: &mut Taxonomy,
        parents: &[NodeId],
        lines: &mut String,
    ) -> Result<(Vec<TopicPlan>, EmbeddingTable)> {
        let vocab = ctx.corpus.vocab();
        let exclude = claimed_terms(tax, ctx.corpus);
        // Each candidate goes to the parent that scores it highest.
        let mut claims: BTreeMap<TermId, (usize, f64)> = BTreeMap::new();
        let mut raw = Vec::with_capacity(parents.len());
        for (pi, &p) in parents.iter().enumerate() {
            let found = subtopic_candidates(ctx, vocab.require(tax.name(p))?, &exclude)?;
            for &(w, s) in &found {
                match claims.get(&w) {
                    Some(&(_, best)) if best >= s => {}
                    _ => {
                        claims.insert(w, (pi, s));
                    }
                }
            }
            raw.push(found);
        }
        let mut per_parent: Vec<Vec<TermId>> = vec![Vec::new(); parents.len()];
        let mut total = 0;
        for (pi, found) in raw.iter().enumerate() {
            for &(w, s) in found {
                let (owner, _) = claims[&w];
                if owner == pi {
                    per_parent[pi].push(w);
                    total += 1;
                    let _ = writeln!(lines, "{}\t{}\t{}\t{s:.6}", tax.node(parents[pi]).depth, tax.name(parents[pi]), vocab.term(w));
                } else {
                    self.report.drop_item(
                        format!("{}/{}", tax.name(parents[pi]), vocab.term(w)),
                        format!("claimed by `{}` with a higher score", tax.name(parents[owner])),
                    );
                }
            }
        }
        self.report.count("subtopic_candidates", total as f64);

        let tcfg = self.cfg.training_config();
        let trained = train_on_taxonomy(ctx.corpus, tax, &tcfg)?;
        let grown: usize = trained.clusters.iter().map(|c| c.len().saturating_sub(1)).sum();
        self.report.count("concepts", trained.table.n_concepts() as f64);
        self.report.count("epochs", trained.history.len() as f64);
        if let Some(last) = trained.history.last() {
            self.report.count("final_loss", last.loss);
        }
        self.report.count("cluster_terms", grown as f64);
        self.report.note("topical filter uses embeddings trained over the expanded structure");
        trained.table.write_binary(BufWriter::new(fs::File::create(self.path("embeddings.bin"))?))?;

        // Topical constraint: a candidate must be at least as close to its
        // own topic as to any sibling topic, compared through the topic
        // names' word vectors. Concept vectors of a parent compete with
        // those of its children, so they are a poor yardstick here.
        let table = trained.table;
        let topic_vec = |id: NodeId| -> Result<&[f64]> { Ok(table.word(vocab.require(tax.name(id))?)) };
        let mut plans = Vec::with_capacity(parents.len());
        let mut filtered_out = 0;
        for (pi, &p) in parents.iter().enumerate() {
            let own = topic_vec(p)?;
            let mut items: Vec<TermId> = tax
                .children(p)
                .iter()
                .filter_map(|&c| vocab.id(tax.name(c)))
                .collect();
            let existing = items.len();
            for &w in &per_parent[pi] {
                let u = table.word(w);
                let mine = cosine(u, own);
                let closer = tax
                    .siblings(p)
                    .iter()
                    .filter(|&&s| s != p)
                    .find(|&&s| topic_vec(s).is_ok_and(|v| cosine(u, v) > mine));
                match closer {
                    Some(&s) => {
                        filtered_out += 1;
                        self.report.drop_item(
                            format!("{}/{}", tax.name(p), vocab.term(w)),
                            format!("closer to sibling topic `{}`", tax.name(s)),
                        );
                    }
                    None => items.push(w),
                }
            }
            plans.push(TopicPlan {
                parent: p,
                items,
                existing,
            });
        }
        self.report.count("topical_filter_dropped", filtered_out as f64);
        Ok((plans, table))
    }

    fn cluster(
        &mut self,
        ctx: &TransferContext,
        tax: &mut Taxonomy,
        plans: Vec<TopicPlan>,
        mut table: EmbeddingTable,
    ) -> Result<EmbeddingTable> {
        let corpus = ctx.corpus;
        let vocab = corpus.vocab();
        let ap = self.cfg.clustering.ap_params();
        let window = self.cfg.embedding.window;
        let (k_override, seed) = (self.cfg.clustering.k, self.cfg.clustering.seed);
        let threshold = self.cfg.thresholds.consistency;

        let active: Vec<&TopicPlan> = plans.iter().filter(|p| p.items.len() > p.existing).collect();
        for p in plans.iter().filter(|p| p.items.len() == p.existing) {
            self.report.note(format!("`{}`: no subtopic candidates", tax.name(p.parent)));
        }
        let results: Vec<Result<TopicClusters>> = active
            .par_iter()
            .map(|plan| {
                let meaning: Vec<Vec<f64>> = plan.items.iter().map(|&t| table.word(t).to_vec()).collect();
                let types: Vec<Vec<f64>> = plan
                    .items
                    .iter()
                    .map(|&t| type_vector(t, corpus, &table, ctx.scorer, window, ctx.cap))
                    .collect::<Result<_>>()?;
                cluster_items(&meaning, &types, &ap, k_override, seed)
            })
            .collect();

        fs::create_dir_all(self.path("matrices"))?;
        let mut created: Vec<(NodeId, Vec<TermId>)> = Vec::new();
        let (mut retained_cols, mut dropped_cols) = (0, 0);
        for (plan, result) in active.iter().zip(results) {
            let tc = result?;
            let names: Vec<&str> = plan.items.iter().map(|&t| vocab.term(t)).collect();
            fs::write(self.path(&format!("matrices/{}.tsv", tax.name(plan.parent))), tc.matrix.to_tsv(&names))?;
            for j in 0..tc.matrix.cols() {
                let members = tc.matrix.column_members(j);
                let bic = tc.assignment.col_labels[j];
                let score = tc.scores[bic];
                if !score.is_some_and(|s| s > threshold) {
                    dropped_cols += 1;
                    let why = match score {
                        Some(s) => format!("bicluster consistency {s:.4} not above {threshold}"),
                        None => "bicluster has no rows".to_string(),
                    };
                    for &m in members.iter().filter(|&&m| m >= plan.existing) {
                        self.report.drop_item(format!("{}/{}", tax.name(plan.parent), names[m]), why.clone());
                    }
                    continue;
                }
                retained_cols += 1;
                let children: Vec<usize> = members.iter().copied().filter(|&m| m < plan.existing).collect();
                let others: Vec<usize> = members.iter().copied().filter(|&m| m >= plan.existing).collect();
                if children.is_empty() {
                    let head = *others
                        .iter()
                        .max_by(|&&a, &&b| {
                            let (ta, tb) = (plan.items[a], plan.items[b]);
                            vocab.count(ta).cmp(&vocab.count(tb)).then(tb.cmp(&ta))
                        })
                        .expect("non-empty column");
                    let node = tax.attach(plan.parent, names[head])?;
                    for &m in others.iter().filter(|&&m| m != head) {
                        tax.claim_cluster_term(node, names[m]);
                    }
                    created.push((node, others.iter().map(|&m| plan.items[m]).collect()));
                } else {
                    for &m in &others {
                        let u = table.word(plan.items[m]);
                        let nearest = *children
                            .iter()
                            .max_by(|&&a, &&b| {
                                cosine(u, table.word(plan.items[a]))
                                    .total_cmp(&cosine(u, table.word(plan.items[b])))
                                    .then(b.cmp(&a))
                            })
                            .expect("non-empty");
                        let child = tax.find(names[nearest]).expect("existing child");
                        tax.claim_cluster_term(child, names[m]);
                    }
                }
            }
        }

        for (node, members) in &created {
            if table.n_concepts() != node.index() {
                return Err(Error::Embedding(format!(
                    "concept rows out of step with nodes ({} vs {})",
                    table.n_concepts(),
                    node.index()
                )));
            }
            let mut centroid = vec![0.0; table.dim()];
            for &m in members {
                for (c, x) in centroid.iter_mut().zip(table.word(m)) {
                    *c += x / members.len() as f64;
                }
            }
            table.push_concept(&centroid)?;
        }
        self.report.count("topics_clustered", active.len() as f64);
        self.report.count("columns_retained", retained_cols as f64);
        self.report.count("columns_dropped", dropped_cols as f64);
        self.report.count("subtopics_attached", created.len() as f64);
        Ok(table)
    }

    fn export(
        &mut self,
        corpus: &Corpus,
        tax: &mut Taxonomy,
        table: Option<EmbeddingTable>,
    ) -> Result<(EmbeddingTable, String)> {
        let vocab = corpus.vocab();
        let table = match table {
            Some(t) => t,
            None => {
                self.report.note("no subtopic layer ran; training the embedding for export");
                train_on_taxonomy(corpus, tax, &self.cfg.training_config())?.table
            }
        };
        // Store clusters in export order so metrics see the same ranking.
        for id in tax.ids().collect::<Vec<_>>() {
            let concept = table.concept(id.index()).ok_or_else(|| Error::MissingEmbedding(tax.name(id).into()))?;
            let mut scored: Vec<(f64, TermId, String)> = Vec::new();
            for term in &tax.node(id).cluster {
                let t = vocab.require(term)?;
                scored.push((cosine(table.word(t), concept), t, term.clone()));
            }
            scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            tax.reorder_cluster(id, scored.into_iter().map(|(_, _, s)| s).collect())?;
        }
        tax.validate()?;
        let export = tax.export(&table, vocab, self.cfg.run.top_k)?;
        fs::write(self.path("taxonomy.json"), &export)?;
        table.write_binary(BufWriter::new(fs::File::create(self.path("embeddings.bin"))?))?;
        table.write_text(vocab, BufWriter::new(fs::File::create(self.path("embeddings.txt"))?))?;

        let f1 = match &self.cfg.run.gold {
            Some(path) => {
                let syn = SynonymMap::default();
                let gold = AncestorPairSet::parse(&fs::read_to_string(path)?, &syn)?;
                let pred = AncestorPairSet::from_taxonomy(tax, PairMode::Transitive, &syn);
                Some(relation_f1(&pred, &gold)?)
            }
            None => None,
        };
        let metrics = MetricReport {
            f1,
            sibling_distinctiveness: sibling_distinctiveness(tax, self.cfg.run.top_k),
            coherence: Some(coherence_proxy(tax, corpus, self.cfg.run.top_k)),
        };
        fs::write(self.path("metrics.txt"), metrics.to_kv())?;
        self.report.count("nodes", tax.len() as f64);
        self.report.count("max_depth", tax.ids().map(|id| tax.node(id).depth).max().unwrap_or(0) as f64);
        if let Some(f) = &metrics.f1 {
            self.report.count("relation_f1", f.f1);
        }
        self.report.metrics = Some(metrics);
        Ok((table, export))
    }
}

/// Term ids already used as node names or cluster terms.
fn claimed_terms(tax: &Taxonomy, corpus: &Corpus) -> HashSet<TermId> {
    tax.ids()
        .flat_map(|id| tax.node(id).cluster.iter())
        .filter_map(|t| corpus.vocab().id(t))
        .collect()
}

/// Contextual type signature of a term: the scorer's embedding when it has
/// one, otherwise the mean context vector over windows around its mentions.
fn type_vector(
    term: TermId,
    corpus: &Corpus,
    table: &EmbeddingTable,
    scorer: &dyn RelationScorer,
    window: usize,
    cap: usize,
) -> Result<Vec<f64>> {
    let postings: Vec<_> = corpus.index().postings(term).iter().take(cap).copied().collect();
    let positions: Vec<(usize, usize)> = postings
        .iter()
        .map(|&sid| {
            let s = corpus.sentence(sid);
            (sid as usize, s.tokens.iter().position(|&t| t == term).expect("posting"))
        })
        .collect();
    let mentions: Vec<Mention> = positions
        .iter()
        .map(|&(sid, pos)| Mention {
            tokens: corpus.tokens_str(&corpus.sentences()[sid].tokens).into_iter().map(String::from).collect(),
            pos,
        })
        .collect();
    if let Some(v) = scorer.embed_term(corpus.term_str(term), &mentions)? {
        return Ok(v);
    }
    let mut acc = vec![0.0; table.dim()];
    let mut n = 0usize;
    for &(sid, pos) in &positions {
        let tokens = &corpus.sentences()[sid].tokens;
        let lo = pos.saturating_sub(window);
        let hi = (pos + window).min(tokens.len() - 1);
        for (j, &t) in tokens.iter().enumerate().take(hi + 1).skip(lo) {
            if j != pos {
                for (a, x) in acc.iter_mut().zip(table.context(t)) {
                    *a += x;
                }
                n += 1;
            }
        }
    }
    if n == 0 {
        return Ok(table.context(term).to_vec());
    }
    acc.iter_mut().for_each(|a| *a /= n as f64);
    Ok(acc)
}

fn cluster_items(
    meaning: &[Vec<f64>],
    types: &[Vec<f64>],
    ap: &ApParams,
    k_override: Option<usize>,
    seed: u64,
) -> Result<TopicClusters> {
    let (matrix, _, _) = build_topic_type_matrix(meaning, types, ap)?;
    let cap = matrix.rows().min(matrix.cols());
    let k = k_override.unwrap_or_else(|| default_k(matrix.rows(), matrix.cols())).min(cap).max(1);
    let assignment = cocluster(&matrix, k, seed)?;
    let scores = (0..assignment.k)
        .map(|c| consistency(&matrix, &assignment, c))
        .collect::<Result<_>>()?;
    Ok(TopicClusters {
        matrix,
        assignment,
        scores,
    })
}

/// Writes the synthetic planted corpus, seed, oracle table, gold pairs and a
/// ready-to-run config into `dir`. Returns the config path.
pub fn write_synthetic_workspace(dir: &Path, synth: &crate::synthetic::SyntheticCorpus, backend: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("corpus.txt"), &synth.text)?;
    fs::write(dir.join("seed.json"), &synth.seed)?;
    fs::write(dir.join("planted.json"), &synth.planted)?;
    fs::write(dir.join("oracle.tsv"), synth.oracle.to_text())?;
    fs::write(dir.join("gold.tsv"), synth.gold.to_text())?;
    let scorer = match backend {
        "oracle" => "kind = \"oracle\"\npath = \"oracle.tsv\"\n".to_string(),
        "heuristic" => "kind = \"heuristic\"\n".to_string(),
        other => return Err(Error::Config(format!("synthetic workspace backend must be oracle or heuristic, got `{other}`"))),
    };
    let config = format!(
        "[run]\ncorpus = \"corpus.txt\"\nseed = \"seed.json\"\noutput = \"out\"\ngold = \"gold.tsv\"\n\n\
         [scorer]\n{scorer}\n[embedding]\ndim = 32\nepochs = 30\nseed = 1\n"
    );
    let path = dir.join("config.toml");
    fs::write(&path, config)?;
    Ok(path)
}
