use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::clustering::ApParams;
use crate::embedding::TrainingConfig;
use crate::error::{Error, Result};
use crate::relation::ScorerBackend;

/// Environment variable that replaces the remote scorer address.
pub const SCORER_URL_ENV: &str = "TAXOFORGE_SCORER_URL";

/// Full run configuration, read from a TOML file. Relative paths resolve
/// against the directory holding the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub scorer: ScorerSection,
    #[serde(default)]
    pub embedding: TrainingConfig,
    #[serde(default)]
    pub clustering: ClusteringSection,
    #[serde(default)]
    pub relation: RelationSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub corpus: PathBuf,
    pub seed: PathBuf,
    pub output: PathBuf,
    /// Optional gold ancestor pairs (`parent<TAB>descendant`) for evaluation.
    #[serde(default)]
    pub gold: Option<PathBuf>,
    #[serde(default = "defaults::min_count")]
    pub min_count: u64,
    #[serde(default = "defaults::rng_seed")]
    pub rng_seed: u64,
    #[serde(default = "defaults::statement_cap")]
    pub statement_cap: usize,
    /// Taxonomy depth below the root to build; 2 = topics and subtopics.
    #[serde(default = "defaults::layers")]
    pub layers: usize,
    /// Cluster terms listed per node in the export.
    #[serde(default = "defaults::top_k")]
    pub top_k: usize,
}

mod defaults {
    pub fn min_count() -> u64 {
        1
    }
    pub fn rng_seed() -> u64 {
        1
    }
    pub fn statement_cap() -> usize {
        200
    }
    pub fn layers() -> usize {
        2
    }
    pub fn top_k() -> usize {
        10
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Relation score threshold.
    pub gamma: f64,
    /// KL confidence threshold.
    pub delta: f64,
    /// Bicluster consistency threshold.
    pub consistency: f64,
    /// Distinctiveness margin for cluster growth.
    pub margin: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            gamma: 0.7,
            delta: 0.5,
            consistency: 0.5,
            margin: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScorerSection {
    #[serde(flatten)]
    pub backend: ScorerBackend,
    /// Shell command that trains the remote model; `TAXOFORGE_RELSET` holds
    /// the training-set path while it runs.
    #[serde(default)]
    pub train_command: Option<String>,
}

impl Default for ScorerSection {
    fn default() -> Self {
        ScorerSection {
            backend: ScorerBackend::Heuristic,
            train_command: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringSection {
    pub damping: f64,
    pub max_iter: usize,
    pub convergence_iter: usize,
    pub tolerance: f64,
    /// Bicluster count; default `min(rows, cols, 2 + cols/3)`.
    pub k: Option<usize>,
    pub seed: u64,
}

impl Default for ClusteringSection {
    fn default() -> Self {
        let ap = ApParams::default();
        ClusteringSection {
            damping: ap.damping,
            max_iter: ap.max_iter,
            convergence_iter: ap.convergence_iter,
            tolerance: ap.tolerance,
            k: None,
            seed: 1,
        }
    }
}

impl ClusteringSection {
    pub fn ap_params(&self) -> ApParams {
        ApParams {
            damping: self.damping,
            max_iter: self.max_iter,
            convergence_iter: self.convergence_iter,
            tolerance: self.tolerance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RelationSection {
    pub min_cooccur: usize,
    pub max_roots: usize,
    /// Random negative sentences in the training set; default = positives.
    pub random_negatives: Option<usize>,
}

impl Default for RelationSection {
    fn default() -> Self {
        RelationSection {
            min_cooccur: 3,
            max_roots: 3,
            random_negatives: None,
        }
    }
}

impl RunConfig {
    /// Minimal config with defaults everywhere else.
    pub fn new(corpus: impl Into<PathBuf>, seed: impl Into<PathBuf>, output: impl Into<PathBuf>) -> Self {
        RunConfig {
            run: RunSection {
                corpus: corpus.into(),
                seed: seed.into(),
                output: output.into(),
                gold: None,
                min_count: defaults::min_count(),
                rng_seed: defaults::rng_seed(),
                statement_cap: defaults::statement_cap(),
                layers: defaults::layers(),
                top_k: defaults::top_k(),
            },
            thresholds: Thresholds::default(),
            scorer: ScorerSection::default(),
            embedding: TrainingConfig::default(),
            clustering: ClusteringSection::default(),
            relation: RelationSection::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    /// Reads, resolves paths, applies the environment override and validates.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        cfg.apply_env();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.run.corpus);
        fix(&mut self.run.seed);
        fix(&mut self.run.output);
        if let Some(g) = &mut self.run.gold {
            fix(g);
        }
        if let ScorerBackend::Oracle { path } = &mut self.scorer.backend {
            fix(path);
        }
    }

    /// `TAXOFORGE_SCORER_URL` replaces the address of a remote backend; it
    /// does not switch other backends to remote.
    pub fn apply_env(&mut self) {
        if let (Ok(url), ScorerBackend::Remote { url: current }) =
            (std::env::var(SCORER_URL_ENV), &mut self.scorer.backend)
        {
            if !url.trim().is_empty() {
                *current = url.trim().to_string();
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.thresholds;
        for (name, v) in [("gamma", t.gamma), ("delta", t.delta), ("consistency", t.consistency)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Config(format!("threshold {name} must be in (0, 1], got {v}")));
            }
        }
        if !(0.0..1.0).contains(&t.margin) {
            return Err(Error::Config(format!("margin must be in [0, 1), got {}", t.margin)));
        }
        let r = &self.run;
        if r.min_count == 0 || r.statement_cap == 0 || r.layers == 0 || r.top_k == 0 {
            return Err(Error::Config(
                "min_count, statement_cap, layers and top_k must be at least 1".into(),
            ));
        }
        if self.relation.max_roots == 0 {
            return Err(Error::Config("max_roots must be at least 1".into()));
        }
        if self.clustering.k == Some(0) {
            return Err(Error::Config("clustering k must be at least 1".into()));
        }
        self.embedding.validate()?;
        self.clustering.ap_params().validate()?;
        let mut inputs = vec![("corpus", &r.corpus), ("seed", &r.seed)];
        if let Some(g) = &r.gold {
            inputs.push(("gold", g));
        }
        if let ScorerBackend::Oracle { path } = &self.scorer.backend {
            inputs.push(("oracle table", path));
        }
        for (what, p) in inputs {
            if !p.is_file() {
                return Err(Error::Config(format!("{what} file not found: {}", p.display())));
            }
        }
        Ok(())
    }

    /// Embedding settings with the run-level margin applied.
    pub fn training_config(&self) -> TrainingConfig {
        TrainingConfig {
            margin: self.thresholds.margin,
            ..self.embedding.clone()
        }
    }
}
