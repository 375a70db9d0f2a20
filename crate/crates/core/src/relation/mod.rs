//! Relation transfer: the three-class relation set, the KL confidence
//! filter, training data built from the seed, pluggable statement scorers,
//! and corpus-level directional scores used to move the seed relation up
//! (root discovery) and down (topics, subtopics) the taxonomy.

mod scorer;
mod training;
mod transfer;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use scorer::{
    HeuristicScorer, Mention, OracleScorer, RelationScorer, RemoteScorer, ScorerBackend,
    StatementText, HEURISTIC_CONFIDENT, HEURISTIC_UNSURE,
};
pub use training::{build_training_set, write_samples_jsonl, LabeledStatement, TrainingSet, TrainingSetConfig};
pub use transfer::{
    directional_score, discover_roots, expand_first_layer, subtopic_candidates, RootDiscovery,
    ScoredTerms, TransferContext,
};

/// The relation set: `Forward` means the first term of the statement is the
/// parent of the second.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelationClass {
    Forward,
    Backward,
    None,
}

impl RelationClass {
    pub const ALL: [RelationClass; 3] = [RelationClass::Forward, RelationClass::Backward, RelationClass::None];

    /// Label after swapping the pair order.
    pub fn reversed(self) -> Self {
        match self {
            RelationClass::Forward => RelationClass::Backward,
            RelationClass::Backward => RelationClass::Forward,
            RelationClass::None => RelationClass::None,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RelationClass::Forward => "forward",
            RelationClass::Backward => "backward",
            RelationClass::None => "none",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "forward" => Some(RelationClass::Forward),
            "backward" => Some(RelationClass::Backward),
            "none" => Some(RelationClass::None),
            _ => None,
        }
    }
}

/// Probabilities over (forward, backward, none).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelationDistribution([f64; 3]);

impl RelationDistribution {
    pub fn new(p: [f64; 3]) -> Result<Self> {
        let sum: f64 = p.iter().sum();
        if p.iter().any(|x| !x.is_finite() || *x < 0.0) || (sum - 1.0).abs() > 1e-6 {
            return Err(Error::Precondition(format!("not a probability distribution: {p:?}")));
        }
        Ok(RelationDistribution(p))
    }

    pub fn uniform() -> Self {
        RelationDistribution([1.0 / 3.0; 3])
    }

    pub fn one_hot(class: RelationClass) -> Self {
        let mut p = [0.0; 3];
        p[class.index()] = 1.0;
        RelationDistribution(p)
    }

    pub fn probs(&self) -> [f64; 3] {
        self.0
    }

    pub fn prob(&self, class: RelationClass) -> f64 {
        self.0[class.index()]
    }

    /// Most probable class; ties resolve in (forward, backward, none) order.
    pub fn argmax(&self) -> RelationClass {
        let mut best = RelationClass::Forward;
        for c in RelationClass::ALL {
            if self.prob(c) > self.prob(best) {
                best = c;
            }
        }
        best
    }

    /// Distribution for the reversed pair order.
    pub fn reversed(&self) -> Self {
        RelationDistribution([self.0[1], self.0[0], self.0[2]])
    }

    /// `KL(uniform ‖ p)` in nats with `p` clamped at 1e-9.
    pub fn kl_from_uniform(&self) -> f64 {
        let l = 1.0 / 3.0;
        self.0.iter().map(|&p| l * (l / p.max(1e-9)).ln()).sum()
    }
}

/// Keeps per-sentence predictions that are far enough from uniform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceFilter {
    pub delta: f64,
}

impl Default for ConfidenceFilter {
    fn default() -> Self {
        ConfidenceFilter { delta: 0.5 }
    }
}

impl ConfidenceFilter {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::Config(format!("KL threshold must be positive, got {delta}")));
        }
        Ok(ConfidenceFilter { delta })
    }

    pub fn is_confident(&self, dist: &RelationDistribution) -> bool {
        dist.kl_from_uniform() > self.delta
    }
}

pub fn is_confident(dist: &RelationDistribution, filter: &ConfidenceFilter) -> bool {
    filter.is_confident(dist)
}
