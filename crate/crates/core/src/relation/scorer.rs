use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::Duration;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{RelationClass, RelationDistribution};

/// A relation statement on the wire: surface tokens plus the two term
/// positions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatementText {
    pub tokens: Vec<String>,
    pub pos_a: usize,
    pub pos_b: usize,
}

/// One mention of a term for contextual embedding requests.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub tokens: Vec<String>,
    pub pos: usize,
}

/// Sentence-level relation classifier.
pub trait RelationScorer: Send + Sync {
    fn describe(&self) -> String;

    /// One distribution per statement, in input order.
    fn score_batch(&self, statements: &[StatementText]) -> Result<Vec<RelationDistribution>>;

    /// Contextual embedding of a term averaged over its mentions, when the
    /// backend provides one.
    fn embed_term(&self, _term: &str, _mentions: &[Mention]) -> Result<Option<Vec<f64>>> {
        Ok(None)
    }
}

/// Backend selector as written in configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScorerBackend {
    Heuristic,
    Oracle { path: PathBuf },
    Remote { url: String },
}

impl ScorerBackend {
    pub fn connect(&self) -> Result<Box<dyn RelationScorer>> {
        Ok(match self {
            ScorerBackend::Heuristic => Box::new(HeuristicScorer),
            ScorerBackend::Oracle { path } => Box::new(OracleScorer::from_file(path)?),
            ScorerBackend::Remote { url } => Box::new(RemoteScorer::new(url)),
        })
    }
}

pub const HEURISTIC_CONFIDENT: f64 = 0.9;
pub const HEURISTIC_UNSURE: [f64; 3] = [0.34, 0.33, 0.33];

/// Connectors that introduce hyponyms after their hypernym
/// ("fruits such as apples").
const PARENT_FIRST: &[&[&str]] = &[
    &["such", "as"],
    &["like"],
    &["including"],
    &["include"],
    &["includes"],
    &["especially"],
    &["particularly"],
    &["namely"],
    &["e.g"],
    &["for", "example"],
    &["for", "instance"],
];

/// Whole connectors placing the hypernym second ("apples are a type of
/// fruit", "apples and other fruits"). Articles are dropped before matching.
const CHILD_FIRST: &[&[&str]] = &[
    &["is"],
    &["are"],
    &["is", "type", "of"],
    &["are", "types", "of"],
    &["is", "kind", "of"],
    &["are", "kinds", "of"],
    &["type", "of"],
    &["types", "of"],
    &["kind", "of"],
    &["kinds", "of"],
    &["is", "example", "of"],
    &["are", "examples", "of"],
    &["and", "other"],
    &["or", "other"],
];

const MAX_GAP: usize = 6;

/// Words that only ever act as connectors; a pair involving one is never
/// scored as a relation.
const CONNECTOR_WORDS: &[&str] = &[
    "a", "an", "the", "is", "are", "such", "as", "like", "including", "include", "includes",
    "especially", "particularly", "namely", "e.g", "for", "example", "examples", "instance",
    "type", "types", "kind", "kinds", "of", "and", "or", "other",
];

fn is_connector(token: &str) -> bool {
    token.split('_').all(|w| CONNECTOR_WORDS.contains(&w))
}

/// Pattern-rule scorer used when no trained classifier is available.
#[derive(Debug, Clone, Copy, Default)]
pub struct HeuristicScorer;

impl HeuristicScorer {
    /// Which of the two positions holds the parent, if a pattern says so.
    fn parent_position(tokens: &[String], pos_a: usize, pos_b: usize) -> Option<usize> {
        let (lo, hi) = (pos_a.min(pos_b), pos_a.max(pos_b));
        if hi - lo - 1 > MAX_GAP || is_connector(&tokens[lo]) || is_connector(&tokens[hi]) {
            return None;
        }
        let between: Vec<String> = tokens[lo + 1..hi]
            .iter()
            .flat_map(|t| t.split('_').map(str::to_string).collect::<Vec<_>>())
            .filter(|w| !matches!(w.as_str(), "a" | "an" | "the" | ""))
            .collect();
        let words: Vec<&str> = between.iter().map(String::as_str).collect();
        let starts_with = |p: &[&str]| words.len() >= p.len() && &words[..p.len()] == p;
        for pattern in PARENT_FIRST {
            if starts_with(pattern) {
                let tail = &words[pattern.len()..];
                let clean = !PARENT_FIRST
                    .iter()
                    .any(|q| tail.windows(q.len()).any(|w| w == *q));
                return clean.then_some(lo);
            }
        }
        if CHILD_FIRST.iter().any(|p| words == *p) {
            return Some(hi);
        }
        None
    }

    pub fn score_one(statement: &StatementText) -> RelationDistribution {
        let n = statement.tokens.len();
        if statement.pos_a >= n || statement.pos_b >= n || statement.pos_a == statement.pos_b {
            return RelationDistribution::new(HEURISTIC_UNSURE).expect("valid");
        }
        let side = (1.0 - HEURISTIC_CONFIDENT) / 2.0;
        match Self::parent_position(&statement.tokens, statement.pos_a, statement.pos_b) {
            Some(p) if p == statement.pos_a => {
                RelationDistribution::new([HEURISTIC_CONFIDENT, side, side]).expect("valid")
            }
            Some(_) => RelationDistribution::new([side, HEURISTIC_CONFIDENT, side]).expect("valid"),
            None => RelationDistribution::new(HEURISTIC_UNSURE).expect("valid"),
        }
    }
}

impl RelationScorer for HeuristicScorer {
    fn describe(&self) -> String {
        "heuristic".into()
    }

    fn score_batch(&self, statements: &[StatementText]) -> Result<Vec<RelationDistribution>> {
        Ok(statements.iter().map(Self::score_one).collect())
    }
}

/// Looks pairs up in a fixed relation table. Unlisted pairs are scored as
/// confidently unrelated.
#[derive(Debug, Clone, Default)]
pub struct OracleScorer {
    table: HashMap<(String, String), RelationClass>,
}

impl OracleScorer {
    /// Reads `termA<TAB>termB<TAB>forward|backward|none` lines.
    pub fn parse(text: &str) -> Result<Self> {
        let mut oracle = OracleScorer::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let parse_err = |message: String| Error::Parse {
                what: "oracle table",
                line: i + 1,
                message,
            };
            let [a, b, rel] = fields.as_slice() else {
                return Err(parse_err(format!("expected 3 tab-separated fields, got {}", fields.len())));
            };
            let class = RelationClass::parse(rel).ok_or_else(|| parse_err(format!("unknown relation `{rel}`")))?;
            oracle.insert(a, b, class);
        }
        Ok(oracle)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn insert(&mut self, a: &str, b: &str, class: RelationClass) {
        self.table
            .insert((a.trim().to_lowercase(), b.trim().to_lowercase()), class);
    }

    pub fn lookup(&self, a: &str, b: &str) -> RelationClass {
        if let Some(&c) = self.table.get(&(a.to_string(), b.to_string())) {
            return c;
        }
        match self.table.get(&(b.to_string(), a.to_string())) {
            Some(&c) => c.reversed(),
            None => RelationClass::None,
        }
    }

    /// Renders the table in file format, sorted.
    pub fn to_text(&self) -> String {
        let mut rows: Vec<_> = self.table.iter().collect();
        rows.sort();
        rows.iter()
            .map(|((a, b), c)| format!("{a}\t{b}\t{}\n", c.as_str()))
            .collect()
    }
}

impl RelationScorer for OracleScorer {
    fn describe(&self) -> String {
        format!("oracle ({} pairs)", self.table.len())
    }

    fn score_batch(&self, statements: &[StatementText]) -> Result<Vec<RelationDistribution>> {
        statements
            .iter()
            .map(|s| {
                let (a, b) = match (s.tokens.get(s.pos_a), s.tokens.get(s.pos_b)) {
                    (Some(a), Some(b)) => (a, b),
                    _ => return Err(Error::Precondition("statement position out of range".into())),
                };
                Ok(RelationDistribution::one_hot(self.lookup(a, b)))
            })
            .collect()
    }
}

#[derive(Debug, Serialize)]
struct ScoreRequest<'a> {
    statements: &'a [StatementText],
}

#[derive(Debug, Deserialize)]
struct ScoreResponse {
    distributions: Vec<[f64; 3]>,
}

#[derive(Debug, Serialize)]
struct EmbedRequest<'a> {
    term: &'a str,
    mentions: &'a [Mention],
}

#[derive(Debug, Deserialize)]
struct EmbedResponse {
    vector: Vec<f64>,
    dim: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct Health {
    pub status: String,
    pub model: String,
    pub dim: usize,
}

#[derive(Debug, Deserialize)]
struct ErrorBody {
    error: String,
    code: i64,
}

/// Client for the relation scoring service (`POST /score`, `POST /embed`,
/// `GET /health`).
#[derive(Debug, Clone)]
pub struct RemoteScorer {
    base: String,
    agent: ureq::Agent,
    retries: u32,
    backoff: Duration,
    batch_size: usize,
}

impl RemoteScorer {
    pub fn new(base_url: &str) -> Self {
        RemoteScorer {
            base: base_url.trim_end_matches('/').to_string(),
            agent: ureq::AgentBuilder::new()
                .timeout_connect(Duration::from_secs(5))
                .timeout(Duration::from_secs(120))
                .build(),
            retries: 3,
            backoff: Duration::from_millis(200),
            batch_size: 64,
        }
    }

    pub fn with_retry(mut self, retries: u32, backoff: Duration) -> Self {
        self.retries = retries;
        self.backoff = backoff;
        self
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size.max(1);
        self
    }

    /// Sends a request, retrying transport failures and 5xx responses with
    /// exponential backoff. Protocol errors (4xx) are returned immediately.
    fn call<T: for<'de> Deserialize<'de>>(
        &self,
        send: impl Fn() -> std::result::Result<ureq::Response, ureq::Error>,
    ) -> Result<T> {
        let mut delay = self.backoff;
        let mut attempt = 0;
        loop {
            let failure = match send() {
                Ok(resp) => {
                    return resp.into_json::<T>().map_err(|e| Error::Protocol {
                        code: 0,
                        message: format!("malformed response body: {e}"),
                    })
                }
                Err(ureq::Error::Status(code, resp)) if code < 500 => {
                    let body = resp.into_string().unwrap_or_default();
                    let (code, message) = match serde_json::from_str::<ErrorBody>(&body) {
                        Ok(b) => (b.code, b.error),
                        Err(_) => (code as i64, body),
                    };
                    return Err(Error::Protocol { code, message });
                }
                Err(ureq::Error::Status(code, _)) => format!("server error {code}"),
                Err(e) => e.to_string(),
            };
            if attempt >= self.retries {
                return Err(Error::Transport {
                    retries: attempt,
                    message: failure,
                });
            }
            warn!("scorer request failed ({failure}); retry {} in {delay:?}", attempt + 1);
            thread::sleep(delay);
            delay *= 2;
            attempt += 1;
        }
    }

    pub fn health(&self) -> Result<Health> {
        let url = format!("{}/health", self.base);
        self.call(|| self.agent.get(&url).call())
    }
}

impl RelationScorer for RemoteScorer {
    fn describe(&self) -> String {
        format!("remote ({})", self.base)
    }

    fn score_batch(&self, statements: &[StatementText]) -> Result<Vec<RelationDistribution>> {
        let url = format!("{}/score", self.base);
        let mut out = Vec::with_capacity(statements.len());
        for chunk in statements.chunks(self.batch_size) {
            let body = serde_json::to_value(ScoreRequest { statements: chunk })?;
            let resp: ScoreResponse = self.call(|| self.agent.post(&url).send_json(body.clone()))?;
            if resp.distributions.len() != chunk.len() {
                return Err(Error::Protocol {
                    code: 0,
                    message: format!(
                        "sent {} statements, received {} distributions",
                        chunk.len(),
                        resp.distributions.len()
                    ),
                });
            }
            for p in resp.distributions {
                out.push(RelationDistribution::new(p).map_err(|e| Error::Protocol {
                    code: 0,
                    message: e.to_string(),
                })?);
            }
        }
        Ok(out)
    }

    fn embed_term(&self, term: &str, mentions: &[Mention]) -> Result<Option<Vec<f64>>> {
        let url = format!("{}/embed", self.base);
        let body = serde_json::to_value(EmbedRequest { term, mentions })?;
        let resp: EmbedResponse = self.call(|| self.agent.post(&url).send_json(body.clone()))?;
        if resp.vector.len() != resp.dim {
            return Err(Error::Protocol {
                code: 0,
                message: format!("embedding length {} disagrees with dim {}", resp.vector.len(), resp.dim),
            });
        }
        Ok(Some(resp.vector))
    }
}
