use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::eval::MetricReport;

/// Counters and notes of one stage.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StageRecord {
    pub stage: String,
    pub counters: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

/// An item that a stage considered and rejected.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dropped {
    pub stage: String,
    pub item: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub stage: String,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunReport {
    pub stages: Vec<StageRecord>,
    pub dropped: Vec<Dropped>,
    pub metrics: Option<MetricReport>,
    pub failure: Option<Failure>,
}

impl RunReport {
    pub(crate) fn begin(&mut self, stage: &str) {
        self.stages.push(StageRecord {
            stage: stage.to_string(),
            ..Default::default()
        });
    }

    fn current(&mut self) -> &mut StageRecord {
        if self.stages.is_empty() {
            self.begin("setup");
        }
        self.stages.last_mut().expect("stage")
    }

    pub(crate) fn count(&mut self, key: &str, value: impl Into<f64>) {
        self.current().counters.insert(key.to_string(), value.into());
    }

    pub(crate) fn note(&mut self, note: impl Into<String>) {
        self.current().notes.push(note.into());
    }

    pub(crate) fn drop_item(&mut self, item: impl Into<String>, reason: impl Into<String>) {
        let stage = self.current().stage.clone();
        self.dropped.push(Dropped {
            stage,
            item: item.into(),
            reason: reason.into(),
        });
    }

    pub fn stage(&self, name: &str) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.stage == name)
    }

    /// Counter lookup, `None` when the stage or key is absent.
    pub fn counter(&self, stage: &str, key: &str) -> Option<f64> {
        self.stage(stage).and_then(|s| s.counters.get(key).copied())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.stages {
            let _ = writeln!(out, "[{}]", s.stage);
            for (k, v) in &s.counters {
                let _ = writeln!(out, "  {k} = {v}");
            }
            for n in &s.notes {
                let _ = writeln!(out, "  note: {n}");
            }
        }
        if !self.dropped.is_empty() {
            let _ = writeln!(out, "[dropped]");
            for d in &self.dropped {
                let _ = writeln!(out, "  {} {}: {}", d.stage, d.item, d.reason);
            }
        }
        if let Some(m) = &self.metrics {
            let _ = writeln!(out, "[metrics]");
            for line in m.to_kv().lines() {
                let _ = writeln!(out, "  {line}");
            }
        }
        if let Some(f) = &self.failure {
            let _ = writeln!(out, "[failure]\n  stage {}: {}", f.stage, f.error);
        }
        out
    }
}
