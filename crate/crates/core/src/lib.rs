//! Seed-guided topical taxonomy construction.
//!
//! Given a pre-phrased corpus and a small seed taxonomy, the engine finds
//! common roots of the seed topics, adds sibling topics and subtopics by
//! transferring the seed relation through a pluggable sentence scorer, and
//! gives every node a discriminative cluster of terms learned by a joint
//! word/document/concept embedding.

pub mod clustering;
pub mod corpus;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod pipeline;
pub mod relation;
pub mod synthetic;
pub mod taxonomy;

pub use error::{Error, Result};
