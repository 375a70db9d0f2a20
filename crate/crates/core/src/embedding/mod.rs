//! Joint embedding of words, documents and concepts.
//!
//! Every word has a center vector `u` and a context vector `v`; documents and
//! concepts live in the same space as the center vectors. Training combines
//! a skip-gram term, a word→document term and a word→concept proximity term,
//! each approximated by logistic loss over sampled negatives.

mod objective;
mod train;

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{TermId, Vocabulary};
use crate::error::{Error, Result};

pub use objective::{
    loss_and_grad, Batch, ConceptPair, DocPair, LossWeights, SkipGramPair, SparseGrad,
};
pub use train::{
    grow_clusters, top_terms, train, train_on_taxonomy, EpochStats, TrainedEmbedding,
    TrainingConfig,
};

/// Which parameter block a row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Block {
    Word,
    Context,
    Doc,
    Concept,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    u_word: Vec<f64>,
    v_word: Vec<f64>,
    u_doc: Vec<f64>,
    u_concept: Vec<f64>,
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cosine similarity; zero vectors have similarity 0 with everything.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot(a, b) / (na * nb)
    }
}

impl EmbeddingTable {
    pub fn zeros(dim: usize, n_words: usize, n_docs: usize, n_concepts: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Embedding("dimension must be at least 1".into()));
        }
        Ok(EmbeddingTable {
            dim,
            u_word: vec![0.0; n_words * dim],
            v_word: vec![0.0; n_words * dim],
            u_doc: vec![0.0; n_docs * dim],
            u_concept: vec![0.0; n_concepts * dim],
        })
    }

    /// Center, document and concept vectors uniform in `[-0.5/d, 0.5/d]`;
    /// context vectors zero.
    pub fn init(n_words: usize, n_docs: usize, n_concepts: usize, dim: usize, seed: u64) -> Result<Self> {
        if n_words == 0 || n_docs == 0 || n_concepts == 0 {
            return Err(Error::Embedding(format!(
                "all counts must be positive (words {n_words}, docs {n_docs}, concepts {n_concepts})"
            )));
        }
        let mut table = Self::zeros(dim, n_words, n_docs, n_concepts)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let half = 0.5 / dim as f64;
        for x in table
            .u_word
            .iter_mut()
            .chain(table.u_doc.iter_mut())
            .chain(table.u_concept.iter_mut())
        {
            *x = rng.gen_range(-half..=half);
        }
        Ok(table)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_words(&self) -> usize {
        self.u_word.len() / self.dim
    }

    pub fn n_docs(&self) -> usize {
        self.u_doc.len() / self.dim
    }

    pub fn n_concepts(&self) -> usize {
        self.u_concept.len() / self.dim
    }

    pub(crate) fn block(&self, block: Block) -> &[f64] {
        match block {
            Block::Word => &self.u_word,
            Block::Context => &self.v_word,
            Block::Doc => &self.u_doc,
            Block::Concept => &self.u_concept,
        }
    }

    pub(crate) fn block_mut(&mut self, block: Block) -> &mut [f64] {
        match block {
            Block::Word => &mut self.u_word,
            Block::Context => &mut self.v_word,
            Block::Doc => &mut self.u_doc,
            Block::Concept => &mut self.u_concept,
        }
    }

    pub fn rows(&self, block: Block) -> usize {
        self.block(block).len() / self.dim
    }

    pub fn row(&self, block: Block, r: usize) -> Option<&[f64]> {
        let d = self.dim;
        self.block(block).get(r * d..(r + 1) * d)
    }

    pub fn row_mut(&mut self, block: Block, r: usize) -> Option<&mut [f64]> {
        let d = self.dim;
        self.block_mut(block).get_mut(r * d..(r + 1) * d)
    }

    pub fn word(&self, t: TermId) -> &[f64] {
        self.row(Block::Word, t.index()).expect("word row")
    }

    pub fn word_mut(&mut self, t: TermId) -> &mut [f64] {
        self.row_mut(Block::Word, t.index()).expect("word row")
    }

    pub fn context(&self, t: TermId) -> &[f64] {
        self.row(Block::Context, t.index()).expect("context row")
    }

    pub fn context_mut(&mut self, t: TermId) -> &mut [f64] {
        self.row_mut(Block::Context, t.index()).expect("context row")
    }

    pub fn doc(&self, d: usize) -> &[f64] {
        self.row(Block::Doc, d).expect("doc row")
    }

    pub fn doc_mut(&mut self, d: usize) -> &mut [f64] {
        self.row_mut(Block::Doc, d).expect("doc row")
    }

    pub fn concept(&self, c: usize) -> Option<&[f64]> {
        self.row(Block::Concept, c)
    }

    pub fn concept_mut(&mut self, c: usize) -> &mut [f64] {
        self.row_mut(Block::Concept, c).expect("concept row")
    }

    /// Appends a concept row and returns its index.
    pub fn push_concept(&mut self, vector: &[f64]) -> Result<usize> {
        if vector.len() != self.dim {
            return Err(Error::Embedding(format!(
                "concept vector has dimension {}, table has {}",
                vector.len(),
                self.dim
            )));
        }
        self.u_concept.extend_from_slice(vector);
        Ok(self.n_concepts() - 1)
    }

    pub fn is_finite(&self) -> bool {
        [&self.u_word, &self.v_word, &self.u_doc, &self.u_concept]
            .iter()
            .all(|b| b.iter().all(|x| x.is_finite()))
    }

    /// Binary layout, little-endian:
    ///
    /// ```text
    /// magic b"TXFEMB\0\0" 8 bytes, version u8 = 1
    /// dim u32, n_words u32, n_docs u32, n_concepts u32
    /// u_word, v_word, u_doc, u_concept as row-major f32
    /// ```
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(EMB_MAGIC)?;
        out.write_u8(EMB_VERSION)?;
        for n in [self.dim, self.n_words(), self.n_docs(), self.n_concepts()] {
            out.write_u32::<LittleEndian>(n as u32)?;
        }
        for block in [&self.u_word, &self.v_word, &self.u_doc, &self.u_concept] {
            for &x in block.iter() {
                out.write_f32::<LittleEndian>(x as f32)?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != EMB_MAGIC {
            return Err(Error::Format("not an embedding table (bad magic)".into()));
        }
        let version = input.read_u8()?;
        if version != EMB_VERSION {
            return Err(Error::Format(format!("unsupported embedding version {version}")));
        }
        let mut dims = [0usize; 4];
        for d in dims.iter_mut() {
            *d = input.read_u32::<LittleEndian>()? as usize;
        }
        let [dim, n_words, n_docs, n_concepts] = dims;
        let mut table = Self::zeros(dim, n_words, n_docs, n_concepts)?;
        for block in [Block::Word, Block::Context, Block::Doc, Block::Concept] {
            for x in table.block_mut(block).iter_mut() {
                *x = input.read_f32::<LittleEndian>()? as f64;
            }
        }
        Ok(table)
    }

    /// Conventional text format: header `n_words dim`, then `word v1 v2 ...`
    /// per line using the center vectors.
    pub fn write_text<W: Write>(&self, vocab: &Vocabulary, mut out: W) -> Result<()> {
        writeln!(out, "{} {}", self.n_words(), self.dim)?;
        for (id, term, _) in vocab.iter().take(self.n_words()) {
            write!(out, "{term}")?;
            for x in self.word(id) {
                write!(out, " {:.6}", *x as f32)?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

const EMB_MAGIC: &[u8; 8] = b"TXFEMB\0\0";
const EMB_VERSION: u8 = 1;
