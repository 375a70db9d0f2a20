//! Corpus ingestion, vocabulary, and the sentence-level inverted index.
//!
//! Input is pre-phrased text: one document per line, space-separated tokens,
//! multi-word phrases already joined with `_`. Tokens are case-folded and a
//! sentence ends at any token carrying a trailing `.`, `!` or `?`.

use std::collections::HashMap;
use std::io::{BufRead, Read, Write};
use std::ops::Range;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense vocabulary index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TermId(pub u32);

impl TermId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

pub type SentenceId = u32;
pub type DocId = u32;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    counts: Vec<u64>,
    lookup: HashMap<String, TermId>,
}

impl Vocabulary {
    fn push(&mut self, term: String, count: u64) -> TermId {
        let id = TermId(self.terms.len() as u32);
        self.lookup.insert(term.clone(), id);
        self.terms.push(term);
        self.counts.push(count);
        id
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn id(&self, term: &str) -> Option<TermId> {
        self.lookup.get(term).copied()
    }

    /// Like [`Vocabulary::id`] but fails with [`Error::UnknownTerm`].
    pub fn require(&self, term: &str) -> Result<TermId> {
        self.id(term).ok_or_else(|| Error::UnknownTerm(term.to_string()))
    }

    pub fn term(&self, id: TermId) -> &str {
        &self.terms[id.index()]
    }

    pub fn count(&self, id: TermId) -> u64 {
        self.counts[id.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (TermId, &str, u64)> + '_ {
        self.terms
            .iter()
            .zip(&self.counts)
            .enumerate()
            .map(|(i, (t, &c))| (TermId(i as u32), t.as_str(), c))
    }

    fn contains(&self, id: TermId) -> bool {
        id.index() < self.terms.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub tokens: Vec<TermId>,
    pub doc_id: DocId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    /// Sentence ids owned by this document (contiguous).
    pub sentences: Range<SentenceId>,
}

/// A sentence in which two terms co-occur, with the positions of their first
/// occurrences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationStatement {
    pub sentence_id: SentenceId,
    pub tokens: Vec<TermId>,
    pub pos_a: usize,
    pub pos_b: usize,
}

impl RelationStatement {
    pub fn term_a(&self) -> TermId {
        self.tokens[self.pos_a]
    }

    pub fn term_b(&self) -> TermId {
        self.tokens[self.pos_b]
    }

    /// The same sentence with the pair order swapped.
    pub fn reversed(&self) -> Self {
        RelationStatement {
            sentence_id: self.sentence_id,
            tokens: self.tokens.clone(),
            pos_a: self.pos_b,
            pos_b: self.pos_a,
        }
    }
}

/// Term → sorted sentence postings. Pair co-occurrence is resolved lazily by
/// intersecting two postings lists.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusIndex {
    postings: Vec<Vec<SentenceId>>,
}

impl CorpusIndex {
    fn build(vocab_size: usize, sentences: &[Sentence]) -> Self {
        let mut postings: Vec<Vec<SentenceId>> = vec![Vec::new(); vocab_size];
        for (sid, sentence) in sentences.iter().enumerate() {
            let sid = sid as SentenceId;
            for &tok in &sentence.tokens {
                let list = &mut postings[tok.index()];
                if list.last() != Some(&sid) {
                    list.push(sid);
                }
            }
        }
        CorpusIndex { postings }
    }

    pub fn postings(&self, term: TermId) -> &[SentenceId] {
        &self.postings[term.index()]
    }

    /// Sentences containing both terms, ascending.
    pub fn intersect(&self, a: TermId, b: TermId) -> Vec<SentenceId> {
        let (xs, ys) = (self.postings(a), self.postings(b));
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < xs.len() && j < ys.len() {
            match xs[i].cmp(&ys[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    out.push(xs[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out
    }

    pub fn cooccurrence_count(&self, a: TermId, b: TermId) -> usize {
        self.intersect(a, b).len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    vocab: Vocabulary,
    documents: Vec<Document>,
    sentences: Vec<Sentence>,
    index: CorpusIndex,
}

const TRIM_CHARS: &[char] = &[',', ';', ':', '"', '\'', '(', ')', '[', ']', '{', '}'];

/// Splits one document line into raw sentences of case-folded tokens.
fn split_sentences(line: &str) -> Vec<Vec<String>> {
    let mut sentences = Vec::new();
    let mut current = Vec::new();
    for raw in line.split_whitespace() {
        let ends = raw.ends_with(['.', '!', '?']);
        let token = raw
            .trim_end_matches(['.', '!', '?'])
            .trim_matches(TRIM_CHARS)
            .to_lowercase();
        if !token.is_empty() {
            current.push(token);
        }
        if ends && !current.is_empty() {
            sentences.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        sentences.push(current);
    }
    sentences
}

impl Corpus {
    /// Reads one document per line and keeps terms occurring at least
    /// `min_count` times.
    pub fn ingest<R: BufRead>(source: R, min_count: u64) -> Result<Corpus> {
        if min_count == 0 {
            return Err(Error::Precondition("min_count must be positive".into()));
        }
        let mut raw_docs: Vec<Vec<Vec<String>>> = Vec::new();
        for line in source.lines() {
            raw_docs.push(split_sentences(&line?));
        }

        // first-occurrence order keeps ids stable for identical input
        let mut order: Vec<String> = Vec::new();
        let mut counts: HashMap<String, u64> = HashMap::new();
        for tok in raw_docs.iter().flatten().flatten() {
            match counts.get_mut(tok) {
                Some(c) => *c += 1,
                None => {
                    counts.insert(tok.clone(), 1);
                    order.push(tok.clone());
                }
            }
        }
        if order.is_empty() {
            return Err(Error::EmptyCorpus);
        }

        let mut vocab = Vocabulary::default();
        for term in order {
            let c = counts[&term];
            if c >= min_count {
                vocab.push(term, c);
            }
        }
        if vocab.is_empty() {
            return Err(Error::MinCountTooHigh(min_count));
        }

        let mut documents = Vec::with_capacity(raw_docs.len());
        let mut sentences = Vec::new();
        for (doc_id, doc) in raw_docs.into_iter().enumerate() {
            let start = sentences.len() as SentenceId;
            for raw in doc {
                let tokens: Vec<TermId> = raw.iter().filter_map(|t| vocab.id(t)).collect();
                if !tokens.is_empty() {
                    sentences.push(Sentence {
                        tokens,
                        doc_id: doc_id as DocId,
                    });
                }
            }
            documents.push(Document {
                sentences: start..sentences.len() as SentenceId,
            });
        }
        Ok(Self::assemble(vocab, documents, sentences))
    }

    pub fn ingest_str(text: &str, min_count: u64) -> Result<Corpus> {
        Self::ingest(text.as_bytes(), min_count)
    }

    fn assemble(vocab: Vocabulary, documents: Vec<Document>, sentences: Vec<Sentence>) -> Corpus {
        let index = CorpusIndex::build(vocab.len(), &sentences);
        Corpus {
            vocab,
            documents,
            sentences,
            index,
        }
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn index(&self) -> &CorpusIndex {
        &self.index
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn sentence(&self, id: SentenceId) -> &Sentence {
        &self.sentences[id as usize]
    }

    /// Token stream of a document, sentence boundaries dropped.
    pub fn document_tokens(&self, doc: DocId) -> impl Iterator<Item = TermId> + '_ {
        let range = self.documents[doc as usize].sentences.clone();
        self.sentences[range.start as usize..range.end as usize]
            .iter()
            .flat_map(|s| s.tokens.iter().copied())
    }

    pub fn term_str(&self, id: TermId) -> &str {
        self.vocab.term(id)
    }

    pub fn tokens_str(&self, tokens: &[TermId]) -> Vec<&str> {
        tokens.iter().map(|&t| self.vocab.term(t)).collect()
    }

    fn check_term(&self, id: TermId) -> Result<()> {
        if self.vocab.contains(id) {
            Ok(())
        } else {
            Err(Error::UnknownTerm(format!("#{}", id.0)))
        }
    }

    /// Sentences containing both `a` and `b`, lowest sentence ids first,
    /// truncated to `cap`.
    pub fn relation_statements(
        &self,
        a: TermId,
        b: TermId,
        cap: usize,
    ) -> Result<Vec<RelationStatement>> {
        self.check_term(a)?;
        self.check_term(b)?;
        if a == b {
            return Err(Error::Precondition(format!(
                "relation statements need two distinct terms, got `{}` twice",
                self.term_str(a)
            )));
        }
        let statements = self
            .index
            .intersect(a, b)
            .into_iter()
            .take(cap)
            .map(|sid| {
                let tokens = self.sentences[sid as usize].tokens.clone();
                let pos_a = tokens.iter().position(|&t| t == a).expect("posting");
                let pos_b = tokens.iter().position(|&t| t == b).expect("posting");
                RelationStatement {
                    sentence_id: sid,
                    tokens,
                    pos_a,
                    pos_b,
                }
            })
            .collect();
        Ok(statements)
    }

    /// Terms sharing at least `min_cooccur` sentences with `anchor`, most
    /// frequent partners first, ties broken by id.
    pub fn candidate_terms(&self, anchor: TermId, min_cooccur: usize) -> Result<Vec<TermId>> {
        Ok(self
            .cooccurrence_counts(anchor)?
            .into_iter()
            .filter(|&(_, c)| c >= min_cooccur.max(1))
            .map(|(t, _)| t)
            .collect())
    }

    /// All co-occurring partners of `anchor` with their joint sentence counts,
    /// ordered as [`Corpus::candidate_terms`].
    pub fn cooccurrence_counts(&self, anchor: TermId) -> Result<Vec<(TermId, usize)>> {
        self.check_term(anchor)?;
        let mut counts: HashMap<TermId, usize> = HashMap::new();
        let mut seen: Vec<TermId> = Vec::new();
        for &sid in self.index.postings(anchor) {
            seen.clear();
            for &tok in &self.sentences[sid as usize].tokens {
                if tok != anchor && !seen.contains(&tok) {
                    seen.push(tok);
                    *counts.entry(tok).or_default() += 1;
                }
            }
        }
        let mut out: Vec<(TermId, usize)> = counts.into_iter().collect();
        out.sort_by(|x, y| y.1.cmp(&x.1).then(x.0.cmp(&y.0)));
        Ok(out)
    }

    /// Uniformly drawn sentences with two random positions holding distinct
    /// terms. Reproducible per seed.
    pub fn sample_negative_sentences(&self, n: usize, seed: u64) -> Result<Vec<RelationStatement>> {
        if n == 0 {
            return Ok(Vec::new());
        }
        let eligible: Vec<SentenceId> = self
            .sentences
            .iter()
            .enumerate()
            .filter(|(_, s)| s.tokens.iter().any(|&t| t != s.tokens[0]))
            .map(|(i, _)| i as SentenceId)
            .collect();
        if eligible.is_empty() {
            return Err(Error::NoEligibleSentence(
                "no sentence has two distinct tokens".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let sid = eligible[rng.gen_range(0..eligible.len())];
            let tokens = &self.sentences[sid as usize].tokens;
            let pos_a = rng.gen_range(0..tokens.len());
            let pos_b = loop {
                let p = rng.gen_range(0..tokens.len());
                if tokens[p] != tokens[pos_a] {
                    break p;
                }
            };
            out.push(RelationStatement {
                sentence_id: sid,
                tokens: tokens.clone(),
                pos_a,
                pos_b,
            });
        }
        Ok(out)
    }

    /// Renders the filtered corpus back to the line-oriented input format.
    pub fn export_text<W: Write>(&self, mut out: W) -> Result<()> {
        for doc in &self.documents {
            let mut first = true;
            for sid in doc.sentences.clone() {
                let words = self.tokens_str(&self.sentences[sid as usize].tokens);
                if !first {
                    out.write_all(b" ")?;
                }
                first = false;
                out.write_all(words.join(" ").as_bytes())?;
                out.write_all(b".")?;
            }
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Binary index layout, little-endian:
    ///
    /// ```text
    /// magic  b"TXFCORP\0"   8 bytes
    /// version u8            = 1
    /// n_terms u32, then per term: len u32, utf-8 bytes, count u64
    /// n_docs  u32, then per doc: n_sentences u32,
    ///         then per sentence: n_tokens u32, token ids u32 x n_tokens
    /// ```
    ///
    /// Postings are rebuilt on load.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(CORPUS_MAGIC)?;
        out.write_u8(CORPUS_VERSION)?;
        out.write_u32::<LittleEndian>(self.vocab.len() as u32)?;
        for (_, term, count) in self.vocab.iter() {
            out.write_u32::<LittleEndian>(term.len() as u32)?;
            out.write_all(term.as_bytes())?;
            out.write_u64::<LittleEndian>(count)?;
        }
        out.write_u32::<LittleEndian>(self.documents.len() as u32)?;
        for doc in &self.documents {
            out.write_u32::<LittleEndian>(doc.sentences.len() as u32)?;
            for sid in doc.sentences.clone() {
                let tokens = &self.sentences[sid as usize].tokens;
                out.write_u32::<LittleEndian>(tokens.len() as u32)?;
                for t in tokens {
                    out.write_u32::<LittleEndian>(t.0)?;
                }
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Corpus> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != CORPUS_MAGIC {
            return Err(Error::Format("not a corpus index (bad magic)".into()));
        }
        let version = input.read_u8()?;
        if version != CORPUS_VERSION {
            return Err(Error::Format(format!("unsupported corpus version {version}")));
        }
        let n_terms = input.read_u32::<LittleEndian>()?;
        let mut vocab = Vocabulary::default();
        for _ in 0..n_terms {
            let len = input.read_u32::<LittleEndian>()? as usize;
            let mut buf = vec![0u8; len];
            input.read_exact(&mut buf)?;
            let term = String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))?;
            let count = input.read_u64::<LittleEndian>()?;
            vocab.push(term, count);
        }
        let n_docs = input.read_u32::<LittleEndian>()?;
        let mut documents = Vec::with_capacity(n_docs as usize);
        let mut sentences = Vec::new();
        for doc_id in 0..n_docs {
            let n_sents = input.read_u32::<LittleEndian>()?;
            let start = sentences.len() as SentenceId;
            for _ in 0..n_sents {
                let n_tok = input.read_u32::<LittleEndian>()?;
                let mut tokens = Vec::with_capacity(n_tok as usize);
                for _ in 0..n_tok {
                    let t = TermId(input.read_u32::<LittleEndian>()?);
                    if t.0 >= n_terms {
                        return Err(Error::Format(format!("token id {} out of range", t.0)));
                    }
                    tokens.push(t);
                }
                sentences.push(Sentence { tokens, doc_id });
            }
            documents.push(Document {
                sentences: start..sentences.len() as SentenceId,
            });
        }
        Ok(Self::assemble(vocab, documents, sentences))
    }
}

const CORPUS_MAGIC: &[u8; 8] = b"TXFCORP\0";
const CORPUS_VERSION: u8 = 1;

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ids(c: &Corpus, words: &[&str]) -> Vec<TermId> {
        words.iter().map(|w| c.vocab().id(w).unwrap()).collect()
    }

    #[test]
    fn ingest_without_filtering() {
        let c = Corpus::ingest_str("a b. a c.", 1).unwrap();
        let mut terms: Vec<&str> = c.vocab().iter().map(|(_, t, _)| t).collect();
        terms.sort();
        assert_eq!(terms, ["a", "b", "c"]);
        assert_eq!(c.sentences().len(), 2);
    }

    #[test]
    fn ingest_min_count_two_keeps_only_a() {
        let c = Corpus::ingest_str("a b. a c.", 2).unwrap();
        assert_eq!(c.vocab().len(), 1);
        let a = c.vocab().id("a").unwrap();
        assert_eq!(c.vocab().count(a), 2);
        assert_eq!(c.sentences().len(), 2);
        assert!(c.sentences().iter().all(|s| s.tokens == vec![a]));
    }

    #[test]
    fn ingest_errors() {
        assert!(matches!(Corpus::ingest_str("", 1), Err(Error::EmptyCorpus)));
        assert!(matches!(Corpus::ingest_str("  \n . \n", 1), Err(Error::EmptyCorpus)));
        assert!(matches!(
            Corpus::ingest_str("a b. a c.", 3),
            Err(Error::MinCountTooHigh(3))
        ));
    }

    #[test]
    fn ingest_case_folds_and_splits_on_terminal_punctuation() {
        let c = Corpus::ingest_str("Fruits such_as Apples! Apples, pears? pears\nnew doc", 1).unwrap();
        assert!(c.vocab().id("fruits").is_some());
        assert!(c.vocab().id("apples").is_some());
        assert_eq!(c.sentences().len(), 4);
        assert_eq!(c.documents().len(), 2);
        assert_eq!(c.documents()[1].sentences, 3..4);
        assert_eq!(c.sentence(3).doc_id, 1);
    }

    #[test]
    fn relation_statements_example() {
        let c = Corpus::ingest_str("x y. x z. y z x.", 1).unwrap();
        let [x, y] = ids(&c, &["x", "y"])[..] else { unreachable!() };
        let st = c.relation_statements(x, y, 200).unwrap();
        assert_eq!(st.iter().map(|s| s.sentence_id).collect::<Vec<_>>(), [0, 2]);
        for s in &st {
            assert_eq!(s.term_a(), x);
            assert_eq!(s.term_b(), y);
        }
        assert_eq!((st[1].pos_a, st[1].pos_b), (2, 0));
        assert_eq!(c.relation_statements(x, y, 1).unwrap().len(), 1);
    }

    #[test]
    fn relation_statements_errors_and_empty() {
        let c = Corpus::ingest_str("x y. z w.", 1).unwrap();
        let [x, y, z] = ids(&c, &["x", "y", "z"])[..] else { unreachable!() };
        assert!(matches!(c.relation_statements(x, x, 5), Err(Error::Precondition(_))));
        assert!(matches!(
            c.relation_statements(x, TermId(99), 5),
            Err(Error::UnknownTerm(_))
        ));
        assert!(c.relation_statements(x, z, 5).unwrap().is_empty());
        assert_eq!(c.relation_statements(x, y, 5).unwrap().len(), 1);
    }

    #[test]
    fn first_occurrence_positions() {
        let c = Corpus::ingest_str("a b a b.", 1).unwrap();
        let [a, b] = ids(&c, &["a", "b"])[..] else { unreachable!() };
        let st = c.relation_statements(b, a, 5).unwrap();
        assert_eq!((st[0].pos_a, st[0].pos_b), (1, 0));
    }

    #[test]
    fn candidate_terms_examples() {
        let c = Corpus::ingest_str("x y. x y. x z. w v.", 1).unwrap();
        let [x, y, z, w] = ids(&c, &["x", "y", "z", "w"])[..] else { unreachable!() };
        assert_eq!(c.candidate_terms(x, 2).unwrap(), vec![y]);
        assert_eq!(c.candidate_terms(x, 1).unwrap(), vec![y, z]);
        assert_eq!(c.candidate_terms(w, 1).unwrap().len(), 1);
        let c2 = Corpus::ingest_str("x y. q r.", 1).unwrap();
        let x2 = c2.vocab().id("x").unwrap();
        assert_eq!(c2.candidate_terms(x2, 2).unwrap(), vec![]);
    }

    #[test]
    fn negative_sampling() {
        let text = (0..10).map(|i| format!("w{i} u{i} common.")).collect::<Vec<_>>().join(" ");
        let c = Corpus::ingest_str(&text, 1).unwrap();
        assert!(c.sample_negative_sentences(0, 1).unwrap().is_empty());
        let a = c.sample_negative_sentences(1000, 7).unwrap();
        let b = c.sample_negative_sentences(1000, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 1000);
        for s in &a {
            assert!(s.sentence_id <= 9);
            assert_ne!(s.pos_a, s.pos_b);
            assert_ne!(s.term_a(), s.term_b());
        }
        let single = Corpus::ingest_str("a. a a.", 1).unwrap();
        assert!(matches!(
            single.sample_negative_sentences(3, 1),
            Err(Error::NoEligibleSentence(_))
        ));
    }

    #[test]
    fn binary_roundtrip() {
        let c = Corpus::ingest_str("a b. a c!\n\nc d a", 1).unwrap();
        let mut buf = Vec::new();
        c.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..8], b"TXFCORP\0");
        let back = Corpus::read_binary(&buf[..]).unwrap();
        assert_eq!(back, c);
        buf[0] = b'X';
        assert!(matches!(Corpus::read_binary(&buf[..]), Err(Error::Format(_))));
    }

    fn small_corpus() -> impl Strategy<Value = String> {
        let sentence = prop::collection::vec(0u8..8, 1..6)
            .prop_map(|ws| ws.iter().map(|w| format!("t{w}")).collect::<Vec<_>>().join(" ") + ".");
        let doc = prop::collection::vec(sentence, 1..5).prop_map(|s| s.join(" "));
        prop::collection::vec(doc, 1..10).prop_map(|d| d.join("\n"))
    }

    proptest! {
        #[test]
        fn statements_match_brute_force(text in small_corpus(), a in 0u8..8, b in 0u8..8) {
            let c = Corpus::ingest_str(&text, 1).unwrap();
            let (Some(ta), Some(tb)) = (c.vocab().id(&format!("t{a}")), c.vocab().id(&format!("t{b}"))) else {
                return Ok(());
            };
            prop_assume!(ta != tb);
            let got: Vec<SentenceId> = c.relation_statements(ta, tb, usize::MAX).unwrap()
                .iter().map(|s| s.sentence_id).collect();
            let expected: Vec<SentenceId> = c.sentences().iter().enumerate()
                .filter(|(_, s)| s.tokens.contains(&ta) && s.tokens.contains(&tb))
                .map(|(i, _)| i as SentenceId).collect();
            prop_assert_eq!(got, expected);
        }

        #[test]
        fn ingest_is_idempotent(text in small_corpus(), min_count in 1u64..3) {
            let Ok(first) = Corpus::ingest_str(&text, min_count) else { return Ok(()); };
            let mut exported = Vec::new();
            first.export_text(&mut exported).unwrap();
            let second = Corpus::ingest(&exported[..], min_count).unwrap();
            prop_assert_eq!(first.vocab(), second.vocab());
            prop_assert_eq!(first.sentences(), second.sentences());
        }

        #[test]
        fn candidate_order_is_total(text in small_corpus(), a in 0u8..8) {
            let c = Corpus::ingest_str(&text, 1).unwrap();
            let Some(anchor) = c.vocab().id(&format!("t{a}")) else { return Ok(()); };
            let counts = c.cooccurrence_counts(anchor).unwrap();
            for w in counts.windows(2) {
                prop_assert!(w[0].1 > w[1].1 || (w[0].1 == w[1].1 && w[0].0 < w[1].0));
            }
            for &(t, n) in &counts {
                prop_assert_eq!(n, c.index().cooccurrence_count(anchor, t));
            }
        }
    }
}
