//! C ABI over the taxoforge engine.
//!
//! Objects cross the boundary as opaque handles created by `txf_*_new`/
//! `txf_*_load` style functions and released by the matching `txf_*_free`.
//! Every fallible call returns a [`TxfStatus`]; on failure the message is
//! kept per thread and read with [`txf_last_error`]. Strings returned to the
//! caller are owned by the caller and released with [`txf_string_free`].
//! Panics never unwind into C: they are caught and reported as
//! [`TxfStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use taxoforge::corpus::Corpus;
use taxoforge::eval::{relation_f1, AncestorPairSet, PairMode, SynonymMap};
use taxoforge::pipeline::{self, RunConfig};
use taxoforge::relation::RelationDistribution;
use taxoforge::taxonomy::Taxonomy;
use taxoforge::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TxfStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Parse = 4,
    Precondition = 5,
    NotFound = 6,
    Io = 7,
    Scorer = 8,
    Stage = 9,
    Internal = 10,
    Panic = 11,
}

/// Ingested corpus.
pub struct TxfCorpus {
    inner: Corpus,
}

/// Seed or constructed taxonomy.
pub struct TxfTaxonomy {
    inner: Taxonomy,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let clean = message.replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(clean).expect("no interior nul"));
}

fn status_of(e: &Error) -> TxfStatus {
    match e {
        Error::Config(_) => TxfStatus::Config,
        Error::Parse { .. } | Error::Json(_) | Error::Format(_) | Error::Taxonomy { .. } | Error::DuplicateNode(_) => {
            TxfStatus::Parse
        }
        Error::EmptyCorpus | Error::MinCountTooHigh(_) | Error::Precondition(_) | Error::NoEligibleSentence(_) => {
            TxfStatus::Precondition
        }
        Error::UnknownTerm(_) | Error::UnknownNode(_) | Error::MissingEmbedding(_) => TxfStatus::NotFound,
        Error::Io(_) => TxfStatus::Io,
        Error::Transport { .. } | Error::Protocol { .. } => TxfStatus::Scorer,
        Error::Stage { .. } => TxfStatus::Stage,
        _ => TxfStatus::Internal,
    }
}

/// Runs `f`, converting errors and panics into a status plus last error.
fn guard(f: impl FnOnce() -> Result<(), TxfStatus>) -> TxfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            TxfStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("panic: {msg}"));
            TxfStatus::Panic
        }
    }
}

fn fail(e: Error) -> TxfStatus {
    set_error(&e.to_string());
    status_of(&e)
}

fn null(what: &str) -> TxfStatus {
    set_error(&format!("null argument: {what}"));
    TxfStatus::NullArgument
}

/// # Safety
/// `p` must be null or a valid nul-terminated string.
unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, TxfStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(&format!("{what} is not valid UTF-8"));
        TxfStatus::InvalidUtf8
    })
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("no interior nul").into_raw()
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn txf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, empty after a success.
/// Valid until the next `txf_*` call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn txf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn txf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Ingests UTF-8 text, one document per line.
///
/// # Safety
/// `text` must be a valid nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn txf_corpus_from_text(text: *const c_char, min_count: u64, out: *mut *mut TxfCorpus) -> TxfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = read_str(text, "text")?;
        let corpus = Corpus::ingest_str(text, min_count).map_err(fail)?;
        *out = Box::into_raw(Box::new(TxfCorpus { inner: corpus }));
        Ok(())
    })
}

/// # Safety
/// `corpus` must be null or a handle from [`txf_corpus_from_text`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn txf_corpus_free(corpus: *mut TxfCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// Vocabulary size and sentence count.
///
/// # Safety
/// `corpus` must be a live handle; the out pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn txf_corpus_stats(corpus: *const TxfCorpus, vocab: *mut usize, sentences: *mut usize) -> TxfStatus {
    guard(|| {
        let c = corpus.as_ref().ok_or_else(|| null("corpus"))?;
        if !vocab.is_null() {
            *vocab = c.inner.vocab().len();
        }
        if !sentences.is_null() {
            *sentences = c.inner.sentences().len();
        }
        Ok(())
    })
}

/// Number of sentences containing both terms.
///
/// # Safety
/// `corpus` must be a live handle, `a` and `b` valid strings, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn txf_corpus_cooccurrence(
    corpus: *const TxfCorpus,
    a: *const c_char,
    b: *const c_char,
    out: *mut usize,
) -> TxfStatus {
    guard(|| {
        let c = corpus.as_ref().ok_or_else(|| null("corpus"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let vocab = c.inner.vocab();
        let ta = vocab.require(read_str(a, "a")?).map_err(fail)?;
        let tb = vocab.require(read_str(b, "b")?).map_err(fail)?;
        *out = c.inner.index().cooccurrence_count(ta, tb);
        Ok(())
    })
}

/// Parses a taxonomy (JSON object, JSON forest, or tab-separated edge list).
///
/// # Safety
/// `text` must be a valid string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn txf_taxonomy_load(text: *const c_char, out: *mut *mut TxfTaxonomy) -> TxfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = read_str(text, "text")?;
        let tax = Taxonomy::load(text.as_bytes()).map_err(fail)?;
        *out = Box::into_raw(Box::new(TxfTaxonomy { inner: tax }));
        Ok(())
    })
}

/// # Safety
/// `tax` must be null or a live taxonomy handle.
#[no_mangle]
pub unsafe extern "C" fn txf_taxonomy_free(tax: *mut TxfTaxonomy) {
    if !tax.is_null() {
        drop(Box::from_raw(tax));
    }
}

/// # Safety
/// `tax` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn txf_taxonomy_node_count(tax: *const TxfTaxonomy, out: *mut usize) -> TxfStatus {
    guard(|| {
        let t = tax.as_ref().ok_or_else(|| null("taxonomy"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = t.inner.len();
        Ok(())
    })
}

/// Structural JSON of the taxonomy; free with [`txf_string_free`].
///
/// # Safety
/// `tax` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn txf_taxonomy_to_json(tax: *const TxfTaxonomy, out: *mut *mut c_char) -> TxfStatus {
    guard(|| {
        let t = tax.as_ref().ok_or_else(|| null("taxonomy"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = into_c_string(t.inner.to_json().map_err(fail)?);
        Ok(())
    })
}

/// Relation precision, recall and F1 of `pred` against gold
/// `ancestor<TAB>descendant` lines. `transitive` selects ancestor pairs
/// (non-zero) or direct edges (zero).
///
/// # Safety
/// `pred` must be a live handle, `gold` a valid string; out pointers valid or null.
#[no_mangle]
pub unsafe extern "C" fn txf_relation_f1(
    pred: *const TxfTaxonomy,
    gold: *const c_char,
    transitive: i32,
    precision: *mut f64,
    recall: *mut f64,
    f1: *mut f64,
) -> TxfStatus {
    guard(|| {
        let t = pred.as_ref().ok_or_else(|| null("pred"))?;
        let syn = SynonymMap::default();
        let gold = AncestorPairSet::parse(read_str(gold, "gold")?, &syn).map_err(fail)?;
        let mode = if transitive != 0 { PairMode::Transitive } else { PairMode::Direct };
        let scores = relation_f1(&AncestorPairSet::from_taxonomy(&t.inner, mode, &syn), &gold).map_err(fail)?;
        for (p, v) in [(precision, scores.precision), (recall, scores.recall), (f1, scores.f1)] {
            if !p.is_null() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// KL(uniform || p) of a three-class distribution ordered
/// (forward, backward, none).
///
/// # Safety
/// `p` must point to three readable doubles and `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn txf_kl_from_uniform(p: *const f64, out: *mut f64) -> TxfStatus {
    guard(|| {
        if p.is_null() || out.is_null() {
            return Err(null("p/out"));
        }
        let probs = [*p, *p.add(1), *p.add(2)];
        *out = RelationDistribution::new(probs).map_err(fail)?.kl_from_uniform();
        Ok(())
    })
}

/// Runs the full pipeline from a TOML config file. On success `out_tax`
/// receives the constructed taxonomy and, when non-null, `out_report`
/// the run report as JSON (free with [`txf_string_free`]).
///
/// # Safety
/// `config_path` must be a valid string; out pointers valid or null.
#[no_mangle]
pub unsafe extern "C" fn txf_run(
    config_path: *const c_char,
    out_tax: *mut *mut TxfTaxonomy,
    out_report: *mut *mut c_char,
) -> TxfStatus {
    guard(|| {
        if out_tax.is_null() {
            return Err(null("out_tax"));
        }
        let path = read_str(config_path, "config_path")?;
        let cfg = RunConfig::load(Path::new(path)).map_err(fail)?;
        let output = pipeline::run(&cfg).map_err(fail)?;
        if !out_report.is_null() {
            *out_report = into_c_string(output.report.to_json());
        }
        *out_tax = Box::into_raw(Box::new(TxfTaxonomy { inner: output.taxonomy }));
        Ok(())
    })
}
