//! C interface to the interactive-predictive engine.
//!
//! Handles are opaque and owned by the caller: every `*_new`/`*_load`
//! has a matching `*_free`. Functions return an [`IpStatus`]; on failure
//! [`ip_last_error`] describes the problem. Strings are UTF-8, NUL-terminated;
//! strings returned by the library are released with [`ip_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use ipredict::decoder::{DecodeError, SearchConfig};
use ipredict::metrics::{bleu, character_ter, KsmrConvention};
use ipredict::scorers::{NBestScorer, NgramConfig, NgramScorer, Scorer, ScorerError};
use ipredict::seqcore::{FeedbackSignal, SourceContext, Vocabulary};
use ipredict::session::{Session, SessionError};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Io = 4,
    UnknownSource = 5,
    OutOfBounds = 6,
    Accepted = 7,
    Decode = 8,
    Panic = 99,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(IpStatus, String);

impl From<ScorerError> for Failure {
    fn from(e: ScorerError) -> Self {
        let status = match e {
            ScorerError::Io { .. } => IpStatus::Io,
            ScorerError::UnknownSource(_) => IpStatus::UnknownSource,
            _ => IpStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<SessionError> for Failure {
    fn from(e: SessionError) -> Self {
        let status = match &e {
            SessionError::Prefix(_) => IpStatus::OutOfBounds,
            SessionError::Accepted => IpStatus::Accepted,
            SessionError::Decode(DecodeError::Scorer(ScorerError::UnknownSource(_))) => IpStatus::UnknownSource,
            SessionError::Metric(_) => IpStatus::InvalidArgument,
            SessionError::Decode(_) => IpStatus::Decode,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> IpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            IpStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("panic inside ipredict");
            IpStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(IpStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(IpStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure(IpStatus::NullPointer, format!("{what} is null")))
}

fn vocab_from(text: &str) -> Result<Arc<Vocabulary>, Failure> {
    Vocabulary::parse(text)
        .map(Arc::new)
        .map_err(|e| Failure(IpStatus::InvalidArgument, e.to_string()))
}

/// A loaded model, shareable by any number of sessions.
pub struct IpScorer {
    inner: Arc<dyn Scorer>,
}

/// One interactive correction loop.
pub struct IpSession {
    scorer: Arc<dyn Scorer>,
    session: Session,
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn ip_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds an n-best scorer from vocabulary text (one word per line, with
/// `#eos`/`#unk` marker lines) and `source_id<TAB>logprob<TAB>candidate`
/// lines.
///
/// # Safety
/// Both strings must be valid NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ip_scorer_nbest_parse(
    vocab_text: *const c_char,
    nbest_text: *const c_char,
    out_scorer: *mut *mut IpScorer,
) -> IpStatus {
    guard(|| {
        let slot = out(out_scorer, "out_scorer")?;
        let vocab = vocab_from(text(vocab_text, "vocab_text")?)?;
        let scorer = NBestScorer::parse(vocab, text(nbest_text, "nbest_text")?)?;
        *slot = Box::into_raw(Box::new(IpScorer { inner: Arc::new(scorer) }));
        Ok(())
    })
}

/// As [`ip_scorer_nbest_parse`], reading both tables from files.
///
/// # Safety
/// Both paths must be valid NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ip_scorer_nbest_load(
    vocab_path: *const c_char,
    nbest_path: *const c_char,
    out_scorer: *mut *mut IpScorer,
) -> IpStatus {
    guard(|| {
        let slot = out(out_scorer, "out_scorer")?;
        let vocab = Vocabulary::load(text(vocab_path, "vocab_path")?)
            .map(Arc::new)
            .map_err(|e| Failure(IpStatus::Io, e.to_string()))?;
        let scorer = NBestScorer::load(vocab, text(nbest_path, "nbest_path")?)?;
        *slot = Box::into_raw(Box::new(IpScorer { inner: Arc::new(scorer) }));
        Ok(())
    })
}

/// Trains the default n-gram scorer on line-aligned source and target text.
/// `vocab_text` may be null, in which case the vocabulary is built from the
/// target side.
///
/// # Safety
/// Non-null strings must be valid NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ip_scorer_ngram_train(
    vocab_text: *const c_char,
    source_text: *const c_char,
    target_text: *const c_char,
    out_scorer: *mut *mut IpScorer,
) -> IpStatus {
    guard(|| {
        let slot = out(out_scorer, "out_scorer")?;
        let src = text(source_text, "source_text")?;
        let tgt = text(target_text, "target_text")?;
        let vocab = if vocab_text.is_null() {
            Arc::new(
                Vocabulary::build_from_texts(tgt.lines())
                    .map_err(|e| Failure(IpStatus::InvalidArgument, e.to_string()))?,
            )
        } else {
            vocab_from(text(vocab_text, "vocab_text")?)?
        };
        let (s, t): (Vec<&str>, Vec<&str>) = (src.lines().collect(), tgt.lines().collect());
        if s.len() != t.len() {
            return Err(Failure(
                IpStatus::InvalidArgument,
                format!("{} source lines vs {} target lines", s.len(), t.len()),
            ));
        }
        let scorer = NgramScorer::train(vocab, s.into_iter().zip(t), NgramConfig::default())?;
        *slot = Box::into_raw(Box::new(IpScorer { inner: Arc::new(scorer) }));
        Ok(())
    })
}

/// # Safety
/// `scorer` must come from an `ip_scorer_*` constructor, or be null.
#[no_mangle]
pub unsafe extern "C" fn ip_scorer_free(scorer: *mut IpScorer) {
    if !scorer.is_null() {
        drop(Box::from_raw(scorer));
    }
}

/// Starts a session and decodes the initial prediction. `source_id` may be
/// null; lookup-based scorers key on it when given and on `source_text`
/// otherwise. `beam_size` 0 selects the default.
///
/// # Safety
/// `scorer` must be a live handle; strings valid NUL-terminated or null where
/// allowed; `out_session` writable.
#[no_mangle]
pub unsafe extern "C" fn ip_session_new(
    scorer: *const IpScorer,
    source_text: *const c_char,
    source_id: *const c_char,
    beam_size: u32,
    out_session: *mut *mut IpSession,
) -> IpStatus {
    guard(|| {
        let slot = out(out_session, "out_session")?;
        let scorer = scorer
            .as_ref()
            .ok_or_else(|| Failure(IpStatus::NullPointer, "scorer is null".into()))?;
        let src = text(source_text, "source_text")?;
        let source = if source_id.is_null() {
            SourceContext::text(src)
        } else {
            SourceContext::text_with_id(text(source_id, "source_id")?, src)
        };
        let mut search = SearchConfig::default();
        if beam_size > 0 {
            search.beam_size = beam_size as usize;
        }
        let session = Session::start(&scorer.inner, source, search)?;
        *slot = Box::into_raw(Box::new(IpSession {
            scorer: Arc::clone(&scorer.inner),
            session,
        }));
        Ok(())
    })
}

/// Copies the current hypothesis into a new string; release it with
/// [`ip_string_free`].
///
/// # Safety
/// `session` must be a live handle; `out_text` writable.
#[no_mangle]
pub unsafe extern "C" fn ip_session_hypothesis(session: *const IpSession, out_text: *mut *mut c_char) -> IpStatus {
    guard(|| {
        let slot = out(out_text, "out_text")?;
        let s = session
            .as_ref()
            .ok_or_else(|| Failure(IpStatus::NullPointer, "session is null".into()))?;
        let c = CString::new(s.session.hypothesis())
            .map_err(|e| Failure(IpStatus::InvalidArgument, e.to_string()))?;
        *slot = c.into_raw();
        Ok(())
    })
}

fn feedback(session: *mut IpSession, signal: FeedbackSignal) -> IpStatus {
    guard(|| {
        // SAFETY: callers pass a live handle or null, per the public contract.
        let s = unsafe { out(session, "session")? };
        s.session.feedback(&s.scorer, signal)?;
        Ok(())
    })
}

/// Types `codepoint` at character `position` of the current hypothesis and
/// re-decodes.
///
/// # Safety
/// `session` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ip_session_feedback(session: *mut IpSession, position: usize, codepoint: u32) -> IpStatus {
    match char::from_u32(codepoint) {
        Some(c) => feedback(session, FeedbackSignal::char(position, c)),
        None => {
            set_error(&format!("{codepoint:#x} is not a Unicode scalar value"));
            IpStatus::InvalidArgument
        }
    }
}

/// Declares the hypothesis complete at character `position`.
///
/// # Safety
/// `session` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ip_session_end_of_text(session: *mut IpSession, position: usize) -> IpStatus {
    feedback(session, FeedbackSignal::end_of_text(position))
}

/// Live effort counters. Any output pointer may be null.
///
/// # Safety
/// `session` must be a live handle; non-null outputs writable.
#[no_mangle]
pub unsafe extern "C" fn ip_session_counters(
    session: *const IpSession,
    keystrokes: *mut usize,
    mouse_actions: *mut usize,
    validated_prefix_length: *mut usize,
) -> IpStatus {
    guard(|| {
        let s = session
            .as_ref()
            .ok_or_else(|| Failure(IpStatus::NullPointer, "session is null".into()))?;
        let trace = s.session.trace();
        if let Some(k) = keystrokes.as_mut() {
            *k = trace.keystrokes();
        }
        if let Some(m) = mouse_actions.as_mut() {
            *m = trace.mouse_actions(KsmrConvention::default());
        }
        if let Some(v) = validated_prefix_length.as_mut() {
            *v = s.session.validated_prefix_length();
        }
        Ok(())
    })
}

/// Accepts the current hypothesis (idempotent) and reports its KSMR.
///
/// # Safety
/// `session` must be a live handle; `out_ksmr` writable or null.
#[no_mangle]
pub unsafe extern "C" fn ip_session_accept(session: *mut IpSession, out_ksmr: *mut f64) -> IpStatus {
    guard(|| {
        let s = out(session, "session")?;
        s.session.accept();
        let k = s.session.ksmr(KsmrConvention::default())?;
        if let Some(o) = out_ksmr.as_mut() {
            *o = k;
        }
        Ok(())
    })
}

/// # Safety
/// `session` must come from [`ip_session_new`], or be null.
#[no_mangle]
pub unsafe extern "C" fn ip_session_free(session: *mut IpSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// # Safety
/// `s` must be a string returned by this library, or null.
#[no_mangle]
pub unsafe extern "C" fn ip_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// CharacTER of one hypothesis against one reference, on the 0-100 scale.
///
/// # Safety
/// Strings valid NUL-terminated; `out_rate` writable.
#[no_mangle]
pub unsafe extern "C" fn ip_character_ter(
    hypothesis: *const c_char,
    reference: *const c_char,
    out_rate: *mut f64,
) -> IpStatus {
    guard(|| {
        let slot = out(out_rate, "out_rate")?;
        *slot = character_ter(text(hypothesis, "hypothesis")?, text(reference, "reference")?);
        Ok(())
    })
}

/// Corpus BLEU-4 over `n` hypotheses, one reference each.
///
/// # Safety
/// `hypotheses` and `references` must point to `n` valid strings each;
/// `out_rate` writable.
#[no_mangle]
pub unsafe extern "C" fn ip_bleu(
    hypotheses: *const *const c_char,
    references: *const *const c_char,
    n: usize,
    out_rate: *mut f64,
) -> IpStatus {
    guard(|| {
        let slot = out(out_rate, "out_rate")?;
        if n > 0 && (hypotheses.is_null() || references.is_null()) {
            return Err(Failure(IpStatus::NullPointer, "string array is null".into()));
        }
        let mut hyps = Vec::with_capacity(n);
        let mut refs = Vec::with_capacity(n);
        for i in 0..n {
            hyps.push(text(*hypotheses.add(i), "hypothesis")?);
            refs.push(vec![text(*references.add(i), "reference")?.to_owned()]);
        }
        *slot = bleu(&hyps, &refs).map_err(|e| Failure(IpStatus::InvalidArgument, e.to_string()))?;
        Ok(())
    })
}
