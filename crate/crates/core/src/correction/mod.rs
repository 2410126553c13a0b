//! Turning raw recognized text into three ranked corrections.

mod distance;
mod eval;
mod lexicon;
mod offline;
mod remote;

pub use distance::{damerau_levenshtein, within};
pub use eval::{evaluate_corrector, CorrectorMetrics};
pub use lexicon::{Lexicon, BUILTIN_EXTRA_WORDS, BUILTIN_PHRASES};
pub use offline::{correct_offline, phrase_score, BIGRAM_WEIGHT, MAX_EDIT_DISTANCE, UNKNOWN_WORD_COST};
pub use remote::{
    correct_remote, parse_candidates, RemoteCorrector, RemoteCorrectorConfig, DEFAULT_PROMPT, PROMPT_PLACEHOLDER,
};

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrectionSource {
    Offline,
    Remote,
}

/// Exactly three ranked, non-empty, uppercase candidates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CorrectionResult {
    pub candidates: [String; 3],
    pub source: CorrectionSource,
}

impl CorrectionResult {
    pub fn new(candidates: Vec<String>, source: CorrectionSource) -> Result<Self> {
        let candidates: [String; 3] = candidates
            .try_into()
            .map_err(|v: Vec<String>| Error::Protocol(format!("expected 3 candidates, got {}", v.len())))?;
        for c in &candidates {
            if c.trim().is_empty() || *c != c.to_uppercase() {
                return Err(Error::Protocol(format!("candidate {c:?} must be non-empty uppercase")));
            }
        }
        Ok(CorrectionResult { candidates, source })
    }

    pub fn best(&self) -> &str {
        &self.candidates[0]
    }

    pub fn contains(&self, text: &str) -> bool {
        self.candidates.iter().any(|c| c == text)
    }

    /// 1-based rank of `text`, if present.
    pub fn rank_of(&self, text: &str) -> Option<usize> {
        self.candidates.iter().position(|c| c == text).map(|i| i + 1)
    }
}

/// Anything producing a [`CorrectionResult`] for a text.
pub trait Corrector {
    fn correct(&self, text: &str) -> Result<CorrectionResult>;
}

impl Corrector for Lexicon {
    fn correct(&self, text: &str) -> Result<CorrectionResult> {
        correct_offline(text, self)
    }
}

impl Corrector for RemoteCorrector {
    fn correct(&self, text: &str) -> Result<CorrectionResult> {
        RemoteCorrector::correct(self, text)
    }
}

impl<F: Fn(&str) -> Result<CorrectionResult>> Corrector for F {
    fn correct(&self, text: &str) -> Result<CorrectionResult> {
        self(text)
    }
}
