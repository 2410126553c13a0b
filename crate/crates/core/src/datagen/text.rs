use std::fmt;

use rand::seq::IndexedRandom;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::{self, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ErrorKind {
    Substitution,
    Missing,
    Extra,
    WordOrder,
}

impl ErrorKind {
    pub const ALL: [ErrorKind; 4] = [
        ErrorKind::Substitution,
        ErrorKind::Missing,
        ErrorKind::Extra,
        ErrorKind::WordOrder,
    ];
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorKind::Substitution => "substitution",
            ErrorKind::Missing => "missing",
            ErrorKind::Extra => "extra",
            ErrorKind::WordOrder => "word_order",
        })
    }
}

/// Probabilities of the four corruption categories.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorMix {
    pub p_substitution: f64,
    pub p_missing: f64,
    pub p_extra: f64,
    pub p_word_order: f64,
}

impl Default for ErrorMix {
    /// 35% substitution, 25% missing, 20% extra, 20% word order.
    fn default() -> Self {
        ErrorMix {
            p_substitution: 0.35,
            p_missing: 0.25,
            p_extra: 0.20,
            p_word_order: 0.20,
        }
    }
}

impl ErrorMix {
    pub fn only(kind: ErrorKind) -> Self {
        let mut p = [0.0; 4];
        p[kind as usize] = 1.0;
        ErrorMix {
            p_substitution: p[0],
            p_missing: p[1],
            p_extra: p[2],
            p_word_order: p[3],
        }
    }

    fn probs(&self) -> [f64; 4] {
        [self.p_substitution, self.p_missing, self.p_extra, self.p_word_order]
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.probs();
        if p.iter().any(|&x| x.is_nan() || x < 0.0) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "error mix {p:?} must be non-negative and sum to 1"
            )));
        }
        Ok(())
    }

    fn sample(&self, rng: &mut Rng, allow_word_order: bool) -> Option<ErrorKind> {
        let mut p = self.probs();
        if !allow_word_order {
            p[3] = 0.0;
        }
        let total: f64 = p.iter().sum();
        if total <= 0.0 {
            return None;
        }
        let mut u = rng.random::<f64>() * total;
        for (kind, w) in ErrorKind::ALL.into_iter().zip(p) {
            if u < w {
                return Some(kind);
            }
            u -= w;
        }
        // rounding left u at the top edge; take the last category with weight
        ErrorKind::ALL.into_iter().zip(p).rev().find(|(_, w)| *w > 0.0).map(|(k, _)| k)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Corruption {
    pub text: String,
    pub kind: ErrorKind,
}

fn random_letter(rng: &mut Rng, except: Option<u8>) -> u8 {
    loop {
        let c = b'A' + rng.random_range(0..26u8);
        if Some(c) != except {
            return c;
        }
    }
}

fn word_spans(text: &[u8]) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = None;
    for (i, &c) in text.iter().enumerate() {
        match (c == b' ', start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                spans.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        spans.push((s, text.len()));
    }
    spans
}

/// Apply exactly one error, drawn from `mix`, to `clean`.
///
/// Word-order errors need two words; on single-word input the category is
/// redrawn from the remaining three.
pub fn corrupt_text(clean: &str, mix: &ErrorMix, seed: u64) -> Result<Corruption> {
    mix.validate()?;
    if clean.trim().is_empty() {
        return Err(Error::Empty("text to corrupt"));
    }
    if let Some(bad) = clean.chars().find(|c| !(c.is_ascii_uppercase() || *c == ' ')) {
        return Err(Error::UnsupportedChar(bad));
    }
    let mut rng = rng::stream(seed, "corruption", 0);
    let bytes = clean.as_bytes();
    let words = word_spans(bytes);
    let kind = mix.sample(&mut rng, words.len() >= 2).ok_or_else(|| {
        Error::InvalidArgument("error mix only allows word-order errors but the text has one word".into())
    })?;
    let letters: Vec<usize> = (0..bytes.len()).filter(|&i| bytes[i] != b' ').collect();
    let mut out = bytes.to_vec();
    match kind {
        ErrorKind::Substitution => {
            let &i = letters.choose(&mut rng).expect("non-empty text has letters");
            out[i] = random_letter(&mut rng, Some(bytes[i]));
        }
        ErrorKind::Missing => {
            // keep every word non-empty when possible
            let safe: Vec<usize> = words
                .iter()
                .filter(|(s, e)| e - s >= 2)
                .flat_map(|&(s, e)| s..e)
                .collect();
            let pool = if safe.is_empty() { &letters } else { &safe };
            let &i = pool.choose(&mut rng).expect("non-empty pool");
            out.remove(i);
        }
        ErrorKind::Extra => {
            let &(s, e) = words.choose(&mut rng).expect("at least one word");
            let at = rng.random_range(s..=e);
            out.insert(at, random_letter(&mut rng, None));
        }
        ErrorKind::WordOrder => {
            let i = rng.random_range(0..words.len() - 1);
            let (a, b) = (words[i], words[i + 1]);
            let mut swapped = Vec::with_capacity(out.len());
            swapped.extend_from_slice(&bytes[..a.0]);
            swapped.extend_from_slice(&bytes[b.0..b.1]);
            swapped.extend_from_slice(&bytes[a.1..b.0]);
            swapped.extend_from_slice(&bytes[a.0..a.1]);
            swapped.extend_from_slice(&bytes[b.1..]);
            out = swapped;
        }
    }
    let mut text = String::from_utf8(out).expect("ASCII in, ASCII out");
    if text.contains("  ") || text.starts_with(' ') || text.ends_with(' ') {
        text = text.split_whitespace().collect::<Vec<_>>().join(" ");
    }
    Ok(Corruption { text, kind })
}

/// `(corrupted, clean, kind)` triples. Phrases are drawn uniformly; every
/// sample gets its own corruption stream.
pub fn corrupt_corpus(
    phrases: &[&str],
    count: usize,
    mix: &ErrorMix,
    seed: u64,
) -> Result<Vec<(String, String, ErrorKind)>> {
    if phrases.is_empty() {
        return Err(Error::Empty("phrase list"));
    }
    let mut pick = rng::stream(seed, "corpus-pick", 0);
    (0..count)
        .map(|i| {
            let clean = phrases[pick.random_range(0..phrases.len())];
            let sample_seed = rng::substream(seed, "corpus") ^ i as u64;
            let c = corrupt_text(clean, mix, sample_seed)?;
            Ok((c.text, clean.to_string(), c.kind))
        })
        .collect()
}
