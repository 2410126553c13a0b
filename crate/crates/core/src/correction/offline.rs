use std::cmp::Ordering;
use std::collections::BTreeSet;

use super::distance::within;
use super::{CorrectionResult, CorrectionSource, Lexicon};
use crate::error::{Error, Result};

/// Largest edit distance considered for a word.
pub const MAX_EDIT_DISTANCE: usize = 2;
/// Weight of `ln(1 + bigram count)` relative to `ln(frequency)`.
pub const BIGRAM_WEIGHT: f64 = 2.0;
/// Distance charged for keeping a word that is not in the lexicon.
pub const UNKNOWN_WORD_COST: usize = MAX_EDIT_DISTANCE + 1;

const WORD_CANDIDATES: usize = 8;
const BEAM_WIDTH: usize = 32;

#[derive(Clone, Debug)]
struct WordCandidate<'a> {
    word: &'a str,
    distance: usize,
    log_freq: f64,
}

/// Lexicon words within [`MAX_EDIT_DISTANCE`] of `token`, ranked by
/// (distance, -frequency, alphabetical). An out-of-vocabulary token is
/// kept as a last resort.
fn word_candidates<'a>(token: &'a str, lexicon: &'a Lexicon) -> Vec<WordCandidate<'a>> {
    let mut found: Vec<(usize, u32, &str)> = lexicon
        .words()
        .filter_map(|(w, f)| within(token, w, MAX_EDIT_DISTANCE).map(|d| (d, f, w)))
        .collect();
    found.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)).then(a.2.cmp(b.2)));
    found.truncate(WORD_CANDIDATES);
    let mut out: Vec<WordCandidate> = found
        .into_iter()
        .map(|(distance, f, word)| WordCandidate {
            word,
            distance,
            log_freq: f64::from(f).ln(),
        })
        .collect();
    if !lexicon.contains(token) {
        out.push(WordCandidate {
            word: token,
            distance: UNKNOWN_WORD_COST,
            log_freq: 0.0,
        });
    }
    out
}

#[derive(Clone, Debug)]
struct Hypothesis<'a> {
    words: Vec<&'a str>,
    distance: usize,
    unigram: f64,
}

impl Hypothesis<'_> {
    fn text(&self) -> String {
        self.words.join(" ")
    }
}

fn bigram_score(words: &[&str], lexicon: &Lexicon) -> f64 {
    words
        .windows(2)
        .map(|p| BIGRAM_WEIGHT * f64::from(lexicon.bigram(p[0], p[1])).ln_1p())
        .sum()
}

/// Total score: `sum ln(freq) + BIGRAM_WEIGHT * sum ln(1 + bigram)`.
pub fn phrase_score(words: &[&str], lexicon: &Lexicon) -> f64 {
    let unigram: f64 = words
        .iter()
        .map(|w| lexicon.frequency(w).map_or(0.0, |f| f64::from(f).ln()))
        .sum();
    unigram + bigram_score(words, lexicon)
}

/// Lower distance first, then higher score, then alphabetical.
fn rank(a: &(usize, f64, String), b: &(usize, f64, String)) -> Ordering {
    a.0.cmp(&b.0)
        .then(b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal))
        .then(a.2.cmp(&b.2))
}

/// Variants of `words` reachable by adjacent swaps that raise the bigram
/// score: every improving single swap, plus the greedy fixpoint.
fn reorderings<'a>(words: &[&'a str], lexicon: &Lexicon) -> Vec<Vec<&'a str>> {
    let mut out = Vec::new();
    let base = bigram_score(words, lexicon);
    for i in 0..words.len().saturating_sub(1) {
        let mut w = words.to_vec();
        w.swap(i, i + 1);
        if bigram_score(&w, lexicon) > base {
            out.push(w);
        }
    }
    let mut current = words.to_vec();
    let mut score = base;
    loop {
        let mut best: Option<(f64, usize)> = None;
        for i in 0..current.len().saturating_sub(1) {
            current.swap(i, i + 1);
            let s = bigram_score(&current, lexicon);
            current.swap(i, i + 1);
            if s > score && best.is_none_or(|(b, _)| s > b) {
                best = Some((s, i));
            }
        }
        match best {
            Some((s, i)) => {
                current.swap(i, i + 1);
                score = s;
            }
            None => break,
        }
    }
    if score > base {
        out.push(current);
    }
    out
}

/// Three ranked corrections of `text` using only `lexicon`.
///
/// Words are corrected independently within [`MAX_EDIT_DISTANCE`], a beam
/// search combines them under unigram and bigram scores, and a reorder
/// pass adds adjacent swaps that raise the bigram score. Candidates are
/// ranked by total edit distance, then score, then alphabetically; fewer
/// than three distinct candidates are padded with the best one.
pub fn correct_offline(text: &str, lexicon: &Lexicon) -> Result<CorrectionResult> {
    let upper = text.trim().to_ascii_uppercase();
    let tokens: Vec<&str> = upper.split_whitespace().collect();
    if tokens.is_empty() {
        return Err(Error::Empty("text to correct"));
    }
    let per_word: Vec<Vec<WordCandidate>> = tokens.iter().map(|t| word_candidates(t, lexicon)).collect();

    let mut beam = vec![Hypothesis {
        words: Vec::new(),
        distance: 0,
        unigram: 0.0,
    }];
    for options in &per_word {
        let mut next: Vec<(Hypothesis, f64)> = Vec::with_capacity(beam.len() * options.len());
        for h in &beam {
            for c in options {
                let mut words = h.words.clone();
                words.push(c.word);
                let hyp = Hypothesis {
                    words,
                    distance: h.distance + c.distance,
                    unigram: h.unigram + c.log_freq,
                };
                let score = hyp.unigram + bigram_score(&hyp.words, lexicon);
                next.push((hyp, score));
            }
        }
        let mut keyed: Vec<((usize, f64, String), Hypothesis)> = next
            .into_iter()
            .map(|(h, s)| ((h.distance, s, h.text()), h))
            .collect();
        keyed.sort_by(|a, b| rank(&a.0, &b.0));
        keyed.truncate(BEAM_WIDTH);
        beam = keyed.into_iter().map(|(_, h)| h).collect();
    }

    let mut finals: Vec<(usize, f64, String)> = Vec::new();
    for h in &beam {
        finals.push((h.distance, h.unigram + bigram_score(&h.words, lexicon), h.text()));
        for w in reorderings(&h.words, lexicon) {
            finals.push((h.distance, h.unigram + bigram_score(&w, lexicon), w.join(" ")));
        }
    }
    finals.sort_by(rank);
    let mut seen = BTreeSet::new();
    let mut ranked: Vec<String> = finals
        .into_iter()
        .filter_map(|(_, _, s)| seen.insert(s.clone()).then_some(s))
        .take(3)
        .collect();
    while ranked.len() < 3 {
        ranked.push(ranked[0].clone());
    }
    CorrectionResult::new(ranked, CorrectionSource::Offline)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn lex() -> Lexicon {
        Lexicon::builtin()
    }

    #[test]
    fn documented_examples() {
        let r = correct_offline("TOY BOK", &lex()).unwrap();
        assert!(r.contains("TOY BOOK"), "{r:?}");
        let r = correct_offline("you thank", &lex()).unwrap();
        assert_eq!(r.candidates[0], "THANK YOU", "{r:?}");
        let r = correct_offline("MOVIE GOOD", &lex()).unwrap();
        assert!(r.contains("GOOD MOVIE"), "{r:?}");
    }

    #[test]
    fn known_input_is_first() {
        let r = correct_offline("HELLO", &lex()).unwrap();
        assert_eq!(r.candidates[0], "HELLO");
        let r = correct_offline("  hello   world ", &lex()).unwrap();
        assert_eq!(r.candidates[0], "HELLO WORLD");
    }

    #[test]
    fn pads_to_three() {
        let small = Lexicon::from_corpus(&["CAT"], &[]).unwrap();
        let r = correct_offline("CAT", &small).unwrap();
        assert_eq!(r.candidates, ["CAT", "CAT", "CAT"].map(String::from));
        let r = correct_offline("XYZZY", &small).unwrap();
        assert_eq!(r.candidates[0], "XYZZY");
    }

    #[test]
    fn empty_text_is_an_error() {
        assert!(correct_offline("   ", &lex()).is_err());
        assert!(correct_offline("", &lex()).is_err());
    }

    #[test]
    fn swaps_need_bigram_gain() {
        let l = Lexicon::from_corpus(&["A B", "A B", "C"], &[]).unwrap();
        assert_eq!(reorderings(&["B", "A"], &l), vec![vec!["A", "B"], vec!["A", "B"]]);
        assert!(reorderings(&["A", "B"], &l).is_empty());
        assert!(reorderings(&["C", "A"], &l).is_empty());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn deterministic_and_well_formed(text in "[A-Z]{1,7}( [A-Z]{1,7}){0,3}") {
            let l = lex();
            let a = correct_offline(&text, &l).unwrap();
            let b = correct_offline(&text, &l).unwrap();
            prop_assert_eq!(&a, &b);
            for c in &a.candidates {
                prop_assert!(!c.is_empty());
                prop_assert_eq!(c.clone(), c.to_ascii_uppercase());
                prop_assert_eq!(c.split(' ').count(), text.split(' ').count());
            }
        }

        #[test]
        fn in_lexicon_phrase_is_kept(i in 0usize..super::super::BUILTIN_PHRASES.len()) {
            let l = lex();
            let phrase = super::super::BUILTIN_PHRASES[i];
            let words: Vec<&str> = phrase.split(' ').collect();
            if reorderings(&words, &l).is_empty() {
                let r = correct_offline(phrase, &l).unwrap();
                prop_assert_eq!(&r.candidates[0], phrase);
            }
        }
    }
}
