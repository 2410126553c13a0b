use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Uppercase vocabulary with frequencies and ordered word-pair counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lexicon {
    words: BTreeMap<String, u32>,
    bigrams: BTreeMap<(String, String), u32>,
}

fn normalize(word: &str) -> Result<String> {
    let w = word.trim().to_ascii_uppercase();
    if w.is_empty() || !w.chars().all(|c| c.is_ascii_uppercase()) {
        return Err(Error::InvalidArgument(format!("lexicon word {word:?} must be letters A-Z")));
    }
    Ok(w)
}

impl Lexicon {
    pub fn new(
        words: impl IntoIterator<Item = (String, u32)>,
        bigrams: impl IntoIterator<Item = ((String, String), u32)>,
    ) -> Result<Self> {
        let mut w = BTreeMap::new();
        for (word, freq) in words {
            if freq == 0 {
                return Err(Error::InvalidArgument(format!("word {word} has frequency 0")));
            }
            *w.entry(normalize(&word)?).or_insert(0) += freq;
        }
        if w.is_empty() {
            return Err(Error::Empty("lexicon"));
        }
        let mut b = BTreeMap::new();
        for ((first, second), count) in bigrams {
            let key = (normalize(&first)?, normalize(&second)?);
            if !w.contains_key(&key.0) || !w.contains_key(&key.1) {
                return Err(Error::InvalidArgument(format!(
                    "bigram {} {} uses a word outside the vocabulary",
                    key.0, key.1
                )));
            }
            if count == 0 {
                return Err(Error::InvalidArgument(format!("bigram {} {} has count 0", key.0, key.1)));
            }
            *b.entry(key).or_insert(0) += count;
        }
        Ok(Lexicon { words: w, bigrams: b })
    }

    /// Counts words and adjacent pairs over `phrases`; `extra_words` join
    /// the vocabulary with frequency 1 if they do not occur in any phrase.
    pub fn from_corpus<S: AsRef<str>>(phrases: &[S], extra_words: &[&str]) -> Result<Self> {
        let mut words: BTreeMap<String, u32> = BTreeMap::new();
        let mut bigrams: BTreeMap<(String, String), u32> = BTreeMap::new();
        for phrase in phrases {
            let toks = phrase
                .as_ref()
                .split_whitespace()
                .map(normalize)
                .collect::<Result<Vec<_>>>()?;
            for t in &toks {
                *words.entry(t.clone()).or_insert(0) += 1;
            }
            for pair in toks.windows(2) {
                *bigrams.entry((pair[0].clone(), pair[1].clone())).or_insert(0) += 1;
            }
        }
        for w in extra_words {
            words.entry(normalize(w)?).or_insert(1);
        }
        Lexicon::new(words, bigrams)
    }

    /// The vocabulary and phrase statistics shipped with the crate.
    pub fn builtin() -> Self {
        Lexicon::from_corpus(BUILTIN_PHRASES, BUILTIN_EXTRA_WORDS).expect("builtin corpus is valid")
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn frequency(&self, word: &str) -> Option<u32> {
        self.words.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains_key(word)
    }

    pub fn bigram(&self, first: &str, second: &str) -> u32 {
        self.bigrams
            .get(&(first.to_string(), second.to_string()))
            .copied()
            .unwrap_or(0)
    }

    pub fn words(&self) -> impl Iterator<Item = (&str, u32)> {
        self.words.iter().map(|(w, &f)| (w.as_str(), f))
    }

    pub fn bigrams(&self) -> impl Iterator<Item = (&str, &str, u32)> {
        self.bigrams.iter().map(|((a, b), &c)| (a.as_str(), b.as_str(), c))
    }
}

/// Short everyday phrases; the builtin lexicon's word and bigram counts
/// come from this list, and the correction benchmarks corrupt it.
pub const BUILTIN_PHRASES: &[&str] = &[
    "HELLO", "HELLO WORLD", "HELLO FRIEND", "HELLO THERE", "THANK YOU", "THANK YOU", "THANK YOU",
    "THANK YOU VERY MUCH", "THANK YOU FRIEND", "GOOD MORNING", "GOOD NIGHT", "GOOD EVENING",
    "GOOD MOVIE", "GOOD BOOK", "GOOD JOB", "GOOD LUCK", "HAVE A NICE DAY", "SEE YOU LATER",
    "SEE YOU TOMORROW", "SEE YOU SOON", "HOW ARE YOU", "I AM FINE", "I AM HAPPY", "I AM HUNGRY",
    "I AM TIRED", "I AM SORRY", "I LOVE YOU", "I NEED HELP", "PLEASE HELP ME", "HELP ME PLEASE",
    "WHAT IS YOUR NAME", "MY NAME IS", "NICE TO MEET YOU", "WHERE IS THE SCHOOL",
    "WHERE IS THE HOSPITAL", "CALL THE DOCTOR", "I WANT WATER", "I WANT FOOD", "DRINK SOME WATER",
    "EAT YOUR FOOD", "TOY BOOK", "READ A BOOK", "OPEN THE BOOK", "CLOSE THE DOOR", "OPEN THE DOOR",
    "OPEN THE WINDOW", "TURN ON THE LIGHT", "TURN OFF THE LIGHT", "WATCH A MOVIE", "PLAY WITH TOYS",
    "PLAY OUTSIDE", "COME HERE", "GO HOME", "LET US GO", "WAIT FOR ME", "SLOW DOWN", "STOP NOW",
    "SIT DOWN", "STAND UP", "WAKE UP", "GOOD NEWS", "BAD NEWS", "HAPPY BIRTHDAY", "HAPPY NEW YEAR",
    "WELCOME HOME", "WELCOME BACK", "MY MOTHER", "MY FATHER", "MY SISTER", "MY BROTHER",
    "MY FAMILY", "MY FRIEND", "BEST FRIEND", "LITTLE BROTHER", "BIG SISTER", "THE CAT IS SLEEPING",
    "THE DOG IS RUNNING", "FEED THE DOG", "THE BIRD CAN SING", "I LIKE MUSIC", "I LIKE APPLES",
    "DO YOU UNDERSTAND", "I DO NOT UNDERSTAND", "SPEAK SLOWLY", "SIGN LANGUAGE", "LEARN SIGN LANGUAGE",
    "TEACH ME", "WRITE IT DOWN", "WHAT TIME IS IT", "IT IS LATE", "IT IS EARLY", "TODAY IS MONDAY",
    "TOMORROW IS FRIDAY", "THE WEATHER IS COLD", "THE WEATHER IS WARM", "IT IS RAINING",
    "THE SUN IS BRIGHT", "TAKE THE BUS", "DRIVE THE CAR", "RIDE A BICYCLE", "CATCH THE TRAIN",
    "BUY SOME MILK", "BAKE A CAKE", "COOK DINNER", "EAT BREAKFAST", "LUNCH IS READY",
    "DINNER IS READY", "WASH YOUR HANDS", "BRUSH YOUR TEETH", "CLEAN THE ROOM", "MAKE THE BED",
    "FIND MY PHONE", "SEND A MESSAGE", "ANSWER THE PHONE", "PAY THE BILL", "COUNT THE MONEY",
    "VISIT THE MARKET", "WALK IN THE PARK", "SWIM IN THE RIVER", "CLIMB THE TREE",
    "PLANT A FLOWER", "PAINT A PICTURE", "DRAW A HOUSE", "SING A SONG", "DANCE WITH ME",
    "LISTEN TO ME", "LOOK AT THIS", "TRY AGAIN", "WELL DONE", "NO PROBLEM", "EXCUSE ME",
    "YES PLEASE", "NO THANKS", "OF COURSE", "HOLD MY HAND", "KEEP QUIET", "BE CAREFUL",
    "STAY SAFE", "GET WELL SOON", "TAKE YOUR MEDICINE", "I FEEL SICK", "MY HEAD HURTS",
    "WHERE ARE MY SHOES", "PUT ON YOUR JACKET", "THE GARDEN IS GREEN", "THE SKY IS BLUE",
    "THE APPLE IS RED", "BANANAS ARE YELLOW", "ORANGE JUICE", "CUP OF TEA", "HOT COFFEE",
    "FRESH BREAD", "CHEESE SANDWICH", "CHICKEN SOUP", "RICE AND BEANS", "SUGAR AND SALT",
    "PEN AND PAPER", "TABLE AND CHAIR", "WINTER IS COMING", "SUMMER HOLIDAY", "SPRING FLOWERS",
    "AUTUMN LEAVES", "OCEAN WAVES", "MOUNTAIN ROAD", "CITY STREET", "VILLAGE LIFE",
    "COMPUTER SCREEN", "KEYBOARD AND MOUSE", "CAMERA PHOTO", "FAMOUS SINGER", "FUNNY STORY",
    "QUICK QUESTION", "SIMPLE ANSWER", "STRONG COFFEE", "GENTLE WIND", "QUIET NIGHT",
    "TEACHER AND STUDENT", "DOCTOR AND NURSE", "POLICE OFFICER", "FIRE STATION", "POST OFFICE",
    "BANK ACCOUNT", "SHOPPING LIST", "BIRTHDAY PARTY", "WEDDING DRESS", "FOOTBALL MATCH",
    "CRICKET GAME", "CHESS BOARD", "PUZZLE PIECE", "ELEPHANT", "TIGER", "MONKEY", "RABBIT",
    "HORSE", "PLEASE", "SORRY", "YES", "NO", "MAYBE", "ALWAYS", "NEVER", "TOGETHER",
];

/// Vocabulary that appears in no builtin phrase.
pub const BUILTIN_EXTRA_WORDS: &[&str] = &[
    "ABOUT", "ABOVE", "AFTER", "ALONE", "ANIMAL", "ARRIVE", "BASKET", "BEACH", "BEAUTIFUL",
    "BELOW", "BETWEEN", "BLANKET", "BOTTLE", "BRIDGE", "BUTTER", "CANDLE", "CARPET", "CASTLE",
    "CIRCLE", "CLOUD", "CORNER", "COUNTRY", "DESERT", "DINOSAUR", "DOLPHIN", "EAGLE", "ENGINE",
    "FOREST", "GARLIC", "GUITAR", "HAMMER", "ISLAND", "JUNGLE", "KITCHEN", "LADDER", "LEMON",
    "MIRROR", "NEEDLE", "PENCIL", "PILLOW", "POCKET", "ROCKET", "SHADOW", "SILVER", "SPIDER",
    "TICKET", "TOMATO", "TUNNEL", "UMBRELLA", "VALLEY", "WALLET", "ZEBRA",
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_is_large_enough() {
        let lex = Lexicon::builtin();
        assert!(lex.len() >= 200, "{} words", lex.len());
        assert!(lex.bigram("THANK", "YOU") > lex.bigram("YOU", "THANK"));
        assert!(lex.contains("BOOK") && lex.contains("TOY") && lex.contains("HELLO"));
        assert!(lex.words().all(|(_, f)| f >= 1));
        assert_eq!(lex.frequency("ZEBRA"), Some(1));
        assert_eq!(lex.frequency("QWERTY"), None);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Lexicon::new(Vec::<(String, u32)>::new(), vec![]).is_err());
        assert!(Lexicon::new(vec![("A".to_string(), 0)], vec![]).is_err());
        assert!(Lexicon::new(vec![("A1".to_string(), 1)], vec![]).is_err());
        assert!(Lexicon::new(
            vec![("A".to_string(), 1)],
            vec![(("A".to_string(), "B".to_string()), 1)]
        )
        .is_err());
        let lex = Lexicon::from_corpus(&["hello world", "Hello"], &[]).unwrap();
        assert_eq!(lex.frequency("HELLO"), Some(2));
        assert_eq!(lex.bigram("HELLO", "WORLD"), 1);
        assert_eq!(lex.bigram("WORLD", "HELLO"), 0);
    }
}
