//! Gesture classes and the label spaces of the two recognizers.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    /// Letter index 0..26, `A` = 0.
    Letter(u8),
    Space,
    Delete,
    Blank,
}

impl Label {
    pub fn letter(c: char) -> Option<Label> {
        c.is_ascii_uppercase().then(|| Label::Letter(c as u8 - b'A'))
    }

    pub fn as_char(self) -> Option<char> {
        match self {
            Label::Letter(i) => Some((b'A' + i) as char),
            Label::Space => Some(' '),
            _ => None,
        }
    }

    /// Compact code used by model files: letters 0..26, then SPACE, DELETE, BLANK.
    pub fn code(self) -> u8 {
        match self {
            Label::Letter(i) => i,
            Label::Space => 26,
            Label::Delete => 27,
            Label::Blank => 28,
        }
    }

    pub fn from_code(code: u8) -> Option<Label> {
        match code {
            0..=25 => Some(Label::Letter(code)),
            26 => Some(Label::Space),
            27 => Some(Label::Delete),
            28 => Some(Label::Blank),
            _ => None,
        }
    }

    pub fn letters() -> impl Iterator<Item = Label> {
        (0..26u8).map(Label::Letter)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Letter(i) => write!(f, "{}", (b'A' + i) as char),
            Label::Space => f.write_str("SPACE"),
            Label::Delete => f.write_str("DELETE"),
            Label::Blank => f.write_str("BLANK"),
        }
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "SPACE" => Ok(Label::Space),
            "DELETE" => Ok(Label::Delete),
            "BLANK" => Ok(Label::Blank),
            _ => {
                let mut chars = s.chars();
                match (chars.next().and_then(Label::letter), chars.next()) {
                    (Some(l), None) => Ok(l),
                    _ => Err(Error::InvalidArgument(format!("unknown label {s:?}"))),
                }
            }
        }
    }
}

/// Ordered list of classes a model predicts over.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LabelSpace {
    labels: Vec<Label>,
}

impl LabelSpace {
    pub fn new(labels: Vec<Label>) -> Result<Self> {
        if labels.len() < 2 {
            return Err(Error::LabelSpace("need at least two classes".into()));
        }
        let mut seen = labels.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != labels.len() {
            return Err(Error::LabelSpace("duplicate class".into()));
        }
        Ok(LabelSpace { labels })
    }

    /// A–Z, SPACE, DELETE, BLANK: the union both recognizers are mapped into.
    pub fn shared() -> Self {
        let labels = Label::letters()
            .chain([Label::Space, Label::Delete, Label::Blank])
            .collect();
        LabelSpace { labels }
    }

    /// Landmark recognizer classes: A–Z, SPACE, DELETE.
    pub fn landmark() -> Self {
        let labels = Label::letters()
            .chain([Label::Space, Label::Delete])
            .collect();
        LabelSpace { labels }
    }

    /// Silhouette recognizer classes: A–Z, BLANK.
    pub fn silhouette() -> Self {
        let labels = Label::letters().chain([Label::Blank]).collect();
        LabelSpace { labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> Label {
        self.labels[index]
    }

    pub fn index_of(&self, label: Label) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    pub fn require_index(&self, label: Label) -> Result<usize> {
        self.index_of(label)
            .ok_or_else(|| Error::LabelSpace(format!("{label} is not part of this label space")))
    }
}
