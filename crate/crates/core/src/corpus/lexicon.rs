use std::collections::HashMap;

use super::CorpusError;
use crate::score::Syllable;

/// Placeholder phonetic key for surfaces missing from the lexicon.
pub const UNKNOWN_PHONETIC: &str = "<unk>";

/// Surface-to-phonetic lookup table, read from tab-separated lines.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    entries: Vec<(String, String)>,
    index: HashMap<String, usize>,
}

/// Syllables of the built-in lexicon used by the synthetic corpus.
const BUILTIN: [(&str, &str); 24] = [
    ("爱", "ai4"),
    ("恨", "hen4"),
    ("两", "liang3"),
    ("茫", "mang2"),
    ("问", "wen4"),
    ("君", "jun1"),
    ("何", "he2"),
    ("时", "shi2"),
    ("恋", "lian4"),
    ("月", "yue4"),
    ("光", "guang1"),
    ("风", "feng1"),
    ("花", "hua1"),
    ("雪", "xue3"),
    ("梦", "meng4"),
    ("心", "xin1"),
    ("天", "tian1"),
    ("海", "hai3"),
    ("山", "shan1"),
    ("水", "shui3"),
    ("春", "chun1"),
    ("秋", "qiu1"),
    ("夜", "ye4"),
    ("歌", "ge1"),
];

impl Lexicon {
    pub fn builtin() -> Lexicon {
        Lexicon::from_entries(BUILTIN.iter().map(|(s, p)| (s.to_string(), p.to_string())))
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (String, String)>) -> Lexicon {
        let mut lex = Lexicon::default();
        for (surface, phonetic) in entries {
            if let Some(&k) = lex.index.get(&surface) {
                lex.entries[k].1 = phonetic;
            } else {
                lex.index.insert(surface.clone(), lex.entries.len());
                lex.entries.push((surface, phonetic));
            }
        }
        lex
    }

    /// Parses `surface<TAB>phonetic` lines; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Lexicon, CorpusError> {
        let mut entries = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (surface, phonetic) = line
                .split_once('\t')
                .map(|(s, p)| (s.trim(), p.trim()))
                .filter(|(s, p)| !s.is_empty() && !p.is_empty())
                .ok_or_else(|| CorpusError::Lexicon {
                    line: k + 1,
                    message: "expected `surface<TAB>phonetic`".into(),
                })?;
            entries.push((surface.to_string(), phonetic.to_string()));
        }
        Ok(Lexicon::from_entries(entries))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, index: usize) -> (&str, &str) {
        let (s, p) = &self.entries[index];
        (s, p)
    }

    pub fn index_of(&self, surface: &str) -> Option<usize> {
        self.index.get(surface).copied()
    }

    pub fn phonetic(&self, surface: &str) -> Option<&str> {
        self.index_of(surface).map(|k| self.entries[k].1.as_str())
    }

    pub fn syllable(&self, surface: &str) -> Syllable {
        Syllable::new(surface, self.phonetic(surface).unwrap_or(UNKNOWN_PHONETIC))
    }

    /// Splits a lyric sentence into syllables: one per character for CJK
    /// text, whitespace-separated tokens otherwise.
    pub fn syllabify(&self, sentence: &str) -> Vec<Syllable> {
        let sentence = sentence.trim();
        if sentence.chars().any(is_cjk) {
            sentence
                .chars()
                .filter(|c| !c.is_whitespace() && !is_punctuation(*c))
                .map(|c| self.syllable(&c.to_string()))
                .collect()
        } else {
            sentence.split_whitespace().map(|w| self.syllable(w)).collect()
        }
    }
}

fn is_cjk(c: char) -> bool {
    matches!(c as u32, 0x3400..=0x4DBF | 0x4E00..=0x9FFF | 0xF900..=0xFAFF | 0x20000..=0x2FA1F)
}

fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation() || matches!(c as u32, 0x3000..=0x303F | 0xFF00..=0xFF0F | 0xFF1A..=0xFF20)
}
