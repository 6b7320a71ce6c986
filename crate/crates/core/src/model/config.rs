use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::corpus::{Vocabulary, DEFAULT_WINDOW};

/// Which decoder wiring to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    /// Lyric vector selected by the running label count.
    Songwriter,
    /// Lyric vector obtained by a second attention over all syllables.
    Seq2seq,
}

impl Architecture {
    pub fn name(self) -> &'static str {
        match self {
            Architecture::Songwriter => "songwriter",
            Architecture::Seq2seq => "seq2seq",
        }
    }
}

impl std::str::FromStr for Architecture {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "songwriter" => Ok(Architecture::Songwriter),
            "seq2seq" => Ok(Architecture::Seq2seq),
            other => Err(ModelError::InvalidConfig(format!("unknown architecture {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub hidden_size: usize,
    pub pitch_emb: usize,
    pub duration_emb: usize,
    pub label_emb: usize,
    pub syllable_emb: usize,
    pub phonetic_emb: usize,
    /// Width of the attention energy space; `0` means `hidden_size`.
    pub attention_size: usize,
    pub context_window: usize,
    /// Upper bound on generated notes per line; the effective limit is
    /// `min(3 * syllables, cap)` but never below the syllable count.
    pub max_notes_per_line: Option<usize>,
    /// Feed label embeddings into the second context-encoder layer.
    pub context_labels: bool,
    pub pitch_vocab: usize,
    pub duration_vocab: usize,
    pub syllable_vocab: usize,
    pub phonetic_vocab: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            hidden_size: 256,
            pitch_emb: 128,
            duration_emb: 128,
            label_emb: 64,
            syllable_emb: 256,
            phonetic_emb: 128,
            attention_size: 0,
            context_window: DEFAULT_WINDOW,
            max_notes_per_line: None,
            context_labels: false,
            pitch_vocab: 0,
            duration_vocab: 0,
            syllable_vocab: 0,
            phonetic_vocab: 0,
        }
    }
}

impl ModelConfig {
    /// Copies the vocabulary sizes from `vocab`.
    pub fn with_vocab(mut self, vocab: &Vocabulary) -> Self {
        self.pitch_vocab = vocab.pitch.len();
        self.duration_vocab = vocab.duration.len();
        self.syllable_vocab = vocab.syllable.len();
        self.phonetic_vocab = vocab.phonetic.len();
        self
    }

    /// A small configuration with every dimension set to `hidden`.
    pub fn tiny(hidden: usize) -> Self {
        ModelConfig {
            hidden_size: hidden,
            pitch_emb: hidden,
            duration_emb: hidden,
            label_emb: hidden,
            syllable_emb: hidden,
            phonetic_emb: hidden,
            ..ModelConfig::default()
        }
    }

    pub fn attention_dim(&self) -> usize {
        if self.attention_size == 0 {
            self.hidden_size
        } else {
            self.attention_size
        }
    }

    pub fn max_notes_for(&self, syllables: usize) -> usize {
        let limit = 3 * syllables;
        self.max_notes_per_line
            .map_or(limit, |cap| limit.min(cap))
            .max(syllables)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let dims = [
            ("hidden_size", self.hidden_size),
            ("pitch_emb", self.pitch_emb),
            ("duration_emb", self.duration_emb),
            ("label_emb", self.label_emb),
            ("syllable_emb", self.syllable_emb),
            ("phonetic_emb", self.phonetic_emb),
            ("context_window", self.context_window),
        ];
        for (name, v) in dims {
            if v == 0 {
                return Err(ModelError::InvalidConfig(format!("{name} must be positive")));
            }
        }
        // Each note vocabulary needs its two specials plus one real token.
        let vocabs = [
            ("pitch_vocab", self.pitch_vocab, 3),
            ("duration_vocab", self.duration_vocab, 3),
            ("syllable_vocab", self.syllable_vocab, 2),
            ("phonetic_vocab", self.phonetic_vocab, 2),
        ];
        for (name, v, min) in vocabs {
            if v < min {
                return Err(ModelError::InvalidConfig(format!(
                    "{name} must be at least {min}, got {v}"
                )));
            }
        }
        if self.max_notes_per_line == Some(0) {
            return Err(ModelError::InvalidConfig("max_notes_per_line must be positive".into()));
        }
        Ok(())
    }

    /// Checks that the stored sizes describe `vocab`.
    pub fn check_vocab(&self, vocab: &Vocabulary) -> Result<(), ModelError> {
        let expected = self.clone().with_vocab(vocab);
        if (
            expected.pitch_vocab,
            expected.duration_vocab,
            expected.syllable_vocab,
            expected.phonetic_vocab,
        ) != (
            self.pitch_vocab,
            self.duration_vocab,
            self.syllable_vocab,
            self.phonetic_vocab,
        ) {
            return Err(ModelError::VocabMismatch(format!(
                "config expects pitch/duration/syllable/phonetic sizes {}/{}/{}/{}, vocabulary has {}/{}/{}/{}",
                self.pitch_vocab,
                self.duration_vocab,
                self.syllable_vocab,
                self.phonetic_vocab,
                expected.pitch_vocab,
                expected.duration_vocab,
                expected.syllable_vocab,
                expected.phonetic_vocab
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_reference_sizes() {
        let c = ModelConfig::default();
        assert_eq!(
            (c.hidden_size, c.pitch_emb, c.duration_emb, c.label_emb),
            (256, 128, 128, 64)
        );
        assert_eq!(c.context_window, 40);
        assert_eq!(c.attention_dim(), 256);
    }

    #[test]
    fn note_limit() {
        let mut c = ModelConfig::default();
        assert_eq!(c.max_notes_for(10), 30);
        c.max_notes_per_line = Some(12);
        assert_eq!(c.max_notes_for(10), 12);
        assert_eq!(c.max_notes_for(20), 20);
    }

    #[test]
    fn validation() {
        assert!(ModelConfig::default().validate().is_err());
        let mut c = ModelConfig::tiny(4);
        (c.pitch_vocab, c.duration_vocab, c.syllable_vocab, c.phonetic_vocab) = (5, 5, 5, 5);
        assert!(c.validate().is_ok());
        c.label_emb = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn architecture_names_parse() {
        for a in [Architecture::Songwriter, Architecture::Seq2seq] {
            assert_eq!(a.name().parse::<Architecture>().unwrap(), a);
        }
        assert!("crf".parse::<Architecture>().is_err());
    }
}
