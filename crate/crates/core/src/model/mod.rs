//! Hierarchical lyrics-conditioned melody model.
//!
//! A bidirectional GRU encodes the syllables of the current line, a
//! two-layer bidirectional GRU encodes the preceding melody, and a
//! three-layer decoder emits pitch, then duration, then alignment label
//! for every note. The running count of emitted `1` labels selects which
//! syllable vector the decoder reads, so the alignment is explicit rather
//! than attended.

mod checkpoint;
mod config;
mod decode;
mod fixture;
mod network;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC};
pub use config::{Architecture, ModelConfig};
pub use decode::{DecodePolicy, GenerateOptions, GeneratedLine, LineTrace, TeacherForced};
pub use fixture::gradcheck_setup;
pub use network::{ContextEncoding, DecoderState, Encoded, MelodyModel, StepOutput};
pub use train::{batch_gradients, check_gradients, train, Control, EpochStats, TrainOptions, TrainReport};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::CorpusError;
use crate::nn::NnError;

/// The three predicted attributes of a note, in decoding order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Attribute {
    Pitch,
    Duration,
    Label,
}

impl Attribute {
    pub const ALL: [Attribute; 3] = [Attribute::Pitch, Attribute::Duration, Attribute::Label];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Attribute::Pitch => "pitch",
            Attribute::Duration => "duration",
            Attribute::Label => "label",
        }
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("a line needs at least one syllable")]
    EmptyLine,
    #[error("{what}: expected {expected} entries, found {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("line already closes all {syllables} syllables")]
    LineComplete { syllables: usize },
    #[error("{} id {id} is a special token, not a predictable class", attr.name())]
    SpecialToken { attr: Attribute, id: usize },
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error("vocabulary mismatch: {0}")]
    VocabMismatch(String),
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

/// Small synthetic corpus shared by unit tests: a tiny config sized to its
/// vocabulary and every encoded triple.
#[cfg(test)]
pub(crate) fn test_fixture() -> (
    ModelConfig,
    crate::corpus::Vocabulary,
    Vec<crate::corpus::EncodedTriple>,
) {
    use crate::corpus::{build_corpus_triples, encode_triple, generate_synthetic_corpus, SynthConfig, Vocabulary};
    let songs = generate_synthetic_corpus(&SynthConfig {
        num_songs: 3,
        lines_per_song: (3, 3),
        syllables_per_line: (3, 5),
        rest_prob: 0.2,
        one_to_many_prob: 0.4,
        ..SynthConfig::default()
    })
    .expect("valid synthetic config");
    let vocab = Vocabulary::build(&songs);
    let triples = build_corpus_triples(&songs, 8)
        .iter()
        .map(|t| encode_triple(&vocab, t))
        .collect();
    let config = ModelConfig {
        attention_size: 5,
        ..ModelConfig::tiny(4)
    }
    .with_vocab(&vocab);
    (config, vocab, triples)
}
