//! From songs to model-ready lyrics/context/melody triples.

mod key;
mod lexicon;
mod split;
mod synth;
mod tempo;
mod vocab;

pub use key::{detect_key, transpose_song, transpose_song_with_fallback, Key, Mode};
pub use lexicon::Lexicon;
pub use split::{split_corpus, SplitRatios, Splits};
pub use synth::{generate_synthetic_corpus, SynthConfig};
pub use tempo::normalize_durations;
pub use vocab::{
    decode_triple, encode_triple, EncodedNotes, EncodedTriple, TokenVocab, Vocabulary, BOS, LABEL_BOS,
    LABEL_VOCAB_SIZE, PAD, UNK,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::score::{AlignedLine, NoteEvent, Song, Syllable};

/// Context window used when none is configured.
pub const DEFAULT_WINDOW: usize = 40;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorpusError {
    #[error("song {song:?}: unknown key name {key:?}")]
    UnknownKey { song: String, key: String },
    #[error("song {song:?}: transposing by {offset} semitones moves pitch {pitch} out of MIDI range")]
    TransposeRange { song: String, pitch: u8, offset: i32 },
    #[error("song {song:?}: bpm must be positive")]
    ZeroTempo { song: String },
    #[error("song {song:?}, line {line}, note {note}: duration {dur} shrinks below 1/64 at 60 bpm")]
    DurationUnderflow {
        song: String,
        line: usize,
        note: usize,
        dur: String,
    },
    #[error("split ratios must be non-negative and sum to 1, got {0:?}")]
    BadRatios([f64; 3]),
    #[error("cannot split {songs} songs into {parts} non-empty parts")]
    TooFewSongs { songs: usize, parts: usize },
    #[error("lexicon line {line}: {message}")]
    Lexicon { line: usize, message: String },
    #[error("vocabulary file: {0}")]
    VocabFormat(String),
    #[error("invalid synthetic corpus config: {0}")]
    SynthConfig(String),
    #[error(transparent)]
    Score(#[from] crate::score::ScoreError),
}

/// One training unit: a line's syllables, the melody preceding it (up to
/// the context window) and the line's own melody.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triple {
    pub lyrics: Vec<Syllable>,
    pub context: Vec<NoteEvent>,
    pub target: Vec<NoteEvent>,
}

impl Triple {
    pub fn line(&self) -> AlignedLine {
        AlignedLine::new(self.lyrics.clone(), self.target.clone())
    }
}

/// One triple per line; each context is the last `window` notes of all
/// earlier lines of the same song.
pub fn build_triples(song: &Song, window: usize) -> Vec<Triple> {
    let mut history: Vec<NoteEvent> = Vec::with_capacity(song.note_count());
    let mut triples = Vec::with_capacity(song.lines.len());
    for line in &song.lines {
        let start = history.len().saturating_sub(window);
        triples.push(Triple {
            lyrics: line.syllables.clone(),
            context: history[start..].to_vec(),
            target: line.notes.clone(),
        });
        history.extend_from_slice(&line.notes);
    }
    triples
}

pub fn build_corpus_triples(songs: &[Song], window: usize) -> Vec<Triple> {
    songs.iter().flat_map(|s| build_triples(s, window)).collect()
}
