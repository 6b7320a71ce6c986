//! Seeded generator for desk-scale lyrics/melody corpora.
//!
//! Pitches walk a first-order Markov chain over two octaves of the C major
//! scale. Each syllable of the built-in lexicon pulls the chain toward its
//! own anchor degree and prefers its own note value, so lyrics condition
//! the melody and a model has something to learn.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CorpusError, Lexicon};
use crate::score::{AlignedLine, Duration, NoteEvent, PitchToken, Song, Syllable};

const SCALE: [u8; 15] = [60, 62, 64, 65, 67, 69, 71, 72, 74, 76, 77, 79, 81, 83, 84];
const START_DEGREE: usize = 7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub num_songs: usize,
    /// Inclusive range.
    pub lines_per_song: (usize, usize),
    /// Inclusive range.
    pub syllables_per_line: (usize, usize),
    pub one_to_many_prob: f64,
    pub max_notes_per_syllable: usize,
    pub rest_prob: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            num_songs: 100,
            lines_per_song: (4, 8),
            syllables_per_line: (5, 10),
            one_to_many_prob: 0.2,
            max_notes_per_syllable: 3,
            rest_prob: 0.05,
            seed: 7,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let bad = |m: &str| Err(CorpusError::SynthConfig(m.to_string()));
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if !prob(self.one_to_many_prob) || !prob(self.rest_prob) {
            return bad("probabilities must lie in [0, 1]");
        }
        for (name, (lo, hi)) in [
            ("lines_per_song", self.lines_per_song),
            ("syllables_per_line", self.syllables_per_line),
        ] {
            if lo == 0 || lo > hi {
                return bad(&format!("{name} must be a non-empty range of positive counts"));
            }
        }
        if self.one_to_many_prob > 0.0 && self.max_notes_per_syllable < 2 {
            return bad("max_notes_per_syllable must be at least 2 when one_to_many_prob > 0");
        }
        Ok(())
    }
}

fn anchor_degree(lexicon_index: usize) -> usize {
    (lexicon_index * 7 + 3) % SCALE.len()
}

/// Transition weights out of `prev` while singing syllable `lexicon_index`.
fn transition_row(prev: usize, lexicon_index: usize) -> [f64; SCALE.len()] {
    let anchor = anchor_degree(lexicon_index);
    let mut row = [0.0; SCALE.len()];
    for (k, w) in row.iter_mut().enumerate() {
        let step = k.abs_diff(prev);
        let base = if step == 0 { 0.6 } else { 1.0 / (step * step) as f64 };
        let pull = match k.abs_diff(anchor) {
            0 => 6.0,
            1 => 1.5,
            _ => 0.0,
        };
        *w = base + pull;
    }
    row
}

fn sample_weighted(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (k, w) in weights.iter().enumerate() {
        if u < *w {
            return k;
        }
        u -= w;
    }
    weights.len() - 1
}

fn dur(den: u64) -> Duration {
    Duration::new(1, den).expect("power-of-two literal")
}

fn single_note_duration(rng: &mut ChaCha8Rng, lexicon_index: usize) -> Duration {
    const PREFERRED: [u64; 3] = [4, 8, 2];
    if rng.random_bool(0.75) {
        dur(PREFERRED[lexicon_index % 3])
    } else {
        dur([16, 8, 4, 2][rng.random_range(0..4)])
    }
}

/// Deterministic corpus for `config.seed`. Every song passes validation.
pub fn generate_synthetic_corpus(config: &SynthConfig) -> Result<Vec<Song>, CorpusError> {
    config.validate()?;
    let lexicon = Lexicon::builtin();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut songs = Vec::with_capacity(config.num_songs);
    for k in 0..config.num_songs {
        let mut degree = START_DEGREE;
        let n_lines = rng.random_range(config.lines_per_song.0..=config.lines_per_song.1);
        let mut lines = Vec::with_capacity(n_lines);
        for _ in 0..n_lines {
            let n_syl = rng.random_range(config.syllables_per_line.0..=config.syllables_per_line.1);
            let mut syllables = Vec::with_capacity(n_syl);
            let mut notes = Vec::new();
            for _ in 0..n_syl {
                let lex = rng.random_range(0..lexicon.len());
                let (surface, phonetic) = lexicon.entry(lex);
                syllables.push(Syllable::new(surface, phonetic));

                if rng.random_bool(config.rest_prob) {
                    let rest = if rng.random_bool(0.5) { dur(8) } else { dur(4) };
                    notes.push(NoteEvent::new(PitchToken::Rest, rest, false));
                }
                let pitched = if rng.random_bool(config.one_to_many_prob) {
                    rng.random_range(2..=config.max_notes_per_syllable)
                } else {
                    1
                };
                for n in 0..pitched {
                    degree = sample_weighted(&mut rng, &transition_row(degree, lex));
                    let last = n + 1 == pitched;
                    let d = if pitched == 1 {
                        single_note_duration(&mut rng, lex)
                    } else if last && rng.random_bool(0.5) {
                        dur(4)
                    } else if rng.random_bool(0.7) {
                        dur(8)
                    } else {
                        dur(16)
                    };
                    notes.push(NoteEvent::new(PitchToken::Note(SCALE[degree]), d, last));
                }
            }
            lines.push(AlignedLine::new(syllables, notes));
        }
        let song = Song {
            id: format!("synth-{:05}", k),
            key: "C".into(),
            bpm: 60,
            lines,
        };
        debug_assert!(song.validate().is_ok());
        songs.push(song);
    }
    Ok(songs)
}
