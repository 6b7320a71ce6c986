use crate::corpus::{
    build_corpus_triples, encode_triple, generate_synthetic_corpus, EncodedTriple, SynthConfig, Vocabulary,
};

use super::{ModelConfig, ModelError};

/// A one-song synthetic corpus small enough for exhaustive gradient
/// checks: every vocabulary (specials included) has at most `max_vocab`
/// entries. Seeds from `seed` upward are tried until one qualifies.
/// Only triples with a preceding melody are returned, since those reach
/// every parameter.
pub fn gradcheck_setup(
    hidden: usize,
    max_vocab: usize,
    seed: u64,
) -> Result<(ModelConfig, Vocabulary, Vec<EncodedTriple>), ModelError> {
    for attempt in 0..1000 {
        let songs = generate_synthetic_corpus(&SynthConfig {
            num_songs: 1,
            lines_per_song: (3, 3),
            syllables_per_line: (3, 4),
            one_to_many_prob: 0.4,
            max_notes_per_syllable: 2,
            rest_prob: 0.2,
            seed: seed.wrapping_add(attempt),
        })?;
        let vocab = Vocabulary::build(&songs);
        let sizes = [
            vocab.pitch.len(),
            vocab.duration.len(),
            vocab.syllable.len(),
            vocab.phonetic.len(),
        ];
        let has_rest = songs.iter().flat_map(|s| s.notes()).any(|n| n.pitch.is_rest());
        if sizes.iter().any(|&n| n > max_vocab) || !has_rest {
            continue;
        }
        let config = ModelConfig {
            context_window: 8,
            ..ModelConfig::tiny(hidden)
        }
        .with_vocab(&vocab);
        let triples = build_corpus_triples(&songs, config.context_window)
            .iter()
            .filter(|t| !t.context.is_empty())
            .map(|t| encode_triple(&vocab, t))
            .collect();
        return Ok((config, vocab, triples));
    }
    Err(ModelError::InvalidConfig(format!(
        "no small synthetic corpus fits vocabularies of {max_vocab}"
    )))
}
