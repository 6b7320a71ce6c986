//! Cross-module invariants over randomly generated scores and models.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use songwriter_core::corpus::{
    build_corpus_triples, decode_triple, encode_triple, generate_synthetic_corpus, normalize_durations, SynthConfig,
    Vocabulary,
};
use songwriter_core::midi::{export_midi, read_midi_notes};
use songwriter_core::model::{
    load_checkpoint, save_checkpoint, Architecture, DecodePolicy, GenerateOptions, MelodyModel, ModelConfig,
};
use songwriter_core::score::{
    merge_groups, read_corpus, split_by_labels, syllable_index_for_note, validate_alignment, write_corpus, AlignedLine,
    Duration, NoteEvent, PitchToken, Song, Syllable, TotalDuration,
};

fn arb_note() -> impl Strategy<Value = (Option<u8>, u64)> {
    (prop::option::weighted(0.85, 36u8..=96), 1u64..=64)
}

/// Songs built group by group so every line is aligned.
fn arb_song() -> impl Strategy<Value = Song> {
    let group = prop::collection::vec(arb_note(), 1..4);
    let line = prop::collection::vec(group, 1..8);
    (prop::collection::vec(line, 1..4), 40u32..200).prop_map(|(lines, bpm)| Song {
        id: "p".into(),
        key: "C".into(),
        bpm,
        lines: lines
            .into_iter()
            .map(|groups| {
                let syllables = (0..groups.len())
                    .map(|k| Syllable::new(format!("s{k}"), format!("p{k}")))
                    .collect();
                let notes = groups
                    .iter()
                    .flat_map(|g| {
                        let last = g.len() - 1;
                        g.iter().enumerate().map(move |(i, &(p, units))| {
                            // Rests lead groups; the closing note is always pitched.
                            let pitch = match p {
                                Some(m) => PitchToken::note(m as i64).unwrap(),
                                None if i == last => PitchToken::note(60).unwrap(),
                                None => PitchToken::Rest,
                            };
                            NoteEvent::new(pitch, Duration::from_sixty_fourths(units).unwrap(), i == last)
                        })
                    })
                    .collect();
                AlignedLine::new(syllables, notes)
            })
            .collect(),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn corpus_text_round_trips(songs in prop::collection::vec(arb_song(), 1..4)) {
        for s in &songs {
            prop_assert!(s.validate().is_ok());
        }
        prop_assert_eq!(read_corpus(&write_corpus(&songs)).unwrap(), songs);
    }

    #[test]
    fn groups_follow_the_labels(song in arb_song()) {
        for line in &song.lines {
            let groups = split_by_labels(&line.notes).unwrap();
            prop_assert_eq!(groups.len(), line.syllables.len());
            prop_assert_eq!(&merge_groups(&groups).unwrap(), &line.notes);
            // The note at position i sings syllable 1 + (labels before i).
            let labels: Vec<bool> = line.notes.iter().map(|n| n.label).collect();
            let mut flat = Vec::new();
            for (k, g) in groups.iter().enumerate() {
                flat.extend(std::iter::repeat_n(k + 1, g.len()));
            }
            for (i, want) in flat.into_iter().enumerate() {
                prop_assert_eq!(syllable_index_for_note(&labels[..i], line.syllables.len()), want);
            }
        }
    }

    #[test]
    fn midi_recovers_pitches_and_durations(song in arb_song()) {
        let back = read_midi_notes(&export_midi(&song).unwrap()).unwrap();
        let want: Vec<_> = song.notes().map(|n| (n.pitch, n.dur)).collect();
        let got: Vec<_> = back.iter().map(|n| (n.pitch, n.dur)).collect();
        prop_assert_eq!(got, want);
        let mut onset = 0;
        for n in &back {
            prop_assert_eq!(n.onset, onset);
            onset += n.dur.sixty_fourths() * 30;
        }
    }

    #[test]
    fn tempo_normalization_keeps_seconds(song in arb_song()) {
        if let Ok(norm) = normalize_durations(&song) {
            prop_assert_eq!(norm.bpm, 60);
            // Each note keeps its length in seconds up to half a 64th at 60 bpm.
            for (a, b) in song.notes().zip(norm.notes()) {
                let before = a.dur.as_f64() * 240.0 / song.bpm as f64;
                prop_assert!((b.dur.as_f64() * 4.0 - before).abs() <= 1.0 / 32.0 + 1e-12);
                prop_assert_eq!((a.pitch, a.label), (b.pitch, b.label));
            }
        }
    }
}

fn small_corpus() -> (Vec<Song>, Vocabulary) {
    let songs = generate_synthetic_corpus(&SynthConfig {
        num_songs: 6,
        rest_prob: 0.2,
        one_to_many_prob: 0.4,
        seed: 17,
        ..SynthConfig::default()
    })
    .unwrap();
    let vocab = Vocabulary::build(&songs);
    (songs, vocab)
}

#[test]
fn encoding_round_trips_on_training_vocabulary() {
    let (songs, vocab) = small_corpus();
    for t in build_corpus_triples(&songs, 40) {
        assert_eq!(decode_triple(&vocab, &encode_triple(&vocab, &t)).unwrap(), t);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sampled_lines_are_always_aligned(
        model_seed in 0u64..1000,
        line_seed: u64,
        temperature in 0.1f64..8.0,
        seq2seq: bool,
        pick in 0usize..1000,
    ) {
        let (songs, vocab) = small_corpus();
        let triples = build_corpus_triples(&songs, 12);
        let triple = &triples[pick % triples.len()];
        let arch = if seq2seq { Architecture::Seq2seq } else { Architecture::Songwriter };
        let config = ModelConfig { context_window: 12, ..ModelConfig::tiny(6) }.with_vocab(&vocab);
        let model = MelodyModel::<f32>::new(config, arch, vocab.clone(), model_seed).unwrap();
        let options = GenerateOptions { policy: DecodePolicy::Sample { temperature }, max_len: None };
        let mut rng = ChaCha8Rng::seed_from_u64(line_seed);
        let (line, _) = model.generate_line(&triple.lyrics, &triple.context, &options, &mut rng).unwrap();
        prop_assert!(validate_alignment(&line).is_ok());
        prop_assert!(line.notes.len() <= 3 * line.syllables.len());
        let total: TotalDuration = line.notes.iter().map(|n| n.dur).sum();
        prop_assert!(total.0 > 0);
    }
}

#[test]
fn checkpoints_reload_identically() {
    let (_, vocab) = small_corpus();
    let config = ModelConfig::tiny(5).with_vocab(&vocab);
    for arch in [Architecture::Songwriter, Architecture::Seq2seq] {
        let model = MelodyModel::<f32>::new(config.clone(), arch, vocab.clone(), 2).unwrap();
        let bytes = save_checkpoint(&model);
        let back: MelodyModel<f32> = load_checkpoint(&bytes).unwrap();
        assert_eq!(back, model);
        let mut corrupt = bytes.clone();
        corrupt.truncate(bytes.len() - 1);
        assert!(load_checkpoint::<f32>(&corrupt).is_err());
    }
}
