//! Dense token index spaces for the embeddings.
//!
//! Every vocabulary reserves its first ids for special tokens, then lists
//! the training tokens by descending frequency with ties broken by token
//! order. Labels use a fixed space: `0`, `1` and a begin-of-line token.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use super::{CorpusError, Triple};
use crate::score::{Duration, NoteEvent, PitchToken, Song, Syllable};

/// Padding id, shared by every vocabulary.
pub const PAD: usize = 0;
/// Begin-of-line id in the pitch and duration vocabularies.
pub const BOS: usize = 1;
/// Unknown-token id in the syllable and phonetic vocabularies.
pub const UNK: usize = 1;
/// Begin-of-line id in the label space; `0` and `1` encode themselves.
pub const LABEL_BOS: usize = 2;
pub const LABEL_VOCAB_SIZE: usize = 3;

const NOTE_SPECIALS: &[&str] = &["<pad>", "<bos>"];
const TEXT_SPECIALS: &[&str] = &["<pad>", "<unk>"];
const LABEL_TOKENS: [&str; LABEL_VOCAB_SIZE] = ["0", "1", "<bos>"];

/// Token kinds that can live in a [`TokenVocab`].
pub trait VocabToken: Clone + Eq + Hash + Ord {
    fn to_text(&self) -> String;
    fn from_text(text: &str) -> Option<Self>;
}

impl VocabToken for PitchToken {
    fn to_text(&self) -> String {
        self.to_string()
    }

    fn from_text(text: &str) -> Option<Self> {
        if text == "R" {
            return Some(PitchToken::Rest);
        }
        text.parse::<i64>().ok().and_then(|m| PitchToken::note(m).ok())
    }
}

impl VocabToken for Duration {
    fn to_text(&self) -> String {
        self.to_string()
    }

    fn from_text(text: &str) -> Option<Self> {
        let (n, d) = text.split_once('/')?;
        Duration::new(n.parse().ok()?, d.parse().ok()?).ok()
    }
}

impl VocabToken for String {
    fn to_text(&self) -> String {
        self.clone()
    }

    fn from_text(text: &str) -> Option<Self> {
        Some(text.to_string())
    }
}

#[derive(Debug, Clone)]
pub struct TokenVocab<K> {
    specials: &'static [&'static str],
    tokens: Vec<K>,
    index: HashMap<K, usize>,
}

impl<K: VocabToken> PartialEq for TokenVocab<K> {
    fn eq(&self, other: &Self) -> bool {
        self.specials == other.specials && self.tokens == other.tokens
    }
}

impl<K: VocabToken> Eq for TokenVocab<K> {}

impl<K: VocabToken> TokenVocab<K> {
    fn from_counts(counts: HashMap<K, usize>, specials: &'static [&'static str]) -> Self {
        let mut ranked: Vec<(K, usize)> = counts.into_iter().collect();
        ranked.sort_by(|(a, ca), (b, cb)| cb.cmp(ca).then_with(|| a.cmp(b)));
        Self::from_tokens(ranked.into_iter().map(|(k, _)| k).collect(), specials)
    }

    fn from_tokens(tokens: Vec<K>, specials: &'static [&'static str]) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(k, t)| (t.clone(), k + specials.len()))
            .collect();
        TokenVocab {
            specials,
            tokens,
            index,
        }
    }

    /// Total size including special tokens.
    pub fn len(&self) -> usize {
        self.specials.len() + self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_specials(&self) -> usize {
        self.specials.len()
    }

    /// Number of real (predictable) tokens.
    pub fn num_tokens(&self) -> usize {
        self.tokens.len()
    }

    pub fn tokens(&self) -> &[K] {
        &self.tokens
    }

    pub fn id(&self, token: &K) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: usize) -> Option<&K> {
        id.checked_sub(self.specials.len()).and_then(|k| self.tokens.get(k))
    }

    /// Output-class index of a token id (special tokens have none).
    pub fn class_of(&self, id: usize) -> Option<usize> {
        id.checked_sub(self.specials.len()).filter(|&c| c < self.tokens.len())
    }

    pub fn id_of_class(&self, class: usize) -> usize {
        class + self.specials.len()
    }

    fn to_texts(&self) -> Vec<String> {
        self.specials
            .iter()
            .map(|s| s.to_string())
            .chain(self.tokens.iter().map(K::to_text))
            .collect()
    }

    fn from_texts(name: &str, texts: &[String], specials: &'static [&'static str]) -> Result<Self, CorpusError> {
        let bad = |msg: String| CorpusError::VocabFormat(format!("{name}: {msg}"));
        if texts.len() < specials.len() || texts.iter().zip(specials).any(|(t, s)| t != s) {
            return Err(bad(format!("must start with {specials:?}")));
        }
        let tokens = texts[specials.len()..]
            .iter()
            .map(|t| K::from_text(t).ok_or_else(|| bad(format!("bad token {t:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let vocab = Self::from_tokens(tokens, specials);
        if vocab.index.len() != vocab.tokens.len() {
            return Err(bad("duplicate tokens".into()));
        }
        Ok(vocab)
    }
}

/// All token spaces used by the models.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    pub pitch: TokenVocab<PitchToken>,
    pub duration: TokenVocab<Duration>,
    pub syllable: TokenVocab<String>,
    pub phonetic: TokenVocab<String>,
}

#[derive(Serialize, Deserialize)]
struct VocabFile {
    pitch: Vec<String>,
    duration: Vec<String>,
    label: Vec<String>,
    syllable: Vec<String>,
    phonetic: Vec<String>,
}

impl Vocabulary {
    /// Collects every token in `songs` (the training split).
    pub fn build(songs: &[Song]) -> Vocabulary {
        fn bump<K: Hash + Eq>(map: &mut HashMap<K, usize>, k: K) {
            *map.entry(k).or_default() += 1;
        }
        let mut pitch = HashMap::new();
        let mut duration = HashMap::new();
        let mut syllable = HashMap::new();
        let mut phonetic = HashMap::new();
        for line in songs.iter().flat_map(|s| &s.lines) {
            for note in &line.notes {
                bump(&mut pitch, note.pitch);
                bump(&mut duration, note.dur);
            }
            for syl in &line.syllables {
                bump(&mut syllable, syl.surface.clone());
                bump(&mut phonetic, syl.phonetic.clone());
            }
        }
        Vocabulary {
            pitch: TokenVocab::from_counts(pitch, NOTE_SPECIALS),
            duration: TokenVocab::from_counts(duration, NOTE_SPECIALS),
            syllable: TokenVocab::from_counts(syllable, TEXT_SPECIALS),
            phonetic: TokenVocab::from_counts(phonetic, TEXT_SPECIALS),
        }
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let file = VocabFile {
            pitch: self.pitch.to_texts(),
            duration: self.duration.to_texts(),
            label: LABEL_TOKENS.iter().map(|s| s.to_string()).collect(),
            syllable: self.syllable.to_texts(),
            phonetic: self.phonetic.to_texts(),
        };
        serde_json::to_value(file).expect("vocabulary serialization is infallible")
    }

    pub fn from_json_value(value: serde_json::Value) -> Result<Vocabulary, CorpusError> {
        let file: VocabFile = serde_json::from_value(value).map_err(|e| CorpusError::VocabFormat(e.to_string()))?;
        if file.label != LABEL_TOKENS {
            return Err(CorpusError::VocabFormat(format!(
                "label vocabulary must be {LABEL_TOKENS:?}"
            )));
        }
        Ok(Vocabulary {
            pitch: TokenVocab::from_texts("pitch", &file.pitch, NOTE_SPECIALS)?,
            duration: TokenVocab::from_texts("duration", &file.duration, NOTE_SPECIALS)?,
            syllable: TokenVocab::from_texts("syllable", &file.syllable, TEXT_SPECIALS)?,
            phonetic: TokenVocab::from_texts("phonetic", &file.phonetic, TEXT_SPECIALS)?,
        })
    }

    /// Pretty-printed document listing each vocabulary in index order.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("json value always prints")
    }

    pub fn from_json(text: &str) -> Result<Vocabulary, CorpusError> {
        let value = serde_json::from_str(text).map_err(|e| CorpusError::VocabFormat(e.to_string()))?;
        Vocabulary::from_json_value(value)
    }

    /// Pitch id, mapping unseen pitches to the nearest known MIDI number
    /// (ties go low) and an unseen rest to the most frequent token.
    pub fn pitch_id(&self, pitch: PitchToken) -> usize {
        if let Some(id) = self.pitch.id(&pitch) {
            return id;
        }
        let nearest = match pitch {
            PitchToken::Note(m) => self
                .pitch
                .tokens()
                .iter()
                .enumerate()
                .filter_map(|(k, t)| t.midi().map(|n| (k, (n as i32 - m as i32).abs(), n)))
                .min_by_key(|&(_, dist, n)| (dist, n))
                .map(|(k, _, _)| k),
            PitchToken::Rest => None,
        };
        self.pitch.id_of_class(nearest.unwrap_or(0))
    }

    /// Duration id, mapping unseen durations to the nearest known length.
    pub fn duration_id(&self, dur: Duration) -> usize {
        if let Some(id) = self.duration.id(&dur) {
            return id;
        }
        let target = dur.sixty_fourths() as i64;
        let nearest = self
            .duration
            .tokens()
            .iter()
            .enumerate()
            .min_by_key(|(_, d)| ((d.sixty_fourths() as i64 - target).abs(), d.sixty_fourths()))
            .map_or(0, |(k, _)| k);
        self.duration.id_of_class(nearest)
    }

    pub fn syllable_id(&self, surface: &str) -> usize {
        self.syllable.id(&surface.to_string()).unwrap_or(UNK)
    }

    pub fn phonetic_id(&self, key: &str) -> usize {
        self.phonetic.id(&key.to_string()).unwrap_or(UNK)
    }

    pub fn encode_notes(&self, notes: &[NoteEvent]) -> EncodedNotes {
        EncodedNotes {
            pitch: notes.iter().map(|n| self.pitch_id(n.pitch)).collect(),
            duration: notes.iter().map(|n| self.duration_id(n.dur)).collect(),
            label: notes.iter().map(|n| usize::from(n.label)).collect(),
        }
    }

    pub fn encode_lyrics(&self, lyrics: &[Syllable]) -> (Vec<usize>, Vec<usize>) {
        (
            lyrics.iter().map(|s| self.syllable_id(&s.surface)).collect(),
            lyrics.iter().map(|s| self.phonetic_id(&s.phonetic)).collect(),
        )
    }

    /// Decodes note ids; special ids yield `None`.
    pub fn decode_note(&self, pitch: usize, duration: usize, label: usize) -> Option<NoteEvent> {
        Some(NoteEvent::new(
            *self.pitch.token(pitch)?,
            *self.duration.token(duration)?,
            match label {
                0 => false,
                1 => true,
                _ => return None,
            },
        ))
    }
}

/// Parallel id sequences for a run of notes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedNotes {
    pub pitch: Vec<usize>,
    pub duration: Vec<usize>,
    pub label: Vec<usize>,
}

impl EncodedNotes {
    pub fn len(&self) -> usize {
        self.pitch.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pitch.is_empty()
    }

    /// Keeps the last `n` notes.
    pub fn tail(&self, n: usize) -> EncodedNotes {
        let start = self.len().saturating_sub(n);
        EncodedNotes {
            pitch: self.pitch[start..].to_vec(),
            duration: self.duration[start..].to_vec(),
            label: self.label[start..].to_vec(),
        }
    }

    pub fn push(&mut self, pitch: usize, duration: usize, label: usize) {
        self.pitch.push(pitch);
        self.duration.push(duration);
        self.label.push(label);
    }

    pub fn extend(&mut self, other: &EncodedNotes) {
        self.pitch.extend_from_slice(&other.pitch);
        self.duration.extend_from_slice(&other.duration);
        self.label.extend_from_slice(&other.label);
    }
}

/// A triple as integer ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedTriple {
    pub syllables: Vec<usize>,
    pub phonetics: Vec<usize>,
    pub context: EncodedNotes,
    pub target: EncodedNotes,
}

impl EncodedTriple {
    pub fn num_syllables(&self) -> usize {
        self.syllables.len()
    }
}

pub fn encode_triple(vocab: &Vocabulary, triple: &Triple) -> EncodedTriple {
    let (syllables, phonetics) = vocab.encode_lyrics(&triple.lyrics);
    EncodedTriple {
        syllables,
        phonetics,
        context: vocab.encode_notes(&triple.context),
        target: vocab.encode_notes(&triple.target),
    }
}

/// Inverse of [`encode_triple`]; unknown syllables decode to `<unk>`.
pub fn decode_triple(vocab: &Vocabulary, encoded: &EncodedTriple) -> Result<Triple, CorpusError> {
    let text =
        |v: &TokenVocab<String>, id: usize| v.token(id).cloned().unwrap_or_else(|| TEXT_SPECIALS[UNK].to_string());
    let notes = |n: &EncodedNotes| {
        (0..n.len())
            .map(|k| {
                vocab
                    .decode_note(n.pitch[k], n.duration[k], n.label[k])
                    .ok_or_else(|| CorpusError::VocabFormat(format!("note {k} holds a special id")))
            })
            .collect::<Result<Vec<_>, _>>()
    };
    Ok(Triple {
        lyrics: encoded
            .syllables
            .iter()
            .zip(&encoded.phonetics)
            .map(|(&s, &p)| Syllable::new(text(&vocab.syllable, s), text(&vocab.phonetic, p)))
            .collect(),
        context: notes(&encoded.context)?,
        target: notes(&encoded.target)?,
    })
}
