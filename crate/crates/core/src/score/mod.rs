//! Lyrics-melody aligned score representation.
//!
//! A melody line is a sequence of [`NoteEvent`]s, each carrying a pitch,
//! an exact rational duration and an alignment label. A label of `1`
//! closes the note group sung on one syllable, so the labels partition a
//! line's notes into exactly one group per syllable. Rests never close a
//! group; they belong to the syllable that follows them.

mod alignment;
mod codec;
mod pitch;

pub use alignment::{
    merge_groups, split_by_labels, syllable_index_for_note, validate_alignment, AlignmentRule, AlignmentViolations,
};
pub use codec::{read_corpus, song_codec_read, song_codec_write, write_corpus};
pub use pitch::{midi_to_pitch_name, pitch_name_to_midi};

use std::fmt;
use std::iter::Sum;

use serde::de::{self, Deserializer, Visitor};
use serde::ser::{SerializeTuple, Serializer};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Finest representable note value (a 64th note).
pub const FINEST_DENOMINATOR: u32 = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScoreError {
    #[error("invalid duration {num}/{den}: denominator must be a power of two up to 64 and the value positive")]
    InvalidDuration { num: u64, den: u64 },
    #[error("midi pitch {0} is outside 0..=127")]
    PitchOutOfRange(i64),
    #[error("cannot parse pitch name {0:?}")]
    PitchName(String),
    #[error("line {line}: malformed record: {message}")]
    Parse { line: usize, message: String },
    #[error("song {song:?}: {reason}")]
    InvalidSong { song: String, reason: String },
    #[error("song {song:?}, line {line}: {violations}")]
    InvalidLine {
        song: String,
        line: usize,
        violations: AlignmentViolations,
    },
    #[error("note sequence does not end with a label-1 note")]
    UnterminatedGroup,
    #[error("note group {0} is empty")]
    EmptyGroup(usize),
}

/// Pitch of a note: a MIDI number or the rest token `R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PitchToken {
    Rest,
    Note(u8),
}

impl PitchToken {
    pub fn note(midi: i64) -> Result<Self, ScoreError> {
        if (0..=127).contains(&midi) {
            Ok(PitchToken::Note(midi as u8))
        } else {
            Err(ScoreError::PitchOutOfRange(midi))
        }
    }

    pub fn is_rest(self) -> bool {
        matches!(self, PitchToken::Rest)
    }

    pub fn midi(self) -> Option<u8> {
        match self {
            PitchToken::Note(m) => Some(m),
            PitchToken::Rest => None,
        }
    }
}

impl fmt::Display for PitchToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PitchToken::Rest => f.write_str("R"),
            PitchToken::Note(m) => write!(f, "{m}"),
        }
    }
}

impl Serialize for PitchToken {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            PitchToken::Rest => s.serialize_str("R"),
            PitchToken::Note(m) => s.serialize_u8(*m),
        }
    }
}

impl<'de> Deserialize<'de> for PitchToken {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct PitchVisitor;

        impl Visitor<'_> for PitchVisitor {
            type Value = PitchToken;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a MIDI number in 0..=127 or \"R\"")
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<PitchToken, E> {
                PitchToken::note(v).map_err(E::custom)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<PitchToken, E> {
                PitchToken::note(v.min(i64::MAX as u64) as i64).map_err(E::custom)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<PitchToken, E> {
                if v == "R" {
                    Ok(PitchToken::Rest)
                } else {
                    Err(E::custom(format!("unknown pitch token {v:?}")))
                }
            }
        }

        d.deserialize_any(PitchVisitor)
    }
}

/// Note length in whole-note units, stored in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Duration {
    num: u32,
    den: u32,
}

impl Duration {
    pub fn new(num: u64, den: u64) -> Result<Self, ScoreError> {
        let err = ScoreError::InvalidDuration { num, den };
        if num == 0 || den == 0 || !den.is_power_of_two() || den > FINEST_DENOMINATOR as u64 {
            return Err(err);
        }
        let g = gcd(num, den);
        let (num, den) = (num / g, den / g);
        let num = u32::try_from(num).map_err(|_| err)?;
        Ok(Duration { num, den: den as u32 })
    }

    /// Builds a duration from a count of 64th notes.
    pub fn from_sixty_fourths(units: u64) -> Result<Self, ScoreError> {
        Duration::new(units, FINEST_DENOMINATOR as u64)
    }

    pub fn numerator(self) -> u32 {
        self.num
    }

    pub fn denominator(self) -> u32 {
        self.den
    }

    /// Exact length as a count of 64th notes.
    pub fn sixty_fourths(self) -> u64 {
        self.num as u64 * (FINEST_DENOMINATOR / self.den) as u64
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl PartialOrd for Duration {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Duration {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.sixty_fourths().cmp(&other.sixty_fourths())
    }
}

impl fmt::Display for Duration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl Serialize for Duration {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut t = s.serialize_tuple(2)?;
        t.serialize_element(&self.num)?;
        t.serialize_element(&self.den)?;
        t.end()
    }
}

impl<'de> Deserialize<'de> for Duration {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let (num, den) = <(u64, u64)>::deserialize(d)?;
        let parsed = Duration::new(num, den).map_err(de::Error::custom)?;
        // Canonical records carry lowest terms; `[2, 8]` is rejected rather than rewritten.
        if parsed.num as u64 != num || parsed.den as u64 != den {
            return Err(de::Error::custom(format!(
                "duration {num}/{den} is not in lowest terms"
            )));
        }
        Ok(parsed)
    }
}

/// Exact sum of durations, in 64th notes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TotalDuration(pub u64);

impl Sum<Duration> for TotalDuration {
    fn sum<I: Iterator<Item = Duration>>(iter: I) -> Self {
        TotalDuration(iter.map(Duration::sixty_fourths).sum())
    }
}

impl<'a> Sum<&'a NoteEvent> for TotalDuration {
    fn sum<I: Iterator<Item = &'a NoteEvent>>(iter: I) -> Self {
        iter.map(|n| n.dur).sum()
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// One note: pitch, duration and whether it closes its syllable's group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NoteEvent {
    pub pitch: PitchToken,
    pub dur: Duration,
    #[serde(with = "label_bit")]
    pub label: bool,
}

impl NoteEvent {
    pub fn new(pitch: PitchToken, dur: Duration, label: bool) -> Self {
        NoteEvent { pitch, dur, label }
    }
}

mod label_bit {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(label: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(u8::from(*label))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        match u8::deserialize(d)? {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(de::Error::custom(format!("label must be 0 or 1, got {other}"))),
        }
    }
}

/// A lyric syllable and its phonetic key (pinyin-style).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Syllable {
    pub surface: String,
    pub phonetic: String,
}

impl Syllable {
    pub fn new(surface: impl Into<String>, phonetic: impl Into<String>) -> Self {
        Syllable {
            surface: surface.into(),
            phonetic: phonetic.into(),
        }
    }
}

/// One lyric sentence paired with its melody line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignedLine {
    pub syllables: Vec<Syllable>,
    pub notes: Vec<NoteEvent>,
}

impl AlignedLine {
    pub fn new(syllables: Vec<Syllable>, notes: Vec<NoteEvent>) -> Self {
        AlignedLine { syllables, notes }
    }

    pub fn validate(&self) -> Result<(), AlignmentViolations> {
        validate_alignment(self)
    }

    /// Notes grouped per syllable.
    pub fn groups(&self) -> Result<Vec<&[NoteEvent]>, ScoreError> {
        split_by_labels(&self.notes)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Song {
    pub id: String,
    pub key: String,
    pub bpm: u32,
    pub lines: Vec<AlignedLine>,
}

impl Song {
    /// Checks every song-level and line-level invariant.
    pub fn validate(&self) -> Result<(), ScoreError> {
        let invalid = |reason: &str| ScoreError::InvalidSong {
            song: self.id.clone(),
            reason: reason.to_string(),
        };
        if self.lines.is_empty() {
            return Err(invalid("song has no lines"));
        }
        if self.bpm == 0 {
            return Err(invalid("bpm must be positive"));
        }
        for (idx, line) in self.lines.iter().enumerate() {
            if let Some(pos) = line.syllables.iter().position(|s| s.surface.is_empty()) {
                return Err(invalid(&format!("line {idx}: syllable {pos} has an empty surface")));
            }
            line.validate().map_err(|violations| ScoreError::InvalidLine {
                song: self.id.clone(),
                line: idx,
                violations,
            })?;
        }
        Ok(())
    }

    pub fn notes(&self) -> impl Iterator<Item = &NoteEvent> {
        self.lines.iter().flat_map(|l| l.notes.iter())
    }

    pub fn note_count(&self) -> usize {
        self.lines.iter().map(|l| l.notes.len()).sum()
    }
}

/// A ten-syllable pop-song fragment with one-to-many alignment and two
/// group-leading rests, used throughout the tests as a reference line.
pub fn sample_line() -> AlignedLine {
    let syllables = [
        ("爱", "ai4"),
        ("恨", "hen4"),
        ("两", "liang3"),
        ("茫", "mang2"),
        ("茫", "mang2"),
        ("问", "wen4"),
        ("君", "jun1"),
        ("何", "he2"),
        ("时", "shi2"),
        ("恋", "lian4"),
    ]
    .into_iter()
    .map(|(s, p)| Syllable::new(s, p))
    .collect();

    const R: Option<u8> = None;
    let groups: [&[(Option<u8>, u64)]; 10] = [
        &[(R, 4), (Some(69), 4)],
        &[(Some(76), 4)],
        &[(Some(74), 8), (Some(71), 8)],
        &[(Some(69), 8), (Some(72), 16), (Some(69), 16)],
        &[(Some(67), 8), (Some(64), 8), (Some(67), 2)],
        &[(R, 4), (Some(64), 4)],
        &[(Some(74), 4)],
        &[(Some(72), 8), (Some(69), 8)],
        &[(Some(67), 8), (Some(72), 8)],
        &[(Some(72), 4), (Some(69), 2)],
    ];
    let mut notes = Vec::with_capacity(20);
    for group in groups {
        for (k, &(pitch, den)) in group.iter().enumerate() {
            let pitch = pitch.map_or(PitchToken::Rest, PitchToken::Note);
            let dur = Duration::new(1, den).expect("valid literal duration");
            notes.push(NoteEvent::new(pitch, dur, k + 1 == group.len()));
        }
    }
    AlignedLine::new(syllables, notes)
}
