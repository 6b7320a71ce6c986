use std::fmt;

use super::CorpusError;
use crate::score::{PitchToken, Song};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Major,
    Minor,
}

/// A tonic pitch class (0 = C) and mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Key {
    pub tonic: u8,
    pub mode: Mode,
}

const SHARP_NAMES: [&str; 12] = ["C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"];

// Krumhansl-Kessler key profiles, indexed from the tonic.
const MAJOR_PROFILE: [f64; 12] = [6.35, 2.23, 3.48, 2.33, 4.38, 4.09, 2.52, 5.19, 2.39, 3.66, 2.29, 2.88];
const MINOR_PROFILE: [f64; 12] = [6.33, 2.68, 3.52, 5.38, 2.60, 3.53, 2.54, 4.75, 3.98, 2.69, 3.34, 3.17];

impl Key {
    pub const C_MAJOR: Key = Key {
        tonic: 0,
        mode: Mode::Major,
    };
    pub const A_MINOR: Key = Key {
        tonic: 9,
        mode: Mode::Minor,
    };

    /// Accepts `C`, `F#`, `Bb`, `Am`, `Ebm`, `D major`, `c# minor`, `Gmin`, ...
    pub fn parse(name: &str) -> Option<Key> {
        let name = name.trim();
        let mut chars = name.chars();
        let letter = chars.next()?.to_ascii_uppercase();
        let base: i32 = match letter {
            'C' => 0,
            'D' => 2,
            'E' => 4,
            'F' => 5,
            'G' => 7,
            'A' => 9,
            'B' => 11,
            _ => return None,
        };
        let mut rest = chars.as_str();
        let accidental = match rest.chars().next() {
            Some('#') => 1,
            Some('b') => -1,
            _ => 0,
        };
        if accidental != 0 {
            rest = &rest[1..];
        }
        let suffix = rest.trim();
        let mode = match suffix.to_ascii_lowercase().as_str() {
            _ if suffix == "M" => Mode::Major,
            "" | "maj" | "major" => Mode::Major,
            "m" | "min" | "minor" => Mode::Minor,
            _ => return None,
        };
        Some(Key {
            tonic: (base + accidental).rem_euclid(12) as u8,
            mode,
        })
    }

    /// Semitone shift taking this key to C major or A minor, in `-6..=5`.
    pub fn offset_to_reference(self) -> i32 {
        let target = match self.mode {
            Mode::Major => 0,
            Mode::Minor => 9,
        };
        let up = (target - self.tonic as i32).rem_euclid(12);
        if up > 5 {
            up - 12
        } else {
            up
        }
    }
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(SHARP_NAMES[self.tonic as usize])?;
        if self.mode == Mode::Minor {
            f.write_str("m")?;
        }
        Ok(())
    }
}

/// Duration-weighted pitch-class histogram correlated against the major
/// and minor key profiles; the best-correlated key wins. `None` when the
/// song has no pitched notes.
pub fn detect_key(song: &Song) -> Option<Key> {
    let mut histogram = [0.0f64; 12];
    for note in song.notes() {
        if let PitchToken::Note(m) = note.pitch {
            histogram[m as usize % 12] += note.dur.as_f64();
        }
    }
    if histogram.iter().all(|&w| w == 0.0) {
        return None;
    }
    let mut best: Option<(f64, Key)> = None;
    for mode in [Mode::Major, Mode::Minor] {
        let profile = match mode {
            Mode::Major => &MAJOR_PROFILE,
            Mode::Minor => &MINOR_PROFILE,
        };
        for tonic in 0..12u8 {
            let rotated: Vec<f64> = (0..12).map(|pc| profile[(pc + 12 - tonic as usize) % 12]).collect();
            let r = pearson(&histogram, &rotated);
            if best.is_none_or(|(b, _)| r > b) {
                best = Some((r, Key { tonic, mode }));
            }
        }
    }
    best.map(|(_, k)| k)
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        0.0
    } else {
        cov / (va * vb).sqrt()
    }
}

/// Moves the melody to C major (major keys) or A minor (minor keys) using
/// the song's key metadata. Intervals, durations and labels are unchanged.
pub fn transpose_song(song: &Song) -> Result<Song, CorpusError> {
    let key = Key::parse(&song.key).ok_or_else(|| CorpusError::UnknownKey {
        song: song.id.clone(),
        key: song.key.clone(),
    })?;
    shift(song, key)
}

/// As [`transpose_song`], but detects the key from the pitch content when
/// the metadata is blank or `"?"`.
pub fn transpose_song_with_fallback(song: &Song) -> Result<Song, CorpusError> {
    let blank = song.key.trim().is_empty() || song.key.trim() == "?";
    match (blank, detect_key(song)) {
        (true, Some(key)) => shift(song, key),
        (true, None) => {
            let mut out = song.clone();
            out.key = Key::C_MAJOR.to_string();
            Ok(out)
        }
        (false, _) => transpose_song(song),
    }
}

fn shift(song: &Song, key: Key) -> Result<Song, CorpusError> {
    let offset = key.offset_to_reference();
    let mut out = song.clone();
    for note in out.lines.iter_mut().flat_map(|l| l.notes.iter_mut()) {
        if let PitchToken::Note(m) = note.pitch {
            let shifted = m as i32 + offset;
            note.pitch = u8::try_from(shifted)
                .ok()
                .filter(|p| *p <= 127)
                .map(PitchToken::Note)
                .ok_or_else(|| CorpusError::TransposeRange {
                    song: song.id.clone(),
                    pitch: m,
                    offset,
                })?;
        }
    }
    out.key = match key.mode {
        Mode::Major => Key::C_MAJOR,
        Mode::Minor => Key::A_MINOR,
    }
    .to_string();
    Ok(out)
}
