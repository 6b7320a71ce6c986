use super::ScoreError;

/// Semitone of each natural letter relative to C.
fn letter_offset(letter: char) -> Option<i64> {
    Some(match letter {
        'C' => 0,
        'D' => 2,
        'E' => 4,
        'F' => 5,
        'G' => 7,
        'A' => 9,
        'B' => 11,
        _ => return None,
    })
}

/// Parses scientific pitch notation (`C5`, `Eb6`, `F#3`, `A-1`) into a
/// MIDI number, with middle C written `C4` = 60.
pub fn pitch_name_to_midi(name: &str) -> Result<u8, ScoreError> {
    let bad = || ScoreError::PitchName(name.to_string());
    let mut chars = name.chars();
    let base = chars.next().and_then(letter_offset).ok_or_else(bad)?;
    let rest = chars.as_str();
    let (accidental, octave) = match rest.chars().next() {
        Some('#') => (1, &rest[1..]),
        Some('b') => (-1, &rest[1..]),
        _ => (0, rest),
    };
    if octave.is_empty() {
        return Err(bad());
    }
    let octave: i64 = octave.parse().map_err(|_| bad())?;
    let midi = 12 * (octave + 1) + base + accidental;
    u8::try_from(midi).ok().filter(|m| *m <= 127).ok_or_else(bad)
}

/// Inverse of [`pitch_name_to_midi`], spelling black keys with sharps.
pub fn midi_to_pitch_name(midi: u8) -> String {
    const NAMES: [&str; 12] = ["C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"];
    format!("{}{}", NAMES[midi as usize % 12], midi as i64 / 12 - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchors() {
        assert_eq!(pitch_name_to_midi("C5").unwrap(), 72);
        assert_eq!(pitch_name_to_midi("Eb6").unwrap(), 87);
        assert_eq!(pitch_name_to_midi("A4").unwrap(), 69);
        assert_eq!(
            pitch_name_to_midi("C5").unwrap() - pitch_name_to_midi("C4").unwrap(),
            12
        );
        assert_eq!(pitch_name_to_midi("C-1").unwrap(), 0);
        assert_eq!(pitch_name_to_midi("G9").unwrap(), 127);
    }

    #[test]
    fn rejects_garbage() {
        for name in ["", "H4", "C", "C#", "Cx4", "G#9", "C-2", "c4"] {
            assert!(pitch_name_to_midi(name).is_err(), "{name}");
        }
    }

    #[test]
    fn names_round_trip() {
        for midi in 0..=127u8 {
            assert_eq!(pitch_name_to_midi(&midi_to_pitch_name(midi)).unwrap(), midi);
        }
    }
}
