use super::CorpusError;
use crate::score::{Duration, Song};

/// Rewrites a song at 60 bpm, keeping every note's length in seconds.
///
/// A note of `d` whole notes at `bpm` lasts `240 d / bpm` seconds, which is
/// `d * 60 / bpm` whole notes at 60 bpm. The result is rounded to the
/// nearest 64th (halves round up); anything shorter than a 64th before
/// rounding is an error.
pub fn normalize_durations(song: &Song) -> Result<Song, CorpusError> {
    if song.bpm == 0 {
        return Err(CorpusError::ZeroTempo { song: song.id.clone() });
    }
    let mut out = song.clone();
    out.bpm = 60;
    if song.bpm == 60 {
        return Ok(out);
    }
    let bpm = song.bpm as u64;
    for (li, line) in out.lines.iter_mut().enumerate() {
        for (ni, note) in line.notes.iter_mut().enumerate() {
            // Scaled length in 64ths is units * 60 / bpm.
            let scaled = note.dur.sixty_fourths() * 60;
            let underflow = || CorpusError::DurationUnderflow {
                song: song.id.clone(),
                line: li,
                note: ni,
                dur: note.dur.to_string(),
            };
            if scaled < bpm {
                return Err(underflow());
            }
            let units = (2 * scaled + bpm) / (2 * bpm);
            debug_assert!(units >= 1);
            note.dur = Duration::from_sixty_fourths(units).map_err(|_| underflow())?;
        }
    }
    Ok(out)
}
