//! JSON-lines corpus codec: one song record per line.
//!
//! Canonical form is compact JSON with fields in declaration order and
//! durations in lowest terms, so `write(read(x)) == x` for canonical `x`.

use super::{ScoreError, Song};

/// Parses and validates one song record.
pub fn song_codec_read(record: &str) -> Result<Song, ScoreError> {
    parse_record(record, 1)
}

/// Canonical single-line serialization of a song.
pub fn song_codec_write(song: &Song) -> String {
    serde_json::to_string(song).expect("song serialization is infallible")
}

/// Reads a whole corpus file; blank lines are skipped.
pub fn read_corpus(text: &str) -> Result<Vec<Song>, ScoreError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, l)| parse_record(l, k + 1))
        .collect()
}

pub fn write_corpus(songs: &[Song]) -> String {
    let mut out = String::new();
    for song in songs {
        out.push_str(&song_codec_write(song));
        out.push('\n');
    }
    out
}

fn parse_record(record: &str, line: usize) -> Result<Song, ScoreError> {
    let song: Song = serde_json::from_str(record).map_err(|e| ScoreError::Parse {
        line,
        message: e.to_string(),
    })?;
    song.validate()?;
    Ok(song)
}
