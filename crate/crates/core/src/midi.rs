//! Standard MIDI File export of composed songs, and a reader for the files
//! it writes.
//!
//! Songs become format-1 files with a conductor track (tempo) and one
//! melody track. Time is metrical at 480 ticks per quarter, so every
//! duration down to a 64th note is a whole number of ticks (30). Rests
//! are gaps between notes; a `rest` marker at each rest onset lets the
//! reader split adjacent rests again.

use midly::num::{u15, u24, u28, u4, u7};
use midly::{Format, Header, MetaMessage, MidiMessage, Smf, Timing, TrackEvent, TrackEventKind};
use thiserror::Error;

use crate::score::{Duration, PitchToken, ScoreError, Song, FINEST_DENOMINATOR};

pub const TICKS_PER_QUARTER: u16 = 480;
pub const TICKS_PER_WHOLE: u64 = 4 * TICKS_PER_QUARTER as u64;
/// Ticks per 64th note.
pub const TICKS_PER_UNIT: u64 = TICKS_PER_WHOLE / FINEST_DENOMINATOR as u64;
pub const VELOCITY: u8 = 80;
const REST_MARKER: &[u8] = b"rest";

#[derive(Debug, Error)]
pub enum MidiError {
    #[error(transparent)]
    Song(#[from] ScoreError),
    #[error("malformed MIDI file: {0}")]
    Malformed(String),
    #[error("unsupported MIDI file: {0}")]
    Unsupported(String),
    #[error("{0} ticks is not a whole number of 64th notes")]
    OffGrid(u64),
}

/// One note or rest read back from a file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MidiNote {
    pub pitch: PitchToken,
    pub dur: Duration,
    pub onset: u64,
}

fn ticks(d: Duration) -> u64 {
    d.sixty_fourths() * TICKS_PER_UNIT
}

/// Renders a validated song. Identical songs give identical bytes.
pub fn export_midi(song: &Song) -> Result<Vec<u8>, MidiError> {
    song.validate()?;
    let tempo = 60_000_000 / song.bpm;
    let conductor = vec![
        meta(0, MetaMessage::TrackName(song.id.as_bytes())),
        meta(0, MetaMessage::Tempo(u24::new(tempo.min(0xFF_FFFF)))),
        meta(0, MetaMessage::EndOfTrack),
    ];

    let channel = u4::new(0);
    let mut melody = vec![meta(0, MetaMessage::TrackName(b"melody"))];
    // Pending time since the last written event.
    let mut delta = 0u64;
    for line in &song.lines {
        for (group, syllable) in line.groups()?.into_iter().zip(&line.syllables) {
            let mut lyric = Some(syllable.surface.as_bytes());
            for note in group {
                match note.pitch {
                    PitchToken::Rest => {
                        melody.push(meta(delta, MetaMessage::Marker(REST_MARKER)));
                        delta = ticks(note.dur);
                    }
                    PitchToken::Note(key) => {
                        if let Some(text) = lyric.take() {
                            melody.push(meta(delta, MetaMessage::Lyric(text)));
                            delta = 0;
                        }
                        let key = u7::new(key);
                        melody.push(midi(
                            delta,
                            channel,
                            MidiMessage::NoteOn {
                                key,
                                vel: u7::new(VELOCITY),
                            },
                        ));
                        melody.push(midi(
                            ticks(note.dur),
                            channel,
                            MidiMessage::NoteOff { key, vel: u7::new(0) },
                        ));
                        delta = 0;
                    }
                }
            }
        }
    }
    melody.push(meta(delta, MetaMessage::EndOfTrack));

    let mut smf = Smf::new(Header::new(
        Format::Parallel,
        Timing::Metrical(u15::new(TICKS_PER_QUARTER)),
    ));
    smf.tracks = vec![conductor, melody];
    let mut out = Vec::new();
    smf.write_std(&mut out)
        .map_err(|e| MidiError::Malformed(format!("write failed: {e}")))?;
    Ok(out)
}

fn meta(delta: u64, m: MetaMessage<'_>) -> TrackEvent<'_> {
    TrackEvent {
        delta: u28::new(delta as u32),
        kind: TrackEventKind::Meta(m),
    }
}

fn midi(delta: u64, channel: u4, message: MidiMessage) -> TrackEvent<'static> {
    TrackEvent {
        delta: u28::new(delta as u32),
        kind: TrackEventKind::Midi { channel, message },
    }
}

/// Checks the chunk structure so truncated files fail instead of being
/// read partially.
fn check_chunks(bytes: &[u8]) -> Result<(), MidiError> {
    let mut pos = 0usize;
    let mut first = true;
    while pos < bytes.len() {
        let head = bytes
            .get(pos..pos + 8)
            .ok_or_else(|| MidiError::Malformed(format!("truncated chunk header at byte {pos}")))?;
        if first && &head[..4] != b"MThd" {
            return Err(MidiError::Malformed("missing MThd header".into()));
        }
        first = false;
        let len = u32::from_be_bytes([head[4], head[5], head[6], head[7]]) as usize;
        pos += 8;
        if bytes.len() - pos < len {
            return Err(MidiError::Malformed(format!(
                "chunk {:?} declares {len} bytes, {} remain",
                String::from_utf8_lossy(&head[..4]),
                bytes.len() - pos
            )));
        }
        pos += len;
    }
    if first {
        return Err(MidiError::Malformed("empty file".into()));
    }
    Ok(())
}

fn to_duration(ticks: u64) -> Result<Duration, MidiError> {
    if !ticks.is_multiple_of(TICKS_PER_UNIT) {
        return Err(MidiError::OffGrid(ticks));
    }
    Duration::from_sixty_fourths(ticks / TICKS_PER_UNIT).map_err(|_| MidiError::OffGrid(ticks))
}

/// Rests filling `[from, until)`, split at marker ticks.
fn push_rests(out: &mut Vec<MidiNote>, markers: &mut Vec<u64>, from: u64, until: u64) -> Result<(), MidiError> {
    let mut starts: Vec<u64> = markers.drain(..).filter(|&t| t >= from && t < until).collect();
    if until > from && starts.first() != Some(&from) {
        starts.insert(0, from);
    }
    starts.dedup();
    for (k, &start) in starts.iter().enumerate() {
        let end = starts.get(k + 1).copied().unwrap_or(until);
        out.push(MidiNote {
            pitch: PitchToken::Rest,
            dur: to_duration(end - start)?,
            onset: start,
        });
    }
    Ok(())
}

/// Notes and rests of the melody track (the last track) in time order.
/// Gaps become rests, split at `rest` markers.
pub fn read_midi_notes(bytes: &[u8]) -> Result<Vec<MidiNote>, MidiError> {
    check_chunks(bytes)?;
    let smf = Smf::parse(bytes).map_err(|e| MidiError::Malformed(e.to_string()))?;
    if smf.header.timing != Timing::Metrical(u15::new(TICKS_PER_QUARTER)) {
        return Err(MidiError::Unsupported(format!("timing {:?}", smf.header.timing)));
    }
    let Some(track) = smf.tracks.last() else {
        return Ok(Vec::new());
    };
    if !matches!(
        track.last().map(|e| e.kind),
        Some(TrackEventKind::Meta(MetaMessage::EndOfTrack))
    ) {
        return Err(MidiError::Malformed("melody track lacks an end-of-track event".into()));
    }

    let mut out = Vec::new();
    let mut now = 0u64;
    // End of the last sounding note, and rest onsets since then.
    let mut cursor = 0u64;
    let mut markers: Vec<u64> = Vec::new();
    let mut sounding: Option<(u8, u64)> = None;
    for event in track {
        now += event.delta.as_int() as u64;
        match event.kind {
            TrackEventKind::Meta(MetaMessage::Marker(REST_MARKER)) => markers.push(now),
            TrackEventKind::Midi { message, .. } => {
                let (key, on) = match message {
                    MidiMessage::NoteOn { key, vel } => (key.as_int(), vel.as_int() > 0),
                    MidiMessage::NoteOff { key, .. } => (key.as_int(), false),
                    _ => continue,
                };
                match (on, sounding) {
                    (true, None) => {
                        push_rests(&mut out, &mut markers, cursor, now)?;
                        sounding = Some((key, now));
                    }
                    (false, Some((k, start))) if k == key => {
                        out.push(MidiNote {
                            pitch: PitchToken::Note(key),
                            dur: to_duration(now - start)?,
                            onset: start,
                        });
                        sounding = None;
                        cursor = now;
                    }
                    (true, Some(_)) => return Err(MidiError::Unsupported(format!("overlapping notes at tick {now}"))),
                    (false, _) => {
                        return Err(MidiError::Malformed(format!(
                            "unmatched note-off for key {key} at tick {now}"
                        )))
                    }
                }
            }
            _ => {}
        }
    }
    if let Some((key, _)) = sounding {
        return Err(MidiError::Malformed(format!("note {key} is never released")));
    }
    Ok(out)
}
