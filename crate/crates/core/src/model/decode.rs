use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{EncodedNotes, EncodedTriple};
use crate::nn::{softmax, Graph, NodeId, Scalar};
use crate::score::{AlignedLine, NoteEvent, Song, Syllable};

use super::{Attribute, MelodyModel, ModelError};

/// Result of a teacher-forced pass over one triple.
#[derive(Debug, Clone)]
pub struct TeacherForced {
    /// Scalar node holding the summed negative log-likelihood.
    pub loss: NodeId,
    /// Summed NLL per attribute.
    pub nll: [f64; 3],
    pub notes: usize,
    /// Argmax class per attribute and step.
    pub predicted: Vec<[usize; 3]>,
    pub gold: Vec<[usize; 3]>,
    /// 1-based syllable index per step.
    pub j: Vec<usize>,
    /// Context attention weights per step (empty without context).
    pub alpha: Vec<Vec<f64>>,
    /// Lyric attention weights per step (baseline only).
    pub lyric_alpha: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "policy")]
pub enum DecodePolicy {
    Greedy,
    Sample { temperature: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerateOptions {
    pub policy: DecodePolicy,
    /// Overrides the configured note limit; must be at least the number
    /// of syllables.
    pub max_len: Option<usize>,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        GenerateOptions {
            policy: DecodePolicy::Greedy,
            max_len: None,
        }
    }
}

/// Per-step decoding record of one generated line.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LineTrace {
    pub j: Vec<usize>,
    pub alpha: Vec<Vec<f64>>,
    pub lyric_alpha: Vec<Vec<f64>>,
    /// Steps where the remaining budget forced a closing note.
    pub forced_closures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedLine {
    pub notes: EncodedNotes,
    pub trace: LineTrace,
}

pub(crate) fn argmax<T: Scalar>(values: &[T]) -> usize {
    let mut best = 0;
    for (k, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = k;
        }
    }
    best
}

fn argmax_allowed<T: Scalar>(values: &[T], banned: Option<usize>) -> usize {
    let mut best: Option<usize> = None;
    for (k, v) in values.iter().enumerate() {
        if Some(k) == banned {
            continue;
        }
        if best.is_none_or(|b| *v > values[b]) {
            best = Some(k);
        }
    }
    best.unwrap_or(0)
}

fn sample_allowed<T: Scalar, R: Rng + ?Sized>(
    values: &[T],
    banned: Option<usize>,
    temperature: f64,
    rng: &mut R,
) -> usize {
    let t = temperature.max(1e-6);
    let scaled: Vec<f64> = values
        .iter()
        .enumerate()
        .map(|(k, v)| {
            if Some(k) == banned {
                f64::NEG_INFINITY
            } else {
                v.f64() / t
            }
        })
        .collect();
    let probs = softmax(&scaled);
    let mut u: f64 = rng.random();
    for (k, p) in probs.iter().enumerate() {
        if Some(k) == banned {
            continue;
        }
        if u < *p {
            return k;
        }
        u -= p;
    }
    argmax_allowed(values, banned)
}

fn values_f64<T: Scalar>(g: &Graph<'_, T>, id: Option<NodeId>) -> Option<Vec<f64>> {
    id.map(|n| g.value(n).iter().map(|x| x.f64()).collect())
}

impl<T: Scalar> MelodyModel<T> {
    /// Runs the decoder on gold inputs and records every head's
    /// cross-entropy against the gold target.
    pub fn teacher_forcing(&self, g: &mut Graph<'_, T>, triple: &EncodedTriple) -> Result<TeacherForced, ModelError> {
        let gold = self.target_classes(&triple.target)?;
        let encoded = self.encode(g, &triple.syllables, &triple.phonetics, &triple.context)?;
        let mut state = self.init_decoder(g, &encoded)?;
        let mut losses = Vec::with_capacity(3 * gold.len());
        let mut out = TeacherForced {
            loss: state.s,
            nll: [0.0; 3],
            notes: gold.len(),
            predicted: Vec::with_capacity(gold.len()),
            gold: gold.clone(),
            j: Vec::with_capacity(gold.len()),
            alpha: Vec::new(),
            lyric_alpha: Vec::new(),
        };
        for target in &gold {
            let mut predicted = [0; 3];
            let mut emit = |attr: Attribute, logits: &[T]| {
                predicted[attr.index()] = argmax(logits);
                target[attr.index()]
            };
            let (step, next) = self.decode_step(g, &encoded, &state, &mut emit)?;
            for attr in Attribute::ALL {
                let ce = g.cross_entropy(step.logits[attr.index()], target[attr.index()])?;
                out.nll[attr.index()] += g.scalar(ce).f64();
                losses.push(ce);
            }
            out.predicted.push(predicted);
            out.j.push(step.j);
            out.alpha.extend(values_f64(g, step.alpha));
            out.lyric_alpha.extend(values_f64(g, step.lyric_alpha));
            state = next;
        }
        out.loss = g.sum(&losses)?;
        Ok(out)
    }

    /// Summed NLL of a triple, the per-attribute parts and the note count.
    pub fn teacher_forcing_loss(&self, triple: &EncodedTriple) -> Result<(f64, [f64; 3], usize), ModelError> {
        let mut g = Graph::new(&self.params);
        let tf = self.teacher_forcing(&mut g, triple)?;
        Ok((g.scalar(tf.loss).f64(), tf.nll, tf.notes))
    }

    /// Free-running decoding of one line.
    ///
    /// Decoding stops once the emitted labels account for every syllable.
    /// When the remaining note budget equals the number of open syllables,
    /// each further step is forced to a non-rest note with label `1`
    /// (pitch and duration from the head argmaxes); a rest always gets
    /// label `0`. The result therefore always satisfies the alignment rules.
    pub fn generate_encoded<R: Rng + ?Sized>(
        &self,
        syllables: &[usize],
        phonetics: &[usize],
        context: &EncodedNotes,
        options: &GenerateOptions,
        rng: &mut R,
    ) -> Result<GeneratedLine, ModelError> {
        let n = syllables.len();
        if n == 0 {
            return Err(ModelError::EmptyLine);
        }
        let max_len = options.max_len.unwrap_or_else(|| self.config.max_notes_for(n));
        if max_len < n {
            return Err(ModelError::InvalidConfig(format!(
                "max_len {max_len} is below the syllable count {n}"
            )));
        }
        let rest = self.rest_class();
        let mut g = Graph::new(&self.params);
        let encoded = self.encode(&mut g, syllables, phonetics, context)?;
        let mut state = self.init_decoder(&mut g, &encoded)?;
        let mut notes = EncodedNotes::default();
        let mut trace = LineTrace::default();

        while state.label_count < n {
            let must_close = max_len - state.steps == n - state.label_count;
            let mut is_rest = false;
            let policy = options.policy;
            let mut emit = |attr: Attribute, logits: &[T]| match attr {
                Attribute::Pitch => {
                    let banned = if must_close { rest } else { None };
                    let k = match policy {
                        DecodePolicy::Sample { temperature } if !must_close => {
                            sample_allowed(logits, banned, temperature, rng)
                        }
                        _ => argmax_allowed(logits, banned),
                    };
                    is_rest = Some(k) == rest;
                    k
                }
                Attribute::Duration => match policy {
                    DecodePolicy::Sample { temperature } if !must_close => {
                        sample_allowed(logits, None, temperature, rng)
                    }
                    _ => argmax(logits),
                },
                Attribute::Label => {
                    if must_close {
                        1
                    } else if is_rest {
                        0
                    } else {
                        match policy {
                            DecodePolicy::Sample { temperature } => sample_allowed(logits, None, temperature, rng),
                            DecodePolicy::Greedy => argmax(logits),
                        }
                    }
                }
            };
            let (step, next) = self.decode_step(&mut g, &encoded, &state, &mut emit)?;
            trace.forced_closures += usize::from(must_close);
            trace.j.push(step.j);
            trace.alpha.extend(values_f64(&g, step.alpha));
            trace.lyric_alpha.extend(values_f64(&g, step.lyric_alpha));
            notes.push(next.prev[0], next.prev[1], next.prev[2]);
            state = next;
        }
        Ok(GeneratedLine { notes, trace })
    }

    /// Generates the melody for `lyrics` after `context`.
    pub fn generate_line<R: Rng + ?Sized>(
        &self,
        lyrics: &[Syllable],
        context: &[NoteEvent],
        options: &GenerateOptions,
        rng: &mut R,
    ) -> Result<(AlignedLine, LineTrace), ModelError> {
        let (syllables, phonetics) = self.vocab.encode_lyrics(lyrics);
        let context = self.vocab.encode_notes(context);
        let generated = self.generate_encoded(&syllables, &phonetics, &context, options, rng)?;
        let notes = self.decode_notes(&generated.notes)?;
        Ok((AlignedLine::new(lyrics.to_vec(), notes), generated.trace))
    }

    pub fn decode_notes(&self, notes: &EncodedNotes) -> Result<Vec<NoteEvent>, ModelError> {
        (0..notes.len())
            .map(|k| {
                self.vocab
                    .decode_note(notes.pitch[k], notes.duration[k], notes.label[k])
                    .ok_or(ModelError::SpecialToken {
                        attr: Attribute::Pitch,
                        id: notes.pitch[k],
                    })
            })
            .collect()
    }

    /// Composes a song line by line, each line conditioned on the last
    /// `context_window` generated notes.
    pub fn compose_song<R: Rng + ?Sized>(
        &self,
        id: &str,
        lines: &[Vec<Syllable>],
        options: &GenerateOptions,
        rng: &mut R,
    ) -> Result<(Song, Vec<LineTrace>), ModelError> {
        if lines.is_empty() {
            return Err(ModelError::EmptyLine);
        }
        let mut history: Vec<NoteEvent> = Vec::new();
        let mut out = Vec::with_capacity(lines.len());
        let mut traces = Vec::with_capacity(lines.len());
        for lyrics in lines {
            let start = history.len().saturating_sub(self.config.context_window);
            let (line, trace) = self.generate_line(lyrics, &history[start..], options, rng)?;
            history.extend_from_slice(&line.notes);
            out.push(line);
            traces.push(trace);
        }
        let song = Song {
            id: id.to_string(),
            key: "C".into(),
            bpm: 60,
            lines: out,
        };
        Ok((song, traces))
    }
}
