use crate::baseline;
use crate::corpus::{EncodedNotes, EncodedTriple, Vocabulary, LABEL_BOS, LABEL_VOCAB_SIZE};
use crate::nn::{
    run_bidirectional, Attention, AttentionKeys, Graph, GruCell, NodeId, ParamId, ParamKind, ParamStore, Scalar,
};
use crate::score::PitchToken;

use super::{Architecture, Attribute, ModelConfig, ModelError};

/// Parameter handles of one model instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Layout {
    pub syllable_emb: ParamId,
    pub phonetic_emb: ParamId,
    pub pitch_emb: ParamId,
    pub duration_emb: ParamId,
    pub label_emb: ParamId,
    pub lyrics_fwd: GruCell,
    pub lyrics_bwd: GruCell,
    pub pitch_fwd: GruCell,
    pub pitch_bwd: GruCell,
    pub duration_fwd: GruCell,
    pub duration_bwd: GruCell,
    pub attention: Attention,
    /// Projects the `4H` melody context down to the `2H` lyric space.
    pub context_proj: ParamId,
    pub init_pitch: (ParamId, ParamId),
    pub init_duration: (ParamId, ParamId),
    pub dec_pitch: GruCell,
    pub dec_duration: GruCell,
    pub dec_label: GruCell,
    pub head_pitch: (ParamId, ParamId),
    pub head_duration: (ParamId, ParamId),
    pub head_label: (ParamId, ParamId),
    pub lyric_attention: Option<Attention>,
}

/// Encoder-decoder over lyrics, context melody and target melody.
#[derive(Debug, Clone, PartialEq)]
pub struct MelodyModel<T> {
    pub config: ModelConfig,
    pub arch: Architecture,
    pub vocab: Vocabulary,
    pub params: ParamStore<T>,
    pub(crate) layout: Layout,
    rest_class: Option<usize>,
}

/// Context-encoder outputs for one line.
#[derive(Debug, Clone)]
pub struct ContextEncoding {
    /// `[h_pit ; h_dur]` per context note.
    pub h_con: Vec<NodeId>,
    pub keys: AttentionKeys,
    /// Backward states at the first context note of layers 1 and 2.
    pub first_backward: (NodeId, NodeId),
}

/// Everything the decoder reads from the encoders.
#[derive(Debug, Clone)]
pub struct Encoded {
    pub h_lrc: Vec<NodeId>,
    pub lyric_keys: Option<AttentionKeys>,
    pub context: Option<ContextEncoding>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecoderState {
    pub s_pit: NodeId,
    pub s_dur: NodeId,
    pub s_lab: NodeId,
    /// `[s_pit ; s_dur ; s_lab]`
    pub s: NodeId,
    pub c_prev: NodeId,
    /// Previous pitch, duration and label ids (BOS before the first step).
    pub prev: [usize; 3],
    pub label_count: usize,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutput {
    pub logits: [NodeId; 3],
    /// Emitted output classes in attribute order.
    pub emitted: [usize; 3],
    /// 1-based syllable index used by this step.
    pub j: usize,
    pub alpha: Option<NodeId>,
    pub lyric_alpha: Option<NodeId>,
    pub c: NodeId,
}

impl<T: Scalar> MelodyModel<T> {
    /// Builds and initializes a model; `config`'s vocabulary sizes are
    /// taken from `vocab`.
    pub fn new(config: ModelConfig, arch: Architecture, vocab: Vocabulary, seed: u64) -> Result<Self, ModelError> {
        let mut model = Self::uninitialized(config.with_vocab(&vocab), arch, vocab)?;
        model.params.init(seed);
        Ok(model)
    }

    /// Same layout as [`MelodyModel::new`] with all parameters zero.
    pub fn uninitialized(config: ModelConfig, arch: Architecture, vocab: Vocabulary) -> Result<Self, ModelError> {
        config.validate()?;
        config.check_vocab(&vocab)?;
        let mut store = ParamStore::new();
        let layout = build_layout(&mut store, &config, arch)?;
        let rest_class = vocab
            .pitch
            .id(&PitchToken::Rest)
            .and_then(|id| vocab.pitch.class_of(id));
        Ok(MelodyModel {
            config,
            arch,
            vocab,
            params: store,
            layout,
            rest_class,
        })
    }

    pub fn cast<U: Scalar>(&self) -> MelodyModel<U> {
        MelodyModel {
            config: self.config.clone(),
            arch: self.arch,
            vocab: self.vocab.clone(),
            params: self.params.cast(),
            layout: self.layout.clone(),
            rest_class: self.rest_class,
        }
    }

    pub fn hidden(&self) -> usize {
        self.config.hidden_size
    }

    /// Number of output classes of each head.
    pub fn num_classes(&self, attr: Attribute) -> usize {
        match attr {
            Attribute::Pitch => self.vocab.pitch.num_tokens(),
            Attribute::Duration => self.vocab.duration.num_tokens(),
            Attribute::Label => 2,
        }
    }

    /// Output class of the rest token, if the vocabulary has one.
    pub fn rest_class(&self) -> Option<usize> {
        self.rest_class
    }

    /// Bidirectional lyric encoding, one `2H` vector per syllable.
    pub fn encode_lyrics(
        &self,
        g: &mut Graph<'_, T>,
        syllables: &[usize],
        phonetics: &[usize],
    ) -> Result<Vec<NodeId>, ModelError> {
        if syllables.is_empty() {
            return Err(ModelError::EmptyLine);
        }
        if syllables.len() != phonetics.len() {
            return Err(ModelError::LengthMismatch {
                what: "phonetic keys",
                expected: syllables.len(),
                found: phonetics.len(),
            });
        }
        let l = &self.layout;
        let inputs = syllables
            .iter()
            .zip(phonetics)
            .map(|(&s, &p)| Ok(vec![g.embed(l.syllable_emb, s)?, g.embed(l.phonetic_emb, p)?]))
            .collect::<Result<Vec<_>, ModelError>>()?;
        Ok(run_bidirectional(g, &l.lyrics_fwd, &l.lyrics_bwd, &inputs)?.outputs)
    }

    /// Two-layer context encoding; `None` for an empty context.
    pub fn encode_context_melody(
        &self,
        g: &mut Graph<'_, T>,
        context: &EncodedNotes,
    ) -> Result<Option<ContextEncoding>, ModelError> {
        if context.is_empty() {
            return Ok(None);
        }
        let l = &self.layout;
        let pitch_inputs = context
            .pitch
            .iter()
            .map(|&p| Ok(vec![g.embed(l.pitch_emb, p)?]))
            .collect::<Result<Vec<_>, ModelError>>()?;
        let layer1 = run_bidirectional(g, &l.pitch_fwd, &l.pitch_bwd, &pitch_inputs)?;
        let mut dur_inputs = Vec::with_capacity(context.len());
        for t in 0..context.len() {
            let mut pieces = vec![g.embed(l.duration_emb, context.duration[t])?];
            if self.config.context_labels {
                pieces.push(g.embed(l.label_emb, context.label[t])?);
            }
            pieces.push(layer1.outputs[t]);
            dur_inputs.push(pieces);
        }
        let layer2 = run_bidirectional(g, &l.duration_fwd, &l.duration_bwd, &dur_inputs)?;
        let h_con: Vec<NodeId> = (0..context.len())
            .map(|t| g.concat(&[layer1.outputs[t], layer2.outputs[t]]))
            .collect();
        let keys = l.attention.keys(g, &h_con)?;
        Ok(Some(ContextEncoding {
            h_con,
            keys,
            first_backward: (layer1.backward[0], layer2.backward[0]),
        }))
    }

    pub fn encode(
        &self,
        g: &mut Graph<'_, T>,
        syllables: &[usize],
        phonetics: &[usize],
        context: &EncodedNotes,
    ) -> Result<Encoded, ModelError> {
        let h_lrc = self.encode_lyrics(g, syllables, phonetics)?;
        let lyric_keys = match &self.layout.lyric_attention {
            Some(att) => Some(att.keys(g, &h_lrc)?),
            None => None,
        };
        let window = context.tail(self.config.context_window);
        let context = self.encode_context_melody(g, &window)?;
        Ok(Encoded {
            h_lrc,
            lyric_keys,
            context,
        })
    }

    /// Initial decoder state: linear maps of the first-position backward
    /// context states for the pitch and duration layers, zero otherwise.
    pub fn init_decoder(&self, g: &mut Graph<'_, T>, encoded: &Encoded) -> Result<DecoderState, ModelError> {
        let h = self.hidden();
        let l = &self.layout;
        let (s_pit, s_dur) = match &encoded.context {
            Some(ctx) => (
                g.linear(l.init_pitch.0, ctx.first_backward.0, Some(l.init_pitch.1))?,
                g.linear(l.init_duration.0, ctx.first_backward.1, Some(l.init_duration.1))?,
            ),
            None => (g.zeros(h), g.zeros(h)),
        };
        let s_lab = g.zeros(h);
        let s = g.concat(&[s_pit, s_dur, s_lab]);
        let c_prev = g.zeros(2 * h);
        Ok(DecoderState {
            s_pit,
            s_dur,
            s_lab,
            s,
            c_prev,
            prev: [crate::corpus::BOS, crate::corpus::BOS, LABEL_BOS],
            label_count: 0,
            steps: 0,
        })
    }

    /// One decoder step. `emit` picks the class of each attribute from its
    /// logits, in the order pitch, duration, label; later layers consume
    /// the earlier choices.
    pub fn decode_step(
        &self,
        g: &mut Graph<'_, T>,
        encoded: &Encoded,
        state: &DecoderState,
        emit: &mut dyn FnMut(Attribute, &[T]) -> usize,
    ) -> Result<(StepOutput, DecoderState), ModelError> {
        let n_syl = encoded.h_lrc.len();
        if state.label_count >= n_syl {
            return Err(ModelError::LineComplete { syllables: n_syl });
        }
        let l = &self.layout;
        let h = self.hidden();
        let j = (1 + state.label_count).min(n_syl);

        let (lyric, lyric_alpha) = match (&l.lyric_attention, &encoded.lyric_keys) {
            (Some(att), Some(keys)) => {
                let (c_lrc, alpha) = baseline::lyric_context(g, att, state.s, keys)?;
                (c_lrc, Some(alpha))
            }
            _ => (encoded.h_lrc[j - 1], None),
        };
        let (c_con, alpha) = match &encoded.context {
            Some(ctx) => {
                let (c, alpha) = l.attention.attend(g, state.s, &ctx.keys)?;
                (g.linear(l.context_proj, c, None)?, Some(alpha))
            }
            None => (g.zeros(2 * h), None),
        };
        let c = g.add(c_con, lyric)?;

        let [prev_pit, prev_dur, prev_lab] = state.prev;
        let e_pit = g.embed(l.pitch_emb, prev_pit)?;
        let e_dur = g.embed(l.duration_emb, prev_dur)?;
        let e_lab = g.embed(l.label_emb, prev_lab)?;

        let s_pit = l.dec_pitch.step(g, state.s_pit, &[state.c_prev, e_pit, lyric])?;
        let logits_pit = g.affine(
            &[(l.head_pitch.0, &[s_pit, c, e_pit, e_dur, e_lab])],
            Some(l.head_pitch.1),
        )?;
        let y_pit = emit(Attribute::Pitch, g.value(logits_pit));
        let y_pit_id = self.vocab.pitch.id_of_class(y_pit);
        let e_y_pit = g.embed(l.pitch_emb, y_pit_id)?;

        let s_dur = l
            .dec_duration
            .step(g, state.s_dur, &[state.c_prev, e_dur, e_y_pit, s_pit])?;
        let logits_dur = g.affine(
            &[(l.head_duration.0, &[s_dur, c, e_pit, e_dur, e_lab, e_y_pit])],
            Some(l.head_duration.1),
        )?;
        let y_dur = emit(Attribute::Duration, g.value(logits_dur));
        let y_dur_id = self.vocab.duration.id_of_class(y_dur);
        let e_y_dur = g.embed(l.duration_emb, y_dur_id)?;

        let s_lab = l
            .dec_label
            .step(g, state.s_lab, &[state.c_prev, e_lab, e_y_pit, e_y_dur, s_dur])?;
        let logits_lab = g.affine(
            &[(l.head_label.0, &[s_lab, c, e_pit, e_dur, e_lab, e_y_pit, e_y_dur])],
            Some(l.head_label.1),
        )?;
        let y_lab = emit(Attribute::Label, g.value(logits_lab));

        let s = g.concat(&[s_pit, s_dur, s_lab]);
        let next = DecoderState {
            s_pit,
            s_dur,
            s_lab,
            s,
            c_prev: c,
            prev: [y_pit_id, y_dur_id, y_lab],
            label_count: state.label_count + y_lab,
            steps: state.steps + 1,
        };
        let out = StepOutput {
            logits: [logits_pit, logits_dur, logits_lab],
            emitted: [y_pit, y_dur, y_lab],
            j,
            alpha,
            lyric_alpha,
            c,
        };
        Ok((out, next))
    }

    /// Output classes of a target sequence.
    pub fn target_classes(&self, target: &EncodedNotes) -> Result<Vec<[usize; 3]>, ModelError> {
        (0..target.len())
            .map(|i| {
                let pit = self
                    .vocab
                    .pitch
                    .class_of(target.pitch[i])
                    .ok_or(ModelError::SpecialToken {
                        attr: Attribute::Pitch,
                        id: target.pitch[i],
                    })?;
                let dur = self
                    .vocab
                    .duration
                    .class_of(target.duration[i])
                    .ok_or(ModelError::SpecialToken {
                        attr: Attribute::Duration,
                        id: target.duration[i],
                    })?;
                let lab = target.label[i];
                if lab > 1 {
                    return Err(ModelError::SpecialToken {
                        attr: Attribute::Label,
                        id: lab,
                    });
                }
                Ok([pit, dur, lab])
            })
            .collect()
    }

    /// Validates that a triple's ids fit this model's vocabulary.
    pub fn check_triple(&self, triple: &EncodedTriple) -> Result<(), ModelError> {
        let c = &self.config;
        let in_range = |ids: &[usize], n: usize| ids.iter().all(|&id| id < n);
        let ok = in_range(&triple.syllables, c.syllable_vocab)
            && in_range(&triple.phonetics, c.phonetic_vocab)
            && in_range(&triple.context.pitch, c.pitch_vocab)
            && in_range(&triple.context.duration, c.duration_vocab)
            && in_range(&triple.context.label, LABEL_VOCAB_SIZE);
        if !ok {
            return Err(ModelError::VocabMismatch(
                "triple holds ids outside the model vocabulary".into(),
            ));
        }
        self.target_classes(&triple.target).map(|_| ())
    }
}

fn build_layout<T: Scalar>(
    store: &mut ParamStore<T>,
    c: &ModelConfig,
    arch: Architecture,
) -> Result<Layout, ModelError> {
    let h = c.hidden_size;
    let a = c.attention_dim();
    let (p, d, lb) = (c.pitch_emb, c.duration_emb, c.label_emb);
    let pitch_classes = c.pitch_vocab - 2;
    let duration_classes = c.duration_vocab - 2;
    let prev = p + d + lb;

    let mut add = |name: &str, shape: Vec<usize>, kind| store.add(name, shape, kind);
    let syllable_emb = add(
        "embed.syllable",
        vec![c.syllable_vocab, c.syllable_emb],
        ParamKind::Embedding,
    )?;
    let phonetic_emb = add(
        "embed.phonetic",
        vec![c.phonetic_vocab, c.phonetic_emb],
        ParamKind::Embedding,
    )?;
    let pitch_emb = add("embed.pitch", vec![c.pitch_vocab, p], ParamKind::Embedding)?;
    let duration_emb = add("embed.duration", vec![c.duration_vocab, d], ParamKind::Embedding)?;
    let label_emb = add("embed.label", vec![LABEL_VOCAB_SIZE, lb], ParamKind::Embedding)?;

    let lyric_in = c.syllable_emb + c.phonetic_emb;
    let lyrics_fwd = GruCell::new(store, "lyrics.fwd", lyric_in, h)?;
    let lyrics_bwd = GruCell::new(store, "lyrics.bwd", lyric_in, h)?;
    let pitch_fwd = GruCell::new(store, "context.pitch.fwd", p, h)?;
    let pitch_bwd = GruCell::new(store, "context.pitch.bwd", p, h)?;
    let layer2_in = d + if c.context_labels { lb } else { 0 } + 2 * h;
    let duration_fwd = GruCell::new(store, "context.duration.fwd", layer2_in, h)?;
    let duration_bwd = GruCell::new(store, "context.duration.bwd", layer2_in, h)?;

    let attention = Attention::new(store, "decoder.attention", 3 * h, 4 * h, a)?;
    let context_proj = store.add("decoder.context_proj.W_c", vec![2 * h, 4 * h], ParamKind::Matrix)?;
    let init_pitch = (
        store.add("decoder.init.pitch.W", vec![h, h], ParamKind::Matrix)?,
        store.add("decoder.init.pitch.b", vec![h], ParamKind::Bias)?,
    );
    let init_duration = (
        store.add("decoder.init.duration.W", vec![h, h], ParamKind::Matrix)?,
        store.add("decoder.init.duration.b", vec![h], ParamKind::Bias)?,
    );

    let dec_pitch = GruCell::new(store, "decoder.pitch.gru", 2 * h + p + 2 * h, h)?;
    let dec_duration = GruCell::new(store, "decoder.duration.gru", 2 * h + d + p + h, h)?;
    let dec_label = GruCell::new(store, "decoder.label.gru", 2 * h + lb + p + d + h, h)?;

    let mut head = |name: &str, inputs: usize, classes: usize| -> Result<(ParamId, ParamId), ModelError> {
        Ok((
            store.add(
                &format!("decoder.{name}.head.W"),
                vec![classes, inputs],
                ParamKind::Matrix,
            )?,
            store.add(&format!("decoder.{name}.head.b"), vec![classes], ParamKind::Bias)?,
        ))
    };
    let head_pitch = head("pitch", h + 2 * h + prev, pitch_classes)?;
    let head_duration = head("duration", h + 2 * h + prev + p, duration_classes)?;
    let head_label = head("label", h + 2 * h + prev + p + d, 2)?;

    let lyric_attention = match arch {
        Architecture::Songwriter => None,
        Architecture::Seq2seq => Some(baseline::lyric_attention(store, c)?),
    };

    Ok(Layout {
        syllable_emb,
        phonetic_emb,
        pitch_emb,
        duration_emb,
        label_emb,
        lyrics_fwd,
        lyrics_bwd,
        pitch_fwd,
        pitch_bwd,
        duration_fwd,
        duration_bwd,
        attention,
        context_proj,
        init_pitch,
        init_duration,
        dec_pitch,
        dec_duration,
        dec_label,
        head_pitch,
        head_duration,
        head_label,
        lyric_attention,
    })
}
