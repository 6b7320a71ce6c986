//! Attention-only lyric access, the comparison model.
//!
//! The encoders, decoder layers and heads are shared with
//! [`MelodyModel`]; only the lyric vector differs. Instead of selecting
//! `h_lrc` by the label count, the decoder attends over all syllable
//! vectors with its own `v'`, `W'`, `U'` and uses that context wherever
//! the label-indexed vector would appear. Decoding still stops once the
//! emitted labels account for every syllable.

use crate::corpus::Vocabulary;
use crate::model::{Architecture, MelodyModel, ModelConfig, ModelError};
use crate::nn::{Attention, AttentionKeys, Graph, NnError, NodeId, ParamStore, Scalar};

/// Parameter prefix of the lyric attention.
pub const LYRIC_ATTENTION: &str = "decoder.lyric_attention";

pub type Seq2seqModel<T> = MelodyModel<T>;

/// Builds and initializes the attention-based comparison model.
pub fn seq2seq<T: Scalar>(config: ModelConfig, vocab: Vocabulary, seed: u64) -> Result<Seq2seqModel<T>, ModelError> {
    MelodyModel::new(config, Architecture::Seq2seq, vocab, seed)
}

pub(crate) fn lyric_attention<T: Scalar>(
    store: &mut ParamStore<T>,
    config: &ModelConfig,
) -> Result<Attention, NnError> {
    let h = config.hidden_size;
    Attention::new(store, LYRIC_ATTENTION, 3 * h, 2 * h, config.attention_dim())
}

/// Lyric context `c_lrc` for the decoder state `s` and its weights.
pub(crate) fn lyric_context<T: Scalar>(
    g: &mut Graph<'_, T>,
    attention: &Attention,
    s: NodeId,
    keys: &AttentionKeys,
) -> Result<(NodeId, NodeId), NnError> {
    attention.attend(g, s, keys)
}

/// Parameter names present in `b` but not in `a`, in `b`'s order.
pub fn manifest_diff<T: Scalar, U: Scalar>(a: &MelodyModel<T>, b: &MelodyModel<U>) -> Vec<String> {
    b.params
        .iter()
        .filter(|p| a.params.id(&p.name).is_none())
        .map(|p| p.name.clone())
        .collect()
}
