use super::{Graph, NnError, NodeId, ParamId, ParamKind, ParamStore, Scalar};

/// Additive attention: `e_k = v_a . tanh(W_a s + U_a h_k)`,
/// `alpha = softmax(e)`, `c = sum_k alpha_k h_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Attention {
    pub query_size: usize,
    pub key_size: usize,
    pub attn_size: usize,
    pub v_a: ParamId,
    pub w_a: ParamId,
    pub u_a: ParamId,
}

/// Encoder vectors with their `U_a h_k` projections, computed once per
/// sequence and reused at every decoder step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttentionKeys {
    pub values: Vec<NodeId>,
    pub projected: Vec<NodeId>,
}

impl AttentionKeys {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl Attention {
    pub fn new<T: Scalar>(
        store: &mut ParamStore<T>,
        prefix: &str,
        query_size: usize,
        key_size: usize,
        attn_size: usize,
    ) -> Result<Self, NnError> {
        Ok(Attention {
            query_size,
            key_size,
            attn_size,
            v_a: store.add(&format!("{prefix}.v_a"), vec![attn_size], ParamKind::Vector)?,
            w_a: store.add(&format!("{prefix}.W_a"), vec![attn_size, query_size], ParamKind::Matrix)?,
            u_a: store.add(&format!("{prefix}.U_a"), vec![attn_size, key_size], ParamKind::Matrix)?,
        })
    }

    pub fn keys<T: Scalar>(&self, g: &mut Graph<'_, T>, values: &[NodeId]) -> Result<AttentionKeys, NnError> {
        if values.is_empty() {
            return Err(NnError::EmptySequence("attention keys"));
        }
        let projected = values
            .iter()
            .map(|h| g.linear(self.u_a, *h, None))
            .collect::<Result<_, _>>()?;
        Ok(AttentionKeys {
            values: values.to_vec(),
            projected,
        })
    }

    /// Returns `(c, alpha)` for one query.
    pub fn attend<T: Scalar>(
        &self,
        g: &mut Graph<'_, T>,
        query: NodeId,
        keys: &AttentionKeys,
    ) -> Result<(NodeId, NodeId), NnError> {
        let q = g.linear(self.w_a, query, None)?;
        let v = g.param(self.v_a);
        let scores = g.additive_scores(q, &keys.projected, v)?;
        let alpha = g.softmax(scores);
        let context = g.weighted_sum(alpha, &keys.values)?;
        Ok((context, alpha))
    }

    /// Plain-vector evaluation of [`Attention::attend`].
    pub fn context<T: Scalar>(
        &self,
        params: &ParamStore<T>,
        query: &[T],
        values: &[Vec<T>],
    ) -> Result<(Vec<T>, Vec<T>), NnError> {
        let mut g = Graph::new(params);
        let q = g.input(query.to_vec());
        let hs: Vec<NodeId> = values.iter().map(|h| g.input(h.clone())).collect();
        let keys = self.keys(&mut g, &hs)?;
        let (c, alpha) = self.attend(&mut g, q, &keys)?;
        Ok((g.value(c).to_vec(), g.value(alpha).to_vec()))
    }
}
