use super::{Graph, NnError, NodeId, ParamId, ParamKind, ParamStore, Scalar};

/// Gated recurrent unit:
///
/// ```text
/// z  = sigmoid(W_hz h + W_xz x + b_z)
/// r  = sigmoid(W_hr h + W_xr x + b_r)
/// h~ = tanh(W_h (r * h) + W_x x + b)
/// h' = (1 - z) * h + z * h~
/// ```
///
/// Several inputs are fed as one concatenated `x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GruCell {
    pub input_size: usize,
    pub hidden_size: usize,
    pub w_hz: ParamId,
    pub w_xz: ParamId,
    pub b_z: ParamId,
    pub w_hr: ParamId,
    pub w_xr: ParamId,
    pub b_r: ParamId,
    pub w_h: ParamId,
    pub w_x: ParamId,
    pub b: ParamId,
}

impl GruCell {
    /// Registers the nine parameters as `<prefix>.W_hz`, `<prefix>.b_z`, ...
    pub fn new<T: Scalar>(
        store: &mut ParamStore<T>,
        prefix: &str,
        input_size: usize,
        hidden_size: usize,
    ) -> Result<Self, NnError> {
        let (i, h) = (input_size, hidden_size);
        let mut add = |name: &str, shape: Vec<usize>, kind| store.add(&format!("{prefix}.{name}"), shape, kind);
        Ok(GruCell {
            input_size,
            hidden_size,
            w_hz: add("W_hz", vec![h, h], ParamKind::Matrix)?,
            w_xz: add("W_xz", vec![h, i], ParamKind::Matrix)?,
            b_z: add("b_z", vec![h], ParamKind::Bias)?,
            w_hr: add("W_hr", vec![h, h], ParamKind::Matrix)?,
            w_xr: add("W_xr", vec![h, i], ParamKind::Matrix)?,
            b_r: add("b_r", vec![h], ParamKind::Bias)?,
            w_h: add("W_h", vec![h, h], ParamKind::Matrix)?,
            w_x: add("W_x", vec![h, i], ParamKind::Matrix)?,
            b: add("b", vec![h], ParamKind::Bias)?,
        })
    }

    /// One recurrent step on a graph; `xs` are concatenated into the input.
    pub fn step<T: Scalar>(&self, g: &mut Graph<'_, T>, h_prev: NodeId, xs: &[NodeId]) -> Result<NodeId, NnError> {
        let found = g.value(h_prev).len();
        if found != self.hidden_size {
            return Err(NnError::DimensionMismatch {
                op: "gru hidden state",
                expected: self.hidden_size,
                found,
            });
        }
        let z = g.affine(&[(self.w_hz, &[h_prev]), (self.w_xz, xs)], Some(self.b_z))?;
        let z = g.sigmoid(z);
        let r = g.affine(&[(self.w_hr, &[h_prev]), (self.w_xr, xs)], Some(self.b_r))?;
        let r = g.sigmoid(r);
        let rh = g.mul(r, h_prev)?;
        let cand = g.affine(&[(self.w_h, &[rh]), (self.w_x, xs)], Some(self.b))?;
        let cand = g.tanh(cand);
        g.gate(z, h_prev, cand)
    }
}

/// Evaluates a single step outside of any training graph.
pub fn gru_step<T: Scalar>(cell: &GruCell, params: &ParamStore<T>, h_prev: &[T], x: &[T]) -> Result<Vec<T>, NnError> {
    let mut g = Graph::new(params);
    let h = g.input(h_prev.to_vec());
    let x = g.input(x.to_vec());
    let out = cell.step(&mut g, h, &[x])?;
    Ok(g.value(out).to_vec())
}

/// States of a bidirectional pass, all indexed by sequence position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BiOutput {
    /// `[forward_t ; backward_t]`
    pub outputs: Vec<NodeId>,
    pub forward: Vec<NodeId>,
    pub backward: Vec<NodeId>,
}

/// Runs `fwd` left to right and `bwd` right to left from zero states.
/// `inputs[t]` lists the pieces concatenated into step `t`'s input.
pub fn run_bidirectional<T: Scalar>(
    g: &mut Graph<'_, T>,
    fwd: &GruCell,
    bwd: &GruCell,
    inputs: &[Vec<NodeId>],
) -> Result<BiOutput, NnError> {
    if inputs.is_empty() {
        return Err(NnError::EmptySequence("bidirectional encoder"));
    }
    let n = inputs.len();
    let mut forward = Vec::with_capacity(n);
    let mut h = g.zeros(fwd.hidden_size);
    for xs in inputs {
        h = fwd.step(g, h, xs)?;
        forward.push(h);
    }
    let mut backward = vec![h; n];
    let mut h = g.zeros(bwd.hidden_size);
    for t in (0..n).rev() {
        h = bwd.step(g, h, &inputs[t])?;
        backward[t] = h;
    }
    let outputs = (0..n).map(|t| g.concat(&[forward[t], backward[t]])).collect();
    Ok(BiOutput {
        outputs,
        forward,
        backward,
    })
}
