use num_traits::Float;

use super::{axpy, dot, Grads, NnError, ParamId, ParamStore, Scalar};

/// Index of a node on a [`Graph`] tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

/// One `W[:, col..col + len(x)] * x` contribution to an affine node.
#[derive(Debug, Clone, Copy)]
struct Term {
    w: ParamId,
    col: usize,
    x: NodeId,
}

#[derive(Debug, Clone)]
enum Op<T> {
    Input,
    Param(ParamId),
    Embed {
        table: ParamId,
        row: usize,
    },
    Affine {
        terms: Vec<Term>,
        bias: Option<ParamId>,
    },
    Add(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Scale(NodeId, T),
    Sigmoid(NodeId),
    Tanh(NodeId),
    /// `prev + z * (cand - prev)`, the GRU state interpolation.
    Gate {
        z: NodeId,
        prev: NodeId,
        cand: NodeId,
    },
    Concat(Vec<NodeId>),
    Sum(Vec<NodeId>),
    Dot(NodeId, NodeId),
    Softmax(NodeId),
    WeightedSum {
        weights: NodeId,
        items: Vec<NodeId>,
    },
    /// `e_k = v . tanh(query + keys[k])`; tanh activations are cached in `aux`.
    AdditiveScores {
        query: NodeId,
        keys: Vec<NodeId>,
        v: NodeId,
    },
    /// `-log softmax(logits)[target]`; probabilities are cached in `aux`.
    CrossEntropy {
        logits: NodeId,
        target: usize,
    },
}

#[derive(Debug, Clone)]
struct Node<T> {
    value: Vec<T>,
    aux: Vec<T>,
    op: Op<T>,
}

/// Tape of vector-valued operations over a borrowed parameter store.
#[derive(Debug)]
pub struct Graph<'p, T> {
    params: &'p ParamStore<T>,
    nodes: Vec<Node<T>>,
}

fn check_len(op: &'static str, expected: usize, found: usize) -> Result<(), NnError> {
    if expected == found {
        Ok(())
    } else {
        Err(NnError::DimensionMismatch { op, expected, found })
    }
}

fn sigmoid<T: Scalar>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

/// Numerically stable softmax, accumulated in `f64`.
pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let max = logits
        .iter()
        .map(|x| x.widen())
        .fold(T::Wide::neg_infinity(), T::Wide::max);
    let exps: Vec<T::Wide> = logits.iter().map(|x| (x.widen() - max).exp()).collect();
    let total: T::Wide = exps.iter().copied().sum();
    exps.into_iter().map(|e| T::narrow(e / total)).collect()
}

/// Returns `(-log p[target], p)` with `p = softmax(logits)`.
pub fn softmax_cross_entropy<T: Scalar>(logits: &[T], target: usize) -> Result<(T, Vec<T>), NnError> {
    if target >= logits.len() {
        return Err(NnError::TargetOutOfRange {
            target,
            classes: logits.len(),
        });
    }
    let max = logits
        .iter()
        .map(|x| x.widen())
        .fold(T::Wide::neg_infinity(), T::Wide::max);
    let shifted: Vec<T::Wide> = logits.iter().map(|x| x.widen() - max).collect();
    let log_total = shifted.iter().map(|s| s.exp()).sum::<T::Wide>().ln();
    let probs = shifted.iter().map(|s| T::narrow((*s - log_total).exp())).collect();
    Ok((T::narrow(log_total - shifted[target]), probs))
}

impl<'p, T: Scalar> Graph<'p, T> {
    pub fn new(params: &'p ParamStore<T>) -> Self {
        Graph {
            params,
            nodes: Vec::new(),
        }
    }

    pub fn params(&self) -> &'p ParamStore<T> {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &[T] {
        &self.nodes[id.0].value
    }

    /// First element of a node, for scalar nodes.
    pub fn scalar(&self, id: NodeId) -> T {
        self.nodes[id.0].value[0]
    }

    fn push(&mut self, value: Vec<T>, aux: Vec<T>, op: Op<T>) -> NodeId {
        debug_assert!(
            value.iter().all(|x| x.is_finite()),
            "non-finite forward value from {op:?}"
        );
        self.nodes.push(Node { value, aux, op });
        NodeId(self.nodes.len() - 1)
    }

    fn dim(&self, id: NodeId) -> usize {
        self.nodes[id.0].value.len()
    }

    pub fn input(&mut self, value: Vec<T>) -> NodeId {
        self.push(value, Vec::new(), Op::Input)
    }

    pub fn zeros(&mut self, len: usize) -> NodeId {
        self.input(vec![T::zero(); len])
    }

    /// A whole parameter tensor as a flat vector.
    pub fn param(&mut self, id: ParamId) -> NodeId {
        let value = self.params.value(id).data().to_vec();
        self.push(value, Vec::new(), Op::Param(id))
    }

    /// Row `row` of an embedding table.
    pub fn embed(&mut self, table: ParamId, row: usize) -> Result<NodeId, NnError> {
        let t = self.params.value(table);
        if row >= t.rows() {
            return Err(NnError::TargetOutOfRange {
                target: row,
                classes: t.rows(),
            });
        }
        let value = t.row(row).to_vec();
        Ok(self.push(value, Vec::new(), Op::Embed { table, row }))
    }

    /// `sum_k W_k [x_k1; x_k2; ...] + b`. Each weight multiplies the
    /// concatenation of its inputs without materializing it.
    pub fn affine(&mut self, terms: &[(ParamId, &[NodeId])], bias: Option<ParamId>) -> Result<NodeId, NnError> {
        let rows = match (terms.first(), bias) {
            (Some((w, _)), _) => self.params.value(*w).rows(),
            (None, Some(b)) => self.params.value(b).len(),
            (None, None) => 0,
        };
        let mut flat = Vec::new();
        let mut out = match bias {
            Some(b) => {
                let b = self.params.value(b).data();
                check_len("affine bias", rows, b.len())?;
                b.to_vec()
            }
            None => vec![T::zero(); rows],
        };
        for &(w, xs) in terms {
            let wt = self.params.value(w);
            check_len("affine rows", rows, wt.rows())?;
            let width: usize = xs.iter().map(|x| self.dim(*x)).sum();
            check_len("affine columns", wt.cols(), width)?;
            let mut col = 0;
            for &x in xs {
                flat.push(Term { w, col, x });
                col += self.dim(x);
            }
        }
        for term in &flat {
            let wt = self.params.value(term.w);
            let x = &self.nodes[term.x.0].value;
            let cols = wt.cols();
            let data = wt.data();
            for (r, o) in out.iter_mut().enumerate() {
                let start = r * cols + term.col;
                *o += dot(&data[start..start + x.len()], x);
            }
        }
        Ok(self.push(out, Vec::new(), Op::Affine { terms: flat, bias }))
    }

    pub fn linear(&mut self, w: ParamId, x: NodeId, bias: Option<ParamId>) -> Result<NodeId, NnError> {
        self.affine(&[(w, &[x])], bias)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NnError> {
        check_len("add", self.dim(a), self.dim(b))?;
        let value = self.value(a).iter().zip(self.value(b)).map(|(x, y)| *x + *y).collect();
        Ok(self.push(value, Vec::new(), Op::Add(a, b)))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NnError> {
        check_len("mul", self.dim(a), self.dim(b))?;
        let value = self.value(a).iter().zip(self.value(b)).map(|(x, y)| *x * *y).collect();
        Ok(self.push(value, Vec::new(), Op::Mul(a, b)))
    }

    pub fn scale(&mut self, a: NodeId, c: T) -> NodeId {
        let value = self.value(a).iter().map(|x| *x * c).collect();
        self.push(value, Vec::new(), Op::Scale(a, c))
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        let value = self.value(a).iter().map(|x| sigmoid(*x)).collect();
        self.push(value, Vec::new(), Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let value = self.value(a).iter().map(|x| x.tanh()).collect();
        self.push(value, Vec::new(), Op::Tanh(a))
    }

    /// `(1 - z) * prev + z * cand`
    pub fn gate(&mut self, z: NodeId, prev: NodeId, cand: NodeId) -> Result<NodeId, NnError> {
        check_len("gate", self.dim(z), self.dim(prev))?;
        check_len("gate", self.dim(z), self.dim(cand))?;
        let (zv, pv, cv) = (self.value(z), self.value(prev), self.value(cand));
        let value = (0..zv.len())
            .map(|k| (T::one() - zv[k]) * pv[k] + zv[k] * cv[k])
            .collect();
        Ok(self.push(value, Vec::new(), Op::Gate { z, prev, cand }))
    }

    pub fn concat(&mut self, parts: &[NodeId]) -> NodeId {
        let mut value = Vec::with_capacity(parts.iter().map(|p| self.dim(*p)).sum());
        for p in parts {
            value.extend_from_slice(self.value(*p));
        }
        self.push(value, Vec::new(), Op::Concat(parts.to_vec()))
    }

    /// Element-wise sum of equal-length nodes.
    pub fn sum(&mut self, parts: &[NodeId]) -> Result<NodeId, NnError> {
        let first = *parts.first().ok_or(NnError::EmptySequence("sum"))?;
        let mut value = self.value(first).to_vec();
        for p in &parts[1..] {
            check_len("sum", value.len(), self.dim(*p))?;
            axpy(&mut value, T::one(), self.value(*p));
        }
        Ok(self.push(value, Vec::new(), Op::Sum(parts.to_vec())))
    }

    pub fn dot(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NnError> {
        check_len("dot", self.dim(a), self.dim(b))?;
        let value = vec![dot(self.value(a), self.value(b))];
        Ok(self.push(value, Vec::new(), Op::Dot(a, b)))
    }

    pub fn softmax(&mut self, a: NodeId) -> NodeId {
        let value = softmax(self.value(a));
        self.push(value, Vec::new(), Op::Softmax(a))
    }

    /// `sum_k weights[k] * items[k]`
    pub fn weighted_sum(&mut self, weights: NodeId, items: &[NodeId]) -> Result<NodeId, NnError> {
        check_len("weighted_sum", self.dim(weights), items.len())?;
        let first = *items.first().ok_or(NnError::EmptySequence("weighted_sum"))?;
        let mut value = vec![T::zero(); self.dim(first)];
        for (k, item) in items.iter().enumerate() {
            check_len("weighted_sum", value.len(), self.dim(*item))?;
            let w = self.value(weights)[k];
            axpy(&mut value, w, self.value(*item));
        }
        Ok(self.push(
            value,
            Vec::new(),
            Op::WeightedSum {
                weights,
                items: items.to_vec(),
            },
        ))
    }

    /// Additive attention energies `v . tanh(query + key_k)` for every key.
    pub fn additive_scores(&mut self, query: NodeId, keys: &[NodeId], v: NodeId) -> Result<NodeId, NnError> {
        if keys.is_empty() {
            return Err(NnError::EmptySequence("additive_scores"));
        }
        let a = self.dim(query);
        check_len("additive_scores", a, self.dim(v))?;
        let mut aux = Vec::with_capacity(a * keys.len());
        let mut value = Vec::with_capacity(keys.len());
        for key in keys {
            check_len("additive_scores", a, self.dim(*key))?;
            let start = aux.len();
            let (q, kv) = (self.value(query), self.value(*key));
            aux.extend(q.iter().zip(kv).map(|(x, y)| (*x + *y).tanh()));
            value.push(dot(&aux[start..], self.value(v)));
        }
        Ok(self.push(
            value,
            aux,
            Op::AdditiveScores {
                query,
                keys: keys.to_vec(),
                v,
            },
        ))
    }

    /// Scalar node `-log softmax(logits)[target]`.
    pub fn cross_entropy(&mut self, logits: NodeId, target: usize) -> Result<NodeId, NnError> {
        let (loss, probs) = softmax_cross_entropy(self.value(logits), target)?;
        Ok(self.push(vec![loss], probs, Op::CrossEntropy { logits, target }))
    }

    /// Cached softmax probabilities of a cross-entropy node.
    pub fn probabilities(&self, ce: NodeId) -> &[T] {
        &self.nodes[ce.0].aux
    }

    /// Gradients of a scalar root with respect to every reachable parameter.
    pub fn backward(&self, root: NodeId) -> Result<Grads<T>, NnError> {
        let mut grads = Grads::for_store(self.params);
        self.backward_into(root, &mut grads)?;
        Ok(grads)
    }

    /// Like [`Graph::backward`] but adds into existing buffers, so repeated
    /// calls accumulate.
    pub fn backward_into(&self, root: NodeId, grads: &mut Grads<T>) -> Result<(), NnError> {
        let n = self.nodes[root.0].value.len();
        if n != 1 {
            return Err(NnError::NonScalarRoot(n));
        }
        let mut adj: Vec<Vec<T>> = vec![Vec::new(); root.0 + 1];
        adj[root.0] = vec![T::one()];

        fn acc<T: Scalar>(adj: &mut [Vec<T>], id: NodeId, len: usize) -> &mut [T] {
            let slot = &mut adj[id.0];
            if slot.is_empty() {
                *slot = vec![T::zero(); len];
            }
            slot
        }

        for idx in (0..=root.0).rev() {
            if adj[idx].is_empty() {
                continue;
            }
            let g = std::mem::take(&mut adj[idx]);
            let node = &self.nodes[idx];
            match &node.op {
                Op::Input => {}
                Op::Param(p) => {
                    axpy(grads.slot(*p, g.len()), T::one(), &g);
                }
                Op::Embed { table, row } => {
                    let t = self.params.value(*table);
                    let c = t.cols();
                    let slot = grads.slot(*table, t.len());
                    axpy(&mut slot[row * c..(row + 1) * c], T::one(), &g);
                }
                Op::Affine { terms, bias } => {
                    if let Some(b) = bias {
                        axpy(grads.slot(*b, g.len()), T::one(), &g);
                    }
                    for term in terms {
                        let wt = self.params.value(term.w);
                        let cols = wt.cols();
                        let x = &self.nodes[term.x.0].value;
                        let len = x.len();
                        {
                            let gw = grads.slot(term.w, wt.len());
                            for (r, gr) in g.iter().enumerate() {
                                if *gr != T::zero() {
                                    let start = r * cols + term.col;
                                    axpy(&mut gw[start..start + len], *gr, x);
                                }
                            }
                        }
                        if !matches!(self.nodes[term.x.0].op, Op::Input) {
                            let gx = acc(&mut adj, term.x, len);
                            let data = wt.data();
                            for (r, gr) in g.iter().enumerate() {
                                let start = r * cols + term.col;
                                axpy(gx, *gr, &data[start..start + len]);
                            }
                        }
                    }
                }
                Op::Add(a, b) => {
                    axpy(acc(&mut adj, *a, g.len()), T::one(), &g);
                    axpy(acc(&mut adj, *b, g.len()), T::one(), &g);
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    let ga: Vec<T> = g.iter().zip(bv).map(|(x, y)| *x * *y).collect();
                    let gb: Vec<T> = g.iter().zip(av).map(|(x, y)| *x * *y).collect();
                    axpy(acc(&mut adj, *a, g.len()), T::one(), &ga);
                    axpy(acc(&mut adj, *b, g.len()), T::one(), &gb);
                }
                Op::Scale(a, c) => {
                    axpy(acc(&mut adj, *a, g.len()), *c, &g);
                }
                Op::Sigmoid(a) => {
                    let ga = acc(&mut adj, *a, g.len());
                    for ((d, y), gy) in ga.iter_mut().zip(&node.value).zip(&g) {
                        *d += *gy * *y * (T::one() - *y);
                    }
                }
                Op::Tanh(a) => {
                    let ga = acc(&mut adj, *a, g.len());
                    for ((d, y), gy) in ga.iter_mut().zip(&node.value).zip(&g) {
                        *d += *gy * (T::one() - *y * *y);
                    }
                }
                Op::Gate { z, prev, cand } => {
                    let zv = &self.nodes[z.0].value;
                    let pv = &self.nodes[prev.0].value;
                    let cv = &self.nodes[cand.0].value;
                    let gz: Vec<T> = (0..g.len()).map(|k| g[k] * (cv[k] - pv[k])).collect();
                    let gp: Vec<T> = (0..g.len()).map(|k| g[k] * (T::one() - zv[k])).collect();
                    let gc: Vec<T> = (0..g.len()).map(|k| g[k] * zv[k]).collect();
                    axpy(acc(&mut adj, *z, g.len()), T::one(), &gz);
                    axpy(acc(&mut adj, *prev, g.len()), T::one(), &gp);
                    axpy(acc(&mut adj, *cand, g.len()), T::one(), &gc);
                }
                Op::Concat(parts) => {
                    let mut off = 0;
                    for p in parts {
                        let len = self.nodes[p.0].value.len();
                        axpy(acc(&mut adj, *p, len), T::one(), &g[off..off + len]);
                        off += len;
                    }
                }
                Op::Sum(parts) => {
                    for p in parts {
                        axpy(acc(&mut adj, *p, g.len()), T::one(), &g);
                    }
                }
                Op::Dot(a, b) => {
                    let (av, bv) = (self.nodes[a.0].value.clone(), self.nodes[b.0].value.clone());
                    axpy(acc(&mut adj, *a, av.len()), g[0], &bv);
                    axpy(acc(&mut adj, *b, bv.len()), g[0], &av);
                }
                Op::Softmax(a) => {
                    let p = &node.value;
                    let inner = dot(&g, p);
                    let ga = acc(&mut adj, *a, g.len());
                    for k in 0..p.len() {
                        ga[k] += p[k] * (g[k] - inner);
                    }
                }
                Op::WeightedSum { weights, items } => {
                    let wv = &self.nodes[weights.0].value;
                    let gw: Vec<T> = items.iter().map(|it| dot(&g, &self.nodes[it.0].value)).collect();
                    for (k, it) in items.iter().enumerate() {
                        axpy(acc(&mut adj, *it, g.len()), wv[k], &g);
                    }
                    axpy(acc(&mut adj, *weights, gw.len()), T::one(), &gw);
                }
                Op::AdditiveScores { query, keys, v } => {
                    let vv = &self.nodes[v.0].value;
                    let a = vv.len();
                    let mut gq = vec![T::zero(); a];
                    let mut gv = vec![T::zero(); a];
                    for (k, key) in keys.iter().enumerate() {
                        let t = &node.aux[k * a..(k + 1) * a];
                        axpy(&mut gv, g[k], t);
                        let pre: Vec<T> = (0..a).map(|c| g[k] * vv[c] * (T::one() - t[c] * t[c])).collect();
                        axpy(&mut gq, T::one(), &pre);
                        axpy(acc(&mut adj, *key, a), T::one(), &pre);
                    }
                    axpy(acc(&mut adj, *query, a), T::one(), &gq);
                    axpy(acc(&mut adj, *v, a), T::one(), &gv);
                }
                Op::CrossEntropy { logits, target } => {
                    let p = &node.aux;
                    let ga = acc(&mut adj, *logits, p.len());
                    for k in 0..p.len() {
                        let onehot = if k == *target { T::one() } else { T::zero() };
                        ga[k] += g[0] * (p[k] - onehot);
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::ParamKind;

    fn store() -> (ParamStore<f64>, ParamId, ParamId, ParamId) {
        let mut s = ParamStore::new();
        let w = s.add("w", vec![3, 4], ParamKind::Matrix).unwrap();
        let b = s.add("b", vec![3], ParamKind::Bias).unwrap();
        let e = s.add("e", vec![5, 4], ParamKind::Embedding).unwrap();
        s.init(3);
        for (k, x) in s.get_mut(b).value.data_mut().iter_mut().enumerate() {
            *x = 0.1 * k as f64;
        }
        (s, w, b, e)
    }

    #[test]
    fn sum_of_parameter_has_unit_gradient() {
        let (s, _, b, _) = store();
        let mut g = Graph::new(&s);
        let p = g.param(b);
        let ones = g.input(vec![1.0; 3]);
        let loss = g.dot(p, ones).unwrap();
        let grads = g.backward(loss).unwrap();
        assert_eq!(grads.get(b).unwrap(), [1.0, 1.0, 1.0]);
    }

    #[test]
    fn zero_scaled_loss_has_zero_gradients() {
        let (s, w, b, e) = store();
        let mut g = Graph::new(&s);
        let x = g.embed(e, 2).unwrap();
        let y = g.linear(w, x, Some(b)).unwrap();
        let ce = g.cross_entropy(y, 1).unwrap();
        let loss = g.scale(ce, 0.0);
        let grads = g.backward(loss).unwrap();
        for id in [w, b, e] {
            assert!(grads.get(id).unwrap().iter().all(|x| *x == 0.0));
        }
    }

    #[test]
    fn backward_requires_scalar_root_and_accumulates() {
        let (s, w, b, e) = store();
        let mut g = Graph::new(&s);
        let x = g.embed(e, 0).unwrap();
        let y = g.linear(w, x, Some(b)).unwrap();
        assert_eq!(g.backward(y), Err(NnError::NonScalarRoot(3)));
        let ce = g.cross_entropy(y, 2).unwrap();
        let once = g.backward(ce).unwrap();
        let mut twice = Grads::for_store(&s);
        g.backward_into(ce, &mut twice).unwrap();
        g.backward_into(ce, &mut twice).unwrap();
        for (a, b) in once.get(w).unwrap().iter().zip(twice.get(w).unwrap()) {
            assert!((2.0 * a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn affine_matches_explicit_matrix_product() {
        let (s, w, b, _) = store();
        let mut g = Graph::new(&s);
        let x1 = g.input(vec![0.5, -1.0]);
        let x2 = g.input(vec![2.0, 0.25]);
        let y = g.affine(&[(w, &[x1, x2])], Some(b)).unwrap();
        let wv = s.value(w).data();
        let x = [0.5, -1.0, 2.0, 0.25];
        for r in 0..3 {
            let mut expected = s.value(b).data()[r];
            for c in 0..4 {
                expected += wv[r * 4 + c] * x[c];
            }
            assert!((g.value(y)[r] - expected).abs() < 1e-14);
        }
        assert!(matches!(
            g.affine(&[(w, &[x1])], None),
            Err(NnError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn softmax_cross_entropy_cases() {
        let (loss, p) = softmax_cross_entropy(&[0.3f64; 7], 4).unwrap();
        assert!((loss - 7f64.ln()).abs() < 1e-12);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);

        let (loss, p) = softmax_cross_entropy(&[1000.0f64, -1000.0], 0).unwrap();
        assert!(loss.abs() < 1e-12 && loss.is_finite());
        assert!(p.iter().all(|x| x.is_finite()));

        assert_eq!(
            softmax_cross_entropy(&[0.0f64, 1.0], 2),
            Err(NnError::TargetOutOfRange { target: 2, classes: 2 })
        );

        // Independent evaluation with a different stabilizer (log-sum-exp
        // around the minimum) and a direct log of the probability.
        let logits = [0.7f64, -1.3, 2.2, 0.05, -0.4];
        let (loss, p) = softmax_cross_entropy(&logits, 3).unwrap();
        let min = logits.iter().cloned().fold(f64::INFINITY, f64::min);
        let z: f64 = logits.iter().map(|l| (l - min).exp()).sum();
        let oracle = -((logits[3] - min).exp() / z).ln();
        assert!((loss - oracle).abs() < 1e-10);
        for (k, pk) in p.iter().enumerate() {
            assert!((pk - (logits[k] - min).exp() / z).abs() < 1e-10);
        }
    }

    #[test]
    fn f32_softmax_sums_to_one() {
        let logits: Vec<f32> = (0..50).map(|k| ((k * 37 % 11) as f32) * 0.9 - 4.0).collect();
        let p = softmax(&logits);
        let total: f64 = p.iter().map(|x| *x as f64).sum();
        assert!((total - 1.0).abs() < 1e-6);
        assert!(p.iter().all(|x| *x > 0.0));
    }

    /// Central differences against the analytic gradient on a graph that
    /// touches every operation.
    #[test]
    fn every_op_matches_finite_differences() {
        let x: Vec<f64> = (0..9).map(|k| ((k as f64) * 1.7).sin()).collect();
        let mut s = ParamStore::<f64>::new();
        let pa = s.add("a", vec![3], ParamKind::Bias).unwrap();
        let pb = s.add("b", vec![3], ParamKind::Bias).unwrap();
        let pc = s.add("c", vec![3], ParamKind::Bias).unwrap();
        let set = |s: &mut ParamStore<f64>, x: &[f64]| {
            s.get_mut(pa).value.data_mut().copy_from_slice(&x[0..3]);
            s.get_mut(pb).value.data_mut().copy_from_slice(&x[3..6]);
            s.get_mut(pc).value.data_mut().copy_from_slice(&x[6..9]);
        };
        let forward = |s: &ParamStore<f64>| -> (f64, Grads<f64>) {
            let mut g = Graph::new(s);
            let a = g.param(pa);
            let b = g.param(pb);
            let c = g.param(pc);
            let m = g.mul(a, b).unwrap();
            let sg = g.sigmoid(m);
            let th = g.tanh(c);
            let gt = g.gate(sg, th, a).unwrap();
            let cat = g.concat(&[gt, b]);
            let sum = g.sum(&[a, b, c]).unwrap();
            let sc = g.additive_scores(sum, &[a, b, gt], c).unwrap();
            let al = g.softmax(sc);
            let ws = g.weighted_sum(al, &[a, th, c]).unwrap();
            let d = g.dot(ws, b).unwrap();
            let add = g.add(ws, gt).unwrap();
            let cat2 = g.concat(&[add, d, d, d]);
            let ce1 = g.cross_entropy(cat, 4).unwrap();
            let ce2 = g.cross_entropy(cat2, 1).unwrap();
            let loss = g.sum(&[ce1, ce2]).unwrap();
            (g.scalar(loss), g.backward(loss).unwrap())
        };
        set(&mut s, &x);
        let (_, grads) = forward(&s);
        let analytic: Vec<f64> = [pa, pb, pc]
            .iter()
            .flat_map(|p| grads.get(*p).unwrap().to_vec())
            .collect();
        let h = 1e-6;
        for k in 0..9 {
            let mut xp = x.clone();
            xp[k] += h;
            set(&mut s, &xp);
            let fp = forward(&s).0;
            xp[k] -= 2.0 * h;
            set(&mut s, &xp);
            let fm = forward(&s).0;
            let numeric = (fp - fm) / (2.0 * h);
            let denom = numeric.abs().max(analytic[k].abs()).max(1e-8);
            assert!(
                (numeric - analytic[k]).abs() / denom < 1e-6,
                "input {k}: analytic {} numeric {numeric}",
                analytic[k]
            );
        }
    }
}
