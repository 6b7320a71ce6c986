use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::EncodedTriple;
use crate::exec::Execution;
use crate::nn::{gradient_check, AdamConfig, AdamState, Dd, GradCheckReport, Grads, Graph, ParamStore, Scalar};

use super::{MelodyModel, ModelError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainOptions {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    #[serde(skip)]
    pub execution: Execution,
    /// Triples per gradient work item. Results are reduced in chunk order,
    /// so the update does not depend on thread scheduling.
    pub chunk_size: usize,
    pub shuffle: bool,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            epochs: 10,
            batch_size: 64,
            adam: AdamConfig::default(),
            seed: 1,
            execution: Execution::default(),
            chunk_size: 8,
            shuffle: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean NLL per note (pitch + duration + label) over the epoch's
    /// training batches, measured before each update.
    pub train_loss: f64,
    /// Mean NLL per note and attribute.
    pub train_nll: [f64; 3],
    pub valid_loss: Option<f64>,
    pub lr: f64,
    pub grad_norm: f64,
    pub steps: u64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    /// Epoch whose parameters were kept (lowest validation loss).
    pub best_epoch: Option<usize>,
    pub best_valid_loss: Option<f64>,
    pub stopped_early: bool,
}

/// Returned by the per-epoch callback.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// Summed gradient of `scale * sum_i loss_i` over `triples`, together with
/// the summed per-attribute NLL and the note count.
pub fn batch_gradients<T: Scalar>(
    model: &MelodyModel<T>,
    triples: &[&EncodedTriple],
    scale: f64,
    execution: Execution,
    chunk_size: usize,
) -> Result<(Grads<T>, [f64; 3], usize), ModelError> {
    let chunks: Vec<&[&EncodedTriple]> = triples.chunks(chunk_size.max(1)).collect();
    let parts = execution.map(&chunks, |chunk| -> Result<_, ModelError> {
        let mut grads = Grads::for_store(&model.params);
        let mut nll = [0.0; 3];
        let mut notes = 0;
        for triple in chunk.iter() {
            let mut g = Graph::new(&model.params);
            let tf = model.teacher_forcing(&mut g, triple)?;
            let scaled = g.scale(tf.loss, T::of(scale));
            g.backward_into(scaled, &mut grads)?;
            for (acc, x) in nll.iter_mut().zip(tf.nll) {
                *acc += x;
            }
            notes += tf.notes;
        }
        Ok((grads, nll, notes))
    });
    let mut total = Grads::for_store(&model.params);
    let mut nll = [0.0; 3];
    let mut notes = 0;
    for part in parts {
        let (g, n, c) = part?;
        total.add_assign(&g);
        for (acc, x) in nll.iter_mut().zip(n) {
            *acc += x;
        }
        notes += c;
    }
    Ok((total, nll, notes))
}

/// Mean NLL per note over `triples`.
pub(crate) fn mean_loss<T: Scalar>(
    model: &MelodyModel<T>,
    triples: &[EncodedTriple],
    execution: Execution,
) -> Result<f64, ModelError> {
    let parts = execution.map(triples, |t| model.teacher_forcing_loss(t));
    let mut total = 0.0;
    let mut notes = 0;
    for p in parts {
        let (loss, _, n) = p?;
        total += loss;
        notes += n;
    }
    Ok(total / notes.max(1) as f64)
}

/// Mini-batch training with Adam on the summed line NLL averaged over the
/// batch. `on_epoch` sees every epoch's statistics and may stop training.
/// With a validation set the parameters of the best validation epoch are
/// restored at the end.
pub fn train<T: Scalar>(
    model: &mut MelodyModel<T>,
    train_set: &[EncodedTriple],
    valid_set: &[EncodedTriple],
    options: &TrainOptions,
    mut on_epoch: impl FnMut(&EpochStats, &MelodyModel<T>) -> Control,
) -> Result<TrainReport, ModelError> {
    if train_set.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    if options.batch_size == 0 {
        return Err(ModelError::InvalidConfig("batch size must be positive".into()));
    }
    for triple in train_set.iter().chain(valid_set) {
        model.check_triple(triple)?;
    }
    if let Some(cap) = model.config.max_notes_per_line {
        if let Some(longest) = train_set.iter().map(|t| t.target.len()).max().filter(|&l| l > cap) {
            return Err(ModelError::InvalidConfig(format!(
                "max_notes_per_line {cap} is below the longest training target ({longest} notes)"
            )));
        }
    }

    let mut adam = AdamState::new(options.adam, &model.params);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut report = TrainReport {
        epochs: Vec::new(),
        best_epoch: None,
        best_valid_loss: None,
        stopped_early: false,
    };
    let mut best_params = None;

    for epoch in 1..=options.epochs {
        let started = Instant::now();
        if options.shuffle {
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed ^ (epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            order.shuffle(&mut rng);
        }
        let mut nll = [0.0; 3];
        let mut notes = 0;
        let mut grad_norm = 0.0;
        for batch in order.chunks(options.batch_size) {
            let triples: Vec<&EncodedTriple> = batch.iter().map(|&i| &train_set[i]).collect();
            let scale = 1.0 / triples.len() as f64;
            let (grads, batch_nll, batch_notes) =
                batch_gradients(model, &triples, scale, options.execution, options.chunk_size)?;
            model.params.zero_grad();
            model.params.accumulate(&grads, T::one());
            grad_norm = adam.apply(&mut model.params);
            for k in 0..3 {
                nll[k] += batch_nll[k];
            }
            notes += batch_notes;
        }
        let per_note = nll.map(|x| x / notes.max(1) as f64);
        let valid_loss = if valid_set.is_empty() {
            None
        } else {
            Some(mean_loss(model, valid_set, options.execution)?)
        };
        if let Some(v) = valid_loss {
            if report.best_valid_loss.is_none_or(|b| v < b) {
                report.best_valid_loss = Some(v);
                report.best_epoch = Some(epoch);
                best_params = Some(model.params.clone());
            }
        }
        let stats = EpochStats {
            epoch,
            train_loss: per_note.iter().sum(),
            train_nll: per_note,
            valid_loss,
            lr: adam.current_lr(),
            grad_norm,
            steps: adam.step,
            seconds: started.elapsed().as_secs_f64(),
        };
        let control = on_epoch(&stats, model);
        report.epochs.push(stats);
        if control == Control::Stop {
            report.stopped_early = epoch < options.epochs;
            break;
        }
    }
    if let Some(best) = best_params {
        model.params = best;
    }
    Ok(report)
}

/// Central-difference check of the summed teacher-forcing loss over
/// `triples` against the analytic `f64` gradient. The perturbed losses are
/// evaluated in double-double precision so that cancellation in the
/// difference quotient does not swamp small gradient entries.
pub fn check_gradients(
    model: &MelodyModel<f64>,
    triples: &[EncodedTriple],
    eps: f64,
    sample: Option<(usize, u64)>,
) -> Result<GradCheckReport, ModelError> {
    let refs: Vec<&EncodedTriple> = triples.iter().collect();
    let (grads, _, _) = batch_gradients(model, &refs, 1.0, Execution::Sequential, refs.len().max(1))?;
    for t in triples {
        model.check_triple(t)?;
    }
    let mut params = model.params.clone();
    let mut wide: MelodyModel<Dd> = model.cast();
    let loss = |p: &ParamStore<f64>| {
        wide.params.copy_values_from(p);
        triples
            .iter()
            .map(|t| {
                let mut g = Graph::new(&wide.params);
                model_loss(&wide, &mut g, t)
            })
            .sum::<Dd>()
    };
    Ok(gradient_check(&mut params, &grads, eps, sample, loss))
}

fn model_loss<T: Scalar>(model: &MelodyModel<T>, g: &mut Graph<'_, T>, triple: &EncodedTriple) -> T {
    model
        .teacher_forcing(g, triple)
        .map(|tf| g.scalar(tf.loss))
        .unwrap_or_else(|_| T::nan())
}
