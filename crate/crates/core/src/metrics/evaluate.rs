use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::EncodedTriple;
use crate::exec::Execution;
use crate::model::{Attribute, GenerateOptions, MelodyModel};
use crate::nn::{Graph, Scalar};
use crate::score::{AlignedLine, Syllable};

use super::{bleu, duration_of_word, perplexity, weighted_prf, MetricsError, Perplexity, Prf};

/// Published large-corpus results: model, PPL, pitch/duration/label F1,
/// BLEU, DW. They come from a private corpus and only give scale.
pub const REFERENCE_RESULTS: [(&str, f64, [f64; 3], f64, f64); 2] = [
    ("seq2seq", 2.21, [54.56, 65.33, 92.60], 3.96, 37.04),
    ("songwriter", 2.01, [62.90, 69.69, 93.31], 6.63, 38.31),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalMode {
    /// Gold inputs at every step; perplexity and per-attribute P/R/F1.
    TeacherForcing,
    /// Free-running generation on gold context; BLEU and DW.
    Sampling,
}

impl std::str::FromStr for EvalMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "teacher-forcing" | "tf" => Ok(EvalMode::TeacherForcing),
            "sampling" => Ok(EvalMode::Sampling),
            other => Err(format!("unknown evaluation mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub mode: EvalMode,
    pub generate: GenerateOptions,
    /// Line `k` is sampled with a generator seeded from `seed` and `k`.
    pub seed: u64,
    pub execution: Execution,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            mode: EvalMode::TeacherForcing,
            generate: GenerateOptions::default(),
            seed: 0,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AttributePrf {
    pub pitch: Prf,
    pub duration: Prf,
    pub label: Prf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub mode: EvalMode,
    pub lines: usize,
    /// Gold notes.
    pub notes: usize,
    pub syllables: usize,
    pub ppl: Option<Perplexity>,
    pub prf: Option<AttributePrf>,
    /// Percentage in `[0, 100]`.
    pub bleu: Option<f64>,
    /// Percentage of syllables whose generated duration sum is exact.
    pub dw: Option<f64>,
    pub generated_notes: usize,
    pub alignment_violations: usize,
    /// Attention distributions inspected and those not summing to 1.
    pub attention_checks: usize,
    pub attention_violations: usize,
}

impl EvalReport {
    pub fn csv_header() -> &'static str {
        "model,mode,lines,notes,ppl_pitch,ppl_duration,ppl_label,ppl_combined,\
         pitch_p,pitch_r,pitch_f1,duration_p,duration_r,duration_f1,label_p,label_r,label_f1,\
         bleu,dw,alignment_violations"
    }

    pub fn csv_row(&self) -> String {
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:.6}"));
        let ppl = self.ppl;
        let mut cells = vec![
            self.model.clone(),
            match self.mode {
                EvalMode::TeacherForcing => "teacher-forcing".into(),
                EvalMode::Sampling => "sampling".into(),
            },
            self.lines.to_string(),
            self.notes.to_string(),
            opt(ppl.map(|p| p.pitch)),
            opt(ppl.map(|p| p.duration)),
            opt(ppl.map(|p| p.label)),
            opt(ppl.map(|p| p.combined)),
        ];
        for pick in [
            |a: &AttributePrf| a.pitch,
            |a: &AttributePrf| a.duration,
            |a: &AttributePrf| a.label,
        ] {
            let prf = self.prf.as_ref().map(pick);
            cells.push(opt(prf.map(|p| p.precision)));
            cells.push(opt(prf.map(|p| p.recall)));
            cells.push(opt(prf.map(|p| p.f1)));
        }
        cells.push(opt(self.bleu));
        cells.push(opt(self.dw));
        cells.push(self.alignment_violations.to_string());
        cells.join(",")
    }
}

fn distribution_ok(weights: &[f64]) -> bool {
    (weights.iter().sum::<f64>() - 1.0).abs() <= 1e-6
}

struct TfLine {
    nll: [f64; 3],
    predicted: Vec<[usize; 3]>,
    gold: Vec<[usize; 3]>,
    attention: (usize, usize),
}

struct SampledLine {
    candidate: Vec<usize>,
    reference: Vec<usize>,
    generated: usize,
    violation: bool,
    dw: (usize, usize),
    attention: (usize, usize),
}

/// Scores `model` on encoded triples. Per-line work runs under
/// `options.execution`; sums are reduced in input order.
pub fn evaluate_model<T: Scalar>(
    model: &MelodyModel<T>,
    triples: &[EncodedTriple],
    options: &EvalOptions,
) -> Result<EvalReport, MetricsError> {
    if triples.is_empty() {
        return Err(MetricsError::Empty("evaluate_model"));
    }
    for t in triples {
        model.check_triple(t)?;
    }
    let mut report = EvalReport {
        model: model.arch.name().to_string(),
        mode: options.mode,
        lines: triples.len(),
        notes: triples.iter().map(|t| t.target.len()).sum(),
        syllables: triples.iter().map(|t| t.syllables.len()).sum(),
        ppl: None,
        prf: None,
        bleu: None,
        dw: None,
        generated_notes: 0,
        alignment_violations: 0,
        attention_checks: 0,
        attention_violations: 0,
    };
    match options.mode {
        EvalMode::TeacherForcing => {
            let lines = options.execution.map(triples, |t| teacher_forced_line(model, t));
            let mut nll = [0.0; 3];
            let mut predicted: [Vec<usize>; 3] = Default::default();
            let mut gold: [Vec<usize>; 3] = Default::default();
            for line in lines {
                let line = line?;
                for k in 0..3 {
                    nll[k] += line.nll[k];
                    predicted[k].extend(line.predicted.iter().map(|p| p[k]));
                    gold[k].extend(line.gold.iter().map(|g| g[k]));
                }
                report.attention_checks += line.attention.0;
                report.attention_violations += line.attention.1;
            }
            report.ppl = Some(perplexity(nll, report.notes)?);
            let prf = |a: Attribute| weighted_prf(&predicted[a.index()], &gold[a.index()]);
            report.prf = Some(AttributePrf {
                pitch: prf(Attribute::Pitch)?,
                duration: prf(Attribute::Duration)?,
                label: prf(Attribute::Label)?,
            });
        }
        EvalMode::Sampling => {
            let indexed: Vec<(usize, &EncodedTriple)> = triples.iter().enumerate().collect();
            let lines = options
                .execution
                .map(&indexed, |(k, t)| sampled_line(model, t, options, *k as u64));
            let mut candidates = Vec::with_capacity(triples.len());
            let mut references = Vec::with_capacity(triples.len());
            let (mut matches, mut total) = (0, 0);
            for line in lines {
                let line = line?;
                candidates.push(line.candidate);
                references.push(line.reference);
                report.generated_notes += line.generated;
                report.alignment_violations += usize::from(line.violation);
                matches += line.dw.0;
                total += line.dw.1;
                report.attention_checks += line.attention.0;
                report.attention_violations += line.attention.1;
            }
            report.bleu = Some(bleu(&candidates, &references)?);
            report.dw = Some(100.0 * matches as f64 / total.max(1) as f64);
        }
    }
    Ok(report)
}

fn teacher_forced_line<T: Scalar>(model: &MelodyModel<T>, triple: &EncodedTriple) -> Result<TfLine, MetricsError> {
    let mut g = Graph::new(&model.params);
    let tf = model.teacher_forcing(&mut g, triple)?;
    let alphas = tf.alpha.iter().chain(&tf.lyric_alpha);
    let bad = alphas.clone().filter(|a| !distribution_ok(a)).count();
    Ok(TfLine {
        nll: tf.nll,
        predicted: tf.predicted,
        gold: tf.gold,
        attention: (alphas.count(), bad),
    })
}

fn sampled_line<T: Scalar>(
    model: &MelodyModel<T>,
    triple: &EncodedTriple,
    options: &EvalOptions,
    index: u64,
) -> Result<SampledLine, MetricsError> {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15)));
    let generated = model.generate_encoded(
        &triple.syllables,
        &triple.phonetics,
        &triple.context,
        &options.generate,
        &mut rng,
    )?;
    let placeholder = vec![Syllable::new("_", "_"); triple.syllables.len()];
    let predicted = AlignedLine::new(placeholder.clone(), model.decode_notes(&generated.notes)?);
    let gold = AlignedLine::new(placeholder, model.decode_notes(&triple.target)?);
    let violation = predicted.validate().is_err();
    let dw = if violation {
        (0, triple.syllables.len())
    } else {
        duration_of_word(&predicted, &gold)?
    };
    let trace = &generated.trace;
    let alphas = trace.alpha.iter().chain(&trace.lyric_alpha);
    let bad = alphas.clone().filter(|a| !distribution_ok(a)).count();
    Ok(SampledLine {
        candidate: generated.notes.pitch.clone(),
        reference: triple.target.pitch.clone(),
        generated: generated.notes.len(),
        violation,
        dw,
        attention: (alphas.count(), bad),
    })
}
