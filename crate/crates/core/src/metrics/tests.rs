use proptest::prelude::*;

use super::*;
use crate::exec::Execution;
use crate::model::{test_fixture, Architecture, DecodePolicy, GenerateOptions, MelodyModel};
use crate::score::{merge_groups, sample_line, Duration, NoteEvent, PitchToken};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn perplexity_hand_cases() {
    let k = 7f64;
    let uniform = perplexity([5.0 * k.ln(); 3], 5).unwrap();
    assert!(close(uniform.pitch, 7.0, 1e-12) && close(uniform.combined, 7.0, 1e-12));
    assert_eq!(perplexity([0.0; 3], 4).unwrap().label, 1.0);
    let p = perplexity([2.0 * 2f64.ln(), 0.0, 0.0], 2).unwrap();
    assert!(close(p.pitch, 2.0, 1e-12));
    assert!(close(p.combined, 2f64.powf(1.0 / 3.0), 1e-12));
    assert!(matches!(perplexity([1.0; 3], 0), Err(MetricsError::ZeroTokens)));
}

#[test]
fn weighted_prf_hand_case() {
    let p = weighted_prf(&['a', 'a', 'a'], &['a', 'a', 'b']).unwrap();
    assert!(close(p.recall, 2.0 / 3.0, 1e-12));
    assert!(close(p.precision, 4.0 / 9.0, 1e-12));
    assert!(close(p.f1, 8.0 / 15.0, 1e-12));
    assert_eq!(
        weighted_prf(&[3, 3], &[3, 3]).unwrap(),
        Prf {
            precision: 1.0,
            recall: 1.0,
            f1: 1.0
        }
    );
    assert!(matches!(
        weighted_prf(&[1], &[1, 2]),
        Err(MetricsError::LengthMismatch { .. })
    ));
    assert!(matches!(weighted_prf::<u8>(&[], &[]), Err(MetricsError::Empty(_))));
}

/// Confusion-matrix scorer over dense class ids.
#[allow(clippy::needless_range_loop)]
fn prf_oracle(pred: &[usize], gold: &[usize]) -> (f64, f64, f64) {
    let k = pred.iter().chain(gold).max().unwrap() + 1;
    let mut m = vec![vec![0usize; k]; k];
    for (p, g) in pred.iter().zip(gold) {
        m[*g][*p] += 1;
    }
    let n = gold.len() as f64;
    let (mut wp, mut wr, mut wf) = (0.0, 0.0, 0.0);
    for c in 0..k {
        let support: usize = m[c].iter().sum();
        let predicted: usize = (0..k).map(|g| m[g][c]).sum();
        let tp = m[c][c] as f64;
        let p = if predicted > 0 { tp / predicted as f64 } else { 0.0 };
        let r = if support > 0 { tp / support as f64 } else { 0.0 };
        let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        let w = support as f64 / n;
        wp += w * p;
        wr += w * r;
        wf += w * f;
    }
    (wp, wr, wf)
}

/// Clipped n-gram matches by exhaustive comparison.
fn bleu_oracle(cands: &[Vec<u8>], refs: &[Vec<u8>]) -> f64 {
    let mut logs = 0.0;
    for n in 1..=4 {
        let (mut hit, mut all) = (0usize, 0usize);
        for (c, r) in cands.iter().zip(refs) {
            let cg: Vec<&[u8]> = if c.len() >= n {
                (0..=c.len() - n).map(|i| &c[i..i + n]).collect()
            } else {
                vec![]
            };
            let rg: Vec<&[u8]> = if r.len() >= n {
                (0..=r.len() - n).map(|i| &r[i..i + n]).collect()
            } else {
                vec![]
            };
            let mut seen: Vec<&[u8]> = Vec::new();
            for g in &cg {
                if seen.contains(g) {
                    continue;
                }
                seen.push(g);
                let in_c = cg.iter().filter(|x| *x == g).count();
                let in_r = rg.iter().filter(|x| *x == g).count();
                hit += in_c.min(in_r);
            }
            all += cg.len();
        }
        if hit == 0 {
            return 0.0;
        }
        logs += (hit as f64 / all as f64).ln() / 4.0;
    }
    let c: usize = cands.iter().map(Vec::len).sum();
    let r: usize = refs.iter().map(Vec::len).sum();
    let bp = if c < r { (1.0 - r as f64 / c as f64).exp() } else { 1.0 };
    100.0 * bp * logs.exp()
}

#[test]
fn bleu_boundaries() {
    let lines = vec![vec![1u8, 2, 3, 4, 5], vec![5, 4, 3, 2]];
    assert!(close(bleu(&lines, &lines).unwrap(), 100.0, 1e-9));
    assert_eq!(bleu(&[vec![9u8, 9, 9, 9]], &[vec![1, 2, 3, 4]]).unwrap(), 0.0);
    // All precisions 1, brevity penalty exp(1 - 5/4).
    let short = bleu(&[vec![1u8, 2, 3, 4]], &[vec![1, 2, 3, 4, 5]]).unwrap();
    assert!(close(short, 100.0 * (-0.25f64).exp(), 1e-9));
    assert!(matches!(bleu::<u8>(&[], &[]), Err(MetricsError::Empty(_))));
    assert!(matches!(
        bleu(&[vec![1u8]], &[]),
        Err(MetricsError::LengthMismatch { .. })
    ));
}

#[test]
fn bleu_two_line_toy_corpus() {
    let cands = vec![vec![60u8, 62, 64, 62, 60, 62, 64], vec![67, 65, 64, 62, 60, 60]];
    let refs = vec![vec![60u8, 62, 64, 65, 64, 62, 60], vec![67, 65, 64, 62, 62, 60]];
    let score = bleu(&cands, &refs).unwrap();
    assert!(score > 0.0 && score < 100.0);
    assert!(close(score, bleu_oracle(&cands, &refs), 1e-6));
}

fn with_group(line: &AlignedLine, k: usize, group: &[NoteEvent]) -> AlignedLine {
    let groups = line.groups().unwrap();
    let mut owned: Vec<Vec<NoteEvent>> = groups.iter().map(|g| g.to_vec()).collect();
    owned[k] = group.to_vec();
    AlignedLine::new(line.syllables.clone(), merge_groups(&owned).unwrap())
}

#[test]
fn duration_of_word_cases() {
    let gold = sample_line();
    assert_eq!(duration_of_word(&gold, &gold).unwrap(), (10, 10));

    let note = |p: PitchToken, den| NoteEvent::new(p, Duration::new(1, den).unwrap(), false);
    // Group 0 lasts 1/4 + 1/4; halve it.
    let halved = with_group(&gold, 0, &[note(PitchToken::Rest, 8), note(PitchToken::Note(69), 8)]);
    assert_eq!(duration_of_word(&halved, &gold).unwrap(), (9, 10));

    // Group 2 is 1/8 + 1/8; a single quarter note sums the same.
    let regrouped = with_group(&gold, 2, &[note(PitchToken::Note(74), 4)]);
    assert_ne!(regrouped, gold);
    assert_eq!(duration_of_word(&regrouped, &gold).unwrap(), (10, 10));

    let mut short = gold.clone();
    let n = short.notes.len();
    short.notes.truncate(n - 2);
    assert!(matches!(
        duration_of_word(&short, &gold),
        Err(MetricsError::LengthMismatch { .. })
    ));
}

proptest! {
    #[test]
    fn prf_matches_confusion_matrix(pairs in prop::collection::vec((0usize..5, 0usize..5), 1..40)) {
        let (pred, gold): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
        let got = weighted_prf(&pred, &gold).unwrap();
        let (p, r, f) = prf_oracle(&pred, &gold);
        prop_assert!(close(got.precision, p, 1e-12) && close(got.recall, r, 1e-12) && close(got.f1, f, 1e-12));
        prop_assert!((0.0..=1.0 + 1e-12).contains(&got.f1));
        prop_assert_eq!(weighted_prf(&gold, &gold).unwrap(), Prf { precision: 1.0, recall: 1.0, f1: 1.0 });
    }

    #[test]
    fn bleu_matches_oracle_and_ignores_line_order(
        lines in prop::collection::vec(
            (prop::collection::vec(0u8..4, 0..9), prop::collection::vec(0u8..4, 1..9)), 1..5),
    ) {
        let (cands, refs): (Vec<Vec<u8>>, Vec<Vec<u8>>) = lines.into_iter().unzip();
        let score = bleu(&cands, &refs).unwrap();
        prop_assert!(close(score, bleu_oracle(&cands, &refs), 1e-6));
        prop_assert!((0.0..=100.0 + 1e-9).contains(&score));
        let rc: Vec<_> = cands.iter().rev().cloned().collect();
        let rr: Vec<_> = refs.iter().rev().cloned().collect();
        prop_assert!(close(bleu(&rc, &rr).unwrap(), score, 1e-9));
    }
}

fn fixture_model(arch: Architecture) -> (MelodyModel<f64>, Vec<crate::corpus::EncodedTriple>) {
    let (config, vocab, triples) = test_fixture();
    (MelodyModel::new(config, arch, vocab, 3).unwrap(), triples)
}

#[test]
fn teacher_forcing_report() {
    for arch in [Architecture::Songwriter, Architecture::Seq2seq] {
        let (m, triples) = fixture_model(arch);
        let report = evaluate_model(&m, &triples, &EvalOptions::default()).unwrap();
        assert_eq!(report.mode, EvalMode::TeacherForcing);
        assert_eq!(report.model, arch.name());
        assert_eq!(report.lines, triples.len());
        assert_eq!(report.notes, triples.iter().map(|t| t.target.len()).sum::<usize>());
        let mut nll = [0.0; 3];
        for t in &triples {
            let (_, n, _) = m.teacher_forcing_loss(t).unwrap();
            (0..3).for_each(|k| nll[k] += n[k]);
        }
        let ppl = report.ppl.unwrap();
        assert!(close(ppl.pitch, (nll[0] / report.notes as f64).exp(), 1e-9));
        let prf = report.prf.unwrap();
        for p in [prf.pitch, prf.duration, prf.label] {
            assert!((0.0..=1.0).contains(&p.f1));
        }
        assert!(report.bleu.is_none() && report.dw.is_none());
        assert!(report.attention_checks > 0);
        assert_eq!(report.attention_violations, 0);
    }
}

#[test]
fn sampling_report_is_aligned_and_deterministic() {
    for arch in [Architecture::Songwriter, Architecture::Seq2seq] {
        let (m, triples) = fixture_model(arch);
        let mut options = EvalOptions {
            mode: EvalMode::Sampling,
            generate: GenerateOptions {
                policy: DecodePolicy::Sample { temperature: 1.0 },
                max_len: None,
            },
            seed: 5,
            execution: Execution::Sequential,
        };
        let a = evaluate_model(&m, &triples, &options).unwrap();
        options.execution = Execution::Parallel;
        let b = evaluate_model(&m, &triples, &options).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.alignment_violations, 0);
        assert!(a.ppl.is_none());
        assert!((0.0..=100.0).contains(&a.bleu.unwrap()));
        assert!((0.0..=100.0).contains(&a.dw.unwrap()));
        assert!(a.generated_notes >= a.syllables);
    }
}

#[test]
fn csv_row_matches_header() {
    let (m, triples) = fixture_model(Architecture::Songwriter);
    let report = evaluate_model(&m, &triples[..2], &EvalOptions::default()).unwrap();
    let cols = EvalReport::csv_header().split(',').count();
    assert_eq!(report.csv_row().split(',').count(), cols);
    let json = serde_json::to_string(&report).unwrap();
    assert_eq!(serde_json::from_str::<EvalReport>(&json).unwrap(), report);
    assert!(evaluate_model(&m, &[], &EvalOptions::default()).is_err());
}
