//! End-to-end acceptance checks. Each check prints one PASS/FAIL line with
//! its measurements; the process exits non-zero if any check fails.
//!
//! Pass check numbers as arguments to run a subset, e.g.
//! `cargo test -p songwriter-core --test acceptance -- 3 4`.

use std::collections::HashMap;
use std::process::ExitCode;
use std::time::{Duration as Elapsed, Instant};

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use songwriter_core::corpus::{
    build_corpus_triples, decode_triple, encode_triple, generate_synthetic_corpus, normalize_durations, split_corpus,
    transpose_song_with_fallback, EncodedTriple, SplitRatios, SynthConfig, Vocabulary,
};
use songwriter_core::exec::Execution;
use songwriter_core::metrics::{
    bleu, duration_of_word, evaluate_model, weighted_prf, EvalMode, EvalOptions, EvalReport,
};
use songwriter_core::midi::{export_midi, read_midi_notes};
use songwriter_core::model::{
    check_gradients, gradcheck_setup, load_checkpoint, save_checkpoint, train, Architecture, Control, DecodePolicy,
    GenerateOptions, MelodyModel, ModelConfig, TrainOptions,
};
use songwriter_core::nn::AdamConfig;
use songwriter_core::score::{
    merge_groups, pitch_name_to_midi, read_corpus, sample_line, song_codec_read, split_by_labels, validate_alignment,
    write_corpus, AlignedLine, Duration, NoteEvent, PitchToken, Song,
};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn synth(num_songs: usize, seed: u64) -> Vec<Song> {
    generate_synthetic_corpus(&SynthConfig {
        num_songs,
        seed,
        ..SynthConfig::default()
    })
    .expect("valid synthetic config")
}

fn encode_all(songs: &[Song], vocab: &Vocabulary, window: usize) -> Vec<EncodedTriple> {
    build_corpus_triples(songs, window)
        .iter()
        .map(|t| encode_triple(vocab, t))
        .collect()
}

fn tf_report<T: songwriter_core::nn::Scalar>(model: &MelodyModel<T>, triples: &[EncodedTriple]) -> EvalReport {
    evaluate_model(model, triples, &EvalOptions::default()).expect("teacher-forcing evaluation")
}

fn gradients() -> Check {
    let (config, vocab, triples) = gradcheck_setup(8, 12, 7).map_err(|e| e.to_string())?;
    let sizes = [
        vocab.pitch.len(),
        vocab.duration.len(),
        vocab.syllable.len(),
        vocab.phonetic.len(),
    ];
    ensure(sizes.iter().all(|&v| v <= 12), || format!("vocabulary sizes {sizes:?}"))?;
    let model = MelodyModel::<f64>::new(config, Architecture::Songwriter, vocab, 7).map_err(|e| e.to_string())?;
    let report = check_gradients(&model, &triples, 1e-5, None).map_err(|e| e.to_string())?;
    ensure(report.params.len() == model.params.len(), || {
        "not every parameter was checked".into()
    })?;
    let checked: usize = report.params.iter().map(|p| p.checked).sum();
    ensure(checked == model.params.num_elements(), || {
        format!("{checked} of {} elements checked", model.params.num_elements())
    })?;
    let max = report.max_rel_error();
    let detail = format!(
        "{} parameters, {checked} elements, max rel err {max:.2e}",
        report.params.len()
    );
    ensure(max < 1e-4, || detail.clone())?;
    Ok(detail)
}

fn alignment_totality() -> Check {
    let songs = synth(12, 31);
    let vocab = Vocabulary::build(&songs);
    let triples = encode_all(&songs, &vocab, 16);
    let config = ModelConfig {
        context_window: 16,
        ..ModelConfig::tiny(16)
    }
    .with_vocab(&vocab);
    let models: Vec<MelodyModel<f32>> = (0..8)
        .map(|k| {
            let arch = if k % 2 == 0 {
                Architecture::Songwriter
            } else {
                Architecture::Seq2seq
            };
            MelodyModel::new(config.clone(), arch, vocab.clone(), 100 + k).expect("model")
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut violations, mut notes, mut forced) = (0usize, 0usize, 0usize);
    let mut per_arch = [0usize; 2];
    for run in 0..1000 {
        let model = &models[run % models.len()];
        let t = &triples[rng.random_range(0..triples.len())];
        let temperature = [0.5, 1.0, 2.0, 5.0][rng.random_range(0..4)];
        let options = GenerateOptions {
            policy: DecodePolicy::Sample { temperature },
            max_len: None,
        };
        let mut line_rng = ChaCha8Rng::seed_from_u64(rng.random());
        let out = model
            .generate_encoded(&t.syllables, &t.phonetics, &t.context, &options, &mut line_rng)
            .map_err(|e| e.to_string())?;
        let lyrics = decode_triple(&vocab, t).map_err(|e| e.to_string())?.lyrics;
        let line = AlignedLine::new(lyrics, model.decode_notes(&out.notes).map_err(|e| e.to_string())?);
        if validate_alignment(&line).is_err() || out.notes.len() > 3 * t.syllables.len() {
            violations += 1;
        }
        notes += out.notes.len();
        forced += out.trace.forced_closures;
        per_arch[(model.arch == Architecture::Seq2seq) as usize] += 1;
    }
    let detail = format!(
        "1000 lines ({} songwriter, {} seq2seq), {notes} notes, {forced} forced closures, {violations} violations",
        per_arch[0], per_arch[1]
    );
    ensure(violations == 0, || detail.clone())?;
    Ok(detail)
}

fn memorization() -> Check {
    let songs = generate_synthetic_corpus(&SynthConfig {
        num_songs: 8,
        lines_per_song: (4, 4),
        seed: 5,
        ..SynthConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let vocab = Vocabulary::build(&songs);
    let triples = encode_all(&songs, &vocab, 40);
    ensure(triples.len() == 32, || format!("{} triples", triples.len()))?;
    let config = ModelConfig::tiny(64).with_vocab(&vocab);
    let mut model = MelodyModel::<f32>::new(config, Architecture::Songwriter, vocab, 5).map_err(|e| e.to_string())?;
    let options = TrainOptions {
        epochs: 500,
        batch_size: 8,
        adam: AdamConfig {
            lr: 0.005,
            decay: 1.0,
            ..AdamConfig::default()
        },
        seed: 5,
        execution: Execution::Sequential,
        ..TrainOptions::default()
    };
    let target = |r: &EvalReport| {
        let (prf, ppl) = (r.prf.unwrap(), r.ppl.unwrap());
        prf.pitch.f1 >= 0.95 && prf.label.f1 >= 0.98 && ppl.pitch <= 1.3
    };
    let mut last = None;
    let report = train(&mut model, &triples, &[], &options, |stats, m| {
        if stats.epoch % 10 != 0 {
            return Control::Continue;
        }
        let r = tf_report(m, &triples);
        let done = target(&r);
        last = Some(stats.epoch);
        if done {
            Control::Stop
        } else {
            Control::Continue
        }
    })
    .map_err(|e| e.to_string())?;
    let r = tf_report(&model, &triples);
    let (prf, ppl) = (r.prf.unwrap(), r.ppl.unwrap());
    let detail = format!(
        "{} epochs (last probe {last:?}): pitch F1 {:.4}, label F1 {:.4}, pitch PPL {:.4}",
        report.epochs.len(),
        prf.pitch.f1,
        prf.label.f1,
        ppl.pitch
    );
    ensure(target(&r) && report.epochs.len() <= 500, || detail.clone())?;
    Ok(detail)
}

/// Weighted F1 of always predicting the most frequent training pitch.
fn majority_pitch_f1(train: &[Song], test: &[Song]) -> f64 {
    let mut counts: HashMap<PitchToken, usize> = HashMap::new();
    for n in train.iter().flat_map(Song::notes) {
        *counts.entry(n.pitch).or_default() += 1;
    }
    let majority = counts
        .into_iter()
        .max_by_key(|&(p, c)| (c, std::cmp::Reverse(p)))
        .unwrap()
        .0;
    let gold: Vec<PitchToken> = test.iter().flat_map(Song::notes).map(|n| n.pitch).collect();
    weighted_prf(&vec![majority; gold.len()], &gold).unwrap().f1
}

/// DW of the gold test melodies with every duration redrawn from the
/// training-set duration distribution, averaged over `draws` seeds.
fn random_duration_dw(train: &[Song], test: &[Song], draws: u64) -> f64 {
    let mut counts: HashMap<Duration, usize> = HashMap::new();
    for n in train.iter().flat_map(Song::notes) {
        *counts.entry(n.dur).or_default() += 1;
    }
    let mut table: Vec<(Duration, usize)> = counts.into_iter().collect();
    table.sort();
    let dist = WeightedIndex::new(table.iter().map(|t| t.1)).unwrap();
    let mut total = 0.0;
    for seed in 0..draws {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut hit, mut all) = (0usize, 0usize);
        for gold in test.iter().flat_map(|s| &s.lines) {
            let notes = gold
                .notes
                .iter()
                .map(|n| NoteEvent::new(n.pitch, table[dist.sample(&mut rng)].0, n.label))
                .collect();
            let (h, a) = duration_of_word(&AlignedLine::new(gold.syllables.clone(), notes), gold).unwrap();
            hit += h;
            all += a;
        }
        total += 100.0 * hit as f64 / all as f64;
    }
    total / draws as f64
}

struct Learned {
    model: MelodyModel<f32>,
    test: Vec<EncodedTriple>,
}

fn learnability(keep: &mut Option<Learned>) -> Check {
    let songs = synth(500, 2024)
        .iter()
        .map(|s| transpose_song_with_fallback(s).and_then(|t| normalize_durations(&t)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let (train_songs, valid_songs, test_songs) =
        split_corpus(&songs, SplitRatios::default(), 7).map_err(|e| e.to_string())?;
    let vocab = Vocabulary::build(&train_songs);
    let window = 40;
    let train_set = encode_all(&train_songs, &vocab, window);
    let valid_set = encode_all(&valid_songs, &vocab, window);
    let test_set = encode_all(&test_songs, &vocab, window);
    let config = ModelConfig::tiny(64).with_vocab(&vocab);
    let mut model = MelodyModel::<f32>::new(config, Architecture::Songwriter, vocab, 11).map_err(|e| e.to_string())?;
    let options = TrainOptions {
        epochs: 8,
        batch_size: 16,
        adam: AdamConfig {
            lr: 0.005,
            decay: 0.9999,
            ..AdamConfig::default()
        },
        seed: 11,
        ..TrainOptions::default()
    };
    let report =
        train(&mut model, &train_set, &valid_set, &options, |_, _| Control::Continue).map_err(|e| e.to_string())?;

    let tf = tf_report(&model, &test_set);
    let pitch_f1 = tf.prf.unwrap().pitch.f1;
    let majority = majority_pitch_f1(&train_songs, &test_songs);
    let sampled = evaluate_model(
        &model,
        &test_set,
        &EvalOptions {
            mode: EvalMode::Sampling,
            generate: GenerateOptions {
                policy: DecodePolicy::Sample { temperature: 1.0 },
                max_len: None,
            },
            seed: 3,
            ..EvalOptions::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let dw = sampled.dw.unwrap();
    let random_dw = random_duration_dw(&train_songs, &test_songs, 10);
    let detail = format!(
        "{}/{}/{} songs, {} epochs; test pitch F1 {:.2}% vs majority {:.2}%; sampling DW {dw:.2}% vs random {random_dw:.2}%",
        train_songs.len(),
        valid_songs.len(),
        test_songs.len(),
        report.epochs.len(),
        100.0 * pitch_f1,
        100.0 * majority
    );
    *keep = Some(Learned { model, test: test_set });
    ensure(
        pitch_f1 - majority >= 0.10 && dw > random_dw && sampled.alignment_violations == 0,
        || detail.clone(),
    )?;
    Ok(detail)
}

/// Clipped n-gram precision by explicit enumeration of every position.
fn brute_bleu(cands: &[Vec<u32>], refs: &[Vec<u32>]) -> f64 {
    let grams = |s: &[u32], n: usize| -> Vec<Vec<u32>> {
        (0..s.len().saturating_sub(n - 1))
            .map(|i| s[i..i + n].to_vec())
            .collect()
    };
    let mut log_sum = 0.0;
    for n in 1..=4 {
        let (mut matched, mut total) = (0usize, 0usize);
        for (c, r) in cands.iter().zip(refs) {
            let (cg, rg) = (grams(c, n), grams(r, n));
            total += cg.len();
            for (i, g) in cg.iter().enumerate() {
                // Count this occurrence when its rank among equal candidate
                // n-grams is within the reference count.
                let rank = cg[..i].iter().filter(|x| *x == g).count();
                if rank < rg.iter().filter(|x| *x == g).count() {
                    matched += 1;
                }
            }
        }
        if matched == 0 {
            return 0.0;
        }
        log_sum += 0.25 * (matched as f64 / total as f64).ln();
    }
    let c: usize = cands.iter().map(Vec::len).sum();
    let r: usize = refs.iter().map(Vec::len).sum();
    let bp = if c >= r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    100.0 * bp * log_sum.exp()
}

/// Weighted scores from an explicit confusion matrix over the label set.
#[allow(clippy::needless_range_loop)]
fn brute_prf(pred: &[char], gold: &[char]) -> [f64; 3] {
    let mut labels: Vec<char> = pred.iter().chain(gold).copied().collect();
    labels.sort();
    labels.dedup();
    let idx = |c: char| labels.iter().position(|&l| l == c).unwrap();
    let k = labels.len();
    let mut m = vec![vec![0u32; k]; k];
    for (&p, &g) in pred.iter().zip(gold) {
        m[idx(g)][idx(p)] += 1;
    }
    let n = gold.len() as f64;
    let mut out = [0.0; 3];
    for c in 0..k {
        let support: u32 = m[c].iter().sum();
        let column: u32 = (0..k).map(|g| m[g][c]).sum();
        let tp = m[c][c] as f64;
        let p = if column == 0 { 0.0 } else { tp / column as f64 };
        let r = if support == 0 { 0.0 } else { tp / support as f64 };
        let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
        for (o, v) in out.iter_mut().zip([p, r, f]) {
            *o += support as f64 * v;
        }
    }
    out.map(|v| v / n)
}

/// Candidates, references and the exact score where one is known.
type BleuCase = (Vec<Vec<u32>>, Vec<Vec<u32>>, Option<f64>);

fn metric_oracles() -> Check {
    let v = |s: &[u32]| s.to_vec();
    let corpora: Vec<BleuCase> = vec![
        (
            vec![v(&[1, 2, 3, 4, 5]), v(&[6, 7, 8, 9])],
            vec![v(&[1, 2, 3, 4, 5]), v(&[6, 7, 8, 9])],
            Some(100.0),
        ),
        (vec![v(&[1, 1, 2, 2])], vec![v(&[3, 4, 5, 6])], Some(0.0)),
        (
            vec![v(&[60, 62, 64, 62, 60, 62, 64]), v(&[67, 65, 64, 62, 60, 60])],
            vec![v(&[60, 62, 64, 65, 64, 62, 60]), v(&[67, 65, 64, 62, 62, 60])],
            None,
        ),
        (vec![v(&[7, 7, 7, 7, 7, 7])], vec![v(&[7, 7, 7, 7, 8, 8, 7, 7])], None),
        (
            vec![v(&[1, 2, 3, 4]), v(&[5, 6, 7, 8, 9]), v(&[2, 3, 4, 5])],
            vec![v(&[1, 2, 3, 4, 9]), v(&[5, 6, 7, 8, 9, 9]), v(&[2, 3, 4, 5, 6])],
            None,
        ),
    ];
    let mut worst = 0.0f64;
    for (k, (c, r, exact)) in corpora.iter().enumerate() {
        let got = bleu(c, r).map_err(|e| e.to_string())?;
        let want = brute_bleu(c, r);
        if let Some(x) = exact {
            ensure((want - x).abs() < 1e-9, || {
                format!("oracle gives {want} on corpus {k}, expected {x}")
            })?;
        }
        worst = worst.max((got - want).abs());
        ensure((got - want).abs() <= 1e-6, || {
            format!("BLEU corpus {k}: {got} vs oracle {want}")
        })?;
    }

    let chars = |s: &str| s.chars().collect::<Vec<_>>();
    let cases = [
        ("aaa", "aab"),
        ("abcabc", "abcabc"),
        ("abcd", "bcda"),
        ("aabbc", "abbcc"),
        ("xxyyzzx", "xyzxyzz"),
    ];
    for (pred, gold) in cases {
        let got = weighted_prf(&chars(pred), &chars(gold)).map_err(|e| e.to_string())?;
        let want = brute_prf(&chars(pred), &chars(gold));
        ensure([got.precision, got.recall, got.f1] == want, || {
            format!("P/R/F1 {pred}/{gold}: {got:?} vs oracle {want:?}")
        })?;
    }
    let worked = weighted_prf(&chars("aaa"), &chars("aab")).unwrap();
    ensure((worked.f1 - 8.0 / 15.0).abs() < 1e-15, || {
        format!("worked example F1 {}", worked.f1)
    })?;
    Ok(format!(
        "5 BLEU corpora (max |diff| {worst:.1e}), 5 P/R/F1 cases exact, worked F1 {:.6}",
        worked.f1
    ))
}

fn round_trips() -> Check {
    let songs = synth(200, 41);
    let text = write_corpus(&songs);
    ensure(read_corpus(&text).map_err(|e| e.to_string())? == songs, || {
        "corpus codec changed songs".into()
    })?;

    let lines: Vec<&AlignedLine> = songs.iter().flat_map(|s| &s.lines).take(1000).collect();
    ensure(lines.len() == 1000, || format!("only {} lines", lines.len()))?;
    for line in &lines {
        let groups = split_by_labels(&line.notes).map_err(|e| e.to_string())?;
        ensure(groups.len() == line.syllables.len(), || {
            "group count differs from syllables".into()
        })?;
        ensure(merge_groups(&groups).map_err(|e| e.to_string())? == line.notes, || {
            "merge changed notes".into()
        })?;
    }

    let vocab = Vocabulary::build(&songs[..20]);
    let config = ModelConfig::tiny(12).with_vocab(&vocab);
    for arch in [Architecture::Songwriter, Architecture::Seq2seq] {
        let model = MelodyModel::<f32>::new(config.clone(), arch, vocab.clone(), 9).map_err(|e| e.to_string())?;
        let bytes = save_checkpoint(&model);
        let back: MelodyModel<f32> = load_checkpoint(&bytes).map_err(|e| e.to_string())?;
        let same = model.params.iter().zip(back.params.iter()).all(|(a, b)| {
            a.value
                .data()
                .iter()
                .zip(b.value.data())
                .all(|(x, y)| x.to_bits() == y.to_bits())
        });
        ensure(same && save_checkpoint(&back) == bytes, || {
            format!("{} checkpoint differs", arch.name())
        })?;
    }

    let midi_songs = generate_synthetic_corpus(&SynthConfig {
        num_songs: 1000,
        rest_prob: 0.2,
        seed: 43,
        ..SynthConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let mut notes = 0;
    for song in &midi_songs {
        let back = read_midi_notes(&export_midi(song).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let want: Vec<_> = song.notes().map(|n| (n.pitch, n.dur)).collect();
        let got: Vec<_> = back.iter().map(|n| (n.pitch, n.dur)).collect();
        ensure(got == want, || format!("song {} changed in MIDI", song.id))?;
        notes += want.len();
    }
    Ok(format!(
        "codec {} songs, split/merge 1000 lines, 2 checkpoints bitwise, MIDI 1000 songs / {notes} notes",
        songs.len()
    ))
}

const FRAGMENT: &str = r#"{"id":"fragment","key":"C","bpm":60,"lines":[{"syllables":[{"surface":"爱","phonetic":"ai4"},{"surface":"恨","phonetic":"hen4"},{"surface":"两","phonetic":"liang3"},{"surface":"茫","phonetic":"mang2"},{"surface":"茫","phonetic":"mang2"},{"surface":"问","phonetic":"wen4"},{"surface":"君","phonetic":"jun1"},{"surface":"何","phonetic":"he2"},{"surface":"时","phonetic":"shi2"},{"surface":"恋","phonetic":"lian4"}],"notes":[{"pitch":"R","dur":[1,4],"label":0},{"pitch":69,"dur":[1,4],"label":1},{"pitch":76,"dur":[1,4],"label":1},{"pitch":74,"dur":[1,8],"label":0},{"pitch":71,"dur":[1,8],"label":1},{"pitch":69,"dur":[1,8],"label":0},{"pitch":72,"dur":[1,16],"label":0},{"pitch":69,"dur":[1,16],"label":1},{"pitch":67,"dur":[1,8],"label":0},{"pitch":64,"dur":[1,8],"label":0},{"pitch":67,"dur":[1,2],"label":1},{"pitch":"R","dur":[1,4],"label":0},{"pitch":64,"dur":[1,4],"label":1},{"pitch":74,"dur":[1,4],"label":1},{"pitch":72,"dur":[1,8],"label":0},{"pitch":69,"dur":[1,8],"label":1},{"pitch":67,"dur":[1,8],"label":0},{"pitch":72,"dur":[1,8],"label":1},{"pitch":72,"dur":[1,4],"label":0},{"pitch":69,"dur":[1,2],"label":1}]}]}"#;

/// Counts note-on events with non-zero velocity and lyric meta events.
fn count_midi_events(bytes: &[u8]) -> Result<(usize, usize), String> {
    let smf = midly::Smf::parse(bytes).map_err(|e| e.to_string())?;
    let (mut on, mut lyrics) = (0, 0);
    for event in smf.tracks.iter().flatten() {
        match event.kind {
            midly::TrackEventKind::Midi {
                message: midly::MidiMessage::NoteOn { vel, .. },
                ..
            } if vel > 0 => on += 1,
            midly::TrackEventKind::Meta(midly::MetaMessage::Lyric(_)) => lyrics += 1,
            _ => {}
        }
    }
    Ok((on, lyrics))
}

fn fragment_fidelity() -> Check {
    let song = song_codec_read(FRAGMENT).map_err(|e| e.to_string())?;
    song.validate().map_err(|e| e.to_string())?;
    ensure(song.lines[0] == sample_line(), || {
        "parsed fragment differs from the reference line".into()
    })?;
    let sizes: Vec<usize> = song.lines[0]
        .groups()
        .map_err(|e| e.to_string())?
        .iter()
        .map(|g| g.len())
        .collect();
    ensure(sizes == [2, 1, 2, 3, 3, 2, 1, 2, 2, 2], || {
        format!("group sizes {sizes:?}")
    })?;
    let (on, lyrics) = count_midi_events(&export_midi(&song).map_err(|e| e.to_string())?)?;
    ensure((on, lyrics) == (18, 10), || {
        format!("{on} note-on and {lyrics} lyric events")
    })?;
    let anchors = (pitch_name_to_midi("C5"), pitch_name_to_midi("Eb6"));
    ensure(anchors == (Ok(72), Ok(87)), || format!("anchors {anchors:?}"))?;
    Ok(format!(
        "groups {sizes:?}, {on} note-ons, {lyrics} lyrics, C5=72, Eb6=87"
    ))
}

fn attention_normalization(learned: Option<&Learned>) -> Check {
    let (model, triples) = match learned {
        Some(l) => (l.model.clone(), l.test.clone()),
        None => {
            let songs = synth(20, 8);
            let vocab = Vocabulary::build(&songs);
            let model = MelodyModel::<f32>::new(
                ModelConfig::tiny(16).with_vocab(&vocab),
                Architecture::Songwriter,
                vocab.clone(),
                8,
            )
            .map_err(|e| e.to_string())?;
            (model, encode_all(&songs, &vocab, 40))
        }
    };
    let mut seq2seq = MelodyModel::<f32>::new(model.config.clone(), Architecture::Seq2seq, model.vocab.clone(), 4)
        .map_err(|e| e.to_string())?;
    // Shared parameters carry the trained values; the lyric attention keeps its init.
    for p in model.params.iter() {
        let id = seq2seq.params.id(&p.name).ok_or(format!("seq2seq lacks {}", p.name))?;
        seq2seq.params.get_mut(id).value = p.value.clone();
    }
    let (mut checks, mut violations) = (0, 0);
    for m in [&model, &seq2seq] {
        for mode in [EvalMode::TeacherForcing, EvalMode::Sampling] {
            let options = EvalOptions {
                mode,
                generate: GenerateOptions {
                    policy: DecodePolicy::Sample { temperature: 1.0 },
                    max_len: None,
                },
                ..EvalOptions::default()
            };
            let r = evaluate_model(m, &triples, &options).map_err(|e| e.to_string())?;
            checks += r.attention_checks;
            violations += r.attention_violations;
        }
    }
    let detail = format!(
        "{checks} attention distributions over {} lines x 4 runs, {violations} off by > 1e-6",
        triples.len()
    );
    ensure(checks > 0 && violations == 0, || detail.clone())?;
    Ok(detail)
}

fn main() -> ExitCode {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |k: usize| selected.is_empty() || selected.contains(&k);
    let mut learned = None;
    let mut failures = 0;
    let mut report = |k: usize, name: &str, limit: Elapsed, f: &mut dyn FnMut() -> Check| {
        if !wanted(k) {
            return;
        }
        let start = Instant::now();
        let outcome = f();
        let took = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if took <= limit => (true, d),
            Ok(d) => (false, format!("{d}; exceeded {:.0}s limit", limit.as_secs_f64())),
            Err(d) => (false, d),
        };
        failures += usize::from(!ok);
        println!(
            "{} [{k}] {name}: {detail} ({:.1}s)",
            if ok { "PASS" } else { "FAIL" },
            took.as_secs_f64()
        );
    };
    let min = |m: u64| Elapsed::from_secs(60 * m);
    report(1, "gradient check", Elapsed::from_secs(60), &mut gradients);
    report(2, "alignment totality", min(5), &mut alignment_totality);
    report(3, "memorization", min(10), &mut memorization);
    report(4, "learnability", min(60), &mut || learnability(&mut learned));
    report(5, "metric oracles", min(1), &mut metric_oracles);
    report(6, "round trips", min(5), &mut round_trips);
    report(7, "fragment fidelity", min(1), &mut fragment_fidelity);
    report(8, "attention normalization", min(10), &mut || {
        attention_normalization(learned.as_ref())
    });
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
