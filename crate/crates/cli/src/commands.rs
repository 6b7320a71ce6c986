use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use songwriter_core::corpus::{
    build_corpus_triples, encode_triple, generate_synthetic_corpus, normalize_durations, split_corpus,
    transpose_song_with_fallback, EncodedTriple, Lexicon, SplitRatios, SynthConfig, Vocabulary,
};
use songwriter_core::exec::Execution;
use songwriter_core::metrics::{evaluate_model, EvalMode, EvalOptions, EvalReport, REFERENCE_RESULTS};
use songwriter_core::midi;
use songwriter_core::model::{
    self, check_gradients, gradcheck_setup, load_checkpoint, save_checkpoint, Architecture, Control, DecodePolicy,
    GenerateOptions, MelodyModel, ModelConfig, TrainOptions,
};
use songwriter_core::nn::AdamConfig;
use songwriter_core::score::{read_corpus, write_corpus, Song};

use crate::error::{CliError, Kind};
use crate::{
    Arch, DecodeArgs, EvaluateArgs, ExportArgs, GenerateArgs, GradcheckArgs, Mode, Policy, PrepareArgs, SynthArgs,
    TrainArgs,
};

type Result<T> = std::result::Result<T, CliError>;

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn read_songs(path: &Path) -> Result<Vec<Song>> {
    let songs = read_corpus(&read_text(path)?)?;
    if songs.is_empty() {
        return Err(CliError::new(
            Kind::Input,
            format!("{}: corpus is empty", path.display()),
        ));
    }
    Ok(songs)
}

fn encode_songs(songs: &[Song], vocab: &Vocabulary, window: usize) -> Vec<EncodedTriple> {
    build_corpus_triples(songs, window)
        .iter()
        .map(|t| encode_triple(vocab, t))
        .collect()
}

fn architecture(arch: Arch) -> Architecture {
    match arch {
        Arch::Songwriter => Architecture::Songwriter,
        Arch::Seq2seq => Architecture::Seq2seq,
    }
}

fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn generate_options(args: &DecodeArgs) -> GenerateOptions {
    let policy = match args.policy {
        Policy::Greedy => DecodePolicy::Greedy,
        Policy::Sample => DecodePolicy::Sample {
            temperature: args.temperature,
        },
    };
    GenerateOptions { policy, max_len: None }
}

fn pretty(value: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(value).expect("report serialization is infallible")
}

pub fn synth_corpus(args: SynthArgs) -> Result<()> {
    let songs = generate_synthetic_corpus(&SynthConfig {
        num_songs: args.songs,
        one_to_many_prob: args.one_to_many,
        rest_prob: args.rest_prob,
        seed: args.seed,
        ..SynthConfig::default()
    })?;
    write_file(&args.out, write_corpus(&songs))?;
    let lines: usize = songs.iter().map(|s| s.lines.len()).sum();
    eprintln!("wrote {} songs, {lines} lines to {}", songs.len(), args.out.display());
    Ok(())
}

pub fn prepare(args: PrepareArgs) -> Result<()> {
    if args.ratios.len() != 3 {
        return Err(CliError::new(
            Kind::Input,
            format!(
                "--ratios takes three comma-separated fractions, got {}",
                args.ratios.len()
            ),
        ));
    }
    let songs = read_songs(&args.corpus)?
        .iter()
        .map(|s| transpose_song_with_fallback(s).and_then(|t| normalize_durations(&t)))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let ratios = SplitRatios {
        train: args.ratios[0],
        valid: args.ratios[1],
        test: args.ratios[2],
    };
    let (train, valid, test) = split_corpus(&songs, ratios, args.seed)?;
    let vocab = Vocabulary::build(&train);
    for (name, part) in [("train", &train), ("valid", &valid), ("test", &test)] {
        write_file(&args.out.join(format!("{name}.jsonl")), write_corpus(part))?;
    }
    write_file(&args.out.join("vocab.json"), vocab.to_json())?;
    println!(
        "{}",
        json!({
            "train": train.len(),
            "valid": valid.len(),
            "test": test.len(),
            "pitch_vocab": vocab.pitch.len(),
            "duration_vocab": vocab.duration.len(),
            "syllable_vocab": vocab.syllable.len(),
            "phonetic_vocab": vocab.phonetic.len(),
        })
    );
    Ok(())
}

pub fn train(args: TrainArgs) -> Result<()> {
    let train_songs = read_songs(&args.corpus)?;
    let vocab = match &args.vocab {
        Some(path) => Vocabulary::from_json(&read_text(path)?)?,
        None => Vocabulary::build(&train_songs),
    };
    let window = args.model.window;
    let train_set = encode_songs(&train_songs, &vocab, window);
    let valid_set = match &args.valid {
        Some(path) => encode_songs(&read_songs(path)?, &vocab, window),
        None => Vec::new(),
    };

    let defaults = ModelConfig::default();
    let emb = |d: usize| args.model.emb.unwrap_or(d);
    let config = ModelConfig {
        hidden_size: args.model.hidden,
        pitch_emb: emb(defaults.pitch_emb),
        duration_emb: emb(defaults.duration_emb),
        label_emb: emb(defaults.label_emb),
        syllable_emb: emb(defaults.syllable_emb),
        phonetic_emb: emb(defaults.phonetic_emb),
        context_window: window,
        ..defaults
    };
    let mut model = MelodyModel::<f32>::new(config, architecture(args.model.arch), vocab, args.seed)?;
    let options = TrainOptions {
        epochs: args.epochs,
        batch_size: args.batch,
        adam: AdamConfig {
            lr: args.lr,
            decay: args.decay,
            clip_norm: (args.clip > 0.0).then_some(args.clip),
            ..AdamConfig::default()
        },
        seed: args.seed,
        execution: execution(args.sequential),
        ..TrainOptions::default()
    };

    let mut log = match &args.log {
        Some(path) => {
            write_file(path, "")?;
            Some(
                fs::OpenOptions::new()
                    .append(true)
                    .open(path)
                    .map_err(|e| CliError::io(path, e))?,
            )
        }
        None => None,
    };
    let mut log_error = None;
    let mut best: Option<f64> = None;
    let mut stale = 0usize;
    let report = model::train(&mut model, &train_set, &valid_set, &options, |stats, _| {
        eprintln!(
            "epoch {:>3}  train {:.4}  valid {}  lr {:.2e}  {:.1}s",
            stats.epoch,
            stats.train_loss,
            stats.valid_loss.map_or("-".into(), |v| format!("{v:.4}")),
            stats.lr,
            stats.seconds
        );
        if let Some(file) = log.as_mut() {
            let line = serde_json::to_string(stats).expect("stats serialize");
            if let Err(e) = writeln!(file, "{line}") {
                log_error = Some(e);
                return Control::Stop;
            }
        }
        match (stats.valid_loss, args.patience) {
            (Some(v), Some(patience)) => {
                if best.is_none_or(|b| v < b) {
                    best = Some(v);
                    stale = 0;
                } else {
                    stale += 1;
                }
                if stale >= patience {
                    Control::Stop
                } else {
                    Control::Continue
                }
            }
            _ => Control::Continue,
        }
    })?;
    if let (Some(e), Some(path)) = (log_error, &args.log) {
        return Err(CliError::io(path, e));
    }
    write_file(&args.checkpoint, save_checkpoint(&model))?;
    println!(
        "{}",
        json!({
            "epochs": report.epochs.len(),
            "best_epoch": report.best_epoch,
            "best_valid_loss": report.best_valid_loss,
            "final_train_loss": report.epochs.last().map(|e| e.train_loss),
            "stopped_early": report.stopped_early,
            "parameters": model.params.num_elements(),
            "checkpoint": args.checkpoint.display().to_string(),
        })
    );
    Ok(())
}

fn load_model(path: &Path) -> Result<MelodyModel<f32>> {
    Ok(load_checkpoint::<f32>(&read_bytes(path)?)?)
}

pub fn evaluate(args: EvaluateArgs) -> Result<()> {
    let model = load_model(&args.checkpoint)?;
    let songs = read_songs(&args.corpus)?;
    let triples = encode_songs(&songs, &model.vocab, model.config.context_window);
    let options = EvalOptions {
        mode: match args.mode {
            Mode::Tf => EvalMode::TeacherForcing,
            Mode::Sampling => EvalMode::Sampling,
        },
        generate: generate_options(&args.decode),
        seed: args.decode.seed,
        execution: execution(args.sequential),
    };
    let report = evaluate_model(&model, &triples, &options)?;
    match &args.out {
        Some(path) => write_file(path, pretty(&report))?,
        None => println!("{}", pretty(&report)),
    }
    if let Some(path) = &args.csv {
        let fresh = !path.exists();
        let mut text = String::new();
        if fresh {
            text.push_str(EvalReport::csv_header());
            text.push('\n');
        }
        text.push_str(&report.csv_row());
        text.push('\n');
        if fresh {
            write_file(path, text)?;
        } else {
            fs::OpenOptions::new()
                .append(true)
                .open(path)
                .and_then(|mut f| f.write_all(text.as_bytes()))
                .map_err(|e| CliError::io(path, e))?;
        }
    }
    eprintln!("headline PPL is the pitch perplexity; ppl.combined averages the NLL over all three heads");
    eprintln!("large private-corpus results for scale (model, PPL, pitch/duration/label F1 %, BLEU, DW %):");
    for (name, ppl, f1, bleu, dw) in REFERENCE_RESULTS {
        eprintln!(
            "  {name:<10} {ppl:.2}  {:.2}/{:.2}/{:.2}  {bleu:.2}  {dw:.2}",
            f1[0], f1[1], f1[2]
        );
    }
    if report.alignment_violations > 0 {
        return Err(CliError::new(
            Kind::CheckFailed,
            format!(
                "{} generated lines violate the alignment rules",
                report.alignment_violations
            ),
        ));
    }
    Ok(())
}

pub fn generate(args: GenerateArgs) -> Result<()> {
    let model = load_model(&args.checkpoint)?;
    let lexicon = match &args.lexicon {
        Some(path) => Lexicon::parse(&read_text(path)?)?,
        None => Lexicon::builtin(),
    };
    let lines: Vec<_> = read_text(&args.lyrics)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| lexicon.syllabify(l))
        .collect();
    if lines.is_empty() || lines.iter().any(Vec::is_empty) {
        return Err(CliError::new(
            Kind::Input,
            format!(
                "{}: every lyric line needs at least one syllable",
                args.lyrics.display()
            ),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.decode.seed);
    let (song, traces) = model.compose_song(&args.id, &lines, &generate_options(&args.decode), &mut rng)?;
    song.validate()
        .map_err(|e| CliError::new(Kind::CheckFailed, format!("generated song is misaligned: {e}")))?;
    write_file(&args.out, write_corpus(std::slice::from_ref(&song)))?;
    if let Some(path) = &args.trace {
        write_file(path, pretty(&traces))?;
    }
    eprintln!(
        "wrote {} lines, {} notes to {}",
        song.lines.len(),
        song.note_count(),
        args.out.display()
    );
    Ok(())
}

pub fn export_midi(args: ExportArgs) -> Result<()> {
    let songs = read_songs(&args.corpus)?;
    let song = match &args.song {
        Some(id) => songs
            .iter()
            .find(|s| &s.id == id)
            .ok_or_else(|| CliError::new(Kind::Input, format!("no song with id {id:?}")))?,
        None => &songs[0],
    };
    write_file(&args.out, midi::export_midi(song)?)?;
    Ok(())
}

pub fn gradcheck(args: GradcheckArgs) -> Result<()> {
    let started = Instant::now();
    let (config, vocab, triples) = gradcheck_setup(args.hidden, args.max_vocab, args.seed)?;
    let model = MelodyModel::<f64>::new(config, architecture(args.arch), vocab, args.seed)?;
    let report = check_gradients(&model, &triples, args.eps, args.sample.map(|n| (n, args.seed)))?;
    let max = report.max_rel_error();
    let passed = max < args.tolerance;
    let summary = json!({
        "arch": model.arch.name(),
        "hidden": args.hidden,
        "vocab": [model.vocab.pitch.len(), model.vocab.duration.len(), model.vocab.syllable.len(), model.vocab.phonetic.len()],
        "triples": triples.len(),
        "parameters": model.params.num_elements(),
        "elements_checked": report.elements_checked(),
        "eps": args.eps,
        "tolerance": args.tolerance,
        "max_rel_error": max,
        "worst": report.worst(),
        "passed": passed,
        "seconds": started.elapsed().as_secs_f64(),
        "params": report.params,
    });
    match &args.out {
        Some(path) => write_file(path, pretty(&summary))?,
        None => println!("{}", pretty(&summary)),
    }
    if passed {
        Ok(())
    } else {
        Err(CliError::new(
            Kind::CheckFailed,
            format!("max relative error {max:.3e} is not below {:.1e}", args.tolerance),
        ))
    }
}
