//! `songwriter`: corpus preparation, training, evaluation, generation and
//! MIDI export from the command line.

mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "songwriter", version, about = "Lyrics-conditional melody composition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a seeded synthetic corpus.
    SynthCorpus(SynthArgs),
    /// Transpose, normalize and split a corpus; write the vocabulary.
    Prepare(PrepareArgs),
    /// Train a model and write a checkpoint.
    Train(TrainArgs),
    /// Score a checkpoint on a corpus.
    Evaluate(EvaluateArgs),
    /// Compose melodies for a lyrics file.
    Generate(GenerateArgs),
    /// Render one song of a corpus as a MIDI file.
    ExportMidi(ExportArgs),
    /// Compare analytic gradients of a tiny model against finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Arch {
    Songwriter,
    Seq2seq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Tf,
    Sampling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Policy {
    Greedy,
    Sample,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 100)]
    songs: usize,
    #[arg(long, default_value_t = 0.2)]
    one_to_many: f64,
    #[arg(long, default_value_t = 0.05)]
    rest_prob: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Debug, Args)]
struct PrepareArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Output directory for train/valid/test corpora and vocab.json.
    #[arg(long)]
    out: PathBuf,
    /// Train, valid and test fractions.
    #[arg(long, value_delimiter = ',', default_values_t = [0.9, 0.05, 0.05])]
    ratios: Vec<f64>,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long, value_enum, default_value_t = Arch::Songwriter)]
    arch: Arch,
    #[arg(long, default_value_t = 256)]
    hidden: usize,
    /// Embedding width for every input; the built-in widths when absent.
    #[arg(long)]
    emb: Option<usize>,
    /// Context-melody window in notes.
    #[arg(long, default_value_t = 40)]
    window: usize,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    valid: Option<PathBuf>,
    /// Vocabulary file; built from the training corpus when absent.
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Output checkpoint.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Per-epoch statistics as JSON lines.
    #[arg(long)]
    log: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    #[arg(long, default_value_t = 64)]
    batch: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 0.9999)]
    decay: f64,
    /// Global gradient-norm clip; 0 disables clipping.
    #[arg(long, default_value_t = 5.0)]
    clip: f64,
    /// Stop after this many epochs without validation improvement.
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Run on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Debug, Args)]
struct DecodeArgs {
    #[arg(long, value_enum, default_value_t = Policy::Sample)]
    policy: Policy,
    #[arg(long, default_value_t = 1.0)]
    temperature: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Tf)]
    mode: Mode,
    #[command(flatten)]
    decode: DecodeArgs,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Append a CSV row (with header if the file is new).
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    sequential: bool,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// UTF-8 text, one lyric sentence per line.
    #[arg(long)]
    lyrics: PathBuf,
    #[arg(long)]
    checkpoint: PathBuf,
    /// Corpus-format output.
    #[arg(long)]
    out: PathBuf,
    /// `surface<TAB>phonetic` lines; the built-in table when absent.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long, default_value = "generated")]
    id: String,
    #[command(flatten)]
    decode: DecodeArgs,
    /// Write per-line syllable indices and attention weights as JSON.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Song id; the first song when absent.
    #[arg(long)]
    song: Option<String>,
}

#[derive(Debug, Args)]
struct GradcheckArgs {
    #[arg(long, value_enum, default_value_t = Arch::Songwriter)]
    arch: Arch,
    #[arg(long, default_value_t = 8)]
    hidden: usize,
    #[arg(long, default_value_t = 12)]
    max_vocab: usize,
    #[arg(long, default_value_t = 1e-5)]
    eps: f64,
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
    /// Check this many random elements per parameter instead of all.
    #[arg(long)]
    sample: Option<usize>,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let result = match cli.command {
        Command::SynthCorpus(a) => commands::synth_corpus(a),
        Command::Prepare(a) => commands::prepare(a),
        Command::Train(a) => commands::train(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Generate(a) => commands::generate(a),
        Command::ExportMidi(a) => commands::export_midi(a),
        Command::Gradcheck(a) => commands::gradcheck(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.code())
        }
    }
}
