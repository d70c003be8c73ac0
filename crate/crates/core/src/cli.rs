//! The `bse` command-line tool.
//!
//! Every subcommand reads and writes the library's file formats, logs line-oriented
//! `key=value` records to stderr and exits with 0 on success, 1 on a usage or
//! configuration error, 2 on a data or format error and 3 on a numerical failure.
//!
//! `train-embed` reads a `key=value` config file. Values are resolved in increasing
//! precedence: built-in defaults, the config file, `--set key=value` overrides, then
//! the dedicated flags (`--max-updates`, `--seed`).

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use ndarray::Axis;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{
    encode_corpus, init_params, load_checkpoint, parse_kv_text, save_checkpoint, train,
    EmbedModelParams, Hyper, Side, TrainConfig, TrainEvent, TRAIN_CONFIG_KEYS,
};
use crate::pipeline::{
    align_recover, build_negative_sets, filter_subsample, negative_set_file_name, random_negative_set,
    score_distribution_export, write_alignment_report, write_distribution_tsv, write_predictions,
    write_selection, NegativeSetSpec, ScoredPair,
};
use crate::similarity::{
    load_mlp, mlp_train, read_embeddings, read_scores_tsv, save_mlp, score_cross, score_pairs,
    write_embeddings, write_scores_tsv, CslsConfig, EmbeddingMatrix, LabeledPairs, Measure,
    MlpParams, MlpTrainConfig, PosteriorCombine, PosteriorResources, ScoringResources, DEGENERATE_NORM,
};
use crate::textprep::{
    bpe_decode, load_word_embeddings, mono_from_lines, parallel_from_lines, read_lines, BpeModel,
    Preprocess, Vocabulary,
};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "bse", version, about = "Bilingual sentence embeddings: training, scoring, alignment and corpus filtering")]
pub struct Cli {
    /// Worker threads for block-parallel scoring; results do not depend on it.
    #[arg(long, global = true, env = "BSE_THREADS", default_value_t = 1)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Learn, apply or undo byte pair encoding.
    #[command(subcommand)]
    Bpe(BpeCommand),
    /// Train the embedding model from a key=value config file.
    TrainEmbed(TrainEmbedArgs),
    /// Embed every line of a corpus with one encoder (EMB1 output).
    Embed(EmbedArgs),
    /// Score aligned line pairs, or all source×target combinations.
    Score(ScoreArgs),
    /// Train the MLP similarity classifier on positive and negative pairs.
    TrainMlp(TrainMlpArgs),
    /// Shuffle the target side of a parallel test set and recover the alignment.
    Align(AlignArgs),
    /// Keep the best-scored lines of a bitext up to a word budget.
    Filter(FilterArgs),
    /// Build graded negative sets from a scored corpus.
    NegSets(NegSetsArgs),
    /// Export sorted (rank, score) records for plotting.
    ScoreDist(ScoreDistArgs),
}

#[derive(Debug, Subcommand)]
pub enum BpeCommand {
    /// Learn merges jointly over all input files.
    Learn {
        /// Maximum number of merge operations.
        #[arg(long)]
        merges: usize,
        /// Lowercase text before learning.
        #[arg(long)]
        lowercase: bool,
        /// Output merges file.
        #[arg(short, long)]
        output: PathBuf,
        /// Training text files.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Segment text into BPE units (stdin to stdout unless paths are given).
    Apply {
        /// Merges file from `bpe learn`.
        #[arg(long)]
        model: PathBuf,
        /// Lowercase text before segmenting.
        #[arg(long)]
        lowercase: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
        input: Option<PathBuf>,
    },
    /// Join BPE units back into words (stdin to stdout unless paths are given).
    Decode {
        #[arg(short, long)]
        output: Option<PathBuf>,
        input: Option<PathBuf>,
    },
}

/// Keys accepted by `train-embed` configs besides the model/optimizer keys.
pub const DATA_CONFIG_KEYS: [&str; 6] = [
    "train_src",
    "train_tgt",
    "mono",
    "bpe_model",
    "word_embeddings",
    "lowercase",
];

/// Additional run-control keys for `train-embed`.
pub const RUN_CONFIG_KEYS: [&str; 1] = ["log_every"];

#[derive(Debug, Args)]
pub struct TrainEmbedArgs {
    /// Config file of key=value lines (model, optimizer and data keys).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory for vocab.txt, checkpoints, model.bse and train.log.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Override a config key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Override max_updates.
    #[arg(long)]
    pub max_updates: Option<u64>,
    /// Override seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Continue from this checkpoint; its update counter and schedule position are kept.
    #[arg(long)]
    pub resume: Option<PathBuf>,
}

/// How raw text becomes token ids.
#[derive(Debug, Args, Clone)]
pub struct TextArgs {
    /// Vocabulary file written by train-embed.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// BPE merges applied before lookup.
    #[arg(long)]
    pub bpe: Option<PathBuf>,
    /// Keep case (lowercasing is the default).
    #[arg(long)]
    pub keep_case: bool,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Encoder to use: source or target.
    #[arg(long)]
    pub side: Side,
    /// Corpus, one sentence per line.
    #[arg(long)]
    pub input: PathBuf,
    /// Output EMB1 file.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Sentences encoded per batch.
    #[arg(long, default_value_t = 256)]
    pub batch: usize,
    #[command(flatten)]
    pub text: TextArgs,
}

/// Inputs shared by every scoring command. `SRC`/`TGT` are EMB1 files for embedding
/// measures and raw text files for levenshtein and posterior.
#[derive(Debug, Args)]
pub struct MeasureArgs {
    /// cosine, euclidean, csls, mlp, levenshtein or posterior.
    #[arg(long)]
    pub measure: Measure,
    /// Neighbours in the CSLS penalty terms.
    #[arg(long, default_value_t = 10)]
    pub csls_k: usize,
    /// MLP parameters (required for --measure mlp).
    #[arg(long)]
    pub mlp_params: Option<PathBuf>,
    /// Model checkpoint for --measure posterior; repeat for a second direction.
    #[arg(long)]
    pub checkpoint: Vec<PathBuf>,
    /// Combination of several posterior models: sum or mean.
    #[arg(long, default_value = "sum")]
    pub combine: PosteriorCombine,
    /// Source rows per scoring block.
    #[arg(long, default_value_t = 256)]
    pub block_rows: usize,
    #[command(flatten)]
    pub text: TextArgs,
    pub src: PathBuf,
    pub tgt: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Score line i of SRC with line i of TGT (`index<TAB>score`).
    #[arg(long, conflicts_with = "cross")]
    pub pairs: bool,
    /// Score every SRC line against every TGT line (`src<TAB>tgt<TAB>score`).
    #[arg(long)]
    pub cross: bool,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub inputs: MeasureArgs,
}

#[derive(Debug, Args)]
pub struct TrainMlpArgs {
    /// Source embeddings of positive (parallel) pairs.
    #[arg(long)]
    pub pos_src: PathBuf,
    #[arg(long)]
    pub pos_tgt: PathBuf,
    /// Source embeddings of the corpus negatives are drawn from.
    #[arg(long)]
    pub neg_src: PathBuf,
    #[arg(long)]
    pub neg_tgt: PathBuf,
    /// Line indices (one per line) selecting negatives; all lines when omitted.
    #[arg(long)]
    pub neg_lines: Option<PathBuf>,
    /// Comma-separated hidden layer sizes.
    #[arg(long, default_value = "512,512", value_delimiter = ',')]
    pub hidden: Vec<usize>,
    /// Mini-batch updates.
    #[arg(long, default_value_t = 1000)]
    pub updates: usize,
    #[arg(long, default_value_t = 200)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output MLP1 file.
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    /// Seed of the target-side shuffle.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Error-rate report (stdout when omitted).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Per-source predictions, as original target line indices.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    #[command(flatten)]
    pub inputs: MeasureArgs,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// Pairwise scores (`index<TAB>score`).
    #[arg(long)]
    pub scores: PathBuf,
    /// Raw source text, for word counts.
    #[arg(long)]
    pub src_text: PathBuf,
    /// Raw target text, for word counts.
    #[arg(long)]
    pub tgt_text: PathBuf,
    /// Maximum number of counted words to keep.
    #[arg(long)]
    pub budget_words: usize,
    /// Side whose whitespace words count against the budget.
    #[arg(long, default_value = "target")]
    pub count_side: Side,
    /// Selected line indices, ascending.
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct NegSetsArgs {
    /// Pairwise scores (`index<TAB>score`).
    #[arg(long)]
    pub scores: PathBuf,
    /// Comma-separated, strictly increasing portion cuts in (0, 1].
    #[arg(long, default_value = "0.2,0.4,0.6,0.8,1.0", value_delimiter = ',')]
    pub cuts: Vec<f64>,
    /// Lines taken from the end of each portion.
    #[arg(long, default_value_t = 1000)]
    pub tail_lines: usize,
    /// Also write neg_random.txt with this many uniformly sampled lines.
    #[arg(long)]
    pub random: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Directory receiving one neg_<percent>.txt per cut.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScoreDistArgs {
    /// Pairwise scores (`index<TAB>score`).
    #[arg(long)]
    pub scores: PathBuf,
    /// Measure that produced the scores.
    #[arg(long)]
    pub measure: Measure,
    /// Map cosine scores from [-1, 1] to [0, 1].
    #[arg(long)]
    pub rescale: bool,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

/// Parses `args` (including the program name), runs the command and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    if cli.threads == 0 {
        return Err(Error::Config("--threads must be at least 1".into()));
    }
    match cli.command {
        Command::Bpe(cmd) => cmd_bpe(cmd),
        Command::TrainEmbed(args) => cmd_train_embed(args),
        Command::Embed(args) => cmd_embed(args),
        Command::Score(args) => cmd_score(args, cli.threads),
        Command::TrainMlp(args) => cmd_train_mlp(args),
        Command::Align(args) => cmd_align(args, cli.threads),
        Command::Filter(args) => cmd_filter(args),
        Command::NegSets(args) => cmd_neg_sets(args),
        Command::ScoreDist(args) => cmd_score_dist(args),
    }
}

fn log(fields: &[(&str, String)]) {
    let line: Vec<String> = fields.iter().map(|(k, v)| format!("{k}={v}")).collect();
    eprintln!("{}", line.join(" "));
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

/// Runs `write` against `path`, or stdout when `path` is `None`.
fn with_output<F>(path: Option<&Path>, write: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
{
    match path {
        Some(p) => {
            let mut f = create(p)?;
            write(&mut f).and_then(|_| f.flush()).map_err(|e| Error::io(p, e))
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock).and_then(|_| lock.flush()).map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn read_input(path: Option<&Path>) -> Result<String> {
    match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| Error::io(p, e)),
        None => {
            let mut s = String::new();
            std::io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| Error::io("<stdin>", e))?;
            Ok(s)
        }
    }
}

fn cmd_bpe(cmd: BpeCommand) -> Result<()> {
    match cmd {
        BpeCommand::Learn {
            merges,
            lowercase,
            output,
            inputs,
        } => {
            let mut lines = Vec::new();
            for path in &inputs {
                for line in read_lines(path)? {
                    lines.push(if lowercase { line.to_lowercase() } else { line });
                }
            }
            let model = BpeModel::learn(lines.iter().map(String::as_str), merges)?;
            model.save(&output)?;
            log(&[
                ("event", "bpe_learn".into()),
                ("merges", model.merges().len().to_string()),
                ("output", output.display().to_string()),
            ]);
            Ok(())
        }
        BpeCommand::Apply {
            model,
            lowercase,
            output,
            input,
        } => {
            let model = BpeModel::load(&model)?;
            let text = read_input(input.as_deref())?;
            with_output(output.as_deref(), |out| {
                for line in text.lines() {
                    let line = if lowercase { line.to_lowercase() } else { line.to_string() };
                    writeln!(out, "{}", model.apply(&line).join(" "))?;
                }
                Ok(())
            })
        }
        BpeCommand::Decode { output, input } => {
            let text = read_input(input.as_deref())?;
            with_output(output.as_deref(), |out| {
                for line in text.lines() {
                    let units: Vec<&str> = line.split(' ').filter(|u| !u.is_empty()).collect();
                    writeln!(out, "{}", bpe_decode(&units))?;
                }
                Ok(())
            })
        }
    }
}

/// A parsed `train-embed` configuration: model/optimizer keys plus data paths.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub train_src: PathBuf,
    pub train_tgt: PathBuf,
    /// Monolingual text in the decoder language.
    pub mono: Option<PathBuf>,
    pub bpe_model: Option<PathBuf>,
    pub word_embeddings: Option<PathBuf>,
    pub lowercase: bool,
    pub log_every: u64,
}

impl RunConfig {
    /// Every key a config file may contain.
    pub fn documented_keys() -> Vec<&'static str> {
        TRAIN_CONFIG_KEYS
            .iter()
            .chain(DATA_CONFIG_KEYS.iter())
            .chain(RUN_CONFIG_KEYS.iter())
            .copied()
            .collect()
    }

    /// Applies `pairs` in order over the defaults. Relative paths resolve against
    /// `base`.
    pub fn from_pairs(pairs: &[(String, String)], base: &Path) -> Result<Self> {
        let mut train = TrainConfig::default();
        let mut train_src = None;
        let mut train_tgt = None;
        let mut mono = None;
        let mut bpe_model = None;
        let mut word_embeddings = None;
        let mut lowercase = true;
        let mut log_every = 100;
        let path = |v: &str| base.join(v);
        for (k, v) in pairs {
            match k.as_str() {
                "train_src" => train_src = Some(path(v)),
                "train_tgt" => train_tgt = Some(path(v)),
                "mono" => mono = Some(path(v)),
                "bpe_model" => bpe_model = Some(path(v)),
                "word_embeddings" => word_embeddings = Some(path(v)),
                "lowercase" => {
                    lowercase = v
                        .parse()
                        .map_err(|_| Error::Config(format!("lowercase: expected true or false, got {v:?}")))?
                }
                "log_every" => {
                    log_every = v
                        .parse()
                        .map_err(|_| Error::Config(format!("log_every: cannot parse {v:?}")))?
                }
                _ => train.set(k, v)?,
            }
        }
        train.validate()?;
        if log_every == 0 {
            return Err(Error::Config("log_every must be at least 1".into()));
        }
        Ok(Self {
            train,
            train_src: train_src.ok_or_else(|| Error::Config("config is missing train_src".into()))?,
            train_tgt: train_tgt.ok_or_else(|| Error::Config("config is missing train_tgt".into()))?,
            mono,
            bpe_model,
            word_embeddings,
            lowercase,
            log_every,
        })
    }
}

fn split_override(s: &str) -> Result<(String, String)> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {s:?}")))
}

fn cmd_train_embed(args: TrainEmbedArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| Error::io(&args.config, e))?;
    let mut pairs = parse_kv_text(&text, &args.config.display().to_string()).map_err(|e| match e {
        Error::Parse { .. } => Error::Config(e.to_string()),
        e => e,
    })?;
    for o in &args.overrides {
        pairs.push(split_override(o)?);
    }
    if let Some(n) = args.max_updates {
        pairs.push(("max_updates".into(), n.to_string()));
    }
    if let Some(s) = args.seed {
        pairs.push(("seed".into(), s.to_string()));
    }
    let base = args.config.parent().unwrap_or(Path::new("."));
    let cfg = RunConfig::from_pairs(&pairs, base)?;

    let pre = Preprocess {
        lowercase: cfg.lowercase,
        max_len: cfg.train.max_len,
        bpe: cfg.bpe_model.as_ref().map(BpeModel::load).transpose()?,
    };
    let src_lines = read_lines(&cfg.train_src)?;
    let tgt_lines = read_lines(&cfg.train_tgt)?;
    let mono_lines = cfg.mono.as_ref().map(read_lines).transpose()?.unwrap_or_default();

    // One vocabulary over everything the model will see.
    let tokenized: Vec<Vec<String>> = src_lines
        .iter()
        .chain(&tgt_lines)
        .chain(&mono_lines)
        .map(|l| pre.tokenize(l))
        .collect();
    let vocab = Vocabulary::build(tokenized.iter().map(Vec::as_slice));
    drop(tokenized);

    let parallel = parallel_from_lines(&src_lines, &tgt_lines, &pre, &vocab).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!(
            "{} / {}: {msg}",
            cfg.train_src.display(),
            cfg.train_tgt.display()
        )),
        e => e,
    })?;
    let mono = mono_from_lines(&mono_lines, &pre, &vocab);

    std::fs::create_dir_all(&args.out_dir).map_err(|e| Error::io(&args.out_dir, e))?;
    let vocab_path = args.out_dir.join("vocab.txt");
    vocab.save(&vocab_path)?;
    let hash = vocab.hash();

    let hyper = Hyper {
        hidden_size: cfg.train.hidden_size,
        emb_size: cfg.train.emb_size,
        vocab_size: vocab.len(),
        direction: cfg.train.direction,
    };
    let (params, start) = match &args.resume {
        Some(path) => {
            let ck = load_checkpoint(path, Some(&hash))?;
            if ck.params.hyper != hyper {
                return Err(Error::Config(format!(
                    "{} has hyperparameters {:?}, config implies {:?}",
                    path.display(),
                    ck.params.hyper,
                    hyper
                )));
            }
            (ck.params, ck.updates)
        }
        None => {
            let table = match &cfg.word_embeddings {
                Some(p) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(cfg.train.seed ^ 0x5_eed0_fe3b);
                    Some(load_word_embeddings(p, &vocab, &mut rng)?)
                }
                None => None,
            };
            (init_params(hyper, cfg.train.seed, table.as_ref())?, 0)
        }
    };
    log(&[
        ("event", "train_start".into()),
        ("pairs", parallel.len().to_string()),
        ("mono", mono.len().to_string()),
        ("vocab", vocab.len().to_string()),
        ("direction", cfg.train.direction.to_string()),
        ("start_update", start.to_string()),
        ("max_updates", cfg.train.max_updates.to_string()),
    ]);

    let log_path = args.out_dir.join("train.log");
    let mut train_log = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&log_path)
        .map_err(|e| Error::io(&log_path, e))?;
    let started = Instant::now();
    let mut window = (0.0, 0u64);
    let out_dir = args.out_dir.clone();
    let log_every = cfg.log_every;
    let (params, updates) = train(&parallel, &mono, &cfg.train, params, start, &mut |event| {
        match event {
            TrainEvent::Step { updates, stats } => {
                window.0 += stats.loss;
                window.1 += 1;
                if updates % log_every == 0 {
                    let line = format!(
                        "update={updates} lr={} loss={:.6} grad_norm={:.4} wall_s={:.2}",
                        stats.lr,
                        window.0 / window.1 as f64,
                        stats.grad_norm,
                        started.elapsed().as_secs_f64()
                    );
                    eprintln!("{line}");
                    writeln!(train_log, "{line}").map_err(|e| Error::io(&log_path, e))?;
                    window = (0.0, 0);
                }
            }
            TrainEvent::Checkpoint { updates, params } => {
                let path = out_dir.join(format!("checkpoint-{updates:08}.bse"));
                save_checkpoint(params, &hash, updates, &path)?;
                log(&[("event", "checkpoint".into()), ("path", path.display().to_string())]);
            }
        }
        Ok(())
    })?;
    let final_path = args.out_dir.join("model.bse");
    save_checkpoint(&params, &hash, updates, &final_path)?;
    log(&[
        ("event", "train_done".into()),
        ("updates", updates.to_string()),
        ("checkpoint", final_path.display().to_string()),
        ("vocab", vocab_path.display().to_string()),
    ]);
    Ok(())
}

fn preprocess(text: &TextArgs) -> Result<Preprocess> {
    Ok(Preprocess {
        lowercase: !text.keep_case,
        max_len: usize::MAX,
        bpe: text.bpe.as_ref().map(BpeModel::load).transpose()?,
    })
}

fn require_vocab(text: &TextArgs, what: &str) -> Result<Vocabulary> {
    let path = text
        .vocab
        .as_ref()
        .ok_or_else(|| Error::Config(format!("{what} requires --vocab")))?;
    Vocabulary::load(path)
}

/// Token ids of every line; an empty line is an error naming its line number.
fn tokenize_file(path: &Path, pre: &Preprocess, vocab: &Vocabulary) -> Result<Vec<Vec<u32>>> {
    read_lines(path)?
        .iter()
        .enumerate()
        .map(|(i, line)| {
            let toks = pre.tokenize(line);
            if toks.is_empty() {
                return Err(Error::parse(path, i + 1, "empty line cannot be embedded"));
            }
            Ok(vocab.encode(&toks))
        })
        .collect()
}

fn cmd_embed(args: EmbedArgs) -> Result<()> {
    if args.batch == 0 {
        return Err(Error::Config("--batch must be at least 1".into()));
    }
    let vocab = require_vocab(&args.text, "embed")?;
    let pre = preprocess(&args.text)?;
    let ck = load_checkpoint(&args.checkpoint, Some(&vocab.hash()))?;
    let ids = tokenize_file(&args.input, &pre, &vocab)?;
    let seqs: Vec<&[u32]> = ids.iter().map(Vec::as_slice).collect();
    let m = EmbeddingMatrix::new(encode_corpus(&ck.params, &seqs, args.side, args.batch)?);
    write_embeddings(&args.output, &m)?;
    log(&[
        ("event", "embed".into()),
        ("rows", m.n().to_string()),
        ("dim", m.dim().to_string()),
        ("output", args.output.display().to_string()),
    ]);
    Ok(())
}

/// Everything a measure might read from disk, owned.
#[derive(Default)]
struct Loaded {
    src_emb: Option<EmbeddingMatrix>,
    tgt_emb: Option<EmbeddingMatrix>,
    src_text: Option<Vec<String>>,
    tgt_text: Option<Vec<String>>,
    mlp: Option<MlpParams>,
    models: Vec<EmbedModelParams>,
    src_tokens: Vec<Vec<u32>>,
    tgt_tokens: Vec<Vec<u32>>,
}

impl Loaded {
    /// Checks that `measure` has what it needs before reading anything.
    fn load(args: &MeasureArgs) -> Result<Self> {
        let measure = args.measure;
        match measure {
            Measure::Mlp if args.mlp_params.is_none() => {
                return Err(Error::Config("--measure mlp requires --mlp-params".into()))
            }
            Measure::Posterior if args.checkpoint.is_empty() => {
                return Err(Error::Config("--measure posterior requires --checkpoint".into()))
            }
            Measure::Posterior if args.text.vocab.is_none() => {
                return Err(Error::Config("--measure posterior requires --vocab".into()))
            }
            Measure::Csls if args.csls_k == 0 => {
                return Err(Error::Config("--csls-k must be at least 1".into()))
            }
            _ => {}
        }
        if args.block_rows == 0 {
            return Err(Error::Config("--block-rows must be at least 1".into()));
        }
        let mut loaded = Loaded::default();
        match measure {
            Measure::Cosine | Measure::Euclidean | Measure::Csls | Measure::Mlp => {
                let src = read_embeddings(&args.src)?;
                let tgt = read_embeddings(&args.tgt)?;
                let degenerate = src.norms().iter().chain(tgt.norms()).filter(|&&n| n < DEGENERATE_NORM).count();
                if degenerate > 0 && measure != Measure::Euclidean {
                    log(&[
                        ("warning", "degenerate_embeddings".into()),
                        ("rows", degenerate.to_string()),
                        ("note", "zero-norm rows score cosine 0".into()),
                    ]);
                }
                loaded.src_emb = Some(src);
                loaded.tgt_emb = Some(tgt);
                if measure == Measure::Mlp {
                    loaded.mlp = Some(load_mlp(args.mlp_params.as_ref().expect("checked"))?);
                }
            }
            Measure::Levenshtein => {
                loaded.src_text = Some(read_lines(&args.src)?);
                loaded.tgt_text = Some(read_lines(&args.tgt)?);
            }
            Measure::Posterior => {
                let vocab = require_vocab(&args.text, "--measure posterior")?;
                let pre = preprocess(&args.text)?;
                let hash = vocab.hash();
                for path in &args.checkpoint {
                    loaded.models.push(load_checkpoint(path, Some(&hash))?.params);
                }
                loaded.src_tokens = tokenize_file(&args.src, &pre, &vocab)?;
                loaded.tgt_tokens = tokenize_file(&args.tgt, &pre, &vocab)?;
            }
        }
        Ok(loaded)
    }

    fn resources<'a>(&'a self, args: &MeasureArgs) -> ScoringResources<'a> {
        ScoringResources {
            src_emb: self.src_emb.as_ref(),
            tgt_emb: self.tgt_emb.as_ref(),
            csls: CslsConfig { k: args.csls_k },
            mlp: self.mlp.as_ref(),
            src_text: self.src_text.as_deref(),
            tgt_text: self.tgt_text.as_deref(),
            posterior: (!self.models.is_empty()).then_some(PosteriorResources {
                models: &self.models,
                src_tokens: &self.src_tokens,
                tgt_tokens: &self.tgt_tokens,
                combine: args.combine,
            }),
        }
    }

    /// Reorders the target side so that new position `k` holds old target `perm[k]`.
    fn permute_targets(&mut self, perm: &[usize]) {
        if let Some(m) = &self.tgt_emb {
            self.tgt_emb = Some(EmbeddingMatrix::new(m.data().select(Axis(0), perm)));
        }
        if let Some(t) = &self.tgt_text {
            self.tgt_text = Some(perm.iter().map(|&i| t[i].clone()).collect());
        }
        if !self.tgt_tokens.is_empty() {
            self.tgt_tokens = perm.iter().map(|&i| self.tgt_tokens[i].clone()).collect();
        }
    }

    fn target_count(&self) -> usize {
        self.tgt_emb
            .as_ref()
            .map(EmbeddingMatrix::n)
            .or(self.tgt_text.as_ref().map(Vec::len))
            .unwrap_or(self.tgt_tokens.len())
    }

    fn source_count(&self) -> usize {
        self.src_emb
            .as_ref()
            .map(EmbeddingMatrix::n)
            .or(self.src_text.as_ref().map(Vec::len))
            .unwrap_or(self.src_tokens.len())
    }
}

fn cmd_score(args: ScoreArgs, threads: usize) -> Result<()> {
    if !args.pairs && !args.cross {
        return Err(Error::Config("choose --pairs or --cross".into()));
    }
    let loaded = Loaded::load(&args.inputs)?;
    let res = loaded.resources(&args.inputs);
    if args.pairs {
        let scores = score_pairs(args.inputs.measure, &res)?;
        with_output(args.output.as_deref(), |out| write_scores_tsv(out, &scores))?;
        log(&[
            ("event", "score".into()),
            ("measure", args.inputs.measure.to_string()),
            ("pairs", scores.len().to_string()),
        ]);
        return Ok(());
    }
    let write_err = |e: std::io::Error| match &args.output {
        Some(p) => Error::io(p, e),
        None => Error::io("<stdout>", e),
    };
    let mut sink: Box<dyn Write> = match &args.output {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(std::io::stdout())),
    };
    score_cross(args.inputs.measure, &res, args.inputs.block_rows, threads, |start, block| {
        for (k, row) in block.outer_iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                writeln!(sink, "{}\t{j}\t{v:.6}", start + k).map_err(write_err)?;
            }
        }
        Ok(())
    })?;
    sink.flush().map_err(write_err)?;
    log(&[
        ("event", "score".into()),
        ("measure", args.inputs.measure.to_string()),
        ("rows", loaded.source_count().to_string()),
        ("cols", loaded.target_count().to_string()),
    ]);
    Ok(())
}

/// Selects rows listed in a one-index-per-line file.
fn select_rows(m: &EmbeddingMatrix, lines: &Path) -> Result<EmbeddingMatrix> {
    let mut idx = Vec::new();
    for (i, l) in read_lines(lines)?.iter().enumerate() {
        if l.trim().is_empty() {
            continue;
        }
        let v: usize = l
            .trim()
            .parse()
            .map_err(|_| Error::parse(lines, i + 1, format!("not a line index: {l:?}")))?;
        if v >= m.n() {
            return Err(Error::parse(lines, i + 1, format!("line {v} is outside the {}-row corpus", m.n())));
        }
        idx.push(v);
    }
    Ok(EmbeddingMatrix::new(m.data().select(Axis(0), &idx)))
}

fn cmd_train_mlp(args: TrainMlpArgs) -> Result<()> {
    let config = MlpTrainConfig {
        hidden: args.hidden.clone(),
        learning_rate: args.lr,
        batch_size: args.batch_size,
        max_updates: args.updates,
        seed: args.seed,
        ..MlpTrainConfig::default()
    };
    config.validate()?;
    let mut neg_src = read_embeddings(&args.neg_src)?;
    let mut neg_tgt = read_embeddings(&args.neg_tgt)?;
    if let Some(lines) = &args.neg_lines {
        neg_src = select_rows(&neg_src, lines)?;
        neg_tgt = select_rows(&neg_tgt, lines)?;
    }
    let pairs = LabeledPairs::new(
        read_embeddings(&args.pos_src)?,
        read_embeddings(&args.pos_tgt)?,
        neg_src,
        neg_tgt,
    )?;
    let params = mlp_train(&pairs, &config)?;
    save_mlp(&params, &args.output)?;
    log(&[
        ("event", "train_mlp".into()),
        ("positives", pairs.pos_src.n().to_string()),
        ("negatives", pairs.neg_src.n().to_string()),
        ("updates", args.updates.to_string()),
        ("output", args.output.display().to_string()),
    ]);
    Ok(())
}

fn cmd_align(args: AlignArgs, threads: usize) -> Result<()> {
    let mut loaded = Loaded::load(&args.inputs)?;
    let n = loaded.source_count();
    if n != loaded.target_count() {
        return Err(Error::Format(format!(
            "alignment test set needs equal sides, got {n} sources and {} targets",
            loaded.target_count()
        )));
    }
    if n == 0 {
        return Err(Error::Format("empty alignment test set".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let perm = rand::seq::index::sample(&mut rng, n, n).into_vec();
    loaded.permute_targets(&perm);
    // Source i's translation now sits at the position k with perm[k] = i.
    let mut truth = vec![0; n];
    for (k, &orig) in perm.iter().enumerate() {
        truth[orig] = k;
    }
    let res = loaded.resources(&args.inputs);
    let mut result = align_recover(args.inputs.measure, &res, &truth, args.inputs.block_rows, threads)?;
    // Report predictions as original target line numbers.
    for p in &mut result.src_predictions {
        *p = perm[*p];
    }
    with_output(args.output.as_deref(), |out| write_alignment_report(out, &result))?;
    if let Some(path) = &args.predictions {
        with_output(Some(path), |out| write_predictions(out, &result))?;
    }
    log(&[
        ("event", "align".into()),
        ("measure", args.inputs.measure.to_string()),
        ("sentences", n.to_string()),
        ("src2tgt", format!("{:.6}", result.src_to_tgt_error)),
        ("tgt2src", format!("{:.6}", result.tgt_to_src_error)),
        ("average", format!("{:.6}", result.average_error)),
    ]);
    Ok(())
}

fn cmd_filter(args: FilterArgs) -> Result<()> {
    let scores = read_scores_tsv(&args.scores)?;
    let src = read_lines(&args.src_text)?;
    let tgt = read_lines(&args.tgt_text)?;
    if src.len() != scores.len() || tgt.len() != scores.len() {
        return Err(Error::Format(format!(
            "{} scores but {} source and {} target lines",
            scores.len(),
            src.len(),
            tgt.len()
        )));
    }
    let pairs: Vec<ScoredPair> = scores
        .iter()
        .enumerate()
        .map(|(i, &score)| ScoredPair {
            line_index: i,
            score,
            src_word_count: src[i].split_whitespace().count(),
            tgt_word_count: tgt[i].split_whitespace().count(),
        })
        .collect();
    let sel = filter_subsample(&pairs, args.budget_words, args.count_side);
    with_output(Some(&args.output), |out| write_selection(out, &sel.lines))?;
    log(&[
        ("event", "filter".into()),
        ("lines_kept", sel.lines.len().to_string()),
        ("words_kept", sel.words_kept.to_string()),
        ("budget", sel.budget.to_string()),
        ("count_side", format!("{:?}", args.count_side).to_lowercase()),
    ]);
    Ok(())
}

fn cmd_neg_sets(args: NegSetsArgs) -> Result<()> {
    let spec = NegativeSetSpec {
        portion_cuts: args.cuts.clone(),
        tail_lines: args.tail_lines,
    };
    spec.validate()?;
    let scores = read_scores_tsv(&args.scores)?;
    let pairs: Vec<ScoredPair> = scores
        .iter()
        .enumerate()
        .map(|(i, &score)| ScoredPair {
            line_index: i,
            score,
            src_word_count: 0,
            tgt_word_count: 0,
        })
        .collect();
    let sets = build_negative_sets(&pairs, &spec)?;
    std::fs::create_dir_all(&args.out_dir).map_err(|e| Error::io(&args.out_dir, e))?;
    for set in &sets {
        let path = args.out_dir.join(negative_set_file_name(set.cut));
        with_output(Some(&path), |out| write_selection(out, &set.lines))?;
        log(&[
            ("event", "neg_set".into()),
            ("cut", set.cut.to_string()),
            ("lines", set.lines.len().to_string()),
            ("path", path.display().to_string()),
        ]);
    }
    if let Some(count) = args.random {
        let lines = random_negative_set(scores.len(), count, args.seed)?;
        let path = args.out_dir.join("neg_random.txt");
        with_output(Some(&path), |out| write_selection(out, &lines))?;
        log(&[
            ("event", "neg_set".into()),
            ("cut", "random".into()),
            ("lines", lines.len().to_string()),
            ("path", path.display().to_string()),
        ]);
    }
    Ok(())
}

fn cmd_score_dist(args: ScoreDistArgs) -> Result<()> {
    let scores = read_scores_tsv(&args.scores)?;
    let records = score_distribution_export(&scores, args.measure, args.rescale);
    with_output(args.output.as_deref(), |out| write_distribution_tsv(out, &records))
}
