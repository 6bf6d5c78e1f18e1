use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

mod commands;

#[derive(Parser)]
#[command(name = "forge", version, about = "Build, serve and score lexical-decision vocabulary tests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count accepted lemmas in annotated corpora and drop jargon.
    Lexicon(LexiconArgs),
    /// Remove words that look like two-part compounds.
    Decompound(DecompoundArgs),
    /// Sample validated pseudowords from a letter n-gram model.
    Generate(GenerateArgs),
    /// Validate a supplied pseudoword list.
    Validate(ValidateArgs),
    /// Fit real-word frequency targets from reference items.
    Target(TargetArgs),
    /// Pair real words with pseudowords and export a test.
    Assemble(AssembleArgs),
    /// Run every stage from corpus to test.
    Build(BuildArgs),
    /// Score finished sessions from a service log.
    Score(ScoreArgs),
    /// Reliability and correlation statistics over score reports.
    Stats(StatsArgs),
    /// Administer tests over HTTP.
    Serve(ServeArgs),
}

#[derive(Args)]
pub struct CorpusInput {
    #[arg(long = "lang")]
    pub language: String,
    /// CoNLL-U (`.conllu`) or four-column TSV files.
    #[arg(long = "corpus", required = true, num_args = 1..)]
    pub corpora: Vec<PathBuf>,
    /// Word lists of the language; a lemma must appear in one of them.
    #[arg(long = "wordlist")]
    pub word_lists: Vec<PathBuf>,
    #[arg(long, default_value_t = 95.0)]
    pub jargon_percentile: f64,
    /// Universal POS tags to accept (PROPN is always refused).
    #[arg(long = "pos", value_delimiter = ',', default_value = "NOUN")]
    pub pos: Vec<String>,
}

#[derive(Args)]
pub struct LexiconArgs {
    #[command(flatten)]
    pub input: CorpusInput,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write every accepted lemma, before the jargon cut.
    #[arg(long)]
    pub accepted_out: Option<PathBuf>,
}

#[derive(Args)]
pub struct DecompoundArgs {
    #[arg(long)]
    pub lexicon: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Keep every word (for scripts without compounding, e.g. Chinese).
    #[arg(long)]
    pub disable: bool,
    #[arg(long, default_value_t = 4)]
    pub max_ngram: usize,
    #[arg(long, default_value_t = 3)]
    pub min_segment: usize,
    /// Write the trained splitter as JSON.
    #[arg(long)]
    pub model_out: Option<PathBuf>,
    /// Write the removed words with their splits.
    #[arg(long)]
    pub removed_out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ValidatorInput {
    /// Generation lexicon: length bounds, real-word and fuzzy checks.
    #[arg(long)]
    pub lexicon: PathBuf,
    /// Further lexicons whose words count as real.
    #[arg(long = "known")]
    pub known: Vec<PathBuf>,
    #[arg(long = "wordlist")]
    pub word_lists: Vec<PathBuf>,
    /// Splitter JSON from `decompound --model-out`; trained on the
    /// lexicon when absent.
    #[arg(long)]
    pub splitter: Option<PathBuf>,
    #[arg(long)]
    pub no_compound: bool,
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    /// `character<TAB>letters` table for character scripts.
    #[arg(long)]
    pub translit: Option<PathBuf>,
}

#[derive(Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub validator: ValidatorInput,
    #[arg(long, default_value_t = 1_000)]
    pub count: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000_000)]
    pub max_attempts: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Write the n-gram model as JSON.
    #[arg(long)]
    pub model_out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub validator: ValidatorInput,
    /// JSON list of strings or candidates, or a text file with one per line.
    #[arg(long)]
    pub candidates: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct TargetArgs {
    /// `LANG=PATH` reference item list, one word per line.
    #[arg(long = "reference", required = true)]
    pub references: Vec<String>,
    /// `LANG=PATH` lexicon the reference items are looked up in.
    #[arg(long = "lexicon", required = true)]
    pub lexicons: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct TargetChoice {
    /// Targets JSON from `forge target`, used with `--lang`.
    #[arg(long)]
    pub target: Option<PathBuf>,
    #[arg(long = "lang")]
    pub language: Option<String>,
    /// Reference item list for a single-language fit.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long, requires = "sigma")]
    pub mu: Option<f64>,
    #[arg(long, requires = "mu")]
    pub sigma: Option<f64>,
}

#[derive(Args)]
pub struct AssembleArgs {
    /// Generation lexicon real words are drawn from.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Lexicon for reference lookups (defaults to `--lexicon`).
    #[arg(long)]
    pub frequency_lexicon: Option<PathBuf>,
    /// Validated candidates (`generate` or `validate` output).
    #[arg(long)]
    pub candidates: Option<PathBuf>,
    /// Previously matched pairs; skips selection and pairing.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    #[command(flatten)]
    pub target: TargetChoice,
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    #[arg(long)]
    pub translit: Option<PathBuf>,
    /// Real words to draw; defaults to the number of candidates.
    #[arg(long)]
    pub real_words: Option<usize>,
    #[arg(long, default_value_t = 500)]
    pub keep: usize,
    #[arg(long, default_value_t = 60)]
    pub items: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub pairs_out: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub input: CorpusInput,
    /// Reference items looked up in the accepted lexicon.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long, requires = "sigma", conflicts_with = "reference")]
    pub mu: Option<f64>,
    #[arg(long, requires = "mu")]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub translit: Option<PathBuf>,
    #[arg(long)]
    pub no_compound: bool,
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    #[arg(long, default_value_t = 1_000)]
    pub count: usize,
    #[arg(long, default_value_t = 500)]
    pub keep: usize,
    #[arg(long, default_value_t = 60)]
    pub items: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Write the run summary as JSON.
    #[arg(long)]
    pub summary_out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ScoreArgs {
    /// Service event log (JSON lines).
    #[arg(long)]
    pub sessions: PathBuf,
    /// Test set JSON; its file stem is the test id used by the service.
    #[arg(long = "test", required = true)]
    pub tests: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the reports as JSON.
    #[arg(long)]
    pub json_out: Option<PathBuf>,
    /// Also score sessions that never finished, over the trials they reached.
    #[arg(long)]
    pub include_unfinished: bool,
}

#[derive(Args)]
pub struct StatsArgs {
    #[arg(long = "reports", required = true)]
    pub reports: Vec<PathBuf>,
    /// `tested,native,distance` CSV.
    #[arg(long)]
    pub distances: Option<PathBuf>,
    #[arg(long)]
    pub exclude_native: bool,
    /// CSV with a `session_id` column and numeric columns (e.g. another
    /// test's score or a self-report) to correlate with accuracy.
    #[arg(long)]
    pub covariates: Option<PathBuf>,
}

#[derive(Args)]
pub struct ServeArgs {
    #[arg(long, env = "FORGE_LISTEN", default_value = "127.0.0.1:8080")]
    pub listen: std::net::SocketAddr,
    /// Holds `tests/*.json` and the `events.jsonl` log.
    #[arg(long, env = "FORGE_DATA_DIR")]
    pub data_dir: PathBuf,
    #[arg(long, env = "FORGE_DISPLAY_MS", default_value_t = 2_000)]
    pub display_ms: u64,
    #[arg(long, env = "FORGE_GRACE_MS", default_value_t = 1_500)]
    pub grace_ms: u64,
    #[arg(long, env = "FORGE_SESSION_TTL_MS", default_value_t = 7_200_000)]
    pub session_ttl_ms: u64,
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Lexicon(a) => commands::lexicon(a),
        Command::Decompound(a) => commands::decompound(a),
        Command::Generate(a) => commands::generate(a),
        Command::Validate(a) => commands::validate(a),
        Command::Target(a) => commands::target(a),
        Command::Assemble(a) => commands::assemble(a),
        Command::Build(a) => commands::build(a),
        Command::Score(a) => commands::score(a),
        Command::Stats(a) => commands::stats(a),
        Command::Serve(a) => commands::serve(a),
    }
}
