use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kgdm_core::dataset::SplitName;
use kgdm_core::linking::pipeline::SpeakerScope;
use kgdm_core::linking::{FeatureSet, ModelKind};
use kgdm_core::ranking::{InputMode, NegativeMethod, TrainMode};

#[derive(Debug, Parser)]
#[command(
    name = "kgdm",
    version,
    about = "Dialogue management over a conversational knowledge graph"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a fictive organization and its graph export.
    GenOrg(GenOrgArgs),
    /// Translate raw annotated dialogues into the canonical dataset layout.
    Ingest(IngestArgs),
    /// Entity linking: train a classifier or evaluate a linker.
    #[command(subcommand)]
    Link(LinkCommand),
    /// Response ranking.
    #[command(subcommand)]
    Rank(RankCommand),
    /// Interactive session, on stdin or over HTTP.
    Chat(ChatArgs),
    /// Verify and summarize saved evaluation reports.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct GenOrgArgs {
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 40)]
    pub persons_min: usize,
    #[arg(long, default_value_t = 60)]
    pub persons_max: usize,
    #[arg(long, default_value_t = 30)]
    pub events_min: usize,
    #[arg(long, default_value_t = 50)]
    pub events_max: usize,
    /// Output directory; receives org.json and graph.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub root: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Where dialogues come from.
#[derive(Debug, Args, Clone)]
pub struct DataArgs {
    /// Canonical dataset directory.
    #[arg(long, conflicts_with = "synthetic")]
    pub data: Option<PathBuf>,
    /// Use the synthetic benchmark generated from this seed.
    #[arg(long)]
    pub synthetic: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum LinkCommand {
    /// Train a linking classifier and save it as a model file.
    Train(LinkTrainArgs),
    /// Score a baseline or classifier on annotated mentions.
    Eval(LinkEvalArgs),
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, default_value = "mlp", value_parser = parse_from_str::<ModelKind>)]
    pub model: ModelKind,
    #[arg(long, default_value = "string+graph", value_parser = parse_from_str::<FeatureSet>)]
    pub features: FeatureSet,
    /// `heuristic`, `none`, or `file:<path>`.
    #[arg(long, default_value = "heuristic")]
    pub coref: String,
    #[arg(long, default_value_t = 600)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Train without inverse-frequency class weights.
    #[arg(long)]
    pub no_class_weights: bool,
}

#[derive(Debug, Args)]
pub struct LinkTrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = "train", value_parser = parse_from_str::<SplitName>)]
    pub split: SplitName,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Baseline {
    StringEquality,
    Recency,
}

#[derive(Debug, Args)]
pub struct LinkEvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = "test", value_parser = parse_from_str::<SplitName>)]
    pub split: SplitName,
    /// Evaluate a heuristic baseline instead of a classifier.
    #[arg(long, value_enum, conflicts_with = "model_file")]
    pub baseline: Option<Baseline>,
    /// Evaluate a saved model instead of training one on the train split.
    #[arg(long)]
    pub model_file: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value = "user", value_parser = parse_from_str::<SpeakerScope>)]
    pub scope: SpeakerScope,
    /// Write the full report as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum RankCommand {
    /// Score ranking instances with a scorer and report recall@k and MRR.
    Eval(RankEvalArgs),
    /// Fine-tune a sidecar scorer on dataset ranking instances.
    Train(RankTrainArgs),
}

#[derive(Debug, Args, Clone)]
pub struct InstanceArgs {
    /// Dataset split; `test` for eval and `train` for training by default.
    #[arg(long, value_parser = parse_from_str::<SplitName>)]
    pub split: Option<SplitName>,
    #[arg(long, default_value = "subgraph+history", value_parser = parse_from_str::<InputMode>)]
    pub input_mode: InputMode,
    #[arg(long, default_value = "random", value_parser = parse_from_str::<NegativeMethod>)]
    pub negatives: NegativeMethod,
    /// Seed of the candidate pool.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = kgdm_core::ranking::DEFAULT_BUDGET)]
    pub budget: usize,
}

#[derive(Debug, Args)]
pub struct RankEvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub instances: InstanceArgs,
    /// `native`, `tcp:<host:port>`, or `cmd:<program> [args...]`.
    #[arg(long, default_value = "native")]
    pub scorer: String,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RankTrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub instances: InstanceArgs,
    #[arg(long)]
    pub scorer: String,
    #[arg(long, default_value = "pairwise", value_parser = parse_train_mode)]
    pub mode: TrainMode,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    #[arg(long, default_value_t = 5)]
    pub batch_size: usize,
}

#[derive(Debug, Args)]
pub struct ChatArgs {
    /// Serve HTTP on this port instead of reading stdin.
    #[arg(long)]
    pub serve: Option<u16>,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Organization JSON; the bundled fixture organization by default.
    #[arg(long)]
    pub org: Option<PathBuf>,
    /// Linker model file; the bundled model by default.
    #[arg(long)]
    pub model_file: Option<PathBuf>,
    #[arg(long, default_value = "native")]
    pub scorer: String,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
}

fn parse_from_str<T: std::str::FromStr<Err = String>>(s: &str) -> Result<T, String> {
    s.parse()
}

fn parse_train_mode(s: &str) -> Result<TrainMode, String> {
    match s {
        "pointwise" => Ok(TrainMode::Pointwise),
        "pairwise" => Ok(TrainMode::Pairwise),
        other => Err(format!(
            "unknown training mode `{other}` (expected pointwise or pairwise)"
        )),
    }
}
