use std::path::PathBuf;

use afse_core::api::DEFAULT_SEED;
use afse_core::dataset::SplitSelection;
use afse_core::prompts::PromptStrategy;
use afse_core::selection::DEFAULT_K;
use afse_core::Strategy;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "afse",
    version,
    about = "Adaptive frame selection for promptable medical image segmentation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract features and composite scores for every frame.
    Score(ScoreCmd),
    /// Cluster composite scores and pick representative frames.
    Select(SelectCmd),
    /// Derive prompts from ground-truth masks for the representative frames.
    Prompts(PromptsCmd),
    /// Score predicted masks against ground truth with Dice and IoU.
    Eval(EvalCmd),
    /// Run the review service over a dataset directory.
    Serve(ServeCmd),
    /// Talk to a running review service.
    Remote(RemoteCmd),
}

/// Feature and weighting options shared by every scoring entry point.
#[derive(Debug, Clone, Args)]
pub struct ScoringArgs {
    /// Composite weights for B,C,E,H,S.
    #[arg(long, default_value = "0.2,0.2,0.2,0.2,0.2")]
    pub weights: String,
    /// Canny lower hysteresis threshold.
    #[arg(long, default_value_t = 50.0)]
    pub canny_low: f64,
    /// Canny upper hysteresis threshold.
    #[arg(long, default_value_t = 150.0)]
    pub canny_high: f64,
    /// Hue bins of the H-S histogram.
    #[arg(long, default_value_t = 32)]
    pub bins_h: usize,
    /// Saturation bins of the H-S histogram.
    #[arg(long, default_value_t = 32)]
    pub bins_s: usize,
    /// Min-max normalize each feature across the dataset before weighting.
    #[arg(long)]
    pub normalize_features: bool,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Directory of PNG/JPEG frames.
    #[arg(long)]
    pub input: PathBuf,
    /// Directory of ground-truth masks paired by file stem.
    #[arg(long)]
    pub masks: Option<PathBuf>,
    /// Reference frame id (defaults to the first frame).
    #[arg(long)]
    pub reference: Option<String>,
    /// Which part of the seeded train/validation split to process.
    #[arg(long, value_enum, default_value_t = SplitArg::All)]
    pub split: SplitArg,
    /// Output directory.
    #[arg(long, default_value = "afse-out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SelectionArgs {
    /// Number of representative frames.
    #[arg(long, default_value_t = DEFAULT_K as i64, allow_negative_numbers = true)]
    pub k: i64,
    /// Seed for clustering, random selection and prompt sampling.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Selection strategy.
    #[arg(long, value_enum, default_value_t = StrategyArg::Afse)]
    pub strategy: StrategyArg,
}

#[derive(Debug, Args)]
pub struct ScoreCmd {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub scoring: ScoringArgs,
}

#[derive(Debug, Args)]
pub struct SelectCmd {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub scoring: ScoringArgs,
    #[command(flatten)]
    pub selection: SelectionArgs,
}

#[derive(Debug, Args)]
pub struct PromptsCmd {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub scoring: ScoringArgs,
    #[command(flatten)]
    pub selection: SelectionArgs,
    /// Prompt type to derive.
    #[arg(long, value_enum, default_value_t = PromptArg::StandardPos)]
    pub prompt_strategy: PromptArg,
    /// Reuse the representatives of an existing selection manifest instead
    /// of running a selection.
    #[arg(long = "from-selection")]
    pub from_selection: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalCmd {
    /// Directory of predicted masks.
    #[arg(long)]
    pub pred: PathBuf,
    /// Directory of ground-truth masks.
    #[arg(long)]
    pub gt: PathBuf,
    /// Suffix stripped from prediction stems before pairing (e.g. `_pred`).
    #[arg(long)]
    pub pred_suffix: Option<String>,
    /// Output directory.
    #[arg(long, default_value = "afse-out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeCmd {
    /// Directory of PNG/JPEG frames.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Directory of ground-truth masks paired by file stem.
    #[arg(long)]
    pub masks: Option<PathBuf>,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Built review UI bundle to serve at `/`.
    #[arg(long)]
    pub ui: Option<PathBuf>,
    #[command(flatten)]
    pub scoring: ScoringArgs,
}

#[derive(Debug, Args)]
pub struct RemoteCmd {
    /// Base URL of the service.
    #[arg(long, default_value = "http://127.0.0.1:8080")]
    pub url: String,
    /// Write the response here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub action: RemoteAction,
}

#[derive(Debug, Subcommand)]
pub enum RemoteAction {
    /// Show session readiness and progress.
    Status,
    /// List frames in dataset order.
    Frames,
    /// Set the reference frame and print the recomputed scores.
    Reference {
        frame_id: String,
    },
    /// Print the scores for the current reference.
    Scores,
    /// Run a selection in the session.
    Select {
        #[command(flatten)]
        selection: SelectionArgs,
        /// Composite weights for B,C,E,H,S (session weights when omitted).
        #[arg(long)]
        weights: Option<String>,
    },
    /// Store a clinician prompt for a frame.
    Annotate {
        frame_id: String,
        /// `x,y,positive|negative`; repeatable.
        #[arg(long = "point")]
        points: Vec<String>,
        /// `xmin,ymin,xmax,ymax`, inclusive.
        #[arg(long)]
        bbox: Option<String>,
    },
    /// Export prompts for the latest selection, with stored annotations merged in.
    Export {
        #[arg(long, value_enum, default_value_t = PromptArg::StandardPos)]
        prompt_strategy: PromptArg,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    All,
    Train,
    Val,
}

impl From<SplitArg> for SplitSelection {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::All => SplitSelection::All,
            SplitArg::Train => SplitSelection::Train,
            SplitArg::Val => SplitSelection::Val,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Afse,
    Random,
    Uniform,
    AfseWoScorer,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Afse => Strategy::Afse,
            StrategyArg::Random => Strategy::Random,
            StrategyArg::Uniform => Strategy::Uniform,
            StrategyArg::AfseWoScorer => Strategy::AfseWoScorer,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PromptArg {
    StandardPos,
    RandomPos,
    SingleNeg,
    SinglePosNeg,
    FourPos,
    FourNeg,
    SinglePosTwoNeg,
    TwoPosFourNeg,
    Bbox,
}

impl From<PromptArg> for PromptStrategy {
    fn from(p: PromptArg) -> Self {
        match p {
            PromptArg::StandardPos => PromptStrategy::StandardPos,
            PromptArg::RandomPos => PromptStrategy::RandomPos,
            PromptArg::SingleNeg => PromptStrategy::SingleNeg,
            PromptArg::SinglePosNeg => PromptStrategy::SinglePosNeg,
            PromptArg::FourPos => PromptStrategy::FourPos,
            PromptArg::FourNeg => PromptStrategy::FourNeg,
            PromptArg::SinglePosTwoNeg => PromptStrategy::SinglePosTwoNeg,
            PromptArg::TwoPosFourNeg => PromptStrategy::TwoPosFourNeg,
            PromptArg::Bbox => PromptStrategy::BBox,
        }
    }
}
