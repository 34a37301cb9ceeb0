use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "imbdepth",
    version,
    about = "Generate imbalanced synthetic domains, train MLPs and run depth experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write dataset CSVs and JSON manifests.
    Generate {
        #[command(subcommand)]
        family: GenerateFamily,
    },
    /// Train one network on a dataset CSV.
    Train(TrainArgs),
    /// Run an experiment grid from a config file or a figure preset.
    Experiment(ExperimentArgs),
    /// Summarise a results file as tables and plot-ready CSV.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct GenerateCommon {
    /// Seed of the generator (required; there is no time-based default).
    #[arg(long)]
    pub seed: u64,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Write the family's balanced test set for the given level instead of a
    /// training set.
    #[arg(long)]
    pub test: bool,
    /// Rows per sub-interval, class or subconcept of a test set.
    #[arg(long, requires = "test")]
    pub per_unit: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum GenerateFamily {
    /// Alternating-interval domains on [0, 1].
    Backbone {
        /// Concept complexity, 1..=5.
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
        c: Option<u8>,
        /// Size level, 1..=5.
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
        s: Option<u8>,
        /// Balance level, 1..=5 (5 is balanced).
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
        b: Option<u8>,
        /// Every (c, s, b) combination.
        #[arg(long, conflicts_with_all = ["c", "s", "b"])]
        all: bool,
        #[command(flatten)]
        common: GenerateCommon,
    },
    /// Two 5-D Gaussians drifting apart with the overlap level.
    Overlap {
        /// Overlap level k, 1..=10 (1 is complete overlap).
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=10))]
        level: Option<u8>,
        /// Fraction of rows in the minority class.
        #[arg(long)]
        minority_frac: Option<f64>,
        /// Total training rows.
        #[arg(long, default_value_t = imbdepth::domain::OVERLAP_TOTAL)]
        total: usize,
        /// Every (level, fraction) combination.
        #[arg(long, conflicts_with_all = ["level", "minority_frac"])]
        all: bool,
        #[command(flatten)]
        common: GenerateCommon,
    },
    /// Gaussian subconcepts at the midpoints of the c=2 backbone.
    GaussianBackbone {
        /// Variance level, 1..=5.
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
        v: Option<u8>,
        /// Balance level, 1..=5.
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
        b: Option<u8>,
        /// Every (v, b) combination.
        #[arg(long, conflicts_with_all = ["v", "b"])]
        all: bool,
        #[command(flatten)]
        common: GenerateCommon,
    },
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training CSV.
    #[arg(long)]
    pub data: PathBuf,
    /// Optional CSV to score the trained model on; defaults to the training data.
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Hidden layers, 1..=5.
    #[arg(long, value_parser = clap::value_parser!(u16).range(1..=5))]
    pub depth: u16,
    #[arg(long, value_parser = clap::value_parser!(u16).range(1..))]
    pub hidden_units: u16,
    /// Seed for initialisation and shuffling.
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 300)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.001)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    /// Output directory for `model.json` and `metrics.json`.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// JSON experiment grid.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    pub config: Option<PathBuf>,
    /// One of fig2, fig3, fig4, fig6, sup-cv.
    #[arg(long, value_parser = imbdepth::harness::presets::NAMES)]
    pub preset: Option<String>,
    /// Master seed; required with --preset, replaces the config's seeds otherwise.
    #[arg(long, required_unless_present = "config")]
    pub seed: Option<u64>,
    /// Output directory for results.jsonl, summary.csv and timings.csv.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    pub jobs: u16,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// A results.jsonl file written by `experiment`.
    pub results: PathBuf,
    /// Where to write the plot CSV; defaults to `plot.csv` next to the results.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}
