use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod failure;
mod meta;

use failure::exit_code;

#[derive(Parser)]
#[command(name = "langrep", version, about = "Language representations from translated corpora")]
struct Cli {
    /// Corpus manifest (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run directory holding every stage's outputs.
    #[arg(long, global = true, default_value = "run")]
    out: PathBuf,
    /// Overrides the manifest seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug, Default)]
pub struct LevelArgs {
    /// Abstraction levels to process (repeatable); defaults to every
    /// level the inputs support.
    #[arg(long = "level")]
    pub levels: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Rewrite the corpora at abstraction levels.
    Abstract(LevelArgs),
    /// Train the language model per level and export language vectors.
    Train(LevelArgs),
    /// Genetic, geographic, structural and embedding distance matrices.
    Distances,
    /// Ward-cluster the language vectors of each trained level.
    Cluster(LevelArgs),
    /// Compare clustered trees with the gold tree.
    TreeDist,
    /// Random-tree baseline for the gold tree.
    Baseline {
        /// Overrides the manifest's trial count.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Rank correlations between all distance matrices.
    Correlate,
    /// IC* causal discovery over the distance variables.
    Causal,
    /// Run every stage in order.
    Pipeline(LevelArgs),
    /// Write a synthetic benchmark corpus and its manifest.
    Synth {
        /// Sentences per language.
        #[arg(long, default_value_t = 60)]
        sentences: usize,
        /// Training epochs written into the manifest.
        #[arg(long, default_value_t = 2)]
        epochs: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = commands::Context {
        config: cli.config,
        out: cli.out,
        seed: cli.seed,
    };
    let result = match cli.command {
        Command::Abstract(l) => commands::abstract_cmd(&ctx, &l),
        Command::Train(l) => commands::train_cmd(&ctx, &l),
        Command::Distances => commands::distances_cmd(&ctx),
        Command::Cluster(l) => commands::cluster_cmd(&ctx, &l),
        Command::TreeDist => commands::tree_dist_cmd(&ctx),
        Command::Baseline { trials } => commands::baseline_cmd(&ctx, trials),
        Command::Correlate => commands::correlate_cmd(&ctx),
        Command::Causal => commands::causal_cmd(&ctx),
        Command::Pipeline(l) => commands::pipeline_cmd(&ctx, &l),
        Command::Synth { sentences, epochs } => commands::synth_cmd(&ctx, sentences, epochs),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
