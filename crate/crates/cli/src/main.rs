use std::process::ExitCode;

use clap::{Parser, Subcommand};

use visreg::commands::{self, AnalyzeArgs, EvaluateArgs, PredictArgs, ProjectArgs, TrainArgs};

/// Preference prediction from sparse ratings, visually regularized, with
/// feature-only cold-start queries.
#[derive(Parser)]
#[command(name = "visreg", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a latent factor model from a rating file
    Train(TrainArgs),
    /// Build per-anchor projection matrices for cold-start queries
    Project(ProjectArgs),
    /// Predict ratings for one item (warm) or one feature vector (cold)
    Predict(PredictArgs),
    /// Run the train/test protocol over budgets, seeds, and methods
    Evaluate(EvaluateArgs),
    /// Export plot-ready analysis tables
    Analyze(AnalyzeArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(args) => commands::cmd_train(args),
        Command::Project(args) => commands::cmd_project(args),
        Command::Predict(args) => commands::cmd_predict(args),
        Command::Evaluate(args) => commands::cmd_evaluate(args),
        Command::Analyze(args) => commands::cmd_analyze(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
