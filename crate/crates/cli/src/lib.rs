//! The `signbridge` command line: dataset generation, training, tuning,
//! evaluation, text correction, video synthesis and end-to-end translation.

pub mod commands;
pub mod config;
pub mod error;
pub mod landmark_csv;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::Assignments;
use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "signbridge", version, about = "Fingerspelling recognition to sign video pipeline")]
struct Cli {
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override any config key, repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write synthetic landmark, silhouette, atlas and correction datasets.
    Datagen,
    /// Train the landmark random forest.
    TrainRfc,
    /// Train the silhouette CNN.
    TrainCnn,
    /// Grid-search the forest hyperparameters with k-fold cross-validation.
    Tune {
        #[arg(long)]
        folds: Option<usize>,
    },
    /// Evaluate the trained models and fit the ensemble weight.
    Eval,
    /// Print three corrections of a text.
    Correct {
        #[arg(long)]
        text: String,
        /// Use the offline corrector if the remote one fails.
        #[arg(long)]
        fallback: bool,
    },
    /// Render a text as gesture frames at 60 FPS.
    Synthesize {
        #[arg(long)]
        text: String,
        /// Also write the 1 and 24 FPS stages.
        #[arg(long)]
        all_stages: bool,
    },
    /// Landmark frames in, corrected text and gesture video out.
    Translate {
        #[arg(long)]
        input: Option<PathBuf>,
        /// Silhouette frames aligned with the landmark rows, for the CNN.
        #[arg(long)]
        silhouettes: Option<PathBuf>,
        #[arg(long)]
        fallback: bool,
    },
}

fn execute(cli: Cli, out: &mut dyn Write, log: &mut dyn Write) -> Result<(), CliError> {
    let mut a = match &cli.config {
        Some(path) => Assignments::parse_file(path)?,
        None => Assignments::default(),
    };
    if let Some(seed) = cli.seed {
        a.set("seed", &seed.to_string()).map_err(CliError::Usage)?;
    }
    if let Some(dir) = &cli.out {
        a.set("output_dir", &dir.to_string_lossy()).map_err(CliError::Usage)?;
    }
    for pair in &cli.set {
        a.set_pair(pair)?;
    }
    match &cli.command {
        Command::Tune { folds: Some(k) } => a.set("cv_folds", &k.to_string()).map_err(CliError::Usage)?,
        Command::Synthesize { all_stages: true, .. } => a.set("video.all_stages", "true").map_err(CliError::Usage)?,
        Command::Translate { input, silhouettes, .. } => {
            if let Some(p) = input {
                a.set("input_csv", &p.to_string_lossy()).map_err(CliError::Usage)?;
            }
            if let Some(p) = silhouettes {
                a.set("input_silhouettes", &p.to_string_lossy()).map_err(CliError::Usage)?;
            }
        }
        _ => {}
    }
    let cfg = a.resolve()?;
    let report = match cli.command {
        Command::Datagen => commands::datagen(&cfg, log)?,
        Command::TrainRfc => commands::train_rfc(&cfg, log)?,
        Command::TrainCnn => commands::train_cnn(&cfg, log)?,
        Command::Tune { .. } => commands::tune(&cfg, out, log)?,
        Command::Eval => commands::eval(&cfg, log)?,
        Command::Correct { text, fallback } => commands::correct(&cfg, &text, fallback, out)?,
        Command::Synthesize { text, .. } => commands::synthesize(&cfg, &text, log)?,
        Command::Translate { fallback, .. } => commands::translate(&cfg, fallback, log)?,
    };
    if let Some(text) = report.get("text").and_then(|t| t.as_str()) {
        let _ = writeln!(out, "{text}");
    }
    Ok(())
}

/// Run with `args` (including the program name) and return the exit code:
/// 0 success, 1 usage error, 2 data error, 3 remote corrector failure.
pub fn run<I, T>(args: I, out: &mut dyn Write, log: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(log, "{text}");
                    1
                }
            };
        }
    };
    match execute(cli, out, log) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(log, "{e}");
            e.exit_code()
        }
    }
}
