use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use mnno_cli::commands;

/// Neighborhood-structure toolkit: does a learned cross-space mapping
/// preserve the structure of its input space or of its target space?
#[derive(Parser)]
#[command(name = "mnno", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mean nearest-neighbor overlap of two key-paired vector files.
    Mnno {
        /// First vector file.
        x: PathBuf,
        /// Second vector file.
        y: PathBuf,
        /// Neighborhood size K.
        #[arg(long, default_value_t = 10)]
        k: usize,
        /// Similarity measure: cosine or euclidean.
        #[arg(long, default_value = "cosine")]
        measure: String,
        /// Vector file format: glove_text or tsv.
        #[arg(long, default_value = "glove_text")]
        format: String,
    },
    /// Train one mapping model on a seeded holdout split.
    Train {
        /// TOML config file.
        #[arg(long)]
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Mapping experiment: direction x model x loss grid with CV-selected
    /// hyperparameters and significance-tested overlap columns.
    Exp1 {
        /// TOML config file.
        #[arg(long)]
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Override the neighborhood size K.
        #[arg(long)]
        k: Option<usize>,
        /// Override the similarity measure: cosine or euclidean.
        #[arg(long)]
        measure: Option<String>,
        /// Write only this report format: csv or markdown (default: both).
        #[arg(long)]
        format: Option<String>,
    },
    /// Untrained-probe experiment: benchmark scoring through random nets.
    Exp2 {
        /// TOML config file.
        #[arg(long)]
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Write only this report format: csv or markdown (default: both).
        #[arg(long)]
        format: Option<String>,
    },
    /// Generate a synthetic paired dataset.
    Synth {
        /// TOML config file.
        #[arg(long)]
        config: PathBuf,
        /// Override the synthetic recipe's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Wilcoxon rank-sum test on two CSV columns, optionally
    /// Bonferroni-adjusted.
    Stats {
        /// CSV file with a header row.
        file: PathBuf,
        /// First column name.
        col_a: String,
        /// Second column name.
        col_b: String,
        /// Number of comparisons for the Bonferroni adjustment.
        #[arg(long)]
        m: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Mnno {
            x,
            y,
            k,
            measure,
            format,
        } => commands::cmd_mnno(&x, &y, k, &measure, &format),
        Command::Train {
            config,
            seed,
            out_dir,
        } => commands::cmd_train(&config, seed, out_dir),
        Command::Exp1 {
            config,
            seed,
            out_dir,
            k,
            measure,
            format,
        } => commands::cmd_exp1(&config, seed, out_dir, k, measure.as_deref(), format.as_deref()),
        Command::Exp2 {
            config,
            seed,
            out_dir,
            format,
        } => commands::cmd_exp2(&config, seed, out_dir, format.as_deref()),
        Command::Synth {
            config,
            seed,
            out_dir,
        } => commands::cmd_synth(&config, seed, out_dir),
        Command::Stats {
            file,
            col_a,
            col_b,
            m,
        } => commands::cmd_stats(&file, &col_a, &col_b, m),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
