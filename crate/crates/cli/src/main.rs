use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use docrestore::pipeline::Task;
use docrestore_cli::commands;
use docrestore_cli::config::{Settings, KEYS};
#[cfg(feature = "service")]
use docrestore_cli::service;

#[derive(Parser)]
#[command(name = "docrestore", version, about = "Restore, binarize and evaluate degraded document images")]
struct Cli {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// File of `key = value` lines applied over the defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Single `key=value` override, applied after the file; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn settings(&self) -> Result<Settings> {
        Ok(Settings::layered(self.config.as_deref(), &self.overrides)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus of degraded pages with exact ground truth.
    Synth {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the ground-truth bundle for one page.
    GenGt {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a network on a corpus manifest.
    Train {
        /// text, fg or bg.
        #[arg(long)]
        task: Task,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long = "out-weights")]
        out: PathBuf,
        /// Per-epoch loss curve as CSV.
        #[arg(long)]
        loss_csv: Option<PathBuf>,
    },
    /// Restore a page with trained networks.
    Restore {
        /// 1: text network plus mixture background; 2: foreground and background networks.
        #[arg(long)]
        method: u8,
        #[arg(long = "in")]
        input: PathBuf,
        /// Weights files: text for method 1, foreground then background for method 2.
        #[arg(long, num_args = 1..=2, required = true)]
        weights: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Binarize a page with a trained text network.
    Binarize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score predicted masks against ground-truth masks with the same file names.
    Eval {
        #[arg(long = "pred-dir")]
        pred: PathBuf,
        #[arg(long = "gt-dir")]
        gt: PathBuf,
        /// CSV report path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the HTTP tuning service.
    #[cfg(feature = "service")]
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
    },
    /// Print the effective settings, or every key with its description.
    Settings {
        #[arg(long)]
        describe: bool,
    },
}

fn run(cli: Cli) -> Result<()> {
    let settings = cli.config.settings()?;
    match cli.command {
        Command::Synth { n, seed, out } => {
            let m = commands::synth(n, seed, &out, &settings)?;
            eprintln!("wrote {} documents to {}", m.entries.len(), out.display());
        }
        Command::GenGt { input, out } => {
            commands::gen_gt(&input, &out, &settings)?;
        }
        Command::Train { task, manifest, out, loss_csv } => {
            let curve = commands::train(task, &manifest, &out, loss_csv.as_deref(), &settings, |epoch, loss| {
                eprintln!("epoch {epoch:>4}  loss {loss:.6}");
            })?;
            if let (Some(first), Some(last)) = (curve.losses.first(), curve.losses.last()) {
                eprintln!("loss {first:.6} -> {last:.6}");
            }
        }
        Command::Restore { method, input, weights, out } => {
            commands::restore(method, &input, &weights, &out, &settings)?;
        }
        Command::Binarize { input, weights, out } => {
            commands::binarize(&input, &weights, &out, &settings)?;
        }
        Command::Eval { pred, gt, out } => {
            let rep = commands::eval(&pred, &gt, &out)?;
            let m = &rep.average;
            println!("FM {:.4}  Fps {:.4}  PSNR {:.4}  DRD {:.4}", m.fm, m.fps, m.psnr, m.drd);
        }
        #[cfg(feature = "service")]
        Command::Serve { port, host } => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(service::serve((host, port).into(), settings))?;
        }
        Command::Settings { describe } => {
            if describe {
                for (k, v, d) in KEYS {
                    println!("{k} = {v}    # {d}");
                }
            } else {
                print!("{}", settings.to_text());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("docrestore: {e:#}");
            ExitCode::FAILURE
        }
    }
}
