use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use arsearch_cli::config::Resolved;
use arsearch_cli::plot::{cmd_plot_data, PlotKind, PlotOptions};
use arsearch_cli::run::{cmd_bounds, cmd_run};
use arsearch_cli::verify::{cmd_verify, Selector, VerifyOptions};
use arsearch_cli::ExperimentConfig;

#[derive(Parser)]
#[command(
    name = "arsearch",
    version,
    about = "Adaptive random search with estimation: runs, bounds and verification"
)]
struct Cli {
    /// Worker threads (default: logical cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured algorithm and write one CSV trace and JSON header per run.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides output.directory).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Population seed (overrides run.seed).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the bound report for the configured problem and parameters.
    Bounds {
        #[arg(long)]
        config: PathBuf,
        /// Also evaluate the integral form of the iteration bound.
        #[arg(long)]
        integral: bool,
        /// Write the report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run verification checks; exits nonzero if any check fails.
    Verify {
        /// theorem1, dominance-hase, dominance-qase, bounds-hase, bounds-qase,
        /// lemma2, assumptions, coverage or all.
        selector: Selector,
        /// Verify this problem and parameter set instead of the defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Directory for the JSON report bundle.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Multiplier on the default run and sample counts.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Divide the volume-ratio replication count by this factor
        /// (negative control for theorem1).
        #[arg(long, default_value_t = 1.0)]
        reduce_replications: f64,
    },
    /// Emit tidy CSV (series,x,y) for plotting.
    PlotData {
        /// trace-panel, cdf-panel, ratio-curve or bound-vs-empirical.
        kind: PlotKind,
        /// Directory of run traces.
        #[arg(long)]
        traces: Option<PathBuf>,
        /// Second population (cdf-panel).
        #[arg(long)]
        traces_b: Option<PathBuf>,
        /// Problem description (ratio-curve).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        k_max: Option<usize>,
        /// Write the CSV here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn resolve(path: &Path) -> Result<Resolved> {
    let cfg = ExperimentConfig::load(path)?;
    cfg.resolve()
        .with_context(|| format!("in {}", path.display()))
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn execute(cli: Cli) -> Result<bool> {
    if let Some(w) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .context("configuring the worker pool")?;
    }
    match cli.command {
        Command::Run { config, out, seed } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(out) = out {
                cfg.output.directory = out;
            }
            if let Some(seed) = seed {
                cfg.run.seed = seed;
            }
            let resolved = cfg.resolve()?;
            let summary = cmd_run(&resolved, &cfg.output.directory)?;
            println!("{summary}");
            println!(
                "wrote {} files to {}",
                summary.files.len(),
                cfg.output.directory.display()
            );
            Ok(true)
        }
        Command::Bounds {
            config,
            integral,
            out,
        } => {
            let report = cmd_bounds(&resolve(&config)?, integral)?;
            let mut text = serde_json::to_string_pretty(&report)?;
            text.push('\n');
            emit(&text, out.as_deref())?;
            Ok(true)
        }
        Command::Verify {
            selector,
            config,
            out,
            seed,
            scale,
            reduce_replications,
        } => {
            anyhow::ensure!(scale > 0.0, "--scale must be positive");
            anyhow::ensure!(
                reduce_replications >= 1.0,
                "--reduce-replications must be at least 1"
            );
            let opts = VerifyOptions {
                seed,
                scale,
                replication_divisor: reduce_replications,
                config: config.as_deref().map(resolve).transpose()?,
            };
            let bundle = cmd_verify(selector, &opts)?;
            for c in &bundle.checks {
                println!(
                    "{} {}: {}",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.check,
                    c.summary
                );
            }
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)
                    .with_context(|| format!("creating {}", dir.display()))?;
                let path = dir.join("verify-report.json");
                let mut text = serde_json::to_string_pretty(&bundle)?;
                text.push('\n');
                std::fs::write(&path, text)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(bundle.pass)
        }
        Command::PlotData {
            kind,
            traces,
            traces_b,
            config,
            points,
            k_max,
            out,
        } => {
            let opts = PlotOptions {
                traces,
                traces_b,
                config: config.as_deref().map(resolve).transpose()?,
                points,
                k_max,
            };
            emit(&cmd_plot_data(kind, &opts)?, out.as_deref())?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
