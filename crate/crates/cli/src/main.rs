//! Command-line entry point: train, evaluate, plot, and serve.

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use landrl::bridge::{serve, EnvFactory, DEFAULT_PORT};
use landrl::harness::{evaluate, plot_metrics, train, EnvChoice, RunConfig};
use landrl::task::ShapedEnv;
use landrl::{Algorithm, ScenarioConfig};
use std::path::PathBuf;
use std::sync::Arc;

#[derive(Parser)]
#[command(
    name = "landrl",
    about = "Continuous-control RL suite for autonomous quadrotor landing",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded training loop and write metrics, config and checkpoints.
    Train {
        /// JSON run configuration (fields mirror RunConfig; all optional).
        #[arg(long)]
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's algorithm.
        #[arg(long)]
        algo: Option<String>,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the config's episode budget.
        #[arg(long)]
        episodes: Option<u32>,
    },
    /// Evaluate a checkpoint greedily (exploration off).
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        episodes: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print the summary as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Render a metrics CSV as a reward-curve image (SVG).
    Plot {
        #[arg(long)]
        metrics: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the built-in environment over the bridge protocol.
    Serve {
        #[arg(long, default_value_t = DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: String,
        /// Optional run config supplying the scenario parameters.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn main() {
    if let Err(err) = run() {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Train {
            config,
            seed,
            algo,
            out,
            episodes,
        } => {
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("reading config {}", config.display()))?;
            let mut run_config: RunConfig =
                serde_json::from_str(&text).context("parsing run config")?;
            if let Some(seed) = seed {
                run_config.seed = seed;
            }
            if let Some(algo) = algo {
                run_config.algorithm = algo.parse::<Algorithm>()?;
            }
            if let Some(out) = out {
                run_config.out_dir = out;
            }
            if let Some(episodes) = episodes {
                run_config.episodes = episodes;
            }
            let summary = train(&run_config)?;
            println!(
                "run complete: {} seed {} | {} episodes in {:.1?}",
                summary.algorithm, summary.seed, summary.episodes_run, summary.wall_time
            );
            println!(
                "baseline return {:.2}, threshold {:.2}, final avg{} {:.2}",
                summary.baseline_return,
                summary.threshold,
                landrl::harness::AVG_WINDOW,
                summary.final_avg
            );
            match summary.converged_at {
                Some(ep) => println!("converged at episode {ep}"),
                None => println!("did not reach the convergence threshold"),
            }
            println!("metrics: {}", summary.metrics_path.display());
            println!("checkpoint: {}", summary.checkpoint_path.display());
        }
        Command::Eval {
            checkpoint,
            episodes,
            seed,
            json,
        } => {
            let summary = evaluate(&checkpoint, episodes, seed)?;
            if json {
                println!(
                    "{}",
                    serde_json::json!({
                        "episodes": summary.episodes,
                        "success_rate": summary.success_rate,
                        "red_rate": summary.red_rate,
                        "mean_return": summary.mean_return,
                        "mean_terminal_speed": summary.mean_terminal_speed,
                        "mean_steps": summary.mean_steps,
                    })
                );
            } else {
                println!(
                    "{} episodes: success {:.1}% (red {:.1}%), mean return {:.2}, \
                     terminal speed {:.3} m/s, mean steps {:.1}",
                    summary.episodes,
                    summary.success_rate * 100.0,
                    summary.red_rate * 100.0,
                    summary.mean_return,
                    summary.mean_terminal_speed,
                    summary.mean_steps
                );
            }
        }
        Command::Plot { metrics, out } => {
            plot_metrics(&metrics, &out)?;
            println!("wrote {}", out.display());
        }
        Command::Serve { port, bind, config } => {
            let scenario = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .with_context(|| format!("reading config {}", path.display()))?;
                    let run_config: RunConfig =
                        serde_json::from_str(&text).context("parsing run config")?;
                    if !matches!(run_config.env, EnvChoice::Builtin) {
                        bail!("serve hosts the built-in environment; config must say so");
                    }
                    run_config.scenario
                }
                None => ScenarioConfig::default(),
            };
            scenario.validate()?;
            let factory: EnvFactory = Arc::new(move || {
                Box::new(ShapedEnv::new(scenario, 0).expect("validated scenario"))
            });
            let addr = format!("{bind}:{port}");
            println!("serving landing environments on {addr}");
            serve(factory, addr.as_str())?;
        }
    }
    Ok(())
}
