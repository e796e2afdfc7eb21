use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};
use showdown_cli::commands;
use showdown_cli::server::{Pacing, Server};
use showdown_core::config::Mode;
use showdown_core::study::StudyConfig;

#[derive(Parser)]
#[command(name = "showdown", version, about = "Audio-first showdown table game engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum NetMode {
    Pva,
    Pvp,
}

#[derive(Clone, Copy, ValueEnum)]
enum MatchMode {
    Pva,
    Pvp,
    Bots,
}

impl From<MatchMode> for Mode {
    fn from(m: MatchMode) -> Self {
        match m {
            MatchMode::Pva => Mode::Pva,
            MatchMode::Pvp => Mode::Pvp,
            MatchMode::Bots => Mode::Bots,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the WebSocket game server for one match.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        mode: Option<NetMode>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Advance only when every player has sent a fresh input.
        #[arg(long)]
        lockstep: bool,
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Play headless best-of-three matches.
    BotMatch {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        mode: Option<MatchMode>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Matches to play on consecutive seeds, in parallel.
        #[arg(long, default_value_t = 1)]
        count: u64,
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long)]
        stats: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Run the route-localization task.
    Study1 {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        noiseless: bool,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long)]
        json: bool,
    },
    /// Print statistics computed from a replay log.
    Stats {
        log: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Re-simulate a replay log and check every invariant.
    Replay {
        log: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

/// Prints to stdout, tolerating a closed pipe (`showdown ... | head`).
fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let nl: &[u8] = if text.ends_with('\n') { b"" } else { b"\n" };
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.write_all(nl)).and_then(|_| out.flush());
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Serve { bind, seed, mode, config, lockstep, log, stats } => {
            let mode = mode.map(|m| match m {
                NetMode::Pva => Mode::Pva,
                NetMode::Pvp => Mode::Pvp,
            });
            let mut cfg = commands::resolve(commands::load_config(config.as_deref())?, seed, mode);
            cfg.output.log = log.or(cfg.output.log);
            cfg.output.stats = stats.or(cfg.output.stats);
            let pacing = if lockstep { Pacing::Lockstep } else { Pacing::Realtime };
            let server = Server::bind(&bind, cfg.clone(), pacing)?;
            eprintln!("listening on ws://{} ({} mode, seed {})", server.local_addr()?, cfg.run.mode.as_str(), cfg.run.seed);
            let summary = server.run()?;
            if let Some(p) = &cfg.output.log {
                std::fs::write(p, showdown_core::log::write_jsonl(&summary.records)?)?;
            }
            if let Some(p) = &cfg.output.stats {
                std::fs::write(p, commands::stats_json(&summary.stats))?;
            }
            emit(&format!("{} wins after {} ticks\n", summary.winner, summary.ticks));
            emit(&showdown_core::metrics::render_table(&summary.stats));
        }
        Command::BotMatch { seed, mode, config, count, log, stats, json } => {
            let mut cfg = commands::resolve(commands::load_config(config.as_deref())?, seed, mode.map(Mode::from));
            cfg.output.log = log.or(cfg.output.log);
            cfg.output.stats = stats.or(cfg.output.stats);
            emit(&commands::bot_match(&cfg, count, json)?);
        }
        Command::Study1 { seed, noiseless, trials, json } => {
            let mut cfg = if noiseless { StudyConfig::noiseless() } else { StudyConfig::default() };
            cfg.seed = seed;
            cfg.trials = trials;
            let (_, text) = commands::study1(&cfg, json)?;
            emit(&text);
        }
        Command::Stats { log, json } => emit(&commands::stats(&log, json)?),
        Command::Replay { log, json } => {
            let (verdict, text) = commands::replay(&log, json)?;
            emit(&text);
            if !verdict.passed() {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
