//! Subcommand bodies. Each returns the text to print so tests can check it
//! without spawning the binary.

use std::path::Path;

use anyhow::{Context, Result};
use rayon::prelude::*;
use showdown_core::config::{Mode, RunConfig};
use showdown_core::harness::{replay_text, run_bot_match, ReplayVerdict};
use showdown_core::log::parse_jsonl;
use showdown_core::metrics::{render_table, stats_from_records, MatchStats, StatsReport};
use showdown_core::study::{run_study1, StudyConfig, StudyReport};

pub fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(RunConfig::default()),
    }
}

/// Applies command-line overrides on top of a loaded config.
pub fn resolve(mut cfg: RunConfig, seed: Option<u64>, mode: Option<Mode>) -> RunConfig {
    if let Some(s) = seed {
        cfg.run.seed = s;
    }
    if let Some(m) = mode {
        cfg.run.mode = m;
    }
    cfg
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn stats_json(stats: &MatchStats) -> String {
    serde_json::to_string_pretty(&StatsReport::from(stats)).expect("stats serialize")
}

/// Plays `count` matches on consecutive seeds. The first match's log goes to
/// the configured log path; stats are pooled over all matches.
pub fn bot_match(cfg: &RunConfig, count: u64, json: bool) -> Result<String> {
    anyhow::ensure!(count > 0, "count must be positive");
    let runs: Vec<_> = (0..count)
        .into_par_iter()
        .map(|i| {
            let c = cfg.clone().with_seed(cfg.run.seed.wrapping_add(i));
            run_bot_match(&c).with_context(|| format!("seed {}", c.run.seed))
        })
        .collect::<Result<_>>()?;
    if let Some(path) = &cfg.output.log {
        write_file(path, &runs[0].to_jsonl()?)?;
    }
    let mut pooled = MatchStats::default();
    for run in &runs {
        for (p, s) in pooled.players.iter_mut().zip(&run.stats.players) {
            p.merge(s);
        }
        pooled.game_scores.extend(&run.stats.game_scores);
    }
    if let Some(path) = &cfg.output.stats {
        write_file(path, &stats_json(&pooled))?;
    }
    if json {
        return Ok(stats_json(&pooled));
    }
    let mut out = String::new();
    for (i, run) in runs.iter().enumerate() {
        let (w, l) = (run.winner.index(), run.winner.opponent().index());
        out.push_str(&format!(
            "seed {}: {} wins {}-{} in {} ticks, games {:?}\n",
            cfg.run.seed.wrapping_add(i as u64),
            run.winner,
            run.games_won[w],
            run.games_won[l],
            run.ticks,
            run.stats.game_scores,
        ));
    }
    out.push('\n');
    out.push_str(&render_table(&pooled));
    Ok(out)
}

pub fn study1(cfg: &StudyConfig, json: bool) -> Result<(StudyReport, String)> {
    let report = run_study1(cfg)?;
    let text = if json {
        serde_json::to_string_pretty(&report)?
    } else {
        report.render()
    };
    Ok((report, text))
}

pub fn stats(log: &Path, json: bool) -> Result<String> {
    let text = std::fs::read_to_string(log).with_context(|| format!("reading {}", log.display()))?;
    let records = parse_jsonl(&text)?;
    let cfg = showdown_core::metrics::MetricsConfig::default();
    let stats = stats_from_records(&records, cfg)?;
    Ok(if json { stats_json(&stats) } else { render_table(&stats) })
}

pub fn replay(log: &Path, json: bool) -> Result<(ReplayVerdict, String)> {
    let text = std::fs::read_to_string(log).with_context(|| format!("reading {}", log.display()))?;
    let verdict = replay_text(&text).with_context(|| format!("parsing {}", log.display()))?;
    let out = if json {
        serde_json::to_string_pretty(&verdict)?
    } else {
        verdict.render()
    };
    Ok((verdict, out))
}
