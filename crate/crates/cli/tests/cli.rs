use std::process::Command;

use showdown_cli::commands;
use showdown_core::config::{Mode, RunConfig};
use showdown_core::study::StudyConfig;

fn showdown(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_showdown")).args(args).output().unwrap()
}

#[test]
fn bot_match_writes_log_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("m.jsonl");
    let stats = dir.path().join("s.json");
    let out = showdown(&[
        "bot-match", "--seed", "5", "--mode", "bots",
        "--log", log.to_str().unwrap(), "--stats", stats.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("seed 5: "), "{text}");
    assert!(text.contains("Hit Rate"));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&stats).unwrap()).unwrap();
    assert_eq!(report["players"].as_array().unwrap().len(), 2);

    let replay = showdown(&["replay", log.to_str().unwrap()]);
    assert!(replay.status.success());
    assert!(!String::from_utf8(replay.stdout).unwrap().contains("FAIL"));

    let s = showdown(&["stats", log.to_str().unwrap(), "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&s.stdout).unwrap();
    assert_eq!(v["players"][0]["player"], "A");
}

#[test]
fn config_file_drives_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "[run]\nmode = \"pvp\"\nseed = 12\n\n[bot]\nhit_probability = 0.9\n").unwrap();
    let cfg = commands::load_config(Some(&path)).unwrap();
    assert_eq!((cfg.run.mode, cfg.run.seed, cfg.bot.hit_probability), (Mode::Pvp, 12, 0.9));
    // Command-line flags win over the file.
    let cfg = commands::resolve(cfg, Some(3), None);
    assert_eq!(cfg.run.seed, 3);

    std::fs::write(&path, "[run]\nmode = \"solo\"\n").unwrap();
    let out = showdown(&["bot-match", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn pooled_matches_run_in_parallel() {
    let cfg = RunConfig::default().with_seed(20);
    let text = commands::bot_match(&cfg, 4, false).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("seed ")).count(), 4);
    let one = commands::bot_match(&cfg, 4, true).unwrap();
    let two = commands::bot_match(&cfg, 4, true).unwrap();
    assert_eq!(one, two);
}

#[test]
fn replay_flags_tampered_and_corrupt_logs() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("m.jsonl");
    let mut cfg = RunConfig::default().with_seed(6);
    cfg.output.log = Some(log.clone());
    commands::bot_match(&cfg, 1, false).unwrap();
    let text = std::fs::read_to_string(&log).unwrap();

    let tampered = text.replacen("\"score\":[2,0]", "\"score\":[3,0]", 1);
    assert_ne!(tampered, text);
    std::fs::write(&log, &tampered).unwrap();
    let out = showdown(&["replay", log.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("FAIL  score_parity"), "{stdout}");

    let mut lines: Vec<&str> = text.lines().collect();
    lines[6] = "{\"tick\":";
    std::fs::write(&log, lines.join("\n")).unwrap();
    let out = showdown(&["replay", log.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("line 7"));

    std::fs::write(&log, "").unwrap();
    let (verdict, _) = commands::replay(&log, true).unwrap();
    assert!(verdict.passed());
    assert_eq!(verdict.events, 0);
}

#[test]
fn study1_reports_breakdown() {
    let (report, text) = commands::study1(&StudyConfig::noiseless(), false).unwrap();
    assert_eq!(report.trials.len(), 36);
    for row in ["overall", "departure", "arrival", "own side", "opponent side", "start", "end"] {
        assert!(text.contains(row), "{row}");
    }
    let out = showdown(&["study1", "--json", "--trials", "200"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["trials"].as_array().unwrap().len(), 200);
    assert!(v["breakdown"]["overall"]["correct"].as_u64().unwrap() >= 364);
}

#[test]
fn shipped_config_matches_defaults() {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config/showdown.toml");
    assert_eq!(commands::load_config(Some(&path)).unwrap(), RunConfig::default());
}
