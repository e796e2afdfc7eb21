#[path = "support/rally.rs"]
mod rally;

use showdown_core::metrics::{max_hr_percent, render_table, stats_from_records, MetricsConfig, StatsAccumulator};
use showdown_core::{PlayerId, TableGeometry};

#[test]
fn scripted_rally_counters() {
    let stats = stats_from_records(&rally::records(), MetricsConfig::default()).unwrap();
    assert_eq!(stats.players, rally::expected());
    assert!(stats.game_scores.is_empty());
}

#[test]
fn scripted_rally_rates() {
    let stats = stats_from_records(&rally::records(), MetricsConfig::default()).unwrap();
    let a = stats.player(PlayerId::A).rates();
    let b = stats.player(PlayerId::B).rates();
    assert_eq!(a.hit_rate, Some(1.0));
    assert_eq!(a.shots_on_target_rate, Some(0.5));
    assert_eq!(a.middle_hit_rate, None);
    assert_eq!(b.hit_rate, Some(0.5));
    assert_eq!(b.middle_hit_rate, Some(0.5));
    assert_eq!(b.shots_on_target_rate, Some(0.0));
    assert!(render_table(&stats).contains("Shots on Target Rate"));
}

#[test]
fn incremental_accumulation_matches_batch() {
    let records = rally::records();
    let mut acc = StatsAccumulator::new(TableGeometry::default(), MetricsConfig::default());
    for r in &records {
        acc.accumulate(r).unwrap();
    }
    assert_eq!(acc.finish(), stats_from_records(&records, MetricsConfig::default()).unwrap());
}

#[test]
fn heart_rate_formula() {
    assert!((max_hr_percent(112.0, 60.0).unwrap() - 70.0).abs() < 1e-9);
}
