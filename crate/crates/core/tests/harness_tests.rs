use std::collections::BTreeMap;

use shuffle_core::harness::{
    check_records, emit_outputs, run_experiment, summarize, write_records_csv, ExperimentConfig, ShuffleMode,
    CSV_HEADER,
};
use shuffle_core::load::LoadValue;
use shuffle_core::SystemParams;

fn csv_bytes(config: &ExperimentConfig) -> Vec<u8> {
    let records = run_experiment(config, None).unwrap();
    let mut out = Vec::new();
    write_records_csv(&records, &mut out).unwrap();
    out
}

/// Unsigned Stirling numbers of the first kind, `c(n, k)`, by recurrence.
fn stirling_row(n: usize) -> Vec<u64> {
    let mut row = vec![1u64];
    for m in 0..n {
        let mut next = vec![0u64; m + 2];
        for (k, &v) in row.iter().enumerate() {
            next[k] += v * m as u64;
            next[k + 1] += v;
        }
        row = next;
    }
    row
}

#[test]
fn csv_is_reproducible_across_thread_counts() {
    let mut config = ExperimentConfig::new(SystemParams::new(12, 4, 6).unwrap(), ShuffleMode::Random);
    config.trials = 40;
    config.seed = 9;
    config.search_budget = 4;
    let a = csv_bytes(&config);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| csv_bytes(&config));
    assert_eq!(a, b);
    config.seed = 10;
    assert_ne!(a, csv_bytes(&config));
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
    assert_eq!(text.lines().count(), 41);
}

#[test]
fn cycle_counts_follow_the_uniform_permutation_law() {
    let trials = 10_000;
    let mut config = ExperimentConfig::new(SystemParams::canonical(6, 1).unwrap(), ShuffleMode::Random);
    config.trials = trials;
    config.seed = 2024;
    let records = run_experiment(&config, None).unwrap();
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for r in &records {
        assert_eq!(r.gammas.len(), 1);
        *counts.entry(r.gammas[0]).or_default() += 1;
    }
    let row = stirling_row(6);
    assert_eq!(row[1..], [120, 274, 225, 85, 15, 1]);
    for (k, &c) in row.iter().enumerate().skip(1) {
        let p = c as f64 / 720.0;
        let expected = trials as f64 * p;
        let sigma = (trials as f64 * p * (1.0 - p)).sqrt();
        let seen = counts.get(&k).copied().unwrap_or(0) as f64;
        assert!(
            (seen - expected).abs() <= 3.0 * sigma.max(1.0),
            "gamma = {k}: saw {seen}, expected {expected:.1} +- {:.1}",
            3.0 * sigma
        );
    }
}

#[test]
fn multi_round_rows_are_indexed_by_round() {
    let mut config = ExperimentConfig::new(SystemParams::new(8, 4, 4).unwrap(), ShuffleMode::Random);
    config.trials = 3;
    config.rounds = 4;
    config.payload_bytes = 2;
    let records = run_experiment(&config, None).unwrap();
    assert_eq!(records.iter().map(|r| r.trial).collect::<Vec<_>>(), (0..12).collect::<Vec<_>>());
    check_records(&records).unwrap();
}

#[test]
fn worst_case_rows_sit_at_the_bound() {
    let mut config = ExperimentConfig::new(SystemParams::new(15, 5, 6).unwrap(), ShuffleMode::WorstCase);
    config.trials = 2;
    let records = run_experiment(&config, None).unwrap();
    for r in &records {
        assert_eq!(r.load, r.worst);
        assert_eq!(r.gammas, vec![1, 1, 1]);
    }
    check_records(&records).unwrap();
}

#[test]
fn explicit_mode_needs_an_assignment() {
    let config = ExperimentConfig::new(SystemParams::canonical(4, 2).unwrap(), ShuffleMode::Explicit);
    assert!(run_experiment(&config, None).is_err());
}

#[test]
fn summary_uses_lower_nearest_rank() {
    let mut config = ExperimentConfig::new(SystemParams::canonical(5, 2).unwrap(), ShuffleMode::Random);
    config.trials = 9;
    let mut records = run_experiment(&config, None).unwrap();
    for (i, r) in records.iter_mut().enumerate() {
        r.load = LoadValue::integer(i as i64);
    }
    let s = summarize(&records).unwrap();
    assert_eq!(s.q1, LoadValue::integer(2));
    assert_eq!(s.median, LoadValue::integer(4));
    assert_eq!(s.q3, LoadValue::integer(6));
    assert_eq!(s.mean, LoadValue::integer(4));
    assert!(summarize(&[]).is_none());
}

#[test]
fn outputs_land_where_the_config_says() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = ExperimentConfig::new(SystemParams::new(6, 3, 4).unwrap(), ShuffleMode::Random);
    config.trials = 5;
    config.csv = Some(dir.path().join("runs.csv"));
    config.svg = Some(dir.path().join("runs.svg"));
    let records = run_experiment(&config, None).unwrap();
    emit_outputs(&records, &config).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("runs.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
    let svg = std::fs::read_to_string(dir.path().join("runs.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
}

#[test]
fn config_files_reject_unknown_keys() {
    let ok = r#"{"params": {"n_files": 6, "n_workers": 3, "cache_size": 4}, "mode": "worst-case"}"#;
    let c: ExperimentConfig = serde_json::from_str(ok).unwrap();
    assert_eq!((c.trials, c.rounds, c.seed), (1, 1, 0));
    let bad = r#"{"params": {"n_files": 6, "n_workers": 3, "cache_size": 4}, "mode": "random", "trails": 3}"#;
    assert!(serde_json::from_str::<ExperimentConfig>(bad).is_err());
}

#[test]
fn empty_runs_still_write_the_header() {
    let mut out = Vec::new();
    write_records_csv(&[], &mut out).unwrap();
    assert_eq!(String::from_utf8(out).unwrap(), format!("{}\n", CSV_HEADER.join(",")));
}

#[test]
fn tradeoff_csv_has_the_worked_point() {
    let mut out = Vec::new();
    shuffle_core::harness::write_tradeoff_csv(&shuffle_core::analysis::tradeoff_curve(6, 3), &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert!(text.lines().any(|l| l == "3,1,1,1.000000"), "{text}");
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let exact = LoadValue::parse(&format!("{}/{}", f[1], f[2])).unwrap();
        assert!((exact.to_f64() - f[3].parse::<f64>().unwrap()).abs() < 1e-6);
    }
}
