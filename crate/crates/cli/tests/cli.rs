use std::process::{Command, Output};

fn shuffle(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shuffle")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn goldens_pass() {
    let o = shuffle(&["goldens"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(!stdout(&o).contains("FAIL"));
}

#[test]
fn analyze_prints_the_worked_point_and_writes_the_curve() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("curve.csv");
    let svg = dir.path().join("curve.svg");
    let o = shuffle(&[
        "analyze", "-k", "6", "--gamma", "3", "--csv", csv.to_str().unwrap(), "--svg", svg.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let row = stdout(&o).lines().find(|l| l.trim_start().starts_with("3 ")).unwrap().to_string();
    let cols: Vec<&str> = row.split_whitespace().collect();
    assert_eq!(cols, ["3", "1", "1", "1", "1"]);
    assert!(std::fs::read_to_string(csv).unwrap().contains("\n3,1,1,1.000000\n"));
    assert!(std::fs::read_to_string(svg).unwrap().starts_with("<svg"));
}

#[test]
fn analyze_rejects_impossible_cycle_counts() {
    let o = shuffle(&["analyze", "-k", "3", "--gamma", "4"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_is_deterministic_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let o = shuffle(&[
            "simulate", "-n", "12", "-k", "4", "-s", "6", "--trials", "20", "--seed", "3", "--csv",
            path.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read_to_string(path).unwrap()
    };
    let a = run("a.csv");
    assert_eq!(a, run("b.csv"));
    assert_eq!(a.lines().count(), 21);
    assert!(a.lines().skip(1).all(|l| l.contains(",true,3")));
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.json");
    let csv = dir.path().join("out.csv");
    std::fs::write(
        &cfg,
        format!(
            r#"{{"params": {{"n_files": 8, "cache_size": 4}}, "mode": "worst-case", "trials": 2, "csv": {:?}}}"#,
            csv.to_str().unwrap()
        ),
    )
    .unwrap();
    let o = shuffle(&["simulate", "-n", "4", "-k", "4", "-s", "2", "--trials", "9", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(csv).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    // N=8, K=4, S=4: the block shift costs exactly 2 files.
    for (i, r) in rows.iter().enumerate() {
        assert!(r.starts_with(&format!("{i},4,8,4,2,worst-case,1;1,2,1,2.000000,")), "{r}");
    }
}

#[test]
fn unknown_config_keys_are_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"trails": 4}"#).unwrap();
    let o = shuffle(&["simulate", "-n", "4", "-k", "4", "-s", "2", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_emits_one_summary_per_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("sweep.svg");
    let o = shuffle(&[
        "simulate", "-n", "4", "-k", "4", "-s", "2", "--trials", "10", "--sweep", "1,2,3", "--svg",
        svg.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("N=")).count(), 3);
    assert!(stdout(&o).contains("N=12 K=4 S=6"));
    assert!(std::fs::read_to_string(svg).unwrap().contains("</svg>"));
}

#[test]
fn explicit_mode_reads_a_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let scen = dir.path().join("scenario.json");
    std::fs::write(&scen, r#"{"K":4,"N":4,"S":2,"u":[[1],[2],[3],[4]],"d":[[2],[3],[4],[1]]}"#).unwrap();
    let o = shuffle(&[
        "simulate", "-n", "4", "-k", "4", "-s", "2", "--mode", "explicit", "--assignment", scen.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("mean=1 "), "{}", stdout(&o));
    let missing = shuffle(&["simulate", "-n", "4", "-k", "4", "-s", "2", "--mode", "explicit"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn decompose_reports_subgraphs() {
    let dir = tempfile::tempdir().unwrap();
    let scen = dir.path().join("example5.json");
    std::fs::write(
        &scen,
        r#"{"K":4,"N":8,"S":4,"u":[[1,2],[3,4],[5,6],[7,8]],"d":[[1,6],[4,7],[3,8],[2,5]]}"#,
    )
    .unwrap();
    let o = shuffle(&["decompose", scen.to_str().unwrap(), "--search-budget", "16", "--json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["load"], "5/3");
    assert_eq!(v["worst"], "2");
    assert_eq!(v["verified"], true);
    assert_eq!(v["subgraphs"].as_array().unwrap().len(), 2);
}

#[test]
fn verify_sweeps_small_k() {
    let o = shuffle(&["verify", "--max-k", "4", "--minimality"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("K=4: 96 instances, 0 failures"));
}
