use std::process::Command;

use tripwise::analyze::{analyze, AnalyzeConfig, Dataset, Outcome, SECTIONS};
use tripwise::simulate::{simulate, SimConfig};
use tripwise::store::EXPORT_FILES;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tripwise"))
}

#[test]
fn same_seed_same_cohort_other_seed_differs() {
    let a = simulate(&SimConfig::default());
    let b = simulate(&SimConfig::default());
    assert_eq!(a.feedback, b.feedback);
    assert_eq!(a.wellbeing, b.wellbeing);
    let c = simulate(&SimConfig {
        seed: 8,
        ..SimConfig::default()
    });
    assert_ne!(a.feedback, c.feedback);
}

#[test]
fn written_cohort_loads_back_unchanged() {
    let cohort = simulate(&SimConfig {
        users: 8,
        weeks: 2,
        ..SimConfig::default()
    });
    let dir = tempfile::tempdir().unwrap();
    cohort.write(dir.path()).unwrap();
    for f in EXPORT_FILES {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let ds = Dataset::load(dir.path()).unwrap();
    assert_eq!(ds.users, cohort.users);
    assert_eq!(ds.trips, cohort.trips);
    assert_eq!(ds.feedback, cohort.feedback);
    assert_eq!(ds.wellbeing, cohort.wellbeing);
}

#[test]
fn empty_cohort_reports_insufficient_data_everywhere() {
    let dir = tempfile::tempdir().unwrap();
    let st = bin()
        .args(["simulate", "--users", "0", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(st.status.success());
    let ds = Dataset::load(dir.path()).unwrap();
    assert!(ds.users.is_empty() && ds.feedback.is_empty());
    let report = analyze(&ds, &AnalyzeConfig::default());
    let v = serde_json::to_value(&report).unwrap();
    for k in SECTIONS {
        assert_eq!(v[k]["status"], "insufficient_data", "{k}");
    }
    assert!(matches!(report.filtering, Outcome::InsufficientData { .. }));
}

#[test]
fn analyze_without_feedback_still_describes_schedules() {
    let cohort = simulate(&SimConfig {
        users: 6,
        weeks: 1,
        ..SimConfig::default()
    });
    let ds = Dataset {
        users: cohort.users,
        schedules: cohort.schedules,
        trips: cohort.trips,
        feedback: Vec::new(),
        wellbeing: cohort.wellbeing,
    };
    let report = analyze(&ds, &AnalyzeConfig::default());
    assert!(report.schedules.ok().is_some());
    assert!(report.filtering.ok().is_none());
    assert!(report.correlations.ok().is_none());
}

#[test]
fn cli_writes_report_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let out = dir.path().join("out/report.json");
    assert!(bin()
        .args(["simulate", "--users", "12", "--weeks", "3", "--out"])
        .arg(&data)
        .output()
        .unwrap()
        .status
        .success());
    let o = bin()
        .args(["analyze", "--data"])
        .arg(&data)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["dataset"]["users"], 12);
    let text = std::fs::read_to_string(out.with_extension("txt")).unwrap();
    assert_eq!(text, String::from_utf8(o.stdout).unwrap());
    assert!(text.contains("[filtering]"));
}

#[test]
fn cli_route_and_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    assert!(bin()
        .arg("fixtures")
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap()
        .status
        .success());
    let net = dir.path().join("network.json");
    let o = bin()
        .args([
            "route",
            "--from",
            "39.7215,-105.0085",
            "--to",
            "39.7600,-104.9700",
            "--network",
        ])
        .arg(&net)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(!v["route"]["edge_ids"].as_array().unwrap().is_empty());

    let o = bin()
        .args(["route", "--from", "nowhere", "--to", "1,2", "--network"])
        .arg(&net)
        .output()
        .unwrap();
    assert!(!o.status.success());
    let o = bin()
        .args([
            "route",
            "--prefer",
            "safest",
            "--from",
            "39.7215,-105.0085",
            "--to",
            "39.76,-104.97",
            "--network",
        ])
        .arg(&net)
        .output()
        .unwrap();
    assert!(!o.status.success(), "safest needs a field");

    let cfg = tripwise::config::Config::load(dir.path().join("config.json")).unwrap();
    assert_eq!(cfg.network, net);
}
