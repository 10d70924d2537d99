use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};
use tempfile::TempDir;

fn qevote(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qevote"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn qevote")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn travelling_ballot_honest_run() {
    let d = TempDir::new().unwrap();
    let c = write(
        d.path(),
        "c.json",
        r#"{"schema_version":1,"protocol":{"kind":"travelball","voters":3},"votes":[1,0,1]}"#,
    );
    let o = qevote(d.path(), &["run-protocol", "--config", &c, "--out", "o"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(
        json(&d.path().join("o/outcome.json"))["outcome"]["tally"],
        2
    );
}

#[test]
fn dual_basis_honest_run_returns_the_votes() {
    let d = TempDir::new().unwrap();
    let c = write(
        d.path(),
        "c.json",
        r#"{"schema_version":1,"protocol":{"kind":"dualbasis","voters":3,"candidates":3,"delta0":1},"votes":[2,2,0]}"#,
    );
    let o = qevote(d.path(), &["run-protocol", "--config", &c, "--out", "o"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = &json(&d.path().join("o/outcome.json"))["outcome"]["rows"];
    assert_eq!(rows, &serde_json::json!([0, 2, 2]));
}

#[test]
fn distributed_ballot_rejects_small_dimension() {
    let d = TempDir::new().unwrap();
    let c = write(
        d.path(),
        "c.json",
        r#"{"schema_version":1,"protocol":{"kind":"distball","dim":3,"voters":3},"votes":[1,0,1]}"#,
    );
    let o = qevote(d.path(), &["run-protocol", "--config", &c]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("invalid parameter"));
}

#[test]
fn malformed_configs_are_usage_errors() {
    let d = TempDir::new().unwrap();
    for (i, text) in [
        r#"{"schema_version":1,"protocol":{"kind":"travelball","voters":3,"extra":1},"votes":[0,0,0]}"#,
        r#"{"schema_version":1,"unknown":true}"#,
        r#"{"schema_version":9}"#,
        r#"{"schema_version":1,"protocol":{"kind":"travelball","voters":3},"votes":[0,5,0]}"#,
        "not json",
    ]
    .iter()
    .enumerate()
    {
        let c = write(d.path(), &format!("c{i}.json"), text);
        let o = qevote(d.path(), &["run-protocol", "--config", &c]);
        assert_eq!(o.status.code(), Some(2), "config {text}");
    }
    let o = qevote(d.path(), &["no-such-command"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn strategy_protocol_mismatch_is_a_usage_error() {
    let d = TempDir::new().unwrap();
    let c = write(
        d.path(),
        "c.json",
        r#"{"schema_version":1,"protocol":{"kind":"travelball","voters":3},"experiment":"qpriv","strategy":{"name":"conjcode-serial"}}"#,
    );
    let o = qevote(
        d.path(),
        &["run-experiment", "--config", &c, "--trials", "5"],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sandwich_wins_privacy_game() {
    let d = TempDir::new().unwrap();
    let c = write(
        d.path(),
        "c.json",
        r#"{"schema_version":1,"protocol":{"kind":"travelball","voters":4},"experiment":"qpriv",
            "strategy":{"name":"travelball-sandwich","victim_slot":1},"epsilon":0.5}"#,
    );
    let o = qevote(
        d.path(),
        &[
            "run-experiment",
            "--config",
            &c,
            "--trials",
            "200",
            "--out",
            "o",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let r = json(&d.path().join("o/report.json"));
    assert_eq!(r["win_rate"], 1.0);
    let csv = fs::read_to_string(d.path().join("o/trials.csv")).unwrap();
    assert!(csv.starts_with("trial_index,seed,outcome,auxiliary"));
    assert_eq!(csv.lines().count(), 201);
}

#[test]
fn blind_guess_is_near_one_half() {
    let d = TempDir::new().unwrap();
    let c = write(
        d.path(),
        "c.json",
        r#"{"schema_version":1,"protocol":{"kind":"conjcode","voters":3,"n":2},"experiment":"qpriv","strategy":{"name":"honest"}}"#,
    );
    let o = qevote(
        d.path(),
        &[
            "run-experiment",
            "--config",
            &c,
            "--trials",
            "4000",
            "--out",
            "o",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let r = json(&d.path().join("o/report.json"));
    let rate = r["win_rate"].as_f64().unwrap();
    let sigma = (0.25f64 / 4000.0).sqrt();
    assert!((rate - 0.5).abs() <= 3.0 * sigma, "{rate}");
    assert!(
        r["interval"]["lo"].as_f64().unwrap() < rate
            && rate < r["interval"]["hi"].as_f64().unwrap()
    );
}

#[test]
fn multi_round_sweep_decreases() {
    let d = TempDir::new().unwrap();
    let c = write(
        d.path(),
        "c.json",
        r#"{"schema_version":1,"protocol":{"kind":"distball","dim":16,"voters":3},"experiment":"qint",
            "strategy":{"name":"distball-dtransfer","samples":500},"epsilon":0.34,
            "sweep":{"parameter":"rounds","values":[1,4,10]}}"#,
    );
    let o = qevote(
        d.path(),
        &[
            "run-experiment",
            "--config",
            &c,
            "--trials",
            "300",
            "--out",
            "o",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let series = fs::read_to_string(d.path().join("o/series.csv")).unwrap();
    let rates: Vec<f64> = series
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(4).unwrap().parse().unwrap())
        .collect();
    assert_eq!(rates.len(), 3);
    assert!(rates[0] > rates[2], "{rates:?}");
    assert!(rates.iter().all(|&r| r >= 0.25));
    assert!(d.path().join("o/plot.json").exists());
}

#[test]
fn direct_attacks_succeed() {
    let d = TempDir::new().unwrap();
    let cases = [
        (
            r#"{"kind":"travelball","voters":4}"#,
            r#"{"name":"travelball-double-vote"}"#,
        ),
        (
            r#"{"kind":"travelball","voters":4}"#,
            r#"{"name":"travelball-sandwich","victim_slot":2}"#,
        ),
        (
            r#"{"kind":"distball","dim":7,"voters":3,"difference":1,"backend":"full"}"#,
            r#"{"name":"distball-dtransfer","samples":null}"#,
        ),
        (
            r#"{"kind":"conjcode","voters":3,"n":2,"candidate_len":2}"#,
            r#"{"name":"conjcode-malleate","mask":[1,1]}"#,
        ),
        (
            r#"{"kind":"conjcode","voters":3,"n":2}"#,
            r#"{"name":"conjcode-serial"}"#,
        ),
    ];
    for (i, (p, s)) in cases.iter().enumerate() {
        let c = write(
            d.path(),
            &format!("c{i}.json"),
            &format!(r#"{{"schema_version":1,"protocol":{p},"strategy":{s}}}"#),
        );
        let out = format!("o{i}");
        let o = qevote(
            d.path(),
            &[
                "run-attack",
                "--config",
                &c,
                "--trials",
                "30",
                "--out",
                &out,
            ],
        );
        assert_eq!(o.status.code(), Some(0), "{s}");
        assert_eq!(
            json(&d.path().join(&out).join("attack.json"))["success_rate"],
            1.0,
            "{s}"
        );
    }
}

#[test]
fn bounds_pass_filter_and_fail_on_injection() {
    let d = TempDir::new().unwrap();
    let o = qevote(d.path(), &["verify-bounds", "--out", "all"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("three-bin.value"));

    let o = qevote(
        d.path(),
        &["verify-bounds", "--filter", "survival", "--out", "f"],
    );
    assert_eq!(o.status.code(), Some(0));
    let checks = json(&d.path().join("f/bounds.json"));
    let ids: Vec<&str> = checks
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["id"].as_str().unwrap())
        .collect();
    assert!(!ids.is_empty() && ids.iter().all(|id| id.starts_with("survival")));

    let o = qevote(
        d.path(),
        &[
            "verify-bounds",
            "--inject-wrong-constant",
            "three-bin.value=0.95",
            "--out",
            "bad",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("failed bounds: three-bin.value"));
}

#[test]
fn manifest_hashes_and_replay() {
    let d = TempDir::new().unwrap();
    let c = write(
        d.path(),
        "c.json",
        r#"{"schema_version":1,"protocol":{"kind":"dualbasis","voters":3,"candidates":2,"delta0":1},"experiment":"qpriv",
            "strategy":{"name":"dualbasis-abort","attacker":0},"epsilon":0.34}"#,
    );
    let o = qevote(
        d.path(),
        &[
            "run-experiment",
            "--config",
            &c,
            "--trials",
            "300",
            "--seed",
            "77",
            "--out",
            "a",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let m = json(&d.path().join("a/manifest.json"));
    assert_eq!(m["seed"], 77);
    for a in m["artifacts"].as_array().unwrap() {
        let bytes = fs::read(d.path().join("a").join(a["path"].as_str().unwrap())).unwrap();
        assert_eq!(
            hex::encode(Sha256::digest(&bytes)),
            a["sha256"].as_str().unwrap()
        );
    }
    let o = qevote(
        d.path(),
        &[
            "run-experiment",
            "--config",
            "a/config.json",
            "--threads",
            "1",
            "--out",
            "b",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    for f in ["config.json", "report.json", "trials.csv"] {
        assert_eq!(
            fs::read(d.path().join("a").join(f)).unwrap(),
            fs::read(d.path().join("b").join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn exports_series() {
    let d = TempDir::new().unwrap();
    let o = qevote(
        d.path(),
        &[
            "export",
            "--series",
            "rounds-threshold",
            "--max-rounds",
            "10",
            "--out",
            "x",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(d.path().join("x/rounds-threshold.csv")).unwrap();
    assert_eq!(csv.lines().count(), 10);
    assert!(csv.lines().nth(1).unwrap().starts_with("2,0.25"));
    let plot = json(&d.path().join("x/rounds-threshold.plot.json"));
    assert_eq!(plot["x"], "rounds");
    let o = qevote(d.path(), &["export", "--out", "y"]);
    assert_eq!(o.status.code(), Some(2));
}
