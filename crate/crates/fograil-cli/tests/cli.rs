use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fograil"))
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fograil-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn solve_smoke_json_and_csv() {
    let csv_path = tmp("solve.csv");
    let out = bin()
        .args(["solve", "--grid-points", "300", "--out"])
        .arg(&csv_path)
        .output()
        .unwrap();
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["status"], "optimal");
    assert!(report["cost_total"].as_f64().unwrap() > 0.0);
    assert_eq!(
        report["iterations"].as_u64().unwrap() as usize,
        report["cost_history"].as_array().unwrap().len()
    );
    let csv = fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,P1,P2,C_t,segment_mode_1,segment_mode_2"
    );
    assert_eq!(lines.count(), 300);
}

#[test]
fn solve_invariant_constant_power() {
    let csv_path = tmp("invariant.csv");
    let out = bin()
        .args(["solve", "--solver", "invariant", "--grid-points", "200", "--out"])
        .arg(&csv_path)
        .output()
        .unwrap();
    stdout(&out);
    let csv = fs::read_to_string(&csv_path).unwrap();
    let rows: Vec<Vec<&str>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 200);
    for col in [1usize, 2] {
        let first = rows[0][col];
        assert!(rows.iter().all(|r| r[col] == first), "P{col} not constant");
    }
}

#[test]
fn infeasible_config_exits_2() {
    let cfg = tmp("starved.json");
    fs::write(&cfg, r#"{"p_avg": [0.05, 0.05]}"#).unwrap();
    let out = bin()
        .args(["solve", "--grid-points", "200", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("infeasible"));
}

#[test]
fn unknown_config_field_rejected() {
    let cfg = tmp("bad.json");
    fs::write(&cfg, r#"{"speed": 100.0}"#).unwrap();
    let out = bin().args(["solve", "--config"]).arg(&cfg).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn sweep_rows_and_determinism() {
    let run = || {
        bin()
            .args([
                "sweep",
                "--param",
                "eta",
                "--values",
                "0.5,1.0",
                "--rndc-trials",
                "5",
                "--grid-points",
                "150",
                "--seed",
                "7",
            ])
            .output()
            .unwrap()
    };
    let a = stdout(&run());
    let b = stdout(&run());
    assert_eq!(a, b, "sweep output must be byte-identical across runs");
    let mut lines = a.lines();
    assert_eq!(
        lines.next().unwrap(),
        "value,strategy,solver,cost_total,cost_transmit,cost_backhaul,iterations,cost_total_std"
    );
    let rows: Vec<&str> = lines.collect();
    // 2 values x 3 strategies
    assert_eq!(rows.len(), 6);
    assert!(rows[0].starts_with("0.5,popc,dynamic,"));
    // rndc rows carry a nonzero spread column, deterministic ones zero
    for row in &rows {
        let std_col = row.rsplit(',').next().unwrap();
        if row.contains(",rndc,") {
            assert!(std_col.parse::<f64>().unwrap() >= 0.0);
        } else {
            assert_eq!(std_col, "0");
        }
    }
}

#[test]
fn convergence_history_nonincreasing() {
    let out = bin()
        .args(["convergence", "--strategy", "nonc", "--grid-points", "200"])
        .output()
        .unwrap();
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "iteration,cost");
    let costs: Vec<f64> = lines
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(!costs.is_empty());
    for w in costs.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-9), "history must be nonincreasing");
    }
}

#[test]
fn tradeoff_grid_shape() {
    let out = bin()
        .args([
            "tradeoff",
            "--tau-values",
            "3.0,4.0",
            "--q-values",
            "0.5,1.0,2.0",
            "--grid-points",
            "200",
        ])
        .output()
        .unwrap();
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "tau_max,content_size,cost_total");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 6);
    // within the slack region the cost must not depend on content size
    let costs: Vec<f64> = rows
        .iter()
        .filter(|r| r.starts_with("3,"))
        .map(|r| r.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(costs.len(), 3);
    assert!((costs[0] - costs[2]).abs() <= 1e-8 * costs[0].max(1.0));
}
