use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const HEADER: &str = "algorithm,lr,dim,steps,seed,k,mae,matthew_degree,runtime_ms";

fn zsrank(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zsrank"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// 20 users x 15 items, about half observed, integer ratings 1..5.
fn ratings_file(dir: &TempDir) -> PathBuf {
    let mut text = String::new();
    for u in 0..20u32 {
        for i in 0..15u32 {
            if (u * 7 + i * 3) % 5 < 3 {
                text.push_str(&format!("{}::{}::{}::0\n", u + 1, i + 100, (u + i) % 5 + 1));
            }
        }
    }
    let path = dir.path().join("ratings.dat");
    fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(code(&zsrank(&[])), 1);
    assert_eq!(code(&zsrank(&["frobnicate"])), 1);
    assert_eq!(code(&zsrank(&["eval"])), 1);
    let dir = TempDir::new().unwrap();
    let data = ratings_file(&dir);
    assert_eq!(code(&zsrank(&["eval", "--dataset", s(&data), "--algo", "zeromat"])), 1);
    assert_eq!(code(&zsrank(&["eval", "--dataset", s(&data), "--lr", "fast"])), 1);
    assert_eq!(code(&zsrank(&["eval", "--dataset", s(&data), "--split", "1.5"])), 1);
    assert_eq!(code(&zsrank(&["eval", "--dataset", s(&data), "--report", "pdf"])), 1);
    assert_eq!(code(&zsrank(&["--help"])), 0);
}

#[test]
fn data_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.dat");
    assert_eq!(code(&zsrank(&["eval", "--dataset", s(&missing)])), 2);
    let bad = dir.path().join("bad.dat");
    fs::write(&bad, "1::2::x::0\n").unwrap();
    let out = zsrank(&["eval", "--dataset", s(&bad)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
}

#[test]
fn eval_prints_one_csv_row() {
    let dir = TempDir::new().unwrap();
    let data = ratings_file(&dir);
    let out = zsrank(&["eval", "--dataset", s(&data), "--algo", "mf", "--lr", "0.01", "--dim", "3", "--k", "2"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], HEADER);
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("mf,0.01,3,20,42,2,"), "{}", lines[1]);
}

#[test]
fn numeric_failure_exits_3() {
    let dir = TempDir::new().unwrap();
    let data = ratings_file(&dir);
    let out = zsrank(&["eval", "--dataset", s(&data), "--algo", "mf", "--lr", "1000"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn partial_sweep_exits_4_and_marks_row() {
    let dir = TempDir::new().unwrap();
    let data = ratings_file(&dir);
    let out = zsrank(&["sweep", "--dataset", s(&data), "--algo", "mf,global_mean", "--lr", "0.01,1000"]);
    assert_eq!(code(&out), 4);
    let text = stdout(&out);
    let rows: Vec<_> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("mf,0.01,"));
    assert!(rows[1].starts_with("mf,1000,") && rows[1].contains(",failed,failed,"));
    assert!(rows[2].starts_with("global_mean,0.01,"));
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = TempDir::new().unwrap();
    let data = ratings_file(&dir);
    let config = dir.path().join("exp.json");
    let json = format!(
        r#"{{"dataset": "{}", "algorithm": "item_mean", "seed": 7, "k": 3}}"#,
        s(&data)
    );
    fs::write(&config, json).unwrap();

    let from_file = stdout(&zsrank(&["eval", "--config", s(&config)]));
    assert!(from_file.lines().nth(1).unwrap().starts_with("item_mean,0.001,10,0,7,3,"));

    let overridden = stdout(&zsrank(&["eval", "--config", s(&config), "--seed", "9", "--algo", "user_mean"]));
    assert!(overridden.lines().nth(1).unwrap().starts_with("user_mean,0.001,10,0,9,3,"));

    fs::write(&config, r#"{"dataset": "x", "colour": "red"}"#).unwrap();
    assert_eq!(code(&zsrank(&["eval", "--config", s(&config)])), 1);
}

#[test]
fn sweep_writes_csv_and_charts() {
    let dir = TempDir::new().unwrap();
    let data = ratings_file(&dir);
    let base = dir.path().join("runs");
    let out = zsrank(&[
        "sweep", "--dataset", s(&data), "--algo", "zeroshot_listwise,random_uniform",
        "--lr", "0.001,0.01", "--steps", "500", "--out", s(&base), "--report", "both",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("runs.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some(HEADER));
    assert_eq!(csv.lines().count(), 5);
    for chart in ["runs_mae.svg", "runs_matthew.svg"] {
        let svg = fs::read_to_string(dir.path().join(chart)).unwrap();
        assert!(svg.starts_with("<svg"), "{chart}");
    }
}

#[test]
fn train_writes_loadable_model() {
    let dir = TempDir::new().unwrap();
    let data = ratings_file(&dir);
    let model_path = dir.path().join("zs.bin");
    let out = zsrank(&["train", "--dataset", s(&data), "--dim", "4", "--steps", "300", "--out", s(&model_path)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let model = zsrank::FactorModel::load(&model_path).unwrap();
    assert_eq!(model.dim(), 4);
    assert!(model.is_constrained());

    let heuristic = zsrank(&["train", "--dataset", s(&data), "--algo", "global_mean", "--out", s(&model_path)]);
    assert_eq!(code(&heuristic), 1);
}

#[test]
fn recommend_lists_k_items() {
    let dir = TempDir::new().unwrap();
    let data = ratings_file(&dir);
    let out = zsrank(&["recommend", "--dataset", s(&data), "--algo", "item_mean", "--user", "3", "--k", "4"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "rank,item,score");
    assert_eq!(lines.len(), 5);
    let unknown = zsrank(&["recommend", "--dataset", s(&data), "--user", "999"]);
    assert_ne!(code(&unknown), 0);
}

#[test]
fn orderstat_check_reports_estimate() {
    let out = zsrank(&["orderstat-check", "--n", "2", "--samples", "200000"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let estimate: f64 = text
        .split_whitespace()
        .find_map(|t| t.strip_prefix("estimate="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((estimate - 1.0).abs() < 0.02, "{text}");
    assert_eq!(code(&zsrank(&["orderstat-check", "--density", "cauchy"])), 1);
    assert_eq!(code(&zsrank(&["orderstat-check", "--n", "9"])), 1);
}
