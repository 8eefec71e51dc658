use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_su2-mathieu"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SINGLE: &str = r#"{"terms":[{"l":"1/2","m":"1/2","n":"1/2","coeff":{"re":"1","im":"0"}}]}"#;
const PAIR: &str = r#"{"terms":[{"l":"1/2","m":"1/2","n":"-1/2","coeff":{"re":"1"}},{"l":"1/2","m":"-1/2","n":"1/2","coeff":{"re":"1"}}]}"#;
const ZONAL: &str = r#"{"terms":[{"l":"1","m":"0","n":"0","coeff":{"re":"1"}}]}"#;

fn scan_displays(doc: &Value) -> Vec<String> {
    doc["result"]["scan"]
        .as_array()
        .unwrap()
        .iter()
        .map(|row| row["value"]["display"].as_str().unwrap().to_string())
        .collect()
}

#[test]
fn integrate_trivial_product() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "p.json", r#"{"factors":[{"l":"0","m":"0","n":"0"}]}"#);
    let out = run(&["integrate", arg(&f)]);
    assert!(out.status.success());
    let doc = stdout_json(&out);
    assert_eq!(doc["schema"], 1);
    let expected: Value = serde_json::from_str(r#"{"real":[{"radicand":1,"coeff":"1"}],"imag":[]}"#).unwrap();
    assert_eq!(doc["result"]["exact"], expected);
    assert!(doc["result"].get("numeric").is_none());
}

#[test]
fn integrate_schur_pair_and_filtered_product() {
    let dir = TempDir::new().unwrap();
    let schur = write(
        &dir,
        "s.json",
        r#"{"factors":[{"l":"1/2","m":"1/2","n":"1/2"},{"l":"1/2","m":"-1/2","n":"-1/2"}]}"#,
    );
    let doc = stdout_json(&run(&["integrate", arg(&schur)]));
    assert_eq!(doc["result"]["display"], "1/2");
    let off = write(&dir, "o.json", r#"{"factors":[{"l":"1","m":"1","n":"0","power":3}]}"#);
    let doc = stdout_json(&run(&["integrate", arg(&off)]));
    assert_eq!(doc["result"]["display"], "0");
}

#[test]
fn integrate_with_monte_carlo_reports_seed() {
    let dir = TempDir::new().unwrap();
    let schur = write(
        &dir,
        "s.json",
        r#"{"factors":[{"l":"1/2","m":"1/2","n":"1/2"},{"l":"1/2","m":"-1/2","n":"-1/2"}]}"#,
    );
    let out = run(&["integrate", arg(&schur), "--mc", "50000", "--seed", "9"]);
    let doc = stdout_json(&out);
    assert_eq!(doc["seed"], 9);
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed: 9"));
    let mean = doc["result"]["numeric"]["mean"]["re"].as_f64().unwrap();
    let se = doc["result"]["numeric"]["std_error"].as_f64().unwrap();
    assert!((mean - 0.5).abs() <= 5.0 * se);
}

#[test]
fn power_scan_examples() {
    let dir = TempDir::new().unwrap();
    let single = write(&dir, "f.json", SINGLE);
    let doc = stdout_json(&run(&["power-scan", arg(&single), "--pmax", "4"]));
    assert_eq!(scan_displays(&doc), vec!["0"; 4]);
    let zonal = write(&dir, "z.json", ZONAL);
    let doc = stdout_json(&run(&["power-scan", arg(&zonal), "--pmax", "2"]));
    assert_eq!(scan_displays(&doc), vec!["0", "1/3"]);
    let doc = stdout_json(&run(&["power-scan", arg(&single), "--with-h", "1,-1,-1", "--pmax", "3"]));
    assert_eq!(scan_displays(&doc), vec!["0", "1/3", "0"]);
}

#[test]
fn hull_certificates() {
    let dir = TempDir::new().unwrap();
    let single = write(&dir, "f.json", SINGLE);
    let doc = stdout_json(&run(&["hull", arg(&single)]));
    assert_eq!(doc["result"]["inside"], false);
    assert_eq!(doc["result"]["separator"]["text"], "m + n >= 1");
    let pair = write(&dir, "p.json", PAIR);
    let doc = stdout_json(&run(&["hull", arg(&pair)]));
    assert_eq!(doc["result"]["inside"], true);
    assert_eq!(doc["result"]["weights"], serde_json::json!(["1/2", "1/2"]));
}

#[test]
fn threshold_and_its_precondition() {
    let dir = TempDir::new().unwrap();
    let single = write(&dir, "f.json", SINGLE);
    let doc = stdout_json(&run(&["threshold", arg(&single), "--h", "1,-1,-1"]));
    assert_eq!(doc["result"]["threshold"], 3);
    let pair = write(&dir, "p.json", PAIR);
    let out = run(&["threshold", arg(&pair), "--h", "1,-1,-1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no finite threshold guaranteed"));
}

#[test]
fn parse_errors_exit_2_and_name_the_field() {
    let dir = TempDir::new().unwrap();
    let cases = [
        (r#"{"terms":[{"l":"1/2","m":"1","n":"1/2","coeff":{"re":"1"}}]}"#, "terms[0]"),
        (r#"{"terms":[{"l":"1","m":"0","n":"0","coeff":{"re":"0"}}]}"#, "terms[0].coeff"),
        (r#"{"terms":[{"l":"x","m":"0","n":"0","coeff":{"re":"1"}}]}"#, "terms[0].l"),
        ("not json", "invalid JSON"),
    ];
    for (text, needle) in cases {
        let f = write(&dir, "bad.json", text);
        let out = run(&["hull", arg(&f)]);
        assert_eq!(out.status.code(), Some(2), "{text}");
        assert!(out.stdout.is_empty());
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(needle), "{text}: {err}");
    }
    let p = write(&dir, "bad.json", r#"{"factors":[{"l":"1","m":"0","n":"0","power":-1}]}"#);
    let out = run(&["integrate", arg(&p)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("factors[0].power"));
    let out = run(&["hull", "/definitely/not/here.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fuzz_is_reproducible_and_clean() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    for path in [&a, &b] {
        let out = run(&["fuzz", "--seed", "1", "--trials", "100", "--out", arg(path)]);
        assert_eq!(out.status.code(), Some(0));
        assert_eq!(stdout_json(&out)["result"]["violation"], 0);
        assert!(String::from_utf8_lossy(&out.stderr).contains("seed: 1"));
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let lines: Vec<Value> = String::from_utf8(ta)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 101);
    assert_eq!(lines.last().unwrap()["type"], "summary");
    assert!(lines.iter().all(|l| l["schema"] == 1));
}

#[test]
fn fuzz_rank2_bias_forces_rank_two() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("r.jsonl");
    let out = run(&["fuzz", "--seed", "3", "--trials", "25", "--pmax", "6", "--rank2-bias", "1.0", "--out", arg(&path)]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    for line in text.lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        if v["type"] == "instance" && v["k"] == 3 {
            assert_eq!(v["case"], "three-term-rank-2");
        }
    }
}

#[test]
fn fuzz_unwritable_output_exits_2() {
    let out = run(&["fuzz", "--trials", "1", "--out", "/definitely/not/here/x.jsonl"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn legendre_scan_first_nonzero() {
    let doc = stdout_json(&run(&["legendre-scan", "--coeff", "1=1", "--coeff", "2=1", "--pmax", "2"]));
    assert_eq!(doc["result"]["first_nonzero"], 2);
    assert_eq!(doc["result"]["moments"][1]["moment"], "8/15");
    let out = run(&["legendre-scan", "--coeff", "1=0", "--pmax", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_passes() {
    let out = run(&["verify"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = stdout_json(&out);
    assert_eq!(doc["result"]["passed"], true);
    let items = doc["result"]["items"].as_array().unwrap();
    let two_term = items.iter().find(|i| i["name"] == "two-term-criterion").unwrap();
    assert_eq!(two_term["data"]["witness"]["value"], "-1");
    let schur = items.iter().find(|i| i["name"] == "schur-orthogonality").unwrap();
    assert_eq!(schur["data"]["table"].as_array().unwrap().len(), 55);
    assert!(String::from_utf8_lossy(&out.stderr).contains("PASS schur-orthogonality"));
}
