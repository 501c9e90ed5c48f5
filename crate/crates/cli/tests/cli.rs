use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sandpile(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sandpile")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

const OUTPUTS: [&str; 4] = ["trajectory.jsonl", "final_config.json", "generator_histogram.csv", "manifest.json"];

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let r = sandpile(&["simulate", "--size", "20", "--steps", "1000", "--seed", "7", "--out", path_str(out)]);
        assert_eq!(code(&r), 0, "{}", stderr(&r));
    }
    for name in OUTPUTS {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let traj = fs::read_to_string(a.join("trajectory.jsonl")).unwrap();
    assert_eq!(traj.lines().count(), 1001);
    let header: serde_json::Value = serde_json::from_str(traj.lines().next().unwrap()).unwrap();
    assert_eq!(header["seed"], 7);
    assert_eq!(header["manifest"]["command"], "simulate");
    assert_eq!(header["manifest"]["params"]["steps"], 1000);

    let c = dir.path().join("c");
    sandpile(&["simulate", "--size", "20", "--steps", "1000", "--seed", "8", "--out", path_str(&c)]);
    assert_ne!(fs::read(a.join("trajectory.jsonl")).unwrap(), fs::read(c.join("trajectory.jsonl")).unwrap());
}

#[test]
fn thread_cap_does_not_change_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let args = |out: &Path| -> Vec<String> {
        ["simulate", "--size", "12", "--steps", "300", "--seed", "3", "--out", path_str(out)].map(String::from).to_vec()
    };
    let one =
        Command::new(env!("CARGO_BIN_EXE_sandpile")).args(args(&a)).env("SANDPILE_THREADS", "1").output().unwrap();
    assert_eq!(code(&one), 0);
    sandpile(&args(&b).iter().map(String::as_str).collect::<Vec<_>>());
    for name in OUTPUTS {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let bad =
        Command::new(env!("CARGO_BIN_EXE_sandpile")).args(args(&a)).env("SANDPILE_THREADS", "zero").output().unwrap();
    assert_eq!(code(&bad), 2);
}

#[test]
fn simulate_zero_steps_keeps_config() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("start.txt");
    fs::write(&input, "3 2 1\n0 3 3\n1 2 0\n").unwrap();
    let out = dir.path().join("run");
    let r = sandpile(&["simulate", "--config", path_str(&input), "--steps", "0", "--out", path_str(&out)]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    let final_cfg: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("final_config.json")).unwrap()).unwrap();
    assert_eq!(final_cfg["L"], 3);
    assert_eq!(final_cfg["heights"], serde_json::json!([3, 2, 1, 0, 3, 3, 1, 2, 0]));
    assert_eq!(fs::read_to_string(out.join("trajectory.jsonl")).unwrap().lines().count(), 1);
    // Generators {(1,1)} and {(2,2),(2,3)}.
    assert_eq!(fs::read_to_string(out.join("generator_histogram.csv")).unwrap(), "size,count\n1,1\n2,1\n");
}

#[test]
fn histogram_counts_every_generator() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("big");
    let r = sandpile(&["simulate", "--size", "50", "--steps", "10000", "--seed", "1", "--out", path_str(&out)]);
    assert_eq!(code(&r), 0);
    let final_cfg = fs::read_to_string(out.join("final_config.json")).unwrap();
    let cfg_path = out.join("final_config.json");
    let analysis = sandpile(&["analyze", "--config", path_str(&cfg_path), "--format", "csv"]);
    assert_eq!(code(&analysis), 0, "{}", stderr(&analysis));
    let generators = stdout(&analysis).lines().count() - 1;
    let total: usize = fs::read_to_string(out.join("generator_histogram.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse::<usize>().unwrap())
        .sum();
    assert_eq!(total, generators);
    assert!(final_cfg.contains("\"L\":50"));
}

#[test]
fn simulate_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = path_str(dir.path());
    assert_eq!(code(&sandpile(&["simulate", "--steps", "5", "--out", out])), 2);
    assert_eq!(code(&sandpile(&["simulate", "--size", "5", "--steps", "-1", "--out", out])), 2);
    assert_eq!(code(&sandpile(&["simulate", "--size", "0", "--steps", "5", "--out", out])), 2);
    assert_eq!(code(&sandpile(&["simulate", "--size", "5", "--steps", "5", "--out", out, "--bogus"])), 2);
    let unstable = dir.path().join("u.txt");
    fs::write(&unstable, "4 0\n0 0\n").unwrap();
    let r = sandpile(&["simulate", "--config", path_str(&unstable), "--steps", "5", "--out", out]);
    assert_eq!(code(&r), 3);
}

#[test]
fn analyze_empty_and_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let zeros = dir.path().join("zeros.json");
    fs::write(&zeros, r#"{"L":4,"heights":[0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0]}"#).unwrap();
    let r = sandpile(&["analyze", "--config", path_str(&zeros)]);
    assert_eq!(code(&r), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&r)).unwrap();
    assert_eq!(v["reports"], serde_json::json!([]));

    let mut rows = vec![vec![0; 10]; 10];
    for (r, c) in
        (2..=4).flat_map(|r| (2..=5).map(move |c| (r, c))).chain((6..=8).flat_map(|r| (2..=4).map(move |c| (r, c))))
    {
        rows[r - 1][c - 1] = 3;
    }
    rows[4][1] = 3;
    let text: String = rows.iter().map(|r| r.iter().map(i32::to_string).collect::<Vec<_>>().join(" ") + "\n").collect();
    let fixture = dir.path().join("two_branch.grid");
    fs::write(&fixture, text).unwrap();
    let r = sandpile(&["analyze", "--config", path_str(&fixture), "--generator", "3,3", "--oracle"]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    let v: serde_json::Value = serde_json::from_str(&stdout(&r)).unwrap();
    let report = &v["reports"][0];
    assert_eq!(report["generator"].as_array().unwrap().len(), 22);
    assert_eq!(report["wave_tree"]["wave_size"], 22);
    let children = report["wave_tree"]["children"].as_array().unwrap();
    let mut sizes: Vec<u64> = children.iter().map(|c| c["wave_size"].as_u64().unwrap()).collect();
    sizes.sort();
    assert_eq!(sizes, [1, 2]);
    assert_eq!(report["oracle"]["matched"], true);
}

#[test]
fn analyze_oracle_on_random_configs() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    sandpile(&["simulate", "--size", "15", "--steps", "2000", "--seed", "11", "--out", path_str(&run)]);
    let cfg = run.join("final_config.json");
    let r = sandpile(&["analyze", "--config", path_str(&cfg), "--oracle", "--format", "csv"]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    let body = stdout(&r);
    assert!(body.lines().count() > 1);
    assert!(body.lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn analyze_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.txt");
    fs::write(&cfg, "3 0\n0 0\n").unwrap();
    assert_eq!(code(&sandpile(&["analyze", "--config", path_str(&cfg), "--generator", "2,2"])), 3);
    assert_eq!(code(&sandpile(&["analyze", "--config", path_str(&cfg), "--generator", "9,9"])), 3);
    assert_eq!(code(&sandpile(&["analyze", "--config", path_str(&cfg), "--generator", "x"])), 2);
    assert_eq!(code(&sandpile(&["analyze", "--config", path_str(&cfg), "--config-format", "json"])), 3);
    assert_eq!(code(&sandpile(&["analyze"])), 2);
    assert_eq!(code(&sandpile(&["analyze", "--square", "3", "--config", path_str(&cfg)])), 2);
    assert_eq!(code(&sandpile(&["analyze", "--square", "3", "--background", "3"])), 2);
    let r = sandpile(&["analyze", "--config", path_str(&cfg), "--generator", "1,1"]);
    assert_eq!(code(&r), 0);
}

#[test]
fn intervene_squares() {
    let r = sandpile(&["intervene", "--square", "2"]);
    assert_eq!(code(&r), 0);
    let body = stdout(&r);
    let rows: Vec<&str> = body.lines().collect();
    assert_eq!(rows[0], "row,col,expected_after_num,expected_after_den,ratio_num,ratio_den,is_cornerstone");
    assert_eq!(rows.len(), 5);
    assert!(rows[1..].iter().all(|l| l.ends_with(",9,16,true")));

    let r = sandpile(&["intervene", "--square", "3"]);
    assert!(stderr(&r).contains("lambda = 32/41"));
    let r = sandpile(&["intervene", "--square", "3", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&r)).unwrap();
    assert_eq!(v["generators"][0]["stability_level"], serde_json::json!({"num": "32", "den": "41"}));
    assert_eq!(v["generators"][0]["cornerstones"], serde_json::json!([[2, 3], [3, 2], [3, 4], [4, 3]]));
}

#[test]
fn intervene_marks_minimum_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.txt");
    fs::write(&cfg, "3 3 3 2 0\n3 2 3 3 1\n3 3 3 1 3\n0 3 2 3 3\n1 3 3 3 2\n").unwrap();
    let out = dir.path().join("table.json");
    let r = sandpile(&["intervene", "--config", path_str(&cfg), "--format", "json", "--out", path_str(&out)]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    assert!(dir.path().join("table.json.manifest.json").exists());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let ratio = |x: &serde_json::Value| {
        let n: f64 = x["num"].as_str().unwrap().parse().unwrap();
        let d: f64 = x["den"].as_str().unwrap().parse().unwrap();
        n / d
    };
    for g in v["generators"].as_array().unwrap() {
        let lambda = &g["stability_level"];
        for row in g["table"].as_array().unwrap() {
            assert_eq!(row["is_cornerstone"].as_bool().unwrap(), row["ratio"] == *lambda);
            assert!(ratio(&row["ratio"]) >= ratio(lambda));
        }
    }
}

#[test]
fn verify_square_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("verify.csv");
    let r = sandpile(&["verify-square", "--n-min", "1", "--n-max", "12", "--out", path_str(&out)]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    let report = fs::read_to_string(&out).unwrap();
    assert!(report.starts_with("N,quantity,k,closed_form,algorithmic,match\n"));
    assert!(report.lines().skip(1).all(|l| l.ends_with(",true")));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("verify.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "verify-square");
    assert_eq!(manifest["outputs"], serde_json::json!(["verify.csv"]));

    let r = sandpile(&["verify-square", "--n-min", "3", "--n-max", "3", "--background", "2"]);
    assert_eq!(code(&r), 0);
    let body = stdout(&r);
    assert!(body.contains("3,removal_ring,2,64/9,64/9,true"));
    assert!(body.contains("3,removal_corner,2,65/9,65/9,true"));

    assert_eq!(code(&sandpile(&["verify-square", "--n-min", "1", "--n-max", "3", "--corrupt-closed-form"])), 1);
    assert_eq!(code(&sandpile(&["verify-square", "--n-min", "0", "--n-max", "3"])), 2);
    assert_eq!(code(&sandpile(&["verify-square", "--n-min", "5", "--n-max", "3"])), 2);
    assert!(!stdout(&sandpile(&["verify-square", "--help"])).contains("corrupt"));
}
