use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_totient-forest"))
        .args(args)
        .env_remove("TOTIENT_FOREST_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn phi_and_fiber() {
    assert_eq!(stdout(&["phi", "12"]), "4\n");
    assert_eq!(stdout(&["fiber", "24"]), "{35, 39, 45, 52, 56, 70, 72, 78, 84, 90}\n");
    assert_eq!(
        stdout(&["fiber", "24", "--order", "asc"]),
        stdout(&["fiber", "24", "--oracle"])
    );
    assert_eq!(stdout(&["fiber", "14"]), "{}\n");
    assert_eq!(stdout(&["fiber", "2", "--format", "csv"]), "m,n\n2,3\n2,4\n2,6\n");
}

#[test]
fn naturals_synthesis() {
    let text = stdout(&[
        "forest",
        "--sequence",
        "naturals",
        "--bound",
        "naturals",
        "--synthesize",
        "--height-cap",
        "300",
    ]);
    assert_eq!(text, "1\tn = 1,2\n2\tn = 3,4\n4\totherwise\n");
}

#[test]
fn inconclusive_synthesis_exits_3() {
    let out = run(&[
        "forest",
        "--sequence",
        "list:1,2,3,4,5,6",
        "--bound",
        "naturals",
        "--synthesize",
        "--height-cap",
        "50",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("inconclusive"));
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["phi", "0"]).status.code(), Some(1));
    assert_eq!(
        run(&["eval", "--sequence", "primes", "--n", "3"]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["phi"]).status.code(), Some(2));
    assert_eq!(
        run(&["forest", "--sequence", "odds", "--bound", "nonsense"])
            .status
            .code(),
        Some(1)
    );
    let out = run(&[
        "validate-bound",
        "--sequence",
        "naturals",
        "--bound",
        "constant:3",
        "--n-max",
        "6",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("5,0,4,3"));
    assert!(run(&[
        "validate-bound",
        "--sequence",
        "squares",
        "--bound",
        "squares",
        "--n-max",
        "100"
    ])
    .status
    .success());
}

#[test]
fn traces_and_sequences() {
    assert_eq!(
        stdout(&["eval", "--sequence", "squares", "--n", "3", "--trace"]),
        "n,k,value\n3,0,4\n3,1,4\n3,2,6\n3,3,0\n"
    );
    assert_eq!(stdout(&["eval", "--sequence", "cubes", "--n", "13"]), "110\n");
    assert_eq!(
        stdout(&["sequence", "--sequence", "naturals", "--n-max", "5"]),
        "n,value\n1,1\n2,1\n3,2\n4,2\n5,4\n"
    );
}

#[test]
fn frequency_outputs() {
    assert_eq!(
        stdout(&["freq", "--sequence", "naturals", "--n-max", "10"]),
        "value,count,share\n1,2,0.200000\n2,2,0.200000\n4,6,0.600000\n"
    );
    let rolling = stdout(&["freq", "--sequence", "naturals", "--n-max", "6", "--window", "5"]);
    assert_eq!(
        rolling,
        "n,value,share\n5,1,0.400000\n5,2,0.400000\n5,4,0.200000\n6,1,0.200000\n6,2,0.400000\n6,4,0.400000\n"
    );
    assert_eq!(
        run(&["freq", "--sequence", "naturals", "--n-max", "3", "--window", "4"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn json_carries_schema_version() {
    let v: serde_json::Value = serde_json::from_str(&stdout(&["phi", "12", "--format", "json"])).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["phi"], 4);
    let forest = stdout(&[
        "forest",
        "--sequence",
        "naturals",
        "--bound",
        "naturals",
        "--height-cap",
        "50",
        "--synthesize",
        "--stats",
        "--format",
        "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&forest).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["trees"].as_array().unwrap().len(), 4);
    assert_eq!(v["trees"][1]["fruit_heights"], serde_json::json!([3, 4]));
    assert_eq!(v["case_equation"]["otherwise"], 4);
    assert!(v["canopy"].as_array().unwrap().len() > 40);
}

#[test]
fn output_file_and_levels() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("canopy.csv");
    let levels = dir.path().join("levels");
    stdout(&[
        "forest",
        "--sequence",
        "naturals",
        "--bound",
        "naturals",
        "--height-cap",
        "20",
        "--stats",
        "--format",
        "csv",
        "--output",
        out.to_str().unwrap(),
        "--levels-dir",
        levels.to_str().unwrap(),
    ]);
    let canopy = std::fs::read_to_string(&out).unwrap();
    assert!(canopy.starts_with("height,root,count,share\n0,1,1,0.250000\n"));
    let six = std::fs::read_to_string(levels.join("tree-6.csv")).unwrap();
    assert!(six.starts_with("height,value\n0,6\n"));
}

#[test]
fn deterministic_output() {
    let args = [
        "forest",
        "--sequence",
        "squares",
        "--bound",
        "squares",
        "--height-cap",
        "40",
        "--format",
        "json",
    ];
    let a = stdout(&args);
    let b = Command::new(env!("CARGO_BIN_EXE_totient-forest"))
        .args(args)
        .env("TOTIENT_FOREST_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(a.as_bytes(), b.stdout.as_slice());
}
