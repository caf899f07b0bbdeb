use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_finsler-iso"))
        .args(args)
        .env("FINSLER_ISO_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exit code")
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(
        out.status.code().is_some_and(|c| c <= 1),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn value(args: &[&str]) -> f64 {
    json(args)["value"].as_f64().unwrap()
}

#[test]
fn eval_examples() {
    assert_eq!(
        value(&[
            "eval",
            "--metric",
            "euclidean",
            "--dim",
            "3",
            "--g",
            "1,0,0",
            "--h",
            "0,3,4"
        ]),
        5.0
    );
    assert_eq!(
        value(&[
            "eval",
            "--metric",
            "fubini-study",
            "--dim",
            "2",
            "--g",
            "1,0",
            "--h",
            "0,2"
        ]),
        2.0
    );
    let v = json(&[
        "eval",
        "--metric",
        "fubini-study-riemann",
        "--field",
        "complex",
        "--g",
        "1,0,0",
        "--h",
        "0,1:0,0",
        "--f",
        "0,0:1,0",
    ]);
    // sigma_g(f, h) = <f, h>/|g|^2 - <f,g><g,h>/|g|^4 with f = i e2, h = e2
    assert_eq!(v["sigma"][0].as_f64(), Some(0.0));
    assert_eq!(v["sigma"][1].as_f64(), Some(1.0));
}

#[test]
fn exit_code_matrix() {
    let cases: &[(&[&str], i32)] = &[
        (
            &[
                "eval",
                "--metric",
                "euclidean",
                "--dim",
                "2",
                "--g",
                "1,0",
                "--h",
                "1",
            ],
            2,
        ),
        (
            &[
                "eval",
                "--metric",
                "euclidean",
                "--g",
                "1,0,x",
                "--h",
                "1,0,0",
            ],
            2,
        ),
        (
            &[
                "eval",
                "--metric",
                "euclidean",
                "--g",
                "1:1,0,0",
                "--h",
                "1,0,0",
            ],
            2,
        ),
        (
            &[
                "eval",
                "--metric",
                "theta:1 +",
                "--g",
                "1,0,0",
                "--h",
                "0,1,0",
            ],
            2,
        ),
        (
            &["eval", "--metric", "nosuch", "--g", "1,0,0", "--h", "0,1,0"],
            2,
        ),
        (&["eval", "--g", "1,0,0", "--h", "0,1,0"], 2),
        (&["eval", "--metric", "euclidean", "--h", "0,1,0"], 2),
        (&["frobnicate"], 2),
        (
            &[
                "eval",
                "--metric",
                "fubini-study",
                "--g",
                "0,0,0",
                "--h",
                "0,1,0",
            ],
            3,
        ),
        (
            &[
                "check",
                "invariance",
                "--metric",
                "euclidean",
                "--dim",
                "4",
                "--samples",
                "500",
            ],
            0,
        ),
        (&["check", "kaehler", "--metric", "fubini-study"], 0),
        (&["check", "pd", "--metric", "euclidean"], 0),
        (&["check", "pd", "--metric", "riemann:1/r;-1/(r*r)"], 1),
        (
            &[
                "check",
                "homothety",
                "--alpha",
                "2",
                "--metric",
                "euclidean",
            ],
            1,
        ),
        (
            &[
                "check",
                "homothety",
                "--alpha",
                "2",
                "--metric",
                "norm-quotient",
            ],
            0,
        ),
        (&["check", "homothety", "--metric", "euclidean"], 2),
        (&["check", "pd", "--metric", "theta:1 + cos(tau)"], 2),
        (
            &[
                "probe-main",
                "--metric",
                "euclidean",
                "--dim",
                "3",
                "--maps",
                "100",
            ],
            0,
        ),
        (
            &[
                "probe-main",
                "--metric",
                "area",
                "--dim",
                "2",
                "--sl2",
                "100",
            ],
            0,
        ),
        (&["probe-main", "--dim", "2", "--metric", "euclidean"], 2),
        (&["probe-main", "--metric", "lambda:0", "--maps", "3"], 3),
        (&["decompose", "--metric", "euclidean", "--dim", "1"], 3),
        (
            &[
                "distance",
                "--metric",
                "lambda:-1",
                "--g",
                "1,0,0",
                "--h",
                "0,1,0",
            ],
            3,
        ),
    ];
    for (args, want) in cases {
        let out = run(args);
        assert_eq!(
            out.status.code(),
            Some(*want),
            "{args:?}\nstdout: {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn failed_checks_carry_a_witness() {
    let v = json(&[
        "check",
        "homothety",
        "--alpha",
        "2",
        "--metric",
        "euclidean",
    ]);
    assert_eq!(v["passed"], false);
    assert_eq!(v["witness"]["g"].as_array().unwrap().len(), 3);
}

#[test]
fn decompose_messages_and_tables() {
    let out = run(&["decompose", "--metric", "euclidean", "--dim", "1"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("decomposition requires dim ≥ 2"));

    let out = run(&["decompose", "--metric", "euclidean", "--grid", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let mut rd = csv::Reader::from_reader(out.stdout.as_slice());
    assert_eq!(rd.headers().unwrap(), vec!["r", "tau", "theta_value"]);
    for rec in rd.records() {
        let theta: f64 = rec.unwrap()[2].parse().unwrap();
        assert!((theta - 1.0).abs() <= 1e-9);
    }

    let out = run(&[
        "decompose",
        "--metric",
        "fubini-study-riemann",
        "--grid",
        "5",
    ]);
    let mut rd = csv::Reader::from_reader(out.stdout.as_slice());
    let mut n = 0;
    for rec in rd.records() {
        let rec = rec.unwrap();
        let [r, phi, psi]: [f64; 3] = std::array::from_fn(|i| rec[i].parse().unwrap());
        assert!((phi * r - 1.0).abs() <= 1e-6, "phi {phi} at {r}");
        assert!((psi * r * r + 1.0).abs() <= 1e-6, "psi {psi} at {r}");
        n += 1;
    }
    assert_eq!(n, 5);
}

#[test]
fn distances() {
    let d = value(&[
        "distance",
        "--metric",
        "euclidean",
        "--g",
        "1,0,0",
        "--h",
        "2,1,0",
    ]);
    assert!((d - 2f64.sqrt()).abs() <= 1e-3, "{d}");
    let d = value(&[
        "distance",
        "--metric",
        "euclidean",
        "--g",
        "1,0,0",
        "--h",
        "1,1,0",
    ]);
    assert!((d - 1.0).abs() <= 1e-3, "{d}");
    let d = value(&[
        "distance",
        "--metric",
        "fubini-study",
        "--g",
        "1,0,0",
        "--h",
        "0,1,0",
    ]);
    assert!((d - std::f64::consts::FRAC_PI_2).abs() <= 1e-2, "{d}");
}

#[test]
fn path_file_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("path.csv");
    let p = path.to_str().unwrap();
    let v = json(&[
        "distance",
        "--metric",
        "fubini-study-riemann",
        "--field",
        "complex",
        "--dim",
        "2",
        "--g",
        "1,0",
        "--h",
        "0,1:1",
        "--vertices",
        "17",
        "--iterations",
        "20",
        "--path-out",
        p,
    ]);
    assert_eq!(v["path_file"], p);
    let mut rd = csv::Reader::from_path(&path).unwrap();
    assert_eq!(rd.headers().unwrap(), vec!["t", "x1", "x2", "y1", "y2"]);
    assert_eq!(rd.records().count(), 17);
}

#[test]
fn metric_sources_agree() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("m.json");
    let doc = r#"{"family":"theta","params":{"expr":"1 + cos(tau)"}}"#;
    std::fs::write(&file, doc).unwrap();
    let at = format!("@{}", file.display());
    let base = ["eval", "--g", "1,0,0", "--h", "1,2,0"];
    let inline = value(&[&base[..], &["--metric", "theta:1 + cos(tau)"]].concat());
    assert_eq!(value(&[&base[..], &["--metric", doc]].concat()), inline);
    assert_eq!(value(&[&base[..], &["--metric", &at]].concat()), inline);
    assert_eq!(
        value(&[&base[..], &["--config", file.to_str().unwrap()]].concat()),
        inline
    );
}

#[test]
fn output_is_byte_identical_across_runs() {
    let args = [
        "probe-main",
        "--metric",
        "fubini-study",
        "--maps",
        "20",
        "--seed",
        "7",
    ];
    let a = run(&args);
    let b = Command::new(env!("CARGO_BIN_EXE_finsler-iso"))
        .args(args)
        .env("FINSLER_ISO_THREADS", "5")
        .output()
        .unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
    let c = run(&[
        "probe-main",
        "--metric",
        "fubini-study",
        "--maps",
        "20",
        "--seed",
        "8",
    ]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn output_flag_writes_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let out = run(&[
        "eval",
        "--metric",
        "euclidean",
        "--g",
        "1,0,0",
        "--h",
        "0,3,4",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    assert_eq!(
        std::fs::read_to_string(&path).unwrap(),
        "{\"value\":5.0000000000000000e0}\n"
    );
}

#[test]
fn csv_report_format() {
    let out = run(&[
        "eval",
        "--metric",
        "euclidean",
        "--g",
        "1,0,0",
        "--h",
        "0,3,4",
        "--format",
        "csv",
    ]);
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "field,value\nvalue,5.0000000000000000e0\n"
    );
}

#[test]
fn bad_thread_count_is_a_usage_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_finsler-iso"))
        .args([
            "eval",
            "--metric",
            "euclidean",
            "--g",
            "1,0,0",
            "--h",
            "0,3,4",
        ])
        .env("FINSLER_ISO_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(code(&["--help"]), 0);
}
