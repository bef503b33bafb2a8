use std::path::Path;
use std::process::{Command, Output};

fn reusekit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reusekit"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn reusekit")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = reusekit(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn gen_lengths_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "gen", "cyclic", "--d", "1024", "--sweeps", "100", "-o", "c.txt",
        ],
    );
    assert_eq!(read(d, "c.txt").lines().count(), 102_400);
    for name in ["a.txt", "b.txt"] {
        ok(
            d,
            &[
                "gen",
                "uniform-stack",
                "--d",
                "64",
                "--n",
                "5000",
                "--seed",
                "7",
                "-o",
                name,
            ],
        );
    }
    assert_eq!(read(d, "a.txt"), read(d, "b.txt"));
    ok(
        d,
        &[
            "gen",
            "random",
            "--universe",
            "500",
            "--n",
            "3000",
            "--seed",
            "1",
            "--format",
            "binary",
            "-o",
            "r.bin",
        ],
    );
    assert_eq!(std::fs::metadata(d.join("r.bin")).unwrap().len(), 3000 * 8);
    let manifest: serde_json::Value =
        serde_json::from_str(&read(d, "r.bin.manifest.json")).unwrap();
    assert_eq!(manifest["seed"], 1);
    assert_eq!(manifest["subcommand"], "gen");
    assert!(!reusekit(d, &["gen", "random", "--n", "10", "-o", "x.txt"])
        .status
        .success());
}

#[test]
fn histogram_estimate_simulate_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("abc.txt"), "0x0\n0x40\n0x80\n0x40\n0x80\n0x0\n").unwrap();
    ok(
        d,
        &["histogram", "abc.txt", "--compare-engines", "-o", "h.csv"],
    );
    assert_eq!(
        read(d, "h.csv"),
        "distance,count\n1,2\n2,1\ncold,3\ntotal,6\nblock_size,64\n"
    );
    ok(
        d,
        &[
            "estimate",
            "h.csv",
            "--size-bytes",
            "128,256",
            "--inclusion",
            "inclusive",
            "-o",
            "e.csv",
        ],
    );
    assert!(read(d, "e.csv").contains("\n2,256,3,0.5,500\n"));
    ok(
        d,
        &[
            "simulate",
            "abc.txt",
            "--size-bytes",
            "128,256",
            "-o",
            "s.csv",
        ],
    );
    assert_eq!(
        read(d, "s.csv"),
        "level,accesses,hits,misses,mpka\n1,6,2,4,666.6666666666666\n2,4,1,3,500\n"
    );
    // a histogram at a different line size cannot drive a 64-byte estimate
    ok(
        d,
        &[
            "histogram",
            "abc.txt",
            "--line-bytes",
            "128",
            "-o",
            "h128.csv",
        ],
    );
    assert!(!reusekit(
        d,
        &[
            "estimate",
            "h128.csv",
            "--size-bytes",
            "64,128",
            "-o",
            "x.csv"
        ]
    )
    .status
    .success());
}

#[test]
fn line_size_halves_max_distance() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "gen", "cyclic", "--d", "256", "--sweeps", "4", "-o", "c.txt",
        ],
    );
    let max_distance = |line: &str, out: &str| {
        ok(d, &["histogram", "c.txt", "--line-bytes", line, "-o", out]);
        read(d, out)
            .lines()
            .skip(1)
            .filter_map(|l| l.split_once(','))
            .filter_map(|(k, _)| k.parse::<u64>().ok())
            .max()
            .unwrap()
    };
    assert_eq!(max_distance("64", "h64.csv"), 255);
    assert_eq!(max_distance("128", "h128.csv"), 127);
}

#[test]
fn compare_reports_exact_modes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "gen",
            "random",
            "--universe",
            "256",
            "--n",
            "4000",
            "--seed",
            "3",
            "-o",
            "r.txt",
        ],
    );
    for extra in [
        &["--inclusion", "exclusive"][..],
        &["--inclusion", "inclusive", "--lru-inheritance"],
    ] {
        let mut args = vec!["compare", "r.txt", "--grid", "6..10,7..12", "-o", "cmp.csv"];
        args.extend_from_slice(extra);
        ok(d, &args);
        let report: serde_json::Value = serde_json::from_str(&read(d, "cmp.csv.json")).unwrap();
        assert!(report["max_error"]
            .as_array()
            .unwrap()
            .iter()
            .all(|e| e.as_f64() == Some(0.0)));
    }
}

#[test]
fn optimize_exit_codes_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("abc.txt"), "0x0\n0x40\n0x80\n0x40\n0x80\n0x0\n").unwrap();
    ok(d, &["histogram", "abc.txt", "-o", "h.csv"]);

    let infeasible = [
        "optimize",
        "h.csv",
        "--grid",
        "6..8,7..9",
        "--max-delay",
        "0.5",
        "-o",
        "o.csv",
    ];
    assert_eq!(reusekit(d, &infeasible).status.code(), Some(3));
    assert!(read(d, "o.csv.summary.csv").contains("min-cost,false"));
    let mut allowed = infeasible.to_vec();
    allowed.push("--allow-infeasible");
    ok(d, &allowed);

    ok(
        d,
        &[
            "optimize",
            "h.csv",
            "--grid",
            "6..8,7..9",
            "--max-delay",
            "100",
            "-o",
            "o.csv",
        ],
    );
    let table = read(d, "o.csv");
    assert!(table.starts_with("x1,x2,miss1,miss2,t,cost,power,feasible\n"));
    let json: serde_json::Value = serde_json::from_str(&read(d, "o.csv.json")).unwrap();
    assert_eq!(json["best"]["sizes"], serde_json::json!([64, 128]));

    std::fs::remove_file(d.join("o.csv")).unwrap();
    ok(d, &["replay", "o.csv.manifest.json"]);
    assert_eq!(read(d, "o.csv"), table);

    ok(
        d,
        &[
            "optimize",
            "h.csv",
            "--grid",
            "6..8,7..9",
            "--max-delay",
            "100",
            "--simulate-trace",
            "abc.txt",
            "-o",
            "sim.csv",
        ],
    );
    assert_eq!(read(d, "sim.csv"), table);
}

#[test]
fn analytic_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "analytic", "--d", "1000", "--target", "5", "--a", "2,1", "--m", "4,8", "-o", "a.json",
        ],
    );
    let v: serde_json::Value = serde_json::from_str(&read(d, "a.json")).unwrap();
    let sizes = v["solution"]["sizes"].as_array().unwrap();
    assert!((sizes[0].as_f64().unwrap() - 222.222).abs() < 1e-3);
    assert!((sizes[1].as_f64().unwrap() - 888.889).abs() < 1e-3);
    assert_eq!(v["sensitivity"].as_array().unwrap().len(), 4);
    ok(
        d,
        &[
            "analytic", "--d", "1000", "--target", "5", "--a", "1", "--m", "10", "-o", "one.json",
        ],
    );
    let v: serde_json::Value = serde_json::from_str(&read(d, "one.json")).unwrap();
    assert!((v["solution"]["sizes"][0].as_f64().unwrap() - 600.0).abs() < 1e-9);
    assert!(!reusekit(
        d,
        &["analytic", "--d", "0", "--target", "5", "--a", "1", "--m", "10", "-o", "x.json"]
    )
    .status
    .success());
}
