use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn r2l(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_r2l"))
        .args(args)
        .current_dir(dir)
        .env_remove("R2L_OUTPUT_DIR")
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = r2l(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn grid3(dir: &Path) {
    ok(dir, &["gen", "--rows", "3", "--cols", "3", "--seed", "7", "-o", "net.txt"]);
    ok(dir, &["solve", "--net", "net.txt", "--dt", "0.5", "--horizon", "20", "-o", "v.csv"]);
}

#[test]
fn gen_writes_a_5x5_grid() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["gen", "--rows", "5", "--cols", "5", "--dest", "24", "--seed", "7", "-o", "net.txt"]);
    let text = fs::read_to_string(tmp.path().join("net.txt")).unwrap();
    assert!(text.starts_with("nodes 25 destination 24\n"));
    assert_eq!(text.lines().filter(|l| l.starts_with("edge ")).count(), 80);
}

#[test]
fn destination_curve_is_constant_one() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["gen", "--rows", "5", "--cols", "5", "--dest", "24", "--seed", "7", "-o", "net.txt"]);
    ok(tmp.path(), &["solve", "--net", "net.txt", "--dt", "0.1", "--horizon", "30", "-o", "v.csv"]);
    let curve = ok(tmp.path(), &["curves", "--values", "v.csv", "--node", "24", "--dt", "0.1"]);
    let mut lines = curve.lines();
    assert_eq!(lines.next(), Some("t,probability"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 301);
    assert!(rows.iter().all(|r| r.ends_with(",1")));
}

#[test]
fn training_reaches_the_oracle_on_3x3() {
    let tmp = TempDir::new().unwrap();
    grid3(tmp.path());
    ok(
        tmp.path(),
        &[
            "train", "--net", "net.txt", "--dt", "0.5", "--horizon", "20", "--episodes", "2000000", "--gamma",
            "1.0", "--seed", "7", "--ref", "v.csv", "-o", "q.csv", "--log", "log.csv",
        ],
    );
    let log = fs::read_to_string(tmp.path().join("log.csv")).unwrap();
    assert!(log.starts_with("episode,sup_err,l1_err,mean_reward,mean_steps\n"));
    let last: Vec<&str> = log.lines().last().unwrap().split(',').collect();
    assert_eq!(last[0], "2000000");
    assert!(last[1].parse::<f64>().unwrap() <= 0.05);

    let norms = ok(tmp.path(), &["eval", "--q", "q.csv", "--values", "v.csv", "--dt", "0.5"]);
    let row: Vec<f64> = norms.lines().nth(1).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert!(row[0] <= 0.05 && row[1] <= 0.02);

    let policy = ok(tmp.path(), &["policy", "--q", "q.csv", "--net", "net.txt", "--dt", "0.5", "--horizon", "20"]);
    let dest_row = policy.lines().nth(9).unwrap();
    assert!(dest_row.starts_with("8,") && dest_row.split(',').skip(1).all(|c| c == "-1"));
}

#[test]
fn identical_seeds_give_identical_files() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    for tag in ["a", "b"] {
        let net = format!("net_{tag}.txt");
        ok(d, &["gen", "--rows", "4", "--cols", "3", "--seed", "11", "-o", &net]);
        ok(d, &["solve", "--net", &net, "--dt", "0.5", "--horizon", "15", "-o", &format!("v_{tag}.csv")]);
        ok(
            d,
            &[
                "train", "--net", &net, "--dt", "0.5", "--horizon", "15", "--episodes", "20000", "--seed", "3",
                "-o", &format!("q_{tag}.csv"), "--log", &format!("log_{tag}.csv"),
            ],
        );
    }
    for (a, b) in [
        ("net_a.txt", "net_b.txt"),
        ("v_a.csv", "v_b.csv"),
        ("q_a.csv", "q_b.csv"),
        ("log_a.csv", "log_b.csv"),
    ] {
        assert_eq!(fs::read(d.join(a)).unwrap(), fs::read(d.join(b)).unwrap(), "{a}");
    }
}

#[test]
fn dumped_config_reproduces_the_run() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    grid3(d);
    let flags = [
        "train", "--net", "net.txt", "--dt", "0.5", "--horizon", "20", "--episodes", "5000", "--seed", "9",
        "--alpha-schedule", "constant", "--alpha", "0.2",
    ];
    ok(d, &flags);
    let first = fs::read(d.join("q.csv")).unwrap();
    let dumped = ok(d, &[&flags[..], &["--dump-config"]].concat());
    assert!(dumped.contains("alpha_schedule = constant\n"));
    fs::write(d.join("run.cfg"), dumped).unwrap();
    fs::remove_file(d.join("q.csv")).unwrap();
    ok(d, &["train", "--config", "run.cfg"]);
    assert_eq!(fs::read(d.join("q.csv")).unwrap(), first);

    // flags override file keys
    ok(d, &["train", "--config", "run.cfg", "--seed", "10", "-o", "q10.csv"]);
    assert_ne!(fs::read(d.join("q10.csv")).unwrap(), first);
}

#[test]
fn presets_fill_published_settings() {
    let tmp = TempDir::new().unwrap();
    let t1 = ok(tmp.path(), &["train", "--preset", "table1", "--dump-config"]);
    for line in ["alpha = 1e-4", "gamma = 0.99", "episodes = 20000000", "max_steps = 30", "penalty = 100", "horizon = 30"] {
        assert!(t1.lines().any(|l| l == line), "{line}");
    }
    let t3 = ok(tmp.path(), &["train", "--preset", "table3", "--dump-config"]);
    for line in ["learning_rate = 1e-4", "batch_size = 32", "buffer_size = 1000000", "target_update = 30000", "tau = 1e-3", "workers = 30"] {
        assert!(t3.lines().any(|l| l == line), "{line}");
    }
}

#[test]
fn parallel_runs_match_sequential_runs() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    grid3(d);
    let base = ["train", "--net", "net.txt", "--dt", "0.5", "--horizon", "20", "--episodes", "3000", "--seed", "4", "--runs", "3"];
    ok(d, &[&base[..], &["-o", "par/q.csv", "--log", "par/log.csv", "--parallel"]].concat());
    ok(d, &[&base[..], &["-o", "seq/q.csv", "--log", "seq/log.csv"]].concat());
    for seed in 4..7 {
        let name = format!("q_seed{seed}.csv");
        assert_eq!(fs::read(d.join("par").join(&name)).unwrap(), fs::read(d.join("seq").join(&name)).unwrap());
        assert!(d.join("par").join(format!("log_seed{seed}.csv")).exists());
    }
}

#[test]
fn output_dir_comes_from_the_environment() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("runs");
    let run = |args: &[&str]| {
        let o = Command::new(env!("CARGO_BIN_EXE_r2l"))
            .args(args)
            .current_dir(tmp.path())
            .env("R2L_OUTPUT_DIR", &out)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    };
    run(&["gen", "--rows", "2", "--cols", "3", "--seed", "1", "-o", "net.txt"]);
    assert!(out.join("net.txt").exists());
    // inputs written there earlier are found again
    run(&["solve", "--net", "net.txt", "-o", "v.csv"]);
    assert!(out.join("v.csv").exists());
}

#[test]
fn price_of_reliability_query() {
    let tmp = TempDir::new().unwrap();
    grid3(tmp.path());
    let line = ok(tmp.path(), &["por", "--values", "v.csv", "--node", "0", "--t1", "8", "--t2", "12", "--dt", "0.5"]);
    let f: Vec<f64> = line.trim().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(f.len(), 6);
    assert_eq!((f[0], f[2], f[4]), (8.0, 12.0, 4.0));
    assert!(f[5] >= 0.0 && (f[5] - (f[3] - f[1])).abs() < 1e-8);

    let out = r2l(tmp.path(), &["por", "--values", "v.csv", "--node", "0", "--t1", "12", "--t2", "8", "--dt", "0.5"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn errors_are_one_line_with_distinct_codes() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    for (args, code) in [
        (&["frobnicate"][..], 2),
        (&["gen", "--rows", "3", "--bogus"][..], 2),
        (&["gen", "--rows", "x"][..], 2),
        (&["gen", "--rows", "3", "--cols", "3"][..], 2),
        (&["solve", "--net", "missing.txt"][..], 1),
        (&["gen", "--rows", "3", "--cols", "3", "--seed", "1", "--dest", "50"][..], 1),
    ] {
        let out = r2l(d, args);
        assert_eq!(out.status.code(), Some(code), "{args:?}");
        let err = String::from_utf8(out.stderr).unwrap();
        assert_eq!(err.lines().count(), 1, "{args:?}: {err}");
        assert!(err.starts_with("r2l: "));
    }
    fs::write(d.join("bad.cfg"), "nonsense = 1\n").unwrap();
    assert_eq!(r2l(d, &["solve", "--config", "bad.cfg"]).status.code(), Some(2));
}
