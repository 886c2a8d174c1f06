use std::io::Write;
use std::process::{Command, Stdio};

use reluforge::cli::{run, EXIT_FAIL, EXIT_OK, EXIT_USAGE};
use reluforge::format::from_json;

fn call(args: &[&str], stdin: &str) -> (i32, String) {
    let mut argv = vec!["reluforge"];
    argv.extend_from_slice(args);
    let mut input = stdin.as_bytes();
    let mut out = Vec::new();
    let code = run(argv, &mut input, &mut out);
    (code, String::from_utf8(out).expect("utf8 output"))
}

fn value(out: &str, key: &str) -> String {
    let prefix = format!("{key}=");
    out.lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("no {key} in {out}"))
        .to_string()
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_reluforge"))
}

#[test]
fn build_square_profile() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sq.json");
    let (code, out) = call(&["build", "square", "--n", "2", "--l", "3", "--out", path.to_str().unwrap()], "");
    assert_eq!(code, EXIT_OK, "{out}");
    assert!(value(&out, "width").parse::<usize>().unwrap() <= 6);
    assert!(value(&out, "depth").parse::<usize>().unwrap() <= 4);
    assert!(out.ends_with("STATUS=ok\n"));
    let net = from_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!((net.eval_scalar(&[0.5]) - 0.25).abs() <= 0.125);
}

#[test]
fn build_step_reports_k() {
    let (code, out) = call(&["build", "step", "--d", "1", "--n", "2", "--l", "1", "--c", "1"], "");
    assert_eq!(code, EXIT_OK, "{out}");
    assert_eq!(value(&out, "K"), "4");
}

#[test]
fn verify_passes_on_defaults() {
    for args in [
        &["verify", "bit-sum", "--n", "2", "--l", "3"][..],
        &["verify", "interp-equi", "--seed", "7"][..],
        &["verify", "trifling"][..],
    ] {
        let (code, out) = call(args, "");
        assert_eq!(code, EXIT_OK, "{out}");
        assert!(out.contains("PASS") && !out.contains("FAIL"), "{out}");
    }
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["verify", "step", "--delta", "0.9"][..],
        &["build", "nope"][..],
        &["study", "nope"][..],
        &["study", "deep-growth", "--ns", ""][..],
        &["study", "mhaskar-growth", "--activation", "tanh"][..],
        &["build", "square", "--threads", "0"][..],
        &[][..],
    ] {
        let (code, out) = call(args, "");
        assert_eq!(code, EXIT_USAGE, "{args:?}: {out}");
        assert!(out.ends_with("STATUS=usage\n"), "{out}");
    }
}

#[test]
fn config_file_rules() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.toml");
    std::fs::write(&empty, "ns = []\n").unwrap();
    let (code, _) = call(&["study", "deep-growth", "--config", empty.to_str().unwrap()], "");
    assert_eq!(code, EXIT_USAGE);

    let unknown = dir.path().join("bad.toml");
    std::fs::write(&unknown, "n = 2\nwidth = 3\n").unwrap();
    let (code, _) = call(&["build", "square", "--config", unknown.to_str().unwrap()], "");
    assert_eq!(code, EXIT_USAGE);

    let json = dir.path().join("cfg.json");
    std::fs::write(&json, r#"{"n": 3, "l": 2}"#).unwrap();
    let (code, out) = call(&["build", "step", "--config", json.to_str().unwrap()], "");
    assert_eq!(code, EXIT_OK, "{out}");
    let (_, flagged) = call(&["build", "step", "--config", json.to_str().unwrap(), "--n", "2", "--l", "1"], "");
    assert_eq!(value(&flagged, "K"), "4");
    assert_ne!(value(&out, "K"), "4");
}

#[test]
fn eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("net.json");
    let (code, _) = call(&["build", "square", "--n", "3", "--l", "2", "--out", path.to_str().unwrap()], "");
    assert_eq!(code, EXIT_OK);
    let net = from_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let (code, out) = call(&["eval", "--net", path.to_str().unwrap()], "0.1\n\n0.7\n");
    assert_eq!(code, EXIT_OK, "{out}");
    let vals: Vec<f64> = out.lines().take(2).map(|l| l.parse().unwrap()).collect();
    assert_eq!(vals, vec![net.eval_scalar(&[0.1]), net.eval_scalar(&[0.7])]);

    let (code, out) = call(&["eval", "--net", path.to_str().unwrap()], "0.1 0.2\n");
    assert_eq!(code, EXIT_USAGE, "{out}");
    let (code, _) = call(&["eval", "--net", "/nonexistent/net.json"], "");
    assert_eq!(code, EXIT_FAIL);
}

#[test]
fn seed_env_overrides_flag() {
    let dir = tempfile::tempdir().unwrap();
    let build = |seed_flag: &str, env: Option<&str>, name: &str| {
        let path = dir.path().join(name);
        let mut cmd = bin();
        cmd.args(["build", "interp-equi", "--seed", seed_flag, "--out"]).arg(&path);
        cmd.env_remove("RELUFORGE_SEED");
        if let Some(v) = env {
            cmd.env("RELUFORGE_SEED", v);
        }
        let o = cmd.output().unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
        std::fs::read(path).unwrap()
    };
    let a = build("1", None, "a.json");
    let b = build("2", None, "b.json");
    let c = build("2", Some("1"), "c.json");
    assert_ne!(a, b);
    assert_eq!(a, c);

    let o = bin()
        .args(["build", "square"])
        .env("RELUFORGE_SEED", "x")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(EXIT_USAGE));
}

#[test]
fn study_csv_is_deterministic() {
    let args = ["study", "deep-rate", "--target", "square", "--q", "2", "--ns", "1,2,3", "--ls", "1", "--resolution", "400"];
    let (c1, o1) = call(&args, "");
    let mut with_threads = args.to_vec();
    with_threads.extend(["--threads", "2"]);
    let (c2, o2) = call(&with_threads, "");
    assert_eq!(c1, EXIT_OK, "{o1}");
    assert_eq!(c2, EXIT_OK);
    assert_eq!(o1, o2);
    assert!(o1.starts_with("N,L,"), "{o1}");
    assert!(o1.contains(",NA\n"));
}

#[test]
fn mhaskar_growth_passes() {
    let (code, out) = call(&["study", "mhaskar-growth", "--activation", "logistic"], "");
    assert_eq!(code, EXIT_OK, "{out}");
    assert!(out.contains("c_tilde="));
}

#[test]
fn binary_prints_status_and_exit_code() {
    let mut child = bin()
        .args(["eval", "--net", "/nonexistent.json"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    // the process may exit before reading its input
    let _ = child.stdin.take().unwrap().write_all(b"0.5\n");
    let o = child.wait_with_output().unwrap();
    assert_eq!(o.status.code(), Some(EXIT_FAIL));
    assert!(String::from_utf8_lossy(&o.stdout).ends_with("STATUS=fail\n"));
}
