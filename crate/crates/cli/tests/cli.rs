use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn banditlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_banditlab"))
        .args(args)
        .env_remove("BANDITLAB_THREADS")
        .output()
        .expect("spawn banditlab")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL: &str = "seed = 7\nreplications = 40\nlog_inv_delta = 2, 4, 6\n";

#[test]
fn sweep_is_reproducible_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "exp.cfg", SMALL);
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "2", "4", "1"].iter().enumerate() {
        let out = dir.path().join(format!("out{i}.csv"));
        let o = out.to_str().unwrap();
        stdout(&banditlab(&["sweep", "--config", &cfg, "--threads", threads, "--output", o]));
        outputs.push(fs::read(&out).unwrap());
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
    let text = String::from_utf8(outputs.pop().unwrap()).unwrap();
    assert!(text.lines().any(|l| l.starts_with("policy,alpha,log_inv_delta,mean_tau")));
    // 6 policies × 3 values of log(1/δ)
    assert_eq!(text.lines().filter(|l| !l.starts_with("#!") && !l.starts_with("policy,")).count(), 18);
}

#[test]
fn echoed_config_reproduces_the_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "exp.cfg", SMALL);
    let first = stdout(&banditlab(&["sweep", "--config", &cfg, "--override", "means=0,0.8"]));
    let echo = write(dir.path(), "echo.cfg", &first);
    let second = stdout(&banditlab(&["sweep", "--config", &echo]));
    assert_eq!(first, second);
}

#[test]
fn seed_flag_changes_results() {
    let a = stdout(&banditlab(&["sweep", "--seed", "1", "--override", "replications=30"]));
    let b = stdout(&banditlab(&["sweep", "--seed", "2", "--override", "replications=30"]));
    assert_ne!(a, b);
}

#[test]
fn threads_fall_back_to_environment() {
    let run = |env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_banditlab"));
        cmd.args(["sweep", "--override", "replications=20"]);
        match env {
            Some(v) => cmd.env("BANDITLAB_THREADS", v),
            None => cmd.env_remove("BANDITLAB_THREADS"),
        };
        cmd.output().unwrap()
    };
    let base = stdout(&run(None));
    assert_eq!(stdout(&run(Some("2"))), base);
    let bad = run(Some("0"));
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn json_sweep_has_version_config_and_bounds() {
    let out = stdout(&banditlab(&[
        "sweep", "--format", "json", "--compare", "--override", "replications=20",
    ]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["version"].as_str().unwrap().starts_with('v'));
    assert_eq!(v["config"]["experiment"]["replications"], "20");
    assert_eq!(v["rows"].as_array().unwrap().len(), 6 * 8);
    assert!(v["bounds"].is_array());
}

#[test]
fn run_prints_one_outcome() {
    let out = stdout(&banditlab(&["run", "--policy", "etc", "--delta-index", "3", "--seed", "4"]));
    assert!(out.lines().any(|l| l.starts_with("decision_step = ")), "{out}");
    assert_eq!(out, stdout(&banditlab(&["run", "--policy", "etc", "--delta-index", "3", "--seed", "4"])));
}

#[test]
fn bounds_reports_constants() {
    let out = stdout(&banditlab(&["bounds", "--alpha", "2", "--delta", "0.01", "--gap", "1", "--var", "1"]));
    assert!(out.contains("c_alpha=2.25"), "{out}");
    assert!(out.contains("c1=19"), "{out}");
    let none = stdout(&banditlab(&["bounds", "--alpha", "1", "--delta", "0.01"]));
    assert!(!none.is_empty());
}

#[test]
fn verify_runs_small_check() {
    let out = stdout(&banditlab(&[
        "verify", "--family", "iid", "--horizon", "200", "--replications", "50", "--seed", "3",
    ]));
    assert!(!out.trim().is_empty());
}

#[test]
fn malformed_config_exits_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never.csv");
    let o = out.to_str().unwrap();
    let cases = [
        "replications = many\n",
        "no_such_key = 3\n",
        "means = 0\n",
        "log_inv_delta = -1\n",
        "policies = ucb:abc\n",
        "setting = unit\npolicies = etc\n",
    ];
    for (i, text) in cases.iter().enumerate() {
        let cfg = write(dir.path(), &format!("bad{i}.cfg"), text);
        let res = banditlab(&["sweep", "--config", &cfg, "--output", o]);
        assert_eq!(res.status.code(), Some(2), "{text}: {}", String::from_utf8_lossy(&res.stderr));
        assert!(!out.exists(), "{text}");
    }
    let res = banditlab(&["sweep", "--override", "sigma_sq=abc", "--output", o]);
    assert_eq!(res.status.code(), Some(2));
    let res = banditlab(&["sweep", "--config", "/nonexistent/exp.cfg"]);
    assert_eq!(res.status.code(), Some(2));
    assert!(!out.exists());
}
