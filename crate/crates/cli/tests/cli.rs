use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn vnfplace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vnfplace"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SINGLE_FIT: &str = r#"{
  "version": 1,
  "mecs": [{"id": 0, "cpu_capacity": 4, "ram_capacity": 4, "uplink_capacity": 10, "downlink_capacity": 10}],
  "requests": [{"id": 0, "cpu_demand": 2, "ram_demand": 2, "uplink_demand": 5, "downlink_demand": 5,
                "failure_threshold": 0.01, "reward": 7, "upf_chain": ["NAT", "FW"]}]
}"#;

#[test]
fn generate_default_config_and_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let out = vnfplace(&["generate", "--seed", "9", "-o", path(&a)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("mecs: 10"));
    assert!(stdout(&out).contains("replicas 2:"));
    vnfplace(&["generate", "--seed", "9", "-o", path(&b)]);
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    assert!(text.contains("\"uplink_capacity\": 75.0"));
    assert!(text.contains("\"downlink_capacity\": 250.0"));
}

#[test]
fn generate_without_seed_prints_one() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let out = vnfplace(&["generate", "-o", path(&a)]);
    assert!(out.status.success());
    let seed: u64 = stdout(&out)
        .lines()
        .find_map(|l| l.strip_prefix("seed: "))
        .unwrap()
        .parse()
        .unwrap();
    let b = dir.path().join("b.json");
    vnfplace(&["generate", "--seed", &seed.to_string(), "-o", path(&b)]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn malformed_config_exit_code_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "version = 1\n[generator]\nmec_count = = 4\n").unwrap();
    let out = vnfplace(&["generate", "-c", path(&cfg), "-o", path(&dir.path().join("x.json"))]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
}

#[test]
fn missing_instance_is_io_error() {
    let out = vnfplace(&["solve", "-i", "/nonexistent/instance.json", "--scheme", "lr"]);
    assert_eq!(out.status.code(), Some(6));
}

#[test]
fn unknown_scheme_is_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("i.json");
    fs::write(&inst, SINGLE_FIT).unwrap();
    let out = vnfplace(&["solve", "-i", path(&inst), "--scheme", "simplex"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn lr_on_single_fit() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("i.json");
    fs::write(&inst, SINGLE_FIT).unwrap();
    let out = vnfplace(&["solve", "-i", path(&inst), "--scheme", "lr"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("objective: 7.000000"), "{}", stdout(&out));
}

#[test]
fn greedy_reports_feasible_and_rr_reports_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("i.json");
    vnfplace(&["generate", "--seed", "4", "-o", path(&inst)]);
    for seed in ["1", "2", "3"] {
        let out = vnfplace(&["solve", "-i", path(&inst), "--scheme", "greedy", "--seed", seed]);
        assert!(out.status.success());
        assert!(stdout(&out).contains("feasible: true"));
    }
    let out = vnfplace(&["solve", "-i", path(&inst), "--scheme", "rr", "--seed", "1"]);
    assert!(stdout(&out).contains("bound report:"));
    assert!(stdout(&out).contains("objective: mu_opt="));
}

#[test]
fn exact_on_desk_scale_and_limit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    fs::write(&cfg, "version = 1\n[generator]\nmec_count = 4\nrequest_count = 12\nseed = 2\n").unwrap();
    let inst = dir.path().join("i.json");
    let sol = dir.path().join("s.json");
    assert!(vnfplace(&["generate", "-c", path(&cfg), "-o", path(&inst)]).status.success());
    let out = vnfplace(&["solve", "-i", path(&inst), "--scheme", "exact", "-o", path(&sol)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("feasible: true"));
    assert!(fs::read_to_string(&sol).unwrap().contains("\"y\""));

    let out = vnfplace(&["solve", "-i", path(&inst), "--scheme", "exact", "--max-nodes", "3"]);
    assert_eq!(out.status.code(), Some(5), "{}", stderr(&out));
}

#[test]
fn experiment_creates_dir_and_repeats() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("e.toml");
    fs::write(
        &cfg,
        "version = 1\n[generator]\nmec_count = 4\n[experiment]\nrequest_counts = [8, 12]\nruns = 3\n",
    )
    .unwrap();
    let a = dir.path().join("nested/a");
    let b = dir.path().join("b");
    for out_dir in [&a, &b] {
        let out = vnfplace(&["experiment", "-c", path(&cfg), "-o", path(out_dir), "--jobs", "2"]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    for f in ["summary.csv", "runs.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
    }
    let summary = fs::read_to_string(a.join("summary.csv")).unwrap();
    assert!(summary.starts_with("scheme,sweep,point,metric,mean,ci_half_width,n,failed\n"));
    // 2 points, 4 schemes
    let reward_rows = summary.lines().filter(|l| l.contains(",reward,")).count();
    assert_eq!(reward_rows, 8);
    assert!(a.join("timing.csv").exists());
}

#[test]
fn experiment_into_unwritable_dir() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = vnfplace(&["experiment", "-o", path(&blocker.join("sub")), "--runs", "2"]);
    assert_eq!(out.status.code(), Some(6));
}

#[test]
fn availsim_pass_through() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("i.json");
    let sol = dir.path().join("s.json");
    let csv = dir.path().join("a.csv");
    vnfplace(&["generate", "--seed", "5", "-o", path(&inst)]);
    vnfplace(&["solve", "-i", path(&inst), "--scheme", "greedy", "--seed", "5", "-o", path(&sol)]);
    let out = vnfplace(&[
        "availsim", "-i", path(&inst), "--solution", path(&sol), "--trials", "20000", "--seed", "1", "-o", path(&csv),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("request,served,required_replicas,placements,trials,delivered,availability,threshold,pass\n"));
    assert_eq!(text.lines().count(), 51);
    for line in text.lines().skip(1).filter(|l| l.split(',').nth(1) == Some("true")) {
        assert!(line.ends_with(",pass"), "{line}");
    }
}

#[test]
fn config_prints_parseable_defaults() {
    let out = vnfplace(&["config"]);
    assert!(out.status.success());
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("d.toml");
    fs::write(&cfg, stdout(&out)).unwrap();
    let inst = dir.path().join("i.json");
    assert!(vnfplace(&["generate", "-c", path(&cfg), "-o", path(&inst)]).status.success());
}
