use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_anisoscat"))
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("expcli-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn run(name: &str, config: Option<&str>, out: &Path) -> (i32, String) {
    let mut cmd = bin();
    cmd.args(["run", name, "--out"]).arg(out);
    if let Some(text) = config {
        let path = out.join("run.cfg");
        std::fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    let o = cmd.output().unwrap();
    (o.status.code().unwrap(), String::from_utf8_lossy(&o.stdout).into_owned())
}

#[test]
fn passing_run_exits_zero_with_manifest_and_check_lines() {
    let d = scratch("pass");
    let (code, stdout) = run("herglotz-fit", None, &d);
    assert_eq!(code, 0);
    assert!(stdout.lines().any(|l| l.starts_with("PASS ")));
    let m = manifest(&d);
    assert_eq!(m["status"], "pass");
    assert!(m["files"].as_array().unwrap().iter().any(|f| f == "herglotz_fit.csv"));
    assert!(d.join("herglotz_density_m64.csv").exists());
}

#[test]
fn failing_check_exits_one() {
    let d = scratch("fail");
    let (code, stdout) = run("herglotz-fit", Some("[herglotz]\nms = 32, 8\n"), &d);
    assert_eq!(code, 1);
    assert!(stdout.lines().any(|l| l.starts_with("FAIL ")));
    assert_eq!(manifest(&d)["status"], "fail");
}

#[test]
fn errors_exit_two_and_are_recorded() {
    let d = scratch("unknown");
    assert_eq!(run("no-such-experiment", None, &d).0, 2);
    assert!(manifest(&d)["error"].as_str().unwrap().contains("unknown experiment"));

    let d = scratch("badcfg");
    assert_eq!(run("herglotz-fit", Some("this is not a config line\n"), &d).0, 2);
    assert_eq!(manifest(&d)["status"], "error");

    let d = scratch("range");
    assert_eq!(run("mie-validate", Some("k = -1\n"), &d).0, 2);
    assert!(manifest(&d)["error"].as_str().unwrap().contains("`k`"));
}

#[test]
fn identical_config_and_seed_give_identical_csv() {
    let cfg = "[fem]\nhs = 0.1, 0.05\n";
    let (a, b) = (scratch("det-a"), scratch("det-b"));
    assert_eq!(run("square-scatter-control", Some(cfg), &a).0, 0);
    assert_eq!(run("square-scatter-control", Some(cfg), &b).0, 0);
    for f in ["square_control.csv", "far_field_control_h0.05.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn sweep_writes_rows_in_value_order() {
    let d = scratch("sweep");
    let o = bin().args(["sweep", "radial-te", "--param", "k", "--values", "3,1,2", "--out"]).arg(&d).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(d.join("sweep_k.csv")).unwrap();
    let keys: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(keys, ["3", "1", "2"]);
    assert!(csv.lines().next().unwrap().contains("constant_d_m0"));
    assert!(d.join("sweep_manifest.json").exists());
}

#[test]
fn sweep_rejects_unknown_parameters() {
    let d = scratch("sweep-bad");
    let o = bin().args(["sweep", "radial-te", "--param", "q", "--values", "1", "--out"]).arg(&d).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}
