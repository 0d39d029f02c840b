use std::path::Path;
use std::process::{Command, Output};

fn lcslab(args: &[&str], dir: &Path, seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lcslab"));
    cmd.args(args).current_dir(dir).env_remove("LCSLAB_SEED");
    if let Some(s) = seed {
        cmd.env("LCSLAB_SEED", s);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const CIRCLE: &str = r#"{"vertices": 3, "simplices": [[0,1],[1,2],[0,2]]}"#;

#[test]
fn cohomology_with_theta_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("circle.json"), CIRCLE).unwrap();
    let o = lcslab(&["cohomology", "circle.json", "--theta", "0,1:0.693"], dir.path(), None);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("     0          3      0\n     1          3      0"), "{out}");
    let o = lcslab(&["cohomology", "circle.json"], dir.path(), None);
    assert!(stdout(&o).contains("Betti numbers [1, 1]"));
}

#[test]
fn malformed_json_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), "{\n  \"vertices\": 3,\n  oops\n}").unwrap();
    let o = lcslab(&["cohomology", "bad.json"], dir.path(), None);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3 column 3"), "{err}");
}

#[test]
fn invalid_flags_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [&["example", "inoue", "--run", "--points", "0"][..], &["example", "nope", "--run"], &["list", "--format", "xml"]]
    {
        assert_eq!(lcslab(args, dir.path(), None).status.code(), Some(2), "{args:?}");
    }
    assert_eq!(lcslab(&["list"], dir.path(), Some("seven")).status.code(), Some(2));
    assert_eq!(lcslab(&["example", "hopf", "weights=1,a", "--run"], dir.path(), None).status.code(), Some(2));
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["example", "cotangent", "--run", "--format", "json"];
    let env = lcslab(&args, dir.path(), Some("5"));
    let mut flag_args = args.to_vec();
    flag_args.extend(["--seed", "5"]);
    let flag = lcslab(&flag_args, dir.path(), None);
    assert_eq!(env.stdout, flag.stdout);
    assert_eq!(env.status.code(), Some(0));
}

#[test]
fn json_reports_follow_the_schema() {
    let dir = tempfile::tempdir().unwrap();
    let o = lcslab(&["example", "reduction", "--run", "--format", "json", "--points", "16"], dir.path(), None);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let checks = v["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 16);
    for c in checks {
        for k in ["id", "paper_ref", "residual", "threshold", "verdict", "provenance"] {
            assert!(c.get(k).is_some(), "{k} missing in {c}");
        }
    }
    assert_eq!(v["summary"]["text"], "16 checks: 16 passed, 0 failed");
}

#[test]
fn exported_declarations_verify() {
    let dir = tempfile::tempdir().unwrap();
    let o = lcslab(&["example", "hopf", "weights=1,2", "--export"], dir.path(), None);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let (name, doc) = v.as_object().unwrap().iter().next().unwrap();
    let file = format!("{name}.json");
    std::fs::write(dir.path().join(&file), doc.to_string()).unwrap();
    let o = lcslab(&["verify", &file], dir.path(), None);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn reduce_and_coupling_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let o = lcslab(&["example", "reduction", "--export"], dir.path(), None);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    std::fs::write(dir.path().join("red.json"), v["reduction"].to_string()).unwrap();
    let o = lcslab(&["reduce", "red.json"], dir.path(), None);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("reduce.level"));

    let o = lcslab(&["example", "coupling_s2", "--export"], dir.path(), None);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    std::fs::write(dir.path().join("c.json"), v["coupling"].to_string()).unwrap();
    let o = lcslab(&["coupling", "c.json", "--points", "16"], dir.path(), None);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("fatness"));
}

#[test]
fn listing_and_showing() {
    let dir = tempfile::tempdir().unwrap();
    let o = lcslab(&["list"], dir.path(), None);
    assert_eq!(o.status.code(), Some(0));
    for name in lcslab::gallery::NAMES {
        assert!(stdout(&o).contains(name));
    }
    let o = lcslab(&["example", "inoue"], dir.path(), None);
    assert!(stdout(&o).contains("23 expectations"));
}
