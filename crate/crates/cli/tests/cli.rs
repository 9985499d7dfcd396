use std::io::Write;
use std::process::{Command, Output};

fn ewf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ewf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("valid json")
}

#[test]
fn simulate_prints_one_twelfth() {
    let o = ewf(&["simulate"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).lines().any(|l| l.starts_with("(ok, ok) 1/12")));
    let m = ewf(&["simulate", "--policy", "marginal"]);
    assert!(stdout(&m).lines().any(|l| l.starts_with("(ok, ok) 1/12")));
}

#[test]
fn simulate_head_only_coin() {
    // |down,-⟩ splits evenly between ok and fail of F2S
    let o = ewf(&["simulate", "--coin", "1,0"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("P(w2=ok) 1/2"));
    let t = ewf(&["simulate", "--coin", "0,1"]);
    assert!(stdout(&t).contains("P(w2=ok) 0\n"));
}

#[test]
fn simulate_rejects_unnormalised_coin() {
    let o = ewf(&["simulate", "--coin", "0.6,0.9"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("not normalised"));
    assert_eq!(code(&ewf(&["simulate", "--coin", "abc"])), 2);
}

#[test]
fn simulate_json() {
    let v = json(&ewf(&["simulate", "--format", "json"]));
    assert_eq!(v["policy"], "collapse");
    let first = &v["marginal"]["outcomes"][0];
    assert_eq!(first["outcome"], serde_json::json!(["ok", "ok"]));
    assert_eq!(first["probability"]["exact"], "1/12");
    assert_eq!(v["joint"]["outcomes"].as_array().unwrap().len(), 16);
}

#[test]
fn verify_passes_by_default() {
    let o = ewf(&["verify"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.lines().filter(|l| l.starts_with("PASS")).count() >= 5);
    assert!(!out.contains("FAIL"));
}

#[test]
fn verify_catches_injected_faults() {
    let o = ewf(&["verify", "--inject-fault", "ok-sign"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).lines().any(|l| l.starts_with("FAIL FR8")));
    let p = ewf(&["verify", "--inject-fault", "prep-sign"]);
    assert_eq!(code(&p), 1);
    assert!(stdout(&p).contains("FAIL FR2-tail-branch"));
}

#[test]
fn verify_json() {
    let v = json(&ewf(&["verify", "--format", "json"]));
    assert_eq!(v["all_passed"], true);
    let checks = v["checks"].as_array().unwrap();
    assert!(checks.iter().all(|c| c["status"] == "PASS"));
    assert!(checks.iter().any(|c| c["id"] == "FR8-state"));
}

#[test]
fn histories_default_family() {
    let o = ewf(&["histories"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("P[h1: r@obs0=tail, z@obs2=+, w1@meas3=ok, w2@meas4=ok] = 1/12"));
    assert!(out.contains("P[h1': r@obs0=tail, w2@meas4=ok] = 0\n"));
    assert!(out.contains("not jointly considerable"));
}

#[test]
fn histories_custom_and_invalid() {
    let o = ewf(&[
        "histories",
        "--history",
        "a: w1@meas3=ok",
        "--history",
        "b: w1@meas3=fail",
    ]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("family consistent: yes"));
    assert_eq!(
        code(&ewf(&["histories", "--history", "a: w1@meas3=maybe"])),
        2
    );
}

#[test]
fn bellbohm_paper_only() {
    let o = ewf(&["bellbohm", "--paper-only"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("(tail, +, ok, 0) -> (tail, -, ok, ok)"));
    assert!(out.contains("probability: 1/48"));
    let full = stdout(&ewf(&["bellbohm"]));
    assert!(full.contains("total 1\n"));
}

#[test]
fn argue_named_interpretations() {
    let q = ewf(&["argue", "--interpretation", "qbism"]);
    assert_eq!(code(&q), 0);
    assert!(stdout(&q).contains("BlockedAt FR7 (missing C)"));
    let c = ewf(&["argue", "--interpretation", "copenhagen"]);
    assert!(stdout(&c).contains("BlockedAt FR2 (missing U)"));
    assert_eq!(code(&ewf(&["argue", "--interpretation", "solipsism"])), 2);
    assert_eq!(code(&ewf(&["argue"])), 2);
}

#[test]
fn argue_profile_file() {
    let dir = std::env::temp_dir().join(format!("ewf-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("all.profile");
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(f, "name: All true").unwrap();
    for a in ["Q", "S", "C", "P", "U", "T", "L", "M"] {
        writeln!(f, "{a} = check").unwrap();
    }
    drop(f);
    let o = ewf(&["argue", "--profile", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("ContradictionDerived"));
    assert_eq!(out.lines().filter(|l| l.contains(" fired ")).count(), 12);
    let v = json(&ewf(&[
        "argue",
        "--profile",
        path.to_str().unwrap(),
        "--format",
        "json",
    ]));
    assert_eq!(v["trace"].as_array().unwrap().len(), 12);
    std::fs::write(&path, "name: Broken\nQ = perhaps\n").unwrap();
    assert_eq!(
        code(&ewf(&["argue", "--profile", path.to_str().unwrap()])),
        2
    );
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn audit_flags_consistent_histories() {
    let v = json(&ewf(&["audit", "--format", "json"]));
    assert_eq!(
        v["discrepancies"],
        serde_json::json!(["Consistent histories"])
    );
}

#[test]
fn report_runs_everything() {
    let o = ewf(&["report"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    for section in [
        "assumption tables",
        "verification",
        "simulation",
        "histories",
        "bell-bohm",
        "verdicts",
        "escape-rule audit",
    ] {
        assert!(out.contains(&format!("== {section} ==")), "{section}");
    }
}

#[test]
fn output_is_deterministic() {
    for args in [
        &["simulate"][..],
        &["verify", "--format", "json"],
        &["bellbohm"],
        &["report"],
    ] {
        assert_eq!(ewf(args).stdout, ewf(args).stdout, "{args:?}");
    }
}

#[test]
fn unknown_commands_and_flags_are_usage_errors() {
    assert_eq!(code(&ewf(&["frobnicate"])), 2);
    assert_eq!(code(&ewf(&["simulate", "--nope"])), 2);
    assert_eq!(code(&ewf(&["simulate", "--policy", "sometimes"])), 2);
}
