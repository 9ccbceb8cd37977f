use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn mechkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mechkit")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/examples/data").join(name).display().to_string()
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("mechkit-cli-{}-{tag}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

#[test]
fn solve_prints_the_allocation() {
    let o = mechkit(&["solve", "--mechanism", "da_student", "--instance", &data("ipda.json")]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["allocation"]["Banu"], "Y");
    assert_eq!(v["allocation"]["Diya"], "X");
    assert!(v.get("trace").is_none());
    let t = json(&mechkit(&["solve", "--mechanism", "da_student", "--instance", &data("ipda.json"), "--trace"]));
    assert!(t["trace"].as_array().is_some_and(|a| !a.is_empty()));
}

#[test]
fn exit_codes() {
    let ipda = data("ipda.json");
    let violated = mechkit(&["check", "--mechanism", "boston", "--instance", &ipda, "--axioms", "strategy-proofness"]);
    assert_eq!(code(&violated), 1);
    let holds = mechkit(&["check", "--mechanism", "da_student", "--instance", &ipda, "--axioms", "IR,NW,NJE"]);
    assert_eq!(code(&holds), 0);
    assert_eq!(code(&mechkit(&["check", "--mechanism", "da_student", "--instance", &ipda, "--axioms", "NPR"])), 2);
    assert_eq!(code(&mechkit(&["solve", "--mechanism", "nope", "--instance", &ipda])), 2);
    assert_eq!(code(&mechkit(&["solve", "--mechanism", "da_student", "--instance", "/no/such/file.json"])), 2);
    let capped = mechkit(&["check", "--mechanism", "da_student", "--instance", &ipda, "--axioms", "sp", "--caps", "agents=3"]);
    assert_eq!(code(&capped), 3);
    assert_eq!(code(&mechkit(&["gen", "reserves", "--param", "capacity=1", "--param", "hr=2"])), 2);
}

#[test]
fn seeded_runs_are_reproducible() {
    let yrmh = data("yrmh.json");
    let a = mechkit(&["solve", "--mechanism", "rsd", "--instance", &yrmh, "--seed", "9"]);
    let b = mechkit(&["solve", "--mechanism", "rsd", "--instance", &yrmh, "--seed", "9"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let g1 = mechkit(&["gen", "exchange", "--seed", "4"]);
    let g2 = mechkit(&["gen", "exchange", "--seed", "4"]);
    assert_eq!(g1.stdout, g2.stdout);
}

#[test]
fn gen_solve_check_round_trip() {
    let dir = scratch("round-trip");
    let cases = [
        ("one-sided", "yrmh_igyt", "IR,PE"),
        ("two-sided", "da_student", "IR,NW,NJE,stability"),
        ("contracts", "mpco", "IR,NW,NPR,scheme-respect"),
        ("reserves", "tsmg", "NW,NJE,max-HR,VR-compliance"),
        ("exchange", "ttcc", "IR"),
    ];
    for (family, mech, axioms) in cases {
        for seed in ["1", "2", "3"] {
            let inst = dir.join(format!("{family}-{seed}.json"));
            let res = dir.join(format!("{family}-{seed}-result.json"));
            let (inst_s, res_s) = (inst.display().to_string(), res.display().to_string());
            let g = mechkit(&["gen", family, "--seed", seed, "--out", &inst_s]);
            assert_eq!(code(&g), 0, "gen {family}: {}", String::from_utf8_lossy(&g.stderr));
            let s = mechkit(&["solve", "--mechanism", mech, "--instance", &inst_s, "--out", &res_s]);
            assert_eq!(code(&s), 0, "solve {mech}: {}", String::from_utf8_lossy(&s.stderr));
            let c = mechkit(&["check", "--instance", &inst_s, "--allocation", &res_s, "--axioms", axioms]);
            assert_eq!(code(&c), 0, "check {family} seed {seed}: {}", String::from_utf8_lossy(&c.stderr));
            let report = json(&c)["report"].clone();
            assert!(report.as_object().is_some_and(|r| !r.is_empty()));
            let all = mechkit(&["check", "--instance", &inst_s, "--allocation", &res_s]);
            assert!(matches!(code(&all), 0 | 1), "check all {family}: {}", String::from_utf8_lossy(&all.stderr));
        }
    }
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn compare_reports_pairwise_verdicts() {
    let o = mechkit(&["compare", "--mechanism", "da_student,sc_ttc,boston", "--instance", &data("ipda.json")]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["pairs"].as_array().map(Vec::len), Some(3));
    let k = mechkit(&["compare", "--mechanism", "max_transplants:cycle_cap=2,max_transplants:cycle_cap=4", "--instance", &data("twelve_pairs.json")]);
    assert_eq!(code(&k), 0, "{}", String::from_utf8_lossy(&k.stderr));
    assert!(String::from_utf8_lossy(&k.stdout).contains("transplant"));
}
