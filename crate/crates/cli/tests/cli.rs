use std::path::Path;
use std::process::{Command, Output};

fn qmc(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qmc"))
        .args(args)
        .env("QMC_THREADS", threads)
        .current_dir(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures"))
        .output()
        .expect("qmc runs")
}

const TELEPORT: &[&str] = &[
    "check",
    "--model",
    "teleport.qts",
    "--assert",
    "teleport.ctql",
    "--init",
    "(0.6|0> + 0.8i|1>) * (|00> + |11>)/sqrt2",
];

#[test]
fn reports_do_not_depend_on_thread_count() {
    let runs = [
        TELEPORT.to_vec(),
        vec!["check", "--model", "rotation.qts", "--assert", "rotation.ctql", "--init", "|0>"],
        vec!["simulate", "--model", "teleport.qts", "--init", "|000>", "--depth", "6", "--format", "json"],
    ];
    for args in &runs {
        let one = qmc(args, "1");
        let four = qmc(args, "4");
        assert_eq!(one.status.code(), four.status.code(), "{args:?}");
        assert_eq!(one.stdout, four.stdout, "{args:?}");
        assert!(!one.stdout.is_empty());
    }
}

#[test]
fn exit_code_is_the_worst_verdict() {
    let cases: [(&[&str], i32); 5] = [
        (TELEPORT, 0),
        (&["check", "--model", "hloop.qts", "--assert", "hloop.ctql", "--init", "|0>"], 0),
        (&["check", "--model", "noisy.qts", "--assert", "noisy.ctql", "--init", "|0>"], 1),
        (&["check", "--model", "rotation.qts", "--assert", "rotation.ctql", "--init", "|0>"], 2),
        (&["check", "--model", "bad/two_gates.qts", "--assert", "hloop.ctql", "--init", "|0>"], 3),
    ];
    for (args, code) in cases {
        assert_eq!(qmc(args, "2").status.code(), Some(code), "{args:?}");
    }
}

#[test]
fn usage_errors_are_not_verdicts() {
    assert_eq!(qmc(&["check", "--model", "hloop.qts"], "1").status.code(), Some(3));
    assert_eq!(qmc(&["--help"], "1").status.code(), Some(0));
}

#[test]
fn fixtures_reach_and_selftest() {
    let out = qmc(&["reach", "--model", "hloop.qts", "--init", "|0>", "--verify", "--format", "json"], "1");
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["dim"], 2);
    assert_eq!(report["verify"]["agree"], true);

    let out = qmc(&["reach", "--model", "teleport.qts", "--init", "|000>"], "1");
    assert_eq!(out.status.code(), Some(3), "reach needs a single-location model");

    assert_eq!(qmc(&["selftest", "--seed", "3", "--cases", "10"], "1").status.code(), Some(0));
}
