use std::path::Path;
use std::process::{Command, Output};

fn spgmm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spgmm")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = spgmm(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn simulate_fit_compare_lcid_ppc() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name);
    ok(&["simulate", "--scenario", "S0", "--n", "60", "--seed", "3", "--out", s(&p("panel.csv")), "--truth", s(&p("truth.json"))]);
    assert!(p("truth.json").exists());
    let rows = std::fs::read_to_string(p("panel.csv")).unwrap().lines().count();
    assert_eq!(rows, 1 + 60 * 12);

    std::fs::write(p("config.json"), r#"{"model": {"classes": 2, "method": "mnar"}}"#).unwrap();
    let fit = |k: &str, name: &str| {
        ok(&[
            "fit", "--data", s(&p("panel.csv")), "--config", s(&p("config.json")), "--k", k, "--iters", "300", "--burnin", "150",
            "--latent-thin", "5", "--seed", "2", "--out", s(&p(name)), "--summary", s(&p(&format!("{name}.summary.csv"))),
        ])
    };
    let msg = fit("2", "k2.draws");
    assert!(msg.contains("150 draws"), "{msg}");
    fit("3", "k3.draws");
    assert!(p("k2.draws.summary.csv").exists());

    let cmp = ok(&[
        "compare", "--draws", s(&p("k2.draws")), s(&p("k3.draws")), "--data", s(&p("panel.csv")), "--max-draws", "20", "--out",
        s(&p("compare.csv")),
    ]);
    assert!(cmp.contains("K=2") && cmp.contains("K=3"), "{cmp}");
    let table = std::fs::read_to_string(p("compare.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
    assert!(header(&p("compare.csv")).contains("dic3"));

    ok(&["lcid", "--draws", s(&p("k2.draws")), "--out", s(&p("lcid.csv"))]);
    let lcid = std::fs::read_to_string(p("lcid.csv")).unwrap();
    assert!(lcid.contains("prior") && lcid.contains("posterior"));

    let out = ok(&[
        "ppc", "--draws", s(&p("k2.draws")), "--data", s(&p("panel.csv")), "--out", s(&p("ppc.csv")), "--hist", s(&p("hist.csv")),
        "--hist-iters", "2",
    ]);
    assert!(out.contains("predictive p-value"), "{out}");
    assert_eq!(std::fs::read_to_string(p("ppc.csv")).unwrap().lines().count(), 1 + 30);
    assert_eq!(std::fs::read_to_string(p("hist.csv")).unwrap().lines().count(), 1 + 2 * 60 * 12 * 2 * 2);
}

#[test]
fn full_method_needs_the_truth_block() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name);
    ok(&["simulate", "--n", "30", "--out", s(&p("panel.csv")), "--truth", s(&p("truth.json"))]);
    let bare = spgmm(&["fit", "--data", s(&p("panel.csv")), "--method", "full", "--iters", "40", "--burnin", "20", "--out", s(&p("d"))]);
    assert!(!bare.status.success());
    assert!(String::from_utf8_lossy(&bare.stderr).starts_with("error:"));
    ok(&[
        "fit", "--data", s(&p("panel.csv")), "--truth", s(&p("truth.json")), "--method", "full", "--iters", "40", "--burnin", "20",
        "--out", s(&p("d")),
    ]);
}

#[test]
fn study_writes_its_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("study");
    let text = ok(&[
        "study", "--scenario", "S1", "--methods", "naive,mnar", "--reps", "2", "--n", "50", "--iters", "200", "--burnin", "100",
        "--threads", "1", "--out", s(&out),
    ]);
    assert!(text.contains("beta_111"), "{text}");
    assert_eq!(std::fs::read_to_string(out.join("metrics.csv")).unwrap().lines().count(), 1 + 24);
    assert!(out.join("misclassification.csv").exists());
    assert!(out.join("failures.csv").exists());
}

#[test]
fn bad_arguments_fail_cleanly() {
    assert!(!spgmm(&["simulate", "--scenario", "S9", "--out", "x.csv"]).status.success());
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let out = spgmm(&["fit", "--data", s(&missing), "--out", s(&dir.path().join("d"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.csv"));
    let out = spgmm(&["study", "--iters", "100", "--burnin", "100", "--out", s(dir.path())]);
    assert!(!out.status.success());
}
