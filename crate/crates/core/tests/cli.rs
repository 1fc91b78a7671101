use std::path::Path;
use std::process::{Command, Output};

fn fcmon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fcmon")).args(args).output().unwrap()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

const CORPUS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/corpus");

fn write_line_scenario(dir: &Path) -> String {
    let path = dir.join("line.toml");
    std::fs::write(
        &path,
        "seed = 1\nrounds = 6\nprogram = \"hop.fc\"\n[topology]\nkind = \"edges\"\ndevices = 4\nedges = [[0, 1], [1, 2], [2, 3]]\n[link]\nloss = 0.3\n[sensors.source]\ndefault = false\ndevices = { \"0\" = true }\n",
    )
    .unwrap();
    std::fs::copy(format!("{}/hopcount.fc", CORPUS), dir.join("hop.fc")).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn parse_prints_the_core_form() {
    let out = fcmon(&["parse", "--program", &format!("{}/samevalue.fc", CORPUS)]);
    assert_eq!(out.status.code(), Some(0));
    let core = text(&out.stdout);
    assert!(core.contains("def _let0("), "{}", core);
    assert!(!core.contains(" let "));
}

#[test]
fn parse_failures_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.fc");
    std::fs::write(&bad, "def f(x) {\n  x +\n}\n").unwrap();
    let out = fcmon(&["parse", "--program", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("3:1: syntax error"), "{}", text(&out.stderr));

    let out = fcmon(&["parse", "--program", "/nonexistent/x.fc"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_writes_deterministic_traces() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_line_scenario(dir.path());
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    for out in [&a, &b] {
        let o = fcmon(&[
            "run",
            "--scenario",
            &scenario,
            "--format",
            "records",
            "--dump-events",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    }
    let first = std::fs::read_to_string(&a).unwrap();
    assert_eq!(first, std::fs::read_to_string(&b).unwrap());
    assert!(first.lines().any(|l| l.starts_with("edge")));

    let other_seed = fcmon(&["run", "--scenario", &scenario, "--format", "records", "--seed", "99"]);
    assert_eq!(other_seed.status.code(), Some(0));
    assert_ne!(text(&other_seed.stdout), first);
}

#[test]
fn run_overrides_rounds_and_constants() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_line_scenario(dir.path());
    let program = dir.path().join("k.fc");
    std::fs::write(&program, "K + myID()").unwrap();
    let o = fcmon(&[
        "run",
        "--program",
        program.to_str().unwrap(),
        "--scenario",
        &scenario,
        "--rounds",
        "1",
        "--set",
        "K=100",
        "--format",
        "records",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    let fires: Vec<String> = text(&o.stdout)
        .lines()
        .filter(|l| l.split('\t').nth(1) == Some("fire"))
        .map(|l| l.rsplit(' ').next().unwrap().to_string())
        .collect();
    assert_eq!(fires.len(), 4);
    assert!(fires.iter().all(|v| v.parse::<f64>().unwrap() >= 100.0));
}

#[test]
fn run_rejects_invalid_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "seed = 1\n[topology]\nkind = \"grid\"\nwidth = 2\nheight = 2\n").unwrap();
    let o = fcmon(&[
        "run",
        "--program",
        &format!("{}/hopcount.fc", CORPUS),
        "--scenario",
        bad.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stderr).contains("stop condition"));
    let o = fcmon(&[
        "run",
        "--program",
        &format!("{}/hopcount.fc", CORPUS),
        "--scenario",
        &format!("{}/hopcount.scenario.toml", CORPUS),
        "--set",
        "X",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn check_exit_codes() {
    assert_eq!(fcmon(&["check", "hopcount"]).status.code(), Some(0));

    let mutant = fcmon(&["check", "hopcount", "--mutate"]);
    assert_eq!(mutant.status.code(), Some(1));
    assert!(text(&mutant.stdout).contains("first divergence"));

    let unknown = fcmon(&["check", "no-such-program"]);
    assert_eq!(unknown.status.code(), Some(2));
    assert!(text(&unknown.stderr).contains("no-such-program"));

    assert_eq!(fcmon(&["check"]).status.code(), Some(2));
}

#[test]
fn check_accepts_a_metadata_path_and_a_replacement_program() {
    let meta = format!("{}/stereo.meta.toml", CORPUS);
    assert_eq!(fcmon(&["check", &meta]).status.code(), Some(0));
    // The oracle reads the same overridden constant, so the check still holds.
    assert_eq!(fcmon(&["check", &meta, "--set", "DELAY=2"]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let wrong = dir.path().join("wrong.fc");
    std::fs::write(&wrong, "False").unwrap();
    assert_eq!(
        fcmon(&["check", "stereo", "--program", wrong.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn check_report_as_records() {
    let o = fcmon(&["check", "parity", "--format", "records"]);
    assert_eq!(o.status.code(), Some(0));
    let out = text(&o.stdout);
    let last = out.lines().last().unwrap();
    assert!(last.contains("\tverdict\t") && last.contains("parity pass"), "{}", last);
    assert!(out.lines().all(|l| l.split('\t').count() == 5));
}
