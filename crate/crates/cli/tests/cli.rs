use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_quasispec"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(format!("{name}.json"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// `(config, check, passed)` for every verdict line.
fn verdicts(o: &Output) -> Vec<(String, String, bool)> {
    stdout(o)
        .lines()
        .filter_map(|l| {
            let mut parts = l.splitn(3, ": ");
            let (name, check, rest) = (parts.next()?, parts.next()?, parts.next()?);
            Some((name.to_owned(), check.to_owned(), rest.starts_with("PASS")))
        })
        .collect()
}

#[test]
fn malformed_config_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("broken.json");
    std::fs::write(&p, "{\n  \"name\": \"x\",\n  \"task\": \"ids\",,\n}\n").unwrap();
    let o = run(&["run", "--config", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("broken.json:3:"), "{err}");
}

#[test]
fn unknown_fields_and_bad_flags_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.json");
    std::fs::write(
        &p,
        r#"{"name":"x","task":"census","graph":{"generator":"lattice","params":{"dim":1}},"levels":[2],"colour":1}"#,
    )
    .unwrap();
    let o = run(&["run", "--config", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("colour"));
    assert_eq!(run(&["run"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--levels", "x"]).status.code(), Some(2));
    let o = run(&["census", "--config", config("pendant_census").to_str().unwrap(), "--levels", "4,2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn pendant_census_frequencies() {
    let dir = tempfile::tempdir().unwrap();
    let o =
        run(&["census", "--config", config("pendant_census").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let csv = std::fs::read_to_string(dir.path().join("pendant_census_frequencies.csv")).unwrap();
    let mut freqs: Vec<&str> = csv.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    freqs.sort();
    assert_eq!(freqs, ["1/3", "2/3"]);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("pendant_census.json")).unwrap()).unwrap();
    assert_eq!(summary["passed"], true);
    assert_eq!(summary["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn verify_passes_and_is_stable_under_refinement() {
    let base = run(&["verify"]);
    assert_eq!(base.status.code(), Some(0), "{}", stdout(&base));
    let v1 = verdicts(&base);
    assert!(v1.len() > 30);
    assert!(v1.iter().all(|v| v.2));
    let doubled = run(&["verify", "--level-factor", "2"]);
    assert_eq!(doubled.status.code(), Some(0), "{}", stdout(&doubled));
    assert_eq!(v1, verdicts(&doubled));
}

#[test]
fn corrupted_orbit_table_fails_invariance() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("corrupt.json");
    // The two endpoints of the radius-1 ball in ℤ lie in one orbit; giving
    // only one of them a value breaks pattern invariance.
    std::fs::write(
        &p,
        r#"{"name":"corrupt","task":"ids","graph":{"generator":"lattice","params":{"dim":1}},
            "operator":{"op":"orbit_table","radius":1,"table":[
              {"code":"1:0300000000010103","position":0,"value":"2"},
              {"code":"1:0300000000010103","position":2,"value":"-1"}]},
            "levels":[5,10,20]}"#,
    )
    .unwrap();
    let o = run(&["run", "--config", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}{}", stdout(&o), stderr(&o));
    let v = verdicts(&o);
    assert!(v.contains(&("corrupt".into(), "pattern invariance".into(), false)), "{v:?}");

    let fixed = std::fs::read_to_string(&p).unwrap().replace("\"position\":2", "\"position\":1");
    std::fs::write(&p, fixed).unwrap();
    let o = run(&["run", "--config", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn reports_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, threads) in [(&a, "1"), (&b, "2")] {
        let o = run(&[
            "verify",
            "--config",
            config("decorated_logdet").to_str().unwrap(),
            "--config",
            config("fibonacci_ids").to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
            "--threads",
            threads,
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    }
    let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 4);
    for n in names {
        let x = std::fs::read(a.path().join(&n)).unwrap();
        let y = std::fs::read(b.path().join(&n)).unwrap();
        assert_eq!(x, y, "{n:?} differs");
    }
}

#[test]
fn seed_override_changes_the_decorated_graph() {
    let c = config("decorated_census");
    let c = c.to_str().unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(run(&["census", "--config", c, "--out", a.path().to_str().unwrap()]).status.success());
    assert!(run(&["census", "--config", c, "--seed", "5", "--out", b.path().to_str().unwrap()]).status.success());
    let read = |d: &Path| std::fs::read_to_string(d.join("decorated_census_frequencies.csv")).unwrap();
    assert_ne!(read(a.path()), read(b.path()));
}
