use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn lagca(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lagca")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn derive_prints_the_law_and_schedule() {
    let o = lagca(&["derive", path(&scenario("oscillator.toml"))]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("d2(x,t) = -(k/m)*x"), "{text}");
    assert!(text.contains("family:"));
    assert!(text.lines().any(|l| l.starts_with("step 1:")));

    let o = lagca(&["derive", path(&scenario("free_particle.toml"))]);
    assert!(stdout(&o).contains("d2(x,t) = 0"));
}

#[test]
fn malformed_scenarios_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[model]\nlagrangian = \n").unwrap();
    for cmd in ["derive", "validate", "run"] {
        let o = lagca(&[cmd, path(&bad)]);
        assert_eq!(o.status.code(), Some(2), "{cmd}");
        assert!(stderr(&o).contains("bad.toml:2"), "{}", stderr(&o));
    }
    let o = lagca(&["run", path(&dir.path().join("absent.toml"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unstable_runs_need_explicit_consent() {
    let file = scenario("wave_unstable.toml");
    let o = lagca(&["run", path(&file), "--ticks", "5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Courant number"));
    let o = lagca(&["run", path(&file), "--ticks", "5", "--allow-unstable"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn runtime_divergence_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("spike.toml");
    std::fs::write(
        &file,
        r#"[model]
equation = "d(psi,t) = i*hbar/(2*m)*d2(psi,x)"
[constants]
hbar = 1.0
m = 1.0
[grid]
cells = 64
dx = 0.1
[run]
dt = 0.0018
ticks = 200
[field.f]
profile = "impulse"
"#,
    )
    .unwrap();
    let o = lagca(&["run", path(&file)]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let file = scenario("compton.toml");
    let mut outputs = Vec::new();
    for n in 0..2 {
        let out = dir.path().join(n.to_string());
        let o = lagca(&["run", path(&file), "--seed", "3", "--out", path(&out)]);
        assert!(o.status.success(), "{}", stderr(&o));
        let files: Vec<Vec<u8>> = ["snapshots.csv", "plot.csv", "events.csv", "record.toml"]
            .iter()
            .map(|f| std::fs::read(out.join(f)).unwrap())
            .collect();
        outputs.push(files);
    }
    assert_eq!(outputs[0], outputs[1]);
    let record = String::from_utf8(outputs[0][3].clone()).unwrap();
    assert!(record.contains("seed = \"3\"") || record.contains("seed = 3"), "{record}");
}

#[test]
fn run_without_out_streams_snapshots() {
    let o = lagca(&["run", path(&scenario("oscillator.toml")), "--ticks", "0"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("tick,t,object,cell,x,re,im,abs2"));
    assert_eq!(lines.count(), 1);
}

#[test]
fn channels_lists_or_reports_none() {
    let o = lagca(&["channels", "electron", "photon"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 2);

    let o = lagca(&["channels", "generic", "generic"]);
    assert_eq!(stdout(&o).trim(), "no channels");

    let o = lagca(&["channels", "electron", "muon"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_reports_ok_or_errors() {
    let o = lagca(&["validate", path(&scenario("wave.toml"))]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "ok");

    let o = lagca(&["validate", path(&scenario("wave_unstable.toml"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("wave_unstable.toml:"), "{}", stderr(&o));
}
