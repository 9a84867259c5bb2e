use std::path::Path;
use std::process::{Command, Output};

const EXE: &str = env!("CARGO_BIN_EXE_vortex-uca");

fn run(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(EXE);
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("VORTEX_UCA_THREADS", t),
        None => cmd.env_remove("VORTEX_UCA_THREADS"),
    };
    cmd.output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn output_independent_of_thread_count() {
    for sub in ["se-vs-phi", "gain-vs-theta", "error-sweep"] {
        let one = run(&[sub], Some("1"));
        let three = run(&[sub], Some("3"));
        assert!(one.status.success(), "{}", stderr(&one));
        assert_eq!(one.stdout, three.stdout, "{sub}");
    }
}

#[test]
fn out_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("se.csv");
    let to_file = run(
        &[
            "se-vs-phi",
            "--grid",
            "0:1:11",
            "--out",
            path.to_str().unwrap(),
        ],
        None,
    );
    assert!(to_file.status.success());
    assert!(to_file.stdout.is_empty());
    let to_stdout = run(&["se-vs-phi", "--grid", "0:1:11"], None);
    assert_eq!(std::fs::read(&path).unwrap(), to_stdout.stdout);
}

#[test]
fn csv_layout() {
    let o = run(&["gain-vs-theta"], None);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("theta,m,mode,gain_magnitude"));
    assert!(text.contains("# phi_rad = 1.0471975511965979"));
    let rows: Vec<&str> = text
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .collect();
    assert_eq!(rows.len(), 360 * 4 * 10);
    assert!(rows.iter().all(|r| r.split(',').count() == 4));
    let first_ms: Vec<&str> = rows[..40]
        .iter()
        .map(|r| r.split(',').nth(1).unwrap())
        .collect();
    assert_eq!(first_ms[0], "1");
    assert_eq!(first_ms[39], "4");
}

#[test]
fn seed_changes_demo_but_not_sweeps() {
    let a = run(&["demux-demo", "--seed", "1"], None);
    let b = run(&["demux-demo", "--seed", "2"], None);
    assert!(a.status.success() && b.status.success());
    assert_ne!(a.stdout, b.stdout);
    assert!(stderr(&a).contains("crosstalk max off-diagonal"));
    assert!(stderr(&a).contains("[farfield/awgn]"));
}

#[test]
fn config_file_is_applied() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "[geometry]\nn_tx = 16\nn_rx = 16\n[sweep]\nstart = 0.5\nstop = 0.5\nsteps = 1\n",
    );
    let o = run(&["se-vs-phi", "--config", &cfg], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("# n_tx = 16"));
    let rows: Vec<&str> = text
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .collect();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].starts_with("5.000000000000000e-1,"));
}

#[test]
fn unknown_key_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[geometry]\nn_tx = 10\nbogus = 1\n");
    let o = run(&["gain-vs-phi", "--config", &cfg], None);
    assert!(!o.status.success());
    let msg = stderr(&o);
    assert!(msg.contains("line 3"), "{msg}");
    assert!(msg.contains("bogus"), "{msg}");
}

#[test]
fn degree_keys_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[geometry]\nphi_deg = 30\n");
    let o = run(&["se-vs-phi", "--config", &cfg], None);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("phi_deg"));
}

#[test]
fn invalid_inputs_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let zero = write(dir.path(), "z.toml", "[geometry]\nn_tx = 0\n");
    let cases: Vec<(Vec<&str>, Option<&str>)> = vec![
        (vec!["se-vs-phi", "--grid", "0:1"], None),
        (vec!["se-vs-phi", "--grid", "0:3:5"], None),
        (
            vec!["gain-vs-phi", "--config", "/nonexistent/vortex.toml"],
            None,
        ),
        (vec!["gain-vs-phi", "--config", &zero], None),
        (vec!["se-vs-phi", "--seed", "18446744073709551615"], None),
        (vec!["se-vs-phi"], Some("0")),
        (vec!["no-such-experiment"], None),
    ];
    for (args, threads) in cases {
        let o = run(&args, threads);
        assert!(!o.status.success(), "{args:?} should fail");
        assert!(!stderr(&o).is_empty(), "{args:?} should explain");
        assert!(o.stdout.is_empty(), "{args:?} wrote output");
    }
}

#[test]
fn error_sweep_notes_excluded_modes() {
    let o = run(&["error-sweep", "--grid", "8:9:2"], None);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("# excluded: n_elements=8 mode=5 is outside the mode set"));
    assert!(text.contains("# note: n_elements=9 is odd"));
}
