use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn twr(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twr")).current_dir(dir).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn train_taps(dir: &Path, count: u32) -> Vec<String> {
    let files: Vec<String> = (0..count).map(|i| format!("tap{i}.csv")).collect();
    for (i, f) in files.iter().enumerate() {
        let seed = (1000 + i).to_string();
        assert_eq!(code(&twr(dir, &["gen", "tap", "--seed", &seed, "--out", f])), 0);
    }
    files
}

#[test]
fn train_then_match() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let files = train_taps(d, 30);
    let mut args = vec!["train", "--db", "db.toml", "--id", "tap-once", "--service", "nfc"];
    args.extend(files.iter().map(String::as_str));
    let out = twr(d, &args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let line = stdout(&out);
    let threshold: f64 = line.trim().strip_prefix("threshold=").unwrap().parse().unwrap();
    assert!((-1.0..=1.0).contains(&threshold));

    let out = twr(d, &["match", "--db", "db.toml", "--id", "tap-once", "tap0.csv"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("matched=true"));

    assert_eq!(code(&twr(d, &["gen", "accel", "still", "--seed", "7", "--out", "still.csv"])), 0);
    let out = twr(d, &["match", "--db", "db.toml", "--id", "tap-once", "still.csv"]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).starts_with("score=") && stdout(&out).contains("matched=false"));

    let out = twr(d, &["match", "--db", "db.toml", "--id", "nope", "still.csv"]);
    assert_eq!(code(&out), 2);

    let out = twr(d, &["match", "--db", "db.toml", "--id", "tap-once", "--scan", "still.csv"]);
    assert_eq!(code(&out), 1);
    assert_eq!(stdout(&out), "hits=0 matched=false\n");
}

#[test]
fn train_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let files = train_taps(d, 2);
    let out = twr(d, &["train", "--db", "db.toml", "--id", "x", &files[0]]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("need at least 2 traces"));

    let out = twr(d, &["train", "--db", "no/such/dir/db.toml", "--id", "x", &files[0], &files[1]]);
    assert_ne!(code(&out), 0);
    assert!(!d.join("no").exists());
}

#[test]
fn prox_run_reports_windows() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("wave.csv"), "0,5\n200,0\n400,5\n600,0\n800,5\n900,0\n1000,5\n3000,5\n").unwrap();
    let out = twr(d, &["prox-run", "wave.csv"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "unlock,1000,2000\n");

    let out = twr(d, &["prox-run", "--wind-sz", "7", "wave.csv"]);
    assert_eq!(stdout(&out), "");

    fs::write(d.join("flat.csv"), "0,5\n1000,5\n2000,5\n").unwrap();
    let out = twr(d, &["prox-run", "flat.csv"]);
    assert_eq!((code(&out), stdout(&out).as_str()), (0, ""));

    fs::write(d.join("bad.csv"), "0,5\n10,oops\n").unwrap();
    let out = twr(d, &["prox-run", "bad.csv"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line 2"));
}

#[test]
fn db_administration() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&twr(d, &["db", "--db", "db.toml", "add-policy", "--service", "sms", "--kind", "prox"])), 0);
    let out = twr(d, &["db", "--db", "db.toml", "list"]);
    assert_eq!(stdout(&out), "policy,sms,user_independent_prox,,2000\n");

    let out = twr(d, &["db", "--db", "db.toml", "rm-policy", "nfc"]);
    assert_eq!(code(&out), 0);
    assert!(stderr(&out).contains("warning"));
    let out = twr(d, &["db", "--db", "db.toml", "rm-template", "ghost"]);
    assert_eq!(code(&out), 0);
    assert!(stderr(&out).contains("warning"));

    let out =
        twr(d, &["db", "--db", "db.toml", "add-policy", "--service", "nfc", "--kind", "tap", "--template", "ghost"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("ghost"));

    assert_eq!(code(&twr(d, &["db", "--db", "db.toml", "rm-policy", "sms"])), 0);
    assert_eq!(stdout(&twr(d, &["db", "--db", "db.toml", "list"])), "");
}

#[test]
fn replay_builtin_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for name in ["pickpocket", "legit-nfc", "legit-sms"] {
        assert_eq!(code(&twr(d, &["gen", "scenario", name, "--out", name])), 0);
        let scenario = format!("{name}/scenario.toml");
        let first = twr(d, &["replay", &scenario]);
        assert_eq!(code(&first), 0, "{name}: {}", stderr(&first));
        assert!(stdout(&first).ends_with("mismatches=0\n"));
        assert_eq!(stdout(&first), stdout(&twr(d, &["replay", &scenario])));
    }
    let out = stdout(&twr(d, &["replay", "pickpocket/scenario.toml"]));
    assert!(out.contains("forwards=0 rejects=120"));
    assert_eq!(out.lines().filter(|l| l.contains(",nfc,REJECT,NO_GESTURE,")).count(), 120);

    let scenario = d.join("pickpocket/scenario.toml");
    let text =
        fs::read_to_string(&scenario).unwrap().replacen("500,tictactoe,nfc,REJECT", "500,tictactoe,nfc,FORWARD", 1);
    fs::write(&scenario, text).unwrap();
    let out = twr(d, &["replay", "pickpocket/scenario.toml"]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).ends_with("mismatches=1\n"));
}

#[test]
fn eval_prints_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = twr(dir.path(), &["eval", "tap", "--corpus-size", "20"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.lines().any(|l| l.starts_with("Tapping Once ")));
    assert!(text.contains("Tapping Once,Still,0,20,0.0000"));
    assert!(stderr(&out).contains("runtime_ms="));

    let out = twr(dir.path(), &["eval", "prox", "--corpus-size", "20"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("Hand Waving"));
}

#[test]
fn gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for f in ["a.csv", "b.csv"] {
        assert_eq!(code(&twr(d, &["gen", "accel", "still", "--seed", "7", "--out", f])), 0);
    }
    let a = fs::read_to_string(d.join("a.csv")).unwrap();
    assert_eq!(a, fs::read_to_string(d.join("b.csv")).unwrap());
    assert!(a.starts_with("# generator: twr gen accel still seed=7"));

    let out = twr(d, &["gen", "prox", "wave", "--seed", "3"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("# label: wave"));
    assert_eq!(code(&twr(d, &["gen", "prox", "tornado"])), 2);
    assert_eq!(code(&twr(d, &["gen", "tap", "--taps", "4"])), 2);
}
