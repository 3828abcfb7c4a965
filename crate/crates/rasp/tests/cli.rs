use std::process::{Command, Output};

use rasp::{corpus_dir, fixtures_dir};

fn rasp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rasp")).args(args).output().unwrap()
}

fn program(name: &str) -> String {
    corpus_dir().join(format!("{name}.rasp")).display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn run_prints_the_output() {
    let o = rasp(&["run", &program("increment"), "01011"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "01100\n");
    assert_eq!(stdout(&rasp(&["run", &program("identity"), "abc"])), "abc\n");
    let o = rasp(&["run", &program("marked-square"), "aab", "--n", "14"]);
    assert_eq!(stdout(&o), "|Aab|AAb|AAB|\n");
    let o = rasp(&["run", &program("marked-square"), "aab", "--n", "14", "--format", "cells"]);
    assert_eq!(stdout(&o), "|\tA\ta\tb\t|\tA\tA\tb\t|\tA\tA\tB\t|\t␣\n");
}

#[test]
fn trace_shows_every_row() {
    let o = rasp(&["trace", &program("residues-3"), "abababab"]);
    let out = stdout(&o);
    assert!(out.lines().any(|l| l == "out\t0\t1\t2\t0\t1\t2\t0\t1"), "{out}");
    let o = rasp(&["trace", &program("increment"), "01", "--format", "markdown"]);
    assert!(stdout(&o).starts_with("| | 0 | 1 |\n|---|---|---|\n| in | 0 | 1 |\n"));
}

#[test]
fn program_without_output_is_rejected() {
    let dir = std::env::temp_dir().join(format!("rasp-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let f = dir.join("empty.rasp");
    std::fs::write(&f, "dialect: brasp\nsigma: a b\ngamma: a b\n").unwrap();
    let o = rasp(&["trace", f.to_str().unwrap(), "ab"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`out` must be the final definition"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn exit_codes_follow_the_failing_phase() {
    let dir = std::env::temp_dir().join(format!("rasp-codes-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let syntax = dir.join("syntax.rasp");
    std::fs::write(&syntax, "dialect: brasp\nsigma: a\nout(i) = = in(i);\n").unwrap();
    let types = dir.join("types.rasp");
    std::fs::write(&types, "dialect: brasp\nsigma: a\nout(i) = pos(i);\n").unwrap();
    assert_eq!(rasp(&["check", &program("increment")]).status.code(), Some(0));
    assert_eq!(rasp(&["check", syntax.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(rasp(&["check", types.to_str().unwrap()]).status.code(), Some(3));
    assert_eq!(rasp(&["run", types.to_str().unwrap(), "a"]).status.code(), Some(3));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn lowering_writes_artifacts() {
    let o = rasp(&["lower", &program("increment"), "--target", "fst"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(rasp_core::fst::read_pipeline(&text).unwrap().stages.len(), 4);
    let o = rasp(&["lower", &program("identity-srasp"), "--target", "aha"]);
    assert!(rasp_core::aha::read_spec(&stdout(&o)).is_ok());
    let o = rasp(&["lower", &program("majority-rules"), "--target", "aha", "--pe-mode", "C"]);
    assert_eq!(rasp_core::aha::read_spec(&stdout(&o)).unwrap().mode, rasp_core::aha::PeMode::C);
    let o = rasp(&["lower", &program("count-mod-3"), "--target", "fst"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn check_reports_aperiodicity() {
    let f = fixtures_dir().join("dfa/aa-star.dft");
    let out = stdout(&rasp(&["check", f.to_str().unwrap()]));
    assert!(out.contains("not aperiodic: `a`"), "{out}");
}

#[test]
fn verify_passes_and_fails() {
    let o = rasp(&["verify", &program("increment"), "--against", "all", "--maxlen", "8"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("oracle: PASS over 511 inputs"), "{out}");
    assert!(out.contains("fst: PASS over 511 inputs"), "{out}");
    assert!(out.contains("aha: PASS over 511 inputs"), "{out}");

    let o = rasp(&["verify", &program("map-duplicate"), "--against", "oracle", "--maxlen", "7"]);
    assert!(o.status.success(), "{}", stdout(&o));

    let bad = fixtures_dir().join("corrupt/marked-square.rasp");
    let o = rasp(&["verify", bad.to_str().unwrap(), "--against", "oracle", "--maxlen", "4"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL on `aa`"), "{}", stdout(&o));
}

#[test]
fn maxlen_comes_from_the_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_rasp"))
        .args(["verify", &program("increment"), "--against", "oracle"])
        .env("RASP_MAXLEN", "3")
        .output()
        .unwrap();
    assert!(stdout(&o).contains("PASS over 15 inputs"), "{}", stdout(&o));
}

#[test]
fn missing_oracle_is_an_error() {
    let f = fixtures_dir().join("corrupt/marked-square.rasp");
    let o = rasp(&["verify", f.to_str().unwrap(), "--against", "oracle", "--oracle", "nothing"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no oracle registered for `nothing`"));
}
