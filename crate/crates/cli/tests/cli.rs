use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use lmc_core::calculus::{builtin_corpus, cut, derivation_to_json};

fn lmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lmc")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn prove_emit_then_check() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("proof.json");
    let o = lmc(&["prove", "dia box x |- x", "--emit", path_str(&file)]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("[bboxL]"));
    let o = lmc(&["check", path_str(&file)]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).starts_with("valid: dia box x |- x"));

    let tampered = fs::read_to_string(&file).unwrap().replace("\"bboxL\"", "\"T\"");
    fs::write(&file, tampered).unwrap();
    let o = lmc(&["check", path_str(&file)]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("invalid at node [0]"), "{}", stdout(&o));
}

#[test]
fn prove_failure_and_budget_flags() {
    let o = lmc(&["prove", "dia 1 |- 1"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).starts_with("not found"));
    let o = lmc(&[
        "prove",
        "box dia x = dia x",
        "--depth",
        "8",
        "--capc",
        "0",
        "--tlimit",
        "2",
        "--nodes",
        "100000",
    ]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert_eq!(stdout(&o).matches("found:").count(), 2);
    let o = lmc(&["prove", "dia dia x |- dia x", "--no-focus"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&lmc(&["prove", "(x o |- x"])), 2);
    assert_eq!(code(&lmc(&["frobnicate"])), 2);
    assert_eq!(code(&lmc(&["prove"])), 2);
    assert_eq!(code(&lmc(&["check", "/nonexistent/file.json"])), 2);
    assert_eq!(code(&lmc(&["soundness", "--rule", "nosuchrule", "--model", "z2-total"])), 2);
    assert_eq!(code(&lmc(&["eval", "x <= x", "--model", "truncated alphabet= L=1"])), 2);
    assert_eq!(code(&lmc(&["prove", "x = dia x", "--emit", "/tmp/unused.json"])), 2);
}

#[test]
fn parse_shows_canonical_forms() {
    let o = lmc(&["parse", "  ( x   o <y> ) |- dia( x * y )"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("sequent  (x o <y>) |- dia (x * y)"), "{}", stdout(&o));
    let o = lmc(&["parse", "box x = dia x"]);
    assert!(stdout(&o).contains("flat"));
    let o = lmc(&["parse", "(x * box y)", "--kind", "formula"]);
    assert!(stdout(&o).contains("cp       2"), "{}", stdout(&o));
}

#[test]
fn countermodel_prints_the_two_element_model() {
    let o = lmc(&["countermodel", "dia 1 |- 1"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("model Z2-total"), "{}", stdout(&o));
    let o = lmc(&["countermodel", "x |- dia x"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("no countermodel"));
}

#[test]
fn eliminate_with_trace() {
    let dir = tempfile::tempdir().unwrap();
    let c = builtin_corpus();
    let d = cut(c["ax1"].clone(), c["ax2b"].clone(), vec![]).unwrap();
    let input = dir.path().join("cut.json");
    let output = dir.path().join("free.json");
    fs::write(&input, derivation_to_json(&d)).unwrap();
    let o = lmc(&["eliminate", path_str(&input), "--trace", "--emit", path_str(&output)]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.lines().any(|l| l.starts_with("step node=[] depth=1 schema=")), "{out}");
    assert!(out.contains("cut-free: x |- dia dia x"));
    let o = lmc(&["check", path_str(&output)]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("cut-free"));
}

#[test]
fn eval_and_soundness() {
    let o = lmc(&["eval", "box x <= (box x * box 1)", "--model", "z2-total"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("FAILS at x↦{1,a}"));
    let o = lmc(&["eval", "x |- dia x"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).lines().count(), 9);
    let o = lmc(&["soundness", "--rule", "K", "--rule", "capC", "--model", "truncated alphabet=a L=2"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let o = lmc(&["soundness", "--rule", "K", "--inverted-k", "--model", "truncated alphabet=a L=2"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("K-inverted UNSOUND"));
}

#[test]
fn seeded_sampling_is_reproducible() {
    let args = [
        "soundness",
        "--rule",
        "prodR",
        "--model",
        "truncated alphabet=ab L=2",
        "--samples",
        "200",
        "--seed",
        "9",
        "--jobs",
        "2",
    ];
    let a = stdout(&lmc(&args));
    let b = stdout(&lmc(&args));
    assert_eq!(a, b);
    assert!(a.contains("prodR sound"));
}

#[test]
fn model_file_input() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("z2.model");
    fs::write(&f, "elements 1 a\nunit 1\ntable 1 a a 1\npreorder 1 1 1 1\n").unwrap();
    let o = lmc(&["eval", "dia 1 <= 1", "--model-file", path_str(&f)]);
    assert_eq!(code(&o), 1);
    let o = lmc(&["algebra", "monoid", path_str(&f)]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("cancellative: true  conical: false"));
}

#[test]
fn traces_subcommands() {
    let o = lmc(&["traces", "enumerate", "--len", "8", "--rooted", "--strict", "--count"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("total: 31"));
    let o = lmc(&["traces", "policy", "--rooted", "--strict"]);
    assert_eq!(code(&o), 0);
    let o = lmc(&["traces", "policy", "--rooted", "--len", "3"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("violated by (s0,conn),(s1,snd),(s2,conn)"));

    let dir = tempfile::tempdir().unwrap();
    let lts = dir.path().join("toggle.lts");
    fs::write(&lts, "state on off\ninit off\ntrans off flip on\ntrans on flip off\n").unwrap();
    let o = lmc(&["traces", "enumerate", "--lts", path_str(&lts), "--len", "2", "--rooted", "--strict"]);
    assert_eq!(stdout(&o), "eps\n(off,flip)\n(off,flip),(on,flip)\n");
    let prop = dir.path().join("p.txt");
    fs::write(&prop, "eps\n(off,flip)\n").unwrap();
    let o = lmc(&["traces", "classify", "--lts", path_str(&lts), path_str(&prop), "--len", "1"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("safety: true"));
    assert!(stdout(&o).contains("bounded to length 1): false"));
    let o = lmc(&["traces", "policy", "--property", path_str(&prop)]);
    assert_eq!(code(&o), 0);
}

#[test]
fn algebra_subcommands() {
    let o = lmc(&["algebra", "rdp", "aa", "ba", "aab"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("aab = aa.b"));
    assert_eq!(code(&lmc(&["algebra", "rdp", "a", "bc", "ac"])), 1);
    assert_eq!(code(&lmc(&["algebra", "endz"])), 0);
    assert_eq!(code(&lmc(&["algebra", "endz", "--lo", "-5", "--hi", "5"])), 0);
    assert_eq!(code(&lmc(&["algebra", "rdp-monoids", "--max-size", "3"])), 0);
    let o = lmc(&["algebra", "rdp-monoids", "--max-size", "4"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("size 4: 35 monoids, 12 failing checks"));
}
