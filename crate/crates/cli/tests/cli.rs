use std::fs;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use seccmp::bench::BenchReport;
use seccmp::{KeyFile, Variant};
use tempfile::TempDir;

fn seccmp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seccmp")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn keygen(dir: &Path, name: &str, flags: &[&str]) -> PathBuf {
    let path = dir.join(name);
    let mut args = vec!["keygen", "--out", path.to_str().unwrap()];
    args.extend_from_slice(flags);
    let out = seccmp(&args);
    assert!(out.status.success(), "keygen failed: {}", stderr(&out));
    path
}

fn full_key(dir: &Path) -> PathBuf {
    keygen(dir, "k1024.json", &["--k", "1024", "--t", "160", "--l", "16", "--seed", "42"])
}

fn small_key(dir: &Path, l: &str) -> PathBuf {
    keygen(dir, &format!("k64-l{l}.json"), &["--k", "64", "--t", "16", "--l", l, "--seed", "3", "--test-allow-tiny-keys"])
}

#[test]
fn keygen_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let flags = ["--k", "1024", "--t", "160", "--l", "16", "--seed", "42"];
    let first = fs::read(keygen(dir.path(), "a.json", &flags)).unwrap();
    let second = fs::read(keygen(dir.path(), "b.json", &flags)).unwrap();
    assert_eq!(first, second);
    let other = fs::read(keygen(dir.path(), "c.json", &["--seed", "43"])).unwrap();
    assert_ne!(first, other);
}

#[test]
fn keygen_rejects_bad_params() {
    let dir = TempDir::new().unwrap();
    let out_path = dir.path().join("k.json");
    let out = out_path.to_str().unwrap();
    let r = seccmp(&["keygen", "--k", "100", "--t", "160", "--l", "16", "--out", out]);
    assert_eq!(r.status.code(), Some(1));
    assert!(stderr(&r).contains("k > t"), "{}", stderr(&r));
    let r = seccmp(&["keygen", "--k", "256", "--t", "64", "--l", "8", "--out", out]);
    assert_eq!(r.status.code(), Some(1));
    assert!(stderr(&r).contains("--test-allow-tiny-keys"));
    let r = seccmp(&["keygen", "--k", "1024", "--t", "16", "--l", "16", "--out", out]);
    assert_eq!(r.status.code(), Some(1));
    assert!(!out_path.exists());
}

#[test]
fn toy_keygen_passes_validation() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("toy.json");
    let r = seccmp(&["keygen", "--k", "16", "--t", "8", "--l", "2", "--seed", "7", "--test-allow-tiny-keys", "--out", path.to_str().unwrap()]);
    assert!(r.status.success(), "{}", stderr(&r));
    let report = stdout(&r);
    assert!(report.lines().filter(|l| l.starts_with('[')).count() >= 20);
    assert!(!report.contains("[fail]"), "{report}");
    assert!(stderr(&r).contains("using k = 22"));
    let written = KeyFile::from_json(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(written.public_key().unwrap().params().k, 22);
}

#[test]
fn compare_outcomes_and_counters() {
    let dir = TempDir::new().unwrap();
    let keys = full_key(dir.path());
    let keys = keys.to_str().unwrap();

    let r = seccmp(&["compare", "--protocol", "p3", "--x", "5", "--y", "7", "--keys", keys]);
    assert!(r.status.success());
    let text = stdout(&r);
    assert_eq!(text.lines().next(), Some("GREATER"));
    assert!(text.contains("party A: encryptions=16 full_decryptions=0 zero_checks=16"), "{text}");
    assert!(text.contains("frames: 3"));

    let r = seccmp(&["compare", "--protocol", "p1", "--x", "5", "--y", "7", "--keys", keys]);
    let text = stdout(&r);
    assert_eq!(text.lines().next(), Some("GREATER"));
    assert!(text.contains("party A: encryptions=48 full_decryptions=32 zero_checks=16"), "{text}");
    assert!(text.contains("frames: 7"));

    for protocol in ["p1", "p3"] {
        let r = seccmp(&["compare", "--protocol", protocol, "--x", "7", "--y", "7", "--keys", keys]);
        assert_eq!(stdout(&r).lines().next(), Some("NOT_GREATER"));
    }
    let r = seccmp(&["compare", "--protocol", "p1", "--schedule", "per-bit", "--x", "1", "--y", "0", "--keys", keys]);
    assert_eq!(stdout(&r).lines().next(), Some("NOT_GREATER"));
    assert!(stdout(&r).contains("frames: 67"));
}

#[test]
fn compare_rejects_out_of_range_inputs() {
    let dir = TempDir::new().unwrap();
    let keys = small_key(dir.path(), "3");
    let keys = keys.to_str().unwrap();
    let r = seccmp(&["compare", "--x", "8", "--y", "1", "--keys", keys]);
    assert_eq!(r.status.code(), Some(1));
    let r = seccmp(&["compare", "--x", "-1", "--y", "1", "--keys", keys]);
    assert_eq!(r.status.code(), Some(1));
    let r = seccmp(&["compare", "--protocol", "p2", "--x", "1", "--y", "1", "--keys", keys]);
    assert_eq!(r.status.code(), Some(1));
    let r = seccmp(&["compare", "--x", "1", "--y", "1", "--keys", "/nonexistent/keys.json"]);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn tcp_and_memory_transports_agree() {
    let dir = TempDir::new().unwrap();
    let keys = small_key(dir.path(), "4");
    let keys = keys.to_str().unwrap();
    for (x, y) in [("3", "12"), ("9", "9"), ("15", "0")] {
        for protocol in ["p1", "p3"] {
            let base = ["compare", "--protocol", protocol, "--x", x, "--y", y, "--keys", keys, "--seed", "5"];
            let mem = seccmp(&[&base[..], &["--transport", "mem"]].concat());
            let tcp = seccmp(&[&base[..], &["--transport", "tcp"]].concat());
            assert!(mem.status.success() && tcp.status.success(), "{}", stderr(&tcp));
            assert_eq!(stdout(&mem), stdout(&tcp));
        }
    }
}

#[test]
fn bench_reports_exact_counters_and_round_trips() {
    let dir = TempDir::new().unwrap();
    let keys = small_key(dir.path(), "8");
    let machine = dir.path().join("bench.txt");
    let r = seccmp(&[
        "bench",
        "--keys",
        keys.to_str().unwrap(),
        "--reps",
        "3",
        "--seed",
        "1",
        "--machine-out",
        machine.to_str().unwrap(),
    ]);
    assert!(r.status.success(), "{}", stderr(&r));
    let text = stdout(&r);
    assert!(text.contains("ratio"));
    let records = fs::read_to_string(&machine).unwrap();
    assert!(text.ends_with(&records));
    let report = BenchReport::parse_machine(&records).unwrap();
    assert_eq!(report.to_machine(), records);
    assert_eq!((report.l, report.reps, report.seed), (8, 3, 1));
    let p1 = report.variant(Variant::P1).unwrap();
    let p3 = report.variant(Variant::P3).unwrap();
    assert_eq!(p1.party_a.encryptions, 3 * p3.party_a.encryptions);
    assert!(p1.matches_cost_formulas(8) && p3.matches_cost_formulas(8));
}

#[test]
fn bench_counters_are_stable_across_runs() {
    let run = || {
        let r = seccmp(&["bench", "--k", "96", "--t", "24", "--l", "6", "--reps", "1", "--seed", "4", "--test-allow-tiny-keys"]);
        assert!(r.status.success(), "{}", stderr(&r));
        let text = stdout(&r);
        let records: String = text.lines().filter(|l| l.starts_with("record=")).map(|l| format!("{l}\n")).collect();
        BenchReport::parse_machine(&records).unwrap()
    };
    let (a, b) = (run(), run());
    for (x, y) in a.variants.iter().zip(&b.variants) {
        assert_eq!((x.party_a, x.party_b), (y.party_a, y.party_b));
    }
    let r = seccmp(&["bench", "--k", "96", "--t", "24", "--l", "6", "--reps", "0", "--test-allow-tiny-keys"]);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn auction_command() {
    let dir = TempDir::new().unwrap();
    let keys = small_key(dir.path(), "3");
    let keys = keys.to_str().unwrap();
    let bids = dir.path().join("bids.txt");
    let bids_arg = bids.to_str().unwrap();

    fs::write(&bids, "3\n5\n4\n").unwrap();
    let r = seccmp(&["auction", "--bids", bids_arg, "--keys", keys, "--seed", "2"]);
    assert!(r.status.success(), "{}", stderr(&r));
    let outcomes: Vec<String> = stdout(&r)
        .lines()
        .filter(|l| l.starts_with("round"))
        .map(|l| l.rsplit(' ').next().unwrap().to_string())
        .collect();
    assert_eq!(outcomes, ["GREATER", "GREATER", "NOT_GREATER"]);
    assert!(stdout(&r).contains("winner: 5 (bidder-2, round 2)"));

    fs::write(&bids, "").unwrap();
    let r = seccmp(&["auction", "--bids", bids_arg, "--keys", keys]);
    assert!(stdout(&r).contains("winner: 0"));

    fs::write(&bids, "1\n8\n").unwrap();
    let r = seccmp(&["auction", "--bids", bids_arg, "--keys", keys]);
    assert_eq!(r.status.code(), Some(1));
    assert!(stderr(&r).contains("line 2"));

    fs::write(&bids, "1\n2\nthree\n").unwrap();
    let r = seccmp(&["auction", "--bids", bids_arg, "--keys", keys]);
    assert_eq!(r.status.code(), Some(1));
    assert!(stderr(&r).contains("line 3"), "{}", stderr(&r));
}

fn free_port() -> u16 {
    TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

struct PartyFiles {
    keys: PathBuf,
    public: PathBuf,
    a: (PathBuf, PathBuf),
    b: (PathBuf, PathBuf),
}

fn party_files(dir: &Path, x: &str, y: &str) -> PartyFiles {
    let keys = dir.join("keys.json");
    let public = dir.join("public.json");
    let r = seccmp(&[
        "keygen", "--k", "64", "--t", "16", "--l", "3", "--seed", "9", "--test-allow-tiny-keys",
        "--out", keys.to_str().unwrap(), "--public-out", public.to_str().unwrap(),
    ]);
    assert!(r.status.success());
    let share = |value: &str, name: &str, seed: &str| {
        let (a, b) = (dir.join(format!("{name}_a.txt")), dir.join(format!("{name}_b.txt")));
        let r = seccmp(&[
            "share", "--value", value, "--keys", public.to_str().unwrap(), "--seed", seed,
            "--out-a", a.to_str().unwrap(), "--out-b", b.to_str().unwrap(),
        ]);
        assert!(r.status.success(), "{}", stderr(&r));
        (a, b)
    };
    let (xa, xb) = share(x, "x", "1");
    let (ya, yb) = share(y, "y", "2");
    PartyFiles { keys, public, a: (xa, ya), b: (xb, yb) }
}

fn spawn_party(role: &str, endpoint: [&str; 2], keys: &Path, shares: &(PathBuf, PathBuf), extra: &[&str]) -> std::process::Child {
    Command::new(env!("CARGO_BIN_EXE_seccmp"))
        .args(["party", "--role", role, endpoint[0], endpoint[1], "--keys", keys.to_str().unwrap()])
        .args(["--x-shares", shares.0.to_str().unwrap(), "--y-shares", shares.1.to_str().unwrap()])
        .args(["--timeout-ms", "10000"])
        .args(extra)
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap()
}

#[test]
fn two_processes_compare_over_tcp() {
    let dir = TempDir::new().unwrap();
    let files = party_files(dir.path(), "5", "7");
    let share_lines = fs::read_to_string(&files.a.0).unwrap();
    assert_eq!(share_lines.lines().count(), 3);
    for protocol in ["p3", "p1"] {
        let addr = format!("127.0.0.1:{}", free_port());
        let a = spawn_party("a", ["--listen", &addr], &files.keys, &files.a, &["--protocol", protocol]);
        let b = spawn_party("b", ["--connect", &addr], &files.public, &files.b, &["--protocol", protocol]);
        let (a, b) = (a.wait_with_output().unwrap(), b.wait_with_output().unwrap());
        assert!(a.status.success(), "A: {}", stderr(&a));
        assert!(b.status.success(), "B: {}", stderr(&b));
        assert_eq!(stdout(&a).lines().next(), Some("GREATER"));
        assert_eq!(stdout(&b).lines().next(), Some("GREATER"));
    }
}

#[test]
fn version_mismatch_fails_both_parties() {
    let dir = TempDir::new().unwrap();
    let files = party_files(dir.path(), "5", "7");
    let addr = format!("127.0.0.1:{}", free_port());
    let a = spawn_party("a", ["--listen", &addr], &files.keys, &files.a, &[]);
    let b = spawn_party("b", ["--connect", &addr], &files.public, &files.b, &["--wire-version", "2"]);
    let (a, b) = (a.wait_with_output().unwrap(), b.wait_with_output().unwrap());
    assert_eq!(a.status.code(), Some(2), "{}", stderr(&a));
    assert_eq!(b.status.code(), Some(2), "{}", stderr(&b));
    assert!(stderr(&a).contains("version mismatch"));
}

#[test]
fn party_connection_failures() {
    let dir = TempDir::new().unwrap();
    let files = party_files(dir.path(), "1", "2");
    let addr = format!("127.0.0.1:{}", free_port());
    let r = seccmp(&[
        "party", "--role", "b", "--connect", &addr, "--keys", files.public.to_str().unwrap(),
        "--x-shares", files.b.0.to_str().unwrap(), "--y-shares", files.b.1.to_str().unwrap(), "--timeout-ms", "300",
    ]);
    assert_eq!(r.status.code(), Some(2));
    // party A needs the secret key
    let r = seccmp(&[
        "party", "--role", "a", "--listen", &addr, "--keys", files.public.to_str().unwrap(),
        "--x-shares", files.a.0.to_str().unwrap(), "--y-shares", files.a.1.to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(1));
    // no endpoint given
    let r = seccmp(&["party", "--role", "a", "--keys", "k", "--x-shares", "x", "--y-shares", "y"]);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn help_and_unknown_commands() {
    assert_eq!(seccmp(&["--help"]).status.code(), Some(0));
    assert_eq!(seccmp(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(seccmp(&[]).status.code(), Some(1));
}
