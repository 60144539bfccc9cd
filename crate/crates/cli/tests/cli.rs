use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn anonet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_anonet")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn testdata(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/testdata").join(name).display().to_string()
}

fn path_arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn counting_on_a_line_succeeds() {
    let out = anonet(&[
        "run", "--protocol", "anonymous-counting", "--adversary", "static-line", "--n", "6", "--seed", "1", "--mode",
        "broadcast",
    ]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("outputs: 6 6 6 6 6 6"));
}

#[test]
fn incompatible_mode_is_a_usage_error() {
    let out = anonet(&["run", "--protocol", "dynamic-naming", "--adversary", "static-star", "--mode", "broadcast"]);
    assert_eq!(code(&out), 64);
}

#[test]
fn unknown_flags_and_names_are_usage_errors() {
    assert_eq!(code(&anonet(&["run", "--bogus"])), 64);
    assert_eq!(code(&anonet(&["run", "--protocol", "nope", "--adversary", "static-star", "--n", "3"])), 64);
    assert_eq!(code(&anonet(&["run", "--protocol", "degree-counting", "--adversary", "static-line", "--n", "3"])), 64);
    assert_eq!(code(&anonet(&["--help"])), 0);
}

#[test]
fn degree_counting_metrics_row() {
    let dir = tempfile::tempdir().unwrap();
    let metrics = dir.path().join("m.csv");
    let out = anonet(&[
        "run", "--protocol", "degree-counting", "--adversary", "static-line", "--n", "3", "--d", "2", "--metrics",
        path_arg(&metrics),
    ]);
    assert_eq!(code(&out), 0);
    let mut reader = csv::Reader::from_path(&metrics).unwrap();
    let header = reader.headers().unwrap().clone();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 1);
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    assert_eq!(&rows[0][col("outputs")], "9 9 9");
    assert_eq!(&rows[0][col("verdict")], "true");
    assert_eq!(&rows[0][col("n")], "3");
}

#[test]
fn broken_degree_bound_has_no_verdict() {
    let out = anonet(&["run", "--protocol", "degree-counting", "--adversary", "static-star", "--n", "5", "--d", "2"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn stalled_naming_is_false() {
    let out = anonet(&["run", "--protocol", "hd-naming", "--adversary", "static-star", "--n", "5"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn split_round_is_named() {
    let out = anonet(&["verify", "connectivity", "--schedule", &testdata("split_round.json")]);
    assert_eq!(code(&out), 2);
    assert!(stdout(&out).contains("round 2"));
}

#[test]
fn shipped_schedules_verify() {
    assert_eq!(code(&anonet(&["verify", "lemma1", "--schedule", &testdata("random_n8.json")])), 0);
    assert_eq!(code(&anonet(&["verify", "connectivity", "--schedule", &testdata("random_n8.json")])), 0);
    assert_eq!(code(&anonet(&["verify", "high-dynamicity", "--schedule", &testdata("hd_n4.json"), "--k", "3"])), 0);
    let mirror = anonet(&["verify", "high-dynamicity", "--schedule", &testdata("mirror_n5.json"), "--k", "3"]);
    assert_eq!(code(&mirror), 2);
    assert!(stdout(&mirror).contains("share arrival vector"));
}

#[test]
fn malformed_schedule_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"n\": 3, \"rounds\": [[[0, 7]]]}").unwrap();
    assert_eq!(code(&anonet(&["verify", "lemma1", "--schedule", path_arg(&bad)])), 65);
    std::fs::write(&bad, "not json").unwrap();
    assert_eq!(code(&anonet(&["verify", "connectivity", "--schedule", path_arg(&bad)])), 65);
}

#[test]
fn star_leaves_stay_in_lockstep() {
    for protocol in ["leader-eccentricity", "anonymous-counting", "degree-klabeling", "hd-naming", "fair"] {
        let out = anonet(&[
            "verify", "lockstep", "--protocol", protocol, "--adversary", "static-star", "--n", "5", "--pairs", "leaves",
        ]);
        assert_eq!(code(&out), 0, "{protocol}");
    }
    let out = anonet(&[
        "verify", "lockstep", "--protocol", "degree-counting", "--d", "4", "--adversary", "static-star", "--n", "5",
        "--pairs", "1:2,3:4",
    ]);
    assert_eq!(code(&out), 0);
}

#[test]
fn lockstep_refuses_one_to_each_protocols() {
    let out = anonet(&[
        "verify", "lockstep", "--protocol", "dynamic-naming", "--adversary", "static-star", "--n", "5", "--pairs",
        "leaves",
    ]);
    assert_eq!(code(&out), 64);
}

#[test]
fn lockstep_reports_a_divergence() {
    // The root and a leaf of a star differ as soon as the leader acts.
    let out = anonet(&[
        "verify", "lockstep", "--protocol", "anonymous-counting", "--adversary", "static-star", "--n", "3", "--pairs",
        "0:1",
    ]);
    assert_eq!(code(&out), 2);
    assert!(stdout(&out).contains("differ"));
}

fn run_artifacts(dir: &Path, tag: &str, extra: &[&str]) -> (Vec<u8>, Vec<u8>) {
    let trace = dir.join(format!("{tag}.jsonl"));
    let result = dir.join(format!("{tag}.json"));
    let mut args = vec!["run", "--trace", path_arg(&trace), "--result", path_arg(&result)];
    args.extend_from_slice(extra);
    let out = anonet(&args);
    assert!(matches!(code(&out), 0 | 2 | 3), "{extra:?}: {}", String::from_utf8_lossy(&out.stderr));
    (std::fs::read(&trace).unwrap(), std::fs::read(&result).unwrap())
}

#[test]
fn runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let flags = ["--protocol", "delegate", "--adversary", "random-connected", "--n", "7", "--seed", "11"];
    let a = run_artifacts(dir.path(), "a", &flags);
    let b = run_artifacts(dir.path(), "b", &flags);
    assert!(!a.0.is_empty());
    assert_eq!(a, b);
}

#[test]
fn sweeps_are_ordered_and_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = |name: &str| -> PathBuf {
        let path = dir.path().join(name);
        let out = anonet(&[
            "sweep", "--protocol", "dynamic-naming", "--adversary", "random-connected", "--n-list", "8,4,6",
            "--seeds", "0..5", "--metrics", path_arg(&path), "--fit", "rounds",
        ]);
        assert_eq!(code(&out), 0);
        assert!(stdout(&out).contains("log-log slope"));
        path
    };
    let (a, b) = (sweep("a.csv"), sweep("b.csv"));
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let keys: Vec<(usize, u64)> = csv::Reader::from_path(&a)
        .unwrap()
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[2].parse().unwrap(), r[3].parse().unwrap())
        })
        .collect();
    assert_eq!(keys.len(), 15);
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
}

#[test]
fn sweep_records_failing_cells() {
    let out = anonet(&[
        "sweep", "--protocol", "leader-eccentricity", "--adversary", "mirror", "--n-list", "4,5", "--seeds", "1",
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().nth(1).unwrap().contains("error:"));
    assert!(text.lines().nth(2).unwrap().contains(",true,"));
}

#[test]
fn generated_schedules_replay() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("s.json");
    let out = anonet(&[
        "schedule", "--adversary", "random-connected", "--n", "6", "--seed", "4", "--rounds", "40", "--labelings",
        "--out", path_arg(&file),
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(code(&anonet(&["verify", "connectivity", "--schedule", path_arg(&file)])), 0);
    let replay = format!("replay:{}", file.display());
    let out = anonet(&["run", "--protocol", "dynamic-naming", "--adversary", &replay]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
}

#[test]
fn replay_failures() {
    let replay = format!("replay:{}", testdata("split_round.json"));
    let out = anonet(&["run", "--protocol", "anonymous-counting", "--adversary", &replay]);
    assert_eq!(code(&out), 65);
    let replay = format!("replay:{}", testdata("random_n8.json"));
    let out = anonet(&["run", "--protocol", "dynamic-naming", "--adversary", &replay]);
    assert_eq!(code(&out), 3);
}

#[test]
fn ring_demo() {
    let out = anonet(&["demo", "ring", "--protocol", "silence-counter", "--n", "3"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("ring(5)"));
    let out = anonet(&["demo", "ring", "--protocol", "anonymous-counting", "--n", "3"]);
    assert_eq!(code(&out), 64);
}
