use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_isoquant"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

/// Runs with `stdin` piped in.
fn run(args: &[&str], stdin: &str) -> Output {
    let mut child = bin()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> &str {
    std::str::from_utf8(&o.stdout).unwrap()
}

fn stderr(o: &Output) -> &str {
    std::str::from_utf8(&o.stderr).unwrap()
}

#[test]
fn fit_two_rows() {
    let o = run(&["fit", "--grid", "levels=0,0.5,1"], "1,1\n2,0\n");
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "isoquant-map 1\ngrid levels=0,0.5,1\nblocks 1\nblock 1 2 0.5 2\nend\n");
    assert_eq!(stderr(&o).trim(), "n=2 groups=1 loss=0.5");
}

#[test]
fn fit_golden_file() {
    let input = data("batch_example.csv");
    let o = bin()
        .args(["fit", "--grid", "levels=0,0.5,1", "--input"])
        .arg(&input)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), std::fs::read_to_string(data("batch_example.map")).unwrap());
}

#[test]
fn malformed_row_names_its_line() {
    let o = run(&["fit", "--grid", "levels=0,1"], "1,abc\n");
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.contains("line 1"), "{err}");
    assert_eq!(err.lines().count(), 1, "one-line diagnostic: {err}");
}

#[test]
fn empty_input_is_no_data() {
    for args in [
        vec!["fit", "--grid", "levels=0,1"],
        vec!["stream", "--mode", "ordered", "--grid", "levels=0,1"],
        vec!["stream", "--mode", "unordered", "--grid", "levels=0,1"],
    ] {
        let o = run(&args, "# nothing here\n");
        assert!(!o.status.success());
        assert!(stderr(&o).contains("no data"), "{}", stderr(&o));
    }
}

#[test]
fn bad_grid_prints_usage() {
    let o = run(&["fit", "--grid", "steps=3"], "1,1\n");
    assert!(!o.status.success());
    assert!(stderr(&o).contains("usage"), "{}", stderr(&o));
}

#[test]
fn ordered_stream_rejects_decreasing_score() {
    let o = run(&["stream", "--mode", "ordered", "--grid", "levels=0,1"], "2,0\n1,0\n");
    assert!(!o.status.success());
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn unordered_stream_matches_fit() {
    let rows = "3,0.5\n1,0.9\n2,0.1\n";
    let fit = run(&["fit", "--grid", "levels=0,0.5,1"], rows);
    let stream = run(&["stream", "--mode", "unordered", "--grid", "levels=0,0.5,1"], rows);
    assert!(stream.status.success(), "{}", stderr(&stream));
    assert_eq!(stdout(&fit), stdout(&stream));
}

#[test]
fn snapshots_go_to_stderr() {
    let o = run(
        &["stream", "--mode", "ordered", "--grid", "levels=0,1", "--snapshot-every", "2"],
        "1,0\n2,1\n3,1\n4,1\n5,0\n",
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let snaps: Vec<&str> = stderr(&o).lines().filter(|l| l.starts_with("snapshot")).collect();
    assert_eq!(snaps.len(), 2);
    assert!(snaps[0].starts_with("snapshot n=2 groups=2"), "{}", snaps[0]);
    assert!(stdout(&o).starts_with("isoquant-map 1\n"));
}

#[test]
fn apply_two_step_map() {
    let map = data("two_step.map");
    let o = run(&["apply", "--map", map.to_str().unwrap()], "1.4\n# skipped\n10,0.3\n-5\n");
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "0\n1\n0\n");
}

#[test]
fn apply_rejects_truncated_map() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cut.map");
    let full = std::fs::read_to_string(data("two_step.map")).unwrap();
    std::fs::write(&path, &full[..full.len() - 4]).unwrap();
    let o = run(&["apply", "--map", path.to_str().unwrap()], "1\n");
    assert!(!o.status.success());
    assert!(stderr(&o).contains("map format error"), "{}", stderr(&o));
}

#[test]
fn fit_writes_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.map");
    let o = bin()
        .args(["fit", "--grid", "levels=0,0.5,1", "--input"])
        .arg(data("batch_example.csv"))
        .arg("--output")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let applied = run(&["apply", "--map", out.to_str().unwrap()], "0\n2\n9\n");
    assert_eq!(stdout(&applied), "0.5\n0.5\n0.5\n");
}

#[test]
fn bench_writes_one_row_per_size() {
    let o = run(&["bench", "--sizes", "1,64,256", "--seed", "5"], "");
    assert!(o.status.success(), "{}", stderr(&o));
    let lines: Vec<&str> = stdout(&o).lines().collect();
    assert_eq!(lines[0], "# seed=5 grid=levels=0,0.06666666666666667,0.13333333333333333,0.2,0.26666666666666666,0.3333333333333333,0.4,0.4666666666666667,0.5333333333333333,0.6,0.6666666666666666,0.7333333333333333,0.8,0.8666666666666667,0.9333333333333333,1");
    assert_eq!(lines[1], "N,depth,median_touched,max_touched,merge_work,seconds");
    assert_eq!(lines.len(), 5);
    assert!(lines[2].starts_with("1,1,1,1,0,"), "{}", lines[2]);
    assert!(stderr(&o).contains("slope"));
}

#[test]
fn bench_rejects_zero_size() {
    let o = run(&["bench", "--sizes", "0"], "");
    assert!(!o.status.success());
}
