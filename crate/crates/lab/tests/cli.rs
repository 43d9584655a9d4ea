use std::process::Command;

fn dobc(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_dobc")).args(args).output().unwrap();
    let text = |b: Vec<u8>| String::from_utf8(b).unwrap();
    (out.status.code().unwrap(), text(out.stdout), text(out.stderr))
}

#[test]
fn capacity_prints_header_and_row() {
    let (code, out, _) = dobc(&["capacity", "--check"]);
    assert_eq!(code, 0);
    let mut lines = out.lines();
    assert!(lines.next().unwrap().starts_with("layers,widths,decay,unit_capacities"));
    let row = lines.next().unwrap();
    assert!(row.contains("13.5"), "{row}");
}

#[test]
fn bad_flags_exit_2_and_name_the_flag() {
    let (code, _, err) = dobc(&["capacity", "--widths", "1,2"]);
    assert_eq!(code, 2);
    assert!(err.contains("--widths"), "{err}");
    assert_eq!(dobc(&["capacity", "--widths", "1,x,3"]).0, 2);
    assert_eq!(dobc(&["no-such-command"]).0, 2);
}

#[test]
fn bad_scenarios_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let typo = dir.path().join("typo.toml");
    std::fs::write(&typo, "[ring]\nnodez = 3\n").unwrap();
    assert_eq!(dobc(&["kstore", typo.to_str().unwrap()]).0, 2);
    let bad_fn = dir.path().join("fn.toml");
    std::fs::write(&bad_fn, "[workload]\nmerge_fn = \"nope\"\n").unwrap();
    assert_eq!(dobc(&["kstore", bad_fn.to_str().unwrap()]).0, 2);
    let missing = dir.path().join("missing.toml");
    assert_eq!(dobc(&["kstore", missing.to_str().unwrap()]).0, 2);
}
