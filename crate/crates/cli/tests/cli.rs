use std::process::Command;

fn fksep() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fksep"))
}

#[test]
fn run_prints_the_table_and_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "n_paths = 100\n# overridden below\nn_max = 4\n").unwrap();
    let out = fksep()
        .args(["occupation", "--config"])
        .arg(&cfg)
        .args(["--set", "n_max=3", "--seed", "9", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("series,quantity,param,param_value,value,stderr,n\n"));
    assert_eq!(std::fs::read_to_string(dir.path().join("occupation.csv")).unwrap(), stdout);
    let json = std::fs::read_to_string(dir.path().join("occupation.json")).unwrap();
    assert!(json.contains("\"n_max\": 3") && json.contains("\"seed\": 9"));
}

#[test]
fn bad_input_exits_with_status_one() {
    let out = fksep().args(["pz", "--set", "colour=red"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn acceptance_subset_reports_each_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let out = fksep()
        .args(["accept", "--only", "1,3", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(out.status.success(), "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("criterion")).count(), 2);
    assert!(dir.path().join("acceptance.csv").exists());
}
