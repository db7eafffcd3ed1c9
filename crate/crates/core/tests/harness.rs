use fksep_core::harness::{
    acceptance_suite_with, execute, generate_fixture, run_experiment, AcceptanceOptions, Experiment,
    ExperimentConfig, RunRecord,
};
use fksep_core::Error;

fn occupation(out: &std::path::Path) -> ExperimentConfig {
    ExperimentConfig::parse(&format!(
        "experiment = occupation\nn_max = 3\nn_paths = 200\nseed = 5\nout = {}\n",
        out.display()
    ))
    .unwrap()
}

#[test]
fn same_config_gives_identical_csv_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let a = run_experiment(&occupation(&dir.path().join("a"))).unwrap();
    let b = run_experiment(&occupation(&dir.path().join("b"))).unwrap();
    let bytes_a = std::fs::read(&a.csv_path).unwrap();
    assert_eq!(bytes_a, std::fs::read(&b.csv_path).unwrap());
    assert!(!a.rows.is_empty());
}

#[test]
fn different_seed_changes_the_table() {
    let cfg = occupation(std::path::Path::new("unused"));
    let mut other = cfg.clone();
    other.seed = 6;
    assert_ne!(execute(&cfg).unwrap(), execute(&other).unwrap());
}

#[test]
fn reloaded_record_reruns_to_the_same_rows() {
    let dir = tempfile::tempdir().unwrap();
    let rec = run_experiment(&occupation(dir.path())).unwrap();
    let back = RunRecord::load(&rec.json_path).unwrap();
    assert_eq!(back.rows, rec.rows);
    assert_eq!(back.config(), rec.config());
    assert_eq!(back.metadata.provenance.seed, 5);
    assert_eq!(execute(back.config()).unwrap(), rec.rows);
}

#[test]
fn geometry_run_writes_the_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig {
        experiment: Experiment::Geometry,
        out: dir.path().to_path_buf(),
        ..Default::default()
    };
    cfg.set("geometry", "koch").unwrap();
    cfg.set("level", "6").unwrap();
    cfg.set("scale_lo", "0.012").unwrap();
    let rec = run_experiment(&cfg).unwrap();
    assert!(dir.path().join("boundary.csv").exists());
    let alpha = rec.rows.iter().find(|r| r.quantity == "alpha_hat").unwrap();
    assert!((alpha.value - 4f64.ln() / 3f64.ln()).abs() < 0.1, "{}", alpha.value);
}

#[test]
fn invalid_configs_are_rejected_before_running() {
    let err = ExperimentConfig::parse("experiment = teleport\n").unwrap_err();
    assert!(err.to_string().contains("decay"), "{err}");

    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::parse(&format!(
        "experiment = decay\na_list = 4, 8\nout = {}\n",
        dir.path().display()
    ))
    .unwrap();
    assert!(matches!(run_experiment(&cfg), Err(Error::Validation(_))));
    assert!(std::fs::read_dir(dir.path()).unwrap().next().is_none());
}

#[test]
fn corrupted_fixture_fails_only_reproducibility() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("rng.csv");
    std::fs::write(&bad, generate_fixture().replacen(",0,0.", ",0,0.9", 1)).unwrap();
    let report = acceptance_suite_with(&AcceptanceOptions {
        fixture: bad,
        only: Some(vec![1, 4, 11]),
        ..Default::default()
    });
    assert_eq!(report.items.len(), 3);
    assert_eq!(report.failed_ids(), vec![11]);
    let item = report.items.iter().find(|i| i.id == 11).unwrap();
    assert!(item.executed);
    assert_eq!(item.checks.iter().filter(|c| !c.pass).count(), 1);
}

#[test]
fn missing_fixture_is_reported_not_panicked() {
    let report = acceptance_suite_with(&AcceptanceOptions {
        fixture: "/nonexistent/rng.csv".into(),
        only: Some(vec![11]),
        ..Default::default()
    });
    let item = &report.items[0];
    assert!(!item.pass);
    assert!(item.error.as_deref().unwrap_or("").contains("unreadable"));
}
