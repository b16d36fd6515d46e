use harbench::dataset::{load_dataset, DatasetManifest, LoadError, DATA_DIR_ENV};
use harbench::synthetic::SyntheticSpec;

#[test]
fn csv_trials_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SyntheticSpec::default();
    let manifest = spec.write_to(dir.path()).unwrap();
    let ts = load_dataset(&manifest).unwrap();
    let expected = spec.trial_set();
    assert_eq!(ts.trials, expected.trials);
    assert_eq!(ts.class_labels, vec![0, 1, 2]);
    assert_eq!(ts.subject_ids, expected.subject_ids);
    assert!(ts.validate().flags.is_empty());
}

#[test]
fn missing_trial_file_names_the_trial() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = SyntheticSpec::default().write_to(dir.path()).unwrap();
    std::fs::remove_file(dir.path().join("subject2-class1-rep0.csv")).unwrap();
    match load_dataset(&manifest) {
        Err(e @ LoadError::Io { .. }) => assert!(e.to_string().contains("subject2-class1-rep0")),
        other => panic!("expected an i/o error, got {other:?}"),
    }
}

#[test]
fn trial_paths_fall_back_to_data_dir() {
    let data = tempfile::tempdir().unwrap();
    let manifest = SyntheticSpec::default().write_to(data.path()).unwrap();
    let elsewhere = tempfile::tempdir().unwrap();
    let moved = elsewhere.path().join("manifest.json");
    std::fs::copy(&manifest, &moved).unwrap();

    std::env::set_var(DATA_DIR_ENV, data.path());
    let m = DatasetManifest::load(&moved).unwrap();
    let resolved = m.resolve(std::path::Path::new("subject0-class0-rep0.csv"));
    std::env::remove_var(DATA_DIR_ENV);
    assert_eq!(resolved, data.path().join("subject0-class0-rep0.csv"));
}
