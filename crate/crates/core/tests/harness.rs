use gplab::harness::{run_experiment, simulate_states, summary_path, write_outputs, Experiment, ExperimentConfig};
use gplab::MixingSpec;

#[test]
fn outputs_land_next_to_each_other() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::new(Experiment::RateSweep, 1600, 6, 0.7, MixingSpec::uniform(0.0, 3.0));
    let out = run_experiment(&cfg).unwrap();
    let csv_path = dir.path().join("nested/rate.csv");
    let written = write_outputs(&csv_path, &out).unwrap();
    assert_eq!(written, dir.path().join("nested/rate.summary.json"));
    assert_eq!(written, summary_path(&csv_path));

    let mut rdr = csv::Reader::from_path(&csv_path).unwrap();
    let header = rdr.headers().unwrap().clone();
    for col in ["replicate_id", "n", "k_n", "alpha_hat", "tv", "tv_freq"] {
        assert!(header.iter().any(|h| h == col), "missing column {col}");
    }
    // Four levels per replicate.
    assert_eq!(rdr.records().count(), 6 * 4);

    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&written).unwrap()).unwrap();
    assert_eq!(summary["replicates"], 6);
    assert_eq!(summary["mixing"], "uniform:0,3");
}

#[test]
fn simulated_states_do_not_depend_on_thread_count() {
    let spec = MixingSpec::equal_atoms(&[0.0, 3.0]);
    let one = simulate_states(0.5, &spec, 2000, 8, 77, 1).unwrap();
    let many = simulate_states(0.5, &spec, 2000, 8, 77, 3).unwrap();
    for (a, b) in one.iter().zip(&many) {
        assert_eq!(a.block_sizes(), b.block_sizes());
    }
    assert!(simulate_states(0.5, &MixingSpec::dirac(-0.6), 10, 1, 1, 1).is_err());
}
