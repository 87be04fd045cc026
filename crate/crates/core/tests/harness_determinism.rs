use transgress_core::harness::{run_named, scenario_names, RunConfig};

#[test]
fn identical_config_gives_byte_identical_reports_on_one_thread() {
    rayon::ThreadPoolBuilder::new().num_threads(1).build_global().unwrap();
    let config = RunConfig::default();
    // the two n = 3 cube scenarios take most of the suite's time and share their code path with the others
    for name in scenario_names().into_iter().filter(|n| !n.ends_with("_n3")) {
        let first = run_named(name, &config).unwrap().without_timestamp().to_json();
        let second = run_named(name, &config).unwrap().without_timestamp().to_json();
        assert_eq!(first, second, "{name}");
    }
}
