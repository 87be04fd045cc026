use std::collections::BTreeMap;

use transgress_core::harness::{run_all, RunConfig};

/// Per-check verdicts of the whole suite at one finite-difference step.
fn verdicts(step: f64) -> BTreeMap<(String, String), bool> {
    let config = RunConfig { fd_step: Some(step), ..RunConfig::default() };
    run_all(&config)
        .unwrap()
        .into_iter()
        .flat_map(|r| r.checks.into_iter().map(move |c| ((r.scenario.clone(), c.check_id), c.pass)))
        .collect()
}

#[test]
fn verdicts_are_stable_across_finite_difference_steps() {
    let reference = verdicts(1e-5);
    assert!(reference.values().all(|&p| p), "failing at the default step: {:?}", reference.iter().filter(|(_, p)| !**p).collect::<Vec<_>>());
    for step in [1e-4, 1e-6] {
        let other = verdicts(step);
        assert_eq!(other.keys().collect::<Vec<_>>(), reference.keys().collect::<Vec<_>>(), "h = {step}");
        let flipped: Vec<_> = other.iter().filter(|(k, p)| reference[*k] != **p).map(|(k, _)| k).collect();
        assert!(flipped.is_empty(), "h = {step}: verdicts changed for {flipped:?}");
    }
}
