//! Runs the quick examples as part of the test suite.

mod forward_trace {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/forward_trace.rs"));
}

#[test]
fn forward_trace_example_runs() {
    let rows = forward_trace::run_example().unwrap();
    assert_eq!(rows.len(), 5);
    for r in &rows {
        assert!(r.action < 3);
        assert!(r.value.is_finite());
        assert!((r.policy.iter().sum::<f64>() - 1.0).abs() < 1e-5);
        assert!(r.policy_mask_mean > 0.0 && r.policy_mask_mean < 1.0);
        assert!(r.value_mask_mean > 0.0 && r.value_mask_mean < 1.0);
    }
}
