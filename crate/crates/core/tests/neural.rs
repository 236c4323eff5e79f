mod support;

#[test]
fn every_layer_passes_finite_differences() {
    for (name, report) in support::gradchecks::all() {
        assert!(report.checked > 0, "{name}");
        assert!(report.max_relative_error < 1e-4, "{name}: {report:?}");
    }
}
