use sps_core::validation::oracle_suite;

#[test]
fn every_reference_check_passes() {
    for c in oracle_suite() {
        assert!(c.pass, "{}: {}", c.name, c.detail);
    }
}
