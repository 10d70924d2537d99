use qevote_core::analysis::{run_bound_suite, SuiteOptions};

#[test]
fn default_suite_holds() {
    let checks = run_bound_suite(&SuiteOptions::default()).unwrap();
    for c in &checks {
        println!("{:<40} {:<5} {}", c.id, c.holds, c.computed);
    }
    let failed: Vec<_> = checks.iter().filter(|c| !c.holds).map(|c| &c.id).collect();
    assert!(failed.is_empty(), "failed: {failed:?}");
}
