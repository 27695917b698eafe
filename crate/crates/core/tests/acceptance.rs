use bfflab_core::selftest::{run_criterion, CRITERIA, DEFAULT_SEED};

#[test]
fn acceptance() {
    let mut failed = Vec::new();
    for &(id, _, _) in CRITERIA.iter() {
        let outcome = run_criterion(id, DEFAULT_SEED).expect("known criterion");
        println!("{outcome}");
        for e in &outcome.examples {
            println!("    {e}");
        }
        if !outcome.passed() {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "criteria failed: {failed:?}");
}
