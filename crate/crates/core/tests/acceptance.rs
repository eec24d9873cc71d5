//! Runs the full acceptance suite and prints one line per check.

use cantor_rgg::verify;

#[test]
fn acceptance() {
    let reports = verify::run_all(0, |r| println!("{}", r.line())).expect("suite starts");
    let failed: Vec<_> = reports.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    println!("{} of {} checks passed", reports.len() - failed.len(), reports.len());
    assert!(failed.is_empty(), "failed checks: {failed:?}");
}
