mod common;

use std::time::Instant;

#[test]
fn formulas_match_dense_oracles() {
    let start = Instant::now();
    let worst = common::run_formula_oracles(1000, 20).unwrap();
    assert!(worst <= 1e-9);
    assert!(start.elapsed().as_secs() < 10);
}

#[test]
fn oracle_sanity() {
    let a = [1.0, 0.0, 2.0];
    assert!((common::dense_cosine(&a, &a) - 1.0).abs() < 1e-12);
    assert_eq!(common::dense_cosine(&a, &[0.0; 3]), 0.0);
}
