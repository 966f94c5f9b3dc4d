mod common;

#[test]
fn lattice_random_matrices() {
    let fails = common::lattice_suite(300, 11);
    assert!(fails.is_empty(), "{}", fails.join("\n"));
}

#[test]
fn hnf_oracle_sanity() {
    assert_eq!(common::hnf(&[vec![2, 4], vec![3, 5]]), vec![vec![1, 1], vec![0, 2]]);
    assert_eq!(common::hnf(&[vec![0, 0, 3], vec![0, 0, 1]]), vec![vec![0, 0, 1]]);
    assert_eq!(common::hnf(&[vec![4, 6]]), vec![vec![4, 6]]);
}

#[test]
fn valuation_axioms() {
    let (fails, checked) = common::axioms_suite(500, 12);
    assert!(fails.is_empty(), "{}", fails.join("\n"));
    assert!(checked > 300, "only {checked} certified");
}

#[test]
fn hahn_against_truncated_oracle() {
    let fails = common::hahn_suite(300, 13, 20);
    assert!(fails.is_empty(), "{}", fails.join("\n"));
}

#[test]
fn synthetic_specs_recompose() {
    // a failure may only be an honest inconclusive answer, never a wrong one
    let fails = common::recompose_suite(1000, 200, 10);
    let wrong: Vec<&String> = fails.iter().filter(|f| !f.contains(": inconclusive at ")).collect();
    assert!(wrong.is_empty(), "{}", wrong.iter().map(|s| s.as_str()).collect::<Vec<_>>().join("\n\n"));
    assert!(fails.len() <= 5, "{} of 200 inconclusive", fails.len());
}
